//! Buffered outputs. Nothing touches the filesystem until every output of a
//! command has been produced, and files are written through temporaries in
//! the target directory so a failure never leaves a partial file behind.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

#[derive(Debug, Default)]
pub struct Outputs {
    items: Vec<(Option<PathBuf>, Vec<u8>)>,
}

impl Outputs {
    /// Queues `bytes` for `path`, or for stdout when `path` is `None`.
    pub fn push(&mut self, path: Option<&Path>, bytes: Vec<u8>) {
        self.items.push((path.map(Path::to_path_buf), bytes));
    }

    /// Writes every file, then stdout. Files already moved into place are
    /// removed again if a later one fails.
    pub fn commit(self) -> io::Result<()> {
        let mut staged = Vec::new();
        let mut stdout = Vec::new();
        for (path, bytes) in self.items {
            match path {
                Some(p) => staged.push((stage(&p, &bytes)?, p)),
                None => stdout.push(bytes),
            }
        }
        let mut done: Vec<PathBuf> = Vec::new();
        for (tmp, target) in staged {
            if let Err(e) = tmp.persist(&target) {
                for p in &done {
                    let _ = fs::remove_file(p);
                }
                return Err(e.error);
            }
            done.push(target);
        }
        let mut out = io::stdout().lock();
        for bytes in stdout {
            out.write_all(&bytes)?;
        }
        out.flush()
    }
}

fn stage(target: &Path, bytes: &[u8]) -> io::Result<NamedTempFile> {
    let dir = match target.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    Ok(tmp)
}
