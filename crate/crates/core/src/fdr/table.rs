use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{MfdrError, Result};

/// Which estimator produced an mfdr value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Mixture,
    Density,
    Univariate,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mixture => "mixture",
            Estimator::Density => "density",
            Estimator::Univariate => "univariate",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrRecord {
    pub name: String,
    /// Column index in the design.
    pub feature: usize,
    pub z: f64,
    pub mfdr: f64,
    pub active: bool,
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrTable {
    pub records: Vec<FdrRecord>,
    pub pi0_hat: f64,
    pub lambda: Option<f64>,
}

impl FdrTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, feature: usize) -> Option<&FdrRecord> {
        self.records.iter().find(|r| r.feature == feature)
    }

    /// Records ordered by increasing mfdr, ties by feature index.
    pub fn sorted(&self) -> Vec<&FdrRecord> {
        let mut v: Vec<&FdrRecord> = self.records.iter().collect();
        v.sort_by(|a, b| a.mfdr.total_cmp(&b.mfdr).then(a.feature.cmp(&b.feature)));
        v
    }

    /// Features whose mfdr is below `threshold`.
    pub fn below(&self, threshold: f64) -> Vec<usize> {
        self.records.iter().filter(|r| r.mfdr < threshold).map(|r| r.feature).collect()
    }

    /// Active features.
    pub fn active(&self) -> Vec<usize> {
        self.records.iter().filter(|r| r.active).map(|r| r.feature).collect()
    }

    /// Writes `name,z,mfdr,active,estimator` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_records_csv(self.records.iter(), out)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| MfdrError::Io(e.to_string()))
    }
}

fn write_records_csv<'a, W: Write>(records: impl Iterator<Item = &'a FdrRecord>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| MfdrError::Io(e.to_string());
    w.write_record(["name", "z", "mfdr", "active", "estimator"]).map_err(io)?;
    for r in records {
        w.write_record([
            r.name.clone(),
            r.z.to_string(),
            r.mfdr.to_string(),
            r.active.to_string(),
            r.estimator.name().to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean mfdr over `selected`: the model-level false discovery estimate.
pub fn aggregate_fdr(table: &FdrTable, selected: &[usize]) -> Result<f64> {
    if selected.is_empty() {
        return Err(MfdrError::EmptySelection);
    }
    let mut total = 0.0;
    for &j in selected {
        let rec = table.get(j).ok_or_else(|| MfdrError::UnknownFeature(j.to_string()))?;
        total += rec.mfdr;
    }
    Ok(total / selected.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(values: &[f64]) -> FdrTable {
        FdrTable {
            records: values
                .iter()
                .enumerate()
                .map(|(j, &m)| FdrRecord {
                    name: format!("V{j}"),
                    feature: j,
                    z: 0.0,
                    mfdr: m,
                    active: m < 0.5,
                    estimator: Estimator::Mixture,
                })
                .collect(),
            pi0_hat: 0.9,
            lambda: Some(0.1),
        }
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_fdr(&table(&[0.31]), &[0]).unwrap(), 0.31);
        assert!((aggregate_fdr(&table(&[0.01, 0.39]), &[0, 1]).unwrap() - 0.20).abs() < 1e-15);
        assert_eq!(aggregate_fdr(&table(&[0.1]), &[]), Err(MfdrError::EmptySelection));
        assert!(matches!(aggregate_fdr(&table(&[0.1]), &[3]), Err(MfdrError::UnknownFeature(_))));
    }

    #[test]
    fn csv_quotes_awkward_names() {
        let mut t = table(&[0.25]);
        t.records[0].name = "gene, \"a\"".into();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "name,z,mfdr,active,estimator\n\"gene, \"\"a\"\"\",0,0.25,true,mixture\n");
    }

    #[test]
    fn json_round_trip() {
        let t = table(&[0.2, 0.9]);
        let back: FdrTable = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn sorted_and_thresholds() {
        let t = table(&[0.5, 0.05, 0.2]);
        let order: Vec<usize> = t.sorted().iter().map(|r| r.feature).collect();
        assert_eq!(order, vec![1, 2, 0]);
        assert_eq!(t.below(0.1), vec![1]);
    }
}
