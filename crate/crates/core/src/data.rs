//! Dataset representation, column standardization and CSV ingestion.
//!
//! Every design matrix handed to the solver is standardized so that each
//! column has mean zero and `Σᵢ xᵢⱼ² = n`. The per-column means and scales
//! are retained so coefficients can be mapped back to the raw scale.

use std::path::Path;

use ndarray::{Array2, ArrayView2, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{MfdrError, Result};
use crate::family::Family;

/// Relative scale below which a column is treated as constant.
const CONSTANT_TOL: f64 = 1e-12;

/// Outcome of a regression problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ResponseKind {
    Continuous(Vec<f64>),
    /// Values are exactly 0.0 or 1.0.
    Binary(Vec<f64>),
    Survival { time: Vec<f64>, status: Vec<bool> },
}

impl ResponseKind {
    pub fn continuous(y: Vec<f64>) -> Result<Self> {
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(MfdrError::InvalidResponse(format!("non-finite value at {i}")));
        }
        Ok(ResponseKind::Continuous(y))
    }

    pub fn binary(y: Vec<f64>) -> Result<Self> {
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(MfdrError::InvalidResponse(format!(
                "binary response must be 0 or 1, found {} at {i}",
                y[i]
            )));
        }
        Ok(ResponseKind::Binary(y))
    }

    pub fn survival(time: Vec<f64>, status: Vec<bool>) -> Result<Self> {
        if time.len() != status.len() {
            return Err(MfdrError::DimensionMismatch(format!(
                "{} survival times but {} status flags",
                time.len(),
                status.len()
            )));
        }
        if let Some(i) = time.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(MfdrError::InvalidResponse(format!(
                "survival time must be positive, found {} at {i}",
                time[i]
            )));
        }
        Ok(ResponseKind::Survival { time, status })
    }

    pub fn len(&self) -> usize {
        match self {
            ResponseKind::Continuous(y) | ResponseKind::Binary(y) => y.len(),
            ResponseKind::Survival { time, .. } => time.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The family this response is naturally modelled with.
    pub fn family(&self) -> Family {
        match self {
            ResponseKind::Continuous(_) => Family::Linear,
            ResponseKind::Binary(_) => Family::Logistic,
            ResponseKind::Survival { .. } => Family::Cox,
        }
    }

    pub fn subset(&self, rows: &[usize]) -> ResponseKind {
        let pick = |v: &[f64]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
        match self {
            ResponseKind::Continuous(y) => ResponseKind::Continuous(pick(y)),
            ResponseKind::Binary(y) => ResponseKind::Binary(pick(y)),
            ResponseKind::Survival { time, status } => ResponseKind::Survival {
                time: pick(time),
                status: rows.iter().map(|&i| status[i]).collect(),
            },
        }
    }
}

/// Column-standardized design matrix.
///
/// `x` is stored in column-major order so that [`StandardizedDesign::col`]
/// is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedDesign {
    x: Array2<f64>,
    pub col_means: Vec<f64>,
    pub col_scales: Vec<f64>,
    pub names: Vec<String>,
    /// 1.0 for penalized features, 0.0 for unpenalized adjusters.
    pub penalty_factor: Vec<f64>,
}

impl StandardizedDesign {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        self.x
            .column(j)
            .to_slice()
            .expect("standardized design is stored column-major")
    }

    #[inline]
    pub fn is_penalized(&self, j: usize) -> bool {
        self.penalty_factor[j] != 0.0
    }

    pub fn penalized(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.p()).filter(move |&j| self.is_penalized(j))
    }

    pub fn unpenalized(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.p()).filter(move |&j| !self.is_penalized(j))
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(MfdrError::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.names = names;
        Ok(self)
    }

    /// Linear predictor `Xβ` on the standardized scale.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        let mut eta = vec![0.0; self.n()];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (e, &xij) in eta.iter_mut().zip(self.col(j)) {
                    *e += xij * b;
                }
            }
        }
        eta
    }
}

/// Standardizes each column to mean zero and `Σx² = n` (population scaling).
pub fn standardize(raw: ArrayView2<f64>, penalty_factor: &[f64]) -> Result<StandardizedDesign> {
    let (n, p) = raw.dim();
    if n < 2 {
        return Err(MfdrError::TooFewObservations { needed: 2, got: n });
    }
    if penalty_factor.len() != p {
        return Err(MfdrError::DimensionMismatch(format!(
            "{} penalty factors for {p} columns",
            penalty_factor.len()
        )));
    }
    if let Some(j) = penalty_factor.iter().position(|&f| f != 0.0 && f != 1.0) {
        return Err(MfdrError::DimensionMismatch(format!(
            "penalty factor for column {j} must be 0 or 1"
        )));
    }
    let mut x = Array2::<f64>::zeros((n, p).f());
    let mut col_means = Vec::with_capacity(p);
    let mut col_scales = Vec::with_capacity(p);
    for j in 0..p {
        let src = raw.column(j);
        if let Some(i) = src.iter().position(|v| !v.is_finite()) {
            return Err(MfdrError::NonNumericCell {
                row: i,
                col: j,
                value: src[i].to_string(),
            });
        }
        let mean = src.sum() / n as f64;
        let ss: f64 = src.iter().map(|v| (v - mean).powi(2)).sum();
        let scale = (ss / n as f64).sqrt();
        if !(scale > CONSTANT_TOL * mean.abs().max(1.0)) {
            return Err(MfdrError::ConstantColumn(j));
        }
        for (dst, &v) in x.column_mut(j).iter_mut().zip(src.iter()) {
            *dst = (v - mean) / scale;
        }
        col_means.push(mean);
        col_scales.push(scale);
    }
    Ok(StandardizedDesign {
        x,
        col_means,
        col_scales,
        names: (1..=p).map(|j| format!("x{j}")).collect(),
        penalty_factor: penalty_factor.to_vec(),
    })
}

/// Maps standardized-scale coefficients back to the raw scale of the design.
pub fn destandardize(
    beta_std: &[f64],
    intercept_std: f64,
    design: &StandardizedDesign,
) -> Result<(Vec<f64>, f64)> {
    if beta_std.len() != design.p() {
        return Err(MfdrError::DimensionMismatch(format!(
            "{} coefficients for {} columns",
            beta_std.len(),
            design.p()
        )));
    }
    let beta_raw: Vec<f64> = beta_std
        .iter()
        .zip(&design.col_scales)
        .map(|(b, s)| b / s)
        .collect();
    let shift: f64 = beta_raw.iter().zip(&design.col_means).map(|(b, m)| b * m).sum();
    Ok((beta_raw, intercept_std - shift))
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub design: StandardizedDesign,
    pub response: ResponseKind,
}

impl Dataset {
    pub fn new(design: StandardizedDesign, response: ResponseKind) -> Result<Self> {
        if design.n() != response.len() {
            return Err(MfdrError::DimensionMismatch(format!(
                "design has {} rows but response has {} values",
                design.n(),
                response.len()
            )));
        }
        Ok(Dataset { design, response })
    }

    /// Standardizes `raw` (all columns penalized) and pairs it with `response`.
    pub fn from_raw(raw: ArrayView2<f64>, response: ResponseKind) -> Result<Self> {
        let pf = vec![1.0; raw.ncols()];
        Dataset::new(standardize(raw, &pf)?, response)
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    /// Rows `rows` of this dataset, re-standardized. The returned design's
    /// means and scales are relative to this dataset's standardized columns.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let p = self.p();
        let mut raw = Array2::<f64>::zeros((rows.len(), p).f());
        for j in 0..p {
            let src = self.design.col(j);
            for (dst, &i) in raw.column_mut(j).iter_mut().zip(rows) {
                *dst = src[i];
            }
        }
        let design = standardize(raw.view(), &self.design.penalty_factor)?
            .with_names(self.design.names.clone())?;
        Dataset::new(design, self.response.subset(rows))
    }
}

/// How the response is laid out in a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseSpec {
    Column(String),
    Survival { time: String, status: String },
}

/// Options for [`load_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSpec {
    pub response: ResponseSpec,
    /// Feature columns entered without penalty (adjusters).
    pub unpenalized: Vec<String>,
}

impl CsvSpec {
    pub fn new(response: ResponseSpec) -> Self {
        CsvSpec { response, unpenalized: Vec::new() }
    }
}

/// Reads a comma-delimited file with a header row. Every column that is not
/// part of the response becomes a feature. Rows and columns in errors are
/// 1-based line and field numbers of the file.
pub fn load_csv(path: impl AsRef<Path>, spec: &CsvSpec, family: Family) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| MfdrError::Io(e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| MfdrError::ParseError { row: 1, col: 0, msg: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MfdrError::MissingColumn(name.to_string()))
    };
    let response_cols: Vec<usize> = match &spec.response {
        ResponseSpec::Column(c) => vec![find(c)?],
        ResponseSpec::Survival { time, status } => vec![find(time)?, find(status)?],
    };
    for u in &spec.unpenalized {
        find(u)?;
    }
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|c| !response_cols.contains(c)).collect();

    let mut cells: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 2;
        let record = record.map_err(|e| MfdrError::ParseError { row, col: 0, msg: e.to_string() })?;
        if record.len() != headers.len() {
            return Err(MfdrError::ParseError {
                row,
                col: record.len(),
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let parsed = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let t = cell.trim();
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| MfdrError::NonNumericCell { row, col: c + 1, value: t.to_string() })
            })
            .collect::<Result<Vec<f64>>>()?;
        cells.push(parsed);
    }
    let n = cells.len();
    let column = |c: usize| cells.iter().map(|r| r[c]).collect::<Vec<f64>>();

    let response = match (&spec.response, family) {
        (ResponseSpec::Column(_), Family::Linear) => ResponseKind::continuous(column(response_cols[0]))?,
        (ResponseSpec::Column(_), Family::Logistic) => ResponseKind::binary(column(response_cols[0]))?,
        (ResponseSpec::Survival { .. }, Family::Cox) => {
            let status = column(response_cols[1])
                .into_iter()
                .enumerate()
                .map(|(i, s)| match s {
                    v if v == 0.0 => Ok(false),
                    v if v == 1.0 => Ok(true),
                    v => Err(MfdrError::InvalidResponse(format!("status must be 0 or 1, found {v} on row {}", i + 2))),
                })
                .collect::<Result<Vec<bool>>>()?;
            ResponseKind::survival(column(response_cols[0]), status)?
        }
        (_, f) => return Err(MfdrError::FamilyMismatch { family: f.name() }),
    };

    let p = feature_cols.len();
    let mut raw = Array2::<f64>::zeros((n, p).f());
    for (k, &c) in feature_cols.iter().enumerate() {
        for (dst, row) in raw.column_mut(k).iter_mut().zip(&cells) {
            *dst = row[c];
        }
    }
    let names: Vec<String> = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let pf: Vec<f64> = names
        .iter()
        .map(|nm| if spec.unpenalized.contains(nm) { 0.0 } else { 1.0 })
        .collect();
    let design = standardize(raw.view(), &pf)?.with_names(names)?;
    Dataset::new(design, response)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn random_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 10.0 - 3.0)
    }

    #[test]
    fn standardized_columns_have_zero_mean_and_unit_ms() {
        let raw = random_matrix(5, 3, 1);
        let d = standardize(raw.view(), &[1.0; 3]).unwrap();
        for j in 0..3 {
            let mut sum = 0.0;
            let mut ss = 0.0;
            for i in 0..5 {
                sum += d.x()[[i, j]];
                ss += d.x()[[i, j]] * d.x()[[i, j]];
            }
            assert!(sum.abs() < 1e-12);
            assert!((ss - 5.0).abs() < 5.0 * 1e-8);
        }
    }

    #[test]
    fn already_standard_column_is_fixed_point() {
        let raw = array![[1.0], [-1.0], [1.0], [-1.0]];
        let d = standardize(raw.view(), &[1.0]).unwrap();
        assert_eq!(d.col_means[0], 0.0);
        assert_eq!(d.col_scales[0], 1.0);
        assert_eq!(d.col(0), &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn constant_column_rejected() {
        let raw = array![[1.0, 2.0], [1.0, 3.0], [1.0, 5.0]];
        assert_eq!(standardize(raw.view(), &[1.0, 1.0]), Err(MfdrError::ConstantColumn(0)));
    }

    #[test]
    fn single_row_rejected() {
        let raw = array![[1.0, 2.0]];
        assert!(matches!(
            standardize(raw.view(), &[1.0, 1.0]),
            Err(MfdrError::TooFewObservations { .. })
        ));
    }

    #[test]
    fn destandardize_zero_beta_keeps_intercept() {
        let d = standardize(random_matrix(6, 2, 3).view(), &[1.0, 1.0]).unwrap();
        let (b, a) = destandardize(&[0.0, 0.0], 1.5, &d).unwrap();
        assert_eq!(b, vec![0.0, 0.0]);
        assert_eq!(a, 1.5);
        assert!(destandardize(&[0.0], 1.5, &d).is_err());
    }

    #[test]
    fn destandardize_identity_design() {
        let raw = array![[1.0, 2.0], [-1.0, -2.0]];
        let d = standardize(raw.view(), &[1.0, 1.0]).unwrap();
        // second column has scale 2
        let (b, a) = destandardize(&[0.5, 0.5], 0.2, &d).unwrap();
        assert_eq!(b, vec![0.5, 0.25]);
        assert_eq!(a, 0.2);
    }

    #[test]
    fn raw_and_standardized_predictions_agree() {
        let raw = random_matrix(10, 4, 7);
        let d = standardize(raw.view(), &[1.0; 4]).unwrap();
        let beta = [0.3, -1.2, 0.0, 2.5];
        let a_std = 0.7;
        let (b_raw, a_raw) = destandardize(&beta, a_std, &d).unwrap();
        let eta_std = d.linear_predictor(&beta);
        for i in 0..10 {
            let eta_raw: f64 = a_raw + (0..4).map(|j| raw[[i, j]] * b_raw[j]).sum::<f64>();
            assert!((eta_raw - (a_std + eta_std[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn survival_and_binary_validation() {
        assert!(ResponseKind::survival(vec![1.0, 0.0], vec![true, false]).is_err());
        assert!(ResponseKind::survival(vec![1.0], vec![true, false]).is_err());
        assert!(ResponseKind::binary(vec![0.0, 1.0, 0.5]).is_err());
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_small_linear_csv() {
        let f = write_csv("y,x1,x2\n1.0,2.0,3.0\n2.0,1.0,5.0\n0.5,4.0,4.0\n");
        let ds = load_csv(f.path(), &CsvSpec::new(ResponseSpec::Column("y".into())), Family::Linear).unwrap();
        assert_eq!((ds.n(), ds.p()), (3, 2));
        assert_eq!(ds.design.names, vec!["x1", "x2"]);
    }

    #[test]
    fn load_csv_rejects_nonpositive_time() {
        let f = write_csv("time,status,x1\n1.0,1,2.0\n0.0,0,1.0\n2.0,1,3.0\n");
        let spec = CsvSpec::new(ResponseSpec::Survival { time: "time".into(), status: "status".into() });
        assert!(matches!(load_csv(f.path(), &spec, Family::Cox), Err(MfdrError::InvalidResponse(_))));
    }

    #[test]
    fn load_csv_reports_na_coordinates() {
        let f = write_csv("y,x1,x2\n1.0,2.0,3.0\n2.0,NA,5.0\n0.5,4.0,4.0\n");
        let err = load_csv(f.path(), &CsvSpec::new(ResponseSpec::Column("y".into())), Family::Linear).unwrap_err();
        assert_eq!(err, MfdrError::NonNumericCell { row: 3, col: 2, value: "NA".into() });
    }

    #[test]
    fn load_csv_missing_column_and_unpenalized() {
        let f = write_csv("y,x1,x2\n1.0,2.0,3.0\n2.0,1.0,5.0\n0.5,4.0,4.0\n");
        let spec = CsvSpec::new(ResponseSpec::Column("z".into()));
        assert_eq!(load_csv(f.path(), &spec, Family::Linear).unwrap_err(), MfdrError::MissingColumn("z".into()));
        let spec = CsvSpec { response: ResponseSpec::Column("y".into()), unpenalized: vec!["x2".into()] };
        let ds = load_csv(f.path(), &spec, Family::Linear).unwrap();
        assert_eq!(ds.design.penalty_factor, vec![1.0, 0.0]);
    }

    proptest::proptest! {
        #[test]
        fn standardize_is_idempotent(seed in 0u64..1000, n in 3usize..20, p in 1usize..5) {
            let raw = random_matrix(n, p, seed);
            let once = standardize(raw.view(), &vec![1.0; p]).unwrap();
            let twice = standardize(once.x().view(), &vec![1.0; p]).unwrap();
            for j in 0..p {
                proptest::prop_assert!(twice.col_means[j].abs() < 1e-12);
                proptest::prop_assert!((twice.col_scales[j] - 1.0).abs() < 1e-12);
                for (a, b) in once.col(j).iter().zip(twice.col(j)) {
                    proptest::prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn destandardize_preserves_predictions(seed in 0u64..1000) {
            let raw = random_matrix(8, 3, seed);
            let d = standardize(raw.view(), &[1.0; 3]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let beta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let (b_raw, a_raw) = destandardize(&beta, 0.3, &d).unwrap();
            let eta = d.linear_predictor(&beta);
            for i in 0..8 {
                let e: f64 = a_raw + (0..3).map(|j| raw[[i, j]] * b_raw[j]).sum::<f64>();
                proptest::prop_assert!((e - 0.3 - eta[i]).abs() < 1e-10);
            }
        }
    }
}
