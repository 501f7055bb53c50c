//! Python bindings: datasets, lasso paths, cross-validation, mfdr tables and
//! the simulation studies.

use ndarray::Array2;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mfdr::sim::{ScenarioName, ScenarioSpec, StudyConfig};
use mfdr::solver::default_grid;
use mfdr::{
    CsvSpec, CvResult, Dataset, FdrMethod, FdrTable, Family, LambdaGrid, PathFit, ResponseKind, ResponseSpec,
    SolverOptions,
};

create_exception!(pymfdr, MfdrError, PyValueError);

fn err(e: mfdr::MfdrError) -> PyErr {
    MfdrError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

/// Rows of `x` plus a response, standardized with the listed columns unpenalized.
fn build_dataset(
    x: Vec<Vec<f64>>,
    family: Family,
    y: Option<Vec<f64>>,
    survival: Option<(Vec<f64>, Vec<bool>)>,
    names: Option<Vec<String>>,
    unpenalized: &[usize],
) -> mfdr::Result<Dataset> {
    use mfdr::MfdrError::{DimensionMismatch, InvalidResponse};
    let n = x.len();
    let p = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != p) {
        return Err(DimensionMismatch("rows of x differ in length".into()));
    }
    let raw = Array2::from_shape_vec((n, p), x.into_iter().flatten().collect())
        .map_err(|e| DimensionMismatch(e.to_string()))?;
    let mut pf = vec![1.0; p];
    for &j in unpenalized {
        *pf.get_mut(j).ok_or_else(|| DimensionMismatch(format!("unpenalized column {j} out of range")))? = 0.0;
    }
    let response = match (family, y, survival) {
        (Family::Linear, Some(y), None) => ResponseKind::continuous(y)?,
        (Family::Logistic, Some(y), None) => ResponseKind::binary(y)?,
        (Family::Cox, None, Some((t, s))) => ResponseKind::survival(t, s)?,
        (Family::Cox, ..) => return Err(InvalidResponse("cox needs time and status".into())),
        _ => return Err(InvalidResponse(format!("{} needs y", family.name()))),
    };
    let mut design = mfdr::standardize(raw.view(), &pf)?;
    if let Some(names) = names {
        design = design.with_names(names)?;
    }
    Dataset::new(design, response)
}

#[pyclass(name = "Dataset", module = "pymfdr", frozen)]
pub struct PyDataset {
    inner: Dataset,
    family: Family,
}

#[pymethods]
impl PyDataset {
    /// `x` is a list of rows. Linear and logistic take `y`; cox takes
    /// `time` and `status`.
    #[new]
    #[pyo3(signature = (x, family, y=None, time=None, status=None, names=None, unpenalized=Vec::new()))]
    fn new(
        x: Vec<Vec<f64>>,
        family: &str,
        y: Option<Vec<f64>>,
        time: Option<Vec<f64>>,
        status: Option<Vec<bool>>,
        names: Option<Vec<String>>,
        unpenalized: Vec<usize>,
    ) -> PyResult<Self> {
        let family: Family = parse(family)?;
        let survival = match (time, status) {
            (Some(t), Some(s)) => Some((t, s)),
            (None, None) => None,
            _ => return Err(PyValueError::new_err("time and status go together")),
        };
        let inner = build_dataset(x, family, y, survival, names, &unpenalized).map_err(err)?;
        Ok(PyDataset { inner, family })
    }

    #[staticmethod]
    #[pyo3(signature = (path, family, response=None, time=None, status=None, unpenalized=Vec::new()))]
    fn from_csv(
        path: &str,
        family: &str,
        response: Option<String>,
        time: Option<String>,
        status: Option<String>,
        unpenalized: Vec<String>,
    ) -> PyResult<Self> {
        let family: Family = parse(family)?;
        let response = match (response, time, status) {
            (Some(r), None, None) => ResponseSpec::Column(r),
            (None, Some(time), Some(status)) => ResponseSpec::Survival { time, status },
            _ => return Err(PyValueError::new_err("give either response, or time and status")),
        };
        let inner = mfdr::load_csv(path, &CsvSpec { response, unpenalized }, family).map_err(err)?;
        Ok(PyDataset { inner, family })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.design.names.clone()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.family.name()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, p={}, family={})", self.n(), self.p(), self.family.name())
    }
}

#[pyclass(name = "PathFit", module = "pymfdr", frozen)]
pub struct PyPathFit {
    inner: PathFit,
}

#[pymethods]
impl PyPathFit {
    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.grid.values().to_vec()
    }

    /// Standardized-scale coefficients, one list per grid point.
    #[getter]
    fn beta(&self) -> Vec<Vec<f64>> {
        self.inner.beta.clone()
    }

    #[getter]
    fn intercepts(&self) -> Vec<f64> {
        self.inner.intercepts.clone()
    }

    #[getter]
    fn df(&self) -> Vec<usize> {
        self.inner.df.clone()
    }

    #[getter]
    fn converged(&self) -> Vec<bool> {
        self.inner.converged.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Grid index closest to `lambda_` on the log scale.
    fn nearest(&self, lambda_: f64) -> usize {
        self.inner.grid.nearest(lambda_)
    }
}

#[pyclass(name = "CvResult", module = "pymfdr", frozen)]
pub struct PyCvResult {
    inner: CvResult,
}

#[pymethods]
impl PyCvResult {
    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambda.clone()
    }

    #[getter]
    fn cve(&self) -> Vec<f64> {
        self.inner.cve.clone()
    }

    #[getter]
    fn cvse(&self) -> Vec<f64> {
        self.inner.cvse.clone()
    }

    #[getter]
    fn lambda_cv(&self) -> f64 {
        self.inner.lambda_cv
    }

    #[getter]
    fn lambda_1se(&self) -> f64 {
        self.inner.lambda_1se
    }

    #[getter]
    fn index_cv(&self) -> usize {
        self.inner.index_cv
    }

    #[getter]
    fn index_1se(&self) -> usize {
        self.inner.index_1se
    }
}

#[pyclass(name = "FdrTable", module = "pymfdr", frozen)]
pub struct PyFdrTable {
    inner: FdrTable,
}

#[pymethods]
impl PyFdrTable {
    /// `(name, feature, z, mfdr, active)` tuples in feature order.
    #[getter]
    fn records(&self) -> Vec<(String, usize, f64, f64, bool)> {
        self.inner.records.iter().map(|r| (r.name.clone(), r.feature, r.z, r.mfdr, r.active)).collect()
    }

    #[getter]
    fn z(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.z).collect()
    }

    #[getter]
    fn mfdr(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.mfdr).collect()
    }

    #[getter]
    fn pi0_hat(&self) -> f64 {
        self.inner.pi0_hat
    }

    #[getter]
    fn lambda_(&self) -> Option<f64> {
        self.inner.lambda
    }

    /// Feature indices ordered by increasing mfdr.
    fn sorted(&self) -> Vec<usize> {
        self.inner.sorted().iter().map(|r| r.feature).collect()
    }

    fn below(&self, threshold: f64) -> Vec<usize> {
        self.inner.below(threshold)
    }

    fn active(&self) -> Vec<usize> {
        self.inner.active()
    }

    /// Mean mfdr over `selected` (the active set by default).
    #[pyo3(signature = (selected=None))]
    fn aggregate(&self, selected: Option<Vec<usize>>) -> PyResult<f64> {
        let sel = selected.unwrap_or_else(|| self.inner.active());
        mfdr::aggregate_fdr(&self.inner, &sel).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Lasso path over `lambdas`, or over the default grid.
#[pyfunction]
#[pyo3(signature = (data, lambdas=None))]
fn fit_path(py: Python<'_>, data: &PyDataset, lambdas: Option<Vec<f64>>) -> PyResult<PyPathFit> {
    let grid = match lambdas {
        Some(v) => LambdaGrid::custom(v),
        None => default_grid(&data.inner, data.family),
    }
    .map_err(err)?;
    let inner = py
        .detach(|| mfdr::fit_path(&data.inner, data.family, &grid, SolverOptions::default()))
        .map_err(err)?;
    Ok(PyPathFit { inner })
}

#[pyfunction]
#[pyo3(signature = (data, fit, folds=10, seed=1))]
fn cross_validate(py: Python<'_>, data: &PyDataset, fit: &PyPathFit, folds: usize, seed: u64) -> PyResult<PyCvResult> {
    let inner = py
        .detach(|| mfdr::cross_validate(&data.inner, data.family, &fit.inner.grid, folds, seed))
        .map_err(err)?;
    Ok(PyCvResult { inner })
}

#[pyfunction]
#[pyo3(signature = (data, fit, index, estimator="mixture"))]
fn local_mfdr(data: &PyDataset, fit: &PyPathFit, index: usize, estimator: &str) -> PyResult<PyFdrTable> {
    let method: FdrMethod = parse(estimator)?;
    let inner = mfdr::local_mfdr(&data.inner, &fit.inner, index, method).map_err(err)?;
    Ok(PyFdrTable { inner })
}

#[pyfunction]
#[pyo3(signature = (data, fit, estimator="mixture"))]
fn mfdr_path(data: &PyDataset, fit: &PyPathFit, estimator: &str) -> PyResult<Vec<PyFdrTable>> {
    let method: FdrMethod = parse(estimator)?;
    let tables = mfdr::mfdr_path(&data.inner, &fit.inner, method).map_err(err)?;
    Ok(tables.into_iter().map(|inner| PyFdrTable { inner }).collect())
}

#[pyfunction]
#[pyo3(signature = (data, estimator="mixture"))]
fn univariate_fdr(data: &PyDataset, estimator: &str) -> PyResult<PyFdrTable> {
    let method: FdrMethod = parse(estimator)?;
    let inner = mfdr::univariate_fdr(&data.inner, data.family, method).map_err(err)?;
    Ok(PyFdrTable { inner })
}

/// mfdr of each statistic, plus the estimated null proportion.
#[pyfunction]
#[pyo3(signature = (z, estimator="mixture"))]
fn estimate_fdr(z: Vec<f64>, estimator: &str) -> PyResult<(Vec<f64>, f64)> {
    let est = mfdr::estimate_fdr(&z, parse(estimator)?).map_err(err)?;
    Ok((est.mfdr, est.pi0_hat))
}

#[pyfunction]
#[pyo3(signature = (n=400, p=100, pi0=0.8, sigma=1.0, effect_sd=0.5, lambda_=0.1, replicates=1000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn oracle_check<'py>(
    py: Python<'py>,
    n: usize,
    p: usize,
    pi0: f64,
    sigma: f64,
    effect_sd: f64,
    lambda_: f64,
    replicates: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| mfdr::sim::verify_theorem1(n, p, pi0, sigma, effect_sd, lambda_, replicates, seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("avg_mfdr_selected", r.avg_mfdr_selected)?;
    d.set_item("empirical_mfdr", r.empirical_mfdr)?;
    d.set_item("selections", r.selections)?;
    d.set_item("replicates", r.replicates)?;
    Ok(d)
}

/// Runs a simulation study and returns its report as JSON text.
#[pyfunction]
#[pyo3(signature = (scenario, family, replicates=100, seed=1, threshold=0.1, folds=10, estimator="mixture", n=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    scenario: &str,
    family: &str,
    replicates: usize,
    seed: u64,
    threshold: f64,
    folds: usize,
    estimator: &str,
    n: Option<usize>,
) -> PyResult<String> {
    let name: ScenarioName = parse(scenario)?;
    let mut spec = ScenarioSpec::standard(name, parse(family)?, seed);
    if let Some(n) = n {
        spec = spec.with_n(n);
    }
    let study = StudyConfig { replicates, threshold, folds, estimator: parse(estimator)? };
    let report = py.detach(|| mfdr::sim::simulate(&spec, &study)).map_err(err)?;
    report.to_json().map_err(err)
}

#[pymodule]
fn pymfdr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MfdrError", m.py().get_type::<MfdrError>())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyPathFit>()?;
    m.add_class::<PyCvResult>()?;
    m.add_class::<PyFdrTable>()?;
    m.add_function(wrap_pyfunction!(fit_path, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(local_mfdr, m)?)?;
    m.add_function(wrap_pyfunction!(mfdr_path, m)?)?;
    m.add_function(wrap_pyfunction!(univariate_fdr, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_fdr, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<Vec<f64>> {
        (0..12).map(|i| vec![i as f64, ((i * 7) % 5) as f64, (i as f64).sin()]).collect()
    }

    #[test]
    fn dataset_from_rows() {
        let y: Vec<f64> = (0..12).map(|i| (i % 3) as f64).collect();
        let d = build_dataset(rows(), Family::Linear, Some(y), None, None, &[1]).unwrap();
        assert_eq!((d.n(), d.p()), (12, 3));
        assert_eq!(d.design.penalty_factor, vec![1.0, 0.0, 1.0]);
        let ss: f64 = d.design.col(0).iter().map(|v| v * v).sum();
        assert!((ss - 12.0).abs() < 1e-12);
    }

    #[test]
    fn dataset_rejects_bad_input() {
        let y = vec![0.0; 12];
        let mut ragged = rows();
        ragged[3].pop();
        assert!(build_dataset(ragged, Family::Linear, Some(y.clone()), None, None, &[]).is_err());
        assert!(build_dataset(rows(), Family::Cox, Some(y.clone()), None, None, &[]).is_err());
        assert!(build_dataset(rows(), Family::Linear, Some(y), None, None, &[5]).is_err());
        let names = Some(vec!["a".to_string()]);
        let t = (vec![1.0; 12], vec![true; 12]);
        assert!(build_dataset(rows(), Family::Cox, None, Some(t), names, &[]).is_err());
    }
}
