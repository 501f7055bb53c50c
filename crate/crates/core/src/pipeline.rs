//! mfdr tables for a fitted path and for the univariate baseline.

use crate::data::Dataset;
use crate::error::Result;
use crate::family::Family;
use crate::fdr::{estimate_fdr, univariate_z, Estimator, FdrMethod, FdrRecord, FdrTable};
use crate::kkt_stats::{selection_stats, SelectionStat};
use crate::solver::PathFit;

fn table_from_stats(data: &Dataset, stats: &[SelectionStat], method: FdrMethod, lambda: f64) -> Result<FdrTable> {
    let z: Vec<f64> = stats.iter().map(|s| s.z).collect();
    let est = estimate_fdr(&z, method)?;
    let records = stats
        .iter()
        .zip(&est.mfdr)
        .map(|(s, &m)| FdrRecord {
            name: data.design.names[s.feature].clone(),
            feature: s.feature,
            z: s.z,
            mfdr: m,
            active: s.active,
            estimator: est.estimator,
        })
        .collect();
    Ok(FdrTable { records, pi0_hat: est.pi0_hat, lambda: Some(lambda) })
}

/// mfdr of every penalized feature at grid point `l`.
pub fn local_mfdr(data: &Dataset, fit: &PathFit, l: usize, method: FdrMethod) -> Result<FdrTable> {
    let stats = selection_stats(data, fit, l)?;
    table_from_stats(data, &stats, method, fit.lambda(l))
}

/// [`local_mfdr`] at every grid point.
pub fn mfdr_path(data: &Dataset, fit: &PathFit, method: FdrMethod) -> Result<Vec<FdrTable>> {
    (0..fit.len()).map(|l| local_mfdr(data, fit, l, method)).collect()
}

/// Univariate-regression fdr for every penalized feature, with the
/// unpenalized columns as adjusters. `active` is always false.
pub fn univariate_fdr(data: &Dataset, family: Family, method: FdrMethod) -> Result<FdrTable> {
    let adjusters: Vec<usize> = data.design.unpenalized().collect();
    let u = univariate_z(data, family, &adjusters)?;
    let est = estimate_fdr(&u.z, method)?;
    let records = u
        .features
        .iter()
        .zip(u.z.iter().zip(&est.mfdr))
        .map(|(&j, (&z, &m))| FdrRecord {
            name: data.design.names[j].clone(),
            feature: j,
            z,
            mfdr: m,
            active: false,
            estimator: Estimator::Univariate,
        })
        .collect();
    Ok(FdrTable { records, pi0_hat: est.pi0_hat, lambda: None })
}
