//! Per-feature selection statistics derived from the lasso KKT conditions.
//!
//! Feature j enters the model when `|cⱼ| > λ`, where `cⱼ = (1/n)xⱼᵀW rⱼ` and
//! `rⱼ` is the partial (pseudo-)residual with feature j's contribution
//! removed. Because the design is standardized the partial residual never
//! has to be formed: `cⱼ = (1/n)xⱼᵀW r + sⱼ²β̂ⱼ` with `r` the full residual
//! and `sⱼ² = xⱼᵀWxⱼ/n` (which is 1 for the linear model).
//!
//! The normalized statistic is `zⱼ = cⱼ / (sⱼ/√n)` for logistic and Cox fits
//! and `zⱼ = cⱼ / (σ̂/√n)` for the linear model.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ResponseKind};
use crate::error::{MfdrError, Result};
use crate::family::{Family, Likelihood};
use crate::solver::{dot, PathFit};

/// Smallest admissible weighted scale `sⱼ`.
pub const MIN_WEIGHTED_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionStat {
    pub feature: usize,
    pub c: f64,
    pub s: f64,
    pub z: f64,
    pub active: bool,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub rss: f64,
    /// Nonzero penalized coefficients + unpenalized columns + intercept.
    pub df: usize,
    /// `n − df`.
    pub denominator: usize,
}

/// `σ̂² = RSS / (n − df)` at grid point `l` of a linear fit.
pub fn estimate_sigma(data: &Dataset, fit: &PathFit, l: usize) -> Result<SigmaEstimate> {
    fit.check_index(l)?;
    let ResponseKind::Continuous(y) = &data.response else {
        return Err(MfdrError::FamilyMismatch { family: fit.family.name() });
    };
    if fit.family != Family::Linear {
        return Err(MfdrError::FamilyMismatch { family: fit.family.name() });
    }
    let n = data.n();
    let beta = fit.beta_at(l);
    let df = data.design.penalized().filter(|&j| beta[j] != 0.0).count() + data.design.unpenalized().count() + 1;
    if n <= df {
        return Err(MfdrError::SaturatedModel(n as i64 - df as i64));
    }
    let eta = fit.eta(&data.design, l);
    let rss: f64 = y.iter().zip(&eta).map(|(y, e)| (y - e).powi(2)).sum();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if rss < 1e-12 * n as f64 * (tss / n as f64).max(1.0) {
        return Err(MfdrError::ZeroResidual);
    }
    let denominator = n - df;
    Ok(SigmaEstimate { sigma: (rss / denominator as f64).sqrt(), rss, df, denominator })
}

/// Statistics for the penalized features of a linear fit at grid point `l`.
pub fn selection_stats_linear(data: &Dataset, fit: &PathFit, l: usize) -> Result<Vec<SelectionStat>> {
    let sigma = estimate_sigma(data, fit, l)?.sigma;
    let ResponseKind::Continuous(y) = &data.response else { unreachable!("checked by estimate_sigma") };
    let n = data.n() as f64;
    let eta = fit.eta(&data.design, l);
    let r: Vec<f64> = y.iter().zip(&eta).map(|(y, e)| y - e).collect();
    let beta = fit.beta_at(l);
    let lambda = fit.lambda(l);
    let scale = sigma / n.sqrt();
    Ok(data
        .design
        .penalized()
        .map(|j| {
            let c = dot(data.design.col(j), &r) / n + beta[j];
            SelectionStat { feature: j, c, s: sigma, z: c / scale, active: beta[j] != 0.0, lambda }
        })
        .collect())
}

/// Statistics for the penalized features of a logistic or Cox fit, using
/// the IRLS weights evaluated at the fitted linear predictor.
pub fn selection_stats_weighted(data: &Dataset, fit: &PathFit, l: usize) -> Result<Vec<SelectionStat>> {
    fit.check_index(l)?;
    if fit.family == Family::Linear {
        return Err(MfdrError::FamilyMismatch { family: fit.family.name() });
    }
    let lik = Likelihood::new(fit.family, &data.response)?;
    let eta = fit.eta(&data.design, l);
    let work = lik.working(&eta);
    let w = fit.weights_at(l).unwrap_or(&work.weights);
    // W·(ỹ − η) is the score vector.
    let wr = &work.score;
    let n = data.n() as f64;
    let beta = fit.beta_at(l);
    let lambda = fit.lambda(l);
    data.design
        .penalized()
        .map(|j| {
            let x = data.design.col(j);
            let s2 = x.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>() / n;
            let s = s2.sqrt();
            if !(s >= MIN_WEIGHTED_SCALE) {
                return Err(MfdrError::DegenerateWeight(j));
            }
            let c = dot(x, wr) / n + s2 * beta[j];
            Ok(SelectionStat { feature: j, c, s, z: c / (s / n.sqrt()), active: beta[j] != 0.0, lambda })
        })
        .collect()
}

/// Dispatches on the fit's family.
pub fn selection_stats(data: &Dataset, fit: &PathFit, l: usize) -> Result<Vec<SelectionStat>> {
    match fit.family {
        Family::Linear => selection_stats_linear(data, fit, l),
        Family::Logistic | Family::Cox => selection_stats_weighted(data, fit, l),
    }
}

/// Statistics at every grid point; element `[l][k]` is the k-th penalized
/// feature at grid point `l`.
pub fn zstats_along_path(data: &Dataset, fit: &PathFit) -> Result<Vec<Vec<SelectionStat>>> {
    (0..fit.len()).map(|l| selection_stats(data, fit, l)).collect()
}
