//! Unimodal normal scale mixture fitted by EM on a fixed grid.
//!
//! The marginal density of a statistic is modelled as
//! `π₀·φ(z) + Σₖ wₖ·φ(z; 0, 1 + τₖ²)`, with the τ grid fixed and only the
//! weights estimated. A Dirichlet pseudo-count on π₀ (the null weight) keeps
//! the estimate away from spuriously small π₀ when every component is
//! barely wider than the null.

use serde::{Deserialize, Serialize};

use crate::error::{MfdrError, Result};
use crate::stats::{norm_logpdf, norm_logpdf_sd};

pub const MIN_STATISTICS: usize = 10;
pub const EM_TOL: f64 = 1e-8;
pub const EM_MAX_ITER: usize = 5_000;
pub const DEFAULT_NULL_WEIGHT: f64 = 10.0;
const INIT_PI0: f64 = 0.9;

/// How to build the τ grid, and the prior weight on the null component.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Fixed τ values; `None` derives them from the data.
    pub taus: Option<Vec<f64>>,
    /// Dirichlet concentration on π₀; 1 gives the plain maximum likelihood fit.
    pub null_weight: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { taus: None, null_weight: DEFAULT_NULL_WEIGHT }
    }
}

impl GridSpec {
    pub fn fixed(taus: Vec<f64>) -> Self {
        GridSpec { taus: Some(taus), ..Default::default() }
    }

    pub fn with_null_weight(mut self, w: f64) -> Self {
        self.null_weight = w;
        self
    }

    /// τ from max|z|/100 up to max|z| in steps of √2.
    pub fn resolve(&self, z: &[f64]) -> Vec<f64> {
        if let Some(t) = &self.taus {
            return t.clone();
        }
        let zmax = z.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if zmax <= 0.0 {
            return Vec::new();
        }
        let mut taus = Vec::new();
        let mut t = zmax / 100.0;
        loop {
            taus.push(t);
            if t >= zmax * (1.0 - 1e-12) {
                break;
            }
            t *= std::f64::consts::SQRT_2;
        }
        taus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub pi0: f64,
    /// Marginal standard deviations `√(1 + τₖ²)`.
    pub component_sds: Vec<f64>,
    pub weights: Vec<f64>,
    /// Log-likelihood at the final weights.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized log-likelihood before each EM update, then at the final weights.
    pub objective_trace: Vec<f64>,
}

impl MixtureModel {
    /// A model with only the null component.
    pub fn null_only(z: &[f64]) -> Self {
        let loglik = z.iter().map(|&v| norm_logpdf(v)).sum();
        MixtureModel {
            pi0: 1.0,
            component_sds: Vec::new(),
            weights: Vec::new(),
            loglik,
            iterations: 0,
            converged: true,
            objective_trace: vec![loglik],
        }
    }

    pub fn log_density(&self, z: f64) -> f64 {
        let mut terms = Vec::with_capacity(self.weights.len() + 1);
        if self.pi0 > 0.0 {
            terms.push(self.pi0.ln() + norm_logpdf(z));
        }
        for (w, sd) in self.weights.iter().zip(&self.component_sds) {
            if *w > 0.0 {
                terms.push(w.ln() + norm_logpdf_sd(z, *sd));
            }
        }
        log_sum_exp(&terms)
    }

    /// `π₀φ(z)/f(z)`, clamped to [0, 1].
    pub fn mfdr(&self, z: f64) -> f64 {
        if self.pi0 <= 0.0 {
            return 0.0;
        }
        let v = (self.pi0.ln() + norm_logpdf(z) - self.log_density(z)).exp();
        v.clamp(0.0, 1.0)
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) fn check_statistics(z: &[f64]) -> Result<()> {
    if z.len() < MIN_STATISTICS {
        return Err(MfdrError::TooFewStatistics { needed: MIN_STATISTICS, got: z.len() });
    }
    if let Some(i) = z.iter().position(|v| !v.is_finite()) {
        return Err(MfdrError::NonFinite(i));
    }
    Ok(())
}

/// Fits the mixture weights by EM.
pub fn fit_mixture_em(z: &[f64], grid: &GridSpec) -> Result<MixtureModel> {
    check_statistics(z)?;
    let taus = grid.resolve(z);
    if taus.is_empty() {
        return Ok(MixtureModel::null_only(z));
    }
    let k = taus.len() + 1;
    let sds: Vec<f64> = taus.iter().map(|t| (1.0 + t * t).sqrt()).collect();
    let m = z.len();

    // Component densities scaled by the row maximum; row_shift holds the log scale.
    let mut dens = vec![0.0; m * k];
    let mut row_shift = vec![0.0; m];
    for (i, &zi) in z.iter().enumerate() {
        let row = &mut dens[i * k..(i + 1) * k];
        row[0] = norm_logpdf(zi);
        for (c, sd) in sds.iter().enumerate() {
            row[c + 1] = norm_logpdf_sd(zi, *sd);
        }
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.iter_mut().for_each(|v| *v = (*v - mx).exp());
        row_shift[i] = mx;
    }
    let shift_total: f64 = row_shift.iter().sum();
    let extra = (grid.null_weight - 1.0).max(0.0);

    let mut pi = vec![(1.0 - INIT_PI0) / taus.len() as f64; k];
    pi[0] = INIT_PI0;
    let mut trace = Vec::new();
    let mut resp = vec![0.0; k];
    let mut converged = false;
    let mut iterations = 0;
    let mut loglik;
    loop {
        resp.iter_mut().for_each(|v| *v = 0.0);
        loglik = shift_total;
        for i in 0..m {
            let row = &dens[i * k..(i + 1) * k];
            let f: f64 = row.iter().zip(&pi).map(|(d, p)| d * p).sum();
            loglik += f.ln();
            for c in 0..k {
                resp[c] += row[c] * pi[c] / f;
            }
        }
        let obj = loglik + extra * pi[0].ln();
        if let Some(&prev) = trace.last() {
            if obj - prev < EM_TOL {
                trace.push(obj);
                converged = true;
                break;
            }
        }
        trace.push(obj);
        if iterations == EM_MAX_ITER {
            break;
        }
        let total = m as f64 + extra;
        for c in 0..k {
            pi[c] = (resp[c] + if c == 0 { extra } else { 0.0 }) / total;
        }
        iterations += 1;
    }
    // renormalize against rounding drift
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    Ok(MixtureModel {
        pi0: pi[0],
        component_sds: sds,
        weights: pi[1..].to_vec(),
        loglik,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Mixture mfdr at one statistic.
pub fn mfdr_mixture(model: &MixtureModel, z: f64) -> f64 {
    model.mfdr(z)
}
