//! K-fold cross-validation over a fixed λ grid.
//!
//! Linear and logistic errors are per held-out observation (squared error,
//! binomial deviance); the reported error is their mean over all `n`
//! observations and its standard error `sd/√n`. For Cox each fold gets the
//! deviance `−2(ℓ_full(β̂₋ₖ) − ℓ₋ₖ(β̂₋ₖ))` scaled by its number of events, and
//! folds are averaged with event-count weights.

use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ResponseKind};
use crate::error::{MfdrError, Result};
use crate::family::{log1p_exp, Family, Likelihood};
use crate::solver::{fit_path, LambdaGrid, PathFit, SolverOptions};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda: Vec<f64>,
    pub cve: Vec<f64>,
    pub cvse: Vec<f64>,
    pub lambda_cv: f64,
    pub lambda_1se: f64,
    pub index_cv: usize,
    pub index_1se: usize,
    /// Held-out fold (0-based) of each observation.
    pub fold_assignments: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LambdaRule {
    /// Minimum cross-validated error.
    Cv,
    /// Largest λ within one standard error of the minimum.
    OneSe,
}

impl FromStr for LambdaRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cv" | "min" => Ok(LambdaRule::Cv),
            "1se" | "onese" => Ok(LambdaRule::OneSe),
            other => Err(format!("unknown lambda rule '{other}'")),
        }
    }
}

impl CvResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| MfdrError::Io(e.to_string());
        w.write_record(["lambda", "cve", "cvse"]).map_err(io)?;
        for l in 0..self.lambda.len() {
            w.write_record([self.lambda[l].to_string(), self.cve[l].to_string(), self.cvse[l].to_string()])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(index_cv, index_1se)` on a decreasing grid; ties go to the larger λ.
pub fn cv_indices(cve: &[f64], cvse: &[f64]) -> (usize, usize) {
    let mut best = 0;
    for l in 1..cve.len() {
        if cve[l] < cve[best] {
            best = l;
        }
    }
    let bound = cve[best] + cvse[best];
    let one_se = (0..=best).find(|&l| cve[l] <= bound).unwrap_or(best);
    (best, one_se)
}

/// λ and grid index chosen by `rule`.
pub fn select_lambda(cv: &CvResult, rule: LambdaRule) -> (f64, usize) {
    match rule {
        LambdaRule::Cv => (cv.lambda_cv, cv.index_cv),
        LambdaRule::OneSe => (cv.lambda_1se, cv.index_1se),
    }
}

/// Seeded fold labels; logistic folds are stratified by outcome and Cox
/// folds by event status.
pub fn assign_folds(response: &ResponseKind, folds: usize, seed: u64) -> Vec<usize> {
    let n = response.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strata: Vec<bool> = match response {
        ResponseKind::Continuous(_) => vec![false; n],
        ResponseKind::Binary(y) => y.iter().map(|&v| v == 1.0).collect(),
        ResponseKind::Survival { status, .. } => status.clone(),
    };
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for level in [true, false] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| strata[i] == level).collect();
        idx.shuffle(&mut rng);
        order.extend(idx);
    }
    let mut assignment = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % folds;
    }
    assignment
}

/// Linear predictor of `rows` of `data` under a path fitted on a subset of
/// it (whose design was re-standardized relative to `data`).
fn predict(data: &Dataset, train: &Dataset, fit: &PathFit, l: usize, rows: &[usize]) -> Vec<f64> {
    let beta = fit.beta_at(l);
    let d = &train.design;
    let mut eta = vec![fit.intercepts[l]; rows.len()];
    for (j, &b) in beta.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let col = data.design.col(j);
        let (m, s) = (d.col_means[j], d.col_scales[j]);
        for (e, &i) in eta.iter_mut().zip(rows) {
            *e += b * (col[i] - m) / s;
        }
    }
    eta
}

pub fn cross_validate(data: &Dataset, family: Family, grid: &LambdaGrid, folds: usize, seed: u64) -> Result<CvResult> {
    if data.response.family() != family {
        return Err(MfdrError::FamilyMismatch { family: family.name() });
    }
    let n = data.n();
    if folds < 2 {
        return Err(MfdrError::FoldTooSmall { fold: 0, size: 0 });
    }
    let assignment = assign_folds(&data.response, folds, seed);
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (i, &f) in assignment.iter().enumerate() {
        held[f].push(i);
    }
    for (f, rows) in held.iter().enumerate() {
        if rows.is_empty() || n - rows.len() < 2 {
            return Err(MfdrError::FoldTooSmall { fold: f, size: rows.len() });
        }
        if let ResponseKind::Survival { status, .. } = &data.response {
            if !rows.iter().any(|&i| status[i]) {
                return Err(MfdrError::EmptyEventFold(f));
            }
        }
    }

    let len = grid.len();
    // linear/logistic: per-observation losses; Cox: per-fold deviance
    let mut obs_loss = vec![vec![0.0; n]; len];
    let mut fold_dev = vec![vec![0.0; folds]; len];
    let mut fold_events = vec![0.0; folds];
    let full_lik = Likelihood::new(family, &data.response)?;
    let all_rows: Vec<usize> = (0..n).collect();

    for (f, rows) in held.iter().enumerate() {
        let train_rows: Vec<usize> = (0..n).filter(|&i| assignment[i] != f).collect();
        let train = data.subset(&train_rows)?;
        let fit = fit_path(&train, family, grid, SolverOptions::default())?;
        match &data.response {
            ResponseKind::Continuous(y) => {
                for l in 0..len {
                    let eta = predict(data, &train, &fit, l, rows);
                    for (&i, e) in rows.iter().zip(eta) {
                        obs_loss[l][i] = (y[i] - e).powi(2);
                    }
                }
            }
            ResponseKind::Binary(y) => {
                for l in 0..len {
                    let eta = predict(data, &train, &fit, l, rows);
                    for (&i, e) in rows.iter().zip(eta) {
                        obs_loss[l][i] = 2.0 * (log1p_exp(e) - y[i] * e);
                    }
                }
            }
            ResponseKind::Survival { status, .. } => {
                let train_lik = Likelihood::new(family, &train.response)?;
                fold_events[f] = rows.iter().filter(|&&i| status[i]).count() as f64;
                for l in 0..len {
                    let eta_full = predict(data, &train, &fit, l, &all_rows);
                    let eta_train = fit.eta(&train.design, l);
                    let dev = -2.0 * (full_lik.loglik(&eta_full) - train_lik.loglik(&eta_train));
                    fold_dev[l][f] = dev / fold_events[f];
                }
            }
        }
    }

    let (cve, cvse): (Vec<f64>, Vec<f64>) = if family == Family::Cox {
        let wsum: f64 = fold_events.iter().sum();
        (0..len)
            .map(|l| {
                let m = fold_dev[l].iter().zip(&fold_events).map(|(d, w)| d * w).sum::<f64>() / wsum;
                let v = fold_dev[l].iter().zip(&fold_events).map(|(d, w)| w * (d - m).powi(2)).sum::<f64>() / wsum;
                (m, (v / (folds as f64 - 1.0)).sqrt())
            })
            .unzip()
    } else {
        (0..len)
            .map(|l| {
                let e = &obs_loss[l];
                (crate::stats::mean(e), crate::stats::sd(e) / (n as f64).sqrt())
            })
            .unzip()
    };
    let (index_cv, index_1se) = cv_indices(&cve, &cvse);
    let lambda = grid.values().to_vec();
    Ok(CvResult {
        lambda_cv: lambda[index_cv],
        lambda_1se: lambda[index_1se],
        lambda,
        cve,
        cvse,
        index_cv,
        index_1se,
        fold_assignments: assignment,
        folds,
        seed,
    })
}
