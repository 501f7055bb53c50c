//! One-feature-at-a-time regression statistics (the large-scale testing baseline).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ResponseKind};
use crate::error::{MfdrError, Result};
use crate::family::{log1p_exp, sigmoid, Family, Likelihood};
use crate::stats::t_to_z;

/// Cap applied to |z| when mapping t statistics to the normal scale.
pub const Z_CAP: f64 = 8.2;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-10;

/// Univariate statistics for every non-adjuster feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateZ {
    pub features: Vec<usize>,
    pub z: Vec<f64>,
    /// The per-feature model could not be fitted; its z is recorded as 0.
    pub singular: Vec<bool>,
}

/// z statistic of each feature from a regression on that feature, the
/// `adjusters` and (linear, logistic) an intercept.
pub fn univariate_z(data: &Dataset, family: Family, adjusters: &[usize]) -> Result<UnivariateZ> {
    if data.response.family() != family {
        return Err(MfdrError::FamilyMismatch { family: family.name() });
    }
    let p = data.p();
    if let Some(&j) = adjusters.iter().find(|&&j| j >= p) {
        return Err(MfdrError::IndexOutOfRange { index: j, len: p });
    }
    let features: Vec<usize> = (0..p).filter(|j| !adjusters.contains(j)).collect();
    let lik = Likelihood::new(family, &data.response)?;
    let mut z = Vec::with_capacity(features.len());
    let mut singular = Vec::with_capacity(features.len());
    for &j in &features {
        let mut cols: Vec<&[f64]> = vec![data.design.col(j)];
        cols.extend(adjusters.iter().map(|&a| data.design.col(a)));
        let v = match &data.response {
            ResponseKind::Continuous(y) if adjusters.is_empty() => linear_simple(cols[0], y),
            ResponseKind::Continuous(y) => linear_general(&cols, y),
            ResponseKind::Binary(y) => logistic_wald(&cols, y),
            ResponseKind::Survival { .. } => cox_wald(&cols, &lik),
        };
        match v {
            Some(v) if v.is_finite() => {
                z.push(v);
                singular.push(false);
            }
            _ => {
                z.push(0.0);
                singular.push(true);
            }
        }
    }
    Ok(UnivariateZ { features, z, singular })
}

fn t_stat_to_z(beta: f64, se: f64, df: f64) -> f64 {
    let t = if se > 0.0 { beta / se } else { f64::INFINITY.copysign(beta) };
    if beta == 0.0 {
        return 0.0;
    }
    t_to_z(t, df, Z_CAP)
}

/// Closed form for a standardized column (mean 0, Σx² = n) plus intercept.
fn linear_simple(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = y.len() as f64;
    if n <= 2.0 {
        return None;
    }
    let ybar = y.iter().sum::<f64>() / n;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let b = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n;
    let rss = (tss - n * b * b).max(0.0);
    let rss = if rss <= 1e-12 * tss.max(f64::MIN_POSITIVE) { 0.0 } else { rss };
    let se = (rss / (n - 2.0) / n).sqrt();
    Some(t_stat_to_z(b, se, n - 2.0))
}

fn with_intercept(cols: &[&[f64]], n: usize) -> DMatrix<f64> {
    let d = cols.len() + 1;
    DMatrix::from_fn(n, d, |i, c| if c == 0 { 1.0 } else { cols[c - 1][i] })
}

/// OLS with intercept; the statistic is for the first column of `cols`.
fn linear_general(cols: &[&[f64]], y: &[f64]) -> Option<f64> {
    let n = y.len();
    let x = with_intercept(cols, n);
    let d = x.ncols();
    if n <= d {
        return None;
    }
    let yv = DVector::from_column_slice(y);
    let gram = x.transpose() * &x;
    let chol = gram.cholesky()?;
    let beta = chol.solve(&(x.transpose() * &yv));
    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let ybar = yv.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let rss = if rss <= 1e-12 * tss.max(f64::MIN_POSITIVE) { 0.0 } else { rss };
    let df = (n - d) as f64;
    let inv = chol.inverse();
    let se = (rss / df * inv[(1, 1)]).sqrt();
    Some(t_stat_to_z(beta[1], se, df))
}

/// Damped Newton–Raphson on a concave log-likelihood. `eval` returns the
/// log-likelihood, score and information at a coefficient vector. Returns
/// the Wald statistic of coefficient `target`.
fn newton_wald<F>(d: usize, target: usize, eval: F) -> Option<f64>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>),
{
    let mut beta = DVector::zeros(d);
    let (mut ll, mut score, mut info) = eval(&beta);
    for _ in 0..NEWTON_MAX_ITER {
        let chol = info.clone().cholesky()?;
        let step = chol.solve(&score);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &beta + &step * t;
            let (ll_c, s_c, i_c) = eval(&cand);
            if ll_c.is_finite() && ll_c >= ll - 1e-12 * ll.abs().max(1.0) {
                beta = cand;
                let gain = ll_c - ll;
                ll = ll_c;
                score = s_c;
                info = i_c;
                accepted = true;
                if step.amax() * t < NEWTON_TOL || gain.abs() < NEWTON_TOL * ll.abs().max(1.0) {
                    let inv = info.clone().cholesky()?.inverse();
                    return Some(beta[target] / inv[(target, target)].sqrt());
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let inv = info.cholesky()?.inverse();
    Some(beta[target] / inv[(target, target)].sqrt())
}

fn logistic_wald(cols: &[&[f64]], y: &[f64]) -> Option<f64> {
    let n = y.len();
    let x = with_intercept(cols, n);
    let d = x.ncols();
    newton_wald(d, 1, |beta| {
        let eta = &x * beta;
        let mut ll = 0.0;
        let mut resid = DVector::zeros(n);
        let mut w = DVector::zeros(n);
        for i in 0..n {
            let e = eta[i];
            ll += y[i] * e - log1p_exp(e);
            let mu = sigmoid(e);
            resid[i] = y[i] - mu;
            w[i] = mu * (1.0 - mu);
        }
        let score = x.transpose() * resid;
        let mut xw = x.clone();
        for (mut row, wi) in xw.row_iter_mut().zip(w.iter()) {
            row *= *wi;
        }
        let info = x.transpose() * xw;
        (ll, score, info)
    })
}

fn cox_wald(cols: &[&[f64]], lik: &Likelihood<'_>) -> Option<f64> {
    let n = cols[0].len();
    let d = cols.len();
    newton_wald(d, 0, |beta| {
        let eta: Vec<f64> = (0..n).map(|i| (0..d).map(|c| beta[c] * cols[c][i]).sum()).collect();
        let ll = lik.loglik(&eta);
        let (s, info) = lik.cox_score_information(&eta, cols).expect("cox likelihood");
        let info = DMatrix::from_fn(d, d, |a, b| info[a][b]);
        (ll, DVector::from_vec(s), info)
    })
}
