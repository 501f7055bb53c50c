//! Lasso regularization paths by cyclic coordinate descent.
//!
//! The objective at each penalty level is
//!
//! ```text
//! Q(β) = −ℓ(β)/n + λ Σⱼ pfⱼ |βⱼ|
//! ```
//!
//! For the linear family coordinate descent runs directly on the residual,
//! or on cached cross products `XᵀX/n` when n > p.
//! Logistic and Cox fits use an outer IRLS loop: at the current η the
//! likelihood is replaced by the weighted least-squares surrogate
//! `(1/2n) Σ Wᵢ (ỹᵢ − ηᵢ)²` with pseudo-response `ỹ = η + W⁻¹·score`, which is
//! then minimized by the same weighted coordinate descent. A backtracking
//! step on the true objective keeps the outer loop monotone.
//!
//! Coefficients live on the standardized scale throughout.

use std::cell::OnceCell;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, StandardizedDesign};
use crate::error::{MfdrError, Result};
use crate::family::{Family, Likelihood};

/// `lambda_max` values below this are treated as an orthogonal response.
pub const DEGENERATE_LAMBDA_FLOOR: f64 = 1e-12;
/// Absolute linear predictor above which a logistic fit is flagged as separated.
pub const SEPARATION_ETA_CAP: f64 = 30.0;
/// Fewest active-set sweeps before trying a direct solve on the support.
const EXACT_SOLVE_AFTER: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance on the maximum coefficient change.
    pub tol: f64,
    /// Coordinate-descent sweeps allowed per grid point.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-7, max_iter: 10_000 }
    }
}

/// Strictly decreasing sequence of positive penalty values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
    lambda_max: f64,
    lambda_min_ratio: f64,
}

impl LambdaGrid {
    /// A user supplied grid; must be strictly decreasing and positive.
    pub fn custom(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(MfdrError::InvalidGrid("empty grid".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(MfdrError::InvalidGrid("values must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(MfdrError::InvalidGrid("values must be strictly decreasing".into()));
        }
        let lambda_max = values[0];
        let ratio = values[values.len() - 1] / lambda_max;
        Ok(LambdaGrid { values, lambda_max, lambda_min_ratio: ratio })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_min_ratio(&self) -> f64 {
        self.lambda_min_ratio
    }

    /// Index of the grid value closest to `lambda` on the log scale.
    pub fn nearest(&self, lambda: f64) -> usize {
        let target = lambda.ln();
        self.values
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.ln() - target).abs().total_cmp(&(b.1.ln() - target).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Default smallest-to-largest penalty ratio: 0.001 when n > p, else 0.05.
pub fn default_min_ratio(n: usize, p: usize) -> f64 {
    if n > p {
        0.001
    } else {
        0.05
    }
}

pub const DEFAULT_GRID_LENGTH: usize = 100;

/// Fitted path. Column `l` of every per-λ quantity belongs to `grid.values()[l]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathFit {
    pub family: Family,
    pub grid: LambdaGrid,
    /// Coefficients per grid point (standardized scale), each of length p.
    pub beta: Vec<Vec<f64>>,
    /// Intercepts per grid point; all zero for Cox.
    pub intercepts: Vec<f64>,
    /// Number of nonzero coefficients (penalized and unpenalized).
    pub df: Vec<usize>,
    /// `−ℓ/n` at each grid point.
    pub loss: Vec<f64>,
    pub converged: Vec<bool>,
    pub iterations: Vec<usize>,
    /// Logistic fits whose linear predictor exceeded [`SEPARATION_ETA_CAP`].
    pub separation: Vec<bool>,
    /// IRLS weights evaluated at the fitted η (empty for the linear family).
    weights: Vec<Vec<f64>>,
}

impl PathFit {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn lambda(&self, l: usize) -> f64 {
        self.grid.values()[l]
    }

    pub fn beta_at(&self, l: usize) -> &[f64] {
        &self.beta[l]
    }

    /// Final IRLS weights at grid point `l`; `None` means identity weights.
    pub fn weights_at(&self, l: usize) -> Option<&[f64]> {
        self.weights.get(l).map(Vec::as_slice)
    }

    /// p × L coefficient matrix.
    pub fn beta_matrix(&self) -> Array2<f64> {
        let p = self.beta.first().map_or(0, Vec::len);
        Array2::from_shape_fn((p, self.len()), |(j, l)| self.beta[l][j])
    }

    /// Linear predictor (including intercept) at grid point `l`.
    pub fn eta(&self, design: &StandardizedDesign, l: usize) -> Vec<f64> {
        let mut eta = design.linear_predictor(&self.beta[l]);
        let a = self.intercepts[l];
        if a != 0.0 {
            eta.iter_mut().for_each(|e| *e += a);
        }
        eta
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub(crate) fn check_index(&self, l: usize) -> Result<()> {
        if l >= self.len() {
            return Err(MfdrError::IndexOutOfRange { index: l, len: self.len() });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Penalized objective `−ℓ/n + λ Σ pfⱼ|βⱼ|`.
pub fn objective(data: &Dataset, family: Family, beta: &[f64], intercept: f64, lambda: f64) -> Result<f64> {
    let lik = Likelihood::new(family, &data.response)?;
    let mut eta = data.design.linear_predictor(beta);
    eta.iter_mut().for_each(|e| *e += intercept);
    Ok(lik.loss(&eta) + penalty(&data.design, beta, lambda))
}

fn penalty(design: &StandardizedDesign, beta: &[f64], lambda: f64) -> f64 {
    beta.iter()
        .zip(&design.penalty_factor)
        .filter(|(b, pf)| **b != 0.0 && **pf != 0.0)
        .map(|(b, pf)| lambda * pf * b.abs())
        .sum()
}

/// Current iterate of one fit.
#[derive(Debug, Clone)]
struct State {
    beta: Vec<f64>,
    intercept: f64,
}

struct Problem<'a> {
    design: &'a StandardizedDesign,
    lik: Likelihood<'a>,
    family: Family,
    opts: SolverOptions,
    gram: OnceCell<Gram>,
}

/// Cross products for covariance-update descent on a tall linear problem:
/// each coordinate step then costs O(p) instead of O(n).
struct Gram {
    /// `XᵀX/n`, column-major.
    xx: Vec<f64>,
    /// `Xᵀy/n`.
    xy: Vec<f64>,
    /// Column sums over n (zero for a centred design).
    xbar: Vec<f64>,
    ybar: f64,
}

impl Gram {
    fn new(design: &StandardizedDesign, y: &[f64]) -> Gram {
        let p = design.p();
        let n = design.n() as f64;
        let mut xx = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..=a {
                let v = dot(design.col(a), design.col(b)) / n;
                xx[a * p + b] = v;
                xx[b * p + a] = v;
            }
        }
        Gram {
            xx,
            xy: (0..p).map(|j| dot(design.col(j), y) / n).collect(),
            xbar: (0..p).map(|j| design.col(j).iter().sum::<f64>() / n).collect(),
            ybar: y.iter().sum::<f64>() / n,
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        let p = self.xy.len();
        &self.xx[j * p..(j + 1) * p]
    }
}

struct StepInfo {
    converged: bool,
    sweeps: usize,
    separation: bool,
}

impl<'a> Problem<'a> {
    fn new(data: &'a Dataset, family: Family, opts: SolverOptions) -> Result<Self> {
        let lik = Likelihood::new(family, &data.response)?;
        Ok(Problem { design: &data.design, lik, family, opts, gram: OnceCell::new() })
    }

    fn eta(&self, st: &State) -> Vec<f64> {
        let mut eta = self.design.linear_predictor(&st.beta);
        if st.intercept != 0.0 {
            eta.iter_mut().for_each(|e| *e += st.intercept);
        }
        eta
    }

    fn null_state(&self) -> State {
        State { beta: vec![0.0; self.design.p()], intercept: 0.0 }
    }

    /// Fit with every penalized coefficient held at zero.
    fn null_fit(&self) -> (State, StepInfo) {
        let mut st = self.null_state();
        let info = self.solve(f64::INFINITY, &mut st);
        (st, info)
    }

    fn solve(&self, lambda: f64, st: &mut State) -> StepInfo {
        match self.family {
            Family::Linear => self.solve_linear(lambda, st),
            Family::Logistic | Family::Cox => self.solve_irls(lambda, st),
        }
    }

    fn solve_linear(&self, lambda: f64, st: &mut State) -> StepInfo {
        if self.design.n() > self.design.p() && lambda.is_finite() {
            if let Some(y) = self.lik.gaussian_response() {
                let gram = self.gram.get_or_init(|| Gram::new(self.design, y));
                let mut budget = self.opts.max_iter;
                let converged = self.covariance_descent(gram, lambda, st, &mut budget);
                return StepInfo { converged, sweeps: self.opts.max_iter - budget, separation: false };
            }
        }
        let n = self.design.n() as f64;
        let eta = self.eta(st);
        let w = self.lik.working(&eta);
        // For the Gaussian family the score is the residual itself.
        let mut r = w.score;
        let ones = vec![1.0; r.len()];
        let xwx: Vec<f64> = (0..self.design.p())
            .map(|j| dot(self.design.col(j), self.design.col(j)) / n)
            .collect();
        let mut budget = self.opts.max_iter;
        let converged = self.coordinate_descent(lambda, &ones, n, &xwx, &mut r, st, &mut budget);
        StepInfo { converged, sweeps: self.opts.max_iter - budget, separation: false }
    }

    fn solve_irls(&self, lambda: f64, st: &mut State) -> StepInfo {
        let n = self.design.n() as f64;
        let p = self.design.p();
        let mut budget = self.opts.max_iter;
        let mut separation = false;
        let mut eta = self.eta(st);
        loop {
            let work = self.lik.working(&eta);
            let q_old = work.loss + penalty(self.design, &st.beta, lambda);
            let w = work.weights;
            let sum_w: f64 = w.iter().sum();
            let mut r: Vec<f64> = work.score.iter().zip(&w).map(|(s, w)| s / w).collect();
            let xwx: Vec<f64> = (0..p)
                .map(|j| {
                    let x = self.design.col(j);
                    wdot(&w, x, x) / n
                })
                .collect();
            let old = st.clone();
            let inner_ok = self.coordinate_descent(lambda, &w, sum_w, &xwx, &mut r, st, &mut budget);

            // Backtrack on the true objective if the surrogate step overshot.
            let mut new_eta = self.eta(st);
            let mut q_new = self.lik.loss(&new_eta) + penalty(self.design, &st.beta, lambda);
            let mut t = 1.0;
            let proposal = st.clone();
            let mut halvings = 0;
            while !(q_new <= q_old + 1e-12 * q_old.abs().max(1.0)) && halvings < 30 {
                t *= 0.5;
                halvings += 1;
                st.intercept = old.intercept + t * (proposal.intercept - old.intercept);
                for j in 0..p {
                    st.beta[j] = old.beta[j] + t * (proposal.beta[j] - old.beta[j]);
                }
                new_eta = self.eta(st);
                q_new = self.lik.loss(&new_eta) + penalty(self.design, &st.beta, lambda);
            }
            if halvings == 30 {
                *st = old.clone();
                new_eta = self.eta(st);
            }

            if self.family == Family::Logistic && new_eta.iter().any(|e| e.abs() > SEPARATION_ETA_CAP) {
                separation = true;
            }
            let change = max_change(&old, st);
            eta = new_eta;
            if inner_ok && change < self.threshold(st) {
                return StepInfo { converged: true, sweeps: self.opts.max_iter - budget, separation };
            }
            if budget == 0 || halvings == 30 {
                return StepInfo { converged: false, sweeps: self.opts.max_iter - budget, separation };
            }
        }
    }

    fn threshold(&self, st: &State) -> f64 {
        let bmax = st.beta.iter().fold(st.intercept.abs(), |m, b| m.max(b.abs()));
        self.opts.tol * bmax.max(1.0)
    }

    /// Weighted coordinate descent on `(1/2n) Σ wᵢ rᵢ² + λ Σ pfⱼ|βⱼ|`, where
    /// `r` is the working residual, kept in sync with `st`.
    #[allow(clippy::too_many_arguments)]
    fn coordinate_descent(
        &self,
        lambda: f64,
        w: &[f64],
        sum_w: f64,
        xwx: &[f64],
        r: &mut [f64],
        st: &mut State,
        budget: &mut usize,
    ) -> bool {
        let n = self.design.n() as f64;
        let p = self.design.p();
        let unit = self.family == Family::Linear;
        let has_intercept = self.family.has_intercept();
        let mut surrogate = if cfg!(debug_assertions) {
            surrogate_objective(w, r, n, self.design, &st.beta, lambda)
        } else {
            0.0
        };

        let sweep = |idx: &mut dyn Iterator<Item = usize>, st: &mut State, r: &mut [f64]| -> f64 {
            let mut max_chg: f64 = 0.0;
            if has_intercept {
                let shift = if unit {
                    r.iter().sum::<f64>() / n
                } else {
                    w.iter().zip(r.iter()).map(|(w, r)| w * r).sum::<f64>() / sum_w
                };
                if shift != 0.0 {
                    st.intercept += shift;
                    r.iter_mut().for_each(|ri| *ri -= shift);
                    max_chg = max_chg.max(shift.abs());
                }
            }
            for j in idx {
                let x = self.design.col(j);
                let old = st.beta[j];
                let grad = if unit { dot(x, r) / n } else { wdot(w, x, r) / n };
                let z = grad + xwx[j] * old;
                let pf = self.design.penalty_factor[j];
                let new = if pf == 0.0 { z / xwx[j] } else { soft_threshold(z, lambda * pf) / xwx[j] };
                if new != old {
                    let delta = new - old;
                    for (ri, xi) in r.iter_mut().zip(x) {
                        *ri -= xi * delta;
                    }
                    st.beta[j] = new;
                    max_chg = max_chg.max(delta.abs());
                }
            }
            max_chg
        };

        loop {
            if *budget == 0 {
                return false;
            }
            let chg = sweep(&mut (0..p), st, r);
            *budget -= 1;
            if cfg!(debug_assertions) {
                let q = surrogate_objective(w, r, n, self.design, &st.beta, lambda);
                debug_assert!(
                    q <= surrogate + 1e-9 * surrogate.abs().max(1.0),
                    "coordinate descent increased the objective: {surrogate} -> {q}"
                );
                surrogate = q;
            }
            if chg < self.threshold(st) {
                return true;
            }
            let active: Vec<usize> = (0..p).filter(|&j| st.beta[j] != 0.0).collect();
            let mut inner = 0;
            // a direct solve costs about k/2 + k²/3n sweeps of the support
            let k = active.len() as f64;
            let mut next_try = EXACT_SOLVE_AFTER.max((k / 2.0 + k * k / (3.0 * n)) as usize);
            loop {
                if *budget == 0 {
                    return false;
                }
                let chg = sweep(&mut active.iter().copied(), st, r);
                *budget -= 1;
                inner += 1;
                if chg < self.threshold(st) {
                    break;
                }
                if inner == next_try {
                    if self.exact_active_solve(lambda, w, sum_w, r, st) {
                        return true;
                    }
                    next_try *= 2;
                }
            }
        }
    }
}

impl Problem<'_> {
    /// Coordinate descent for the linear family driven by [`Gram`]: keeps
    /// the gradient `Xᵀr/n` and the residual mean instead of the residual.
    fn covariance_descent(&self, gram: &Gram, lambda: f64, st: &mut State, budget: &mut usize) -> bool {
        let p = self.design.p();
        let pf = &self.design.penalty_factor;
        let mut grad: Vec<f64> = gram.xy.iter().zip(&gram.xbar).map(|(xy, xb)| xy - st.intercept * xb).collect();
        let mut rbar = gram.ybar - st.intercept;
        for (k, &b) in st.beta.iter().enumerate() {
            if b != 0.0 {
                grad.iter_mut().zip(gram.col(k)).for_each(|(g, c)| *g -= c * b);
                rbar -= gram.xbar[k] * b;
            }
        }

        let sweep = |idx: &mut dyn Iterator<Item = usize>, st: &mut State, grad: &mut [f64], rbar: &mut f64| -> f64 {
            let mut max_chg: f64 = 0.0;
            if *rbar != 0.0 {
                let shift = *rbar;
                st.intercept += shift;
                grad.iter_mut().zip(&gram.xbar).for_each(|(g, xb)| *g -= shift * xb);
                *rbar = 0.0;
                max_chg = shift.abs();
            }
            for j in idx {
                let xjj = gram.col(j)[j];
                let old = st.beta[j];
                let z = grad[j] + xjj * old;
                let new = if pf[j] == 0.0 { z / xjj } else { soft_threshold(z, lambda * pf[j]) / xjj };
                if new != old {
                    let delta = new - old;
                    grad.iter_mut().zip(gram.col(j)).for_each(|(g, c)| *g -= c * delta);
                    *rbar -= gram.xbar[j] * delta;
                    st.beta[j] = new;
                    max_chg = max_chg.max(delta.abs());
                }
            }
            max_chg
        };

        loop {
            if *budget == 0 {
                return false;
            }
            let chg = sweep(&mut (0..p), st, &mut grad, &mut rbar);
            *budget -= 1;
            if chg < self.threshold(st) {
                return true;
            }
            let active: Vec<usize> = (0..p).filter(|&j| st.beta[j] != 0.0).collect();
            // the direct solve costs about k²/3p sweeps of the support here
            let k = active.len() as f64;
            let mut next_try = EXACT_SOLVE_AFTER.max((k * k / (3.0 * p as f64)) as usize);
            let mut inner = 0;
            loop {
                if *budget == 0 {
                    return false;
                }
                let chg = sweep(&mut active.iter().copied(), st, &mut grad, &mut rbar);
                *budget -= 1;
                inner += 1;
                if chg < self.threshold(st) {
                    break;
                }
                if inner == next_try {
                    if self.exact_gram_solve(gram, lambda, &grad, rbar, st) {
                        return true;
                    }
                    next_try *= 2;
                }
            }
        }
    }

    /// [`Self::exact_active_solve`] on cached cross products.
    fn exact_gram_solve(&self, gram: &Gram, lambda: f64, grad: &[f64], rbar: f64, st: &mut State) -> bool {
        let p = self.design.p();
        let pf = &self.design.penalty_factor;
        let active: Vec<usize> = (0..p).filter(|&j| st.beta[j] != 0.0).collect();
        let k = active.len() + 1;
        let mut g = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        g[(0, 0)] = 1.0;
        rhs[0] = rbar;
        for (a, &j) in active.iter().enumerate() {
            g[(0, a + 1)] = gram.xbar[j];
            g[(a + 1, 0)] = gram.xbar[j];
            rhs[a + 1] = grad[j] - lambda * pf[j] * st.beta[j].signum();
            let col = gram.col(j);
            for (b, &i) in active.iter().enumerate() {
                g[(b + 1, a + 1)] = col[i];
            }
        }
        let Some(chol) = g.cholesky() else {
            return false;
        };
        let step = chol.solve(&rhs);
        if !step.iter().all(|v| v.is_finite()) {
            return false;
        }
        let signs_hold = active.iter().enumerate().all(|(a, &j)| {
            let new = st.beta[j] + step[a + 1];
            pf[j] == 0.0 || new.signum() == st.beta[j].signum() && new != 0.0
        });
        if !signs_hold {
            return false;
        }
        let mut new_grad: Vec<f64> = grad.iter().zip(&gram.xbar).map(|(g, xb)| g - step[0] * xb).collect();
        for (a, &j) in active.iter().enumerate() {
            let d = step[a + 1];
            new_grad.iter_mut().zip(gram.col(j)).for_each(|(g, c)| *g -= c * d);
        }
        if !(0..p).filter(|&j| st.beta[j] == 0.0).all(|j| new_grad[j].abs() <= lambda * pf[j]) {
            return false;
        }
        st.intercept += step[0];
        for (a, &j) in active.iter().enumerate() {
            st.beta[j] += step[a + 1];
        }
        true
    }

    /// Solves the stationarity equations of the weighted quadratic on the
    /// current support with the current signs held fixed. The step is kept
    /// only when it preserves every sign and leaves each inactive gradient
    /// within its bound, so it is then the exact minimizer. Coordinate
    /// descent crawls on nearly collinear supports; this finishes the job.
    fn exact_active_solve(&self, lambda: f64, w: &[f64], sum_w: f64, r: &mut [f64], st: &mut State) -> bool {
        let n = self.design.n() as f64;
        let p = self.design.p();
        let active: Vec<usize> = (0..p).filter(|&j| st.beta[j] != 0.0).collect();
        let off = usize::from(self.family.has_intercept());
        let k = active.len() + off;
        if k == 0 || k >= self.design.n() {
            return false;
        }
        let cols: Vec<&[f64]> = active.iter().map(|&j| self.design.col(j)).collect();
        let wx: Vec<Vec<f64>> = cols.iter().map(|x| x.iter().zip(w).map(|(a, b)| a * b).collect()).collect();
        let mut g = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        if off == 1 {
            g[(0, 0)] = sum_w / n;
            rhs[0] = dot(w, r) / n;
            for (a, wxa) in wx.iter().enumerate() {
                let v = wxa.iter().sum::<f64>() / n;
                g[(0, a + 1)] = v;
                g[(a + 1, 0)] = v;
            }
        }
        for (a, &j) in active.iter().enumerate() {
            rhs[a + off] = dot(&wx[a], r) / n - lambda * self.design.penalty_factor[j] * st.beta[j].signum();
            for b in 0..=a {
                let v = dot(&wx[a], cols[b]) / n;
                g[(a + off, b + off)] = v;
                g[(b + off, a + off)] = v;
            }
        }
        let Some(chol) = g.cholesky() else {
            return false;
        };
        let step = chol.solve(&rhs);
        if !step.iter().all(|v| v.is_finite()) {
            return false;
        }
        let signs_hold = active.iter().enumerate().all(|(a, &j)| {
            let new = st.beta[j] + step[a + off];
            self.design.penalty_factor[j] == 0.0 || new.signum() == st.beta[j].signum() && new != 0.0
        });
        if !signs_hold {
            return false;
        }
        let mut r_new = r.to_vec();
        if off == 1 {
            r_new.iter_mut().for_each(|v| *v -= step[0]);
        }
        for (a, x) in cols.iter().enumerate() {
            let d = step[a + off];
            for (ri, xi) in r_new.iter_mut().zip(*x) {
                *ri -= xi * d;
            }
        }
        let wr: Vec<f64> = r_new.iter().zip(w).map(|(a, b)| a * b).collect();
        let bounded = (0..p)
            .filter(|&j| st.beta[j] == 0.0)
            .all(|j| (dot(self.design.col(j), &wr) / n).abs() <= lambda * self.design.penalty_factor[j]);
        if !bounded {
            return false;
        }
        if off == 1 {
            st.intercept += step[0];
        }
        for (a, &j) in active.iter().enumerate() {
            st.beta[j] += step[a + off];
        }
        r.copy_from_slice(&r_new);
        true
    }
}

fn surrogate_objective(w: &[f64], r: &[f64], n: f64, design: &StandardizedDesign, beta: &[f64], lambda: f64) -> f64 {
    let fit: f64 = w.iter().zip(r).map(|(w, r)| w * r * r).sum::<f64>() / (2.0 * n);
    if lambda.is_finite() {
        fit + penalty(design, beta, lambda)
    } else {
        fit
    }
}

fn max_change(a: &State, b: &State) -> f64 {
    a.beta
        .iter()
        .zip(&b.beta)
        .fold((a.intercept - b.intercept).abs(), |m, (x, y)| m.max((x - y).abs()))
}

fn gradient(design: &StandardizedDesign, score: &[f64]) -> Vec<f64> {
    let n = design.n() as f64;
    (0..design.p()).map(|j| dot(design.col(j), score) / n).collect()
}

/// Smallest λ at which every penalized coefficient is zero:
/// `maxⱼ |xⱼᵀ score⁰| / n` at the null (intercept and adjusters only) fit.
pub fn lambda_max(data: &Dataset, family: Family) -> Result<f64> {
    if data.design.penalized().next().is_none() {
        return Err(MfdrError::EmptyPenalizedSet);
    }
    let prob = Problem::new(data, family, SolverOptions { tol: 1e-10, ..SolverOptions::default() })?;
    let (st, _) = prob.null_fit();
    let work = prob.lik.working(&prob.eta(&st));
    let g = gradient(&data.design, &work.score);
    let lmax = data.design.penalized().map(|j| g[j].abs()).fold(0.0, f64::max);
    if !(lmax > DEGENERATE_LAMBDA_FLOOR) {
        return Err(MfdrError::DegenerateNull(lmax));
    }
    Ok(lmax)
}

/// Log-linear grid from `lambda_max` down to `lambda_max · min_ratio`.
pub fn lambda_grid(data: &Dataset, family: Family, length: usize, min_ratio: f64) -> Result<LambdaGrid> {
    if length < 2 {
        return Err(MfdrError::InvalidGrid(format!("length must be at least 2, got {length}")));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(MfdrError::InvalidGrid(format!("min_ratio must lie in (0, 1), got {min_ratio}")));
    }
    let lmax = lambda_max(data, family)?;
    let step = min_ratio.ln() / (length - 1) as f64;
    let mut values: Vec<f64> = (0..length).map(|l| lmax * (step * l as f64).exp()).collect();
    values[0] = lmax;
    Ok(LambdaGrid { values, lambda_max: lmax, lambda_min_ratio: min_ratio })
}

/// Grid with the default length and ratio for this dataset's shape.
pub fn default_grid(data: &Dataset, family: Family) -> Result<LambdaGrid> {
    lambda_grid(data, family, DEFAULT_GRID_LENGTH, default_min_ratio(data.n(), data.p()))
}

/// Fits the lasso path over `grid`, warm-starting each point from the previous one.
pub fn fit_path(data: &Dataset, family: Family, grid: &LambdaGrid, opts: SolverOptions) -> Result<PathFit> {
    let prob = Problem::new(data, family, opts)?;
    let (null, null_lmax) = {
        let tight = Problem::new(data, family, SolverOptions { tol: 1e-10, ..opts })?;
        let (st, _) = tight.null_fit();
        let g = gradient(&data.design, &tight.lik.working(&tight.eta(&st)).score);
        let lmax = data.design.penalized().map(|j| g[j].abs()).fold(0.0, f64::max);
        (st, lmax)
    };
    let mut st = null.clone();
    let len = grid.len();
    let mut fit = PathFit {
        family,
        grid: grid.clone(),
        beta: Vec::with_capacity(len),
        intercepts: Vec::with_capacity(len),
        df: Vec::with_capacity(len),
        loss: Vec::with_capacity(len),
        converged: Vec::with_capacity(len),
        iterations: Vec::with_capacity(len),
        separation: Vec::with_capacity(len),
        weights: Vec::new(),
    };
    for &lambda in grid.values() {
        // at or above this dataset's lambda_max the solution is the null fit
        let info = if lambda >= null_lmax {
            st = null.clone();
            StepInfo { converged: true, sweeps: 0, separation: false }
        } else {
            prob.solve(lambda, &mut st)
        };
        let eta = prob.eta(&st);
        let work = prob.lik.working(&eta);
        fit.df.push(st.beta.iter().filter(|b| **b != 0.0).count());
        fit.beta.push(st.beta.clone());
        fit.intercepts.push(st.intercept);
        fit.loss.push(work.loss);
        fit.converged.push(info.converged);
        fit.iterations.push(info.sweeps);
        fit.separation.push(info.separation);
        if family != Family::Linear {
            fit.weights.push(work.weights);
        }
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KktViolationKind {
    /// Active coefficient whose gradient differs from `λ·sign(β)`.
    Stationarity,
    /// Inactive coefficient whose gradient exceeds λ.
    Subgradient,
    /// Unpenalized coefficient or intercept with nonzero gradient.
    Unpenalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktViolation {
    /// Feature index; `None` for the intercept.
    pub feature: Option<usize>,
    pub gradient: f64,
    pub excess: f64,
    pub kind: KktViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub lambda: f64,
    /// `(1/n) xⱼᵀ W r` for every feature.
    pub gradient: Vec<f64>,
    pub violations: Vec<KktViolation>,
}

impl KktReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits the lasso optimality conditions at one solution.
///
/// With `W r = score`, active features need `|(1/n)xⱼᵀWr − λ·sign(βⱼ)| ≤ tol`
/// and inactive ones `(1/n)|xⱼᵀWr| ≤ λ + tol`.
pub fn kkt_check(
    data: &Dataset,
    family: Family,
    beta: &[f64],
    intercept: f64,
    lambda: f64,
    tol: f64,
) -> Result<KktReport> {
    if beta.len() != data.p() {
        return Err(MfdrError::DimensionMismatch(format!("{} coefficients for {} columns", beta.len(), data.p())));
    }
    let lik = Likelihood::new(family, &data.response)?;
    let mut eta = data.design.linear_predictor(beta);
    eta.iter_mut().for_each(|e| *e += intercept);
    let work = lik.working(&eta);
    let g = gradient(&data.design, &work.score);
    let mut violations = Vec::new();
    if family.has_intercept() {
        let g0 = work.score.iter().sum::<f64>() / data.n() as f64;
        if g0.abs() > tol {
            violations.push(KktViolation { feature: None, gradient: g0, excess: g0.abs() - tol, kind: KktViolationKind::Unpenalized });
        }
    }
    for (j, &gj) in g.iter().enumerate() {
        let pf = data.design.penalty_factor[j];
        let (excess, kind) = if pf == 0.0 {
            (gj.abs() - tol, KktViolationKind::Unpenalized)
        } else if beta[j] != 0.0 {
            ((gj - lambda * pf * beta[j].signum()).abs() - tol, KktViolationKind::Stationarity)
        } else {
            (gj.abs() - lambda * pf - tol, KktViolationKind::Subgradient)
        };
        if excess > 0.0 {
            violations.push(KktViolation { feature: Some(j), gradient: gj, excess, kind });
        }
    }
    Ok(KktReport { lambda, gradient: g, violations })
}
