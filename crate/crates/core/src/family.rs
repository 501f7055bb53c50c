//! Likelihoods for the three supported families, expressed through the
//! linear predictor η.
//!
//! For every family the solver needs the loss `−ℓ(η)/n`, the score
//! `∂ℓ/∂ηᵢ` and a diagonal weight `Wᵢ` (the diagonal of `−∂²ℓ/∂η²`). The
//! pseudo-response of the quadratic approximation is then
//! `ỹ = η + W⁻¹·score`, so `W(ỹ − η) = score` exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::ResponseKind;
use crate::error::{MfdrError, Result};

/// Lower bound applied to IRLS weights.
pub const WEIGHT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Logistic,
    Cox,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Logistic => "logistic",
            Family::Cox => "cox",
        }
    }

    /// Cox models have no intercept; the partial likelihood is shift invariant.
    pub fn has_intercept(self) -> bool {
        !matches!(self, Family::Cox)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "gaussian" => Ok(Family::Linear),
            "logistic" | "binomial" => Ok(Family::Logistic),
            "cox" => Ok(Family::Cox),
            other => Err(format!("unknown family '{other}'")),
        }
    }
}

/// Score, weights and loss evaluated at one linear predictor.
#[derive(Debug, Clone)]
pub struct Working {
    pub score: Vec<f64>,
    pub weights: Vec<f64>,
    pub loss: f64,
}

/// Sort order and tie groups of survival times (ascending).
#[derive(Debug, Clone)]
struct RiskSets {
    order: Vec<usize>,
    /// `[start, end)` ranges into `order` sharing one event time.
    groups: Vec<(usize, usize)>,
    /// Number of events in each group.
    events: Vec<f64>,
}

impl RiskSets {
    fn new(time: &[f64], status: &[bool]) -> Self {
        let mut order: Vec<usize> = (0..time.len()).collect();
        order.sort_by(|&a, &b| time[a].total_cmp(&time[b]).then(a.cmp(&b)));
        let mut groups = Vec::new();
        let mut events = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let t = time[order[start]];
            let mut end = start;
            let mut d = 0.0;
            while end < order.len() && time[order[end]] == t {
                if status[order[end]] {
                    d += 1.0;
                }
                end += 1;
            }
            groups.push((start, end));
            events.push(d);
            start = end;
        }
        RiskSets { order, groups, events }
    }

    /// Risk-set sums of `exp(η − shift)` per tie group (Breslow).
    fn risk_sums(&self, w: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.groups.len()];
        let mut acc = 0.0;
        for (g, &(s, e)) in self.groups.iter().enumerate().rev() {
            acc += self.order[s..e].iter().map(|&i| w[i]).sum::<f64>();
            sums[g] = acc;
        }
        sums
    }

    fn loglik(&self, eta: &[f64], status: &[bool]) -> f64 {
        let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();
        let sums = self.risk_sums(&w);
        let mut ll: f64 = eta.iter().zip(status).filter(|(_, &s)| s).map(|(e, _)| e).sum();
        for (g, &d) in self.events.iter().enumerate() {
            if d > 0.0 {
                ll -= d * (sums[g].ln() + shift);
            }
        }
        ll
    }

    fn working(&self, eta: &[f64], status: &[bool]) -> Working {
        let n = eta.len();
        let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();
        let sums = self.risk_sums(&w);
        let mut score = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut a = 0.0;
        let mut b = 0.0;
        let mut ll: f64 = 0.0;
        for (g, &(s, e)) in self.groups.iter().enumerate() {
            let d = self.events[g];
            if d > 0.0 {
                a += d / sums[g];
                b += d / (sums[g] * sums[g]);
                ll -= d * (sums[g].ln() + shift);
            }
            for &i in &self.order[s..e] {
                let delta = if status[i] { 1.0 } else { 0.0 };
                ll += delta * eta[i];
                score[i] = delta - w[i] * a;
                weights[i] = (w[i] * a - w[i] * w[i] * b).max(WEIGHT_FLOOR);
            }
        }
        Working { score, weights, loss: -ll / n as f64 }
    }

    /// Score vector and observed information of the Breslow partial
    /// likelihood for coefficients on the columns `cols`, at linear predictor `eta`.
    fn score_information(&self, eta: &[f64], status: &[bool], cols: &[&[f64]]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = cols.len();
        let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; d];
        let mut s2 = vec![vec![0.0; d]; d];
        let mut score = vec![0.0; d];
        let mut info = vec![vec![0.0; d]; d];
        for (g, &(s, e)) in self.groups.iter().enumerate().rev() {
            for &i in &self.order[s..e] {
                s0 += w[i];
                for a in 0..d {
                    let xa = cols[a][i];
                    s1[a] += w[i] * xa;
                    for b in 0..=a {
                        s2[a][b] += w[i] * xa * cols[b][i];
                    }
                }
            }
            let dg = self.events[g];
            if dg == 0.0 {
                continue;
            }
            for &i in &self.order[s..e] {
                if status[i] {
                    for a in 0..d {
                        score[a] += cols[a][i];
                    }
                }
            }
            for a in 0..d {
                score[a] -= dg * s1[a] / s0;
                for b in 0..=a {
                    let v = dg * (s2[a][b] / s0 - s1[a] * s1[b] / (s0 * s0));
                    info[a][b] += v;
                    if a != b {
                        info[b][a] += v;
                    }
                }
            }
        }
        (score, info)
    }
}

/// A response bound to its family, with any precomputation (Cox risk sets).
#[derive(Debug, Clone)]
pub struct Likelihood<'a> {
    family: Family,
    kind: Kind<'a>,
}

#[derive(Debug, Clone)]
enum Kind<'a> {
    Gaussian(&'a [f64]),
    Binomial(&'a [f64]),
    Cox { status: &'a [bool], risk: RiskSets },
}

impl<'a> Likelihood<'a> {
    pub fn new(family: Family, response: &'a ResponseKind) -> Result<Self> {
        let kind = match (family, response) {
            (Family::Linear, ResponseKind::Continuous(y)) => Kind::Gaussian(y),
            (Family::Logistic, ResponseKind::Binary(y)) => Kind::Binomial(y),
            (Family::Cox, ResponseKind::Survival { time, status }) => {
                if !status.iter().any(|&s| s) {
                    return Err(MfdrError::InvalidResponse("no events in survival response".into()));
                }
                Kind::Cox { status, risk: RiskSets::new(time, status) }
            }
            _ => return Err(MfdrError::FamilyMismatch { family: family.name() }),
        };
        Ok(Likelihood { family, kind })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        match &self.kind {
            Kind::Gaussian(y) | Kind::Binomial(y) => y.len(),
            Kind::Cox { status, .. } => status.len(),
        }
    }

    /// `−ℓ(η)/n`; for the linear family this is `RSS/(2n)`.
    pub fn loss(&self, eta: &[f64]) -> f64 {
        let n = self.n() as f64;
        match &self.kind {
            Kind::Gaussian(y) => y.iter().zip(eta).map(|(y, e)| (y - e).powi(2)).sum::<f64>() / (2.0 * n),
            Kind::Binomial(y) => {
                y.iter().zip(eta).map(|(&y, &e)| log1p_exp(e) - y * e).sum::<f64>() / n
            }
            Kind::Cox { status, risk } => -risk.loglik(eta, status) / n,
        }
    }

    /// The response vector when the family is Gaussian.
    pub fn gaussian_response(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Gaussian(y) => Some(y),
            _ => None,
        }
    }

    pub fn working(&self, eta: &[f64]) -> Working {
        match &self.kind {
            Kind::Gaussian(y) => Working {
                score: y.iter().zip(eta).map(|(y, e)| y - e).collect(),
                weights: vec![1.0; y.len()],
                loss: self.loss(eta),
            },
            Kind::Binomial(y) => {
                let mut score = Vec::with_capacity(y.len());
                let mut weights = Vec::with_capacity(y.len());
                for (&yi, &e) in y.iter().zip(eta) {
                    let mu = sigmoid(e);
                    score.push(yi - mu);
                    weights.push((mu * (1.0 - mu)).max(WEIGHT_FLOOR));
                }
                Working { score, weights, loss: self.loss(eta) }
            }
            Kind::Cox { status, risk } => risk.working(eta, status),
        }
    }

    /// Per-observation deviance contributions for the families where they
    /// exist (squared error and binomial deviance). `None` for Cox.
    pub fn pointwise_deviance(&self, eta: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Gaussian(y) => Some(y.iter().zip(eta).map(|(y, e)| (y - e).powi(2)).collect()),
            Kind::Binomial(y) => Some(
                y.iter()
                    .zip(eta)
                    .map(|(&y, &e)| 2.0 * (log1p_exp(e) - y * e))
                    .collect(),
            ),
            Kind::Cox { .. } => None,
        }
    }

    /// Log partial likelihood (Cox) or log-likelihood up to constants.
    pub fn loglik(&self, eta: &[f64]) -> f64 {
        -self.loss(eta) * self.n() as f64
    }

    /// Cox only: partial-likelihood score and information for the
    /// coefficients of `cols` at `eta`.
    pub(crate) fn cox_score_information(&self, eta: &[f64], cols: &[&[f64]]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        match &self.kind {
            Kind::Cox { status, risk } => Some(risk.score_information(eta, status, cols)),
            _ => None,
        }
    }

    pub fn event_count(&self) -> usize {
        match &self.kind {
            Kind::Cox { status, .. } => status.iter().filter(|&&s| s).count(),
            _ => self.n(),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eˣ)` without overflow.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
