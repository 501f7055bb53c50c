//! Scenario descriptions and data generation.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ResponseKind};
use crate::error::{MfdrError, Result};
use crate::family::{sigmoid, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioName {
    AssumptionsMet,
    AssumptionsViolated,
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioName::AssumptionsMet => "met",
            ScenarioName::AssumptionsViolated => "violated",
        })
    }
}

impl FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "met" | "assumptionsmet" => Ok(ScenarioName::AssumptionsMet),
            "violated" | "assumptionsviolated" => Ok(ScenarioName::AssumptionsViolated),
            other => Err(format!("unknown scenario '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Correlation {
    Independent,
    /// `n_causal` iid causal columns, each followed (as a block after all
    /// causal columns) by `per_causal_correlated` columns with correlation
    /// `rho` to it; the remaining columns form an AR(1) chain with
    /// parameter `noise_ar`.
    Structured { n_causal: usize, per_causal_correlated: usize, rho: f64, noise_ar: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub beta: Vec<f64>,
    pub correlation: Correlation,
    /// Target censored fraction (Cox only).
    pub censoring_rate: f64,
    /// Noise standard deviation (linear only).
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureClass {
    /// Causal.
    A,
    /// Correlated with a causal feature, no direct effect.
    B,
    /// Noise.
    C,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureTruth {
    pub labels: Vec<FeatureClass>,
}

impl FeatureTruth {
    /// Counts of (A, B, C).
    pub fn counts(&self) -> (usize, usize, usize) {
        let c = |k| self.labels.iter().filter(|&&l| l == k).count();
        (c(FeatureClass::A), c(FeatureClass::B), c(FeatureClass::C))
    }
}

const MET_N: usize = 1000;
const VIOLATED_N: usize = 200;
const P: usize = 600;
const MET_SIGNALS: usize = 60;

impl ScenarioSpec {
    /// iid covariates, 60 equal effects among 600 features, n = 1000.
    pub fn assumptions_met(family: Family, seed: u64) -> Self {
        let size = match family {
            Family::Linear => 4.0,
            Family::Logistic | Family::Cox => 0.15,
        };
        let beta = (0..P).map(|j| if j < MET_SIGNALS { size } else { 0.0 }).collect();
        ScenarioSpec {
            name: ScenarioName::AssumptionsMet,
            family,
            n: MET_N,
            p: P,
            beta,
            correlation: Correlation::Independent,
            censoring_rate: 0.1,
            sigma: (MET_N as f64).sqrt(),
            seed,
        }
    }

    /// 6 causal, 54 correlated and 540 AR(1) noise features, n = 200.
    pub fn assumptions_violated(family: Family, seed: u64) -> Self {
        let effects: [f64; 6] = match family {
            Family::Linear => [6.0, -6.0, 5.0, -5.0, 4.0, -4.0],
            Family::Logistic => [1.1, -1.1, 1.0, -1.0, 0.9, -0.9],
            Family::Cox => [0.6, -0.6, 0.5, -0.5, 0.4, -0.4],
        };
        let mut beta = vec![0.0; P];
        beta[..6].copy_from_slice(&effects);
        ScenarioSpec {
            name: ScenarioName::AssumptionsViolated,
            family,
            n: VIOLATED_N,
            p: P,
            beta,
            correlation: Correlation::Structured { n_causal: 6, per_causal_correlated: 9, rho: 0.5, noise_ar: 0.8 },
            censoring_rate: 0.1,
            sigma: (VIOLATED_N as f64).sqrt(),
            seed,
        }
    }

    pub fn standard(name: ScenarioName, family: Family, seed: u64) -> Self {
        match name {
            ScenarioName::AssumptionsMet => Self::assumptions_met(family, seed),
            ScenarioName::AssumptionsViolated => Self::assumptions_violated(family, seed),
        }
    }

    /// Same design with `n` observations (σ stays at its configured value).
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MfdrError::InvalidScenario(m));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.beta.len() != self.p {
            return bad(format!("beta has length {} but p = {}", self.beta.len(), self.p));
        }
        if let Correlation::Structured { n_causal, per_causal_correlated, rho, noise_ar } = self.correlation {
            if n_causal * (1 + per_causal_correlated) > self.p {
                return bad("structured blocks do not fit in p columns".into());
            }
            if !(rho.abs() <= 1.0 && noise_ar.abs() < 1.0) {
                return bad("correlations must lie in [-1, 1] and the AR parameter in (-1, 1)".into());
            }
        }
        if self.family == Family::Cox && !(0.0..1.0).contains(&self.censoring_rate) {
            return bad(format!("censoring rate must lie in [0, 1), got {}", self.censoring_rate));
        }
        if self.family == Family::Linear && !(self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        Ok(())
    }

    pub fn truth(&self) -> FeatureTruth {
        let labels = match self.correlation {
            Correlation::Independent => self
                .beta
                .iter()
                .map(|&b| if b != 0.0 { FeatureClass::A } else { FeatureClass::C })
                .collect(),
            Correlation::Structured { n_causal, per_causal_correlated, .. } => {
                let nb = n_causal * per_causal_correlated;
                (0..self.p)
                    .map(|j| {
                        if j < n_causal {
                            FeatureClass::A
                        } else if j < n_causal + nb {
                            FeatureClass::B
                        } else {
                            FeatureClass::C
                        }
                    })
                    .collect()
            }
        };
        FeatureTruth { labels }
    }

    /// Generator for replicate `replicate`: the scenario seed selects the key,
    /// the replicate index the stream.
    pub fn replicate_rng(&self, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate);
        rng
    }
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Raw (unstandardized) covariates for `spec`.
pub fn generate_design(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (n, p) = (spec.n, spec.p);
    let mut x = Array2::<f64>::zeros((n, p).f());
    match spec.correlation {
        Correlation::Independent => x.iter_mut().for_each(|v| *v = std_normal(rng)),
        Correlation::Structured { n_causal, per_causal_correlated, rho, noise_ar } => {
            for j in 0..n_causal {
                x.column_mut(j).iter_mut().for_each(|v| *v = std_normal(rng));
            }
            let b_scale = (1.0 - rho * rho).sqrt();
            for k in 0..n_causal {
                for m in 0..per_causal_correlated {
                    let j = n_causal + k * per_causal_correlated + m;
                    for i in 0..n {
                        x[[i, j]] = rho * x[[i, k]] + b_scale * std_normal(rng);
                    }
                }
            }
            let start = n_causal * (1 + per_causal_correlated);
            let ar_scale = (1.0 - noise_ar * noise_ar).sqrt();
            for j in start..p {
                for i in 0..n {
                    let e = std_normal(rng);
                    x[[i, j]] = if j == start { e } else { noise_ar * x[[i, j - 1]] + ar_scale * e };
                }
            }
        }
    }
    x
}

/// Rate `c` of exponential censoring with `mean(c / (c + hᵢ)) = target`.
pub fn censoring_rate_for(hazards: &[f64], target: f64) -> f64 {
    let frac = |c: f64| hazards.iter().map(|h| c / (c + h)).sum::<f64>() / hazards.len() as f64;
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frac(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// One draw of `spec` from `rng`.
pub fn generate_with(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<(Dataset, FeatureTruth)> {
    spec.validate()?;
    let x = generate_design(spec, rng);
    let eta: Vec<f64> = (0..spec.n)
        .map(|i| spec.beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, b)| x[[i, j]] * b).sum())
        .collect();
    let response = match spec.family {
        Family::Linear => ResponseKind::continuous(eta.iter().map(|e| e + spec.sigma * std_normal(rng)).collect())?,
        Family::Logistic => ResponseKind::binary(
            eta.iter().map(|&e| if rng.random::<f64>() < sigmoid(e) { 1.0 } else { 0.0 }).collect(),
        )?,
        Family::Cox => {
            let hazards: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
            let c = (spec.censoring_rate > 0.0).then(|| censoring_rate_for(&hazards, spec.censoring_rate));
            let mut time = Vec::with_capacity(spec.n);
            let mut status = Vec::with_capacity(spec.n);
            for h in hazards {
                let t: f64 = Exp::new(h).expect("positive hazard").sample(rng);
                let cens = c.map_or(f64::INFINITY, |c| Exp::new(c).expect("positive rate").sample(rng));
                time.push(t.min(cens).max(f64::MIN_POSITIVE));
                status.push(t <= cens);
            }
            ResponseKind::survival(time, status)?
        }
    };
    Ok((Dataset::from_raw(x.view(), response)?, spec.truth()))
}

/// Replicate 0 of `spec`.
pub fn generate(spec: &ScenarioSpec) -> Result<(Dataset, FeatureTruth)> {
    generate_with(spec, &mut spec.replicate_rng(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let ma = crate::stats::mean(a);
        let mb = crate::stats::mean(b);
        let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn violated_correlations() {
        let spec = ScenarioSpec::assumptions_violated(Family::Linear, 42);
        let x = generate_design(&spec, &mut spec.replicate_rng(0));
        let col = |j: usize| x.column(j).to_vec();
        for k in 0..6 {
            let rs: Vec<f64> = (0..9).map(|m| corr(&col(k), &col(6 + 9 * k + m))).collect();
            assert!(rs.iter().all(|r| (r - 0.5).abs() < 0.2), "causal {k}: {rs:?}");
            assert!((crate::stats::mean(&rs) - 0.5).abs() < 0.07, "causal {k}: {rs:?}");
        }
        let mut mean_r = 0.0;
        for j in 60..599 {
            mean_r += corr(&col(j), &col(j + 1));
        }
        mean_r /= 539.0;
        assert!((mean_r - 0.8).abs() < 0.07);
    }

    #[test]
    fn met_columns_are_nearly_uncorrelated() {
        let spec = ScenarioSpec::assumptions_met(Family::Linear, 1);
        let x = generate_design(&spec, &mut spec.replicate_rng(0));
        for j in 0..20 {
            let c = x.column(j).to_vec();
            assert!(crate::stats::mean(&c).abs() < 0.15);
            for k in (j + 1)..20 {
                assert!(corr(&c, &x.column(k).to_vec()).abs() < 0.15);
            }
        }
    }

    #[test]
    fn truth_counts() {
        assert_eq!(ScenarioSpec::assumptions_violated(Family::Cox, 0).truth().counts(), (6, 54, 540));
        assert_eq!(ScenarioSpec::assumptions_met(Family::Logistic, 0).truth().counts(), (60, 0, 540));
    }

    #[test]
    fn censoring_fraction_near_target() {
        let spec = ScenarioSpec::assumptions_violated(Family::Cox, 3);
        let mut total = 0.0;
        for r in 0..10 {
            let (d, _) = generate_with(&spec, &mut spec.replicate_rng(r)).unwrap();
            let ResponseKind::Survival { status, .. } = &d.response else { unreachable!() };
            total += status.iter().filter(|s| !**s).count() as f64 / status.len() as f64;
        }
        assert!((total / 10.0 - 0.10).abs() < 0.03, "{}", total / 10.0);
        let h = [0.5, 1.0, 2.0];
        let c = censoring_rate_for(&h, 0.25);
        let f: f64 = h.iter().map(|h| c / (c + h)).sum::<f64>() / 3.0;
        assert!((f - 0.25).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ScenarioSpec::assumptions_violated(Family::Logistic, 9);
        let (a, _) = generate(&spec).unwrap();
        let (b, _) = generate(&spec).unwrap();
        assert_eq!(a.design, b.design);
        assert_eq!(a.response, b.response);
        let (c, _) = generate_with(&spec, &mut spec.replicate_rng(1)).unwrap();
        assert_ne!(a.response, c.response);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = ScenarioSpec::assumptions_met(Family::Linear, 0);
        s.p = 10;
        assert!(matches!(s.validate(), Err(MfdrError::InvalidScenario(_))));
        let mut s = ScenarioSpec::assumptions_violated(Family::Linear, 0);
        s.p = 30;
        s.beta.truncate(30);
        assert!(s.validate().is_err());
        assert_eq!("Assumptions-Violated".parse::<ScenarioName>().unwrap(), ScenarioName::AssumptionsViolated);
    }
}
