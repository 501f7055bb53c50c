//! Oracle check that the average mfdr of a lasso model's selections equals
//! its marginal false discovery rate when π₀, σ and the effect distribution
//! are known.
//!
//! With an orthonormal design (`XᵀX = nI`) the lasso selects feature j
//! exactly when `|cⱼ| > λ`, `cⱼ = xⱼᵀy/n ~ N(βⱼ, σ²/n)`. Null effects occur
//! with probability π₀; the others are drawn from `N(0, effect_sd²)`, so
//! `z = cⱼ√n/σ` has density `π₀φ(z) + (1 − π₀)φ(z; 0, 1 + n·effect_sd²/σ²)`.

use ndarray::{Array2, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MfdrError, Result};
use crate::stats::{norm_logpdf, norm_logpdf_sd};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    /// Pooled average oracle mfdr over all selections.
    pub avg_mfdr_selected: f64,
    /// Pooled fraction of selections that are null.
    pub empirical_mfdr: f64,
    pub selections: usize,
    pub replicates: usize,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `n × p` matrix with orthogonal columns of squared norm `n`
/// (modified Gram–Schmidt on Gaussian draws).
pub fn orthogonal_design(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    if p > n {
        return Err(MfdrError::InvalidScenario(format!("orthogonal design needs p ≤ n, got p={p}, n={n}")));
    }
    let mut x = Array2::<f64>::zeros((n, p).f());
    x.iter_mut().for_each(|v| *v = normal(rng));
    let scale = (n as f64).sqrt();
    for j in 0..p {
        for k in 0..j {
            let d = x.column(j).dot(&x.column(k)) / n as f64;
            let ck = x.column(k).to_owned();
            x.column_mut(j).scaled_add(-d, &ck);
        }
        let norm = x.column(j).dot(&x.column(j)).sqrt();
        x.column_mut(j).mapv_inplace(|v| v * scale / norm);
    }
    Ok(x)
}

/// Oracle `π₀φ(z)/f(z)`.
pub fn oracle_mfdr(z: f64, pi0: f64, alt_sd: f64) -> f64 {
    if pi0 <= 0.0 {
        return 0.0;
    }
    if pi0 >= 1.0 {
        return 1.0;
    }
    let l0 = pi0.ln() + norm_logpdf(z);
    let l1 = (1.0 - pi0).ln() + norm_logpdf_sd(z, alt_sd);
    let m = l0.max(l1);
    (l0 - m).exp() / ((l0 - m).exp() + (l1 - m).exp())
}

#[allow(clippy::too_many_arguments)]
pub fn verify_theorem1(
    n: usize,
    p: usize,
    pi0: f64,
    sigma: f64,
    effect_sd: f64,
    lambda: f64,
    replicates: usize,
    seed: u64,
) -> Result<Theorem1Report> {
    if replicates == 0 {
        return Err(MfdrError::RequiresReplicates);
    }
    if !(0.0..=1.0).contains(&pi0) || !(sigma > 0.0) || !(effect_sd >= 0.0) || !(lambda >= 0.0) {
        return Err(MfdrError::InvalidScenario("need π₀ in [0, 1], σ > 0, effect_sd ≥ 0, λ ≥ 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = orthogonal_design(n, p, &mut rng)?;
    let nf = n as f64;
    let alt_sd = (1.0 + nf * effect_sd * effect_sd / (sigma * sigma)).sqrt();
    let mut selections = 0usize;
    let mut null_selections = 0usize;
    let mut mfdr_sum = 0.0;
    let mut beta = vec![0.0; p];
    let mut null = vec![false; p];
    for _ in 0..replicates {
        for j in 0..p {
            null[j] = rng.random::<f64>() < pi0;
            beta[j] = if null[j] { 0.0 } else { effect_sd * normal(&mut rng) };
        }
        let mut y: Vec<f64> = (0..n).map(|_| sigma * normal(&mut rng)).collect();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (yi, xi) in y.iter_mut().zip(x.column(j)) {
                    *yi += b * xi;
                }
            }
        }
        for j in 0..p {
            let c = x.column(j).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / nf;
            if c.abs() > lambda {
                selections += 1;
                null_selections += usize::from(null[j]);
                mfdr_sum += oracle_mfdr(c * nf.sqrt() / sigma, pi0, alt_sd);
            }
        }
    }
    if selections == 0 {
        return Err(MfdrError::NoSelections);
    }
    Ok(Theorem1Report {
        avg_mfdr_selected: mfdr_sum / selections as f64,
        empirical_mfdr: null_selections as f64 / selections as f64,
        selections,
        replicates,
    })
}
