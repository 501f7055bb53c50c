//! Gaussian kernel density estimate of the marginal z density.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fdr::mixture::{check_statistics, log_sum_exp};
use crate::stats::{self, norm_logpdf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub bandwidth: f64,
    pub sample: Vec<f64>,
}

/// Silverman's rule `0.9·min(sd, IQR/1.34)·m^(−1/5)`. Falls back to the sd
/// when the IQR is zero, and to 1 when the sample is constant.
pub fn silverman_bandwidth(z: &[f64]) -> f64 {
    let sd = stats::sd(z);
    let iqr = stats::quantile(z, 0.75) - stats::quantile(z, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        _ => 1.0,
    };
    0.9 * spread * (z.len() as f64).powf(-0.2)
}

impl DensityEstimate {
    pub fn new(z: &[f64]) -> Result<Self> {
        check_statistics(z)?;
        Ok(DensityEstimate { bandwidth: silverman_bandwidth(z), sample: z.to_vec() })
    }

    pub fn with_bandwidth(z: &[f64], bandwidth: f64) -> Result<Self> {
        check_statistics(z)?;
        Ok(DensityEstimate { bandwidth, sample: z.to_vec() })
    }

    pub fn log_evaluate(&self, z: f64) -> f64 {
        let h = self.bandwidth;
        let terms: Vec<f64> = self.sample.iter().map(|&zi| norm_logpdf((z - zi) / h)).collect();
        log_sum_exp(&terms) - (self.sample.len() as f64 * h).ln()
    }

    pub fn evaluate(&self, z: f64) -> f64 {
        self.log_evaluate(z).exp()
    }

    /// `min(1, φ(z)/f̂(z))`.
    pub fn mfdr(&self, z: f64) -> f64 {
        (norm_logpdf(z) - self.log_evaluate(z)).exp().min(1.0)
    }
}

/// Density-method mfdr of `z` against the sample `z_all`.
pub fn mfdr_density(z_all: &[f64], z: f64) -> Result<f64> {
    Ok(DensityEstimate::new(z_all)?.mfdr(z))
}
