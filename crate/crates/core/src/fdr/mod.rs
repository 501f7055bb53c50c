//! Local false discovery rates from a vector of z statistics.

mod density;
mod mixture;
mod table;
mod univariate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use density::{mfdr_density, silverman_bandwidth, DensityEstimate};
pub use mixture::{fit_mixture_em, mfdr_mixture, GridSpec, MixtureModel, DEFAULT_NULL_WEIGHT, EM_MAX_ITER, EM_TOL};
pub use table::{aggregate_fdr, Estimator, FdrRecord, FdrTable};
pub use univariate::{univariate_z, UnivariateZ, Z_CAP};


use crate::error::Result;

/// Estimator requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdrMethod {
    #[default]
    Mixture,
    Density,
}

impl FromStr for FdrMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mixture" => Ok(FdrMethod::Mixture),
            "density" => Ok(FdrMethod::Density),
            other => Err(format!("unknown estimator '{other}'")),
        }
    }
}

impl fmt::Display for FdrMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FdrMethod::Mixture => "mixture",
            FdrMethod::Density => "density",
        })
    }
}

/// mfdr of every statistic in `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdrEstimate {
    pub mfdr: Vec<f64>,
    pub pi0_hat: f64,
    pub estimator: Estimator,
}

/// Applies `method` to `z`. A failed mixture fit falls back to the density method.
pub fn estimate_fdr(z: &[f64], method: FdrMethod) -> Result<FdrEstimate> {
    let density = || -> Result<FdrEstimate> {
        let d = DensityEstimate::new(z)?;
        Ok(FdrEstimate { mfdr: z.iter().map(|&v| d.mfdr(v)).collect(), pi0_hat: 1.0, estimator: Estimator::Density })
    };
    match method {
        FdrMethod::Density => density(),
        FdrMethod::Mixture => match fit_mixture_em(z, &GridSpec::default()) {
            Ok(m) => Ok(FdrEstimate {
                mfdr: z.iter().map(|&v| m.mfdr(v)).collect(),
                pi0_hat: m.pi0,
                estimator: Estimator::Mixture,
            }),
            Err(e) => density().map_err(|_| e),
        },
    }
}
