//! Lasso regularization paths for linear, logistic and Cox regression, with
//! a local marginal false discovery rate (mfdr) for every feature at every
//! penalty level.
//!
//! The pipeline is:
//!
//! 1. [`data`]: standardize the design and bind it to a response.
//! 2. [`solver`]: fit the lasso path by coordinate descent (IRLS for
//!    logistic and Cox).
//! 3. [`kkt_stats`]: turn the KKT inner products of each feature into
//!    normalized statistics `zⱼ`.
//! 4. [`fdr`]: estimate `Pr(null | zⱼ)` with a unimodal normal mixture or a
//!    kernel density ratio.
//! 5. [`cv`]: choose λ by cross-validation (minimum or one-standard-error rule).
//!
//! [`sim`] reproduces the calibration, power and AUC simulation studies.

pub mod cv;
pub mod data;
pub mod error;
pub mod family;
pub mod fdr;
pub mod kkt_stats;
pub mod pipeline;
pub mod sim;
pub mod solver;
pub mod stats;

#[cfg(test)]
pub(crate) mod testutil;

pub use cv::{cross_validate, select_lambda, CvResult, LambdaRule};
pub use data::{destandardize, load_csv, standardize, CsvSpec, Dataset, ResponseKind, ResponseSpec, StandardizedDesign};
pub use error::{MfdrError, Result};
pub use family::Family;
pub use fdr::{
    aggregate_fdr, fit_mixture_em, mfdr_density, mfdr_mixture, univariate_z, DensityEstimate, Estimator, FdrRecord,
    FdrTable, MixtureModel, UnivariateZ,
};
pub use kkt_stats::{estimate_sigma, selection_stats, zstats_along_path, SelectionStat, SigmaEstimate};
pub use pipeline::{local_mfdr, mfdr_path, univariate_fdr};
pub use fdr::{estimate_fdr, FdrMethod};
pub use solver::{fit_path, kkt_check, lambda_grid, KktReport, LambdaGrid, PathFit, SolverOptions};
