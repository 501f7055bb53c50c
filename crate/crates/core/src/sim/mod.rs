//! Simulation studies: scenario generators, replicated calibration, power
//! and AUC studies, and the oracle mFdr identity check.

mod scenario;
mod study;
mod theorem;

pub use scenario::{
    censoring_rate_for, generate, generate_design, generate_with, Correlation, FeatureClass, FeatureTruth,
    ScenarioName, ScenarioSpec,
};
pub use study::{
    auc, auc_one, calibration, calibration_curve, calibration_from, comparison_row, power, run_auc, run_calibration,
    run_comparison_row, run_power, run_replicate, run_replicates, simulate, summarize, AucRow, CalibrationRow,
    ComparisonRow, CurvePoint, ReplicateResult, SelectionCounts, SimConfig, SimMethod, SimReport, StudyConfig,
    BIN_EDGES, CURVE_POINTS, DEFAULT_THRESHOLD,
};
pub use theorem::{oracle_mfdr, orthogonal_design, verify_theorem1, Theorem1Report};
