//! Replicated simulation studies: calibration, power, AUC and selection counts.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cv::{cross_validate, DEFAULT_FOLDS};
use crate::data::ResponseKind;
use crate::error::{MfdrError, Result};
use crate::family::Family;
use crate::fdr::FdrMethod;
use crate::pipeline::{local_mfdr, univariate_fdr};
use crate::sim::scenario::{generate_with, FeatureClass, FeatureTruth, ScenarioName, ScenarioSpec};
use crate::sim::theorem::Theorem1Report;
use crate::solver::{default_grid, fit_path, SolverOptions};
use crate::stats;

/// Upper edges of the calibration bins; the first bin also holds 0.
pub const BIN_EDGES: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const CURVE_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMethod {
    Univariate,
    MfdrOneSe,
    MfdrCv,
}

impl SimMethod {
    pub const ALL: [SimMethod; 3] = [SimMethod::Univariate, SimMethod::MfdrOneSe, SimMethod::MfdrCv];

    pub fn name(self) -> &'static str {
        match self {
            SimMethod::Univariate => "univariate",
            SimMethod::MfdrOneSe => "mfdr_1se",
            SimMethod::MfdrCv => "mfdr_cv",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a study needs beyond the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub replicates: usize,
    pub threshold: f64,
    pub folds: usize,
    pub estimator: FdrMethod,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { replicates: 100, threshold: DEFAULT_THRESHOLD, folds: DEFAULT_FOLDS, estimator: FdrMethod::Mixture }
    }
}

/// Estimated fdr of every feature under each method for one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    /// Indexed by [`SimMethod`] order, then feature.
    pub fdr: [Vec<f64>; 3],
    pub lambda_cv: f64,
    pub lambda_1se: f64,
    /// Observed censored fraction (Cox only).
    pub censored_fraction: Option<f64>,
}

impl ReplicateResult {
    pub fn method(&self, m: SimMethod) -> &[f64] {
        &self.fdr[m.index()]
    }
}

/// Runs one replicate of `spec`.
pub fn run_replicate(spec: &ScenarioSpec, config: &StudyConfig, replicate: usize) -> Result<ReplicateResult> {
    let mut rng = spec.replicate_rng(replicate as u64);
    let (data, _) = generate_with(spec, &mut rng)?;
    let cv_seed: u64 = rng.random();
    let family = spec.family;
    let grid = default_grid(&data, family)?;
    let fit = fit_path(&data, family, &grid, SolverOptions::default())?;
    let cv = cross_validate(&data, family, &grid, config.folds, cv_seed)?;
    let by_feature = |t: crate::fdr::FdrTable| -> Vec<f64> {
        let mut v = vec![1.0; spec.p];
        for r in t.records {
            v[r.feature] = r.mfdr;
        }
        v
    };
    let uni = by_feature(univariate_fdr(&data, family, config.estimator)?);
    let one_se = by_feature(local_mfdr(&data, &fit, cv.index_1se, config.estimator)?);
    let at_cv = by_feature(local_mfdr(&data, &fit, cv.index_cv, config.estimator)?);
    let censored_fraction = match &data.response {
        ResponseKind::Survival { status, .. } => {
            Some(status.iter().filter(|s| !**s).count() as f64 / status.len() as f64)
        }
        _ => None,
    };
    Ok(ReplicateResult {
        replicate,
        fdr: [uni, one_se, at_cv],
        lambda_cv: cv.lambda_cv,
        lambda_1se: cv.lambda_1se,
        censored_fraction,
    })
}

/// Replicates `0..config.replicates`, in order.
pub fn run_replicates(spec: &ScenarioSpec, config: &StudyConfig) -> Result<Vec<ReplicateResult>> {
    if config.replicates == 0 {
        return Err(MfdrError::RequiresReplicates);
    }
    (0..config.replicates).map(|r| run_replicate(spec, config, r)).collect()
}

fn bin_of(fdr: f64) -> usize {
    BIN_EDGES.iter().position(|&e| fdr <= e).unwrap_or(BIN_EDGES.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub method: SimMethod,
    /// Observed proportion of noise features per bin; `None` for an empty bin.
    pub noise_proportion: [Option<f64>; 5],
    pub counts: [usize; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: SimMethod,
    pub mean_fdr: f64,
    pub noise_proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub method: SimMethod,
    pub causal: f64,
    pub correlated: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub method: SimMethod,
    pub auc: f64,
    /// Monte Carlo standard error over replicates.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub causal: f64,
    pub correlated: f64,
    pub noise: f64,
    /// Total noise selections over total selections.
    pub noise_rate: f64,
}

/// Calibration table from estimates `fdr(replicate, feature)`; B features
/// count in the denominator only.
pub fn calibration_from<'a>(
    method: SimMethod,
    estimates: impl Iterator<Item = &'a [f64]>,
    truth: &FeatureTruth,
) -> CalibrationRow {
    let mut counts = [0usize; 5];
    let mut noise = [0usize; 5];
    for fdr in estimates {
        for (v, l) in fdr.iter().zip(&truth.labels) {
            let b = bin_of(*v);
            counts[b] += 1;
            if *l == FeatureClass::C {
                noise[b] += 1;
            }
        }
    }
    let mut noise_proportion = [None; 5];
    for b in 0..5 {
        if counts[b] > 0 {
            noise_proportion[b] = Some(noise[b] as f64 / counts[b] as f64);
        }
    }
    CalibrationRow { method, noise_proportion, counts }
}

pub fn calibration(results: &[ReplicateResult], truth: &FeatureTruth) -> Vec<CalibrationRow> {
    SimMethod::ALL
        .iter()
        .map(|&m| calibration_from(m, results.iter().map(|r| r.method(m)), truth))
        .collect()
}

/// Pooled estimates sorted by fdr and split into `CURVE_POINTS` groups of
/// (nearly) equal size.
pub fn calibration_curve(results: &[ReplicateResult], truth: &FeatureTruth) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for m in SimMethod::ALL {
        let mut pooled: Vec<(f64, bool)> = results
            .iter()
            .flat_map(|r| r.method(m).iter().zip(&truth.labels).map(|(&v, &l)| (v, l == FeatureClass::C)))
            .collect();
        pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = pooled.len();
        let groups = CURVE_POINTS.min(total);
        for g in 0..groups {
            let chunk = &pooled[g * total / groups..(g + 1) * total / groups];
            let k = chunk.len() as f64;
            out.push(CurvePoint {
                method: m,
                mean_fdr: chunk.iter().map(|c| c.0).sum::<f64>() / k,
                noise_proportion: chunk.iter().filter(|c| c.1).count() as f64 / k,
            });
        }
    }
    out
}

fn counts_below(fdr: &[f64], truth: &FeatureTruth, threshold: f64) -> [usize; 3] {
    let mut c = [0; 3];
    for (v, l) in fdr.iter().zip(&truth.labels) {
        if *v < threshold {
            c[*l as usize] += 1;
        }
    }
    c
}

/// Mean number of A, B and C features with estimated fdr below `threshold`.
pub fn power(results: &[ReplicateResult], truth: &FeatureTruth, threshold: f64) -> Vec<SelectionCounts> {
    let r = results.len() as f64;
    SimMethod::ALL
        .iter()
        .map(|&m| {
            let mut tot = [0usize; 3];
            for res in results {
                let c = counts_below(res.method(m), truth, threshold);
                (0..3).for_each(|k| tot[k] += c[k]);
            }
            SelectionCounts {
                method: m,
                causal: tot[0] as f64 / r,
                correlated: tot[1] as f64 / r,
                noise: tot[2] as f64 / r,
            }
        })
        .collect()
}

/// AUC of `−fdr` separating A (positive) from C (negative); B is ignored.
pub fn auc_one(fdr: &[f64], truth: &FeatureTruth) -> f64 {
    let pos: Vec<f64> = fdr.iter().zip(&truth.labels).filter(|(_, l)| **l == FeatureClass::A).map(|(v, _)| -v).collect();
    let neg: Vec<f64> = fdr.iter().zip(&truth.labels).filter(|(_, l)| **l == FeatureClass::C).map(|(v, _)| -v).collect();
    stats::auc(&pos, &neg)
}

pub fn auc(results: &[ReplicateResult], truth: &FeatureTruth) -> Vec<AucRow> {
    SimMethod::ALL
        .iter()
        .map(|&m| {
            let v: Vec<f64> = results.iter().map(|r| auc_one(r.method(m), truth)).collect();
            let se = if v.len() > 1 { stats::sd(&v) / (v.len() as f64).sqrt() } else { f64::NAN };
            AucRow { method: m, auc: stats::mean(&v), se }
        })
        .collect()
}

/// Selections by mfdr at λ_CV below `threshold`.
pub fn comparison_row(results: &[ReplicateResult], truth: &FeatureTruth, threshold: f64) -> Result<ComparisonRow> {
    if results.is_empty() {
        return Err(MfdrError::RequiresReplicates);
    }
    let mut tot = [0usize; 3];
    for res in results {
        let c = counts_below(res.method(SimMethod::MfdrCv), truth, threshold);
        (0..3).for_each(|k| tot[k] += c[k]);
    }
    let r = results.len() as f64;
    let all = tot.iter().sum::<usize>();
    Ok(ComparisonRow {
        causal: tot[0] as f64 / r,
        correlated: tot[1] as f64 / r,
        noise: tot[2] as f64 / r,
        noise_rate: if all == 0 { 0.0 } else { tot[2] as f64 / all as f64 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: ScenarioName,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub replicates: usize,
    pub threshold: f64,
    pub estimator: FdrMethod,
    pub calibration_bins: Vec<CalibrationRow>,
    pub calibration_curve: Vec<CurvePoint>,
    pub power_counts: Vec<SelectionCounts>,
    pub auc: Vec<AucRow>,
    pub comparison_row: ComparisonRow,
    pub mean_censored_fraction: Option<f64>,
    pub theorem1: Option<Theorem1Report>,
}

/// Builds the report from already-computed replicates.
pub fn summarize(spec: &ScenarioSpec, config: &StudyConfig, results: &[ReplicateResult]) -> Result<SimReport> {
    let truth = spec.truth();
    let cens: Vec<f64> = results.iter().filter_map(|r| r.censored_fraction).collect();
    Ok(SimReport {
        scenario: spec.name,
        family: spec.family,
        n: spec.n,
        p: spec.p,
        seed: spec.seed,
        replicates: results.len(),
        threshold: config.threshold,
        estimator: config.estimator,
        calibration_bins: calibration(results, &truth),
        calibration_curve: calibration_curve(results, &truth),
        power_counts: power(results, &truth, config.threshold),
        auc: auc(results, &truth),
        comparison_row: comparison_row(results, &truth, config.threshold)?,
        mean_censored_fraction: (!cens.is_empty()).then(|| stats::mean(&cens)),
        theorem1: None,
    })
}

/// Runs every replicate and summarizes.
pub fn simulate(spec: &ScenarioSpec, config: &StudyConfig) -> Result<SimReport> {
    let results = run_replicates(spec, config)?;
    summarize(spec, config, &results)
}

fn study(spec: &ScenarioSpec, replicates: usize, seed: u64, threshold: f64) -> Result<(Vec<ReplicateResult>, FeatureTruth)> {
    let spec = ScenarioSpec { seed, ..spec.clone() };
    let config = StudyConfig { replicates, threshold, ..StudyConfig::default() };
    Ok((run_replicates(&spec, &config)?, spec.truth()))
}

pub fn run_calibration(spec: &ScenarioSpec, replicates: usize, seed: u64) -> Result<Vec<CalibrationRow>> {
    let (res, truth) = study(spec, replicates, seed, DEFAULT_THRESHOLD)?;
    Ok(calibration(&res, &truth))
}

pub fn run_power(spec: &ScenarioSpec, replicates: usize, threshold: f64, seed: u64) -> Result<Vec<SelectionCounts>> {
    let (res, truth) = study(spec, replicates, seed, threshold)?;
    Ok(power(&res, &truth, threshold))
}

pub fn run_auc(spec: &ScenarioSpec, replicates: usize, seed: u64) -> Result<Vec<AucRow>> {
    let (res, truth) = study(spec, replicates, seed, DEFAULT_THRESHOLD)?;
    Ok(auc(&res, &truth))
}

pub fn run_comparison_row(spec: &ScenarioSpec, replicates: usize, threshold: f64, seed: u64) -> Result<ComparisonRow> {
    let (res, truth) = study(spec, replicates, seed, threshold)?;
    comparison_row(&res, &truth, threshold)
}

fn csv_err(e: csv::Error) -> MfdrError {
    MfdrError::Io(e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl SimReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| MfdrError::Io(e.to_string()))
    }

    /// `method,(0,0.2],(0.2,0.4],...`: observed noise proportions, NA for empty bins.
    pub fn write_calibration_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "(0,0.2]", "(0.2,0.4]", "(0.4,0.6]", "(0.6,0.8]", "(0.8,1]"]).map_err(csv_err)?;
        for row in &self.calibration_bins {
            let mut rec = vec![row.method.name().to_string()];
            rec.extend(row.noise_proportion.iter().map(|v| opt(*v)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_curve_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "mean_fdr", "noise_proportion"]).map_err(csv_err)?;
        for c in &self.calibration_curve {
            w.write_record([c.method.name().to_string(), c.mean_fdr.to_string(), c.noise_proportion.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `method,causal,correlated,noise,auc`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "causal", "correlated", "noise", "auc"]).map_err(csv_err)?;
        for (p, a) in self.power_counts.iter().zip(&self.auc) {
            w.write_record([
                p.method.name().to_string(),
                p.causal.to_string(),
                p.correlated.to_string(),
                p.noise.to_string(),
                a.auc.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A scenario plus study settings, as read from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: ScenarioSpec,
    pub study: StudyConfig,
}

impl SimConfig {
    /// Parses lines of `key = value`; `#` starts a comment. Keys: scenario,
    /// family, seed, n, sigma, censoring_rate, replicates, threshold, folds,
    /// estimator. `scenario` and `family` are required.
    pub fn parse(text: &str) -> Result<SimConfig> {
        let bad = |m: String| MfdrError::InvalidScenario(m);
        let mut pairs = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key = value", ln + 1)))?;
            pairs.push((ln + 1, k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        let get = |key: &str| pairs.iter().rev().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.clone()));
        let (_, name) = get("scenario").ok_or_else(|| bad("missing key 'scenario'".into()))?;
        let (_, fam) = get("family").ok_or_else(|| bad("missing key 'family'".into()))?;
        let name: ScenarioName = name.parse().map_err(bad)?;
        let family: Family = fam.parse().map_err(bad)?;
        fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| MfdrError::InvalidScenario(format!("line {line}: invalid value '{v}' for {key}")))
        }
        let seed = match get("seed") {
            Some((l, v)) => num(l, "seed", &v)?,
            None => 1,
        };
        let mut spec = ScenarioSpec::standard(name, family, seed);
        let mut study = StudyConfig::default();
        for (line, key, v) in &pairs {
            match key.as_str() {
                "scenario" | "family" | "seed" => {}
                "n" => spec.n = num(*line, key, v)?,
                "sigma" => spec.sigma = num(*line, key, v)?,
                "censoring_rate" => spec.censoring_rate = num(*line, key, v)?,
                "replicates" => study.replicates = num(*line, key, v)?,
                "threshold" => study.threshold = num(*line, key, v)?,
                "folds" => study.folds = num(*line, key, v)?,
                "estimator" => study.estimator = v.parse().map_err(bad)?,
                other => return Err(bad(format!("line {line}: unknown key '{other}'"))),
            }
        }
        spec.validate()?;
        Ok(SimConfig { spec, study })
    }
}
