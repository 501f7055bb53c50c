use std::fs;
use std::path::{Path, PathBuf};

use mfdr::sim::{self, ScenarioSpec, SimConfig, StudyConfig};
use mfdr::solver::default_grid;
use mfdr::{
    aggregate_fdr, cross_validate, destandardize, fit_path, load_csv, local_mfdr, mfdr_path, select_lambda,
    univariate_fdr, CsvSpec, CvResult, Dataset, DensityEstimate, Family, FdrRecord, FdrTable, LambdaGrid, PathFit,
    ResponseSpec, SolverOptions,
};
use serde_json::json;

use crate::args::*;
use crate::output::Outputs;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub const DENSITY_POINTS: usize = 512;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let response = match (args.family, &args.response, &args.time, &args.status) {
        (Family::Cox, None, Some(t), Some(s)) => ResponseSpec::Survival { time: t.clone(), status: s.clone() },
        (Family::Cox, ..) => return Err(usage("cox needs --time and --status (and no --response)")),
        (_, Some(r), None, None) => ResponseSpec::Column(r.clone()),
        (f, ..) => return Err(usage(format!("{} needs --response (and no --time/--status)", f.name()))),
    };
    let spec = CsvSpec { response, unpenalized: args.unpenalized.clone() };
    Ok(load_csv(&args.input, &spec, args.family)?)
}

/// The fitted path plus the grid index of the chosen λ.
struct Chosen {
    fit: PathFit,
    index: usize,
    cv: Option<CvResult>,
}

fn choose(data: &Dataset, family: Family, choice: LambdaChoice, cv: &CvOpts) -> Result<Chosen> {
    match choice {
        LambdaChoice::Rule(rule) => {
            let grid = default_grid(data, family)?;
            let res = cross_validate(data, family, &grid, cv.folds, cv.seed)?;
            let (_, index) = select_lambda(&res, rule);
            let fit = fit_path(data, family, &grid, SolverOptions::default())?;
            Ok(Chosen { fit, index, cv: Some(res) })
        }
        LambdaChoice::Value(v) => {
            // warm start along the default grid down to v
            let mut values: Vec<f64> = default_grid(data, family)?.values().iter().copied().filter(|&g| g > v).collect();
            values.push(v);
            let grid = LambdaGrid::custom(values)?;
            let fit = fit_path(data, family, &grid, SolverOptions::default())?;
            let index = fit.len() - 1;
            Ok(Chosen { fit, index, cv: None })
        }
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(CliError::csv)?;
    for r in rows {
        w.write_record(&r).map_err(CliError::csv)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.into_error()))
}

fn json_bytes(value: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.into()))?;
    v.push(b'\n');
    Ok(v)
}

pub fn fit(args: &FitArgs, out: &mut Outputs) -> Result<()> {
    let family = args.data.family;
    let data = load(&args.data)?;
    let (fit, points): (PathFit, Vec<usize>) = match args.lambda {
        Some(choice) => {
            let c = choose(&data, family, choice, &args.cv)?;
            (c.fit, vec![c.index])
        }
        None => {
            let grid = default_grid(&data, family)?;
            let fit = fit_path(&data, family, &grid, SolverOptions::default())?;
            let all = (0..fit.len()).collect();
            (fit, all)
        }
    };
    let names = &data.design.names;
    let mut raw = Vec::with_capacity(points.len());
    for &l in &points {
        raw.push(destandardize(fit.beta_at(l), fit.intercepts[l], &data.design)?);
    }
    let bytes = match args.out.format() {
        Format::Json => {
            let path: Vec<_> = points
                .iter()
                .zip(&raw)
                .map(|(&l, (beta, b0))| {
                    json!({
                        "lambda": fit.lambda(l),
                        "df": fit.df[l],
                        "loss": fit.loss[l],
                        "converged": fit.converged[l],
                        "intercept": if family == Family::Cox { None } else { Some(b0) },
                        "beta": beta,
                    })
                })
                .collect();
            json_bytes(&json!({ "family": family.name(), "features": names, "path": path }))?
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for (&l, (beta, b0)) in points.iter().zip(&raw) {
                let lam = fit.lambda(l).to_string();
                if family != Family::Cox {
                    rows.push(vec![lam.clone(), "(intercept)".into(), b0.to_string()]);
                }
                for (name, b) in names.iter().zip(beta).filter(|(_, b)| **b != 0.0) {
                    rows.push(vec![lam.clone(), name.clone(), b.to_string()]);
                }
            }
            csv_bytes(&["lambda", "feature", "beta"], rows)?
        }
    };
    out.push(args.out.out.as_deref(), bytes);
    if !fit.all_converged() {
        eprintln!("warning: some grid points did not converge");
    }
    Ok(())
}

pub fn cv(args: &CvArgs, out: &mut Outputs) -> Result<()> {
    let family = args.data.family;
    let data = load(&args.data)?;
    let grid = default_grid(&data, family)?;
    let res = cross_validate(&data, family, &grid, args.cv.folds, args.cv.seed)?;
    let bytes = match args.out.format() {
        Format::Json => json_bytes(&res)?,
        Format::Csv => {
            let mut buf = Vec::new();
            res.write_csv(&mut buf)?;
            buf
        }
    };
    out.push(args.out.out.as_deref(), bytes);
    eprintln!("lambda_cv: {}", res.lambda_cv);
    eprintln!("lambda_1se: {}", res.lambda_1se);
    Ok(())
}

/// Rows kept by the filters, sorted by mfdr then feature index.
pub fn filter_rows<'a>(table: &'a FdrTable, selected_only: bool, opts: &TableOpts) -> Vec<&'a FdrRecord> {
    let mut rows: Vec<&FdrRecord> = table
        .sorted()
        .into_iter()
        .filter(|r| !selected_only || r.active)
        .filter(|r| opts.threshold.is_none_or(|t| r.mfdr < t))
        .collect();
    if let Some(k) = opts.top {
        rows.truncate(k);
    }
    rows
}

/// `model mFdr: 0.20`, or nothing for an empty selection.
pub fn footer(table: &FdrTable, selected: &[usize]) -> Option<String> {
    aggregate_fdr(table, selected).ok().map(|v| format!("model mFdr: {v:.2}"))
}

fn table_bytes(table: &FdrTable, rows: &[&FdrRecord], format: Format) -> Result<Vec<u8>> {
    let kept = FdrTable { records: rows.iter().map(|r| (*r).clone()).collect(), ..table.clone() };
    match format {
        Format::Json => {
            let mut v = kept.to_json()?.into_bytes();
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => {
            let mut buf = Vec::new();
            kept.write_csv(&mut buf)?;
            Ok(buf)
        }
    }
}

/// `z,density,null` on an even grid covering the sample and [−4, 4].
pub fn density_grid(z: &[f64]) -> Result<Vec<u8>> {
    let d = DensityEstimate::new(z)?;
    let lo = z.iter().copied().fold(-4.0, f64::min) - 3.0 * d.bandwidth;
    let hi = z.iter().copied().fold(4.0, f64::max) + 3.0 * d.bandwidth;
    let step = (hi - lo) / (DENSITY_POINTS - 1) as f64;
    let rows = (0..DENSITY_POINTS).map(|i| {
        let x = if i == DENSITY_POINTS - 1 { hi } else { lo + step * i as f64 };
        let null = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        vec![x.to_string(), d.evaluate(x).to_string(), null.to_string()]
    });
    csv_bytes(&["z", "density", "null"], rows)
}

fn emit_table(table: &FdrTable, rows: &[&FdrRecord], opts: &TableOpts, o: &OutOpts, out: &mut Outputs) -> Result<()> {
    out.push(o.out.as_deref(), table_bytes(table, rows, o.format())?);
    if let Some(path) = &opts.density_export {
        let z: Vec<f64> = table.records.iter().map(|r| r.z).collect();
        out.push(Some(path), density_grid(&z)?);
    }
    Ok(())
}

pub fn mfdr(args: &MfdrArgs, out: &mut Outputs) -> Result<()> {
    let family = args.data.family;
    let data = load(&args.data)?;
    let chosen = choose(&data, family, args.lambda, &args.cv)?;
    let table = local_mfdr(&data, &chosen.fit, chosen.index, args.table.estimator)?;
    let rows = filter_rows(&table, args.selected, &args.table);
    emit_table(&table, &rows, &args.table, &args.out, out)?;
    if let Some(cv) = &chosen.cv {
        eprintln!("lambda: {} (cv {}, 1se {})", chosen.fit.lambda(chosen.index), cv.lambda_cv, cv.lambda_1se);
    } else {
        eprintln!("lambda: {}", chosen.fit.lambda(chosen.index));
    }
    if let Some(f) = footer(&table, &table.active()) {
        eprintln!("{f}");
    }
    Ok(())
}

pub fn univariate(args: &UnivariateArgs, out: &mut Outputs) -> Result<()> {
    let data = load(&args.data)?;
    let table = univariate_fdr(&data, args.data.family, args.table.estimator)?;
    let rows = filter_rows(&table, false, &args.table);
    emit_table(&table, &rows, &args.table, &args.out, out)?;
    let cut = args.table.threshold.unwrap_or(sim::DEFAULT_THRESHOLD);
    if let Some(f) = footer(&table, &table.below(cut)) {
        eprintln!("{f}");
    }
    Ok(())
}

pub fn path_export(args: &PathExportArgs, out: &mut Outputs) -> Result<()> {
    let family = args.data.family;
    let data = load(&args.data)?;
    let grid = default_grid(&data, family)?;
    let fit = fit_path(&data, family, &grid, SolverOptions::default())?;
    let tables = mfdr_path(&data, &fit, args.estimator)?;
    let rows = tables.iter().flat_map(|t| {
        let lam = t.lambda.map_or_else(String::new, |v| v.to_string());
        t.records.iter().map(move |r| {
            vec![r.name.clone(), lam.clone(), r.z.to_string(), r.mfdr.to_string(), r.active.to_string()]
        })
    });
    out.push(args.out.as_deref(), csv_bytes(&["feature", "lambda", "z", "mfdr", "active"], rows)?);
    Ok(())
}

/// `dir/report.json` → `dir/report_<suffix>.csv`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

pub fn simulate(args: &SimulateArgs, out: &mut Outputs) -> Result<()> {
    match args.study {
        Study::Oracle => {
            let n = args.n.unwrap_or(400);
            let reps = args.replicates.unwrap_or(1000);
            let seed = args.seed.unwrap_or(1);
            let r = sim::verify_theorem1(n, args.p, args.pi0, args.sigma, args.effect_sd, args.lambda, reps, seed)?;
            out.push(args.out.as_deref(), json_bytes(&r)?);
            eprintln!("average mfdr of selections: {:.4}", r.avg_mfdr_selected);
            eprintln!("null fraction of selections: {:.4}", r.empirical_mfdr);
            Ok(())
        }
        Study::Scenario => {
            let SimConfig { mut spec, mut study } = match &args.config {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                    SimConfig::parse(&text)?
                }
                None => {
                    let (Some(name), Some(family)) = (args.scenario, args.family) else {
                        return Err(usage("simulate needs --scenario and --family, or --config"));
                    };
                    SimConfig {
                        spec: ScenarioSpec::standard(name, family, args.seed.unwrap_or(1)),
                        study: StudyConfig::default(),
                    }
                }
            };
            if args.scenario.is_some() || args.family.is_some() || args.seed.is_some() {
                let name = args.scenario.unwrap_or(spec.name);
                let family = args.family.unwrap_or(spec.family);
                let base = ScenarioSpec::standard(name, family, args.seed.unwrap_or(spec.seed));
                // keep file overrides that do not depend on the scenario
                spec = ScenarioSpec { n: spec.n, censoring_rate: spec.censoring_rate, ..base };
            }
            if let Some(n) = args.n {
                spec.n = n;
            }
            if let Some(v) = args.replicates {
                study.replicates = v;
            }
            if let Some(v) = args.threshold {
                study.threshold = v;
            }
            if let Some(v) = args.folds {
                study.folds = v;
            }
            if let Some(v) = args.estimator {
                study.estimator = v;
            }
            spec.validate()?;
            let report = sim::simulate(&spec, &study)?;
            let mut json = report.to_json()?.into_bytes();
            json.push(b'\n');
            if let Some(path) = &args.out {
                let mut cal = Vec::new();
                report.write_calibration_csv(&mut cal)?;
                let mut curve = Vec::new();
                report.write_curve_csv(&mut curve)?;
                let mut summary = Vec::new();
                report.write_summary_csv(&mut summary)?;
                out.push(Some(path), json);
                out.push(Some(&sibling(path, "calibration")), cal);
                out.push(Some(&sibling(path, "curve")), curve);
                out.push(Some(&sibling(path, "summary")), summary);
            } else {
                out.push(None, json);
            }
            Ok(())
        }
    }
}
