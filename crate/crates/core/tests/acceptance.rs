//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 7 8`.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mfdr::fdr::GridSpec;
use mfdr::sim::{
    auc, calibration, comparison_row, power, run_replicates, verify_theorem1, ReplicateResult, ScenarioName,
    ScenarioSpec, SimMethod, StudyConfig,
};
use mfdr::solver::default_grid;
use mfdr::{
    fit_mixture_em, fit_path, kkt_check, selection_stats, Dataset, Family, LambdaGrid, ResponseKind, SolverOptions,
};
use ndarray::{Array2, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

const SIM_SEED: u64 = 1;
/// Lower bound the estimator places on working weights.
const WEIGHT_FLOOR: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn gaussian(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut x = Array2::zeros((n, p).f());
    x.iter_mut().for_each(|v| *v = normal(rng));
    x
}

fn sigmoid(e: f64) -> f64 {
    1.0 / (1.0 + (-e).exp())
}

fn phi_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// One-sample Kolmogorov–Smirnov p-value against N(0, 1), using the
/// asymptotic distribution with Stephens' small-sample correction.
fn ks_pvalue(sample: &[f64]) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() as f64;
    let d = v.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = phi_cdf(x);
        d.max((i as f64 + 1.0) / m - f).max(f - i as f64 / m)
    });
    let t = (m.sqrt() + 0.12 + 0.11 / m.sqrt()) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as i64 % 2 == 1 { 1.0 } else { -1.0 };
            2.0 * sign * (-2.0 * k * k * t * t).exp()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

fn oracle_identity() -> Outcome {
    let t = Instant::now();
    let r = verify_theorem1(400, 100, 0.8, 1.0, 0.5, 0.1, 2000, 11).expect("oracle run");
    let secs = t.elapsed().as_secs_f64();
    let gap = (r.avg_mfdr_selected - r.empirical_mfdr).abs();
    outcome(
        gap < 0.02 && secs < 60.0,
        format!(
            "avg mfdr {:.4} vs empirical mFdr {:.4} (gap {gap:.4}, {} selections, {secs:.1}s)",
            r.avg_mfdr_selected, r.empirical_mfdr, r.selections
        ),
    )
}

fn null_ks() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut passed = 0;
    for _ in 0..100 {
        let x = gaussian(400, 100, &mut rng);
        let y: Vec<f64> = (0..400).map(|_| normal(&mut rng)).collect();
        let data = Dataset::from_raw(x.view(), ResponseKind::continuous(y).unwrap()).unwrap();
        let grid = default_grid(&data, Family::Linear).unwrap();
        let fit = fit_path(&data, Family::Linear, &grid, SolverOptions::default()).unwrap();
        let l = grid.nearest(0.5 * grid.lambda_max());
        let z: Vec<f64> = selection_stats(&data, &fit, l).unwrap().iter().map(|s| s.z).collect();
        if ks_pvalue(&z) >= 0.01 {
            passed += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(passed >= 95 && secs < 120.0, format!("{passed}/100 replicates pass KS at 0.01 ({secs:.1}s)"))
}

fn violated_linear() -> &'static (ScenarioSpec, Vec<ReplicateResult>, Duration) {
    static RUN: OnceLock<(ScenarioSpec, Vec<ReplicateResult>, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let spec = ScenarioSpec::standard(ScenarioName::AssumptionsViolated, Family::Linear, SIM_SEED);
        let t = Instant::now();
        let res = run_replicates(&spec, &StudyConfig::default()).expect("violated run");
        (spec, res, t.elapsed())
    })
}

fn calibration_table() -> Outcome {
    let (spec, res, took) = violated_linear();
    let rows = calibration(res, &spec.truth());
    let row = rows.iter().find(|r| r.method == SimMethod::MfdrCv).unwrap();
    let target = [0.03, 0.25, 0.32, 0.49, 0.91];
    let upper = [0.2, 0.4, 0.6, 0.8, 1.0];
    let mut ok = took.as_secs_f64() < 1800.0;
    let mut cells = Vec::new();
    for b in 0..5 {
        match row.noise_proportion[b] {
            Some(v) => {
                ok &= (v - target[b]).abs() <= 0.10 && v <= upper[b] + 0.10;
                cells.push(format!("{v:.3}"));
            }
            None => {
                ok = false;
                cells.push("NA".into());
            }
        }
    }
    outcome(ok, format!("mfdr(CV) bins [{}] vs [0.03, 0.25, 0.32, 0.49, 0.91] ({:.0}s)", cells.join(", "), took.as_secs_f64()))
}

fn power_comparison() -> Outcome {
    let (spec, res, _) = violated_linear();
    let rows = power(res, &spec.truth(), 0.1);
    let get = |m| rows.iter().find(|r| r.method == m).unwrap();
    let (cv, uni) = (get(SimMethod::MfdrCv), get(SimMethod::Univariate));
    let ok = (cv.causal - 3.84).abs() <= 0.5
        && cv.causal >= uni.causal - 0.3
        && uni.correlated >= 10.0 * cv.correlated
        && uni.correlated > 0.0;
    outcome(
        ok,
        format!(
            "A: mfdr(CV) {:.2} vs univariate {:.2}; B: univariate {:.2} vs mfdr(CV) {:.2}",
            cv.causal, uni.causal, uni.correlated, cv.correlated
        ),
    )
}

fn auc_values() -> Outcome {
    let (vspec, vres, _) = violated_linear();
    let met = ScenarioSpec::standard(ScenarioName::AssumptionsMet, Family::Linear, SIM_SEED);
    let mres = run_replicates(&met, &StudyConfig::default()).expect("met run");
    let pick = |rows: &[mfdr::sim::AucRow], m| rows.iter().find(|r| r.method == m).unwrap().auc;
    let m = auc(&mres, &met.truth());
    let v = auc(vres, &vspec.truth());
    let (m_cv, m_uni) = (pick(&m, SimMethod::MfdrCv), pick(&m, SimMethod::Univariate));
    let (v_cv, v_uni) = (pick(&v, SimMethod::MfdrCv), pick(&v, SimMethod::Univariate));
    let ok = (m_cv - 0.936).abs() <= 0.02
        && (m_uni - 0.908).abs() <= 0.02
        && m_cv > m_uni
        && (v_cv - 0.990).abs() <= 0.01
        && (v_uni - 0.966).abs() <= 0.02
        && v_cv > v_uni;
    outcome(
        ok,
        format!("met: mfdr(CV) {m_cv:.3} univariate {m_uni:.3}; violated: mfdr(CV) {v_cv:.3} univariate {v_uni:.3}"),
    )
}

fn comparison() -> Outcome {
    let (spec, res, _) = violated_linear();
    let row = comparison_row(res, &spec.truth(), 0.1).unwrap();
    outcome(
        row.noise_rate <= 0.10 && (row.causal - 3.84).abs() <= 0.5,
        format!(
            "causal {:.2}, correlated {:.2}, noise {:.2}, noise rate {:.1}%",
            row.causal,
            row.correlated,
            row.noise,
            100.0 * row.noise_rate
        ),
    )
}

/// Random dataset of the given family; Cox times are rounded on odd seeds
/// so that tied event times occur.
fn random_dataset(family: Family, n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian(n, p, &mut rng);
    let eta: Vec<f64> = (0..n).map(|i| 0.8 * x[[i, 0]] - 0.6 * x[[i, 1]] + 0.4 * x[[i, 2]]).collect();
    let response = match family {
        Family::Linear => ResponseKind::continuous(eta.iter().map(|e| e + normal(&mut rng)).collect()).unwrap(),
        Family::Logistic => ResponseKind::binary(
            eta.iter().map(|&e| if rng.random::<f64>() < sigmoid(e) { 1.0 } else { 0.0 }).collect(),
        )
        .unwrap(),
        Family::Cox => {
            let mut time = Vec::with_capacity(n);
            let mut status = Vec::with_capacity(n);
            for &e in &eta {
                let t = -rng.random::<f64>().ln() / e.exp();
                let c = -rng.random::<f64>().ln() / 0.3;
                let v = t.min(c);
                time.push(if seed % 2 == 1 { (v * 10.0).round() / 10.0 + 0.1 } else { v });
                status.push(t <= c);
            }
            ResponseKind::survival(time, status).unwrap()
        }
    };
    Dataset::from_raw(x.view(), response).unwrap()
}

fn kkt_audit() -> Outcome {
    let shapes = [(60, 20), (100, 50), (80, 150), (150, 30)];
    let mut checked = 0;
    let mut skipped = 0;
    let mut violations = 0;
    for family in [Family::Linear, Family::Logistic, Family::Cox] {
        for k in 0..20u64 {
            let (n, p) = shapes[k as usize % shapes.len()];
            let data = random_dataset(family, n, p, 700 + k);
            let grid = default_grid(&data, family).unwrap();
            let fit = fit_path(&data, family, &grid, SolverOptions::default()).unwrap();
            for l in 0..fit.len() {
                if !fit.converged[l] {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                let rep = kkt_check(&data, family, fit.beta_at(l), fit.intercepts[l], fit.lambda(l), 1e-6).unwrap();
                violations += rep.violations.len();
            }
        }
    }
    outcome(
        violations == 0 && checked > 0,
        format!("{violations} violations over {checked} converged grid points ({skipped} unconverged skipped)"),
    )
}

/// Solves the small dense system `a·x = b` by Gaussian elimination with
/// partial pivoting. `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Exact lasso minimizer by enumerating every sign pattern and keeping the
/// candidates that satisfy the optimality conditions. Columns of `x` are
/// centred, so the intercept is the mean of `y`.
fn enumerate_lasso(x: &[Vec<f64>], y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let p = x.len();
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let objective = |beta: &[f64]| -> f64 {
        let rss: f64 = (0..y.len())
            .map(|i| {
                let f: f64 = (0..p).map(|j| x[j][i] * beta[j]).sum();
                (yc[i] - f).powi(2)
            })
            .sum();
        rss / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for code in 0..3usize.pow(p as u32) {
        let signs: Vec<i32> = (0..p).map(|j| (code / 3usize.pow(j as u32) % 3) as i32 - 1).collect();
        let support: Vec<usize> = (0..p).filter(|&j| signs[j] != 0).collect();
        let mut beta = vec![0.0; p];
        if !support.is_empty() {
            let a: Vec<Vec<f64>> = support
                .iter()
                .map(|&r| support.iter().map(|&c| x[r].iter().zip(&x[c]).map(|(u, v)| u * v).sum::<f64>() / n).collect())
                .collect();
            let b: Vec<f64> = support
                .iter()
                .map(|&r| x[r].iter().zip(&yc).map(|(u, v)| u * v).sum::<f64>() / n - lambda * signs[r] as f64)
                .collect();
            let Some(sol) = solve_dense(a, b) else { continue };
            if sol.iter().zip(&support).any(|(v, &j)| v.signum() as i32 != signs[j] || *v == 0.0) {
                continue;
            }
            support.iter().zip(&sol).for_each(|(&j, &v)| beta[j] = v);
        }
        let r: Vec<f64> = (0..y.len()).map(|i| yc[i] - (0..p).map(|j| x[j][i] * beta[j]).sum::<f64>()).collect();
        let feasible = (0..p)
            .filter(|&j| signs[j] == 0)
            .all(|j| (x[j].iter().zip(&r).map(|(u, v)| u * v).sum::<f64>() / n).abs() <= lambda * (1.0 + 1e-12));
        if feasible {
            let q = objective(&beta);
            if best.as_ref().is_none_or(|(_, bq)| q < *bq) {
                best = Some((beta, q));
            }
        }
    }
    best.expect("the lasso always has a minimizer")
}

fn solver_oracle() -> Outcome {
    let (n, p) = (10, 5);
    let mut worst: f64 = 0.0;
    for inst in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + inst);
        let raw = gaussian(n, p, &mut rng);
        let y: Vec<f64> = (0..n).map(|i| raw[[i, 0]] - 0.5 * raw[[i, 3]] + 0.7 * normal(&mut rng)).collect();
        // standardize independently: mean 0, sum of squares n
        let x: Vec<Vec<f64>> = (0..p)
            .map(|j| {
                let col: Vec<f64> = raw.column(j).to_vec();
                let m = col.iter().sum::<f64>() / n as f64;
                let ss = col.iter().map(|v| (v - m).powi(2)).sum::<f64>();
                let s = (ss / n as f64).sqrt();
                col.iter().map(|v| (v - m) / s).collect()
            })
            .collect();
        let ybar = y.iter().sum::<f64>() / n as f64;
        let lmax = x
            .iter()
            .map(|c| (c.iter().zip(&y).map(|(u, v)| u * (v - ybar)).sum::<f64>() / n as f64).abs())
            .fold(0.0, f64::max);
        let lambdas: Vec<f64> = [0.9, 0.6, 0.35, 0.15, 0.05].iter().map(|f| f * lmax).collect();
        let data = Dataset::from_raw(raw.view(), ResponseKind::continuous(y.clone()).unwrap()).unwrap();
        let fit = fit_path(&data, Family::Linear, &LambdaGrid::custom(lambdas.clone()).unwrap(), SolverOptions::default())
            .unwrap();
        for (l, &lambda) in lambdas.iter().enumerate() {
            let (_, q_oracle) = enumerate_lasso(&x, &y, lambda);
            let beta = fit.beta_at(l);
            let b0 = fit.intercepts[l];
            let rss: f64 = (0..n)
                .map(|i| (y[i] - b0 - (0..p).map(|j| x[j][i] * beta[j]).sum::<f64>()).powi(2))
                .sum();
            let q = rss / (2.0 * n as f64) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>();
            worst = worst.max((q - q_oracle).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max |objective − oracle| = {worst:.2e} over 10 instances × 5 λ"))
}

fn mixture_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let mut non_monotone_em = 0;
    let mut non_monotone_fdr = 0;
    for _ in 0..50 {
        let m = rng.random_range(20..=1000);
        let frac_alt: f64 = rng.random_range(0.0..0.5);
        let alt_sd: f64 = rng.random_range(1.5..6.0);
        let z: Vec<f64> = (0..m)
            .map(|_| if rng.random::<f64>() < frac_alt { alt_sd * normal(&mut rng) } else { normal(&mut rng) })
            .collect();
        for spec in [GridSpec::default(), GridSpec::default().with_null_weight(1.0)] {
            let model = fit_mixture_em(&z, &spec).unwrap();
            let trace = &model.objective_trace;
            if trace.windows(2).any(|w| w[1] < w[0] - 1e-9 * w[0].abs().max(1.0)) {
                non_monotone_em += 1;
            }
            let mut prev = f64::INFINITY;
            for k in 0..=400 {
                let t = k as f64 * 0.025;
                let v = model.mfdr(t);
                if v > prev + 1e-12 || (model.mfdr(-t) - v).abs() > 1e-12 {
                    non_monotone_fdr += 1;
                    break;
                }
                prev = v;
            }
        }
    }
    let mut min_pi0 = f64::INFINITY;
    for _ in 0..20 {
        let z: Vec<f64> = (0..1000).map(|_| normal(&mut rng)).collect();
        min_pi0 = min_pi0.min(fit_mixture_em(&z, &GridSpec::default()).unwrap().pi0);
    }
    outcome(
        non_monotone_em == 0 && non_monotone_fdr == 0 && min_pi0 >= 0.95,
        format!(
            "{non_monotone_em} non-monotone EM traces, {non_monotone_fdr} non-monotone fdr curves (100 fits); min null π̂₀ {min_pi0:.4}"
        ),
    )
}

/// Breslow working score and diagonal weights by direct risk-set sums.
fn cox_working(eta: &[f64], time: &[f64], status: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let n = eta.len();
    let e: Vec<f64> = eta.iter().map(|v| v.exp()).collect();
    let mut score = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut a = 0.0;
        let mut b = 0.0;
        for k in 0..n {
            if status[k] && time[k] <= time[i] {
                let s: f64 = (0..n).filter(|&j| time[j] >= time[k]).map(|j| e[j]).sum();
                a += 1.0 / s;
                b += 1.0 / (s * s);
            }
        }
        score[i] = if status[i] { 1.0 } else { 0.0 } - e[i] * a;
        w[i] = (e[i] * a - e[i] * e[i] * b).max(WEIGHT_FLOOR);
    }
    (score, w)
}

fn shortcut_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for family in [Family::Linear, Family::Logistic, Family::Cox] {
        for k in 0..4u64 {
            let data = random_dataset(family, 60, 15, 1000 + k);
            let grid = default_grid(&data, family).unwrap();
            let fit = fit_path(&data, family, &grid, SolverOptions::default()).unwrap();
            let n = data.n();
            let cols: Vec<&[f64]> = (0..data.p()).map(|j| data.design.col(j)).collect();
            for l in [10, 30, 50, 70] {
                let beta = fit.beta_at(l);
                let eta: Vec<f64> =
                    (0..n).map(|i| fit.intercepts[l] + (0..data.p()).map(|j| cols[j][i] * beta[j]).sum::<f64>()).collect();
                // pseudo-response and weights from first principles
                let (ytilde, w): (Vec<f64>, Vec<f64>) = match &data.response {
                    ResponseKind::Continuous(y) => (y.clone(), vec![1.0; n]),
                    ResponseKind::Binary(y) => {
                        let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
                        let w: Vec<f64> = mu.iter().map(|m| (m * (1.0 - m)).max(WEIGHT_FLOOR)).collect();
                        ((0..n).map(|i| eta[i] + (y[i] - mu[i]) / w[i]).collect(), w)
                    }
                    ResponseKind::Survival { time, status } => {
                        let (s, w) = cox_working(&eta, time, status);
                        ((0..n).map(|i| eta[i] + s[i] / w[i]).collect(), w)
                    }
                };
                let stats = selection_stats(&data, &fit, l).unwrap();
                for st in &stats {
                    let j = st.feature;
                    let partial: Vec<f64> = (0..n).map(|i| ytilde[i] - (eta[i] - cols[j][i] * beta[j])).collect();
                    let c = (0..n).map(|i| cols[j][i] * w[i] * partial[i]).sum::<f64>() / n as f64;
                    worst = worst.max((c - st.c).abs());
                    cases += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-8, format!("max |shortcut − explicit| = {worst:.2e} over {cases} statistics, 3 families"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle identity for the average mfdr of selections", oracle_identity),
        ("null z statistics are standard normal", null_ks),
        ("calibration table, violated/linear", calibration_table),
        ("power comparison, violated/linear", power_comparison),
        ("AUC, met and violated", auc_values),
        ("comparison row, violated/linear", comparison),
        ("KKT audit", kkt_audit),
        ("solver against exhaustive oracle", solver_oracle),
        ("mixture estimator properties", mixture_properties),
        ("KKT shortcut against explicit partial residuals", shortcut_equivalence),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let o = run();
        println!("criterion {id:>2} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
