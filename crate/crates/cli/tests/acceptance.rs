//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p cfdcast-cli --test acceptance`.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cfdcast::elicitation::{sample_weights, ElicitationProfile, ProfileRow};
use cfdcast::forecast::nearest_rank;
use cfdcast::market::RowFilter;
use cfdcast::posterior::{fit_panel, sample, FitOptions, LinearPosterior};
use cfdcast::seasonal::{adjust, fit_seasonal, inverse_logit_fill, logit_fill};
use cfdcast::synthetic::{no_premium_market, SyntheticConfig, SyntheticMarket};
use cfdcast::{backtest, fit, run_forecast, AreaId, Covariate, ForecastConfig, Horizon};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const COVERAGE_REPS: usize = 500;
const COVERAGE_N: usize = 200;
const COVERAGE_TOL: f64 = 0.03;
const COVERAGE_BUDGET: Duration = Duration::from_secs(60);

const MOMENT_DRAWS: usize = 200_000;
const MOMENT_REL_TOL: f64 = 0.05;
/// Kolmogorov limiting critical value at alpha = 0.001.
const KS_CRIT_001: f64 = 1.9495;

const DIRICHLET_DRAWS: usize = 200_000;
const DIRICHLET_MEAN_TOL: f64 = 0.01;
const DIRICHLET_VAR_REL_TOL: f64 = 0.05;

const SEASONAL_TOL: f64 = 1e-9;

const HOLDOUT_DRAWS: usize = 10_000;
const HOLDOUT_MIN_COVERAGE: f64 = 0.93;
const HOLDOUT_BUDGET: Duration = Duration::from_secs(120);

const BACKTEST_SE: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn posterior_coverage() -> Outcome {
    let start = Instant::now();
    let beta_true = [1.5, -0.7, 0.3, 2.0];
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut hits = [0usize; 4];
    for rep in 0..COVERAGE_REPS {
        let mut rng = cfdcast::rng::stream(77, rep as u64);
        let x = DMatrix::from_fn(COVERAGE_N, 4, |_, j| {
            1.0 + j as f64 + normal.sample(&mut rng)
        });
        let y = DVector::from_fn(COVERAGE_N, |i, _| {
            (0..4).map(|j| x[(i, j)] * beta_true[j]).sum::<f64>() + 2.0 * normal.sample(&mut rng)
        });
        let post = fit(&x, &y).unwrap();
        let draws = sample(&post, 4000, rep as u64).unwrap();
        for (j, hit) in hits.iter_mut().enumerate() {
            let mut v: Vec<f64> = draws.iter().map(|d| d.beta[j]).collect();
            v.sort_by(f64::total_cmp);
            if nearest_rank(&v, 0.025) <= beta_true[j] && beta_true[j] <= nearest_rank(&v, 0.975) {
                *hit += 1;
            }
        }
    }
    let rates: Vec<f64> = hits
        .iter()
        .map(|&h| h as f64 / COVERAGE_REPS as f64)
        .collect();
    let elapsed = start.elapsed();
    let pass = rates.iter().all(|r| (r - 0.95).abs() <= COVERAGE_TOL) && elapsed < COVERAGE_BUDGET;
    outcome(
        pass,
        format!("coverage {rates:?} in {:.1}s", elapsed.as_secs_f64()),
    )
}

fn sampler_moments() -> Outcome {
    let dof = 50usize;
    let xtx_inv = DMatrix::from_row_slice(2, 2, &[0.02, 0.012, 0.012, 0.03]);
    let post = LinearPosterior::new(vec![1.0, -1.0], xtx_inv.clone(), 4.0, dof).unwrap();
    let draws = sample(&post, MOMENT_DRAWS, 2024).unwrap();
    let n = MOMENT_DRAWS as f64;
    let mean = [0, 1].map(|j| draws.iter().map(|d| d.beta[j]).sum::<f64>() / n);
    let want_cov = &xtx_inv * (4.0 * dof as f64 / (dof as f64 - 2.0));
    let mut worst = 0.0f64;
    for j in 0..2 {
        worst = worst.max(((mean[j] - post.beta_hat[j]) / post.beta_hat[j]).abs());
        for k in 0..2 {
            let c = draws
                .iter()
                .map(|d| (d.beta[j] - mean[j]) * (d.beta[k] - mean[k]))
                .sum::<f64>()
                / (n - 1.0);
            worst = worst.max(((c - want_cov[(j, k)]) / want_cov[(j, k)]).abs());
        }
    }
    let chi = ChiSquared::new(dof as f64).unwrap();
    let mut q: Vec<f64> = draws.iter().map(|d| dof as f64 * 4.0 / d.sigma2).collect();
    q.sort_by(f64::total_cmp);
    let ks = q
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = chi.cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let crit = KS_CRIT_001 / n.sqrt();
    outcome(
        worst <= MOMENT_REL_TOL && ks < crit,
        format!("max relative moment error {worst:.4}, KS {ks:.5} (critical {crit:.5})"),
    )
}

fn observed() -> Vec<AreaId> {
    ["DK1", "DK2", "FI", "NO1", "SE"].map(AreaId::from).to_vec()
}

fn dirichlet_rows() -> Outcome {
    let rho = [0.05, 0.05, 0.05, 0.75, 0.10];
    let profile = ElicitationProfile {
        target: "NO2".into(),
        observed_order: observed(),
        rows: vec![
            ProfileRow {
                covariate: Covariate::Forward,
                rho: rho.to_vec(),
                months: 1.0,
            },
            ProfileRow {
                covariate: Covariate::Reservoir,
                rho: vec![0.0, 0.0, 0.05, 0.85, 0.10],
                months: 1.0,
            },
        ],
        transcript: None,
    };
    let draws = sample_weights(&profile, DIRICHLET_DRAWS, 99, 21.0).unwrap();
    let n = DIRICHLET_DRAWS as f64;
    let alpha0 = 21.0;
    let (mut mean_err, mut var_err) = (0.0f64, 0.0f64);
    for (i, &r) in rho.iter().enumerate() {
        let m = draws.iter().map(|d| d.rows[0][i]).sum::<f64>() / n;
        let v = draws
            .iter()
            .map(|d| (d.rows[0][i] - m).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        let want = r * (1.0 - r) / (alpha0 + 1.0);
        mean_err = mean_err.max((m - r).abs());
        var_err = var_err.max(((v - want) / want).abs());
    }
    let zeros = draws
        .iter()
        .all(|d| d.rows[1][0] == 0.0 && d.rows[1][1] == 0.0);
    outcome(
        mean_err <= DIRICHLET_MEAN_TOL && var_err <= DIRICHLET_VAR_REL_TOL && zeros,
        format!("max mean error {mean_err:.4}, max relative variance error {var_err:.4}, structural zeros exact: {zeros}"),
    )
}

fn seasonal_recovery() -> Outcome {
    let (g0, gs, gc) = (0.4, [0.9, -0.2], [-0.5, 0.15]);
    let series: Vec<(f64, f64)> = (0..156)
        .map(|t| {
            let t = t as f64;
            let mut v = g0;
            for j in 0..2 {
                let w = 2.0 * std::f64::consts::PI * (j + 1) as f64 * t / 52.0;
                v += gs[j] * w.sin() + gc[j] * w.cos();
            }
            (t, inverse_logit_fill(v))
        })
        .collect();
    let m = fit_seasonal("NO1".into(), &series, 52.0).unwrap();
    let err = [
        m.gamma0 - g0,
        m.gamma_sin[0] - gs[0],
        m.gamma_sin[1] - gs[1],
        m.gamma_cos[0] - gc[0],
        m.gamma_cos[1] - gc[1],
    ]
    .iter()
    .fold(0.0f64, |a, e| a.max(e.abs()));
    let flat: Vec<(f64, f64)> = (0..60).map(|t| (t as f64, 50.0)).collect();
    let fm = fit_seasonal("NO1".into(), &flat, 52.0).unwrap();
    let flat_coef = [
        fm.gamma0,
        fm.gamma_sin[0],
        fm.gamma_sin[1],
        fm.gamma_cos[0],
        fm.gamma_cos[1],
    ]
    .iter()
    .fold(0.0f64, |a, e| a.max(e.abs()));
    let flat_res = adjust(&flat, &fm)
        .unwrap()
        .iter()
        .fold(0.0f64, |a, e| a.max(e.abs()));
    let logit_ok = logit_fill(50.0).unwrap() == 0.0;
    outcome(
        err <= SEASONAL_TOL && flat_coef <= SEASONAL_TOL && flat_res <= SEASONAL_TOL && logit_ok,
        format!("coefficient error {err:.2e}, constant series max |coef| {flat_coef:.2e}, max |residual| {flat_res:.2e}"),
    )
}

fn holdout() -> Outcome {
    let start = Instant::now();
    let market = SyntheticMarket::generate(SyntheticConfig {
        seed: 4711,
        ..Default::default()
    })
    .unwrap();
    let horizons = market.config.horizons.clone();
    let (set, failed) = fit_panel(
        &market.panel,
        &horizons,
        RowFilter::default(),
        FitOptions::default(),
    );
    if !failed.is_empty() {
        return outcome(false, format!("{} fits failed", failed.len()));
    }
    let profile = market.matching_profile("NO2", 1.0e6);
    let cfg = ForecastConfig {
        n_draws: HOLDOUT_DRAWS,
        seed: 5,
        ..Default::default()
    };
    let mut rates = Vec::new();
    for &h in &horizons {
        let f = run_forecast(&market.panel, &set, &profile, h, &cfg).unwrap();
        let truth = market.true_mean_cfd(&"NO2".into(), h);
        let mut covered = 0usize;
        for d in &f.days {
            let t = truth[&d.date];
            if d.quantiles[0] <= t && t <= d.quantiles[2] {
                covered += 1;
            }
        }
        rates.push((h, covered as f64 / f.days.len() as f64));
    }
    let elapsed = start.elapsed();
    let pass = rates.iter().all(|(_, r)| *r >= HOLDOUT_MIN_COVERAGE) && elapsed < HOLDOUT_BUDGET;
    let shown: Vec<String> = rates.iter().map(|(h, r)| format!("{h} {:.3}", r)).collect();
    outcome(
        pass,
        format!(
            "band covers truth: {} in {:.1}s",
            shown.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn cli_determinism() -> Outcome {
    let (dir, _) = common::workspace(true);
    let run = |threads: Option<&str>| {
        let mut args = vec![
            "forecast",
            "--area",
            "NO2",
            "--horizon",
            "Q1",
            "--n",
            "2000",
            "--seed",
            "7",
            "--out",
            "-",
        ];
        if let Some(t) = threads {
            args.extend(["--threads", t]);
        }
        let o = Command::new(env!("CARGO_BIN_EXE_cfdcast"))
            .arg("--data")
            .arg(dir.path())
            .args(&args)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let outputs = [
        run(None),
        run(None),
        run(Some("1")),
        run(Some("3")),
        run(Some("8")),
    ];
    let same = outputs.iter().all(|o| o == &outputs[0]);
    outcome(
        same && !outputs[0].is_empty(),
        format!(
            "{} runs, {} bytes each, identical: {same}",
            outputs.len(),
            outputs[0].len()
        ),
    )
}

fn backtest_identity() -> Outcome {
    let panel = no_premium_market(2011, 60).unwrap();
    let out = backtest(
        &panel,
        &"NO1".into(),
        Horizon::M1,
        cfdcast::backtest::Quotes::Observed,
    )
    .unwrap();
    let d: Vec<f64> = out.records.iter().map(|r| r.difference).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let se = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    outcome(
        mean.abs() < BACKTEST_SE * se,
        format!(
            "{} periods, mean difference {mean:.4}, standard error {se:.4}",
            d.len()
        ),
    )
}

fn table_layout() -> Outcome {
    let (dir, ws) = common::workspace(false);
    cfdcast_cli::commands::ingest(&ws, None).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cfdcast"))
        .arg("--data")
        .arg(dir.path())
        .arg("fit")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let csv = std::fs::read_to_string(dir.path().join("coefficients.csv")).unwrap_or_default();
    let mut problems = Vec::new();
    let mut lines = csv.lines();
    if lines.next() != Some("horizon,epoch,coefficient,DK1,DK2,FI,NO1,SE") {
        problems.push("header".to_string());
    }
    let body: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    if body.is_empty() || !body.len().is_multiple_of(4) {
        problems.push(format!("{} data rows", body.len()));
    }
    for block in body.chunks(4) {
        let labels: Vec<&str> = block.iter().map(|r| r[2]).collect();
        if labels != ["beta_SA", "beta_SS", "beta_FW", "beta_WA"] {
            problems.push(format!("row order {labels:?}"));
        }
        for row in block {
            for (k, cell) in row[3..].iter().enumerate() {
                let danish_wa = row[2] == "beta_WA" && k < 2;
                let three_dp = cell.split_once('.').is_some_and(|(_, f)| f.len() == 3)
                    && cell.parse::<f64>().is_ok();
                if danish_wa != (*cell == "NA") || (!danish_wa && !three_dp) {
                    problems.push(format!("cell {} {} = {cell}", row[2], k));
                }
            }
        }
    }
    let blocks = body.len() / 4;
    outcome(
        o.status.success() && problems.is_empty() && text.contains("NA"),
        if problems.is_empty() {
            format!("{blocks} horizon/epoch blocks of 4 rows x 5 areas, NA for DK1/DK2 beta_WA")
        } else {
            format!("problems: {}", problems.join("; "))
        },
    )
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("posterior interval coverage", posterior_coverage),
        ("posterior sampler moments", sampler_moments),
        ("Dirichlet elicitation", dirichlet_rows),
        ("seasonal adjustment", seasonal_recovery),
        ("synthetic hold-out", holdout),
        ("forecast determinism", cli_determinism),
        ("backtest identity", backtest_identity),
        ("coefficient table layout", table_layout),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let r = check();
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name}: {}", i + 1, r.detail);
        failed += usize::from(!r.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
