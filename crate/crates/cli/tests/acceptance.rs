//! Prints one PASS/FAIL line per acceptance criterion and exits nonzero
//! if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use w2a_cli::checks::{self, CheckResult, Tolerances};
use w2a_cli::commands;
use w2a_cli::config::ExperimentConfig;

fn base_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.simulation.n_trials = 200_000;
    cfg.simulation.seed = 1;
    cfg.analysis.h_th = Some(1e-8);
    cfg.analysis.wind_grid = vec![6.0, 10.0, 14.0];
    cfg.analysis.z_w_grid = vec![10.0, 30.0];
    cfg.analysis.z_a_grid = vec![5.0, 10.0];
    cfg.analysis.theta_fov_grid = vec![10.0, 30.0, 60.0];
    cfg
}

fn report(n: usize, results: &[CheckResult], started: Instant) -> bool {
    let passed = !results.is_empty() && results.iter().all(|r| r.passed);
    let detail: Vec<String> = results
        .iter()
        .map(|r| {
            format!(
                "{} {} measured={:.6e} tol={:.3e} ({})",
                r.id,
                if r.passed { "ok" } else { "FAILED" },
                r.measured,
                r.tolerance,
                r.detail
            )
        })
        .collect();
    println!(
        "criterion {n} {}: {} [{:.1}s]",
        if passed { "PASS" } else { "FAIL" },
        detail.join(" | "),
        started.elapsed().as_secs_f64()
    );
    passed
}

fn main() -> ExitCode {
    let cfg = base_config();
    let tol = Tolerances::default();
    let mut ok = true;

    let t = Instant::now();
    ok &= report(1, &[checks::critical_angle(&cfg, &tol)], t);

    let t = Instant::now();
    ok &= report(2, &[checks::regression_coefficients(&cfg, &tol)], t);

    let t = Instant::now();
    ok &= report(3, &[checks::aoa_model_validity(&cfg, &tol)], t);

    let t = Instant::now();
    ok &= report(4, &checks::bmm_fit_quality(&cfg, &tol), t);

    let t = Instant::now();
    let mut five = vec![checks::outage_vs_quadrature(&cfg, &tol)];
    five.extend(checks::meijer_reduction(&cfg, &tol));
    ok &= report(5, &five, t);

    let t = Instant::now();
    match checks::run_grid(&cfg) {
        Ok(grid) => {
            ok &= report(6, &checks::closed_vs_mc(&grid, &tol), t);
            let t = Instant::now();
            ok &= report(7, &checks::tir_floor(&cfg, &grid, &tol), t);
            let t = Instant::now();
            ok &= report(8, &[checks::depth_altitude_trends(&grid)], t);
        }
        Err(e) => {
            for n in 6..=8 {
                let r = CheckResult {
                    id: "grid".into(),
                    passed: false,
                    measured: f64::NAN,
                    tolerance: f64::NAN,
                    detail: format!("grid run failed: {e}"),
                };
                ok &= report(n, &[r], t);
            }
        }
    }

    let t = Instant::now();
    ok &= report(9, &checks::path_loss_sanity(&cfg, &tol), t);

    let t = Instant::now();
    let scratch = tempfile::tempdir().expect("temporary directory");
    ok &= report(10, &[commands::determinism_check(&cfg, scratch.path())], t);

    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
