//! Cross-checks between closed forms, quadrature and Monte Carlo.
//!
//! Each check yields a [`CheckResult`]; a failing check never stops the
//! others. Deviations are compared against a [`Tolerances`] entry, so an
//! all-zero override turns every inexact comparison into a failure.

use serde::{Deserialize, Serialize};
use w2a_core::beta_mixture::{BetaComponent, BetaMixture};
use w2a_core::montecarlo::{
    aoa_fit_report, run_simulation, sample_arrival_angles, SimulationReport,
};
use w2a_core::numerics::{integrate, reg_inc_beta, RandomStream, UniformSource};
use w2a_core::outage::{
    channel_pdf_continuous, meijer, outage_probability, p_interruption, p_tir, ChannelModel,
    InterruptionProbs,
};
use w2a_core::path_loss::{bubble_optical_depth, bubble_scattering, efolding_depth, BubbleModel};
use w2a_core::surface::{
    aoa_model_for_wind, incidence_model_for_wind, K_A, LAMBDA_A_INTERCEPT, LAMBDA_A_SLOPE,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Published critical angle (degrees).
pub const PUBLISHED_CRITICAL_ANGLE: f64 = 48.75;
const RANDOM_OUTAGE_CASES: u64 = 100;
const RANDOM_MEIJER_CASES: u64 = 50;
/// Separates the check streams from the simulation streams.
const CHECK_SEED_SALT: u64 = 0xc0ffee;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Degrees.
    pub critical_angle: f64,
    pub regression_coefficients: f64,
    /// Allowed `1 − R²`.
    pub aoa_r2_deficit: f64,
    pub bmm_ks: f64,
    /// Allowed EM log-likelihood decrease relative to `|loglik|`.
    pub em_monotone: f64,
    pub outage_quadrature: f64,
    pub meijer_cdf: f64,
    pub meijer_pdf: f64,
    /// Standard errors.
    pub mc_sigmas: f64,
    pub tir_limit_rel: f64,
    /// Bubble optical depth beyond ten e-folding depths, relative.
    pub bubble_confinement: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            critical_angle: 0.01,
            regression_coefficients: 1e-12,
            aoa_r2_deficit: 0.05,
            bmm_ks: 0.02,
            em_monotone: 1e-9,
            outage_quadrature: 1e-6,
            meijer_cdf: 1e-8,
            meijer_pdf: 1e-10,
            mc_sigmas: 3.0,
            tir_limit_rel: 1e-6,
            bubble_confinement: 1e-3,
        }
    }
}

impl Tolerances {
    /// Every tolerance set to `t`.
    pub fn uniform(t: f64) -> Self {
        Self {
            critical_angle: t,
            regression_coefficients: t,
            aoa_r2_deficit: t,
            bmm_ks: t,
            em_monotone: t,
            outage_quadrature: t,
            meijer_cdf: t,
            meijer_pdf: t,
            mc_sigmas: t,
            tir_limit_rel: t,
            bubble_confinement: t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub passed: bool,
    /// Worst observed deviation (or violation count).
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn within(id: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            id: id.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail,
        }
    }

    fn count(id: &str, violations: usize, detail: String) -> Self {
        Self {
            id: id.into(),
            passed: violations == 0,
            measured: violations as f64,
            tolerance: 0.0,
            detail,
        }
    }

    fn error(id: &str, err: impl std::fmt::Display) -> Self {
        Self {
            id: id.into(),
            passed: false,
            measured: f64::NAN,
            tolerance: f64::NAN,
            detail: format!("error: {err}"),
        }
    }
}

fn guard(id: &str, f: impl FnOnce() -> Result<CheckResult, CliError>) -> CheckResult {
    f().unwrap_or_else(|e| CheckResult::error(id, e))
}

pub fn critical_angle(cfg: &ExperimentConfig, tol: &Tolerances) -> CheckResult {
    let tc = cfg.environment().indices.critical_angle();
    CheckResult::within(
        "critical_angle",
        (tc - PUBLISHED_CRITICAL_ANGLE).abs(),
        tol.critical_angle,
        format!("theta_c = {tc:.6} deg"),
    )
}

pub fn regression_coefficients(cfg: &ExperimentConfig, tol: &Tolerances) -> CheckResult {
    guard("regression_coefficients", || {
        let idx = cfg.environment().indices;
        let mut worst: f64 = 0.0;
        for u in [0.0, 1.0, 6.0, 10.0, 14.0, 15.0] {
            let inc = incidence_model_for_wind(u)?;
            let aoa = aoa_model_for_wind(u, &idx)?;
            let expected = [
                1.7454 + 0.0071 * u,
                13.6485 + 0.2406 * u,
                1.60,
                4.7473 + 0.0957 * u,
            ];
            let got = [
                inc.params.shape,
                inc.params.scale,
                aoa.params.shape,
                aoa.params.scale,
            ];
            for (g, e) in got.iter().zip(expected) {
                worst = worst.max((g - e).abs());
            }
        }
        Ok(CheckResult::within(
            "regression_coefficients",
            worst,
            tol.regression_coefficients,
            "k_U, lambda_U, k_A, lambda_A at U in {0,1,6,10,14,15}".into(),
        ))
    })
}

pub fn aoa_model_validity(cfg: &ExperimentConfig, tol: &Tolerances) -> CheckResult {
    guard("aoa_model_validity", || {
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        for &u in &cfg.analysis.wind_grid {
            let env = cfg.environment_at(u);
            let angles = sample_arrival_angles(
                &env,
                cfg.simulation.n_trials,
                cfg.simulation.seed,
                cfg.simulation.workers,
            )?;
            let rep = aoa_fit_report(&angles, &aoa_model_for_wind(u, &env.indices)?)?;
            let r2 = rep.regression_metrics.r_squared;
            worst = worst.max(1.0 - r2);
            parts.push(format!(
                "U={u}: R2={r2:.4} fitted k={:.3} lambda={:.3}",
                rep.fitted.shape, rep.fitted.scale
            ));
        }
        Ok(CheckResult::within(
            "aoa_model_validity",
            worst,
            tol.aoa_r2_deficit,
            parts.join("; "),
        ))
    })
}

/// Beta-mixture fits on the `(U, z_a)` cells with an unrestricted field of
/// view, so only total internal reflection removes samples.
pub fn bmm_fit_quality(cfg: &ExperimentConfig, tol: &Tolerances) -> Vec<CheckResult> {
    let mut ks_worst: f64 = 0.0;
    let mut drop_worst: f64 = 0.0;
    let mut parts = Vec::new();
    let mut failure = None;
    for &u in &cfg.analysis.wind_grid {
        for &z_a in &cfg.analysis.z_a_grid {
            let mut geom = cfg.geometry();
            geom.z_a = z_a;
            geom.theta_fov = 90.0;
            match run_simulation(&geom, &cfg.environment_at(u), &cfg.options(None)) {
                Ok(r) => match &r.mixture {
                    Some(m) => {
                        ks_worst = ks_worst.max(m.ks);
                        drop_worst =
                            drop_worst.max(m.max_loglik_drop / m.record.loglik.abs().max(1.0));
                        parts.push(format!(
                            "U={u} z_a={z_a}: KS={:.4} iters={}",
                            m.ks, m.iterations
                        ));
                    }
                    None => {
                        failure = Some(format!(
                            "U={u} z_a={z_a}: no mixture ({})",
                            r.notes.join("; ")
                        ))
                    }
                },
                Err(e) => failure = Some(format!("U={u} z_a={z_a}: {e}")),
            }
        }
    }
    if let Some(f) = failure {
        return vec![
            CheckResult::error("bmm_fit_quality", f),
            CheckResult::error("em_monotone", "fit missing"),
        ];
    }
    vec![
        CheckResult::within("bmm_fit_quality", ks_worst, tol.bmm_ks, parts.join("; ")),
        CheckResult::within(
            "em_monotone",
            drop_worst,
            tol.em_monotone,
            "largest log-likelihood decrease relative to |loglik|".into(),
        ),
    ]
}

fn log_uniform(s: &mut RandomStream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + s.next_uniform() * (hi / lo).ln()).exp()
}

fn random_mixture(s: &mut RandomStream) -> Result<BetaMixture, CliError> {
    let w = 0.05 + 0.9 * s.next_uniform();
    let c1 = BetaComponent::new(log_uniform(s, 0.3, 20.0), log_uniform(s, 0.3, 20.0))?;
    let c2 = BetaComponent::new(log_uniform(s, 0.3, 20.0), log_uniform(s, 0.3, 20.0))?;
    Ok(BetaMixture::new(w, c1, c2)?)
}

/// Closed-form outage against quadrature of the continuous density.
pub fn outage_vs_quadrature_for(model: &ChannelModel, fractions: &[f64]) -> Result<f64, CliError> {
    let peak = model.peak_gain();
    let p_int = model.interruption.p_int;
    let mut worst: f64 = 0.0;
    for &f in fractions {
        let h_th = f * peak;
        // Normalized variable; nodes rounding onto the support edge contribute nothing.
        let q = integrate(
            |u| channel_pdf_continuous(u * peak, model).map_or(0.0, |d| d * peak),
            0.0,
            f,
            1e-11,
        )?;
        let numeric = p_int + (1.0 - p_int) * q.value;
        let closed = outage_probability(h_th, model)?.probability;
        worst = worst.max((closed - numeric).abs());
    }
    Ok(worst)
}

pub fn outage_vs_quadrature(cfg: &ExperimentConfig, tol: &Tolerances) -> CheckResult {
    guard("outage_vs_quadrature", || {
        let mut worst: f64 = 0.0;
        for k in 0..RANDOM_OUTAGE_CASES {
            let mut s = RandomStream::new(cfg.simulation.seed ^ CHECK_SEED_SALT, k);
            let mixture = random_mixture(&mut s)?;
            let h_l = log_uniform(&mut s, 1e-3, 1.0);
            let a0 = log_uniform(&mut s, 1e-4, 0.5);
            let p_int = 0.5 * s.next_uniform();
            let model = ChannelModel::new(
                h_l,
                a0,
                mixture,
                InterruptionProbs {
                    p_tir: p_int,
                    p_cap: 1.0,
                    p_int,
                },
            )?;
            let frac = s.next_uniform();
            worst = worst.max(outage_vs_quadrature_for(&model, &[frac])?);
        }
        Ok(CheckResult::within(
            "outage_vs_quadrature",
            worst,
            tol.outage_quadrature,
            format!("{RANDOM_OUTAGE_CASES} random mixtures and thresholds"),
        ))
    })
}

pub fn meijer_reduction(cfg: &ExperimentConfig, tol: &Tolerances) -> Vec<CheckResult> {
    let run = || -> Result<(f64, f64), CliError> {
        let (mut cdf_worst, mut pdf_worst): (f64, f64) = (0.0, 0.0);
        for k in 0..RANDOM_MEIJER_CASES {
            let mut s = RandomStream::new(cfg.simulation.seed ^ CHECK_SEED_SALT, 1_000 + k);
            let x = 0.02 + 0.93 * s.next_uniform();
            let a = log_uniform(&mut s, 0.3, 8.0);
            let b = log_uniform(&mut s, 0.3, 8.0);
            cdf_worst = cdf_worst.max((meijer::cdf_term(x, a, b)? - reg_inc_beta(x, a, b)?).abs());
            let direct = BetaComponent::new(a, b)?.pdf(x);
            let series = meijer::density_term(x, a, b)?;
            pdf_worst = pdf_worst.max((series - direct).abs() / direct.abs().max(1.0));
        }
        Ok((cdf_worst, pdf_worst))
    };
    match run() {
        Ok((c, p)) => vec![
            CheckResult::within(
                "meijer_cdf_reduction",
                c,
                tol.meijer_cdf,
                format!("{RANDOM_MEIJER_CASES} random (x, alpha, beta)"),
            ),
            CheckResult::within(
                "meijer_pdf_reduction",
                p,
                tol.meijer_pdf,
                format!("{RANDOM_MEIJER_CASES} random (x, alpha, beta), relative above 1"),
            ),
        ],
        Err(e) => vec![
            CheckResult::error("meijer_cdf_reduction", &e),
            CheckResult::error("meijer_pdf_reduction", &e),
        ],
    }
}

/// One Monte Carlo run of the link grid.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub wind_speed: f64,
    pub z_w: f64,
    pub z_a: f64,
    pub theta_fov: f64,
    pub report: SimulationReport,
}

pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<GridRun>, CliError> {
    let a = &cfg.analysis;
    let mut out = Vec::new();
    for &z_w in &a.z_w_grid {
        for &z_a in &a.z_a_grid {
            for &theta_fov in &a.theta_fov_grid {
                for &u in &a.wind_grid {
                    let mut geom = cfg.geometry();
                    geom.z_w = z_w;
                    geom.z_a = z_a;
                    geom.theta_fov = theta_fov;
                    let report = run_simulation(
                        &geom,
                        &cfg.environment_at(u),
                        &cfg.options(cfg.h_th_for(z_w, z_a)),
                    )?;
                    out.push(GridRun {
                        wind_speed: u,
                        z_w,
                        z_a,
                        theta_fov,
                        report,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn cell(g: &GridRun) -> String {
    format!(
        "U={} z_w={} z_a={} fov={}",
        g.wind_speed, g.z_w, g.z_a, g.theta_fov
    )
}

/// Closed-form outage and interruption against Monte Carlo frequencies.
pub fn closed_vs_mc(grid: &[GridRun], tol: &Tolerances) -> Vec<CheckResult> {
    let (mut out_worst, mut int_worst): (f64, f64) = (0.0, 0.0);
    let (mut out_cell, mut int_cell) = (String::new(), String::new());
    let (mut out_bad, mut int_bad) = (0, 0);
    let mut missing = 0;
    for g in grid {
        let r = &g.report;
        let ie = r.empirical_interruption;
        let z = (ie.value - r.closed_form.interruption.p_int).abs() / ie.stderr;
        if z > tol.mc_sigmas {
            int_bad += 1;
        }
        if z > int_worst {
            int_worst = z;
            int_cell = cell(g);
        }
        match (r.closed_form.p_out, r.empirical_outage) {
            (Some(p), Some(e)) => {
                let z = (e.value - p).abs() / e.stderr;
                if z > tol.mc_sigmas {
                    out_bad += 1;
                }
                if z > out_worst {
                    out_worst = z;
                    out_cell = cell(g);
                }
            }
            _ => missing += 1,
        }
    }
    let n = grid.len();
    let mut out = CheckResult::within(
        "outage_closed_vs_mc",
        out_worst,
        tol.mc_sigmas,
        format!("{out_bad}/{n} cells beyond bound; worst at {out_cell}; {missing} cells without closed form"),
    );
    if missing > 0 {
        out.passed = false;
    }
    vec![
        out,
        CheckResult::within(
            "interruption_closed_vs_mc",
            int_worst,
            tol.mc_sigmas,
            format!("{int_bad}/{n} cells beyond bound; worst at {int_cell}"),
        ),
    ]
}

pub fn tir_floor(cfg: &ExperimentConfig, grid: &[GridRun], tol: &Tolerances) -> Vec<CheckResult> {
    let mut violations = 0;
    let mut missing = 0;
    for g in grid {
        match g.report.closed_form.p_out {
            Some(p) if p >= g.report.closed_form.interruption.p_tir => {}
            Some(_) => violations += 1,
            None => missing += 1,
        }
    }
    let floor = CheckResult::count(
        "tir_floor",
        violations + missing,
        format!(
            "{} cells, {violations} below p_tir, {missing} without closed form",
            grid.len()
        ),
    );
    let limit = guard("tir_limit", || {
        let idx = cfg.environment().indices;
        let tc = idx.critical_angle();
        let mut worst: f64 = 0.0;
        for &u in &cfg.analysis.wind_grid {
            let inc = incidence_model_for_wind(u)?;
            let aoa = aoa_model_for_wind(u, &idx)?;
            let ptir = p_tir(&inc, tc)?;
            let wide = p_interruption(&inc, &aoa, tc, 89.0)?;
            worst = worst.max((wide.p_int - ptir).abs() / ptir);
        }
        Ok(CheckResult::within(
            "tir_limit",
            worst,
            tol.tir_limit_rel,
            "P_out at h_th = 0 and 89 deg field of view against p_tir".into(),
        ))
    });
    vec![floor, limit]
}

/// Orderings of the closed-form outage over receiver altitude and
/// transmitter depth.
pub fn depth_altitude_trends(grid: &[GridRun]) -> CheckResult {
    let find = |u: f64, fov: f64, z_w: f64, z_a: f64| {
        grid.iter()
            .find(|g| g.wind_speed == u && g.theta_fov == fov && g.z_w == z_w && g.z_a == z_a)
            .and_then(|g| g.report.closed_form.p_out)
    };
    let mut keys: Vec<(f64, f64)> = grid.iter().map(|g| (g.wind_speed, g.theta_fov)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    let mut z_ws: Vec<f64> = grid.iter().map(|g| g.z_w).collect();
    z_ws.sort_by(f64::total_cmp);
    z_ws.dedup();
    let mut z_as: Vec<f64> = grid.iter().map(|g| g.z_a).collect();
    z_as.sort_by(f64::total_cmp);
    z_as.dedup();

    let mut compared = 0;
    let mut bad = Vec::new();
    for &(u, fov) in &keys {
        for &z_w in &z_ws {
            for pair in z_as.windows(2) {
                if let (Some(lo), Some(hi)) =
                    (find(u, fov, z_w, pair[0]), find(u, fov, z_w, pair[1]))
                {
                    compared += 1;
                    if !(hi > lo) {
                        bad.push(format!(
                            "U={u} fov={fov} z_w={z_w}: z_a={} gives {hi} vs {lo}",
                            pair[1]
                        ));
                    }
                }
            }
        }
        for &z_a in &z_as {
            for pair in z_ws.windows(2) {
                if let (Some(shallow), Some(deep)) =
                    (find(u, fov, pair[0], z_a), find(u, fov, pair[1], z_a))
                {
                    compared += 1;
                    if !(deep < shallow) {
                        bad.push(format!(
                            "U={u} fov={fov} z_a={z_a}: z_w={} gives {deep} vs {shallow}",
                            pair[1]
                        ));
                    }
                }
            }
        }
    }
    let mut r = CheckResult::count(
        "depth_altitude_trends",
        bad.len(),
        format!(
            "{compared} comparisons; {}",
            if bad.is_empty() {
                "all ordered".into()
            } else {
                bad.join("; ")
            }
        ),
    );
    if compared == 0 {
        r.passed = false;
        r.detail = "grid has no comparable pairs".into();
    }
    r
}

pub fn path_loss_sanity(cfg: &ExperimentConfig, tol: &Tolerances) -> Vec<CheckResult> {
    let calm = guard("calm_sea_no_bubbles", || {
        let mut b = cfg.environment_at(0.0).bubble_model();
        b.wind_speed = 0.0;
        let mut worst: f64 = 0.0;
        for z in [0.0, 0.1, 1.0, 10.0] {
            worst = worst.max(bubble_scattering(z, &b)?.abs());
        }
        worst = worst.max(bubble_optical_depth(30.0, &b)?.abs());
        Ok(CheckResult::within(
            "calm_sea_no_bubbles",
            worst,
            0.0,
            "b_bub at U = 0".into(),
        ))
    });
    let mut bad = 0;
    for u in [0.0, 2.0, 5.0, 7.0, 7.5] {
        if efolding_depth(u) != 0.4 {
            bad += 1;
        }
    }
    let jump = (efolding_depth(7.5 + 1e-9) - efolding_depth(7.5)).abs();
    if jump > 1e-9 {
        bad += 1;
    }
    let efold = CheckResult::count(
        "efolding_depth",
        bad,
        format!("L = 0.4 m up to 7.5 m/s; jump at the breakpoint {jump:e} m"),
    );
    let confined = guard("bubble_confinement", || {
        let mut worst: f64 = 0.0;
        for &u in &cfg.analysis.wind_grid {
            let mut b: BubbleModel = cfg.environment_at(u).bubble_model();
            b.wind_speed = u;
            if u == 0.0 {
                continue;
            }
            let depth = 10.0 * efolding_depth(u);
            let near = bubble_optical_depth(depth, &b)?;
            let far = bubble_optical_depth(5.0 * depth, &b)?;
            worst = worst.max((far - near) / near);
        }
        Ok(CheckResult::within(
            "bubble_confinement",
            worst,
            tol.bubble_confinement,
            "optical depth added beyond ten e-folding depths, relative".into(),
        ))
    });
    vec![calm, efold, confined]
}

/// A stored mixture record must rebuild and agree with quadrature.
pub fn stored_mixture(cfg: &ExperimentConfig, tol: &Tolerances) -> Option<CheckResult> {
    let rec = cfg.analysis.mixture.as_ref()?;
    Some(guard("stored_mixture", || {
        let mixture = rec.mixture()?;
        let geom = cfg.geometry();
        let env = cfg.environment_at(rec.wind_speed);
        let mut g = geom;
        g.z_w = rec.z_w;
        g.z_a = rec.z_a;
        let beam = w2a_core::pointing::beam_at_receiver(&g)?;
        let h_l = w2a_core::path_loss::path_loss(&g, &env.water, &env.bubble_model())?;
        let inc = incidence_model_for_wind(rec.wind_speed)?;
        let aoa = aoa_model_for_wind(rec.wind_speed, &env.indices)?;
        let interruption =
            p_interruption(&inc, &aoa, env.indices.critical_angle(), geom.theta_fov)?;
        let model = ChannelModel::new(h_l, beam.a0, mixture, interruption)?;
        let worst = outage_vs_quadrature_for(&model, &[0.1, 0.5, 0.9])?;
        Ok(CheckResult::within(
            "stored_mixture",
            worst,
            tol.outage_quadrature,
            format!(
                "record for U={} z_w={} z_a={}",
                rec.wind_speed, rec.z_w, rec.z_a
            ),
        ))
    }))
}

/// Reference AoA regression constants, reported next to recovered fits.
pub fn published_aoa_regression() -> (f64, f64, f64) {
    (LAMBDA_A_INTERCEPT, LAMBDA_A_SLOPE, K_A)
}
