//! Experiment configuration: TOML ingestion, defaults and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use w2a_core::beta_mixture::{EmConfig, MixtureRecord};
use w2a_core::montecarlo::{Environment, SimulationOptions, MIN_TRIALS};
use w2a_core::path_loss::WaterOptics;
use w2a_core::pointing::LinkGeometry;
use w2a_core::surface::{RefractiveIndices, REGRESSION_WIND_RANGE};

use crate::error::{CliError, ConfigDiagnostic};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySection,
    pub environment: EnvironmentSection,
    pub simulation: SimulationSection,
    pub analysis: AnalysisSection,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    /// Transmitter depth (m).
    pub z_w: f64,
    /// Receiver altitude (m).
    pub z_a: f64,
    /// Beam half-divergence (rad).
    pub theta_0: f64,
    /// Lens diameter (m).
    pub d_r: f64,
    /// Field of view (degrees).
    pub theta_fov: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            z_w: 10.0,
            z_a: 5.0,
            theta_0: 0.05,
            d_r: 0.075,
            theta_fov: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    /// m/s
    pub wind_speed: f64,
    /// 1/m
    pub absorption: f64,
    /// 1/m
    pub scattering: f64,
    pub n_water: f64,
    pub n_air: f64,
    pub bubble_q_sca: f64,
    /// m
    pub bubble_r_min: f64,
    pub freeze_r_ref: bool,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        let env = Environment::new(10.0);
        Self {
            wind_speed: env.wind_speed,
            absorption: env.water.absorption,
            scattering: env.water.scattering,
            n_water: env.indices.n_water,
            n_air: env.indices.n_air,
            bubble_q_sca: env.bubble_q_sca,
            bubble_r_min: env.bubble_r_min,
            freeze_r_ref: env.freeze_r_ref,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub n_trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub em: EmConfig,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let o = SimulationOptions::default();
        Self {
            n_trials: o.n_trials,
            seed: o.seed,
            workers: o.workers,
            em: o.em,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdEntry {
    pub z_w: f64,
    pub z_a: f64,
    pub h_th: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Outage threshold on the overall gain, used where no table entry
    /// matches.
    pub h_th: Option<f64>,
    pub h_th_table: Vec<ThresholdEntry>,
    /// degrees
    pub theta_fov_grid: Vec<f64>,
    /// m/s
    pub wind_grid: Vec<f64>,
    /// m
    pub z_w_grid: Vec<f64>,
    /// m
    pub z_a_grid: Vec<f64>,
    /// A stored mixture to cross-check in `validate`.
    pub mixture: Option<MixtureRecord>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            h_th: Some(1e-8),
            h_th_table: Vec::new(),
            theta_fov_grid: vec![10.0, 30.0, 60.0],
            wind_grid: vec![6.0, 10.0, 14.0],
            z_w_grid: vec![10.0, 30.0],
            z_a_grid: vec![5.0, 10.0],
            mixture: None,
        }
    }
}

/// Link-budget quantities carried for provenance only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Metadata {
    pub transmit_power_mw: f64,
    pub extinction_ratio: f64,
    pub wavelength_nm: f64,
}

impl Default for Metadata {
    fn default() -> Self {
        Self {
            transmit_power_mw: 50.0,
            extinction_ratio: 0.2,
            wavelength_nm: 450.0,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn geometry(&self) -> LinkGeometry {
        let g = &self.geometry;
        LinkGeometry {
            z_w: g.z_w,
            z_a: g.z_a,
            theta_0: g.theta_0,
            d_r: g.d_r,
            theta_fov: g.theta_fov,
            wavelength_nm: self.metadata.wavelength_nm,
        }
    }

    pub fn environment(&self) -> Environment {
        self.environment_at(self.environment.wind_speed)
    }

    pub fn environment_at(&self, wind_speed: f64) -> Environment {
        let e = &self.environment;
        Environment {
            wind_speed,
            water: WaterOptics {
                absorption: e.absorption,
                scattering: e.scattering,
            },
            indices: RefractiveIndices {
                n_water: e.n_water,
                n_air: e.n_air,
            },
            bubble_q_sca: e.bubble_q_sca,
            bubble_r_min: e.bubble_r_min,
            freeze_r_ref: e.freeze_r_ref,
        }
    }

    pub fn options(&self, h_th: Option<f64>) -> SimulationOptions {
        SimulationOptions {
            n_trials: self.simulation.n_trials,
            seed: self.simulation.seed,
            workers: self.simulation.workers,
            h_th,
            em: self.simulation.em,
        }
    }

    /// Threshold for a `(z_w, z_a)` link: the matching table entry, else the
    /// global value.
    pub fn h_th_for(&self, z_w: f64, z_a: f64) -> Option<f64> {
        self.analysis
            .h_th_table
            .iter()
            .find(|e| (e.z_w - z_w).abs() < 1e-9 && (e.z_a - z_a).abs() < 1e-9)
            .map(|e| e.h_th)
            .or(self.analysis.h_th)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.simulation.seed = s;
        }
        if let Some(n) = o.trials {
            self.simulation.n_trials = n;
        }
        if let Some(w) = o.workers {
            self.simulation.workers = w;
        }
    }

    /// Wind speeds that lie outside the regression range.
    pub fn extrapolated_winds(&self) -> Vec<f64> {
        let (lo, hi) = REGRESSION_WIND_RANGE;
        std::iter::once(self.environment.wind_speed)
            .chain(self.analysis.wind_grid.iter().copied())
            .filter(|u| !(lo..=hi).contains(u))
            .collect()
    }

    /// Echo of the effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Semantic checks; each failure names the offending key.
    pub fn validate(&self) -> Vec<(&'static str, &'static str, String)> {
        let mut errs = Vec::new();
        let mut positive = |section: &'static str, key: &'static str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push((section, key, format!("{key} = {v} must be positive")));
            }
        };
        let g = &self.geometry;
        positive("geometry", "z_w", g.z_w);
        positive("geometry", "z_a", g.z_a);
        positive("geometry", "theta_0", g.theta_0);
        positive("geometry", "d_r", g.d_r);
        positive("geometry", "theta_fov", g.theta_fov);
        positive("metadata", "wavelength_nm", self.metadata.wavelength_nm);
        positive("environment", "bubble_q_sca", self.environment.bubble_q_sca);
        positive("environment", "bubble_r_min", self.environment.bubble_r_min);
        if g.theta_0 >= std::f64::consts::FRAC_PI_2 {
            errs.push((
                "geometry",
                "theta_0",
                "theta_0 must be below pi/2 rad".into(),
            ));
        }
        if g.theta_fov > 90.0 {
            errs.push((
                "geometry",
                "theta_fov",
                format!("theta_fov = {} exceeds 90 degrees", g.theta_fov),
            ));
        }
        let e = &self.environment;
        if !(e.wind_speed >= 0.0) {
            errs.push((
                "environment",
                "wind_speed",
                format!("wind_speed = {} must be nonnegative", e.wind_speed),
            ));
        }
        if !(e.absorption >= 0.0) {
            errs.push((
                "environment",
                "absorption",
                "absorption must be nonnegative".into(),
            ));
        }
        if !(e.scattering >= 0.0) {
            errs.push((
                "environment",
                "scattering",
                "scattering must be nonnegative".into(),
            ));
        }
        if !(e.n_water > e.n_air && e.n_air > 0.0) {
            errs.push(("environment", "n_water", "need n_water > n_air > 0".into()));
        }
        if self.simulation.n_trials < MIN_TRIALS {
            errs.push((
                "simulation",
                "n_trials",
                format!(
                    "n_trials = {} is below the minimum of {MIN_TRIALS}",
                    self.simulation.n_trials
                ),
            ));
        }
        if let Err(err) = self.simulation.em.validate() {
            errs.push(("simulation.em", "max_iters", err.to_string()));
        }
        let a = &self.analysis;
        if let Some(h) = a.h_th {
            if !(h >= 0.0) {
                errs.push((
                    "analysis",
                    "h_th",
                    format!("h_th = {h} must be nonnegative"),
                ));
            }
        }
        if a.h_th_table.iter().any(|t| !(t.h_th >= 0.0)) {
            errs.push((
                "analysis",
                "h_th_table",
                "every h_th must be nonnegative".into(),
            ));
        }
        let grids: [(&'static str, &Vec<f64>, f64); 4] = [
            ("theta_fov_grid", &a.theta_fov_grid, 90.0),
            ("wind_grid", &a.wind_grid, f64::INFINITY),
            ("z_w_grid", &a.z_w_grid, f64::INFINITY),
            ("z_a_grid", &a.z_a_grid, f64::INFINITY),
        ];
        for (key, grid, max) in grids {
            if grid.is_empty() {
                errs.push(("analysis", key, format!("{key} must not be empty")));
            } else if grid.iter().any(|&v| !(v >= 0.0 && v <= max)) {
                errs.push((
                    "analysis",
                    key,
                    format!("{key} has values outside [0, {max}]"),
                ));
            } else if key != "wind_grid" && grid.contains(&0.0) {
                errs.push(("analysis", key, format!("{key} values must be positive")));
            }
        }
        errs
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, col)
}

/// Line of `key = ...` inside table `[section]`, if present.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest
                .trim_start_matches('[')
                .split(']')
                .next()
                .unwrap_or("")
                .trim()
                .to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

pub fn parse(text: &str, path: &str) -> Result<ExperimentConfig, CliError> {
    parse_with(text, path, &Overrides::default())
}

/// Parses `text`, applies `overrides`, then validates the merged result.
pub fn parse_with(
    text: &str,
    path: &str,
    overrides: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unzip();
        CliError::Config(vec![ConfigDiagnostic {
            path: path.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }])
    })?;
    cfg.apply(overrides);
    check(&cfg, text, path)?;
    Ok(cfg)
}

/// Runs the semantic checks, pointing at the offending lines of `text`.
pub fn check(cfg: &ExperimentConfig, text: &str, path: &str) -> Result<(), CliError> {
    let errs = cfg.validate();
    if errs.is_empty() {
        return Ok(());
    }
    Err(CliError::Config(
        errs.into_iter()
            .map(|(section, key, message)| ConfigDiagnostic {
                path: path.to_string(),
                line: locate(text, section, key),
                column: None,
                message,
            })
            .collect(),
    ))
}

/// Loads `path`, or the built-in defaults when no file is given.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let (text, name) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Config(vec![ConfigDiagnostic {
                    path: p.display().to_string(),
                    line: None,
                    column: None,
                    message: format!("cannot read: {e}"),
                }])
            })?;
            (text, p.display().to_string())
        }
        None => (String::new(), "<defaults>".to_string()),
    };
    parse_with(&text, &name, overrides)
}
