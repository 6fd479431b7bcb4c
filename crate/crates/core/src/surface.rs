//! Sea-surface incidence statistics, refraction at the interface and the
//! wind-parameterized angle-of-arrival model.
//!
//! Angles are degrees throughout; radians appear only inside trig calls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{UniformSource, WeibullParams};
use crate::stats::{fit_metrics, FitMetrics, Histogram};

/// Wind speeds over which the regressions below were fitted (m/s).
pub const REGRESSION_WIND_RANGE: (f64, f64) = (6.0, 15.0);

const K_U_INTERCEPT: f64 = 1.7454;
const K_U_SLOPE: f64 = 0.0071;
const LAMBDA_U_INTERCEPT: f64 = 13.6485;
const LAMBDA_U_SLOPE: f64 = 0.2406;
/// AoA scale regression: λ_A = 4.7473 + 0.0957 U (degrees).
pub const LAMBDA_A_INTERCEPT: f64 = 4.7473;
pub const LAMBDA_A_SLOPE: f64 = 0.0957;
/// AoA shape, constant across the regression range.
pub const K_A: f64 = 1.60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefractiveIndices {
    pub n_water: f64,
    pub n_air: f64,
}

impl Default for RefractiveIndices {
    fn default() -> Self {
        Self {
            n_water: 1.33,
            n_air: 1.0,
        }
    }
}

impl RefractiveIndices {
    pub fn new(n_water: f64, n_air: f64) -> Result<Self> {
        if !(n_water > n_air && n_air > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "refractive indices need n_water > n_air > 0 (got {n_water}, {n_air})"
            )));
        }
        Ok(Self { n_water, n_air })
    }

    /// Incidence angle beyond which total internal reflection occurs.
    pub fn critical_angle(&self) -> f64 {
        (self.n_air / self.n_water).asin().to_degrees()
    }
}

fn in_regression_range(wind_speed: f64) -> bool {
    (REGRESSION_WIND_RANGE.0..=REGRESSION_WIND_RANGE.1).contains(&wind_speed)
}

/// Weibull law of the incidence angle θ_I for a given wind speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidenceModel {
    pub wind_speed: f64,
    pub params: WeibullParams,
    /// Set when the wind speed lies outside the regression range.
    pub extrapolated: bool,
}

/// Angle-of-arrival law conditioned on transmission through the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoAModel {
    pub wind_speed: f64,
    pub params: WeibullParams,
    pub critical_angle: f64,
    pub extrapolated: bool,
}

pub fn incidence_model_for_wind(wind_speed: f64) -> Result<IncidenceModel> {
    let params = WeibullParams::new(
        K_U_INTERCEPT + K_U_SLOPE * wind_speed,
        LAMBDA_U_INTERCEPT + LAMBDA_U_SLOPE * wind_speed,
    )?;
    Ok(IncidenceModel {
        wind_speed,
        params,
        extrapolated: !in_regression_range(wind_speed),
    })
}

pub fn aoa_model_for_wind(wind_speed: f64, indices: &RefractiveIndices) -> Result<AoAModel> {
    let params = WeibullParams::new(K_A, LAMBDA_A_INTERCEPT + LAMBDA_A_SLOPE * wind_speed)?;
    Ok(AoAModel {
        wind_speed,
        params,
        critical_angle: indices.critical_angle(),
        extrapolated: !in_regression_range(wind_speed),
    })
}

/// Outcome of a ray meeting the water–air interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refraction {
    /// Transmitted, with the angle (degrees) to the surface normal.
    Transmitted(f64),
    TotalInternalReflection,
}

impl Refraction {
    pub fn angle(self) -> Option<f64> {
        match self {
            Refraction::Transmitted(a) => Some(a),
            Refraction::TotalInternalReflection => None,
        }
    }
}

fn check_incidence(op: &'static str, theta_i: f64) -> Result<()> {
    if (0.0..90.0).contains(&theta_i) {
        Ok(())
    } else {
        Err(Error::domain(
            op,
            format!("incidence {theta_i}° not in [0, 90)"),
        ))
    }
}

/// Snell refraction from water into air.
pub fn snell_refract(theta_i: f64, n: &RefractiveIndices) -> Result<Refraction> {
    check_incidence("snell_refract", theta_i)?;
    let s = n.n_water / n.n_air * theta_i.to_radians().sin();
    if s > 1.0 {
        return Ok(Refraction::TotalInternalReflection);
    }
    Ok(Refraction::Transmitted(s.asin().to_degrees()))
}

/// Angle of arrival θ_A = θ_T − θ_I, or TIR.
pub fn aoa_from_incidence(theta_i: f64, n: &RefractiveIndices) -> Result<Refraction> {
    check_incidence("aoa_from_incidence", theta_i)?;
    Ok(match snell_refract(theta_i, n)? {
        Refraction::Transmitted(t) => Refraction::Transmitted((t - theta_i).max(0.0)),
        tir => tir,
    })
}

/// Inverse of [`aoa_from_incidence`] on `[0, θ_c]`, by bisection.
pub fn incidence_from_aoa(theta_a: f64, n: &RefractiveIndices) -> Result<f64> {
    let theta_c = n.critical_angle();
    let max_aoa = 90.0 - theta_c;
    if !(0.0..=max_aoa).contains(&theta_a) {
        return Err(Error::domain(
            "incidence_from_aoa",
            format!("θ_A = {theta_a}° outside [0, {max_aoa}]"),
        ));
    }
    let aoa = |t: f64| {
        let s = (n.n_water / n.n_air * t.to_radians().sin()).min(1.0);
        s.asin().to_degrees() - t
    };
    let (mut lo, mut hi) = (0.0, theta_c);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if aoa(mid) < theta_a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draws θ_I by inverse CDF.
pub fn sample_incidence(model: &IncidenceModel, src: &mut impl UniformSource) -> f64 {
    model.params.sample_from_uniform(src.next_uniform())
}

/// Weibull maximum-likelihood estimate with histogram fit metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    pub params: WeibullParams,
    pub metrics: FitMetrics,
    pub iterations: usize,
}

const MLE_MIN_SAMPLES: usize = 100;
const MLE_MAX_ITER: usize = 200;
/// Bins for the MSE/R² histogram, spanning `[0, max sample]`.
pub const FIT_BINS: usize = 100;

/// Maximum-likelihood Weibull fit.
///
/// The shape solves the profile-likelihood equation
/// `Σ xᵏ ln x / Σ xᵏ − 1/k − mean(ln x) = 0` by Newton steps kept inside a
/// bisection bracket; the scale follows in closed form.
pub fn fit_weibull_mle(samples: &[f64]) -> Result<WeibullFit> {
    if samples.len() < MLE_MIN_SAMPLES {
        return Err(Error::degenerate(
            "fit_weibull_mle",
            format!("{} samples, need at least {MLE_MIN_SAMPLES}", samples.len()),
        ));
    }
    if samples.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::domain(
            "fit_weibull_mle",
            "samples must be positive and finite",
        ));
    }
    let x_max = samples.iter().cloned().fold(0.0, f64::max);
    let x_min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    if x_max - x_min <= 1e-12 * x_max {
        return Err(Error::degenerate(
            "fit_weibull_mle",
            "samples have zero spread",
        ));
    }
    // Scaled to (0, 1] so xᵏ cannot overflow.
    let logs: Vec<f64> = samples.iter().map(|&x| (x / x_max).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / logs.len() as f64;

    let eval = |k: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let p = (k * l).exp();
            s0 += p;
            s1 += p * l;
            s2 += p * l * l;
        }
        let g = s1 / s0 - 1.0 / k - mean_log;
        let dg = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k);
        (g, dg, s0)
    };

    let (mut lo, mut hi) = (1e-3, 1.0);
    while eval(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NotConverged {
                op: "fit_weibull_mle",
                iterations: 0,
                estimate: hi,
            });
        }
    }
    let mut k = 0.5 * (lo + hi);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=MLE_MAX_ITER {
        iterations = it;
        let (g, dg, _) = eval(k);
        if g < 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let newton = k - g / dg;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - k).abs() <= 1e-12 * k {
            k = next;
            converged = true;
            break;
        }
        k = next;
    }
    if !converged {
        return Err(Error::NotConverged {
            op: "fit_weibull_mle",
            iterations,
            estimate: k,
        });
    }
    let (_, _, s0) = eval(k);
    let scale = x_max * (s0 / logs.len() as f64).powf(1.0 / k);
    let params = WeibullParams::new(k, scale)?;
    let hist = Histogram::from_samples(samples, 0.0, x_max, FIT_BINS)?;
    let metrics = fit_metrics(
        &hist,
        |x| params.pdf(x).unwrap_or(0.0),
        |x| params.cdf(x).unwrap_or(0.0),
    )?;
    Ok(WeibullFit {
        params,
        metrics,
        iterations,
    })
}
