//! Two-parameter Weibull distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::special::ln_gamma;

/// Shape `k` and scale `λ` of a Weibull law. The scale carries the units of
/// the variate (degrees for every angle model in this crate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Weibull shape {shape} and scale {scale} must be positive and finite"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_support("weibull_pdf", x)?;
        if x == 0.0 {
            return Ok(match self.shape {
                k if k < 1.0 => f64::INFINITY,
                k if k == 1.0 => 1.0 / self.scale,
                _ => 0.0,
            });
        }
        let z = x / self.scale;
        let zk = z.powf(self.shape);
        Ok(self.shape / self.scale * zk / z * (-zk).exp())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_support("weibull_cdf", x)?;
        Ok(-(-(x / self.scale).powf(self.shape)).exp_m1())
    }

    /// Survival function `1 - cdf(x)`.
    pub fn sf(&self, x: f64) -> Result<f64> {
        check_support("weibull_sf", x)?;
        Ok((-(x / self.scale).powf(self.shape)).exp())
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::domain(
                "weibull_quantile",
                format!("p = {p} not in [0, 1)"),
            ));
        }
        Ok(self.scale * (-(-p).ln_1p()).powf(1.0 / self.shape))
    }

    pub fn mean(&self) -> f64 {
        self.scale
            * ln_gamma(1.0 + 1.0 / self.shape)
                .map(f64::exp)
                .unwrap_or(f64::NAN)
    }

    /// Mode of the density (zero when `shape <= 1`).
    pub fn mode(&self) -> f64 {
        if self.shape <= 1.0 {
            0.0
        } else {
            self.scale * ((self.shape - 1.0) / self.shape).powf(1.0 / self.shape)
        }
    }

    /// Inverse-CDF draw from a uniform variate in (0, 1).
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        self.scale * (-(-u).ln_1p()).powf(1.0 / self.shape)
    }
}

fn check_support(op: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("x = {x} must be nonnegative")))
    }
}
