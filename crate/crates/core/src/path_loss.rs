//! Underwater path loss `h_L = exp(−∫₀^{z_w} c_w dz)` with absorption,
//! particle scattering and the wind-driven bubble layer (Hall–Novarini).
//!
//! The in-air segment contributes no attenuation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::integrate;
use crate::pointing::LinkGeometry;

/// Scale of the bubble-population law (its normalization units are implicit).
const BUBBLE_DENSITY_SCALE: f64 = 1.6e10;
/// Reference bubble radius at the surface (m).
const R_REF_SURFACE: f64 = 54.4e-6;
/// Depth growth of the reference radius (m per m of depth).
const R_REF_DEPTH_SLOPE: f64 = 1.984e-6;
const BUBBLE_WIND_REF: f64 = 13.0;
const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaterOptics {
    /// Absorption coefficient a(λ) (1/m).
    pub absorption: f64,
    /// Scattering coefficient b(λ) (1/m).
    pub scattering: f64,
}

impl WaterOptics {
    /// Coastal water at 450 nm.
    pub const COASTAL: WaterOptics = WaterOptics {
        absorption: 0.0088,
        scattering: 0.216,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.absorption >= 0.0 && self.scattering >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "water coefficients must be nonnegative (a = {}, b = {})",
                self.absorption, self.scattering
            )));
        }
        Ok(())
    }

    pub fn attenuation(&self) -> f64 {
        self.absorption + self.scattering
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleModel {
    /// Mean scattering efficiency.
    pub q_sca: f64,
    /// Minimum bubble radius (m).
    pub r_min: f64,
    /// Wind speed (m/s).
    pub wind_speed: f64,
    /// Hold the reference radius at its surface value instead of letting it
    /// grow with depth.
    #[serde(default)]
    pub freeze_r_ref: bool,
}

impl BubbleModel {
    pub fn new(wind_speed: f64) -> Self {
        Self {
            q_sca: 2.0,
            r_min: 1e-6,
            wind_speed,
            freeze_r_ref: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_sca > 0.0 && self.r_min > 0.0 && self.wind_speed >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bubble model needs q_sca > 0, r_min > 0, U >= 0 (got {}, {}, {})",
                self.q_sca, self.r_min, self.wind_speed
            )));
        }
        Ok(())
    }

    /// Mean geometric cross-section `Ψ ≈ 3π r_min²` (m²).
    pub fn cross_section(&self) -> f64 {
        3.0 * std::f64::consts::PI * self.r_min * self.r_min
    }

    /// Reference bubble radius at depth `z` (m).
    pub fn r_ref(&self, z: f64) -> f64 {
        if self.freeze_r_ref {
            R_REF_SURFACE
        } else {
            R_REF_SURFACE + R_REF_DEPTH_SLOPE * z
        }
    }
}

/// e-folding depth of the bubble layer `L(U)` (m).
pub fn efolding_depth(wind_speed: f64) -> f64 {
    if wind_speed <= 7.5 {
        0.4
    } else {
        0.4 + 0.115 * (wind_speed - 7.5)
    }
}

/// Bubble number density at depth `z` (1/m³).
pub fn bubble_density(z: f64, model: &BubbleModel) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::domain(
            "bubble_density",
            format!("depth {z} must be nonnegative"),
        ));
    }
    let r_ref = model.r_ref(z);
    let wind = (model.wind_speed / BUBBLE_WIND_REF).powi(3);
    Ok(
        BUBBLE_DENSITY_SCALE * r_ref.powi(4) / (3.0 * model.r_min.powi(3))
            * wind
            * (-z / efolding_depth(model.wind_speed)).exp(),
    )
}

/// Bubble-induced scattering coefficient `Q_sca · Ψ · N_b(z)` (1/m).
pub fn bubble_scattering(z: f64, model: &BubbleModel) -> Result<f64> {
    Ok(model.q_sca * model.cross_section() * bubble_density(z, model)?)
}

/// Bubble optical depth accumulated over `[0, depth]`.
pub fn bubble_optical_depth(depth: f64, model: &BubbleModel) -> Result<f64> {
    model.validate()?;
    if !(depth >= 0.0) {
        return Err(Error::domain(
            "bubble_optical_depth",
            format!("depth {depth} must be nonnegative"),
        ));
    }
    if model.wind_speed == 0.0 {
        return Ok(0.0);
    }
    let scale = bubble_scattering(0.0, model)?;
    // Relative tolerance on the surface-normalized integrand.
    let q = integrate(
        |z| bubble_scattering(z, model).unwrap_or(0.0) / scale,
        0.0,
        depth,
        QUAD_TOL,
    )?;
    Ok(q.value * scale)
}

/// Breakdown of the underwater attenuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub h_l: f64,
    pub water_optical_depth: f64,
    pub bubble_optical_depth: f64,
}

pub fn path_loss_breakdown(
    geom: &LinkGeometry,
    water: &WaterOptics,
    bubbles: &BubbleModel,
) -> Result<PathLoss> {
    geom.validate()?;
    water.validate()?;
    let water_od = water.attenuation() * geom.z_w;
    let bubble_od = bubble_optical_depth(geom.z_w, bubbles)?;
    Ok(PathLoss {
        h_l: (-(water_od + bubble_od)).exp(),
        water_optical_depth: water_od,
        bubble_optical_depth: bubble_od,
    })
}

/// Path loss `h_L` in (0, 1].
pub fn path_loss(geom: &LinkGeometry, water: &WaterOptics, bubbles: &BubbleModel) -> Result<f64> {
    Ok(path_loss_breakdown(geom, water, bubbles)?.h_l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom(z_w: f64) -> LinkGeometry {
        LinkGeometry {
            z_w,
            z_a: 5.0,
            theta_0: 0.05,
            d_r: 0.075,
            theta_fov: 30.0,
            wavelength_nm: 450.0,
        }
    }

    #[test]
    fn efolding_examples() {
        assert_eq!(efolding_depth(7.5), 0.4);
        assert_eq!(efolding_depth(6.0), 0.4);
        assert!((efolding_depth(10.0) - 0.6875).abs() < 1e-15);
        assert!((efolding_depth(7.5 + 1e-12) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn bubble_density_scaling() {
        assert_eq!(bubble_density(0.0, &BubbleModel::new(0.0)).unwrap(), 0.0);
        let hi = bubble_density(0.0, &BubbleModel::new(13.0)).unwrap();
        let lo = bubble_density(0.0, &BubbleModel::new(6.5)).unwrap();
        assert!((hi / lo - 8.0).abs() < 1e-12);
        assert!(bubble_density(100.0, &BubbleModel::new(13.0)).unwrap() < 1e-30 * hi);
        assert!(bubble_density(-1.0, &BubbleModel::new(13.0)).is_err());
    }

    #[test]
    fn bubble_scattering_hand_evaluation() {
        assert_eq!(bubble_scattering(0.0, &BubbleModel::new(0.0)).unwrap(), 0.0);
        // U = 13: wind factor 1, r_ref = 54.4 µm, r_min = 1 µm.
        // N_b = 1.6e10 · (54.4e-6)⁴ / (3 · 1e-18) ≈ 4.6708e10
        // b = 2 · 3π · 1e-12 · N_b
        let n_b = 1.6e10 * 54.4e-6f64.powi(4) / 3e-18;
        let expected = 2.0 * 3.0 * std::f64::consts::PI * 1e-12 * n_b;
        let got = bubble_scattering(0.0, &BubbleModel::new(13.0)).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-14);
        assert!((got - 0.880_431_251_655_768_5).abs() < 1e-12, "{got}");
        let mut m = BubbleModel::new(13.0);
        m.q_sca = 4.0;
        assert!((bubble_scattering(0.0, &m).unwrap() / got - 2.0).abs() < 1e-14);
    }

    #[test]
    fn path_loss_examples() {
        let clear = WaterOptics {
            absorption: 0.0,
            scattering: 0.0,
        };
        assert_eq!(
            path_loss(&geom(10.0), &clear, &BubbleModel::new(0.0)).unwrap(),
            1.0
        );
        let h = path_loss(&geom(10.0), &WaterOptics::COASTAL, &BubbleModel::new(0.0)).unwrap();
        assert!((h - (-2.248f64).exp()).abs() < 1e-15);
        let bub = BubbleModel::new(10.0);
        let h10 = path_loss(&geom(10.0), &WaterOptics::COASTAL, &bub).unwrap();
        let h30 = path_loss(&geom(30.0), &WaterOptics::COASTAL, &bub).unwrap();
        assert!(h30 < h10);
        assert!(h10 <= (-2.248f64).exp());
    }

    #[test]
    fn frozen_radius_matches_closed_form() {
        for u in [6.0, 10.0, 14.0] {
            let mut m = BubbleModel::new(u);
            m.freeze_r_ref = true;
            let l = efolding_depth(u);
            for depth in [0.3, 2.0, 10.0, 30.0] {
                let closed = bubble_scattering(0.0, &m).unwrap() * l * (1.0 - (-depth / l).exp());
                let quad = bubble_optical_depth(depth, &m).unwrap();
                assert!(((quad - closed) / closed).abs() < 1e-8, "U={u} z={depth}");
            }
        }
    }

    #[test]
    fn bubble_layer_confined_near_surface() {
        for u in [6.0, 10.0, 14.0] {
            let m = BubbleModel::new(u);
            let depth = 10.0 * efolding_depth(u);
            let base = bubble_optical_depth(depth, &m).unwrap();
            let deeper = bubble_optical_depth(depth * 5.0, &m).unwrap();
            assert!((deeper - base) / base < 1e-3, "U={u}");
        }
    }

    proptest! {
        #[test]
        fn path_loss_decreasing(z_w in 1.0f64..40.0, a in 0.0f64..0.5, b in 0.0f64..0.5, u in 0.5f64..15.0) {
            let water = WaterOptics { absorption: a, scattering: b };
            let base = path_loss(&geom(z_w), &water, &BubbleModel::new(u)).unwrap();
            prop_assert!(base > 0.0 && base <= 1.0);
            prop_assert!(path_loss(&geom(z_w + 0.5), &water, &BubbleModel::new(u)).unwrap() < base);
            let more_a = WaterOptics { absorption: a + 0.01, scattering: b };
            prop_assert!(path_loss(&geom(z_w), &more_a, &BubbleModel::new(u)).unwrap() < base);
            let more_b = WaterOptics { absorption: a, scattering: b + 0.01 };
            prop_assert!(path_loss(&geom(z_w), &more_b, &BubbleModel::new(u)).unwrap() < base);
            prop_assert!(path_loss(&geom(z_w), &water, &BubbleModel::new(u + 0.5)).unwrap() < base);
        }
    }
}
