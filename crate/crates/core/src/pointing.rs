//! Beam geometry at the receiver and the pointing-error loss `h_P`.
//!
//! The transmitter and receiver are laterally co-located, so the beam
//! footprint is displaced only by refraction at the surface:
//! `r_d = z_a · tan θ_A`. The loss follows the Gaussian-beam approximation
//! `h_P = A0 · exp(−2 r_d² / ω_Leq²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::erf;
use crate::surface::AoAModel;

/// Deterministic link scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Transmitter depth below the surface (m).
    pub z_w: f64,
    /// Receiver altitude above the surface (m).
    pub z_a: f64,
    /// Beam half-divergence angle (rad).
    pub theta_0: f64,
    /// Receiver lens diameter (m).
    pub d_r: f64,
    /// Receiver field of view (degrees).
    pub theta_fov: f64,
    /// Carrier wavelength (nm); descriptive only.
    pub wavelength_nm: f64,
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("z_w", self.z_w),
            ("z_a", self.z_a),
            ("theta_0", self.theta_0),
            ("d_r", self.d_r),
            ("theta_fov", self.theta_fov),
            ("wavelength_nm", self.wavelength_nm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if self.theta_0 >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidParameter(format!(
                "theta_0 = {} rad must be below π/2",
                self.theta_0
            )));
        }
        Ok(())
    }

    /// Total propagation distance `L = z_w + z_a`.
    pub fn path_length(&self) -> f64 {
        self.z_w + self.z_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamAtReceiver {
    /// Beam radius at distance `L` (m).
    pub omega_l: f64,
    /// Aperture-to-beam ratio `D_r √π / (2√2 ω_L)`.
    pub v: f64,
    /// Maximum collected power fraction, `erf(v)²`.
    pub a0: f64,
    /// Equivalent beam width (m).
    pub omega_leq: f64,
}

pub fn beam_at_receiver(geom: &LinkGeometry) -> Result<BeamAtReceiver> {
    geom.validate()?;
    let omega_l = geom.path_length() * geom.theta_0.tan();
    Ok(beam_from_waist(omega_l, geom.d_r))
}

pub(crate) fn beam_from_waist(omega_l: f64, d_r: f64) -> BeamAtReceiver {
    let v = d_r * std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::SQRT_2 * omega_l);
    let erf_v = erf(v);
    let ratio = std::f64::consts::PI.sqrt() * erf_v / (2.0 * v * (-v * v).exp());
    BeamAtReceiver {
        omega_l,
        v,
        a0: erf_v * erf_v,
        omega_leq: omega_l * ratio.sqrt(),
    }
}

/// Pointing loss for a radial displacement `r_d` (m).
pub fn pointing_loss(r_d: f64, beam: &BeamAtReceiver) -> Result<f64> {
    if !(r_d >= 0.0) {
        return Err(Error::domain(
            "pointing_loss",
            format!("r_d = {r_d} must be nonnegative"),
        ));
    }
    Ok(beam.a0 * (-2.0 * r_d * r_d / (beam.omega_leq * beam.omega_leq)).exp())
}

/// Displacement at the receiver plane for an arrival angle `theta_a` (deg).
pub fn radial_displacement(theta_a: f64, z_a: f64) -> Result<f64> {
    if !(0.0..90.0).contains(&theta_a) {
        return Err(Error::domain(
            "radial_displacement",
            format!("θ_A = {theta_a}° not in [0, 90)"),
        ));
    }
    Ok(z_a * theta_a.to_radians().tan())
}

/// Displacement that produces a given pointing loss.
pub fn displacement_for_loss(h_p: f64, beam: &BeamAtReceiver) -> Result<f64> {
    if !(h_p > 0.0 && h_p <= beam.a0) {
        return Err(Error::domain(
            "displacement_for_loss",
            format!("h_P = {h_p} not in (0, A0 = {}]", beam.a0),
        ));
    }
    Ok(
        (-0.5 * beam.omega_leq * beam.omega_leq * (h_p / beam.a0).ln())
            .max(0.0)
            .sqrt(),
    )
}

/// Density of `r_d` implied by the Weibull AoA model.
///
/// Change of variables `θ_A = atan(r_d / z_a)` with θ_A in degrees, so the
/// Jacobian is `(180/π) · z_a / (z_a² + r_d²)`.
pub fn pdf_radial(r_d: f64, aoa: &AoAModel, z_a: f64) -> Result<f64> {
    if !(r_d >= 0.0) {
        return Err(Error::domain(
            "pdf_radial",
            format!("r_d = {r_d} must be nonnegative"),
        ));
    }
    let theta = (r_d / z_a).atan().to_degrees();
    let jacobian = (180.0 / std::f64::consts::PI) * z_a / (z_a * z_a + r_d * r_d);
    Ok(aoa.params.pdf(theta)? * jacobian)
}

/// Exact density of `h_P` under the Weibull AoA model.
///
/// Diverges as `h_P → A0` when the AoA shape lies below 2 (the mass stays
/// finite); densities under 1e-300 are reported as zero.
pub fn pdf_pointing_loss(h_p: f64, beam: &BeamAtReceiver, aoa: &AoAModel, z_a: f64) -> Result<f64> {
    if !(h_p > 0.0 && h_p <= beam.a0) {
        return Err(Error::domain(
            "pdf_pointing_loss",
            format!("h_P = {h_p} not in (0, A0 = {}]", beam.a0),
        ));
    }
    let r = displacement_for_loss(h_p, beam)?;
    if r == 0.0 {
        let k = aoa.params.shape;
        return Ok(if k < 2.0 {
            f64::INFINITY
        } else if k == 2.0 {
            // Finite limit of the transformed density.
            let w2 = beam.omega_leq * beam.omega_leq;
            let scale_rad = aoa.params.scale.to_radians();
            w2 / (2.0 * beam.a0 * z_a * z_a * scale_rad * scale_rad)
        } else {
            0.0
        });
    }
    // Assemble in log space: tiny h_P and tiny f_r both underflow otherwise.
    let f_r = pdf_radial(r, aoa, z_a)?;
    if f_r <= 0.0 {
        return Ok(0.0);
    }
    let w2 = beam.omega_leq * beam.omega_leq;
    let ln_density = w2.ln() - (4.0f64).ln() - h_p.ln() - r.ln() + f_r.ln();
    let density = ln_density.exp();
    Ok(if density < 1e-300 { 0.0 } else { density })
}

/// CDF of `h_P`: `P(h_P ≤ h) = P(θ_A ≥ atan(r(h)/z_a))`.
pub fn cdf_pointing_loss(h_p: f64, beam: &BeamAtReceiver, aoa: &AoAModel, z_a: f64) -> Result<f64> {
    if h_p <= 0.0 {
        return Ok(0.0);
    }
    if h_p >= beam.a0 {
        return Ok(1.0);
    }
    let r = displacement_for_loss(h_p, beam)?;
    aoa.params.sf((r / z_a).atan().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, integrate_to_infinity};
    use crate::surface::{aoa_model_for_wind, RefractiveIndices};
    use proptest::prelude::*;

    fn reference_geometry(z_a: f64) -> LinkGeometry {
        LinkGeometry {
            z_w: 10.0,
            z_a,
            theta_0: 0.05,
            d_r: 0.075,
            theta_fov: 90.0,
            wavelength_nm: 450.0,
        }
    }

    #[test]
    fn beam_reference_values() {
        let beam = beam_at_receiver(&reference_geometry(10.0)).unwrap();
        // ω_L = 20 · tan(0.05); A0 and ω_Leq from an independent 40-digit evaluation.
        assert!((beam.omega_l - 1.000_834_167_510_775_8).abs() < 1e-12);
        assert!((beam.a0 - A0_REF).abs() < 1e-15, "{}", beam.a0);
        assert!(
            (beam.omega_leq - OMEGA_LEQ_REF).abs() < 1e-12,
            "{}",
            beam.omega_leq
        );
        assert!(beam.omega_leq >= beam.omega_l);
    }

    const A0_REF: f64 = 0.002_803_689_959_801_883_5;
    const OMEGA_LEQ_REF: f64 = 1.001_570_243_284_363_9;

    #[test]
    fn beam_limits_for_wide_aperture() {
        let mut g = reference_geometry(5.0);
        g.d_r = 50.0;
        let beam = beam_at_receiver(&g).unwrap();
        assert!((beam.a0 - 1.0).abs() < 1e-12);
        let small = beam_from_waist(1.0, 1e-4);
        assert!((small.omega_leq / small.omega_l - 1.0).abs() < 1e-6);
    }

    #[test]
    fn loss_examples() {
        let beam = beam_at_receiver(&reference_geometry(5.0)).unwrap();
        let w = beam.omega_leq;
        assert_eq!(pointing_loss(0.0, &beam).unwrap(), beam.a0);
        let at = pointing_loss(w / 2f64.sqrt(), &beam).unwrap();
        assert!((at - beam.a0 * (-1.0f64).exp()).abs() < 1e-15);
        let at = pointing_loss(3.0 * w, &beam).unwrap();
        assert!(((at - beam.a0 * (-18.0f64).exp()) / at).abs() < 1e-12);
        assert!(pointing_loss(-1.0, &beam).is_err());
    }

    #[test]
    fn displacement_examples() {
        assert_eq!(radial_displacement(0.0, 10.0).unwrap(), 0.0);
        assert!((radial_displacement(45.0, 10.0).unwrap() - 10.0).abs() < 1e-12);
        let r = radial_displacement(11.68, 5.0).unwrap();
        assert!((r - 5.0 * 11.68f64.to_radians().tan()).abs() < 1e-15);
        assert!(radial_displacement(90.0, 1.0).is_err());
    }

    #[test]
    fn radial_density_normalizes() {
        let aoa = aoa_model_for_wind(10.0, &RefractiveIndices::default()).unwrap();
        for z_a in [5.0, 10.0] {
            let q =
                integrate_to_infinity(|r| pdf_radial(r, &aoa, z_a).unwrap(), 0.0, 1e-10).unwrap();
            assert!((q.value - 1.0).abs() < 1e-6, "z_a={z_a}: {}", q.value);
        }
        assert!(pdf_radial(1e-12, &aoa, 5.0).unwrap() < 1e-6);
    }

    #[test]
    fn radial_density_change_of_variables() {
        let aoa = aoa_model_for_wind(10.0, &RefractiveIndices::default()).unwrap();
        let z_a = 5.0;
        let lam = aoa.params.scale;
        let r = z_a * lam.to_radians().tan();
        // dθ/dr in degrees per metre, by central difference on atan.
        let h = 1e-6;
        let dtheta = ((r + h) / z_a).atan().to_degrees() - ((r - h) / z_a).atan().to_degrees();
        let expected = aoa.params.pdf(lam).unwrap() * dtheta / (2.0 * h);
        let got = pdf_radial(r, &aoa, z_a).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-8);
    }

    #[test]
    fn loss_density_normalizes_and_matches_cdf() {
        let aoa = aoa_model_for_wind(10.0, &RefractiveIndices::default()).unwrap();
        for z_a in [5.0, 10.0] {
            let beam = beam_at_receiver(&reference_geometry(z_a)).unwrap();
            // Nodes that round onto A0 hit the integrable pole; drop them.
            let f = |h: f64| {
                let v = pdf_pointing_loss(h, &beam, &aoa, z_a).unwrap();
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            // Integrate in normalized units to keep the tolerance meaningful.
            let q = integrate(|u| f(u * beam.a0) * beam.a0, 0.0, 1.0, 1e-9).unwrap();
            assert!((q.value - 1.0).abs() < 1e-6, "z_a={z_a}: {}", q.value);
            let mid = 0.4 * beam.a0;
            let part = integrate(|u| f(u * beam.a0) * beam.a0, 0.0, 0.4, 1e-10).unwrap();
            let cdf = cdf_pointing_loss(mid, &beam, &aoa, z_a).unwrap();
            assert!((part.value - cdf).abs() < 1e-7);
        }
    }

    #[test]
    fn loss_density_boundary() {
        let aoa = aoa_model_for_wind(10.0, &RefractiveIndices::default()).unwrap();
        let beam = beam_at_receiver(&reference_geometry(5.0)).unwrap();
        // k_A = 1.6 < 2: the density grows without bound towards A0.
        let near = pdf_pointing_loss(beam.a0 * (1.0 - 1e-8), &beam, &aoa, 5.0).unwrap();
        let nearer = pdf_pointing_loss(beam.a0 * (1.0 - 1e-12), &beam, &aoa, 5.0).unwrap();
        assert!(nearer > near && near.is_finite());
        assert_eq!(
            pdf_pointing_loss(beam.a0, &beam, &aoa, 5.0).unwrap(),
            f64::INFINITY
        );
        assert!(pdf_pointing_loss(0.0, &beam, &aoa, 5.0).is_err());
        assert!(pdf_pointing_loss(beam.a0 * 1.01, &beam, &aoa, 5.0).is_err());
        // Far tail: tiny f_r against a 1/h Jacobian, still finite.
        let tail = pdf_pointing_loss(1e-300, &beam, &aoa, 5.0).unwrap();
        assert!(tail.is_finite() && tail >= 0.0);
    }

    proptest! {
        #[test]
        fn loss_decreases_with_displacement(r in 0.0f64..5.0, dr in 1e-6f64..1.0) {
            let beam = beam_at_receiver(&reference_geometry(5.0)).unwrap();
            let a = pointing_loss(r, &beam).unwrap();
            let b = pointing_loss(r + dr, &beam).unwrap();
            prop_assert!(b < a || b == 0.0);
            prop_assert!(a / beam.a0 <= 1.0 && a > 0.0);
        }

        #[test]
        fn loss_decreases_along_incidence_chain(t in 0.0f64..48.0, dt in 1e-3f64..0.5) {
            let n = RefractiveIndices::default();
            let beam = beam_at_receiver(&reference_geometry(5.0)).unwrap();
            let chain = |ti: f64| {
                let a = crate::surface::aoa_from_incidence(ti, &n).unwrap().angle().unwrap();
                pointing_loss(radial_displacement(a, 5.0).unwrap(), &beam).unwrap()
            };
            prop_assert!(chain(t + dt) < chain(t));
        }
    }
}
