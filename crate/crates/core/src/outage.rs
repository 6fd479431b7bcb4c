//! Link interruption, the mixed channel density and outage probability.
//!
//! With `h = h_L·h_P·h_A` and `h_A ∈ {0, 1}`, the channel law has an atom of
//! mass `P_int` at zero plus a continuous part on `[0, h_L·A0]` given by the
//! scaled Beta mixture. The Meijer-G forms of the density and of the outage
//! probability reduce exactly to a scaled Beta density and a regularized
//! incomplete Beta function; [`meijer`] evaluates the G-functions by their
//! residue series so the reduction can be checked independently.

use serde::{Deserialize, Serialize};

use crate::beta_mixture::{mixture_cdf, mixture_pdf, BetaMixture};
use crate::error::{Error, Result};
use crate::surface::{AoAModel, IncidenceModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterruptionProbs {
    /// Probability of total internal reflection at the surface.
    pub p_tir: f64,
    /// Probability that a transmitted beam arrives inside the field of view.
    pub p_cap: f64,
    /// Total interruption probability `1 − (1 − p_tir)·p_cap`.
    pub p_int: f64,
}

/// `P(θ_I > θ_c)` under the incidence Weibull law.
pub fn p_tir(incidence: &IncidenceModel, theta_c: f64) -> Result<f64> {
    if !(0.0..90.0).contains(&theta_c) {
        return Err(Error::domain(
            "p_tir",
            format!("critical angle {theta_c}° not in [0, 90)"),
        ));
    }
    incidence.params.sf(theta_c)
}

/// `P(θ_A ≤ θ_FoV)` under the AoA Weibull law.
pub fn p_capture(aoa: &AoAModel, theta_fov: f64) -> Result<f64> {
    if !(theta_fov >= 0.0) {
        return Err(Error::domain(
            "p_capture",
            format!("field of view {theta_fov}° must be nonnegative"),
        ));
    }
    aoa.params.cdf(theta_fov)
}

pub fn p_interruption(
    incidence: &IncidenceModel,
    aoa: &AoAModel,
    theta_c: f64,
    theta_fov: f64,
) -> Result<InterruptionProbs> {
    let p_tir = p_tir(incidence, theta_c)?;
    let p_cap = p_capture(aoa, theta_fov)?;
    let p_int = (1.0 - (1.0 - p_tir) * p_cap).clamp(p_tir, 1.0);
    Ok(InterruptionProbs {
        p_tir,
        p_cap,
        p_int,
    })
}

/// Everything needed to evaluate the closed-form channel law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub h_l: f64,
    pub a0: f64,
    pub mixture: BetaMixture,
    pub interruption: InterruptionProbs,
}

impl ChannelModel {
    pub fn new(
        h_l: f64,
        a0: f64,
        mixture: BetaMixture,
        interruption: InterruptionProbs,
    ) -> Result<Self> {
        if !(h_l > 0.0 && h_l <= 1.0) || !(a0 > 0.0 && a0 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "channel needs h_L in (0, 1] and A0 in (0, 1) (got {h_l}, {a0})"
            )));
        }
        Ok(Self {
            h_l,
            a0,
            mixture,
            interruption,
        })
    }

    /// Upper end of the support, `h_L·A0`.
    pub fn peak_gain(&self) -> f64 {
        self.h_l * self.a0
    }
}

/// Density of the non-interrupted channel gain `h_c = h_L·h_P`.
pub fn channel_pdf_continuous(h: f64, model: &ChannelModel) -> Result<f64> {
    let peak = model.peak_gain();
    if !(h > 0.0 && h < peak) {
        return Err(Error::domain(
            "channel_pdf_continuous",
            format!("h = {h} not in (0, h_L·A0 = {peak})"),
        ));
    }
    Ok(mixture_pdf(h / peak, &model.mixture)? / peak)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outage {
    pub probability: f64,
    /// False when the threshold exceeds `h_L·A0`: the link can never reach
    /// it and the probability is 1.
    pub threshold_valid: bool,
}

/// `P(h ≤ h_th) = P_int + (1 − P_int)·Σ wᵢ·I_{h_th/(h_L A0)}(αᵢ, βᵢ)`.
pub fn outage_probability(h_th: f64, model: &ChannelModel) -> Result<Outage> {
    if !(h_th >= 0.0) || h_th.is_nan() {
        return Err(Error::domain(
            "outage_probability",
            format!("threshold {h_th} must be nonnegative"),
        ));
    }
    let peak = model.peak_gain();
    if h_th > peak {
        return Ok(Outage {
            probability: 1.0,
            threshold_valid: false,
        });
    }
    let p_int = model.interruption.p_int;
    let continuous = mixture_cdf(h_th / peak, &model.mixture)?;
    Ok(Outage {
        probability: (p_int + (1.0 - p_int) * continuous).clamp(0.0, 1.0),
        threshold_valid: true,
    })
}

/// Link indicator `h_A` for one realization: 1 iff no TIR and the arrival
/// angle lies inside the (closed) field of view.
pub fn sample_interruption(theta_i: f64, theta_a: Option<f64>, theta_c: f64, theta_fov: f64) -> u8 {
    match theta_a {
        Some(a) if theta_i <= theta_c && a.abs() <= theta_fov => 1,
        _ => 0,
    }
}

/// Series evaluation of the Meijer G-functions appearing in the channel
/// density and outage probability.
///
/// For `m = 1` and `0 < x < 1` the contour integral closes around the poles
/// of `Γ(b₁ − s)`, giving
/// `G = Σₖ (−1)ᵏ/k! · x^{b₁+k} · Πⱼ≤ₙ Γ(1 − aⱼ + b₁ + k) / (Πⱼ>₁ Γ(1 − bⱼ + b₁ + k) · Πⱼ>ₙ Γ(aⱼ − b₁ − k))`.
pub mod meijer {
    use crate::error::{Error, Result};
    use crate::numerics::ln_gamma;

    const MAX_TERMS: usize = 20_000;

    /// `(ln|Γ(z)|, sign Γ(z))`, or `None` at the poles.
    fn ln_gamma_signed(z: f64) -> Option<(f64, f64)> {
        if z > 0.0 {
            return Some((ln_gamma(z).ok()?, 1.0));
        }
        if z == z.floor() {
            return None;
        }
        // Reflection: Γ(z) = π / (sin(πz) Γ(1 − z)).
        let s = (std::f64::consts::PI * z).sin();
        let lg = ln_gamma(1.0 - z).ok()?;
        Some((std::f64::consts::PI.ln() - s.abs().ln() - lg, s.signum()))
    }

    struct Term {
        ln_mag: f64,
        sign: f64,
    }

    fn sum_series(x: f64, mut term: impl FnMut(usize) -> Option<Term>) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::domain(
                "meijer_series",
                format!("x = {x} not in (0, 1)"),
            ));
        }
        let mut sum = 0.0;
        let mut small_run = 0;
        for k in 0..MAX_TERMS {
            // A pole in a denominator Gamma makes the term vanish.
            let v = term(k).map_or(0.0, |t| t.sign * t.ln_mag.exp());
            sum += v;
            if v.abs() <= 1e-18 * sum.abs().max(1e-300) {
                small_run += 1;
                if small_run >= 3 {
                    return Ok(sum);
                }
            } else {
                small_run = 0;
            }
        }
        Err(Error::NotConverged {
            op: "meijer_series",
            iterations: MAX_TERMS,
            estimate: sum,
        })
    }

    fn ln_factorial(k: usize) -> f64 {
        ln_gamma(k as f64 + 1.0).expect("positive")
    }

    /// `G^{1,0}_{1,1}(x | a; b)` for `0 < x < 1`.
    pub fn g10_11(x: f64, a: f64, b: f64) -> Result<f64> {
        let lx = x.ln();
        sum_series(x, |k| {
            let kf = k as f64;
            let (lg, sg) = ln_gamma_signed(a - b - kf)?;
            Some(Term {
                ln_mag: (b + kf) * lx - ln_factorial(k) - lg,
                sign: if k % 2 == 0 { sg } else { -sg },
            })
        })
    }

    /// `G^{1,1}_{2,2}(x | a₁, a₂; b₁, b₂)` for `0 < x < 1`.
    pub fn g11_22(x: f64, a: [f64; 2], b: [f64; 2]) -> Result<f64> {
        let lx = x.ln();
        sum_series(x, |k| {
            let kf = k as f64;
            let (ln_num, s_num) = ln_gamma_signed(1.0 - a[0] + b[0] + kf)?;
            let (ln_d1, s_d1) = ln_gamma_signed(1.0 - b[1] + b[0] + kf)?;
            let (ln_d2, s_d2) = ln_gamma_signed(a[1] - b[0] - kf)?;
            let sign = s_num * s_d1 * s_d2 * if k % 2 == 0 { 1.0 } else { -1.0 };
            Some(Term {
                ln_mag: (b[0] + kf) * lx - ln_factorial(k) + ln_num - ln_d1 - ln_d2,
                sign,
            })
        })
    }

    /// Beta-density term of the channel PDF in Meijer-G form:
    /// `Γ(α+β)/Γ(α) · G^{1,0}_{1,1}(x | α+β−1; α−1)`.
    pub fn density_term(x: f64, alpha: f64, beta: f64) -> Result<f64> {
        let g = g10_11(x, alpha + beta - 1.0, alpha - 1.0)?;
        Ok((ln_gamma(alpha + beta)? - ln_gamma(alpha)?).exp() * g)
    }

    /// Bracketed term of the outage probability in Meijer-G form:
    /// `Γ(α+β)/Γ(α) · x · G^{1,1}_{2,2}(x | 0, α+β−1; α−1, −1)`.
    pub fn cdf_term(x: f64, alpha: f64, beta: f64) -> Result<f64> {
        let g = g11_22(x, [0.0, alpha + beta - 1.0], [alpha - 1.0, -1.0])?;
        Ok((ln_gamma(alpha + beta)? - ln_gamma(alpha)?).exp() * x * g)
    }
}
