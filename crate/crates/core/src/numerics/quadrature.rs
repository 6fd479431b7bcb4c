//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default absolute tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error, summed over subintervals.
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    /// Rounding floor of the error estimate; splitting cannot go below it.
    roundoff: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut fv = [0.0; 15];
    fv[7] = f(center);
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = f(center - dx);
        fv[14 - j] = f(center + dx);
    }
    let mut kron = WGK[7] * fv[7];
    let mut gauss = WG[3] * fv[7];
    let mut res_abs = WGK[7] * fv[7].abs();
    for j in 0..7 {
        let pair = fv[j] + fv[14 - j];
        kron += WGK[j] * pair;
        res_abs += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let mean = 0.5 * kron;
    let mut res_asc = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    // QUADPACK's scaled error estimate for the 15-point rule.
    let half_abs = half.abs();
    let res_abs = res_abs * half_abs;
    let res_asc = res_asc * half_abs;
    let mut error = ((kron - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }
    Segment {
        lo,
        hi,
        value: kron * half,
        error,
        roundoff,
    }
}

/// Integrates `f` over `[lo, hi]` to an absolute tolerance `tol`, relaxed
/// by the accumulated rounding floor of the rule.
///
/// The integrand is never evaluated at the endpoints, so integrable endpoint
/// singularities are handled by repeated bisection. On failure the error
/// carries the best available estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Quadrature> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::domain(
            "integrate",
            format!("bad interval [{lo}, {hi}]"),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(
            "integrate",
            format!("tolerance {tol} must be positive"),
        ));
    }
    if lo == hi {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }

    let first = kronrod(&f, lo, hi);
    if !first.value.is_finite() {
        return Err(Error::domain(
            "integrate",
            "integrand not finite on interval",
        ));
    }
    let mut heap = BinaryHeap::new();
    // Segments too narrow to split further; their error is accepted as is.
    let mut frozen = Vec::new();
    let mut total_error = first.error;
    let mut total_roundoff = first.roundoff;
    heap.push(first);

    let mut intervals = 1;
    while total_error > tol + total_roundoff {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            frozen.push(worst);
            continue;
        }
        if intervals >= MAX_INTERVALS {
            heap.push(worst);
            break;
        }
        let left = kronrod(&f, worst.lo, mid);
        let right = kronrod(&f, mid, worst.hi);
        total_error += left.error + right.error - worst.error;
        total_roundoff += left.roundoff + right.roundoff - worst.roundoff;
        heap.push(left);
        heap.push(right);
        intervals += 1;
    }

    // Re-sum to shed the drift of the running error total.
    let segments: Vec<Segment> = heap.into_vec().into_iter().chain(frozen).collect();
    let value = segments.iter().map(|s| s.value).sum::<f64>();
    let abs_error = segments.iter().map(|s| s.error).sum::<f64>();
    let roundoff = segments.iter().map(|s| s.roundoff).sum::<f64>();
    if !value.is_finite() {
        return Err(Error::domain(
            "integrate",
            "integrand not finite on interval",
        ));
    }
    if abs_error > tol + roundoff {
        return Err(Error::NotConverged {
            op: "integrate",
            iterations: intervals,
            estimate: value,
        });
    }
    Ok(Quadrature {
        value,
        abs_error,
        intervals,
    })
}

/// Integrates `f` over `[lo, ∞)` through the map `x = lo + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, lo: f64, tol: f64) -> Result<Quadrature> {
    integrate(
        |t: f64| {
            let one_minus = 1.0 - t;
            let x = lo + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}
