//! Two-component Beta mixture for the normalized pointing loss, fitted by
//! expectation maximization.
//!
//! The normalized loss `h_P / A0` is bimodal: one mode near 0 (beam walked
//! off the aperture) and one near 1 (beam nearly centred). Two Beta
//! components capture both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{digamma, ln_beta, reg_inc_beta, trigamma, RandomStream, UniformSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaComponent {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaComponent {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Beta shapes must be positive and finite (got {alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn ln_norm(&self) -> f64 {
        ln_beta(self.alpha, self.beta).expect("shapes validated positive")
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return self.boundary_pdf(x);
        }
        ((self.alpha - 1.0) * x.ln() + (self.beta - 1.0) * (-x).ln_1p() - self.ln_norm()).exp()
    }

    fn boundary_pdf(&self, x: f64) -> f64 {
        let (shape, other) = if x <= 0.0 {
            (self.alpha, self.beta)
        } else {
            (self.beta, self.alpha)
        };
        if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            // B(1, b) = 1/b
            other
        } else {
            0.0
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        reg_inc_beta(x.clamp(0.0, 1.0), self.alpha, self.beta).expect("validated arguments")
    }
}

/// Convex combination `w·Beta(α₁, β₁) + (1 − w)·Beta(α₂, β₂)`.
///
/// Only the first weight is stored, so the weights sum to one exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMixture {
    pub w1: f64,
    pub components: [BetaComponent; 2],
}

impl BetaMixture {
    pub fn new(w1: f64, first: BetaComponent, second: BetaComponent) -> Result<Self> {
        if !(0.0..=1.0).contains(&w1) {
            return Err(Error::InvalidParameter(format!(
                "mixing weight {w1} not in [0, 1]"
            )));
        }
        BetaComponent::new(first.alpha, first.beta)?;
        BetaComponent::new(second.alpha, second.beta)?;
        Ok(Self {
            w1,
            components: [first, second],
        })
    }

    pub fn single(component: BetaComponent) -> Self {
        Self {
            w1: 1.0,
            components: [component, component],
        }
    }

    pub fn weights(&self) -> [f64; 2] {
        [self.w1, 1.0 - self.w1]
    }

    /// Orders components by increasing mean.
    pub fn canonical(self) -> Self {
        if self.components[1].mean() < self.components[0].mean() {
            Self {
                w1: 1.0 - self.w1,
                components: [self.components[1], self.components[0]],
            }
        } else {
            self
        }
    }

    fn pdf_unchecked(&self, x: f64) -> f64 {
        let [w1, w2] = self.weights();
        let mut d = 0.0;
        if w1 > 0.0 {
            d += w1 * self.components[0].pdf(x);
        }
        if w2 > 0.0 {
            d += w2 * self.components[1].pdf(x);
        }
        d
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        let [w1, w2] = self.weights();
        let mut c = 0.0;
        if w1 > 0.0 {
            c += w1 * self.components[0].cdf(x);
        }
        if w2 > 0.0 {
            c += w2 * self.components[1].cdf(x);
        }
        c.clamp(0.0, 1.0)
    }
}

fn check_unit(op: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(op, format!("x = {x} not in [0, 1]")))
    }
}

pub fn mixture_pdf(x: f64, m: &BetaMixture) -> Result<f64> {
    check_unit("mixture_pdf", x)?;
    Ok(m.pdf_unchecked(x))
}

pub fn mixture_cdf(x: f64, m: &BetaMixture) -> Result<f64> {
    check_unit("mixture_cdf", x)?;
    Ok(m.cdf_unchecked(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Convergence threshold on the per-sample log-likelihood gain.
    pub loglik_tol: f64,
    /// Samples are clamped to `[clamp_eps, 1 − clamp_eps]`.
    pub clamp_eps: f64,
    /// Seeds the random initial partition used when the median split fails.
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            loglik_tol: 1e-8,
            clamp_eps: 1e-9,
            seed: 0x5eed,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.loglik_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "loglik_tol must be positive".into(),
            ));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::InvalidParameter(
                "clamp_eps must lie in (0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub mixture: BetaMixture,
    /// Total log-likelihood of the returned mixture.
    pub loglik: f64,
    /// Log-likelihood at every iterate, starting from the initialization.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// A component's weight fell below [`COLLAPSE_WEIGHT`]; the result is
    /// the single-Beta maximum-likelihood fit.
    pub collapsed: bool,
    /// Mean responsibility of each (canonical) component at the final iterate.
    pub mean_responsibility: [f64; 2],
    /// Samples whose larger responsibility belongs to each component.
    pub hard_counts: [usize; 2],
}

impl EmFit {
    /// Largest decrease between consecutive log-likelihoods (zero when the
    /// trace is nondecreasing).
    pub fn max_loglik_drop(&self) -> f64 {
        self.loglik_trace
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }
}

pub const MIN_EM_SAMPLES: usize = 500;
pub const COLLAPSE_WEIGHT: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 50;

/// Log-space sufficient statistics of a (weighted) sample set.
struct LogSamples {
    ln_x: Vec<f64>,
    ln_1mx: Vec<f64>,
    x: Vec<f64>,
}

impl LogSamples {
    fn new(samples: &[f64], clamp_eps: f64) -> Result<Self> {
        if samples
            .iter()
            .any(|x| !x.is_finite() || !(0.0..=1.0).contains(x))
        {
            return Err(Error::domain("em_fit", "samples must lie in [0, 1]"));
        }
        let x: Vec<f64> = samples
            .iter()
            .map(|v| v.clamp(clamp_eps, 1.0 - clamp_eps))
            .collect();
        Ok(Self {
            ln_x: x.iter().map(|v| v.ln()).collect(),
            ln_1mx: x.iter().map(|v| (-v).ln_1p()).collect(),
            x,
        })
    }

    fn len(&self) -> usize {
        self.x.len()
    }
}

/// Weighted moments for one component.
#[derive(Default, Clone, Copy)]
struct Moments {
    weight: f64,
    ln_x: f64,
    ln_1mx: f64,
    x: f64,
    x2: f64,
}

impl Moments {
    fn add(&mut self, r: f64, x: f64, ln_x: f64, ln_1mx: f64) {
        self.weight += r;
        self.ln_x += r * ln_x;
        self.ln_1mx += r * ln_1mx;
        self.x += r * x;
        self.x2 += r * x * x;
    }

    fn method_of_moments(&self) -> Option<BetaComponent> {
        if !(self.weight > 0.0) {
            return None;
        }
        let m = self.x / self.weight;
        let v = self.x2 / self.weight - m * m;
        if !(v > 0.0) || !(m > 0.0 && m < 1.0) {
            return None;
        }
        let c = m * (1.0 - m) / v - 1.0;
        if !(c > 0.0) {
            return None;
        }
        BetaComponent::new(m * c, (1.0 - m) * c).ok()
    }
}

/// Expected complete-data log-likelihood per unit weight.
fn component_objective(c: &BetaComponent, s1: f64, s2: f64) -> f64 {
    (c.alpha - 1.0) * s1 + (c.beta - 1.0) * s2 - c.ln_norm()
}

/// Maximizes `(α−1)·s1 + (β−1)·s2 − ln B(α, β)` starting from `start`.
///
/// The objective is concave; Newton steps are halved until they stay in the
/// positive quadrant and do not decrease the objective, so the result is
/// never worse than `start`.
fn weighted_beta_mle(start: BetaComponent, s1: f64, s2: f64) -> BetaComponent {
    let mut cur = start;
    let mut obj = component_objective(&cur, s1, s2);
    for _ in 0..NEWTON_MAX_ITER {
        let (a, b) = (cur.alpha, cur.beta);
        let (Ok(pa), Ok(pb), Ok(pab)) = (digamma(a), digamma(b), digamma(a + b)) else {
            break;
        };
        let (Ok(ta), Ok(tb), Ok(tab)) = (trigamma(a), trigamma(b), trigamma(a + b)) else {
            break;
        };
        let ga = s1 - pa + pab;
        let gb = s2 - pb + pab;
        // Negative Hessian: [[ψ'(a) − ψ'(a+b), −ψ'(a+b)], [−ψ'(a+b), ψ'(b) − ψ'(a+b)]].
        let h11 = ta - tab;
        let h22 = tb - tab;
        let h12 = -tab;
        let det = h11 * h22 - h12 * h12;
        if !(det > 0.0) || !det.is_finite() {
            break;
        }
        let da = (h22 * ga - h12 * gb) / det;
        let db = (h11 * gb - h12 * ga) / det;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let na = a + t * da;
            let nb = b + t * db;
            if na > 0.0 && nb > 0.0 && na.is_finite() && nb.is_finite() {
                let cand = BetaComponent {
                    alpha: na,
                    beta: nb,
                };
                let cand_obj = component_objective(&cand, s1, s2);
                if cand_obj >= obj {
                    accepted = Some((cand, cand_obj));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((next, next_obj)) = accepted else {
            break;
        };
        let rel_step = ((next.alpha - a) / a).abs() + ((next.beta - b) / b).abs();
        cur = next;
        obj = next_obj;
        if rel_step < 1e-13 {
            break;
        }
    }
    cur
}

/// M-step for one component; keeps `current` if nothing better is found.
fn update_component(current: BetaComponent, m: &Moments) -> BetaComponent {
    if !(m.weight > 0.0) {
        return current;
    }
    let s1 = m.ln_x / m.weight;
    let s2 = m.ln_1mx / m.weight;
    let base = component_objective(&current, s1, s2);
    let mut best = weighted_beta_mle(current, s1, s2);
    let mut best_obj = component_objective(&best, s1, s2);
    // Restart from the weighted moments when Newton stalls far from the optimum.
    if !(best_obj.is_finite()) || best_obj <= base {
        if let Some(mom) = m.method_of_moments() {
            let alt = weighted_beta_mle(mom, s1, s2);
            let alt_obj = component_objective(&alt, s1, s2);
            if alt_obj > best_obj {
                best = alt;
                best_obj = alt_obj;
            }
        }
    }
    if best_obj.is_finite() && best_obj >= base {
        best
    } else {
        current
    }
}

/// Single-Beta maximum-likelihood fit.
pub fn fit_single_beta(samples: &[f64], clamp_eps: f64) -> Result<BetaComponent> {
    if samples.len() < 2 {
        return Err(Error::degenerate(
            "fit_single_beta",
            "need at least two samples",
        ));
    }
    let data = LogSamples::new(samples, clamp_eps)?;
    let mut m = Moments::default();
    for i in 0..data.len() {
        m.add(1.0, data.x[i], data.ln_x[i], data.ln_1mx[i]);
    }
    let start = m
        .method_of_moments()
        .ok_or_else(|| Error::degenerate("fit_single_beta", "samples have zero spread"))?;
    Ok(weighted_beta_mle(
        start,
        m.ln_x / m.weight,
        m.ln_1mx / m.weight,
    ))
}

fn initial_mixture(data: &LogSamples, seed: u64) -> Result<BetaMixture> {
    let mut sorted = data.x.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let (mut lower, mut upper) = (Moments::default(), Moments::default());
    for i in 0..data.len() {
        let target = if data.x[i] < median {
            &mut lower
        } else {
            &mut upper
        };
        target.add(1.0, data.x[i], data.ln_x[i], data.ln_1mx[i]);
    }
    if let (Some(a), Some(b)) = (lower.method_of_moments(), upper.method_of_moments()) {
        return BetaMixture::new(0.5, a, b);
    }
    // Median split failed (ties or a constant half): random soft partition.
    let mut stream = RandomStream::new(seed, 0);
    let (mut a, mut b) = (Moments::default(), Moments::default());
    for i in 0..data.len() {
        let r = stream.next_uniform();
        a.add(r, data.x[i], data.ln_x[i], data.ln_1mx[i]);
        b.add(1.0 - r, data.x[i], data.ln_x[i], data.ln_1mx[i]);
    }
    match (a.method_of_moments(), b.method_of_moments()) {
        (Some(ca), Some(cb)) => BetaMixture::new(0.5, ca, cb),
        _ => Err(Error::degenerate("em_fit", "samples have zero spread")),
    }
}

/// Fits a two-component Beta mixture by expectation maximization.
///
/// Initialization splits the samples at the median with method-of-moments
/// estimates per half. Each M-step updates the weight in closed form and each
/// component by a warm-started weighted Beta MLE, so the log-likelihood is
/// nondecreasing. Convergence is declared when the per-sample gain drops
/// below `cfg.loglik_tol`; otherwise the last iterate is returned with
/// `converged = false`.
pub fn em_fit(samples: &[f64], cfg: &EmConfig) -> Result<EmFit> {
    cfg.validate()?;
    if samples.len() < MIN_EM_SAMPLES {
        return Err(Error::degenerate(
            "em_fit",
            format!("{} samples, need at least {MIN_EM_SAMPLES}", samples.len()),
        ));
    }
    let data = LogSamples::new(samples, cfg.clamp_eps)?;
    let n = data.len() as f64;
    let mut mixture = initial_mixture(&data, cfg.seed)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_moments;
    let mut hard;

    loop {
        let [w1, w2] = mixture.weights();
        let (lw1, lw2) = (w1.ln(), w2.ln());
        let (c1, c2) = (mixture.components[0], mixture.components[1]);
        let (n1, n2) = (c1.ln_norm(), c2.ln_norm());
        let mut moments = [Moments::default(), Moments::default()];
        let mut loglik = 0.0;
        hard = [0, 0];
        for i in 0..data.len() {
            let (lx, l1x) = (data.ln_x[i], data.ln_1mx[i]);
            let lp1 = lw1 + (c1.alpha - 1.0) * lx + (c1.beta - 1.0) * l1x - n1;
            let lp2 = lw2 + (c2.alpha - 1.0) * lx + (c2.beta - 1.0) * l1x - n2;
            let d = lp2 - lp1;
            let e = (-d.abs()).exp();
            loglik += lp1.max(lp2) + e.ln_1p();
            let r1 = if d < 0.0 {
                1.0 / (1.0 + e)
            } else {
                e / (1.0 + e)
            };
            moments[0].add(r1, data.x[i], lx, l1x);
            moments[1].add(1.0 - r1, data.x[i], lx, l1x);
            hard[if r1 >= 0.5 { 0 } else { 1 }] += 1;
        }
        last_moments = moments;
        if let Some(&prev) = trace.last() {
            trace.push(loglik);
            if (loglik - prev) / n < cfg.loglik_tol {
                converged = true;
                break;
            }
        } else {
            trace.push(loglik);
        }
        if iterations == cfg.max_iters {
            break;
        }
        iterations += 1;

        let new_w1 = moments[0].weight / n;
        if new_w1.min(1.0 - new_w1) < COLLAPSE_WEIGHT {
            let single = fit_single_beta(samples, cfg.clamp_eps)?;
            let loglik = data
                .ln_x
                .iter()
                .zip(&data.ln_1mx)
                .map(|(lx, l1x)| {
                    (single.alpha - 1.0) * lx + (single.beta - 1.0) * l1x - single.ln_norm()
                })
                .sum();
            return Ok(EmFit {
                mixture: BetaMixture::single(single),
                loglik,
                loglik_trace: trace,
                iterations,
                converged: true,
                collapsed: true,
                mean_responsibility: [1.0, 0.0],
                hard_counts: [data.len(), 0],
            });
        }
        mixture = BetaMixture {
            w1: new_w1,
            components: [
                update_component(c1, &moments[0]),
                update_component(c2, &moments[1]),
            ],
        };
    }

    let mut responsibility = [last_moments[0].weight / n, last_moments[1].weight / n];
    let canonical = mixture.canonical();
    if canonical.w1 != mixture.w1 {
        responsibility.swap(0, 1);
        hard.swap(0, 1);
    }
    Ok(EmFit {
        mixture: canonical,
        loglik: *trace.last().expect("at least one E-step"),
        loglik_trace: trace,
        iterations,
        converged,
        collapsed: false,
        mean_responsibility: responsibility,
        hard_counts: hard,
    })
}

/// Serialized form of a fitted mixture and the link cell it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub w1: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub loglik: f64,
    pub n_samples: usize,
    pub wind_speed: f64,
    pub z_a: f64,
    pub z_w: f64,
}

impl MixtureRecord {
    pub fn from_fit(fit: &EmFit, n_samples: usize, wind_speed: f64, z_a: f64, z_w: f64) -> Self {
        let [c1, c2] = fit.mixture.components;
        Self {
            w1: fit.mixture.w1,
            alpha1: c1.alpha,
            beta1: c1.beta,
            alpha2: c2.alpha,
            beta2: c2.beta,
            loglik: fit.loglik,
            n_samples,
            wind_speed,
            z_a,
            z_w,
        }
    }

    /// Rebuilds the mixture, rejecting corrupted parameters.
    pub fn mixture(&self) -> Result<BetaMixture> {
        BetaMixture::new(
            self.w1,
            BetaComponent::new(self.alpha1, self.beta1)?,
            BetaComponent::new(self.alpha2, self.beta2)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use proptest::prelude::*;

    /// Draws from Beta(a, b) via the ratio of Gamma variates (Marsaglia–Tsang),
    /// test-only and independent of the fitting code.
    fn sample_beta(s: &mut RandomStream, a: f64, b: f64) -> f64 {
        let x = sample_gamma(s, a);
        let y = sample_gamma(s, b);
        x / (x + y)
    }

    fn sample_gamma(s: &mut RandomStream, shape: f64) -> f64 {
        if shape < 1.0 {
            let u = s.next_uniform();
            return sample_gamma(s, shape + 1.0) * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            // Box–Muller normal
            let (u1, u2) = (s.next_uniform(), s.next_uniform());
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            let v = (1.0 + c * z).powi(3);
            if v <= 0.0 {
                continue;
            }
            let u = s.next_uniform();
            if u.ln() < 0.5 * z * z + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    fn mix(w1: f64, a1: f64, b1: f64, a2: f64, b2: f64) -> BetaMixture {
        BetaMixture::new(
            w1,
            BetaComponent::new(a1, b1).unwrap(),
            BetaComponent::new(a2, b2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_mixture() {
        let m = BetaMixture::single(BetaComponent::new(1.0, 1.0).unwrap());
        for x in [0.0, 0.25, 0.5, 1.0] {
            assert!((mixture_pdf(x, &m).unwrap() - 1.0).abs() < 1e-14);
            assert!((mixture_cdf(x, &m).unwrap() - x).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_values() {
        let m = mix(0.4, 2.0, 3.0, 5.0, 1.5);
        assert_eq!(mixture_pdf(0.0, &m).unwrap(), 0.0);
        assert_eq!(mixture_cdf(0.0, &m).unwrap(), 0.0);
        assert_eq!(mixture_cdf(1.0, &m).unwrap(), 1.0);
        assert!(mixture_pdf(1.5, &m).is_err());
        assert!(mixture_cdf(-0.5, &m).is_err());
    }

    #[test]
    fn pdf_normalizes_and_cdf_matches_quadrature() {
        let m = mix(0.3, 2.5, 4.0, 6.0, 1.2);
        let f = |x: f64| mixture_pdf(x, &m).unwrap();
        assert!((integrate(f, 0.0, 1.0, 1e-12).unwrap().value - 1.0).abs() < 1e-8);
        let part = integrate(f, 0.0, 0.4, 1e-12).unwrap().value;
        assert!((mixture_cdf(0.4, &m).unwrap() - part).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid_mixtures() {
        let c = BetaComponent::new(1.0, 1.0).unwrap();
        assert!(BetaMixture::new(1.2, c, c).is_err());
        assert!(BetaComponent::new(0.0, 1.0).is_err());
        let rec = MixtureRecord {
            w1: 0.5,
            alpha1: -1.0,
            beta1: 2.0,
            alpha2: 1.0,
            beta2: 1.0,
            loglik: 0.0,
            n_samples: 10,
            wind_speed: 10.0,
            z_a: 5.0,
            z_w: 10.0,
        };
        assert!(rec.mixture().is_err());
    }

    #[test]
    fn recovers_known_mixture() {
        let mut s = RandomStream::new(77, 0);
        let data: Vec<f64> = (0..100_000)
            .map(|_| {
                if s.next_uniform() < 0.3 {
                    sample_beta(&mut s, 0.8, 3.0)
                } else {
                    sample_beta(&mut s, 6.0, 1.2)
                }
            })
            .collect();
        let fit = em_fit(&data, &EmConfig::default()).unwrap();
        let m = fit.mixture;
        let rel = |got: f64, want: f64| ((got - want) / want).abs();
        assert!((m.w1 - 0.3).abs() < 0.02, "{m:?}");
        assert!(rel(m.components[0].alpha, 0.8) < 0.05, "{m:?}");
        assert!(rel(m.components[0].beta, 3.0) < 0.05, "{m:?}");
        assert!(rel(m.components[1].alpha, 6.0) < 0.05, "{m:?}");
        assert!(rel(m.components[1].beta, 1.2) < 0.05, "{m:?}");
        assert!(fit.converged);
        assert!(fit.max_loglik_drop() <= 1e-9 * fit.loglik.abs());
        assert!(!fit.collapsed);
    }

    #[test]
    fn single_beta_data() {
        let mut s = RandomStream::new(78, 0);
        let data: Vec<f64> = (0..20_000).map(|_| sample_beta(&mut s, 2.0, 5.0)).collect();
        let single = fit_single_beta(&data, 1e-9).unwrap();
        assert!(((single.alpha - 2.0) / 2.0).abs() < 0.05);
        assert!(((single.beta - 5.0) / 5.0).abs() < 0.05);
        let fit = em_fit(&data, &EmConfig::default()).unwrap();
        assert!(fit.max_loglik_drop() <= 1e-9 * fit.loglik.abs());
        let m = fit.mixture;
        for x in [0.05, 0.1, 0.2, 0.3, 0.5, 0.7] {
            let a = mixture_pdf(x, &m).unwrap();
            let b = single.pdf(x);
            assert!(((a - b) / b).abs() < 0.05, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn em_requires_enough_samples() {
        assert!(em_fit(&[0.5; 100], &EmConfig::default()).is_err());
        assert!(em_fit(&[0.5; 1000], &EmConfig::default()).is_err());
        let bad = EmConfig {
            clamp_eps: 0.7,
            ..EmConfig::default()
        };
        assert!(em_fit(&[0.5; 1000], &bad).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut s = RandomStream::new(79, 0);
        let data: Vec<f64> = (0..5_000)
            .map(|_| {
                if s.next_uniform() < 0.5 {
                    sample_beta(&mut s, 0.5, 4.0)
                } else {
                    sample_beta(&mut s, 3.0, 0.7)
                }
            })
            .collect();
        let cfg = EmConfig {
            max_iters: 2,
            loglik_tol: 1e-15,
            ..EmConfig::default()
        };
        let fit = em_fit(&data, &cfg).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
        assert_eq!(fit.loglik_trace.len(), 3);
    }

    proptest! {
        #[test]
        fn label_swap_is_invisible(w in 0.01f64..0.99, a1 in 0.2f64..8.0, b1 in 0.2f64..8.0,
                                   a2 in 0.2f64..8.0, b2 in 0.2f64..8.0, x in 0.001f64..0.999) {
            let m = mix(w, a1, b1, a2, b2);
            let swapped = mix(1.0 - w, a2, b2, a1, b1);
            let p = mixture_pdf(x, &m).unwrap();
            let q = mixture_pdf(x, &swapped).unwrap();
            prop_assert!((p - q).abs() <= 1e-12 * p.max(1.0));
            let c = m.canonical();
            prop_assert!(c.components[0].mean() <= c.components[1].mean());
            prop_assert!((mixture_pdf(x, &c).unwrap() - p).abs() <= 1e-12 * p.max(1.0));
        }

        #[test]
        fn cdf_matches_quadrature(w in 0.01f64..0.99, a1 in 1.0f64..8.0, b1 in 1.0f64..8.0,
                                  a2 in 1.0f64..8.0, b2 in 1.0f64..8.0, x in 0.0f64..1.0) {
            let m = mix(w, a1, b1, a2, b2);
            let q = integrate(|t| mixture_pdf(t, &m).unwrap(), 0.0, x, 1e-12).unwrap().value;
            prop_assert!((mixture_cdf(x, &m).unwrap() - q).abs() < 1e-8);
        }
    }
}
