//! Exact end-to-end channel sampler and the statistics gathered from it.
//!
//! Trials are split into fixed-size blocks; block `b` draws from
//! `RandomStream(seed, b)`. Blocks run in parallel and are reduced in block
//! order, so a report depends only on the configuration and the seed, never
//! on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta_mixture::{
    em_fit, mixture_cdf, mixture_pdf, EmConfig, MixtureRecord, MIN_EM_SAMPLES,
};
use crate::error::{Error, Result};
use crate::numerics::{RandomStream, UniformSource, WeibullParams};
use crate::outage::{
    outage_probability, p_interruption, sample_interruption, ChannelModel, InterruptionProbs,
};
use crate::path_loss::{path_loss, BubbleModel, WaterOptics};
use crate::pointing::{
    beam_at_receiver, pointing_loss, radial_displacement, BeamAtReceiver, LinkGeometry,
};
use crate::stats::{binomial_stderr, ks_distance, Histogram};
use crate::surface::{
    aoa_model_for_wind, fit_weibull_mle, incidence_model_for_wind, sample_incidence, snell_refract,
    AoAModel, IncidenceModel, Refraction, RefractiveIndices,
};

pub use crate::stats::{fit_metrics, FitMetrics};

pub const DEFAULT_TRIALS: u64 = 200_000;
pub const MIN_TRIALS: u64 = 1_000;
pub const HISTOGRAM_BINS: usize = 100;
/// Trials per random stream.
pub const BLOCK_SIZE: u64 = 4096;

/// Sea state and optical media.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Wind speed 10 m above the surface (m/s).
    pub wind_speed: f64,
    pub water: WaterOptics,
    pub indices: RefractiveIndices,
    /// Bubble scattering efficiency.
    pub bubble_q_sca: f64,
    /// Minimum bubble radius (m).
    pub bubble_r_min: f64,
    pub freeze_r_ref: bool,
}

impl Environment {
    pub fn new(wind_speed: f64) -> Self {
        let b = BubbleModel::new(wind_speed);
        Self {
            wind_speed,
            water: WaterOptics::COASTAL,
            indices: RefractiveIndices::default(),
            bubble_q_sca: b.q_sca,
            bubble_r_min: b.r_min,
            freeze_r_ref: b.freeze_r_ref,
        }
    }

    pub fn bubble_model(&self) -> BubbleModel {
        BubbleModel {
            q_sca: self.bubble_q_sca,
            r_min: self.bubble_r_min,
            wind_speed: self.wind_speed,
            freeze_r_ref: self.freeze_r_ref,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wind_speed >= 0.0 && self.wind_speed.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wind speed {} must be nonnegative",
                self.wind_speed
            )));
        }
        self.water.validate()?;
        RefractiveIndices::new(self.indices.n_water, self.indices.n_air)?;
        self.bubble_model().validate()
    }
}

/// One realization of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    /// Incidence angle (degrees).
    pub theta_i: f64,
    /// Transmitted angle (degrees); `None` under total internal reflection.
    pub theta_t: Option<f64>,
    /// Angle of arrival (degrees); `None` under total internal reflection.
    pub theta_a: Option<f64>,
    /// Footprint displacement at the receiver (m).
    pub r_d: Option<f64>,
    /// Pointing loss, zero under total internal reflection.
    pub h_p: f64,
    pub h_a: u8,
    pub h: f64,
}

impl ChannelSample {
    pub fn is_tir(&self) -> bool {
        self.theta_a.is_none()
    }
}

/// Precomputed per-configuration quantities for repeated sampling.
#[derive(Debug, Clone, Copy)]
pub struct ChannelSampler {
    geom: LinkGeometry,
    indices: RefractiveIndices,
    incidence: IncidenceModel,
    beam: BeamAtReceiver,
    h_l: f64,
    theta_c: f64,
}

impl ChannelSampler {
    pub fn new(geom: &LinkGeometry, env: &Environment) -> Result<Self> {
        geom.validate()?;
        env.validate()?;
        Ok(Self {
            geom: *geom,
            indices: env.indices,
            incidence: incidence_model_for_wind(env.wind_speed)?,
            beam: beam_at_receiver(geom)?,
            h_l: path_loss(geom, &env.water, &env.bubble_model())?,
            theta_c: env.indices.critical_angle(),
        })
    }

    pub fn h_l(&self) -> f64 {
        self.h_l
    }

    pub fn beam(&self) -> &BeamAtReceiver {
        &self.beam
    }

    pub fn incidence(&self) -> &IncidenceModel {
        &self.incidence
    }

    pub fn critical_angle(&self) -> f64 {
        self.theta_c
    }

    pub fn sample(&self, src: &mut impl UniformSource) -> ChannelSample {
        let theta_i = sample_incidence(&self.incidence, src);
        // Grazing draws (θ_I ≥ 90°) cannot transmit either.
        let refraction =
            snell_refract(theta_i, &self.indices).unwrap_or(Refraction::TotalInternalReflection);
        let Refraction::Transmitted(theta_t) = refraction else {
            return ChannelSample {
                theta_i,
                theta_t: None,
                theta_a: None,
                r_d: None,
                h_p: 0.0,
                h_a: 0,
                h: 0.0,
            };
        };
        let theta_a = (theta_t - theta_i).max(0.0);
        let r_d = radial_displacement(theta_a, self.geom.z_a).expect("θ_A below 90°");
        let h_p = pointing_loss(r_d, &self.beam).expect("finite displacement");
        let h_a = sample_interruption(theta_i, Some(theta_a), self.theta_c, self.geom.theta_fov);
        ChannelSample {
            theta_i,
            theta_t: Some(theta_t),
            theta_a: Some(theta_a),
            r_d: Some(r_d),
            h_p,
            h_a,
            h: self.h_l * h_p * f64::from(h_a),
        }
    }
}

/// Draws a single channel realization.
pub fn sample_channel(
    geom: &LinkGeometry,
    env: &Environment,
    src: &mut impl UniformSource,
) -> Result<ChannelSample> {
    Ok(ChannelSampler::new(geom, env)?.sample(src))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationOptions {
    pub n_trials: u64,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide. Results do not depend on it.
    pub workers: usize,
    /// Outage threshold on the overall gain `h`.
    pub h_th: Option<f64>,
    pub em: EmConfig,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            n_trials: DEFAULT_TRIALS,
            seed: 1,
            workers: 0,
            h_th: None,
            em: EmConfig::default(),
        }
    }
}

/// Empirical frequency or mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    fn frequency(successes: u64, n: u64) -> Self {
        Self {
            value: successes as f64 / n as f64,
            stderr: binomial_stderr(successes, n),
        }
    }

    /// Whether `reference` lies within `k` standard errors.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.stderr
    }
}

/// Histogram with its normalized bin densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDensity {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl From<&Histogram> for BinnedDensity {
    fn from(h: &Histogram) -> Self {
        Self {
            lo: h.lo,
            hi: h.hi,
            counts: h.counts.clone(),
            density: h.densities(),
            underflow: h.underflow,
            overflow: h.overflow,
        }
    }
}

impl BinnedDensity {
    pub fn centers(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (0..self.counts.len())
            .map(|i| self.lo + (i as f64 + 0.5) * w)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    /// θ_I given no total internal reflection, on `[0, θ_c]`.
    pub theta_i: BinnedDensity,
    /// θ_A given no total internal reflection, on `[0, θ_c]`.
    pub theta_a: BinnedDensity,
    /// `h_P / A0` given `h_A = 1`, on `[0, 1]`.
    pub h_pn: BinnedDensity,
    /// `h` given `h_A = 1`, on `[0, h_L·A0]`.
    pub h: BinnedDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoAFitReport {
    /// Weibull MLE of the simulated θ_A.
    pub fitted: WeibullParams,
    pub fitted_metrics: FitMetrics,
    pub mle_iterations: usize,
    /// Wind regression law at this wind speed.
    pub regression: WeibullParams,
    /// The regression law against the θ_A histogram.
    pub regression_metrics: FitMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub record: MixtureRecord,
    pub iterations: usize,
    pub converged: bool,
    pub collapsed: bool,
    /// Largest decrease of the EM log-likelihood between iterates.
    pub max_loglik_drop: f64,
    /// KS distance to the empirical CDF of the fitted samples.
    pub ks: f64,
    /// Metrics against the `h_{P,N}` histogram.
    pub metrics: FitMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    /// From the wind regression laws.
    pub interruption: InterruptionProbs,
    /// Same, with the AoA law replaced by this run's Weibull fit.
    pub interruption_fitted_aoa: Option<InterruptionProbs>,
    /// Present when a threshold was supplied and the mixture was fitted.
    pub p_out: Option<f64>,
    pub h_th_valid: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n_trials: u64,
    pub seed: u64,
    pub geometry: LinkGeometry,
    pub environment: Environment,
    pub h_l: f64,
    pub a0: f64,
    pub omega_leq: f64,
    pub critical_angle: f64,
    pub tir_count: u64,
    pub interrupted_count: u64,
    pub empirical_tir: Estimate,
    pub empirical_interruption: Estimate,
    pub h_th: Option<f64>,
    pub empirical_outage: Option<Estimate>,
    /// Mean of `h` given `h_A = 1`.
    pub mean_connected_gain: Option<Estimate>,
    pub closed_form: ClosedForm,
    pub aoa_fit: Option<AoAFitReport>,
    pub mixture: Option<MixtureReport>,
    pub histograms: Histograms,
    pub notes: Vec<String>,
}

impl SimulationReport {
    /// Closed-form channel law with the mixture fitted in this run.
    pub fn channel_model(&self) -> Option<ChannelModel> {
        let mixture = self.mixture.as_ref()?.record.mixture().ok()?;
        ChannelModel::new(self.h_l, self.a0, mixture, self.closed_form.interruption).ok()
    }
}

/// Per-block partial results, merged in block order.
struct Accumulator {
    n: u64,
    tir: u64,
    interrupted: u64,
    below_threshold: u64,
    sum_h: f64,
    sum_h2: f64,
    theta_i: Histogram,
    theta_a: Histogram,
    h_pn: Histogram,
    h: Histogram,
    aoa_samples: Vec<f64>,
    h_pn_samples: Vec<f64>,
}

impl Accumulator {
    fn new(theta_c: f64, peak: f64) -> Result<Self> {
        Ok(Self {
            n: 0,
            tir: 0,
            interrupted: 0,
            below_threshold: 0,
            sum_h: 0.0,
            sum_h2: 0.0,
            theta_i: Histogram::new(0.0, theta_c, HISTOGRAM_BINS)?,
            theta_a: Histogram::new(0.0, theta_c, HISTOGRAM_BINS)?,
            h_pn: Histogram::new(0.0, 1.0, HISTOGRAM_BINS)?,
            h: Histogram::new(0.0, peak, HISTOGRAM_BINS)?,
            aoa_samples: Vec::new(),
            h_pn_samples: Vec::new(),
        })
    }

    fn record(&mut self, s: &ChannelSample, a0: f64, h_th: Option<f64>) {
        self.n += 1;
        if h_th.is_some_and(|t| s.h <= t) {
            self.below_threshold += 1;
        }
        let Some(theta_a) = s.theta_a else {
            self.tir += 1;
            self.interrupted += 1;
            return;
        };
        self.theta_i.push(s.theta_i);
        self.theta_a.push(theta_a);
        self.aoa_samples.push(theta_a);
        if s.h_a == 0 {
            self.interrupted += 1;
            return;
        }
        let h_pn = s.h_p / a0;
        self.h_pn.push(h_pn);
        self.h_pn_samples.push(h_pn);
        self.h.push(s.h);
        self.sum_h += s.h;
        self.sum_h2 += s.h * s.h;
    }

    fn merge(&mut self, other: Accumulator) -> Result<()> {
        self.n += other.n;
        self.tir += other.tir;
        self.interrupted += other.interrupted;
        self.below_threshold += other.below_threshold;
        self.sum_h += other.sum_h;
        self.sum_h2 += other.sum_h2;
        self.theta_i.merge(&other.theta_i)?;
        self.theta_a.merge(&other.theta_a)?;
        self.h_pn.merge(&other.h_pn)?;
        self.h.merge(&other.h)?;
        self.aoa_samples.extend(other.aoa_samples);
        self.h_pn_samples.extend(other.h_pn_samples);
        Ok(())
    }
}

/// Runs `job(stream, len)` over the fixed block partition of `n_trials` and
/// returns the per-block results in block order.
fn run_blocks<T, F>(n_trials: u64, seed: u64, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RandomStream, u64) -> Result<T> + Sync,
{
    let blocks = n_trials.div_ceil(BLOCK_SIZE);
    let one = |b: u64| {
        let len = BLOCK_SIZE.min(n_trials - b * BLOCK_SIZE);
        job(&mut RandomStream::new(seed, b), len)
    };
    if workers == 1 {
        return (0..blocks).map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..blocks).into_par_iter().map(one).collect())
}

fn sample_all(sampler: &ChannelSampler, opts: &SimulationOptions) -> Result<Accumulator> {
    let peak = sampler.h_l * sampler.beam.a0;
    let parts = run_blocks(opts.n_trials, opts.seed, opts.workers, |stream, len| {
        let mut acc = Accumulator::new(sampler.theta_c, peak)?;
        for _ in 0..len {
            acc.record(&sampler.sample(stream), sampler.beam.a0, opts.h_th);
        }
        Ok(acc)
    })?;
    let mut total = Accumulator::new(sampler.theta_c, peak)?;
    for part in parts {
        total.merge(part)?;
    }
    Ok(total)
}

/// Angles of arrival of the transmitted draws among `n_trials` incidence
/// samples. The AoA does not depend on the link geometry, and the streams
/// match those of [`run_simulation`] with the same seed.
pub fn sample_arrival_angles(
    env: &Environment,
    n_trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    env.validate()?;
    let incidence = incidence_model_for_wind(env.wind_speed)?;
    let parts = run_blocks(n_trials, seed, workers, |stream, len| {
        let mut out = Vec::with_capacity(len as usize);
        for _ in 0..len {
            let theta_i = sample_incidence(&incidence, stream);
            if let Ok(Refraction::Transmitted(t)) = snell_refract(theta_i, &env.indices) {
                out.push((t - theta_i).max(0.0));
            }
        }
        Ok(out)
    })?;
    Ok(parts.concat())
}

/// Weibull MLE of AoA samples plus the fit of the regression law, both
/// scored on a histogram over `[0, θ_c]`.
pub fn aoa_fit_report(samples: &[f64], aoa: &AoAModel) -> Result<AoAFitReport> {
    let fit = fit_weibull_mle(samples)?;
    let hist = Histogram::from_samples(samples, 0.0, aoa.critical_angle, HISTOGRAM_BINS)?;
    let model = aoa.params;
    let regression_metrics = fit_metrics(
        &hist,
        |x| model.pdf(x).unwrap_or(0.0),
        |x| model.cdf(x).unwrap_or(0.0),
    )?;
    Ok(AoAFitReport {
        fitted: fit.params,
        fitted_metrics: fit.metrics,
        mle_iterations: fit.iterations,
        regression: model,
        regression_metrics,
    })
}

fn fit_mixture(
    acc: &Accumulator,
    geom: &LinkGeometry,
    env: &Environment,
    cfg: &EmConfig,
    notes: &mut Vec<String>,
) -> Option<MixtureReport> {
    if acc.h_pn_samples.len() < MIN_EM_SAMPLES {
        notes.push(format!(
            "mixture fit skipped: {} connected samples, need {MIN_EM_SAMPLES}",
            acc.h_pn_samples.len()
        ));
        return None;
    }
    let fit = match em_fit(&acc.h_pn_samples, cfg) {
        Ok(f) => f,
        Err(e) => {
            notes.push(format!("mixture fit failed: {e}"));
            return None;
        }
    };
    if !fit.converged {
        notes.push(format!(
            "EM stopped after {} iterations without converging",
            fit.iterations
        ));
    }
    if fit.collapsed {
        notes.push("EM collapsed to a single Beta component".into());
    }
    let m = fit.mixture;
    let mut sorted = acc.h_pn_samples.clone();
    sorted.sort_by(f64::total_cmp);
    let ks = ks_distance(&sorted, |x| {
        mixture_cdf(x.clamp(0.0, 1.0), &m).unwrap_or(0.0)
    });
    let metrics = fit_metrics(
        &acc.h_pn,
        |x| mixture_pdf(x, &m).unwrap_or(0.0),
        |x| mixture_cdf(x, &m).unwrap_or(0.0),
    )
    .ok()?;
    Some(MixtureReport {
        record: MixtureRecord::from_fit(&fit, sorted.len(), env.wind_speed, geom.z_a, geom.z_w),
        iterations: fit.iterations,
        converged: fit.converged,
        collapsed: fit.collapsed,
        max_loglik_drop: fit.max_loglik_drop(),
        ks,
        metrics,
    })
}

/// Runs `opts.n_trials` exact channel draws and fits the closed-form models
/// to them.
pub fn run_simulation(
    geom: &LinkGeometry,
    env: &Environment,
    opts: &SimulationOptions,
) -> Result<SimulationReport> {
    if opts.n_trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "n_trials = {} is below the minimum of {MIN_TRIALS}",
            opts.n_trials
        )));
    }
    if let Some(t) = opts.h_th {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h_th = {t} must be nonnegative"
            )));
        }
    }
    opts.em.validate()?;
    let sampler = ChannelSampler::new(geom, env)?;
    let aoa = aoa_model_for_wind(env.wind_speed, &env.indices)?;
    let mut notes = Vec::new();
    if sampler.incidence.extrapolated {
        notes.push(format!(
            "wind speed {} m/s lies outside the regression range; models are extrapolated",
            env.wind_speed
        ));
    }

    let acc = sample_all(&sampler, opts)?;
    let n = acc.n;
    let interruption = p_interruption(&sampler.incidence, &aoa, sampler.theta_c, geom.theta_fov)?;
    let aoa_fit = match aoa_fit_report(&acc.aoa_samples, &aoa) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("AoA fit skipped: {e}"));
            None
        }
    };
    let mixture = fit_mixture(&acc, geom, env, &opts.em, &mut notes);

    let interruption_fitted_aoa = match &aoa_fit {
        Some(f) => Some(p_interruption(
            &sampler.incidence,
            &AoAModel {
                params: f.fitted,
                ..aoa
            },
            sampler.theta_c,
            geom.theta_fov,
        )?),
        None => None,
    };
    let mut closed_form = ClosedForm {
        interruption,
        interruption_fitted_aoa,
        p_out: None,
        h_th_valid: None,
    };
    if let (Some(h_th), Some(mr)) = (opts.h_th, &mixture) {
        let model = ChannelModel::new(
            sampler.h_l,
            sampler.beam.a0,
            mr.record.mixture()?,
            interruption,
        )?;
        let out = outage_probability(h_th, &model)?;
        closed_form.p_out = Some(out.probability);
        closed_form.h_th_valid = Some(out.threshold_valid);
        if !out.threshold_valid {
            notes.push(format!("h_th = {h_th} exceeds h_L·A0; outage is certain"));
        }
    }

    let connected = n - acc.interrupted;
    let mean_connected_gain = (connected > 1).then(|| {
        let c = connected as f64;
        let mean = acc.sum_h / c;
        let var = ((acc.sum_h2 - c * mean * mean) / (c - 1.0)).max(0.0);
        Estimate {
            value: mean,
            stderr: (var / c).sqrt(),
        }
    });

    Ok(SimulationReport {
        n_trials: n,
        seed: opts.seed,
        geometry: *geom,
        environment: *env,
        h_l: sampler.h_l,
        a0: sampler.beam.a0,
        omega_leq: sampler.beam.omega_leq,
        critical_angle: sampler.theta_c,
        tir_count: acc.tir,
        interrupted_count: acc.interrupted,
        empirical_tir: Estimate::frequency(acc.tir, n),
        empirical_interruption: Estimate::frequency(acc.interrupted, n),
        h_th: opts.h_th,
        empirical_outage: opts
            .h_th
            .map(|_| Estimate::frequency(acc.below_threshold, n)),
        mean_connected_gain,
        closed_form,
        aoa_fit,
        mixture,
        histograms: Histograms {
            theta_i: (&acc.theta_i).into(),
            theta_a: (&acc.theta_a).into(),
            h_pn: (&acc.h_pn).into(),
            h: (&acc.h).into(),
        },
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use crate::outage::channel_pdf_continuous;

    struct Fixed(f64);

    impl UniformSource for Fixed {
        fn next_uniform(&mut self) -> f64 {
            self.0
        }
    }

    fn geom(z_w: f64, z_a: f64, fov: f64) -> LinkGeometry {
        LinkGeometry {
            z_w,
            z_a,
            theta_0: 0.05,
            d_r: 0.075,
            theta_fov: fov,
            wavelength_nm: 450.0,
        }
    }

    fn opts(n: u64, workers: usize) -> SimulationOptions {
        SimulationOptions {
            n_trials: n,
            seed: 7,
            workers,
            h_th: Some(5e-8),
            em: EmConfig::default(),
        }
    }

    #[test]
    fn perfect_alignment_reaches_peak() {
        let s = ChannelSampler::new(&geom(10.0, 5.0, 30.0), &Environment::new(10.0)).unwrap();
        let c = s.sample(&mut Fixed(0.0));
        assert_eq!(c.theta_i, 0.0);
        assert_eq!(c.h_a, 1);
        assert!((c.h - s.h_l() * s.beam().a0).abs() < 1e-18);
    }

    #[test]
    fn forced_tir_gives_zero() {
        let s = ChannelSampler::new(&geom(10.0, 5.0, 30.0), &Environment::new(10.0)).unwrap();
        let c = s.sample(&mut Fixed(1.0 - 1e-12));
        assert!(c.theta_i > s.critical_angle());
        assert!(c.is_tir());
        assert_eq!((c.h, c.h_p, c.h_a), (0.0, 0.0, 0));
    }

    #[test]
    fn sample_invariants() {
        let s = ChannelSampler::new(&geom(10.0, 10.0, 10.0), &Environment::new(14.0)).unwrap();
        let mut rng = RandomStream::new(3, 0);
        let peak = s.h_l() * s.beam().a0;
        for _ in 0..20_000 {
            let c = s.sample(&mut rng);
            assert!((c.h - s.h_l() * c.h_p * f64::from(c.h_a)).abs() == 0.0);
            assert!(c.h >= 0.0 && c.h <= peak);
            if c.theta_i > s.critical_angle() || c.theta_a.is_some_and(|a| a > 10.0) {
                assert_eq!(c.h_a, 0);
            }
        }
    }

    #[test]
    fn ten_samples_are_reproducible() {
        let draw = || {
            let mut rng = RandomStream::new(11, 0);
            let v: Vec<ChannelSample> = (0..10)
                .map(|_| {
                    sample_channel(&geom(10.0, 5.0, 30.0), &Environment::new(10.0), &mut rng)
                        .unwrap()
                })
                .collect();
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn worker_count_independence() {
        let g = geom(10.0, 5.0, 30.0);
        let env = Environment::new(10.0);
        let one = run_simulation(&g, &env, &opts(20_000, 1)).unwrap();
        let many = run_simulation(&g, &env, &opts(20_000, 8)).unwrap();
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&many).unwrap()
        );
    }

    #[test]
    fn arrival_angles_match_full_sampler() {
        let env = Environment::new(10.0);
        let angles = sample_arrival_angles(&env, 10_000, 7, 1).unwrap();
        let r = run_simulation(&geom(10.0, 5.0, 30.0), &env, &opts(10_000, 1)).unwrap();
        assert_eq!(angles.len() as u64, 10_000 - r.tir_count);
        let hist = Histogram::from_samples(&angles, 0.0, r.critical_angle, HISTOGRAM_BINS).unwrap();
        assert_eq!(hist.counts, r.histograms.theta_a.counts);
    }

    #[test]
    fn rejects_too_few_trials() {
        let err = run_simulation(
            &geom(10.0, 5.0, 30.0),
            &Environment::new(10.0),
            &opts(999, 1),
        );
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn histogram_masses_sum_to_one() {
        let r = run_simulation(
            &geom(10.0, 5.0, 30.0),
            &Environment::new(10.0),
            &opts(20_000, 0),
        )
        .unwrap();
        for h in [
            &r.histograms.theta_i,
            &r.histograms.theta_a,
            &r.histograms.h_pn,
            &r.histograms.h,
        ] {
            let w = (h.hi - h.lo) / h.counts.len() as f64;
            let mass: f64 = h.density.iter().map(|d| d * w).sum();
            assert!((mass - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn interruption_frequency_matches_tir_at_wide_fov() {
        let r = run_simulation(
            &geom(10.0, 5.0, 60.0),
            &Environment::new(10.0),
            &opts(100_000, 0),
        )
        .unwrap();
        let p_tir = r.closed_form.interruption.p_tir;
        assert!(
            r.empirical_tir.agrees_with(p_tir, 3.0),
            "{:?} vs {p_tir}",
            r.empirical_tir
        );
        assert_eq!(r.tir_count, r.interrupted_count);
    }

    #[test]
    fn connected_mean_matches_mixture_quadrature() {
        let r = run_simulation(
            &geom(10.0, 5.0, 30.0),
            &Environment::new(10.0),
            &opts(200_000, 0),
        )
        .unwrap();
        let m = r.channel_model().unwrap();
        let peak = m.peak_gain();
        let mean = integrate(
            |h| h * channel_pdf_continuous(h, &m).unwrap(),
            0.0,
            peak,
            1e-10 * peak,
        )
        .unwrap()
        .value;
        let emp = r.mean_connected_gain.unwrap();
        assert!(emp.agrees_with(mean, 3.0), "{emp:?} vs {mean}");
    }
}
