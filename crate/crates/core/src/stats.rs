//! Histograms and goodness-of-fit metrics (MSE, R², Kolmogorov–Smirnov).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equal-width histogram over `[lo, hi]`.
///
/// Densities are normalized by the number of in-range samples, so the bin
/// masses of a non-empty histogram sum to one. Samples outside the range are
/// counted separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() || bins == 0 {
            return Err(Error::InvalidParameter(format!(
                "histogram needs lo < hi and at least one bin (got [{lo}, {hi}], {bins} bins)"
            )));
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        let mut h = Self::new(lo, hi, bins)?;
        for &x in samples {
            h.push(x);
        }
        Ok(h)
    }

    pub fn push(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x > self.hi {
            self.overflow += 1;
        } else {
            let n = self.counts.len();
            let idx = (((x - self.lo) / self.width()) as usize).min(n - 1);
            self.counts[idx] += 1;
        }
    }

    /// Adds the counts of another histogram with identical binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.lo != other.lo || self.hi != other.hi || self.counts.len() != other.counts.len() {
            return Err(Error::InvalidParameter(
                "cannot merge histograms with different binning".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.bins())
            .map(|i| self.lo + (i as f64 + 0.5) * w)
            .collect()
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = self.width();
        (0..=self.bins()).map(|i| self.lo + i as f64 * w).collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        let total = self.in_range();
        if total == 0 {
            return vec![0.0; self.bins()];
        }
        let norm = 1.0 / (total as f64 * self.width());
        self.counts.iter().map(|&c| c as f64 * norm).collect()
    }

    /// Cumulative in-range mass at each upper bin edge.
    pub fn cumulative(&self) -> Vec<f64> {
        let total = self.in_range().max(1) as f64;
        let mut acc = 0u64;
        self.counts
            .iter()
            .map(|&c| {
                acc += c;
                acc as f64 / total
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub mse: f64,
    pub r_squared: f64,
    pub ks: f64,
}

/// Compares a histogram with an analytic density and its CDF.
///
/// MSE and R² are taken over bin-centre densities; the KS statistic compares
/// the binned empirical CDF with `cdf` at the upper bin edges, where `cdf` is
/// renormalized to the histogram range.
pub fn fit_metrics(
    hist: &Histogram,
    pdf: impl Fn(f64) -> f64,
    cdf: impl Fn(f64) -> f64,
) -> Result<FitMetrics> {
    if hist.bins() < 10 {
        return Err(Error::degenerate(
            "fit_metrics",
            format!("{} bins, need at least 10", hist.bins()),
        ));
    }
    let occupied = hist.counts.iter().filter(|&&c| c > 0).count();
    if occupied < 2 {
        return Err(Error::degenerate(
            "fit_metrics",
            "fewer than two occupied bins",
        ));
    }
    let observed = hist.densities();
    let predicted: Vec<f64> = hist.centers().into_iter().map(&pdf).collect();
    let (mse, r_squared) = mse_r_squared(&observed, &predicted);

    let c_lo = cdf(hist.lo);
    let c_span = cdf(hist.hi) - c_lo;
    let edges = hist.edges();
    let ks = hist
        .cumulative()
        .iter()
        .zip(&edges[1..])
        .map(|(emp, &e)| {
            let model = if c_span > 0.0 {
                (cdf(e) - c_lo) / c_span
            } else {
                0.0
            };
            (emp - model).abs()
        })
        .fold(0.0, f64::max);
    Ok(FitMetrics { mse, r_squared, ks })
}

/// Mean squared error and coefficient of determination of `predicted`
/// against `observed`.
pub fn mse_r_squared(observed: &[f64], predicted: &[f64]) -> (f64, f64) {
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_res: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p).powi(2))
        .sum();
    let ss_tot: f64 = observed.iter().map(|o| (o - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        f64::NAN
    };
    (ss_res / n, r2)
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical CDF of
/// `sorted` (ascending) and `cdf`.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Binomial standard error of a frequency `successes / n`.
///
/// Uses the add-one smoothed proportion so the error never collapses to zero
/// when no (or every) trial succeeds.
pub fn binomial_stderr(successes: u64, n: u64) -> f64 {
    let p = (successes as f64 + 1.0) / (n as f64 + 2.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RandomStream, UniformSource, WeibullParams};

    #[test]
    fn masses_sum_to_one() {
        let samples: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let h = Histogram::from_samples(&samples, 0.0, 1.0, 37).unwrap();
        let mass: f64 = h.densities().iter().map(|d| d * h.width()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(h.in_range(), 1000);
    }

    #[test]
    fn out_of_range_counted_separately() {
        let h = Histogram::from_samples(&[-1.0, 0.5, 2.0, 1.0], 0.0, 1.0, 10).unwrap();
        assert_eq!((h.underflow, h.overflow, h.in_range()), (1, 1, 2));
        assert_eq!(h.counts[9], 1);
    }

    #[test]
    fn identical_histograms_have_zero_mse() {
        let h = Histogram::from_samples(&[0.1, 0.2, 0.2, 0.7], 0.0, 1.0, 10).unwrap();
        let dens = h.densities();
        let (mse, r2) = mse_r_squared(&dens, &dens);
        assert_eq!(mse, 0.0);
        assert_eq!(r2, 1.0);
    }

    #[test]
    fn self_fit_is_near_perfect() {
        let w = WeibullParams::new(1.6, 5.7).unwrap();
        let mut s = RandomStream::new(5, 0);
        let samples: Vec<f64> = (0..10_000_000)
            .map(|_| w.sample_from_uniform(s.next_uniform()))
            .collect();
        let hi = samples.iter().cloned().fold(0.0, f64::max);
        let h = Histogram::from_samples(&samples, 0.0, hi, 100).unwrap();
        let m = fit_metrics(&h, |x| w.pdf(x).unwrap(), |x| w.cdf(x).unwrap()).unwrap();
        assert!(m.r_squared > 0.995, "{m:?}");
        assert!(m.ks < 0.002, "{m:?}");
    }

    #[test]
    fn mismatched_distribution_scores_poorly() {
        let w = WeibullParams::new(1.6, 5.7).unwrap();
        let mut s = RandomStream::new(6, 0);
        let samples: Vec<f64> = (0..100_000)
            .map(|_| w.sample_from_uniform(s.next_uniform()))
            .collect();
        let hi = samples.iter().cloned().fold(0.0, f64::max);
        let h = Histogram::from_samples(&samples, 0.0, hi, 100).unwrap();
        let m = fit_metrics(&h, |_| 1.0 / hi, |x| x / hi).unwrap();
        assert!(m.r_squared < 0.5, "{m:?}");
    }

    #[test]
    fn degenerate_histograms_rejected() {
        let h = Histogram::from_samples(&[0.5; 20], 0.0, 1.0, 10).unwrap();
        assert!(fit_metrics(&h, |_| 1.0, |x| x).is_err());
        let h = Histogram::from_samples(&[0.1, 0.5], 0.0, 1.0, 5).unwrap();
        assert!(fit_metrics(&h, |_| 1.0, |x| x).is_err());
    }

    #[test]
    fn ks_of_uniform_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_distance(&xs, |x| x) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn stderr_never_zero() {
        assert!(binomial_stderr(0, 1000) > 0.0);
        assert!(binomial_stderr(1000, 1000) > 0.0);
        let se = binomial_stderr(50_000, 200_000);
        assert!((se - (0.25f64 * 0.75 / 200_000.0).sqrt()).abs() < 1e-6);
    }
}
