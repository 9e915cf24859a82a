//! Fixed-bin delay histograms and width-at-fraction statistics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Fixed-width histogram of delays. Bin `i` covers
/// `[origin + i * width, origin + (i + 1) * width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayHistogram {
    bin_width_ps: f64,
    origin_ps: f64,
    counts: Vec<u64>,
}

impl DelayHistogram {
    pub fn new(origin_ps: f64, bin_width_ps: f64, bins: usize) -> Result<Self> {
        if !(bin_width_ps.is_finite() && bin_width_ps > 0.0) {
            return Err(Error::config("bin_width_ps", format!("must be positive, got {bin_width_ps}")));
        }
        if !origin_ps.is_finite() {
            return Err(Error::config("origin_ps", "must be finite"));
        }
        if bins == 0 {
            return Err(Error::config("bins", "at least one bin is required"));
        }
        Ok(DelayHistogram { bin_width_ps, origin_ps, counts: vec![0; bins] })
    }

    /// Histogram covering the residual window `(-period/2, period/2]`.
    pub fn for_period(period_ps: f64, bin_width_ps: f64) -> Result<Self> {
        if !(period_ps.is_finite() && period_ps > 0.0) {
            return Err(Error::config("period_ps", format!("must be positive, got {period_ps}")));
        }
        if !(bin_width_ps.is_finite() && bin_width_ps > 0.0) {
            return Err(Error::config("bin_width_ps", format!("must be positive, got {bin_width_ps}")));
        }
        // one extra bin so the closed right edge is inside
        let bins = libm::floor(period_ps / bin_width_ps) as usize + 1;
        Self::new(-period_ps / 2.0, bin_width_ps, bins)
    }

    /// Builds a histogram directly from counts.
    pub fn from_counts(origin_ps: f64, bin_width_ps: f64, counts: Vec<u64>) -> Result<Self> {
        let mut h = Self::new(origin_ps, bin_width_ps, counts.len())?;
        h.counts = counts;
        Ok(h)
    }

    pub fn bin_width_ps(&self) -> f64 {
        self.bin_width_ps
    }

    pub fn origin_ps(&self) -> f64 {
        self.origin_ps
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bin_start_ps(&self, i: usize) -> f64 {
        self.origin_ps + i as f64 * self.bin_width_ps
    }

    pub fn bin_center_ps(&self, i: usize) -> f64 {
        self.bin_start_ps(i) + 0.5 * self.bin_width_ps
    }

    pub fn bin_of(&self, value_ps: f64) -> Option<usize> {
        let x = (value_ps - self.origin_ps) / self.bin_width_ps;
        if x.is_nan() || x < 0.0 {
            return None;
        }
        let i = libm::floor(x) as usize;
        (i < self.counts.len()).then_some(i)
    }

    /// Adds one event; returns false (and counts nothing) outside the window.
    pub fn accumulate(&mut self, value_ps: f64) -> bool {
        match self.bin_of(value_ps) {
            Some(i) => {
                self.counts[i] += 1;
                true
            }
            None => false,
        }
    }

    /// Bin-wise sum with a histogram of identical binning.
    pub fn merge(&mut self, other: &DelayHistogram) -> Result<()> {
        if self.bin_width_ps != other.bin_width_ps || self.origin_ps != other.origin_ps || self.counts.len() != other.counts.len() {
            return Err(Error::config("histogram", "cannot merge histograms with different binning"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Median, interpolating linearly inside the bin that holds it.
    pub fn median_ps(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let half = total as f64 / 2.0;
        let mut below = 0u64;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > 0 && (below + c) as f64 >= half {
                let frac = (half - below as f64) / c as f64;
                return Some(self.bin_start_ps(i) + frac * self.bin_width_ps);
            }
            below += c;
        }
        None
    }

    /// Index of the first bin holding the maximum count.
    pub fn peak_bin(&self) -> Option<usize> {
        let max = *self.counts.iter().max()?;
        (max > 0).then(|| self.counts.iter().position(|&c| c == max).unwrap())
    }

    /// Sample mean and standard deviation using bin centres.
    pub fn mean_std_ps(&self) -> Option<(f64, f64)> {
        let n = self.total() as f64;
        if n == 0.0 {
            return None;
        }
        let mean = self.counts.iter().enumerate().map(|(i, &c)| c as f64 * self.bin_center_ps(i)).sum::<f64>() / n;
        let var = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let d = self.bin_center_ps(i) - mean;
                c as f64 * d * d
            })
            .sum::<f64>()
            / n;
        Some((mean, libm::sqrt(var)))
    }

    fn values(&self, smooth: bool) -> Vec<f64> {
        let raw = self.counts.iter().map(|&c| c as f64);
        if !smooth {
            return raw.collect();
        }
        let c = &self.counts;
        (0..c.len())
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(c.len() - 1);
                c[lo..=hi].iter().sum::<u64>() as f64 / (hi - lo + 1) as f64
            })
            .collect()
    }
}

/// Full width of the histogram at `fraction` of its maximum.
///
/// Crossings are the outermost points where the profile reaches the level,
/// interpolated linearly between bin centres, so long tails are counted in
/// full. `smooth` applies a 3-bin moving average before anything else.
pub fn width_at_fraction(hist: &DelayHistogram, fraction: f64, smooth: bool) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Domain(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let y = hist.values(smooth);
    let (min, max) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if max <= min {
        return Err(Error::Degenerate("histogram has no peak".into()));
    }
    let level = fraction * max;
    let w = hist.bin_width_ps();
    let first = y.iter().position(|&v| v >= level).unwrap();
    let last = y.iter().rposition(|&v| v >= level).unwrap();
    let left = if first == 0 {
        hist.bin_center_ps(0)
    } else {
        let (a, b) = (y[first - 1], y[first]);
        hist.bin_center_ps(first - 1) + (level - a) / (b - a) * w
    };
    let right = if last == y.len() - 1 {
        hist.bin_center_ps(last)
    } else {
        let (a, b) = (y[last], y[last + 1]);
        hist.bin_center_ps(last) + (a - level) / (a - b) * w
    };
    Ok(right - left)
}

/// The three reported widths of an instrument response.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WidthMetrics {
    pub fwhm_ps: f64,
    pub fw10m_ps: f64,
    pub fw1m_ps: f64,
    pub peak_position_ps: f64,
    pub total_counts: u64,
}

impl WidthMetrics {
    /// FWHM and FW10%M from raw bins, FW1%M after 3-bin smoothing.
    pub fn from_histogram(hist: &DelayHistogram) -> Result<Self> {
        Self::with_smoothing(hist, false, true)
    }

    /// No smoothing anywhere; for analytic histograms.
    pub fn unsmoothed(hist: &DelayHistogram) -> Result<Self> {
        Self::with_smoothing(hist, false, false)
    }

    pub fn with_smoothing(hist: &DelayHistogram, smooth_upper: bool, smooth_fw1m: bool) -> Result<Self> {
        let peak = hist.peak_bin().ok_or_else(|| Error::Degenerate("empty histogram".into()))?;
        Ok(WidthMetrics {
            fwhm_ps: width_at_fraction(hist, 0.5, smooth_upper)?,
            fw10m_ps: width_at_fraction(hist, 0.1, smooth_upper)?,
            fw1m_ps: width_at_fraction(hist, 0.01, smooth_fw1m)?,
            peak_position_ps: hist.bin_center_ps(peak),
            total_counts: hist.total(),
        })
    }
}
