//! Delay-versus-spacing calibration.
//!
//! Adjacent events on a channel form a pair separated by `n` laser periods
//! (`t' = n * T`). The residual delay of the second event is histogrammed per
//! `n`; the median of each histogram is the walk at that spacing and its FWHM
//! the jitter left after correction. Subtracting the mean median over the
//! long-spacing region makes the curve tend to zero.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::clock::ClockModel;
use crate::error::{Error, Result};
use crate::histogram::{width_at_fraction, DelayHistogram};
use crate::tag::TagStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecord {
    /// Laser periods between the two events.
    pub n: u64,
    pub t_prime_ps: f64,
    /// Residual delay of the second event.
    pub d_ps: f64,
}

/// Pairs extracted from one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairs {
    pub period_ps: f64,
    pub records: Vec<PairRecord>,
    /// Adjacent events assigned to the same tick.
    pub dropped_same_tick: usize,
}

/// Pairs each tag with the previous tag on its channel. Pairs ending inside
/// the clock's settling transient are skipped.
pub fn extract_pairs(tags: &TagStream, clock: &ClockModel) -> Result<Pairs> {
    clock.check_covers(tags)?;
    let ticks = clock.ticks();
    let delays = clock.residuals();
    let mut previous: Vec<Option<usize>> = vec![None; tags.channel_count() as usize];
    let mut records = Vec::with_capacity(tags.len().saturating_sub(1));
    let mut dropped_same_tick = 0;
    for (i, tag) in tags.iter().enumerate() {
        let slot = &mut previous[tag.channel as usize];
        if let Some(j) = slot.replace(i) {
            if i < clock.settled_from {
                continue;
            }
            let n = ticks[i] - ticks[j];
            if n < 0 {
                return Err(Error::integrity(i, "clock ticks decrease"));
            }
            if n == 0 {
                dropped_same_tick += 1;
                continue;
            }
            let n = n as u64;
            records.push(PairRecord { n, t_prime_ps: n as f64 * clock.period_ps, d_ps: delays[i] });
        }
    }
    Ok(Pairs { period_ps: clock.period_ps, records, dropped_same_tick })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveConfig {
    pub bin_width_ps: f64,
    /// Spacings with fewer pairs are left out of the curve.
    pub min_samples: usize,
    /// Spacings at or beyond this define the zero baseline.
    pub baseline_tprime_ps: f64,
    /// Ignore spacings beyond this.
    pub max_tprime_ps: Option<f64>,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig { bin_width_ps: 1.0, min_samples: 100, baseline_tprime_ps: 500_000.0, max_tprime_ps: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CurveBin {
    pub t_prime_ps: f64,
    /// Median delay with the baseline removed.
    pub d_med_ps: f64,
    /// FWHM of the delay distribution.
    pub d_fwhm_ps: f64,
    pub n_samples: u64,
}

/// The delay lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    pub laser_period_ps: f64,
    /// Median latency at long spacings, already subtracted from every bin.
    pub baseline_ps: f64,
    pub min_samples: u64,
    bins: Vec<CurveBin>,
}

impl CalibrationCurve {
    pub fn new(laser_period_ps: f64, baseline_ps: f64, min_samples: u64, bins: Vec<CurveBin>) -> Result<Self> {
        if !(laser_period_ps.is_finite() && laser_period_ps > 0.0) {
            return Err(Error::config("laser_period_ps", format!("must be positive, got {laser_period_ps}")));
        }
        if !baseline_ps.is_finite() {
            return Err(Error::config("baseline_ps", "must be finite"));
        }
        for (i, b) in bins.iter().enumerate() {
            let field = |name: &str| format!("bins[{i}].{name}");
            if !(b.t_prime_ps.is_finite() && b.t_prime_ps > 0.0) {
                return Err(Error::config(&field("t_prime_ps"), "must be positive"));
            }
            if !b.d_med_ps.is_finite() {
                return Err(Error::config(&field("d_med_ps"), "must be finite"));
            }
            if !(b.d_fwhm_ps.is_finite() && b.d_fwhm_ps >= 0.0) {
                return Err(Error::config(&field("d_fwhm_ps"), "must be non-negative"));
            }
            if b.n_samples < min_samples {
                return Err(Error::config(
                    &field("n_samples"),
                    format!("{} is below min_samples {min_samples}", b.n_samples),
                ));
            }
            if i > 0 && bins[i - 1].t_prime_ps >= b.t_prime_ps {
                return Err(Error::config(&field("t_prime_ps"), "bins must be strictly increasing in t_prime_ps"));
            }
        }
        Ok(CalibrationCurve { laser_period_ps, baseline_ps, min_samples, bins })
    }

    pub fn bins(&self) -> &[CurveBin] {
        &self.bins
    }

    pub fn max_abs_delay_ps(&self) -> f64 {
        self.bins.iter().map(|b| libm::fabs(b.d_med_ps)).fold(0.0, f64::max)
    }
}

/// A spacing whose delay distribution reaches into the edges of the
/// residual window, where wrap-around to the neighbouring tick is possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrapRisk {
    pub n: u64,
    pub edge_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveBuild {
    pub curve: CalibrationCurve,
    pub wrap_risks: Vec<WrapRisk>,
}

/// Share of the window, split over both edges, checked for wrap risk.
const EDGE_SHARE: f64 = 0.05;
/// Mass in the edges above which a spacing is flagged.
const EDGE_MASS: f64 = 0.01;

pub fn build_curve(pairs: &Pairs, cfg: &CurveConfig) -> Result<CurveBuild> {
    if pairs.records.is_empty() {
        return Err(Error::InsufficientStatistics { best_n: 0, best_count: 0, min_samples: cfg.min_samples });
    }
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for p in &pairs.records {
        if cfg.max_tprime_ps.is_some_and(|max| p.t_prime_ps > max) {
            continue;
        }
        groups.entry(p.n).or_default().push(p.d_ps);
    }
    let (best_n, best_count) = groups
        .iter()
        .map(|(&n, d)| (n, d.len()))
        .fold((0, 0), |best, g| if g.1 > best.1 { g } else { best });
    if best_count < cfg.min_samples.max(1) {
        return Err(Error::InsufficientStatistics { best_n, best_count, min_samples: cfg.min_samples });
    }

    let period = pairs.period_ps;
    let edge = period / 2.0 * (1.0 - EDGE_SHARE);
    let mut raw = Vec::new();
    let mut wrap_risks = Vec::new();
    for (&n, delays) in groups.iter().filter(|(_, d)| d.len() >= cfg.min_samples) {
        let mut hist = DelayHistogram::for_period(period, cfg.bin_width_ps)?;
        for &d in delays {
            hist.accumulate(d);
        }
        let edge_fraction = delays.iter().filter(|d| libm::fabs(**d) > edge).count() as f64 / delays.len() as f64;
        if edge_fraction > EDGE_MASS {
            wrap_risks.push(WrapRisk { n, edge_fraction });
        }
        let Some(median) = hist.median_ps() else { continue };
        let fwhm = width_at_fraction(&hist, 0.5, false).unwrap_or(cfg.bin_width_ps);
        raw.push(CurveBin { t_prime_ps: n as f64 * period, d_med_ps: median, d_fwhm_ps: fwhm, n_samples: hist.total() });
    }

    let baseline_bins: Vec<f64> =
        raw.iter().filter(|b| b.t_prime_ps >= cfg.baseline_tprime_ps).map(|b| b.d_med_ps).collect();
    if baseline_bins.is_empty() {
        return Err(Error::NoBaseline { baseline_tprime_ps: cfg.baseline_tprime_ps });
    }
    let baseline = baseline_bins.iter().sum::<f64>() / baseline_bins.len() as f64;
    for b in &mut raw {
        b.d_med_ps -= baseline;
    }
    let curve = CalibrationCurve::new(period, baseline, cfg.min_samples as u64, raw)?;
    Ok(CurveBuild { curve, wrap_risks })
}
