//! Laser clock recovery.
//!
//! Each tag is assigned the nearest tick of the recovered clock and a signed
//! residual delay `d` in `(-T/2, T/2]`. The clock is either known exactly
//! ([`ideal_clock`]) or tracked from the tags themselves by a
//! proportional-integral loop ([`pll_recover`]).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tag::TagStream;

/// Tags per window for the unlock check.
pub const UNLOCK_WINDOW: usize = 10_000;

/// Leading tags of a PLL clock left out of calibration while the loop settles.
pub const SETTLING_TAGS: usize = 100;

/// Weight of the newest spacing in the running mean of ticks between tags.
const SPACING_WEIGHT: f64 = 1.0 / 64.0;

/// Loop gains, as fractions of the residual fed back per tag.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PllGains {
    /// Phase correction per tag.
    pub kp: f64,
    /// Period correction per tag, divided by the mean ticks between tags.
    pub ki: f64,
}

impl Default for PllGains {
    fn default() -> Self {
        PllGains { kp: 0.01, ki: 1e-4 }
    }
}

/// Per-tag tick assignment and residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockModel {
    pub nominal_period_ps: f64,
    /// Final period estimate.
    pub period_ps: f64,
    /// Time of tick 0 under the final period estimate.
    pub phase_ps: f64,
    /// Tags before this index belong to the loop's settling transient.
    pub settled_from: usize,
    ticks: Vec<i64>,
    residuals: Vec<f64>,
}

impl ClockModel {
    pub fn new(nominal_period_ps: f64, period_ps: f64, phase_ps: f64, ticks: Vec<i64>, residuals: Vec<f64>) -> Result<Self> {
        if !(period_ps.is_finite() && period_ps > 0.0) {
            return Err(Error::config("period_ps", format!("must be positive, got {period_ps}")));
        }
        if ticks.len() != residuals.len() {
            return Err(Error::integrity(ticks.len().min(residuals.len()), "tick and residual counts differ"));
        }
        if let Some(i) = ticks.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::integrity(i + 1, "tick indices decrease"));
        }
        Ok(ClockModel { nominal_period_ps, period_ps, phase_ps, settled_from: 0, ticks, residuals })
    }

    pub fn empty(nominal_period_ps: f64) -> Self {
        ClockModel {
            nominal_period_ps,
            period_ps: nominal_period_ps,
            phase_ps: 0.0,
            settled_from: 0,
            ticks: Vec::new(),
            residuals: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn ticks(&self) -> &[i64] {
        &self.ticks
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub(crate) fn check_covers(&self, tags: &TagStream) -> Result<()> {
        if self.len() != tags.len() {
            return Err(Error::integrity(
                self.len().min(tags.len()),
                format!("clock covers {} tags, stream has {}", self.len(), tags.len()),
            ));
        }
        Ok(())
    }
}

/// Splits `offset` into the nearest tick count and a residual in
/// `(-period/2, period/2]`.
pub fn nearest_tick(offset_ps: f64, period_ps: f64) -> (i64, f64) {
    let n = libm::ceil(offset_ps / period_ps - 0.5);
    let d = offset_ps - n * period_ps;
    (n as i64, d)
}

/// Clock with known period and phase.
pub fn ideal_clock(tags: &TagStream, period_ps: f64, phase_ps: f64) -> Result<ClockModel> {
    if !(period_ps.is_finite() && period_ps > 0.0) {
        return Err(Error::config("period_ps", format!("must be positive, got {period_ps}")));
    }
    let (ticks, residuals) = tags.times().map(|t| nearest_tick(t as f64 - phase_ps, period_ps)).unzip();
    Ok(ClockModel { nominal_period_ps: period_ps, period_ps, phase_ps, settled_from: 0, ticks, residuals })
}

/// Software PLL over the tag stream.
///
/// The first tag anchors tick 0. For every later tag the loop predicts the
/// nearest tick from the current anchor and period, then moves the anchor by
/// `kp * e` and the period by `ki * e / m`, where `e` is the prediction
/// error and `m` a running mean of the ticks between tags. Residuals are
/// reported against the updated anchor.
///
/// With the raw spacing of the current pair in place of `m`, a short gap
/// followed by a long one multiplies the period kick by their ratio, which
/// destabilises the loop at low count rates.
///
/// Capture range: the phase error a frequency offset builds up between tags
/// is roughly `m * dT / kp`; with the default gains the loop holds lock while
/// that stays well below a quarter period (about 25 ticks between tags at a
/// 100 ppm offset).
pub fn pll_recover(tags: &TagStream, nominal_period_ps: f64, gains: PllGains) -> Result<ClockModel> {
    if !(nominal_period_ps.is_finite() && nominal_period_ps > 0.0) {
        return Err(Error::config("nominal_period_ps", format!("must be positive, got {nominal_period_ps}")));
    }
    if !(gains.kp.is_finite() && gains.ki.is_finite() && (0.0..1.0).contains(&gains.kp) && (0.0..1.0).contains(&gains.ki)) {
        return Err(Error::config("pll gains", format!("kp and ki must lie in [0, 1), got {} and {}", gains.kp, gains.ki)));
    }
    let mut times = tags.times();
    let Some(first) = times.next() else {
        return Ok(ClockModel::empty(nominal_period_ps));
    };
    let mut period = nominal_period_ps;
    let mut anchor = first as f64;
    let mut anchor_tick = 0i64;
    let mut ticks = Vec::with_capacity(tags.len());
    let mut residuals = Vec::with_capacity(tags.len());
    ticks.push(0);
    residuals.push(0.0);

    let mut window = Vec::with_capacity(UNLOCK_WINDOW);
    window.push(0.0);
    let mut window_index = 0;
    let mut mean_spacing: Option<f64> = None;

    for t in times {
        let (m, e) = nearest_tick(t as f64 - anchor, period);
        let predicted = anchor + m as f64 * period;
        if m > 0 {
            let mean = match mean_spacing {
                Some(s) => s + SPACING_WEIGHT * (m as f64 - s),
                None => m as f64,
            };
            mean_spacing = Some(mean);
            period += gains.ki * e / mean;
        }
        anchor = predicted + gains.kp * e;
        anchor_tick += m;
        ticks.push(anchor_tick);
        residuals.push(t as f64 - anchor);

        window.push(e);
        if window.len() == UNLOCK_WINDOW {
            let mid = window.len() / 2;
            let (_, median, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
            let median = *median;
            if libm::fabs(median) > period / 4.0 {
                return Err(Error::Unlocked { window: window_index, median_residual_ps: median });
            }
            window.clear();
            window_index += 1;
        }
    }
    let phase = anchor - anchor_tick as f64 * period;
    Ok(ClockModel {
        nominal_period_ps,
        period_ps: period,
        phase_ps: phase,
        settled_from: SETTLING_TAGS.min(ticks.len()),
        ticks,
        residuals,
    })
}

/// How to obtain a clock for a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClockSource {
    Ideal { period_ps: f64, phase_ps: f64 },
    Pll { nominal_period_ps: f64, gains: PllGains },
}

impl ClockSource {
    pub fn recover(&self, tags: &TagStream) -> Result<ClockModel> {
        match *self {
            ClockSource::Ideal { period_ps, phase_ps } => ideal_clock(tags, period_ps, phase_ps),
            ClockSource::Pll { nominal_period_ps, gains } => pll_recover(tags, nominal_period_ps, gains),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub index: usize,
    pub tick: i64,
    pub delay_ps: f64,
}

/// Per-tag `(index, tick, d)` triples.
pub fn residuals(tags: &TagStream, clock: &ClockModel) -> Result<Vec<Residual>> {
    clock.check_covers(tags)?;
    Ok(clock
        .ticks
        .iter()
        .zip(&clock.residuals)
        .enumerate()
        .map(|(index, (&tick, &delay_ps))| Residual { index, tick, delay_ps })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_rule() {
        let t = 1000.0;
        assert_eq!(nearest_tick(0.0, t), (0, 0.0));
        assert_eq!(nearest_tick(5.0, t), (0, 5.0));
        let (n, d) = nearest_tick(600.0, t);
        assert_eq!(n, 1);
        assert!(libm::fabs(d + 400.0) < 1e-9);
        assert_eq!(nearest_tick(500.0, t), (0, 500.0));
        assert_eq!(nearest_tick(-500.0, t), (-1, 500.0));
    }

    #[test]
    fn ideal_clock_residuals() {
        let tags = TagStream::from_times(&[0, 1865, 3720 + 1116]).unwrap();
        let clock = ideal_clock(&tags, 1860.0, 0.0).unwrap();
        assert_eq!(clock.ticks(), &[0, 1, 3]);
        let d = clock.residuals();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 5.0);
        assert!(libm::fabs(d[2] + 0.4 * 1860.0) < 1e-9);
    }

    #[test]
    fn empty_stream_gives_empty_clock() {
        let clock = pll_recover(&TagStream::empty(1), 1860.0, PllGains::default()).unwrap();
        assert!(clock.is_empty());
    }

    #[test]
    fn phase_step_absorbed() {
        let times: Vec<i64> = (0..5000).map(|k| 37 + k * 3 * 1860).collect();
        let tags = TagStream::from_times(&times).unwrap();
        let clock = pll_recover(&tags, 1860.0, PllGains::default()).unwrap();
        assert!(clock.residuals()[100..].iter().all(|d| libm::fabs(*d) < 0.5));
        assert!(libm::fabs(clock.period_ps - 1860.0) < 1e-6);
    }

    #[test]
    fn residual_length_mismatch() {
        let tags = TagStream::from_times(&[0, 1]).unwrap();
        let clock = ClockModel::empty(1860.0);
        assert!(matches!(residuals(&tags, &clock), Err(Error::Integrity { .. })));
    }

    #[test]
    fn unlock_reported() {
        // with the loop frozen, a phase jump after the anchor tag never decays
        let times: Vec<i64> = core::iter::once(0).chain((1..20_000i64).map(|k| k * 1860 + 600)).collect();
        let tags = TagStream::from_times(&times).unwrap();
        let err = pll_recover(&tags, 1860.0, PllGains { kp: 0.0, ki: 0.0 }).unwrap_err();
        assert!(matches!(err, Error::Unlocked { window: 0, .. }), "{err:?}");
        assert!(pll_recover(&tags, 1860.0, PllGains::default()).is_ok());
    }
}
