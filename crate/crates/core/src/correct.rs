//! Walk correction and software dead time.

use alloc::format;
use alloc::vec::Vec;

use crate::calib::CalibrationCurve;
use crate::error::{Error, Result};
use crate::tag::{TagStream, TimeTag};

/// Interpolated delay `D(dt)` from the calibration curve.
///
/// Piecewise linear between bins; clamped to the first bin below the
/// calibrated range and to the last bin above it.
pub fn interpolate_delay(curve: &CalibrationCurve, dt_ps: f64) -> Result<f64> {
    if dt_ps.is_nan() || dt_ps <= 0.0 {
        return Err(Error::Domain(format!("inter-arrival time must be positive, got {dt_ps}")));
    }
    let bins = curve.bins();
    let (Some(first), Some(last)) = (bins.first(), bins.last()) else {
        return Err(Error::config("curve", "calibration curve has no bins"));
    };
    if dt_ps <= first.t_prime_ps {
        return Ok(first.d_med_ps);
    }
    if dt_ps >= last.t_prime_ps {
        return Ok(last.d_med_ps);
    }
    let hi = bins.partition_point(|b| b.t_prime_ps < dt_ps);
    let (a, b) = (&bins[hi - 1], &bins[hi]);
    let f = (dt_ps - a.t_prime_ps) / (b.t_prime_ps - a.t_prime_ps);
    Ok(a.d_med_ps + f * (b.d_med_ps - a.d_med_ps))
}

/// Which predecessor time defines `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Predecessor {
    /// The previous tag as it came in.
    #[default]
    Raw,
    /// The previous tag after its own correction.
    Corrected,
}

/// One-pass corrector with O(1) state per channel.
#[derive(Debug, Clone)]
pub struct StreamCorrector<'a> {
    curve: &'a CalibrationCurve,
    predecessor: Predecessor,
    last: Vec<Option<f64>>,
}

impl<'a> StreamCorrector<'a> {
    pub fn new(curve: &'a CalibrationCurve, predecessor: Predecessor) -> Result<Self> {
        if curve.bins().is_empty() {
            return Err(Error::config("curve", "calibration curve has no bins"));
        }
        Ok(StreamCorrector { curve, predecessor, last: Vec::new() })
    }

    /// Delay to subtract from `tag`; `None` for the first tag of a channel.
    pub fn delay_for(&mut self, tag: &TimeTag) -> Option<f64> {
        let ch = tag.channel as usize;
        if self.last.len() <= ch {
            self.last.resize(ch + 1, None);
        }
        let t = tag.time_ps as f64;
        let delay = self.last[ch].map(|prev| {
            // equal times on one channel: use the shortest calibrated spacing
            let dt = (t - prev).max(f64::MIN_POSITIVE);
            interpolate_delay(self.curve, dt).expect("curve has bins and dt > 0")
        });
        self.last[ch] = Some(match (self.predecessor, delay) {
            (Predecessor::Corrected, Some(d)) => t - d,
            _ => t,
        });
        delay
    }

    pub fn correct(&mut self, tag: &TimeTag) -> TimeTag {
        match self.delay_for(tag) {
            Some(d) => TimeTag {
                time_ps: tag.time_ps - libm::round(d) as i64,
                flags: tag.flags | TimeTag::CORRECTED,
                ..*tag
            },
            None => *tag,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corrected {
    pub stream: TagStream,
    /// Tags that arrived out of order after correction and were re-sorted.
    pub reordered: usize,
}

/// Subtracts `D(dt)` from every tag, `dt` measured to the raw predecessor on
/// the same channel. The first tag of each channel passes through unchanged
/// and without the corrected flag.
pub fn correct_stream(tags: &TagStream, curve: &CalibrationCurve) -> Result<Corrected> {
    correct_stream_with(tags, curve, Predecessor::Raw)
}

pub fn correct_stream_with(tags: &TagStream, curve: &CalibrationCurve, predecessor: Predecessor) -> Result<Corrected> {
    let mut corrector = StreamCorrector::new(curve, predecessor)?;
    let mut out: Vec<TimeTag> = tags.iter().map(|t| corrector.correct(t)).collect();
    let reordered = out.windows(2).filter(|w| w[0].stream_cmp(&w[1]).is_gt()).count();
    if reordered > 0 {
        out.sort_by(TimeTag::stream_cmp);
    }
    Ok(Corrected { stream: TagStream::new(tags.channel_count(), out)?, reordered })
}

/// Unrounded per-tag delays (0 for the first tag of a channel).
pub fn correction_offsets(tags: &TagStream, curve: &CalibrationCurve, predecessor: Predecessor) -> Result<Vec<f64>> {
    let mut corrector = StreamCorrector::new(curve, predecessor)?;
    Ok(tags.iter().map(|t| corrector.delay_for(t).unwrap_or(0.0)).collect())
}

/// Dead-time semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeadTimeMode {
    /// Gap measured to the previous kept tag.
    #[default]
    NonParalyzable,
    /// Gap measured to the previous tag, kept or not; every event restarts
    /// the dead time.
    Paralyzable,
}

/// Non-paralyzable software dead time.
pub fn deadtime_filter(tags: &TagStream, deadtime_ps: i64) -> Result<TagStream> {
    deadtime_filter_with(tags, deadtime_ps, DeadTimeMode::NonParalyzable)
}

/// Drops every tag closer than `deadtime_ps` to its reference predecessor on
/// the same channel. The first tag of a channel is always kept.
pub fn deadtime_filter_with(tags: &TagStream, deadtime_ps: i64, mode: DeadTimeMode) -> Result<TagStream> {
    if deadtime_ps < 0 {
        return Err(Error::config("deadtime_ps", format!("must be non-negative, got {deadtime_ps}")));
    }
    let mut reference: Vec<Option<i64>> = Vec::new();
    let mut kept = Vec::with_capacity(tags.len());
    for tag in tags {
        let ch = tag.channel as usize;
        if reference.len() <= ch {
            reference.resize(ch + 1, None);
        }
        let keep = reference[ch].is_none_or(|prev| tag.time_ps - prev >= deadtime_ps);
        if keep {
            kept.push(*tag);
        }
        if keep || mode == DeadTimeMode::Paralyzable {
            reference[ch] = Some(tag.time_ps);
        }
    }
    Ok(TagStream::from_parts_unchecked(tags.channel_count(), kept))
}
