//! Instrument response functions and before/after width reports.

use crate::clock::{ClockModel, ClockSource};
use crate::error::{Error, Result};
use crate::histogram::{DelayHistogram, WidthMetrics};
use crate::tag::TagStream;

/// Histogram of every residual over `(-T/2, T/2]`.
pub fn build_irf(tags: &TagStream, clock: &ClockModel, bin_width_ps: f64) -> Result<DelayHistogram> {
    clock.check_covers(tags)?;
    let mut hist = DelayHistogram::for_period(clock.period_ps, bin_width_ps)?;
    let last = hist.counts().len() - 1;
    for &d in clock.residuals() {
        if !hist.accumulate(d) {
            // rounding at the window edge; keep the event in the edge bin
            let edge = if d < 0.0 { hist.bin_center_ps(0) } else { hist.bin_center_ps(last) };
            hist.accumulate(edge);
        }
    }
    Ok(hist)
}

/// Detected events per second, `(N - 1) / (t_last - t_first)`.
pub fn count_rate(tags: &TagStream) -> Result<f64> {
    let (Some(first), Some(last)) = (tags.tags().first(), tags.tags().last()) else {
        return Err(Error::UndefinedRate);
    };
    if tags.len() < 2 || last.time_ps == first.time_ps {
        return Err(Error::UndefinedRate);
    }
    Ok((tags.len() - 1) as f64 / ((last.time_ps - first.time_ps) as f64 * 1e-12))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StreamWidths {
    pub count_rate_cps: f64,
    pub fwhm_ps: f64,
    pub fw10m_ps: f64,
    pub fw1m_ps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WidthRatios {
    pub fwhm: f64,
    pub fw10m: f64,
    pub fw1m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthReport {
    pub before: StreamWidths,
    pub after: StreamWidths,
    /// after / before
    pub ratio: WidthRatios,
    pub before_irf: DelayHistogram,
    pub after_irf: DelayHistogram,
}

pub fn stream_widths(tags: &TagStream, irf: &DelayHistogram) -> Result<StreamWidths> {
    let m = WidthMetrics::from_histogram(irf)?;
    Ok(StreamWidths { count_rate_cps: count_rate(tags)?, fwhm_ps: m.fwhm_ps, fw10m_ps: m.fw10m_ps, fw1m_ps: m.fw1m_ps })
}

/// IRF widths of two versions of a stream and their ratios. Each stream gets
/// its own clock from `clock`, since correction moves the tags.
pub fn compare_widths(before: &TagStream, after: &TagStream, clock: &ClockSource, bin_width_ps: f64) -> Result<WidthReport> {
    let before_irf = build_irf(before, &clock.recover(before)?, bin_width_ps)?;
    let after_irf = build_irf(after, &clock.recover(after)?, bin_width_ps)?;
    let b = stream_widths(before, &before_irf)?;
    let a = stream_widths(after, &after_irf)?;
    Ok(WidthReport {
        before: b,
        after: a,
        ratio: WidthRatios { fwhm: a.fwhm_ps / b.fwhm_ps, fw10m: a.fw10m_ps / b.fw10m_ps, fw1m: a.fw1m_ps / b.fw1m_ps },
        before_irf,
        after_irf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ideal_clock;

    #[test]
    fn on_tick_tags_fill_one_bin() {
        let times: alloc::vec::Vec<i64> = (0..100).map(|k| k * 2000).collect();
        let tags = TagStream::from_times(&times).unwrap();
        let irf = build_irf(&tags, &ideal_clock(&tags, 2000.0, 0.0).unwrap(), 1.0).unwrap();
        assert_eq!(irf.total(), 100);
        assert_eq!(irf.counts().iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn rates() {
        let times: alloc::vec::Vec<i64> = (0..11).map(|k| k * 100_000).collect();
        let r = count_rate(&TagStream::from_times(&times).unwrap()).unwrap();
        assert!(libm::fabs(r - 1e7) < 1e-3);
        let r = count_rate(&TagStream::from_times(&[0, 1_000_000_000_000]).unwrap()).unwrap();
        assert!(libm::fabs(r - 1.0) < 1e-12);
        assert_eq!(count_rate(&TagStream::from_times(&[5]).unwrap()), Err(Error::UndefinedRate));
    }

    #[test]
    fn empty_stream_empty_irf() {
        let tags = TagStream::empty(1);
        let irf = build_irf(&tags, &ideal_clock(&tags, 2000.0, 0.0).unwrap(), 1.0).unwrap();
        assert_eq!(irf.total(), 0);
    }
}
