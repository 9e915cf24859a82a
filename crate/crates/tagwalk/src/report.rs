//! Plot-ready outputs: CSV tables and the width report.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tagwalk_core::metrics::{StreamWidths, WidthRatios};
use tagwalk_core::sim::{McrSweep, WaveformTrace};
use tagwalk_core::{DelayHistogram, WidthReport};

use crate::error::{Error, Result};

#[derive(Serialize)]
struct HistogramRow {
    bin_start_ps: f64,
    count: u64,
}

#[derive(Serialize)]
struct SweepRow {
    incident_rate_cps: f64,
    detected_rate_cps: f64,
    usable_rate_cps: Option<f64>,
    normalized_efficiency: f64,
}

#[derive(Serialize)]
struct WaveformRow {
    time_ps: f64,
    voltage_mv: f64,
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>, header: &[&str]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut empty = true;
    for row in rows {
        w.serialize(row).expect("rows are plain numbers");
        empty = false;
    }
    if empty {
        w.write_record(header).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv output is utf-8")
}

pub fn histogram_csv(hist: &DelayHistogram) -> String {
    let rows = hist.counts().iter().enumerate().map(|(i, &count)| HistogramRow { bin_start_ps: hist.bin_start_ps(i), count });
    to_csv(rows, &["bin_start_ps", "count"])
}

/// Before/after widths in the on-disk layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthReportFile {
    pub before: StreamWidths,
    pub after: StreamWidths,
    pub ratio: WidthRatios,
}

impl From<&WidthReport> for WidthReportFile {
    fn from(r: &WidthReport) -> Self {
        WidthReportFile { before: r.before, after: r.after, ratio: r.ratio }
    }
}

pub fn width_report_json(report: &WidthReport) -> String {
    let mut text = serde_json::to_string_pretty(&WidthReportFile::from(report)).expect("widths are finite");
    text.push('\n');
    text
}

/// Widths of a single stream, for `analyze` without an `--after` file.
pub fn stream_widths_json(widths: &StreamWidths) -> String {
    let mut text = serde_json::to_string_pretty(widths).expect("widths are finite");
    text.push('\n');
    text
}

pub fn sweep_csv(sweep: &McrSweep) -> String {
    let rows = sweep.points.iter().map(|p| SweepRow {
        incident_rate_cps: p.incident_rate_hz,
        detected_rate_cps: p.detected_rate_hz,
        usable_rate_cps: p.usable_rate_hz,
        normalized_efficiency: p.normalized_efficiency,
    });
    to_csv(rows, &["incident_rate_cps", "detected_rate_cps", "usable_rate_cps", "normalized_efficiency"])
}

pub fn waveform_csv(trace: &WaveformTrace) -> String {
    let rows = trace.samples.iter().enumerate().map(|(i, &voltage_mv)| WaveformRow { time_ps: trace.time_of(i), voltage_mv });
    to_csv(rows, &["time_ps", "voltage_mv"])
}

pub fn write_text(text: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_rows() {
        let h = DelayHistogram::from_counts(-1.5, 1.0, vec![1, 0, 7]).unwrap();
        assert_eq!(histogram_csv(&h), "bin_start_ps,count\n-1.5,1\n-0.5,0\n0.5,7\n");
    }

    #[test]
    fn report_keys() {
        let w = StreamWidths { count_rate_cps: 1e6, fwhm_ps: 50.0, fw10m_ps: 90.0, fw1m_ps: 200.0 };
        let file = WidthReportFile { before: w, after: w, ratio: WidthRatios { fwhm: 1.0, fw10m: 1.0, fw1m: 1.0 } };
        let v: serde_json::Value = serde_json::to_value(file).unwrap();
        for key in ["count_rate_cps", "fwhm_ps", "fw10m_ps", "fw1m_ps"] {
            assert!(v["before"].get(key).is_some());
            assert!(v["after"].get(key).is_some());
        }
        for key in ["fwhm", "fw10m", "fw1m"] {
            assert!(v["ratio"].get(key).is_some());
        }
    }
}
