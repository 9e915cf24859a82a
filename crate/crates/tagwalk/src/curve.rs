//! Calibration curve file (JSON, version 1).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tagwalk_core::{CalibrationCurve, CurveBin};

use crate::error::{Error, Result};

pub const CURVE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    version: u32,
    laser_period_ps: f64,
    baseline_ps: f64,
    min_samples: u64,
    bins: Vec<CurveBin>,
}

pub fn curve_to_string(curve: &CalibrationCurve) -> String {
    let file = CurveFile {
        version: CURVE_VERSION,
        laser_period_ps: curve.laser_period_ps,
        baseline_ps: curve.baseline_ps,
        min_samples: curve.min_samples,
        bins: curve.bins().to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("curve values are finite");
    text.push('\n');
    text
}

pub fn parse_curve(text: &str) -> std::result::Result<CalibrationCurve, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: CurveFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." { e.inner().to_string() } else { format!("{path}: {}", e.inner()) }
    })?;
    if file.version != CURVE_VERSION {
        return Err(format!("version: unsupported curve version {}, expected {CURVE_VERSION}", file.version));
    }
    CalibrationCurve::new(file.laser_period_ps, file.baseline_ps, file.min_samples, file.bins).map_err(|e| match e {
        tagwalk_core::Error::Config { field, reason } => format!("{field}: {reason}"),
        other => other.to_string(),
    })
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<CalibrationCurve> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve(&text).map_err(|message| Error::Schema { path: path.into(), message })
}

pub fn write_curve(curve: &CalibrationCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = curve_to_string(curve);
    // re-validate what goes out
    parse_curve(&text).map_err(|message| Error::Schema { path: path.into(), message })?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CalibrationCurve {
        let bins = vec![
            CurveBin { t_prime_ps: 20_465.115, d_med_ps: 312.25, d_fwhm_ps: 61.5, n_samples: 150 },
            CurveBin { t_prime_ps: 22_325.58, d_med_ps: 150.125, d_fwhm_ps: 50.0, n_samples: 4012 },
        ];
        CalibrationCurve::new(1860.465, 171.3333333333, 100, bins).unwrap()
    }

    #[test]
    fn text_round_trip_is_byte_identical() {
        let text = curve_to_string(&sample());
        let back = parse_curve(&text).unwrap();
        assert_eq!(back, sample());
        assert_eq!(curve_to_string(&back), text);
    }

    #[test]
    fn schema_errors_carry_paths() {
        let text = curve_to_string(&sample());
        let e = parse_curve(&text.replace("\"version\": 1", "\"version\": 2")).unwrap_err();
        assert!(e.starts_with("version"), "{e}");
        let e = parse_curve(&text.replace("\"d_fwhm_ps\": 50.0", "\"d_fwhm_ps\": 50.0, \"extra\": 1")).unwrap_err();
        assert!(e.starts_with("bins[1]"), "{e}");
        let e = parse_curve(&text.replace("4012", "12")).unwrap_err();
        assert!(e.starts_with("bins[1].n_samples"), "{e}");
        let e = parse_curve(&text.replace("22325.58", "20000.0")).unwrap_err();
        assert!(e.starts_with("bins[1].t_prime_ps"), "{e}");
        let e = parse_curve(&text.replace("\"baseline_ps\"", "\"baseline\"")).unwrap_err();
        assert!(e.contains("baseline"), "{e}");
    }
}
