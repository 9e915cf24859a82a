use std::fs;
use std::io::Cursor;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagwalk::config::{parse_config, read_config, SimConfig};
use tagwalk::curve::{curve_to_string, parse_curve, read_curve, write_curve};
use tagwalk::tags::{read_tags, write_tags, TagReader, TagWriter};
use tagwalk_core::format::encode;
use tagwalk_core::{CalibrationCurve, CurveBin, TagStream, TimeTag};

fn seeded_stream(n: usize, channels: u16, seed: u64) -> TagStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0i64;
    let tags = (0..n)
        .map(|_| {
            t += rng.random_range(0..400_000);
            TimeTag::new(t, rng.random_range(0..channels)).with_flags(rng.random_range(0..4))
        })
        .collect();
    TagStream::new(channels, tags).unwrap()
}

#[test]
fn million_tags_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.ttg");
    let stream = seeded_stream(1_000_000, 4, 17);
    write_tags(&stream, &path).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes, encode(&stream));
    let back = read_tags(&path).unwrap();
    assert_eq!(back, stream);
    write_tags(&back, &path).unwrap();
    assert_eq!(fs::read(&path).unwrap(), bytes);
}

#[test]
fn streaming_reader_matches_batch() {
    let stream = seeded_stream(5000, 2, 3);
    let mut writer = TagWriter::new(Vec::new(), 2).unwrap();
    for tag in &stream {
        writer.push(tag).unwrap();
    }
    let bytes = writer.finish().unwrap();
    let read: Vec<TimeTag> = TagReader::new(Cursor::new(&bytes)).unwrap().map(Result::unwrap).collect();
    assert_eq!(read, stream.tags());
}

#[test]
fn writer_refuses_disorder() {
    let mut writer = TagWriter::new(Vec::new(), 1).unwrap();
    writer.push(&TimeTag::new(10, 0)).unwrap();
    assert!(writer.push(&TimeTag::new(5, 0)).is_err());
    assert!(writer.push(&TimeTag::new(20, 3)).is_err());
}

#[test]
fn reader_stops_at_first_bad_record() {
    let stream = seeded_stream(10, 1, 4);
    let mut bytes = encode(&stream);
    bytes.truncate(bytes.len() - 3);
    let results: Vec<_> = TagReader::new(Cursor::new(&bytes)).unwrap().collect();
    assert_eq!(results.len(), 10);
    assert!(results[..9].iter().all(Result::is_ok));
    assert!(results[9].is_err());
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = read_tags(dir.path().join("nope.ttg")).unwrap_err();
    assert_eq!(missing.exit_code(), 1);
    let bad = dir.path().join("bad.ttg");
    fs::write(&bad, b"TTG2............").unwrap();
    assert_eq!(read_tags(&bad).unwrap_err().exit_code(), 4);
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"laser": {"period": 1}}"#).unwrap();
    let e = read_config(&cfg).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("laser"), "{e}");
    let curve = dir.path().join("curve.json");
    fs::write(&curve, "{\"version\": 1}").unwrap();
    assert_eq!(read_curve(&curve).unwrap_err().exit_code(), 2);
}

#[test]
fn config_file_round_trip() {
    let c = SimConfig::default();
    let text = serde_json::to_string_pretty(&c).unwrap();
    assert_eq!(parse_config(&text).unwrap(), c);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in v["laser"].as_object().unwrap().keys().chain(v["detector"].as_object().unwrap().keys()) {
        let unit = ["_ps", "_mv", "_hz"].iter().any(|s| key.ends_with(s));
        let dimensionless = ["mean_photon_number", "efficiency_max", "efficiency_exponent", "holdoff"].contains(&key.as_str());
        assert!(unit || dimensionless, "{key} has no unit suffix");
    }
}

fn curve_strategy() -> impl Strategy<Value = CalibrationCurve> {
    (
        100.0f64..5000.0,
        -1e3f64..1e3,
        1u64..1000,
        prop::collection::vec((1.0f64..1e4, -500.0f64..500.0, 0.0f64..200.0, 0u64..1_000_000), 1..60),
    )
        .prop_map(|(period, baseline, min_samples, raw)| {
            let mut t = 0.0;
            let bins = raw
                .into_iter()
                .map(|(step, d, w, extra)| {
                    t += step;
                    CurveBin { t_prime_ps: t, d_med_ps: d, d_fwhm_ps: w, n_samples: min_samples + extra }
                })
                .collect();
            CalibrationCurve::new(period, baseline, min_samples, bins).unwrap()
        })
}

proptest! {
    #[test]
    fn curve_text_round_trip(curve in curve_strategy()) {
        let text = curve_to_string(&curve);
        let back = parse_curve(&text).unwrap();
        prop_assert_eq!(&back, &curve);
        prop_assert_eq!(curve_to_string(&back), text);
    }
}

#[test]
fn curve_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.json");
    let bins = (1..50)
        .map(|i| CurveBin {
            t_prime_ps: i as f64 * 1860.465,
            d_med_ps: 300.0 / i as f64,
            d_fwhm_ps: 50.0 + 1.0 / 3.0,
            n_samples: 100 + i,
        })
        .collect();
    let curve = CalibrationCurve::new(1860.465, 120.1, 100, bins).unwrap();
    write_curve(&curve, &path).unwrap();
    let first = fs::read(&path).unwrap();
    let back = read_curve(&path).unwrap();
    assert_eq!(back, curve);
    write_curve(&back, &path).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
}
