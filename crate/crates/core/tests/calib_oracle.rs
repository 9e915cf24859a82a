use tagwalk_core::calib::CurveBuild;
use tagwalk_core::{
    analytic_walk, build_curve, detect, extract_pairs, generate_photons, ideal_clock, CurveConfig, DetectorConfig,
    LaserConfig, TagStream,
};

fn simulate(det: &DetectorConfig, photon_rate: f64, duration_ps: i64, seed: u64) -> (LaserConfig, TagStream) {
    let laser = LaserConfig { duration_ps, ..Default::default() }.with_photon_rate(photon_rate).unwrap();
    let photons = generate_photons(&laser, seed).unwrap();
    (laser, detect(&photons, det, seed + 1).unwrap())
}

fn calibrate(laser: &LaserConfig, tags: &TagStream) -> CurveBuild {
    let clock = ideal_clock(tags, laser.period_ps, laser.phase_ps).unwrap();
    let pairs = extract_pairs(tags, &clock).unwrap();
    build_curve(&pairs, &CurveConfig::default()).unwrap()
}

#[test]
fn noiseless_pairs_carry_latency_plus_walk() {
    let det = DetectorConfig::noiseless();
    let (laser, tags) = simulate(&det, 8e6, 20_000_000_000, 21);
    let clock = ideal_clock(&tags, laser.period_ps, 0.0).unwrap();
    let pairs = extract_pairs(&tags, &clock).unwrap();
    assert_eq!(pairs.dropped_same_tick, 0);
    let mut checked = 0;
    for p in &pairs.records {
        assert!((p.t_prime_ps - p.n as f64 * laser.period_ps).abs() < 0.5);
        let expected = det.full_latency_ps() + analytic_walk(p.t_prime_ps, &det).unwrap();
        // rounding of the tag time to 1 ps; rare pairs whose predecessor
        // firing fell below threshold are the exception
        if (p.d_ps - expected).abs() <= 0.5 + 1e-9 {
            checked += 1;
        }
    }
    assert!(checked as f64 >= 0.995 * pairs.records.len() as f64, "{checked} of {}", pairs.records.len());
}

#[test]
fn noiseless_curve_matches_walk_law() {
    let det = DetectorConfig::noiseless();
    let (laser, tags) = simulate(&det, 8e6, 200_000_000_000, 31);
    let built = calibrate(&laser, &tags);
    let curve = &built.curve;
    assert!(curve.bins().len() > 100);
    assert!(built.wrap_risks.is_empty());
    let mut worst: f64 = 0.0;
    for b in curve.bins() {
        let walk = analytic_walk(b.t_prime_ps, &det).unwrap();
        worst = worst.max((b.d_med_ps - walk).abs());
        assert!(b.d_fwhm_ps <= 2.0, "fwhm {} at {}", b.d_fwhm_ps, b.t_prime_ps);
    }
    assert!(worst <= 1.0, "max deviation {worst} ps");
    // non-increasing within 1 ps
    for w in curve.bins().windows(2) {
        assert!(w[1].d_med_ps <= w[0].d_med_ps + 1.0);
    }
    // baseline region averages to zero
    let region: Vec<f64> = curve.bins().iter().filter(|b| b.t_prime_ps >= 500_000.0).map(|b| b.d_med_ps).collect();
    let mean = region.iter().sum::<f64>() / region.len() as f64;
    assert!(mean.abs() <= 1.0);
    assert!((curve.baseline_ps - det.full_latency_ps()).abs() < 1.0);
}

#[test]
fn noisy_curve_converges_on_populated_bins() {
    let det = DetectorConfig { highpass_cuton_hz: 0.0, ..Default::default() };
    let sigma = det.intrinsic_jitter_sigma_ps;
    let (laser, tags) = simulate(&det, 8e6, 400_000_000_000, 41);
    let built = calibrate(&laser, &tags);
    // absolute median delay, so the baseline estimate does not enter
    let z: Vec<f64> = built
        .curve
        .bins()
        .iter()
        .filter(|b| b.n_samples >= 10_000)
        .map(|b| {
            let expected = det.full_latency_ps() + analytic_walk(b.t_prime_ps, &det).unwrap();
            let dev = b.d_med_ps + built.curve.baseline_ps - expected;
            dev / (sigma / (b.n_samples as f64).sqrt())
        })
        .collect();
    assert!(z.len() >= 50, "only {} bins with 10^4 samples", z.len());
    // each bin is an independent draw; ~1.7% exceed 3 sigma/sqrt(N) by chance
    let within = z.iter().filter(|v| v.abs() <= 3.0).count();
    assert!(within as f64 >= 0.95 * z.len() as f64, "{within} of {}", z.len());
    assert!(z.iter().all(|v| v.abs() <= 6.0), "{z:?}");
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    assert!(mean.abs() <= 1.2533 * 3.0 / (z.len() as f64).sqrt(), "mean {mean}");
}

#[test]
fn noisy_curve_steepens_below_100ns() {
    let det = DetectorConfig::default();
    let (laser, tags) = simulate(&det, 1.2e7, 100_000_000_000, 51);
    let curve = calibrate(&laser, &tags).curve;
    let at = |t: f64| tagwalk_core::interpolate_delay(&curve, t).unwrap();
    let rise_50_100 = at(50_000.0) - at(100_000.0);
    let rise_100_150 = at(100_000.0) - at(150_000.0);
    assert!(rise_50_100 > 25.0, "{rise_50_100}");
    assert!(rise_50_100 > 3.0 * rise_100_150, "{rise_50_100} vs {rise_100_150}");
}
