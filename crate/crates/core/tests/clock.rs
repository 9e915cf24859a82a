use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};
use tagwalk_core::clock::nearest_tick;
use tagwalk_core::{ideal_clock, pll_recover, residuals, Error, PllGains, TagStream};

/// Tags on a jittered pulse train with on average `1 / p` ticks between tags.
fn jittered_train(period: f64, phase: f64, sigma: f64, p: f64, count: usize, seed: u64) -> TagStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skip = Geometric::new(p).unwrap();
    let jitter = Normal::new(0.0, sigma).unwrap();
    let mut k = 0u64;
    let mut times = Vec::with_capacity(count);
    for _ in 0..count {
        k += 1 + skip.sample(&mut rng);
        times.push((phase + k as f64 * period + jitter.sample(&mut rng)).round() as i64);
    }
    times.sort_unstable();
    TagStream::from_times(&times).unwrap()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn pll_tracks_35_ppm_offset() {
    let true_period = 1860.465;
    let tags = jittered_train(true_period, 300.0, 10.0, 0.1, 200_000, 5);
    let clock = pll_recover(&tags, 1860.4, PllGains::default()).unwrap();
    assert!((clock.period_ps - true_period).abs() < 0.01, "period {}", clock.period_ps);
    let settled = &clock.residuals()[clock.len() / 5..];
    let (mean, std) = mean_std(settled);
    assert!(mean.abs() < 1.0, "mean {mean}");
    assert!((std - 10.0).abs() <= 1.0, "std {std}");
    // tick indices follow the pulse train
    let ticks = clock.ticks();
    assert!(ticks.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn ideal_clock_matches_generating_train() {
    let tags = jittered_train(1860.465, 250.0, 21.0, 0.05, 100_000, 7);
    let clock = ideal_clock(&tags, 1860.465, 250.0).unwrap();
    let (mean, std) = mean_std(clock.residuals());
    assert!(mean.abs() < 0.3);
    assert!((std - 21.0).abs() < 0.5, "{std}");
}

#[test]
fn pll_residuals_invariant_under_time_shift() {
    let tags = jittered_train(1860.465, 0.0, 10.0, 0.1, 20_000, 8);
    let shift = 123_456_789;
    let shifted = TagStream::from_times(&tags.times().map(|t| t + shift).collect::<Vec<_>>()).unwrap();
    let a = pll_recover(&tags, 1860.465, PllGains::default()).unwrap();
    let b = pll_recover(&shifted, 1860.465, PllGains::default()).unwrap();
    assert_eq!(a.ticks(), b.ticks());
    for (x, y) in a.residuals().iter().zip(b.residuals()) {
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn residual_triples_follow_clock() {
    let tags = jittered_train(1000.0, 0.0, 5.0, 0.5, 100, 9);
    let clock = ideal_clock(&tags, 1000.0, 0.0).unwrap();
    let r = residuals(&tags, &clock).unwrap();
    assert_eq!(r.len(), tags.len());
    for (i, res) in r.iter().enumerate() {
        assert_eq!(res.index, i);
        let t = tags.tags()[i].time_ps as f64;
        assert!((t - (res.tick as f64 * 1000.0 + res.delay_ps)).abs() < 1e-9);
    }
    let short = TagStream::from_times(&[1, 2]).unwrap();
    assert!(matches!(residuals(&short, &clock), Err(Error::Integrity { .. })));
}

proptest! {
    #[test]
    fn nearest_tick_window(offset in -1e9f64..1e9, period in 100.0f64..5000.0) {
        let (n, d) = nearest_tick(offset, period);
        prop_assert!(d > -period / 2.0 - 1e-6 && d <= period / 2.0 + 1e-6);
        prop_assert!((n as f64 * period + d - offset).abs() < 1e-6 * offset.abs().max(1.0));
    }

    #[test]
    fn ideal_residuals_in_window(seed in any::<u64>(), phase in -5000.0f64..5000.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut times: Vec<i64> = (0..200).map(|_| rng.random_range(0..10_000_000)).collect();
        times.sort_unstable();
        let tags = TagStream::from_times(&times).unwrap();
        let clock = ideal_clock(&tags, 1860.465, phase).unwrap();
        for &d in clock.residuals() {
            prop_assert!(d > -930.2325 - 1e-6 && d <= 930.2325 + 1e-6);
        }
    }

    #[test]
    fn ideal_residuals_shift_with_phase(shift in -900.0f64..900.0) {
        let tags = jittered_train(1860.465, 0.0, 3.0, 0.2, 500, 10);
        let a = ideal_clock(&tags, 1860.465, 0.0).unwrap();
        let b = ideal_clock(&tags, 1860.465, shift).unwrap();
        for (x, y) in a.residuals().iter().zip(b.residuals()) {
            let diff = x - y - shift;
            let wrapped = diff - (diff / 1860.465).round() * 1860.465;
            prop_assert!(wrapped.abs() < 1e-6);
        }
    }
}
