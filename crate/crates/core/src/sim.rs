//! Monte Carlo model of an attenuated pulsed laser read out by an SNSPD,
//! amplifier chain and fixed-threshold comparator.
//!
//! After each nanowire firing the bias current recovers as
//! `r(dt) = 1 - exp(-dt / tau_bias)` and the next pulse has amplitude
//! `A = A_max * r`. Pulses rise linearly over `rise_time` to their amplitude,
//! so a comparator at `V_th` fires `rise_time * V_th / A` after the photon;
//! the excess over a fully recovered pulse is the time walk. A single-pole
//! high-pass at the readout cut-on adds an undershoot tail after each pulse,
//! and a pulse whose edge starts on that tail is delayed further.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};

use crate::config::{DetectorConfig, LaserConfig};
use crate::correct::{deadtime_filter_with, DeadTimeMode};
use crate::error::{Error, Result};
use crate::tag::{TagStream, TimeTag};

/// `1 - exp(-dt / tau_bias)`; zero for non-positive `dt`.
pub fn recovered_fraction(dt_ps: f64, det: &DetectorConfig) -> f64 {
    if dt_ps <= 0.0 {
        return 0.0;
    }
    -libm::expm1(-dt_ps / det.tau_bias_ps)
}

pub fn pulse_amplitude_mv(dt_ps: f64, det: &DetectorConfig) -> f64 {
    det.pulse_height_mv * recovered_fraction(dt_ps, det)
}

/// Extra trigger latency of a pulse arriving `dt_ps` after the previous
/// firing, relative to a fully recovered pulse. `None` when the pulse never
/// reaches the threshold.
pub fn analytic_walk(dt_ps: f64, det: &DetectorConfig) -> Option<f64> {
    let amplitude = pulse_amplitude_mv(dt_ps, det);
    if amplitude <= det.threshold_mv {
        return None;
    }
    Some(det.rise_time_ps * det.threshold_mv * (1.0 / amplitude - 1.0 / det.pulse_height_mv))
}

pub fn detection_efficiency(dt_ps: f64, det: &DetectorConfig) -> f64 {
    det.efficiency_max * libm::pow(recovered_fraction(dt_ps, det), det.efficiency_exponent)
}

/// Output of the readout chain `t_ps` after a pulse of `amplitude_mv` began.
///
/// Piecewise closed form of a linear ramp followed by an exponential decay,
/// passed through a single-pole high-pass. With the filter off this is the
/// bare pulse.
pub fn pulse_response_mv(t_ps: f64, amplitude_mv: f64, det: &DetectorConfig) -> f64 {
    if t_ps <= 0.0 {
        return 0.0;
    }
    let rise = det.rise_time_ps;
    let tau = det.tau_rf_ps;
    let Some(h) = det.highpass_tau_ps() else {
        return if t_ps < rise {
            amplitude_mv * t_ps / rise
        } else {
            amplitude_mv * libm::exp(-(t_ps - rise) / tau)
        };
    };
    let ramp_gain = amplitude_mv * h / rise;
    if t_ps < rise {
        return -ramp_gain * libm::expm1(-t_ps / h);
    }
    let at_peak = -ramp_gain * libm::expm1(-rise / h);
    let u = t_ps - rise;
    let decay = if libm::fabs(tau - h) <= 1e-9 * tau {
        -(amplitude_mv / tau) * u * libm::exp(-u / tau)
    } else {
        -amplitude_mv * h / (tau - h) * (libm::exp(-u / tau) - libm::exp(-u / h))
    };
    at_peak * libm::exp(-u / h) + decay
}

/// Time after the start of a pulse during which the comparator stays high.
pub fn holdoff_ps(amplitude_mv: f64, det: &DetectorConfig) -> f64 {
    if amplitude_mv <= det.threshold_mv {
        return 0.0;
    }
    det.rise_time_ps + det.tau_rf_ps * libm::log(amplitude_mv / det.threshold_mv)
}

/// Photon arrivals from the attenuated pulse train, stored as pulse indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonTimes {
    pub laser: LaserConfig,
    pulses: Vec<u64>,
}

impl PhotonTimes {
    pub fn from_pulses(laser: LaserConfig, mut pulses: Vec<u64>) -> Self {
        pulses.sort_unstable();
        pulses.dedup();
        PhotonTimes { laser, pulses }
    }

    pub fn pulses(&self) -> &[u64] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Exact (unrounded) arrival time of pulse `k`.
    pub fn pulse_time_ps(&self, k: u64) -> f64 {
        self.laser.phase_ps + k as f64 * self.laser.period_ps
    }

    /// Arrival times rounded to integer picoseconds.
    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        self.pulses.iter().map(|&k| libm::round(self.pulse_time_ps(k)) as i64)
    }
}

/// Draws which laser pulses carry a photon. Each pulse independently holds
/// one photon with probability `1 - exp(-mu)`; multi-photon pulses are
/// folded into single photons.
pub fn generate_photons(laser: &LaserConfig, seed: u64) -> Result<PhotonTimes> {
    laser.validate()?;
    let n_pulses = laser.pulse_count();
    let gap = Geometric::new(laser.photon_probability())
        .map_err(|e| Error::config("mean_photon_number", format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let expected = (n_pulses as f64 * laser.photon_probability()) as usize;
    let mut pulses = Vec::with_capacity(expected + expected / 16 + 16);
    let mut k = 0u64;
    loop {
        k = k.saturating_add(gap.sample(&mut rng));
        if k >= n_pulses {
            break;
        }
        pulses.push(k);
        k += 1;
    }
    Ok(PhotonTimes { laser: *laser, pulses })
}

/// What happened to an absorbed photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Emitted { time_ps: i64 },
    /// The nanowire fired but the pulse never crossed the comparator level.
    BelowThreshold,
}

/// One nanowire firing, kept for oracle checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Firing {
    pub photon_time_ps: f64,
    /// Time since the previous firing; `None` for the first one.
    pub since_previous_ps: Option<f64>,
    pub amplitude_mv: f64,
    /// Baseline voltage left by earlier pulses (never positive).
    pub undershoot_mv: f64,
    pub outcome: Outcome,
}

struct Detector<'a> {
    det: &'a DetectorConfig,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    last_firing: Option<f64>,
    comparator_busy_until: f64,
    recent: VecDeque<(f64, f64)>,
    horizon_ps: f64,
}

impl<'a> Detector<'a> {
    fn new(det: &'a DetectorConfig, seed: u64) -> Result<Self> {
        det.validate()?;
        let noise = if det.intrinsic_jitter_sigma_ps > 0.0 {
            Some(
                Normal::new(0.0, det.intrinsic_jitter_sigma_ps)
                    .map_err(|e| Error::config("intrinsic_jitter_sigma_ps", format!("{e}")))?,
            )
        } else {
            None
        };
        let slowest = det.highpass_tau_ps().map_or(det.tau_rf_ps, |h| h.max(det.tau_rf_ps));
        Ok(Detector {
            det,
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise,
            last_firing: None,
            comparator_busy_until: f64::NEG_INFINITY,
            recent: VecDeque::new(),
            horizon_ps: det.rise_time_ps + 40.0 * slowest,
        })
    }

    /// Voltage left on the line at `t` by earlier pulses, clipped to the
    /// negative (undershoot) part.
    fn undershoot_at(&mut self, t: f64) -> f64 {
        if self.det.highpass_tau_ps().is_none() {
            return 0.0;
        }
        while let Some(&(start, _)) = self.recent.front() {
            if t - start > self.horizon_ps {
                self.recent.pop_front();
            } else {
                break;
            }
        }
        let v: f64 = self.recent.iter().map(|&(start, a)| pulse_response_mv(t - start, a, self.det)).sum();
        v.min(0.0)
    }

    fn offer(&mut self, t: f64) -> Option<Firing> {
        let det = self.det;
        if det.holdoff && t < self.comparator_busy_until {
            return None;
        }
        let since = self.last_firing.map(|last| t - last);
        let recovered = since.map_or(1.0, |dt| recovered_fraction(dt, det));
        let efficiency = det.efficiency_max * libm::pow(recovered, det.efficiency_exponent);
        if self.rng.random::<f64>() >= efficiency {
            return None;
        }
        let amplitude = det.pulse_height_mv * recovered;
        let undershoot = self.undershoot_at(t);
        self.last_firing = Some(t);
        if det.highpass_tau_ps().is_some() {
            self.recent.push_back((t, amplitude));
        }
        let outcome = if amplitude + undershoot <= det.threshold_mv || amplitude <= det.threshold_mv {
            Outcome::BelowThreshold
        } else {
            self.comparator_busy_until = t + holdoff_ps(amplitude, det);
            let latency = det.rise_time_ps * (det.threshold_mv - undershoot) / amplitude;
            let jitter = match &self.noise {
                Some(n) => n.sample(&mut self.rng),
                None => 0.0,
            };
            let time = libm::round(t + latency + jitter).max(0.0) as i64;
            Outcome::Emitted { time_ps: time }
        };
        Some(Firing { photon_time_ps: t, since_previous_ps: since, amplitude_mv: amplitude, undershoot_mv: undershoot, outcome })
    }
}

/// Runs photons through the detector chain and returns the sorted tags.
pub fn detect(photons: &PhotonTimes, det: &DetectorConfig, seed: u64) -> Result<TagStream> {
    Ok(run_detector(photons, det, seed, false)?.0)
}

/// Like [`detect`], also returning every nanowire firing.
pub fn detect_traced(photons: &PhotonTimes, det: &DetectorConfig, seed: u64) -> Result<(TagStream, Vec<Firing>)> {
    run_detector(photons, det, seed, true)
}

fn run_detector(photons: &PhotonTimes, det: &DetectorConfig, seed: u64, trace: bool) -> Result<(TagStream, Vec<Firing>)> {
    let mut detector = Detector::new(det, seed)?;
    let mut tags = Vec::with_capacity(photons.len());
    let mut firings = Vec::new();
    for &k in photons.pulses() {
        let Some(firing) = detector.offer(photons.pulse_time_ps(k)) else {
            continue;
        };
        if let Outcome::Emitted { time_ps } = firing.outcome {
            tags.push(TimeTag::new(time_ps, 0).with_flags(TimeTag::SYNTHETIC));
        }
        if trace {
            firings.push(firing);
        }
    }
    // walk can reorder events that are closer together than the walk spread
    if tags.windows(2).any(|w| w[0].time_ps > w[1].time_ps) {
        tags.sort_by(TimeTag::stream_cmp);
    }
    Ok((TagStream::from_parts_unchecked(1, tags), firings))
}

/// Sampled readout-chain voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformTrace {
    pub sample_period_ps: f64,
    pub epoch_ps: f64,
    pub samples: Vec<f64>,
}

impl WaveformTrace {
    pub fn time_of(&self, i: usize) -> f64 {
        self.epoch_ps + i as f64 * self.sample_period_ps
    }

    /// Trapezoidal integral in mV*ps.
    pub fn integral_mv_ps(&self) -> f64 {
        let s = &self.samples;
        if s.len() < 2 {
            return 0.0;
        }
        let inner: f64 = s[1..s.len() - 1].iter().sum();
        self.sample_period_ps * (inner + 0.5 * (s[0] + s[s.len() - 1]))
    }

    pub fn min_mv(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Superposes the readout response of each `(start_ps, amplitude_mv)` pulse
/// over `[start_ps, end_ps)`.
pub fn waveform_trace(
    pulses: &[(f64, f64)],
    det: &DetectorConfig,
    start_ps: f64,
    end_ps: f64,
    sample_period_ps: f64,
) -> Result<WaveformTrace> {
    if !(sample_period_ps.is_finite() && sample_period_ps > 0.0) {
        return Err(Error::config("sample_period_ps", format!("must be positive, got {sample_period_ps}")));
    }
    if pulses.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(Error::integrity(0, "pulses are not ordered by start time"));
    }
    let n = if end_ps > start_ps { libm::ceil((end_ps - start_ps) / sample_period_ps) as usize } else { 0 };
    let slowest = det.highpass_tau_ps().map_or(det.tau_rf_ps, |h| h.max(det.tau_rf_ps));
    let horizon = det.rise_time_ps + 60.0 * slowest;
    let mut samples = Vec::with_capacity(n);
    let mut first_live = 0;
    for i in 0..n {
        let t = start_ps + i as f64 * sample_period_ps;
        while first_live < pulses.len() && t - pulses[first_live].0 > horizon {
            first_live += 1;
        }
        let v = pulses[first_live..]
            .iter()
            .take_while(|p| p.0 < t)
            .map(|&(s, a)| pulse_response_mv(t - s, a, det))
            .sum();
        samples.push(v);
    }
    Ok(WaveformTrace { sample_period_ps, epoch_ps: start_ps, samples })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McrPoint {
    pub incident_rate_hz: f64,
    pub detected_rate_hz: f64,
    /// Rate surviving the software dead time, when one was applied.
    pub usable_rate_hz: Option<f64>,
    /// Detection efficiency relative to the lowest-rate point.
    pub normalized_efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThreeDbPoint {
    pub incident_rate_hz: f64,
    pub detected_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McrSweep {
    pub points: Vec<McrPoint>,
    /// First crossing of normalized efficiency 0.5, linearly interpolated.
    pub three_db: Option<ThreeDbPoint>,
}

/// Normalized efficiency versus incident photon rate.
pub fn mcr_sweep(template: &LaserConfig, det: &DetectorConfig, photon_rates_hz: &[f64], seed: u64) -> Result<McrSweep> {
    sweep(template, det, photon_rates_hz, seed, None)
}

/// [`mcr_sweep`] with the detected stream also passed through a software
/// dead time, filling `usable_rate_hz`.
pub fn mcr_sweep_with_deadtime(
    template: &LaserConfig,
    det: &DetectorConfig,
    photon_rates_hz: &[f64],
    seed: u64,
    deadtime_ps: i64,
    mode: DeadTimeMode,
) -> Result<McrSweep> {
    sweep(template, det, photon_rates_hz, seed, Some((deadtime_ps, mode)))
}

fn sweep(
    template: &LaserConfig,
    det: &DetectorConfig,
    rates: &[f64],
    seed: u64,
    deadtime: Option<(i64, DeadTimeMode)>,
) -> Result<McrSweep> {
    if rates.len() < 2 {
        return Err(Error::config("photon_rates", "at least two rates are required"));
    }
    if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) || rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("photon_rates", "rates must be positive and strictly ascending"));
    }
    det.validate()?;
    let duration_s = template.duration_ps as f64 * 1e-12;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Vec::with_capacity(rates.len());
    for &rate in rates {
        let laser = template.with_photon_rate(rate)?;
        let photons = generate_photons(&laser, seeds.random())?;
        let tags = detect(&photons, det, seeds.random())?;
        let usable = match deadtime {
            Some((dead, mode)) => Some(deadtime_filter_with(&tags, dead, mode)?.len() as f64 / duration_s),
            None => None,
        };
        raw.push((photons.len() as f64 / duration_s, tags.len() as f64 / duration_s, usable));
    }
    let efficiency = |(incident, detected, _): (f64, f64, Option<f64>)| if incident > 0.0 { detected / incident } else { 0.0 };
    let reference = efficiency(raw[0]);
    if reference <= 0.0 {
        return Err(Error::Domain("no detections at the lowest rate; increase duration_ps".into()));
    }
    let points: Vec<McrPoint> = raw
        .iter()
        .map(|&p| McrPoint {
            incident_rate_hz: p.0,
            detected_rate_hz: p.1,
            usable_rate_hz: p.2,
            normalized_efficiency: efficiency(p) / reference,
        })
        .collect();
    let three_db = points.windows(2).find(|w| w[1].normalized_efficiency <= 0.5).map(|w| {
        let (a, b) = (w[0], w[1]);
        let f = (a.normalized_efficiency - 0.5) / (a.normalized_efficiency - b.normalized_efficiency);
        ThreeDbPoint {
            incident_rate_hz: a.incident_rate_hz + f * (b.incident_rate_hz - a.incident_rate_hz),
            detected_rate_hz: a.detected_rate_hz + f * (b.detected_rate_hz - a.detected_rate_hz),
        }
    });
    Ok(McrSweep { points, three_db })
}
