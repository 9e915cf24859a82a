//! Source and detector parameters.
//!
//! Field names carry their unit as a suffix; they double as the keys of the
//! simulator's JSON configuration file.

use alloc::format;

use crate::error::{Error, Result};

/// Attenuated pulsed laser.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LaserConfig {
    /// Repetition period.
    pub period_ps: f64,
    /// Mean photon number per pulse after attenuation.
    pub mean_photon_number: f64,
    /// Length of the simulated acquisition.
    pub duration_ps: i64,
    /// Arrival time of pulse 0.
    pub phase_ps: f64,
}

impl Default for LaserConfig {
    fn default() -> Self {
        LaserConfig {
            // 537.5 MHz
            period_ps: 1e12 / 537.5e6,
            mean_photon_number: 0.01,
            duration_ps: 100_000_000_000,
            phase_ps: 0.0,
        }
    }
}

impl LaserConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_ps.is_finite() && self.period_ps > 0.0) {
            return Err(Error::config("period_ps", format!("must be positive, got {}", self.period_ps)));
        }
        if !(self.mean_photon_number > 0.0 && self.mean_photon_number < 1.0) {
            return Err(Error::config(
                "mean_photon_number",
                format!("must lie in (0, 1), got {}", self.mean_photon_number),
            ));
        }
        if self.duration_ps <= 0 {
            return Err(Error::config("duration_ps", format!("must be positive, got {}", self.duration_ps)));
        }
        if !(self.phase_ps.is_finite() && self.phase_ps >= 0.0) {
            return Err(Error::config("phase_ps", format!("must be non-negative, got {}", self.phase_ps)));
        }
        Ok(())
    }

    pub fn pulse_rate_hz(&self) -> f64 {
        1e12 / self.period_ps
    }

    /// Probability that a pulse carries a photon (at most one is kept).
    pub fn photon_probability(&self) -> f64 {
        -libm::expm1(-self.mean_photon_number)
    }

    pub fn photon_rate_hz(&self) -> f64 {
        self.photon_probability() * self.pulse_rate_hz()
    }

    /// Number of laser pulses inside the acquisition window.
    pub fn pulse_count(&self) -> u64 {
        let n = libm::ceil(self.duration_ps as f64 / self.period_ps);
        if n <= 0.0 {
            0
        } else {
            n as u64
        }
    }

    /// Same laser, attenuated so that the incident photon rate is `rate_hz`.
    pub fn with_photon_rate(&self, rate_hz: f64) -> Result<Self> {
        let p = rate_hz / self.pulse_rate_hz();
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::config(
                "photon_rate",
                format!("{rate_hz} Hz is not reachable with a {} ps period", self.period_ps),
            ));
        }
        let laser = LaserConfig { mean_photon_number: -libm::log1p(-p), ..*self };
        laser.validate()?;
        Ok(laser)
    }
}

/// Nanowire, amplifier chain and comparator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DetectorConfig {
    /// Bias-current recovery time constant.
    pub tau_bias_ps: f64,
    /// Decay constant of the RF pulse.
    pub tau_rf_ps: f64,
    /// Duration of the linear rising edge from zero to full amplitude.
    pub rise_time_ps: f64,
    /// Amplitude of a pulse from a fully recovered nanowire.
    pub pulse_height_mv: f64,
    /// Fixed comparator level.
    pub threshold_mv: f64,
    /// Low-frequency cut-on of the readout chain; 0 disables undershoot.
    pub highpass_cuton_hz: f64,
    /// Gaussian timing noise added to every emitted tag.
    pub intrinsic_jitter_sigma_ps: f64,
    pub efficiency_max: f64,
    /// Exponent of the efficiency law `efficiency_max * r^exponent`.
    pub efficiency_exponent: f64,
    /// Ignore photons while the previous pulse is still above threshold.
    pub holdoff: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            tau_bias_ps: 40_000.0,
            tau_rf_ps: 5_000.0,
            rise_time_ps: 300.0,
            pulse_height_mv: 125.0,
            threshold_mv: 50.0,
            highpass_cuton_hz: 80e6,
            intrinsic_jitter_sigma_ps: 21.0,
            efficiency_max: 0.9,
            efficiency_exponent: 4.0,
            holdoff: true,
        }
    }
}

impl DetectorConfig {
    /// Defaults with jitter and undershoot switched off. Detection then
    /// follows the closed-form walk law exactly.
    pub fn noiseless() -> Self {
        DetectorConfig { intrinsic_jitter_sigma_ps: 0.0, highpass_cuton_hz: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        }
        fn non_negative(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be non-negative, got {v}")))
            }
        }
        positive("tau_bias_ps", self.tau_bias_ps)?;
        positive("tau_rf_ps", self.tau_rf_ps)?;
        positive("rise_time_ps", self.rise_time_ps)?;
        positive("pulse_height_mv", self.pulse_height_mv)?;
        positive("threshold_mv", self.threshold_mv)?;
        non_negative("highpass_cuton_hz", self.highpass_cuton_hz)?;
        non_negative("intrinsic_jitter_sigma_ps", self.intrinsic_jitter_sigma_ps)?;
        positive("efficiency_exponent", self.efficiency_exponent)?;
        if !(self.efficiency_max > 0.0 && self.efficiency_max <= 1.0) {
            return Err(Error::config("efficiency_max", format!("must lie in (0, 1], got {}", self.efficiency_max)));
        }
        if self.threshold_mv >= self.pulse_height_mv {
            return Err(Error::config(
                "threshold_mv",
                format!(
                    "threshold {} mV must be below pulse height {} mV",
                    self.threshold_mv, self.pulse_height_mv
                ),
            ));
        }
        Ok(())
    }

    /// Trigger latency of a fully recovered pulse.
    pub fn full_latency_ps(&self) -> f64 {
        self.rise_time_ps * self.threshold_mv / self.pulse_height_mv
    }

    /// Time constant of the single-pole high-pass, if any.
    pub fn highpass_tau_ps(&self) -> Option<f64> {
        (self.highpass_cuton_hz > 0.0).then(|| 1e12 / (2.0 * core::f64::consts::PI * self.highpass_cuton_hz))
    }

    /// Smallest inter-detection time that still produces a trigger.
    pub fn min_trigger_dt_ps(&self) -> f64 {
        -self.tau_bias_ps * libm::log1p(-self.threshold_mv / self.pulse_height_mv)
    }
}
