//! Time-walk calibration and correction for single-photon detector time tags.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure function
//! of its inputs and an explicit seed; file handling and the command-line
//! front end live in the `tagwalk` crate.
//!
//! Pipeline, in the order data flows through it:
//!
//! * [`sim`] generates an attenuated pulse train and runs it through a
//!   detector model with bias-current recovery, amplifier undershoot and a
//!   fixed-threshold comparator.
//! * [`clock`] recovers the laser clock from the tags (software PLL, or an
//!   ideal clock when the true period and phase are known).
//! * [`calib`] pairs adjacent events, histograms the delay of the second event
//!   for every pair spacing and builds the median-delay lookup curve.
//! * [`correct`] subtracts the interpolated delay from each tag, streaming, and
//!   implements the software dead-time filter.
//! * [`metrics`] builds instrument response histograms and width statistics.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod calib;
pub mod clock;
pub mod config;
mod error;
pub mod format;
pub mod histogram;
pub mod metrics;
pub mod correct;
pub mod sim;
pub mod tag;

pub use calib::{build_curve, extract_pairs, CalibrationCurve, CurveBin, CurveConfig, PairRecord, Pairs};
pub use clock::{ideal_clock, pll_recover, residuals, ClockModel, ClockSource, PllGains, Residual};
pub use config::{DetectorConfig, LaserConfig};
pub use correct::{
    correct_stream, deadtime_filter, deadtime_filter_with, interpolate_delay, DeadTimeMode, Predecessor,
    StreamCorrector,
};
pub use error::{Error, Result};
pub use histogram::{width_at_fraction, DelayHistogram, WidthMetrics};
pub use metrics::{build_irf, compare_widths, count_rate, WidthReport};
pub use sim::{analytic_walk, detect, generate_photons, mcr_sweep, mcr_sweep_with_deadtime, recovered_fraction, waveform_trace, PhotonTimes};
pub use tag::{TagStream, TimeTag};
