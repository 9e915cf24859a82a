use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tagwalk::config::read_config;
use tagwalk::curve::{read_curve, write_curve};
use tagwalk::report::{histogram_csv, stream_widths_json, sweep_csv, waveform_csv, width_report_json, write_text};
use tagwalk::tags::{read_tags, write_tags};
use tagwalk::{Error, Result};
use tagwalk_core::metrics::stream_widths;
use tagwalk_core::sim::{detect_traced, mcr_sweep, mcr_sweep_with_deadtime, Outcome};
use tagwalk_core::{
    build_curve, build_irf, compare_widths, correct_stream, count_rate, deadtime_filter_with, detect, extract_pairs,
    generate_photons, waveform_trace, ClockSource, CurveConfig, DeadTimeMode, PllGains,
};

const LASER_PERIOD_PS: f64 = 1860.465;

#[derive(Parser)]
#[command(name = "tagwalk", version, about = "Time-walk calibration and correction for single-photon time tags")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a detector and write a TTG1 tag file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Overrides the mean photon number to reach this incident rate.
        #[arg(long)]
        photon_rate_cps: Option<f64>,
        #[arg(long)]
        duration_ps: Option<i64>,
    },
    /// Build a calibration curve from a tag file.
    Calibrate {
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        clock: ClockArgs,
        #[arg(long, default_value_t = 1.0)]
        bin_width_ps: f64,
        #[arg(long, default_value_t = 100)]
        min_samples: usize,
        #[arg(long, default_value_t = 500_000.0)]
        baseline_tprime_ps: f64,
        #[arg(long)]
        max_tprime_ps: Option<f64>,
    },
    /// Subtract the calibrated delay from every tag.
    Correct {
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a software dead time.
    Filter {
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        deadtime_ps: i64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::NonParalyzable)]
        deadtime_mode: Mode,
    },
    /// IRF histograms and widths, optionally before/after.
    Analyze {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: Option<PathBuf>,
        #[command(flatten)]
        clock: ClockArgs,
        #[arg(long, default_value_t = 1.0)]
        bin_width_ps: f64,
        /// Directory for the histogram CSVs and widths.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Detected and usable rate versus incident rate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Comma-separated incident photon rates.
        #[arg(long, value_delimiter = ',', required = true)]
        rates_cps: Vec<f64>,
        #[arg(long)]
        deadtime_ps: Option<i64>,
        #[arg(long, value_enum, default_value_t = Mode::NonParalyzable)]
        deadtime_mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Readout voltage over a stretch of a simulated run.
    Waveform {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        photon_rate_cps: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        start_ps: f64,
        #[arg(long, default_value_t = 1_000_000.0)]
        end_ps: f64,
        #[arg(long, default_value_t = 10.0)]
        sample_period_ps: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ClockArgs {
    #[arg(long, default_value_t = LASER_PERIOD_PS)]
    nominal_period_ps: f64,
    #[arg(long, default_value_t = PllGains::default().kp)]
    pll_kp: f64,
    #[arg(long, default_value_t = PllGains::default().ki)]
    pll_ki: f64,
    /// Skip the PLL and use a fixed clock at the nominal period with this phase.
    #[arg(long)]
    ideal_clock_phase_ps: Option<f64>,
}

impl ClockArgs {
    fn source(&self) -> ClockSource {
        match self.ideal_clock_phase_ps {
            Some(phase_ps) => ClockSource::Ideal { period_ps: self.nominal_period_ps, phase_ps },
            None => ClockSource::Pll {
                nominal_period_ps: self.nominal_period_ps,
                gains: PllGains { kp: self.pll_kp, ki: self.pll_ki },
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    NonParalyzable,
    Paralyzable,
}

impl From<Mode> for DeadTimeMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::NonParalyzable => DeadTimeMode::NonParalyzable,
            Mode::Paralyzable => DeadTimeMode::Paralyzable,
        }
    }
}

fn laser_for(config: &Path, rate: Option<f64>, duration: Option<i64>) -> Result<tagwalk::config::SimConfig> {
    let mut cfg = read_config(config)?;
    if let Some(d) = duration {
        cfg.laser.duration_ps = d;
    }
    if let Some(r) = rate {
        cfg.laser = cfg.laser.with_photon_rate(r)?;
    }
    cfg.laser.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed, photon_rate_cps, duration_ps } => {
            let cfg = laser_for(&config, photon_rate_cps, duration_ps)?;
            let photons = generate_photons(&cfg.laser, seed)?;
            let tags = detect(&photons, &cfg.detector, seed.wrapping_add(1))?;
            write_tags(&tags, &out)?;
            let duration_s = cfg.laser.duration_ps as f64 * 1e-12;
            println!("photons generated: {}", photons.len());
            println!("tags emitted: {}", tags.len());
            println!("detected rate: {:.6e} cps", tags.len() as f64 / duration_s);
        }
        Command::Calibrate { tags, out, clock, bin_width_ps, min_samples, baseline_tprime_ps, max_tprime_ps } => {
            let stream = read_tags(&tags)?;
            let model = clock.source().recover(&stream)?;
            let pairs = extract_pairs(&stream, &model)?;
            let cfg = CurveConfig { bin_width_ps, min_samples, baseline_tprime_ps, max_tprime_ps };
            let built = build_curve(&pairs, &cfg)?;
            write_curve(&built.curve, &out)?;
            println!("pairs: {}", pairs.records.len());
            println!("recovered period: {:.6} ps", model.period_ps);
            println!("bins: {}", built.curve.bins().len());
            println!("baseline: {:.3} ps", built.curve.baseline_ps);
            for w in &built.wrap_risks {
                eprintln!("warning: n = {} has {:.2}% of its delays near the window edge", w.n, 100.0 * w.edge_fraction);
            }
        }
        Command::Correct { tags, curve, out } => {
            let stream = read_tags(&tags)?;
            let curve = read_curve(&curve)?;
            let corrected = correct_stream(&stream, &curve)?;
            write_tags(&corrected.stream, &out)?;
            println!("tags corrected: {}", corrected.stream.iter().filter(|t| t.is_corrected()).count());
            println!("reordered: {}", corrected.reordered);
        }
        Command::Filter { tags, deadtime_ps, out, deadtime_mode } => {
            let stream = read_tags(&tags)?;
            let kept = deadtime_filter_with(&stream, deadtime_ps, deadtime_mode.into())?;
            write_tags(&kept, &out)?;
            println!("tags in: {}", stream.len());
            println!("tags kept: {}", kept.len());
            if let Ok(rate) = count_rate(&kept) {
                println!("usable rate: {rate:.6e} cps");
            }
        }
        Command::Analyze { before, after, clock, bin_width_ps, out_dir } => {
            fs::create_dir_all(&out_dir).map_err(|e| Error::Io { path: out_dir.clone(), source: e })?;
            let source = clock.source();
            let before_stream = read_tags(&before)?;
            match after {
                Some(after) => {
                    let after_stream = read_tags(&after)?;
                    let report = compare_widths(&before_stream, &after_stream, &source, bin_width_ps)?;
                    write_text(&histogram_csv(&report.before_irf), out_dir.join("before_hist.csv"))?;
                    write_text(&histogram_csv(&report.after_irf), out_dir.join("after_hist.csv"))?;
                    let json = width_report_json(&report);
                    write_text(&json, out_dir.join("widths.json"))?;
                    print!("{json}");
                }
                None => {
                    let irf = build_irf(&before_stream, &source.recover(&before_stream)?, bin_width_ps)?;
                    let widths = stream_widths(&before_stream, &irf)?;
                    write_text(&histogram_csv(&irf), out_dir.join("before_hist.csv"))?;
                    let json = stream_widths_json(&widths);
                    write_text(&json, out_dir.join("widths.json"))?;
                    print!("{json}");
                }
            }
        }
        Command::Sweep { config, seed, rates_cps, deadtime_ps, deadtime_mode, out } => {
            let cfg = read_config(&config)?;
            let sweep = match deadtime_ps {
                Some(d) => mcr_sweep_with_deadtime(&cfg.laser, &cfg.detector, &rates_cps, seed, d, deadtime_mode.into())?,
                None => mcr_sweep(&cfg.laser, &cfg.detector, &rates_cps, seed)?,
            };
            write_text(&sweep_csv(&sweep), &out)?;
            match sweep.three_db {
                Some(p) => println!(
                    "3 dB point: incident {:.6e} cps, detected {:.6e} cps",
                    p.incident_rate_hz, p.detected_rate_hz
                ),
                None => println!("3 dB point: not reached"),
            }
        }
        Command::Waveform { config, seed, photon_rate_cps, start_ps, end_ps, sample_period_ps, out } => {
            let cfg = laser_for(&config, photon_rate_cps, Some(end_ps.ceil() as i64 + 1))?;
            let photons = generate_photons(&cfg.laser, seed)?;
            let (_, firings) = detect_traced(&photons, &cfg.detector, seed.wrapping_add(1))?;
            let pulses: Vec<(f64, f64)> = firings
                .iter()
                .filter(|f| f.photon_time_ps < end_ps)
                .map(|f| (f.photon_time_ps, f.amplitude_mv))
                .collect();
            let trace = waveform_trace(&pulses, &cfg.detector, start_ps, end_ps, sample_period_ps)?;
            write_text(&waveform_csv(&trace), &out)?;
            let emitted = firings.iter().filter(|f| matches!(f.outcome, Outcome::Emitted { .. })).count();
            println!("firings: {} ({emitted} above threshold)", pulses.len());
            println!("minimum voltage: {:.3} mV", trace.min_mv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
