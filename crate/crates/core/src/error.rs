use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("integrity error at record {index}: {reason}")]
    Integrity { index: usize, reason: String },
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient statistics: best-populated n = {best_n} has {best_count} samples, {min_samples} required")]
    InsufficientStatistics { best_n: u64, best_count: usize, min_samples: usize },
    #[error("no calibrated bin at or beyond the baseline region (t' >= {baseline_tprime_ps} ps)")]
    NoBaseline { baseline_tprime_ps: f64 },
    #[error("clock unlocked in window {window}: median residual {median_residual_ps:.1} ps")]
    Unlocked { window: usize, median_residual_ps: f64 },
    #[error("degenerate histogram: {0}")]
    Degenerate(String),
    #[error("count rate undefined for fewer than two tags")]
    UndefinedRate,
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn integrity(index: usize, reason: impl Into<String>) -> Self {
        Error::Integrity { index, reason: reason.into() }
    }
}
