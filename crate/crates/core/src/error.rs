use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in the toolkit.
///
/// The variants fall into three families that the CLI maps onto exit codes:
/// input/validation problems, numerical failures, and I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{}", format_violations(.0))]
    Violations(Vec<crate::types::Violation>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("superphysical transmittance {t} exceeds lossless bound 1 - R_t = {bound}")]
    SuperphysicalTransmittance { t: f64, bound: f64 },

    #[error("at {wavelength_nm} nm: {source}")]
    AtWavelength {
        wavelength_nm: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("coverage error: grid interval [{lo}, {hi}] nm is not covered by the reference ({ref_lo}..{ref_hi} nm)")]
    Coverage {
        lo: f64,
        hi: f64,
        ref_lo: f64,
        ref_hi: f64,
    },

    #[error("degenerate design matrix (condition number {condition:.3e}); pairwise component correlations: {}", format_corr(.correlations))]
    Degenerate {
        condition: f64,
        correlations: Vec<(String, String, f64)>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2: parse/validation, 3: numerical failure, 4: I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degenerate { .. } | Error::Numerical(_) => 3,
            Error::Io { .. } => 4,
            Error::AtWavelength { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

fn format_violations(v: &[crate::types::Violation]) -> String {
    let parts: Vec<String> = v.iter().map(|v| v.to_string()).collect();
    format!("validation failed: {}", parts.join("; "))
}

fn format_corr(c: &[(String, String, f64)]) -> String {
    let parts: Vec<String> = c
        .iter()
        .map(|(a, b, r)| format!("{a}~{b}={r:.6}"))
        .collect();
    parts.join(", ")
}
