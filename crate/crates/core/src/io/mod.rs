//! Text formats: spectrum and map files, correlation tables, configuration,
//! JSON reports and SVG plots.
//!
//! Every writer emits numbers in Rust's shortest round-trip decimal form, so
//! parsing an emitted file reproduces the in-memory value bit for bit.

mod config;
mod correlation_file;
mod map_file;
pub mod plot;
mod report;
mod spectrum_file;

use std::path::Path;

pub use config::{parse_pair, KeyValues};
pub use correlation_file::{format_correlation, parse_correlation, parse_correlation_str, write_correlation, CORRELATION_HEADER};
pub use map_file::{format_map, parse_map, parse_map_str, write_map};
pub use plot::{emit_plot, render_svg, AxisScale, Plot, Series, SeriesStyle};
pub use report::{read_report, write_report, InputRecord, ReportDocument, SCHEMA_VERSION};
pub use spectrum_file::{format_spectrum, parse_spectrum, parse_spectrum_str, write_spectrum, FileKind, SpectrumFile};

use crate::error::{Error, Result};

/// Line 0 denotes a whole-file problem.
fn parse_err(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        message: message.into(),
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|_| parse_err(&path.display().to_string(), 0, "file is not valid UTF-8"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
