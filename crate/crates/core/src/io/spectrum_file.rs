use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{parse_err, read_text, write_text};
use crate::error::{Error, Result};
use crate::types::{SampleGeometry, Spectrum, SpectrumKind};

/// Value column declared by `# kind:`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Transmittance,
    /// Percent in (0, 100], divided by 100 on parse.
    TransmittancePercent,
    AbsorptionPerCm,
}

impl FileKind {
    pub fn directive(&self) -> &'static str {
        match self {
            FileKind::Transmittance => "transmittance",
            FileKind::TransmittancePercent => "transmittance_percent",
            FileKind::AbsorptionPerCm => "absorption_cm-1",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "transmittance" => Some(FileKind::Transmittance),
            "transmittance_percent" => Some(FileKind::TransmittancePercent),
            "absorption_cm-1" => Some(FileKind::AbsorptionPerCm),
            _ => None,
        }
    }

    pub fn spectrum_kind(&self) -> SpectrumKind {
        match self {
            FileKind::Transmittance | FileKind::TransmittancePercent => SpectrumKind::Transmittance,
            FileKind::AbsorptionPerCm => SpectrumKind::AbsorptionCoefficient,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFile {
    /// Normalized: transmittance as a fraction.
    pub spectrum: Spectrum,
    pub geometry: Option<SampleGeometry>,
    pub kind: FileKind,
}

impl SpectrumFile {
    /// Geometry from the header, required for transmittance files.
    pub fn require_geometry(&self) -> Result<SampleGeometry> {
        self.geometry
            .ok_or_else(|| Error::invalid("spectrum file has no `# thickness_um:` directive"))
    }
}

pub fn parse_spectrum(path: impl AsRef<Path>) -> Result<SpectrumFile> {
    let path = path.as_ref();
    parse_spectrum_str(&read_text(path)?, &path.display().to_string())
}

/// Parses spectrum text; `origin` names the source in error messages.
pub fn parse_spectrum_str(text: &str, origin: &str) -> Result<SpectrumFile> {
    let mut kind: Option<FileKind> = None;
    let mut thickness: Option<(f64, usize)> = None;
    let (mut ws, mut vs, mut lines) = (Vec::new(), Vec::new(), Vec::new());

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let Some((key, value)) = comment.split_once(':') else { continue };
            let value = value.trim();
            match key.trim() {
                "kind" => {
                    if kind.is_some() {
                        return Err(parse_err(origin, line_no, "duplicate `kind` directive"));
                    }
                    kind = Some(FileKind::parse(value).ok_or_else(|| {
                        parse_err(
                            origin,
                            line_no,
                            format!("unknown kind {value:?} (transmittance|transmittance_percent|absorption_cm-1)"),
                        )
                    })?);
                }
                "thickness_um" => {
                    if thickness.is_some() {
                        return Err(parse_err(origin, line_no, "duplicate `thickness_um` directive"));
                    }
                    let t = parse_number(value)
                        .ok_or_else(|| parse_err(origin, line_no, format!("malformed thickness {value:?}")))?;
                    thickness = Some((t, line_no));
                }
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(
                origin,
                line_no,
                format!("expected `wavelength_nm,value`, found {} fields", fields.len()),
            ));
        }
        let w = parse_number(fields[0])
            .ok_or_else(|| parse_err(origin, line_no, format!("malformed wavelength {:?}", fields[0].trim())))?;
        let v = parse_number(fields[1])
            .ok_or_else(|| parse_err(origin, line_no, format!("malformed value {:?}", fields[1].trim())))?;
        if let Some(&prev) = ws.last() {
            if w == prev {
                return Err(parse_err(origin, line_no, format!("duplicate wavelength {w}")));
            }
            if w < prev {
                return Err(parse_err(origin, line_no, format!("unsorted data: {w} after {prev}")));
            }
        }
        ws.push(w);
        vs.push(v);
        lines.push(line_no);
    }

    let kind = kind.ok_or_else(|| parse_err(origin, 0, "missing `# kind:` directive"))?;
    let geometry = match thickness {
        Some((t, line_no)) => Some(SampleGeometry::new(t).map_err(|e| parse_err(origin, line_no, e.to_string()))?),
        None if kind == FileKind::AbsorptionPerCm => None,
        None => return Err(parse_err(origin, 0, "missing `# thickness_um:` directive")),
    };
    if kind == FileKind::TransmittancePercent {
        for (v, &line_no) in vs.iter_mut().zip(&lines) {
            if !(*v > 0.0 && *v <= 100.0) {
                return Err(parse_err(origin, line_no, format!("transmittance percent {v} out of (0, 100]")));
            }
            *v /= 100.0;
        }
    }
    let spectrum = Spectrum::from_columns(ws, vs, kind.spectrum_kind()).map_err(|e| match e {
        Error::Violations(v) => {
            let first = &v[0];
            let line_no = first.index.and_then(|i| lines.get(i).copied()).unwrap_or(0);
            parse_err(origin, line_no, first.to_string())
        }
        other => other,
    })?;
    Ok(SpectrumFile {
        spectrum,
        geometry,
        kind,
    })
}

/// Finite decimal number; `nan` and `inf` spellings are rejected.
fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Emits a file that [`parse_spectrum_str`] reads back to the identical
/// spectrum. Values use the shortest exact decimal form.
///
/// `TransmittancePercent` is not offered: scaling by 100 is not exactly
/// invertible in binary floating point.
pub fn format_spectrum(s: &Spectrum, geometry: Option<&SampleGeometry>) -> Result<String> {
    let kind = match s.kind() {
        SpectrumKind::Transmittance => FileKind::Transmittance,
        SpectrumKind::AbsorptionCoefficient => FileKind::AbsorptionPerCm,
        SpectrumKind::Residual => return Err(Error::invalid("residual spectra have no file representation")),
    };
    if kind == FileKind::Transmittance && geometry.is_none() {
        return Err(Error::invalid("transmittance files need a thickness"));
    }
    let mut out = format!("# kind: {}\n", kind.directive());
    if let Some(g) = geometry {
        writeln!(out, "# thickness_um: {}", g.thickness_um()).unwrap();
    }
    for (w, v) in s.iter() {
        writeln!(out, "{w},{v}").unwrap();
    }
    Ok(out)
}

pub fn write_spectrum(path: impl AsRef<Path>, s: &Spectrum, geometry: Option<&SampleGeometry>) -> Result<()> {
    write_text(path.as_ref(), &format_spectrum(s, geometry)?)
}
