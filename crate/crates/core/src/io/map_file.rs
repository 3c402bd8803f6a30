use std::fmt::Write as _;
use std::path::Path;

use super::{parse_err, read_text, write_text};
use crate::birefringence::{PixelGrid, RetardationMap};
use crate::error::{Error, Result};

pub fn parse_map(path: impl AsRef<Path>) -> Result<RetardationMap> {
    let path = path.as_ref();
    parse_map_str(&read_text(path)?, &path.display().to_string())
}

/// Parses `# retardation_map` text. Row indices in messages are 0-based data
/// rows; line numbers are 1-based file lines.
pub fn parse_map_str(text: &str, origin: &str) -> Result<RetardationMap> {
    let mut tagged = false;
    let (mut width, mut height, mut pitch, mut unit) = (None, None, None, None);
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut row = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if comment == "retardation_map" {
                tagged = true;
                continue;
            }
            let Some((key, value)) = comment.split_once(':') else { continue };
            let value = value.trim();
            let dim = || {
                value
                    .parse::<usize>()
                    .map_err(|_| parse_err(origin, line_no, format!("malformed {} {value:?}", key.trim())))
            };
            match key.trim() {
                "width" => width = Some(dim()?),
                "height" => height = Some(dim()?),
                "pixel_pitch_um" => {
                    pitch = Some(
                        value
                            .parse::<f64>()
                            .map_err(|_| parse_err(origin, line_no, format!("malformed pixel pitch {value:?}")))?,
                    )
                }
                "unit" => unit = Some(value.to_string()),
                _ => {}
            }
            continue;
        }
        let (Some(w), Some(h)) = (width, height) else {
            return Err(parse_err(origin, line_no, "data row before `# width:` and `# height:`"));
        };
        if row >= h {
            return Err(parse_err(origin, line_no, format!("more than {h} data rows")));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != w {
            return Err(parse_err(
                origin,
                line_no,
                format!("row {row} has {} values, expected width {w}", fields.len()),
            ));
        }
        for (col, tok) in fields.iter().enumerate() {
            if tok.eq_ignore_ascii_case("nan") {
                values.push(0.0);
                mask.push(false);
                continue;
            }
            let v: f64 = tok
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(origin, line_no, format!("malformed value {tok:?} at row {row}, column {col}")))?;
            if v < 0.0 {
                return Err(parse_err(
                    origin,
                    line_no,
                    format!("negative retardation {v} at row {row}, column {col}"),
                ));
            }
            values.push(v);
            mask.push(true);
        }
        row += 1;
    }

    if !tagged {
        return Err(parse_err(origin, 0, "missing `# retardation_map` header"));
    }
    let width = width.ok_or_else(|| parse_err(origin, 0, "missing `# width:` directive"))?;
    let height = height.ok_or_else(|| parse_err(origin, 0, "missing `# height:` directive"))?;
    let pitch = pitch.ok_or_else(|| parse_err(origin, 0, "missing `# pixel_pitch_um:` directive"))?;
    match unit.as_deref() {
        Some("nm") => {}
        Some(u) => return Err(parse_err(origin, 0, format!("unsupported unit {u:?}, expected nm"))),
        None => return Err(parse_err(origin, 0, "missing `# unit: nm` directive")),
    }
    if row != height {
        return Err(parse_err(origin, 0, format!("header height {height} but {row} data rows")));
    }
    let grid = PixelGrid::new(width, height, values, mask)?;
    RetardationMap::new(grid, pitch).map_err(|e| match e {
        Error::Invalid(m) => parse_err(origin, 0, m),
        other => other,
    })
}

/// Inverse of [`parse_map_str`]; invalid pixels are written as `nan`.
pub fn format_map(m: &RetardationMap) -> String {
    let g = m.grid();
    let mut out = format!(
        "# retardation_map\n# width: {}\n# height: {}\n# pixel_pitch_um: {}\n# unit: nm\n",
        g.width(),
        g.height(),
        m.pixel_pitch_um
    );
    for r in 0..g.height() {
        for c in 0..g.width() {
            if c > 0 {
                out.push(',');
            }
            match g.get(r, c) {
                Some(v) => write!(out, "{v}").unwrap(),
                None => out.push_str("nan"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_map(path: impl AsRef<Path>, m: &RetardationMap) -> Result<()> {
    write_text(path.as_ref(), &format_map(m))
}
