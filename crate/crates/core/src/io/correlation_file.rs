use std::fmt::Write as _;
use std::path::Path;

use super::{parse_err, read_text, write_text};
use crate::analysis::CorrelationPoint;
use crate::error::Result;

/// Required first non-comment line.
pub const CORRELATION_HEADER: &str = "sample_id,p1_ppm,metric,metric_err";

pub fn parse_correlation(path: impl AsRef<Path>) -> Result<Vec<CorrelationPoint>> {
    let path = path.as_ref();
    parse_correlation_str(&read_text(path)?, &path.display().to_string())
}

/// `sample_id,p1_ppm,metric,metric_err` rows; `metric_err` may be empty.
pub fn parse_correlation_str(text: &str, origin: &str) -> Result<Vec<CorrelationPoint>> {
    let mut header_seen = false;
    let mut out: Vec<CorrelationPoint> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != CORRELATION_HEADER {
                return Err(parse_err(origin, line_no, format!("expected header `{CORRELATION_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(parse_err(origin, line_no, format!("expected 4 fields, found {}", f.len())));
        }
        if f[0].is_empty() {
            return Err(parse_err(origin, line_no, "empty sample_id"));
        }
        if out.iter().any(|p| p.sample_id == f[0]) {
            return Err(parse_err(origin, line_no, format!("duplicate sample_id {:?}", f[0])));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(origin, line_no, format!("malformed {what} {s:?}")))
        };
        let p1 = num(f[1], "p1_ppm")?;
        if !(p1 > 0.0) {
            return Err(parse_err(origin, line_no, format!("p1_ppm must be positive, got {p1}")));
        }
        let mut p = CorrelationPoint::new(f[0], p1, num(f[2], "metric")?);
        if !f[3].is_empty() {
            let e = num(f[3], "metric_err")?;
            if e < 0.0 {
                return Err(parse_err(origin, line_no, format!("metric_err must be >= 0, got {e}")));
            }
            p = p.with_err(e);
        }
        out.push(p);
    }
    if !header_seen {
        return Err(parse_err(origin, 0, format!("missing header `{CORRELATION_HEADER}`")));
    }
    Ok(out)
}

pub fn format_correlation(points: &[CorrelationPoint]) -> String {
    let mut out = format!("{CORRELATION_HEADER}\n");
    for p in points {
        write!(out, "{},{},{},", p.sample_id, p.p1_ppm, p.y).unwrap();
        if let Some(e) = p.y_err {
            write!(out, "{e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_correlation(path: impl AsRef<Path>, points: &[CorrelationPoint]) -> Result<()> {
    write_text(path.as_ref(), &format_correlation(points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments_and_optional_error() {
        let text = "# Fig-1 style data\nsample_id,p1_ppm,metric,metric_err\nA,0.5,0.02,0.001\nB,2,0.1,\n";
        let p = parse_correlation_str(text, "c.csv").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].y_err, Some(0.001));
        assert_eq!(p[1].y_err, None);
        assert_eq!(parse_correlation_str(&format_correlation(&p), "c").unwrap(), p);
    }

    #[test]
    fn rejects_bad_rows() {
        let h = CORRELATION_HEADER;
        assert!(parse_correlation_str("id,p1,metric\nA,1,2,\n", "c").is_err());
        assert!(parse_correlation_str(&format!("{h}\nA,1,2\n"), "c").is_err());
        assert!(parse_correlation_str(&format!("{h}\nA,0,2,\n"), "c").is_err());
        assert!(parse_correlation_str(&format!("{h}\nA,1,x,\n"), "c").is_err());
        assert!(parse_correlation_str(&format!("{h}\nA,1,2,\nA,2,3,\n"), "c").is_err());
        assert!(parse_correlation_str("# only comments\n", "c").is_err());
    }
}
