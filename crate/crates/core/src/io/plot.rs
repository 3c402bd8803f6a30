//! Minimal standalone SVG line and scatter plots.
//!
//! Output depends only on the input: coordinates are printed with a fixed
//! number of decimals and nothing time- or environment-dependent is emitted.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::write_text;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeriesStyle {
    #[default]
    Line,
    Markers,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: SeriesStyle,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            style: SeriesStyle::Line,
        }
    }

    pub fn markers(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            style: SeriesStyle::Markers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: AxisScale,
    pub y_scale: AxisScale,
    pub series: Vec<Series>,
    pub width: u32,
    pub height: u32,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: AxisScale::Linear,
            y_scale: AxisScale::Linear,
            series: Vec::new(),
            width: 720,
            height: 450,
        }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn log_x(mut self) -> Self {
        self.x_scale = AxisScale::Log;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.y_scale = AxisScale::Log;
        self
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

struct Axis {
    scale: AxisScale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, scale: AxisScale, name: &str) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite {name} value in plot data")));
            }
            let t = match scale {
                AxisScale::Linear => v,
                AxisScale::Log if v > 0.0 => v.log10(),
                AxisScale::Log => {
                    return Err(Error::invalid(format!("non-positive {name} value {v} on a log axis")))
                }
            };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if lo == hi {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs().max(1e-300) };
            let pad = if scale == AxisScale::Log { 0.5 } else { pad };
            lo -= pad;
            hi += pad;
        }
        Ok(Self { scale, lo, hi })
    }

    fn transform(&self, v: f64) -> f64 {
        match self.scale {
            AxisScale::Linear => v,
            AxisScale::Log => v.log10(),
        }
    }

    /// Fraction along the axis.
    fn frac(&self, v: f64) -> f64 {
        (self.transform(v) - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in data units with their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            AxisScale::Log => {
                let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
                if a > b {
                    return vec![
                        (10f64.powf(self.lo), fmt_sig(10f64.powf(self.lo))),
                        (10f64.powf(self.hi), fmt_sig(10f64.powf(self.hi))),
                    ];
                }
                let stride = ((b - a) / 8 + 1).max(1);
                (a..=b).step_by(stride as usize).map(|k| (10f64.powi(k), format!("1e{k}"))).collect()
            }
            AxisScale::Linear => {
                let raw = (self.hi - self.lo) / 5.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0]
                    .iter()
                    .map(|m| m * mag)
                    .find(|s| *s >= raw)
                    .unwrap_or(10.0 * mag);
                let decimals = (-step.log10().floor()).max(0.0) as usize;
                let first = (self.lo / step).ceil() as i64;
                let last = (self.hi / step).floor() as i64;
                (first..=last)
                    .map(|i| {
                        let v = i as f64 * step;
                        let v = if v == 0.0 { 0.0 } else { v };
                        (v, format!("{v:.decimals$}"))
                    })
                    .collect()
            }
        }
    }
}

fn fmt_sig(v: f64) -> String {
    format!("{v:.3e}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders `plot`; at least one series, no empty series, finite values, and
/// strictly positive values on log axes.
pub fn render_svg(plot: &Plot) -> Result<String> {
    if plot.series.is_empty() {
        return Err(Error::invalid("plot needs at least one series"));
    }
    if let Some(s) = plot.series.iter().find(|s| s.points.is_empty()) {
        return Err(Error::invalid(format!("empty series {:?}", s.label)));
    }
    let pts = || plot.series.iter().flat_map(|s| s.points.iter());
    let xa = Axis::fit(pts().map(|p| p.0), plot.x_scale, "x")?;
    let ya = Axis::fit(pts().map(|p| p.1), plot.y_scale, "y")?;

    let (w, h) = (plot.width as f64, plot.height as f64);
    let (pw, ph) = (w - MARGIN_LEFT - MARGIN_RIGHT, h - MARGIN_TOP - MARGIN_BOTTOM);
    let px = |x: f64| MARGIN_LEFT + xa.frac(x) * pw;
    let py = |y: f64| MARGIN_TOP + (1.0 - ya.frac(y)) * ph;

    let mut o = String::new();
    writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        plot.width, plot.height, plot.width, plot.height
    )
    .unwrap();
    writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        o,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(&plot.title)
    )
    .unwrap();
    writeln!(
        o,
        r#"<rect x="{MARGIN_LEFT:.2}" y="{MARGIN_TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();

    for (v, label) in xa.ticks() {
        let x = px(v);
        writeln!(
            o,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + ph,
            MARGIN_TOP + ph + 5.0,
            MARGIN_TOP + ph + 19.0,
            escape(&label)
        )
        .unwrap();
    }
    for (v, label) in ya.ticks() {
        let y = py(v);
        writeln!(
            o,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            escape(&label)
        )
        .unwrap();
    }
    writeln!(
        o,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        h - 14.0,
        escape(&plot.x_label)
    )
    .unwrap();
    writeln!(
        o,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&plot.y_label)
    )
    .unwrap();

    for (i, s) in plot.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match s.style {
            SeriesStyle::Line => {
                let coords: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                writeln!(
                    o,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                )
                .unwrap();
            }
            SeriesStyle::Markers => {
                for &(x, y) in &s.points {
                    writeln!(o, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y)).unwrap();
                }
            }
        }
        let ly = MARGIN_TOP + 16.0 + 16.0 * i as f64;
        let lx = MARGIN_LEFT + pw - 160.0;
        writeln!(
            o,
            r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="4" fill="{color}"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 6.0,
            lx + 18.0,
            escape(&s.label)
        )
        .unwrap();
    }
    o.push_str("</svg>\n");
    Ok(o)
}

pub fn emit_plot(plot: &Plot, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &render_svg(plot)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> Plot {
        Plot::new("t", "x", "y").with_series(Series::line("s", vec![(1.0, 2.0), (3.0, 4.0)]))
    }

    #[test]
    fn one_polyline_for_one_line_series() {
        let svg = render_svg(&two_points()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn deterministic_bytes() {
        assert_eq!(render_svg(&two_points()).unwrap(), render_svg(&two_points()).unwrap());
    }

    #[test]
    fn errors() {
        assert!(render_svg(&Plot::new("t", "x", "y")).is_err());
        assert!(render_svg(&Plot::new("t", "x", "y").with_series(Series::line("e", vec![]))).is_err());
        let neg = Plot::new("t", "x", "y").with_series(Series::line("s", vec![(1.0, 0.0), (2.0, 1.0)])).log_y();
        assert!(render_svg(&neg).unwrap_err().to_string().contains("log axis"));
        let nan = Plot::new("t", "x", "y").with_series(Series::line("s", vec![(1.0, f64::NAN)]));
        assert!(render_svg(&nan).is_err());
    }

    #[test]
    fn log_axes_and_markers() {
        let p = Plot::new("fit", "P1 (ppm)", "A <cm-1>")
            .with_series(Series::markers("data", vec![(0.1, 0.01), (1.0, 0.2), (10.0, 5.0)]))
            .log_x()
            .log_y();
        let svg = render_svg(&p).unwrap();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("1e-1") && svg.contains("1e1"));
        assert!(svg.contains("A &lt;cm-1&gt;"));
    }

    #[test]
    fn single_point_and_constant_series() {
        let p = Plot::new("t", "x", "y").with_series(Series::line("c", vec![(5.0, 3.0)]));
        assert!(render_svg(&p).is_ok());
    }
}
