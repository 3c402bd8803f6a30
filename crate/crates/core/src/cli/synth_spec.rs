//! Synthetic-data spec files, in the same `key = value` format as configs.
//!
//! Spectrum spec keys: `c270 c360 c520 c_ramp c_offset` (cm⁻¹, default 0),
//! `grid = lo,hi` and `step` (nm, default 220,800 and 1), `thickness_um`
//! (300), `rt`, `sigma` (relative noise), `seed`, `output =
//! transmittance|absorption`, and `bumps = center:fwhm:amplitude; ...`.
//!
//! Map spec keys: `width height pixel_pitch_um thickness_um
//! baseline_delta_n noise_sigma_nm seed`, `mask = full |
//! rectangle:col0,row0,col1,row1 | ellipse:cx,cy,rx,ry`, and
//! `blobs = col:row:radius:amplitude; ...`.

use crate::absorption::ReflectanceModel;
use crate::decomposition::Coefficients;
use crate::error::{Error, Result};
use crate::io::{FileKind, KeyValues};
use crate::synth::{synth_absorption, synth_transmittance, Blob, GaussianBump, MapSynthSpec, MaskShape, SynthSpec};
use crate::types::{SampleGeometry, Spectrum, WavelengthGrid};

const SPECTRUM_KEYS: &[&str] = &[
    "c270", "c360", "c520", "c_ramp", "c_offset", "grid", "step", "thickness_um", "rt", "sigma", "seed", "output", "bumps",
];
const MAP_KEYS: &[&str] = &[
    "width",
    "height",
    "pixel_pitch_um",
    "thickness_um",
    "baseline_delta_n",
    "noise_sigma_nm",
    "seed",
    "mask",
    "blobs",
];

pub struct SpectrumJob {
    pub spec: SynthSpec,
    pub grid_nm: (f64, f64, f64),
    pub output: FileKind,
}

impl SpectrumJob {
    pub fn generate(&self) -> Result<Spectrum> {
        let grid = WavelengthGrid::uniform(self.grid_nm.0, self.grid_nm.1, self.grid_nm.2)?;
        match self.output {
            FileKind::AbsorptionPerCm => synth_absorption(&self.spec, &grid),
            _ => synth_transmittance(&self.spec, &grid),
        }
    }
}

/// Splits `a:b:c; d:e:f` into numeric tuples of length `n`.
fn tuples(s: &str, n: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v: Vec<f64> = t
                .split(':')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::invalid(format!("malformed {what} entry {t:?}")))?;
            if v.len() != n {
                return Err(Error::invalid(format!("{what} entry {t:?} needs {n} fields")));
            }
            Ok(v)
        })
        .collect()
}

pub fn spectrum_job(kv: &KeyValues) -> Result<SpectrumJob> {
    kv.reject_unknown(SPECTRUM_KEYS)?;
    let c = |k: &str| -> Result<f64> { Ok(kv.get::<f64>(k)?.unwrap_or(0.0)) };
    let mut spec = SynthSpec::new(Coefficients::five(c("c270")?, c("c360")?, c("c520")?, c("c_ramp")?, c("c_offset")?));
    if let Some(t) = kv.get::<f64>("thickness_um")? {
        spec.geometry = SampleGeometry::new(t)?;
    }
    if let Some(r) = kv.get::<f64>("rt")? {
        spec.reflectance = ReflectanceModel::with_total(r)?;
    }
    spec.noise.multiplicative_sigma = kv.get::<f64>("sigma")?.unwrap_or(0.0);
    spec.noise.seed = kv.get::<u64>("seed")?.unwrap_or(0);
    if let Some(b) = kv.raw("bumps") {
        for t in tuples(b, 3, "bump")? {
            spec.extra_features.push(GaussianBump::new(t[0], t[1], t[2]));
        }
    }
    let (lo, hi) = kv.get_pair("grid")?.unwrap_or((220.0, 800.0));
    let step = kv.get::<f64>("step")?.unwrap_or(1.0);
    let output = match kv.raw("output").unwrap_or("transmittance") {
        "transmittance" => FileKind::Transmittance,
        "absorption" => FileKind::AbsorptionPerCm,
        other => return Err(Error::invalid(format!("unknown output {other:?} (transmittance|absorption)"))),
    };
    spec.validate()?;
    Ok(SpectrumJob {
        spec,
        grid_nm: (lo, hi, step),
        output,
    })
}

fn parse_mask(s: &str) -> Result<MaskShape> {
    let bad = || Error::invalid(format!("malformed mask {s:?}"));
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let nums: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
    };
    match (kind.trim(), nums.as_slice()) {
        ("full", []) => Ok(MaskShape::Full),
        ("rectangle", &[a, b, c, d]) if [a, b, c, d].iter().all(|v| *v >= 0.0 && v.fract() == 0.0) => Ok(MaskShape::Rectangle {
            col0: a as usize,
            row0: b as usize,
            col1: c as usize,
            row1: d as usize,
        }),
        ("ellipse", &[cx, cy, rx, ry]) => Ok(MaskShape::Ellipse { cx, cy, rx, ry }),
        _ => Err(bad()),
    }
}

pub fn map_spec(kv: &KeyValues) -> Result<MapSynthSpec> {
    kv.reject_unknown(MAP_KEYS)?;
    let need = |k: &str| kv.get::<usize>(k)?.ok_or_else(|| Error::invalid(format!("map spec needs `{k}`")));
    let mut spec = MapSynthSpec::uniform(
        need("width")?,
        need("height")?,
        kv.get::<f64>("thickness_um")?.unwrap_or(300.0),
        kv.get::<f64>("baseline_delta_n")?.unwrap_or(0.0),
    );
    if let Some(p) = kv.get::<f64>("pixel_pitch_um")? {
        spec.pixel_pitch_um = p;
    }
    spec.noise_sigma_nm = kv.get::<f64>("noise_sigma_nm")?.unwrap_or(0.0);
    spec.seed = kv.get::<u64>("seed")?.unwrap_or(0);
    if let Some(m) = kv.raw("mask") {
        spec.mask = parse_mask(m)?;
    }
    if let Some(b) = kv.raw("blobs") {
        for t in tuples(b, 4, "blob")? {
            spec.blobs.push(Blob {
                center_px: (t[0], t[1]),
                radius_px: t[2],
                amplitude: t[3],
            });
        }
    }
    spec.validate()?;
    Ok(spec)
}
