//! Seeded synthetic spectra and retardation maps.
//!
//! # Random numbers
//!
//! Every generator draws from [`NoiseSource`]: a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`. A raw word `x: u64` maps to a uniform variate in
//! the open interval (0, 1) as `((x >> 12) as f64 + 0.5) * 2^-52`, and a
//! standard normal variate uses two consecutive uniforms `u1, u2` as
//! `sqrt(-2 ln u1) * cos(2π u2)` (one normal per pair, no caching). Both
//! steps are plain IEEE arithmetic, so a seed reproduces the same stream on
//! every platform with a correctly rounded `ln`/`cos`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::absorption::{transmittance_forward, ReflectanceModel};
use crate::birefringence::{PixelGrid, RetardationMap};
use crate::decomposition::{gaussian_band, Coefficients, ComponentModel};
use crate::error::{Error, Result};
use crate::types::{SampleGeometry, Spectrum, SpectrumKind, TreatmentStage, WavelengthGrid};

/// Deterministic uniform and normal variates; see the module docs for the mapping.
#[derive(Debug, Clone)]
pub struct NoiseSource(ChaCha8Rng);

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in (0, 1); never returns 0 or 1.
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Extra absorption band injected on top of the component model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianBump {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    /// Peak height, cm⁻¹.
    pub amplitude: f64,
}

impl GaussianBump {
    pub fn new(center_nm: f64, fwhm_nm: f64, amplitude: f64) -> Self {
        Self {
            center_nm,
            fwhm_nm,
            amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct NoiseSpec {
    /// Relative standard deviation applied as `A·(1 + σ·z)`.
    pub multiplicative_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub coefficients: Coefficients,
    pub model: ComponentModel,
    pub geometry: SampleGeometry,
    pub reflectance: ReflectanceModel,
    pub noise: NoiseSpec,
    pub extra_features: Vec<GaussianBump>,
}

impl SynthSpec {
    /// Default model, 300 µm plate, default reflectance, no noise.
    pub fn new(coefficients: Coefficients) -> Self {
        Self {
            coefficients,
            model: ComponentModel::default(),
            geometry: SampleGeometry::new(300.0).expect("valid thickness"),
            reflectance: ReflectanceModel::default(),
            noise: NoiseSpec::default(),
            extra_features: Vec::new(),
        }
    }

    pub fn with_noise(mut self, multiplicative_sigma: f64, seed: u64) -> Self {
        self.noise = NoiseSpec {
            multiplicative_sigma,
            seed,
        };
        self
    }

    pub fn with_bump(mut self, bump: GaussianBump) -> Self {
        self.extra_features.push(bump);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.noise.multiplicative_sigma;
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!("noise sigma must be finite and >= 0, got {s}")));
        }
        for b in &self.extra_features {
            if !(b.amplitude >= 0.0) || !b.amplitude.is_finite() {
                return Err(Error::invalid(format!("bump amplitude must be >= 0, got {}", b.amplitude)));
            }
        }
        if self.coefficients.to_vec().iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::invalid("coefficients must be finite and non-negative"));
        }
        self.model.validate()
    }
}

/// `A(λ) = Σ cᵢ·componentᵢ(λ) + Σ bumps`, then multiplicative noise.
///
/// Noise can push a point below zero only when `σ·z < -1`; such points are
/// clamped to 0.
pub fn synth_absorption(spec: &SynthSpec, grid: &WavelengthGrid) -> Result<Spectrum> {
    spec.validate()?;
    let mut a = spec.model.evaluate(&spec.coefficients, grid)?;
    for b in &spec.extra_features {
        for (ai, g) in a.iter_mut().zip(gaussian_band(b.center_nm, b.fwhm_nm, grid)?) {
            *ai += b.amplitude * g;
        }
    }
    let sigma = spec.noise.multiplicative_sigma;
    if sigma > 0.0 {
        let mut rng = NoiseSource::new(spec.noise.seed);
        for ai in &mut a {
            *ai = (*ai * (1.0 + sigma * rng.normal())).max(0.0);
        }
    }
    Spectrum::new(grid.clone(), a, SpectrumKind::AbsorptionCoefficient)
}

/// [`synth_absorption`] pushed through the exact integrating-sphere forward model.
pub fn synth_transmittance(spec: &SynthSpec, grid: &WavelengthGrid) -> Result<Spectrum> {
    let a = synth_absorption(spec, grid)?;
    let d_cm = spec.geometry.thickness_cm();
    let r = spec.reflectance.r_total();
    let t = a
        .values()
        .iter()
        .map(|&ai| transmittance_forward(ai, d_cm, r))
        .collect::<Result<Vec<f64>>>()?;
    Spectrum::new(grid.clone(), t, SpectrumKind::Transmittance)
}

/// Isotropic Gaussian `amplitude·exp(-r²/(2·radius²))` in Δn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Blob {
    /// (column, row) in pixels.
    pub center_px: (f64, f64),
    pub radius_px: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MaskShape {
    Full,
    /// Inclusive pixel bounds.
    Rectangle { col0: usize, row0: usize, col1: usize, row1: usize },
    /// Pixel centers with `((c-cx)/rx)² + ((r-cy)/ry)² <= 1` are valid.
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
}

impl MaskShape {
    fn contains(&self, col: usize, row: usize) -> bool {
        match *self {
            MaskShape::Full => true,
            MaskShape::Rectangle { col0, row0, col1, row1 } => (col0..=col1).contains(&col) && (row0..=row1).contains(&row),
            MaskShape::Ellipse { cx, cy, rx, ry } => {
                let (dx, dy) = ((col as f64 - cx) / rx, (row as f64 - cy) / ry);
                dx * dx + dy * dy <= 1.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapSynthSpec {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch_um: f64,
    pub thickness_um: f64,
    pub baseline_delta_n: f64,
    pub blobs: Vec<Blob>,
    /// Additive Gaussian noise on Γ, nm.
    pub noise_sigma_nm: f64,
    pub seed: u64,
    pub mask: MaskShape,
}

impl MapSynthSpec {
    pub fn uniform(width: usize, height: usize, thickness_um: f64, baseline_delta_n: f64) -> Self {
        Self {
            width,
            height,
            pixel_pitch_um: 10.0,
            thickness_um,
            baseline_delta_n,
            blobs: Vec::new(),
            noise_sigma_nm: 0.0,
            seed: 0,
            mask: MaskShape::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        SampleGeometry::new(self.thickness_um)?;
        if !(self.baseline_delta_n >= 0.0) || !self.baseline_delta_n.is_finite() {
            return Err(Error::invalid(format!("baseline Δn must be >= 0, got {}", self.baseline_delta_n)));
        }
        if !(self.noise_sigma_nm >= 0.0) || !self.noise_sigma_nm.is_finite() {
            return Err(Error::invalid(format!("noise sigma must be >= 0, got {}", self.noise_sigma_nm)));
        }
        if self.blobs.iter().any(|b| !(b.radius_px > 0.0) || !b.amplitude.is_finite()) {
            return Err(Error::invalid("blobs need a positive radius and finite amplitude"));
        }
        if let MaskShape::Ellipse { rx, ry, .. } = self.mask {
            if !(rx > 0.0 && ry > 0.0) {
                return Err(Error::invalid("ellipse mask needs positive radii"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthMap {
    pub map: RetardationMap,
    /// Valid pixels whose composed Γ was negative and clamped to 0.
    pub clamped: usize,
}

/// `Γ = d·(baseline + Σ blobs) + noise`, clamped at 0, masked.
///
/// One normal variate is drawn per pixel in row-major order whether or not the
/// pixel is masked, so the mask never shifts the noise pattern.
pub fn synth_retardation_map(spec: &MapSynthSpec) -> Result<SynthMap> {
    spec.validate()?;
    let d_nm = SampleGeometry::new(spec.thickness_um)?.thickness_nm();
    let mut rng = NoiseSource::new(spec.seed);
    let n = spec.width * spec.height;
    let (mut values, mut mask) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut clamped = 0;
    for row in 0..spec.height {
        for col in 0..spec.width {
            let dn = spec.baseline_delta_n
                + spec
                    .blobs
                    .iter()
                    .map(|b| {
                        let (dx, dy) = (col as f64 - b.center_px.0, row as f64 - b.center_px.1);
                        b.amplitude * (-(dx * dx + dy * dy) / (2.0 * b.radius_px * b.radius_px)).exp()
                    })
                    .sum::<f64>();
            let z = rng.normal();
            let mut gamma = d_nm * dn;
            if spec.noise_sigma_nm > 0.0 {
                gamma += spec.noise_sigma_nm * z;
            }
            let valid = spec.mask.contains(col, row);
            if gamma < 0.0 {
                if valid {
                    clamped += 1;
                }
                gamma = 0.0;
            }
            values.push(gamma);
            mask.push(valid);
        }
    }
    let grid = PixelGrid::new(spec.width, spec.height, values, mask)?;
    Ok(SynthMap {
        map: RetardationMap::new(grid, spec.pixel_pitch_um)?,
        clamped,
    })
}

/// Baseline as-grown coefficients shared by the stage scenarios.
fn scenario_base() -> Coefficients {
    Coefficients::five(0.8, 0.3, 0.2, 0.4, 0.5)
}

/// Broad GR1-like band used by [`high_fluence_scenario`].
pub const GR1_BUMP: GaussianBump = GaussianBump {
    center_nm: 655.0,
    fwhm_nm: 150.0,
    amplitude: 0.6,
};

/// Fraction of the GR1 band that annealing removes in [`high_fluence_scenario`].
pub const ANNEAL_REMOVED_FRACTION: f64 = 0.6;

fn stage_spectrum(coefs: Coefficients, bumps: &[GaussianBump], grid: &WavelengthGrid) -> Result<Spectrum> {
    let spec = bumps.iter().fold(SynthSpec::new(coefs), |s, b| s.with_bump(*b));
    synth_absorption(&spec, grid)
}

/// As-grown, irradiated (GR1 band added) and annealed (60 % of it removed).
pub fn high_fluence_scenario(grid: &WavelengthGrid) -> Result<Vec<(TreatmentStage, Spectrum)>> {
    let base = scenario_base();
    let mut annealed = GR1_BUMP;
    annealed.amplitude *= 1.0 - ANNEAL_REMOVED_FRACTION;
    Ok(vec![
        (TreatmentStage::as_grown(), stage_spectrum(base.clone(), &[], grid)?),
        (TreatmentStage::irradiated(2.0, 1e18)?, stage_spectrum(base.clone(), &[GR1_BUMP], grid)?),
        (TreatmentStage::annealed(1000.0, 2.0)?, stage_spectrum(base, &[annealed], grid)?),
    ])
}

/// Small NV band near 575 nm and a slight loss of the 270 nm band; nothing
/// reaches the 680-760 nm region.
pub fn low_fluence_scenario(grid: &WavelengthGrid) -> Result<Vec<(TreatmentStage, Spectrum)>> {
    let base = scenario_base();
    let mut dropped = base.clone();
    dropped.bands[0] *= 0.97;
    let nv = GaussianBump::new(575.0, 60.0, 0.05);
    Ok(vec![
        (TreatmentStage::as_grown(), stage_spectrum(base, &[], grid)?),
        (TreatmentStage::irradiated(2.0, 1e16)?, stage_spectrum(dropped.clone(), &[nv], grid)?),
        (TreatmentStage::annealed(1000.0, 2.0)?, stage_spectrum(dropped, &[nv], grid)?),
    ])
}
