//! Five-component decomposition of UV-Vis absorption spectra.
//!
//! A measured absorption spectrum is modelled as a non-negative combination of
//! three Gaussian bands (270, 360 and 520 nm by default), a monotonically
//! decreasing "ramp", and an offset component taken from a pure-diamond
//! reference spectrum (or a constant when no reference is supplied). The 270 nm
//! amplitude quantifies P1 nitrogen via a calibration factor; what the model
//! cannot explain is left in the residual and summarised by [`residual_features`].
//!
//! The band widths and the ramp form are toolkit defaults, not measured values,
//! and are echoed in every report.

mod features;
pub mod nnls;
mod refine;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric;
use crate::types::{Spectrum, SpectrumKind, WavelengthGrid};

pub use features::{residual_features, FeatureReport, GR1_WINDOW_NM, NV_WINDOW_NM, RISE_WINDOW_NM};
pub use refine::{refine_fit, RefineBounds, RefinedShape};

/// Condition number above which a fit is refused as degenerate.
pub const MAX_CONDITION: f64 = 1e10;
/// NV side-band mask for irradiated and annealed samples.
pub const NV_MASK_NM: (f64, f64) = (400.0, 650.0);

const FOUR_LN2: f64 = 4.0 * std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianBand {
    pub label: String,
    pub center_nm: f64,
    pub fwhm_nm: f64,
}

impl GaussianBand {
    pub fn new(label: impl Into<String>, center_nm: f64, fwhm_nm: f64) -> Self {
        Self {
            label: label.into(),
            center_nm,
            fwhm_nm,
        }
    }

    pub fn value(&self, wavelength_nm: f64) -> f64 {
        gaussian_value(self.center_nm, self.fwhm_nm, wavelength_nm)
    }
}

fn gaussian_value(center: f64, fwhm: f64, w: f64) -> f64 {
    let d = w - center;
    (-FOUR_LN2 * d * d / (fwhm * fwhm)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RampForm {
    /// `(λ/λ₀)^(-p)`
    PowerLaw { exponent: f64 },
    /// `exp(-(λ-λ₀)/τ)`
    Exponential { tau_nm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ramp {
    #[serde(flatten)]
    pub form: RampForm,
    pub ref_nm: f64,
}

impl Ramp {
    pub fn value(&self, w: f64) -> f64 {
        match self.form {
            RampForm::PowerLaw { exponent } => (w / self.ref_nm).powf(-exponent),
            RampForm::Exponential { tau_nm } => (-(w - self.ref_nm) / tau_nm).exp(),
        }
    }
}

/// The "El-offset" component.
#[derive(Debug, Clone, PartialEq)]
pub enum Offset {
    /// Constant 1 on every wavelength.
    Constant,
    /// Pure-diamond reference absorption, linearly resampled onto the fit grid.
    Reference(Spectrum),
}

impl Serialize for Offset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(None)?;
        match self {
            Offset::Constant => map.serialize_entry("kind", "constant")?,
            Offset::Reference(r) => {
                map.serialize_entry("kind", "reference")?;
                map.serialize_entry("points", &r.len())?;
                map.serialize_entry("range_nm", &[r.grid().first(), r.grid().last()])?;
            }
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentModel {
    pub bands: Vec<GaussianBand>,
    pub ramp: Ramp,
    pub offset: Offset,
    pub fit_window_nm: (f64, f64),
    pub masks_nm: Vec<(f64, f64)>,
}

impl Default for ComponentModel {
    fn default() -> Self {
        Self {
            bands: vec![
                GaussianBand::new("c270", 270.0, 40.0),
                GaussianBand::new("c360", 360.0, 100.0),
                GaussianBand::new("c520", 520.0, 150.0),
            ],
            ramp: Ramp {
                form: RampForm::PowerLaw { exponent: 3.0 },
                ref_nm: 300.0,
            },
            offset: Offset::Constant,
            fit_window_nm: (220.0, 800.0),
            masks_nm: Vec::new(),
        }
    }
}

impl ComponentModel {
    /// Adds the 400-650 nm NV side-band mask.
    pub fn with_nv_mask(mut self) -> Self {
        self.masks_nm.push(NV_MASK_NM);
        self
    }

    pub fn component_count(&self) -> usize {
        self.bands.len() + 2
    }

    pub fn component_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.bands.iter().map(|b| b.label.clone()).collect();
        names.push("c_ramp".into());
        names.push("c_offset".into());
        names
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.fit_window_nm;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::invalid(format!("fit window [{lo}, {hi}] nm is empty")));
        }
        for b in &self.bands {
            if !(b.fwhm_nm > 0.0) {
                return Err(Error::invalid(format!("band {} has non-positive FWHM {}", b.label, b.fwhm_nm)));
            }
            if !(b.center_nm >= lo && b.center_nm <= hi) {
                return Err(Error::invalid(format!(
                    "band {} centre {} nm outside fit window [{lo}, {hi}]",
                    b.label, b.center_nm
                )));
            }
        }
        match self.ramp.form {
            RampForm::PowerLaw { exponent } if !(exponent > 0.0) => {
                return Err(Error::invalid(format!("ramp exponent must be positive, got {exponent}")))
            }
            RampForm::Exponential { tau_nm } if !(tau_nm > 0.0) => {
                return Err(Error::invalid(format!("ramp decay length must be positive, got {tau_nm}")))
            }
            _ => {}
        }
        if !(self.ramp.ref_nm > 0.0) {
            return Err(Error::invalid("ramp reference wavelength must be positive"));
        }
        if let Offset::Reference(r) = &self.offset {
            if r.grid().first() > lo || r.grid().last() < hi {
                return Err(Error::Coverage {
                    lo,
                    hi,
                    ref_lo: r.grid().first(),
                    ref_hi: r.grid().last(),
                });
            }
        }
        for &(a, b) in &self.masks_nm {
            if !(a < b) {
                return Err(Error::invalid(format!("mask [{a}, {b}] is empty")));
            }
        }
        Ok(())
    }

    fn is_masked(&self, w: f64) -> bool {
        self.masks_nm.iter().any(|&(a, b)| w >= a && w <= b)
    }

    /// Component vectors on `grid`, in the order bands…, ramp, offset.
    pub fn components(&self, grid: &WavelengthGrid) -> Result<Vec<Vec<f64>>> {
        let mut cols: Vec<Vec<f64>> = self
            .bands
            .iter()
            .map(|b| gaussian_band(b.center_nm, b.fwhm_nm, grid))
            .collect::<Result<_>>()?;
        cols.push(grid.iter().map(|w| self.ramp.value(w)).collect());
        cols.push(match &self.offset {
            Offset::Constant => vec![1.0; grid.len()],
            Offset::Reference(r) => resample_reference(r, grid)?,
        });
        Ok(cols)
    }

    /// Evaluates `Σ cᵢ·componentᵢ` on `grid`.
    pub fn evaluate(&self, coefficients: &Coefficients, grid: &WavelengthGrid) -> Result<Vec<f64>> {
        let c = coefficients.to_vec();
        if c.len() != self.component_count() {
            return Err(Error::invalid(format!(
                "{} coefficients for a {}-component model",
                c.len(),
                self.component_count()
            )));
        }
        let cols = self.components(grid)?;
        Ok((0..grid.len())
            .map(|i| cols.iter().zip(&c).map(|(col, ci)| ci * col[i]).sum())
            .collect())
    }
}

/// Unit-peak Gaussian `exp(-4 ln2 (λ-c)²/w²)` on `grid`.
pub fn gaussian_band(center_nm: f64, fwhm_nm: f64, grid: &WavelengthGrid) -> Result<Vec<f64>> {
    if !(fwhm_nm > 0.0) {
        return Err(Error::invalid(format!("FWHM must be positive, got {fwhm_nm}")));
    }
    Ok(grid.iter().map(|w| gaussian_value(center_nm, fwhm_nm, w)).collect())
}

/// Power-law ramp `(λ/λ₀)^(-p)` on `grid`.
pub fn ramp_component(exponent: f64, ref_nm: f64, grid: &WavelengthGrid) -> Result<Vec<f64>> {
    if !(exponent > 0.0) || !(ref_nm > 0.0) {
        return Err(Error::invalid(format!(
            "ramp needs positive exponent and reference wavelength (got {exponent}, {ref_nm})"
        )));
    }
    let ramp = Ramp {
        form: RampForm::PowerLaw { exponent },
        ref_nm,
    };
    Ok(grid.iter().map(|w| ramp.value(w)).collect())
}

/// Linear interpolation of `reference` onto `grid`.
pub fn resample_reference(reference: &Spectrum, grid: &WavelengthGrid) -> Result<Vec<f64>> {
    let (ref_lo, ref_hi) = (reference.grid().first(), reference.grid().last());
    if grid.first() < ref_lo || grid.last() > ref_hi {
        let (lo, hi) = if grid.first() < ref_lo {
            (grid.first(), ref_lo.min(grid.last()))
        } else {
            (ref_hi.max(grid.first()), grid.last())
        };
        return Err(Error::Coverage { lo, hi, ref_lo, ref_hi });
    }
    Ok(grid
        .iter()
        .map(|w| numeric::interpolate(reference.wavelengths(), reference.values(), w).expect("covered"))
        .collect())
}

/// Fitted amplitudes, all in cm⁻¹ and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficients {
    /// Peak amplitudes, aligned with [`ComponentModel::bands`].
    pub bands: Vec<f64>,
    /// Amplitude of the ramp at its reference wavelength.
    pub ramp: f64,
    /// Multiplier of the offset component.
    pub offset: f64,
}

impl Coefficients {
    /// The default five-component layout `(c270, c360, c520, c_ramp, c_offset)`.
    pub fn five(c270: f64, c360: f64, c520: f64, ramp: f64, offset: f64) -> Self {
        Self {
            bands: vec![c270, c360, c520],
            ramp,
            offset,
        }
    }

    pub fn from_vec(mut v: Vec<f64>) -> Self {
        assert!(v.len() >= 2, "need at least ramp and offset");
        let offset = v.pop().unwrap();
        let ramp = v.pop().unwrap();
        Self { bands: v, ramp, offset }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.bands.clone();
        v.push(self.ramp);
        v.push(self.offset);
        v
    }

    pub fn c270(&self) -> f64 {
        self.bands[0]
    }

    pub fn c360(&self) -> f64 {
        self.bands[1]
    }

    pub fn c520(&self) -> f64 {
        self.bands[2]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_vec(self.to_vec().into_iter().map(|c| c * s).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionResult {
    pub coefficients: Coefficients,
    /// Input minus model over the fit window, masked points included.
    pub residual: Spectrum,
    /// RMS of the residual over unmasked points.
    pub rms_residual: f64,
    pub converged: bool,
    pub condition_number: f64,
    pub refined_shape: Option<RefinedShape>,
}

/// Points of `s` that fall inside the fit window.
pub(crate) struct FitWindow {
    pub grid: WavelengthGrid,
    pub target: Vec<f64>,
    pub unmasked: Vec<usize>,
}

pub(crate) fn fit_window(s: &Spectrum, model: &ComponentModel) -> Result<FitWindow> {
    model.validate()?;
    if s.kind() != SpectrumKind::AbsorptionCoefficient {
        return Err(Error::invalid("decomposition expects an absorption-coefficient spectrum"));
    }
    let (lo, hi) = model.fit_window_nm;
    if s.grid().first() > lo || s.grid().last() < hi {
        return Err(Error::invalid(format!(
            "spectrum [{}, {}] nm does not cover fit window [{lo}, {hi}] nm",
            s.grid().first(),
            s.grid().last()
        )));
    }
    let (ws, target): (Vec<f64>, Vec<f64>) = s.iter().filter(|(w, _)| *w >= lo && *w <= hi).unzip();
    let unmasked: Vec<usize> = (0..ws.len()).filter(|&i| !model.is_masked(ws[i])).collect();
    let need = model.component_count();
    if unmasked.len() < need.max(5) {
        return Err(Error::invalid(format!(
            "insufficient points: {} unmasked points in the fit window, need at least {}",
            unmasked.len(),
            need.max(5)
        )));
    }
    Ok(FitWindow {
        grid: WavelengthGrid::new(ws)?,
        target,
        unmasked,
    })
}

pub(crate) fn design_matrix(cols: &[Vec<f64>], rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| cols[j][rows[i]])
}

fn degeneracy_error(cols: &[Vec<f64>], rows: &[usize], names: &[String], condition: f64) -> Error {
    let mut correlations = Vec::new();
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let (mut dot, mut ni, mut nj) = (0.0, 0.0, 0.0);
            for &r in rows {
                dot += cols[i][r] * cols[j][r];
                ni += cols[i][r] * cols[i][r];
                nj += cols[j][r] * cols[j][r];
            }
            correlations.push((names[i].clone(), names[j].clone(), dot / (ni * nj).sqrt()));
        }
    }
    Error::Degenerate {
        condition,
        correlations,
    }
}

/// Non-negative linear least-squares fit with fixed component shapes.
pub fn fit_components(s: &Spectrum, model: &ComponentModel) -> Result<DecompositionResult> {
    let win = fit_window(s, model)?;
    let cols = model.components(&win.grid)?;
    let (coefficients, condition) = solve_coefficients(&cols, &win, &model.component_names())?;
    finish(win, &cols, coefficients, condition, None)
}

pub(crate) fn solve_coefficients(
    cols: &[Vec<f64>],
    win: &FitWindow,
    names: &[String],
) -> Result<(Vec<f64>, f64)> {
    let a = design_matrix(cols, &win.unmasked);
    let condition = nnls::condition_number(&a);
    if !(condition <= MAX_CONDITION) {
        return Err(degeneracy_error(cols, &win.unmasked, names, condition));
    }
    let b = DVector::from_iterator(win.unmasked.len(), win.unmasked.iter().map(|&i| win.target[i]));
    let x = nnls::nnls(&a, &b)?;
    Ok((x.iter().copied().collect(), condition))
}

pub(crate) fn finish(
    win: FitWindow,
    cols: &[Vec<f64>],
    coefficients: Vec<f64>,
    condition: f64,
    refined_shape: Option<RefinedShape>,
) -> Result<DecompositionResult> {
    let residual: Vec<f64> = (0..win.grid.len())
        .map(|i| win.target[i] - cols.iter().zip(&coefficients).map(|(c, x)| x * c[i]).sum::<f64>())
        .collect();
    let ss: f64 = win.unmasked.iter().map(|&i| residual[i] * residual[i]).sum();
    let rms_residual = (ss / win.unmasked.len() as f64).sqrt();
    Ok(DecompositionResult {
        coefficients: Coefficients::from_vec(coefficients),
        residual: Spectrum::new(win.grid, residual, SpectrumKind::Residual)?,
        rms_residual,
        converged: true,
        condition_number: condition,
        refined_shape,
    })
}

/// P1 concentration in ppm from the 270 nm peak amplitude and a calibration
/// factor `kappa` in ppm·cm.
pub fn p1_concentration(c270: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("calibration factor kappa must be positive, got {kappa}")));
    }
    if !(c270 >= 0.0) {
        return Err(Error::invalid(format!("270 nm amplitude must be non-negative, got {c270}")));
    }
    Ok(kappa * c270)
}
