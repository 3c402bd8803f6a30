//! Shared domain types.
//!
//! Canonical units throughout the crate: wavelength in nm, thickness in cm
//! for Beer-Lambert math (µm at the user boundary), absorption coefficient in
//! cm⁻¹, retardation in nm, birefringence dimensionless. Every type here is
//! immutable once built and validated at construction.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};

/// Strictly increasing, positive wavelength samples in nm.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WavelengthGrid(Vec<f64>);

impl WavelengthGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let violations = grid_violations(&values);
        if violations.is_empty() {
            Ok(Self(values))
        } else {
            Err(Error::Violations(violations))
        }
    }

    /// Uniform grid from `lo` to `hi` inclusive. The last point is `hi` when
    /// `(hi - lo) / step` is integral (to 1e-9 steps), otherwise the last point below `hi`.
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!(
                "uniform grid needs lo < hi and step > 0 (got {lo}, {hi}, {step})"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        let values = (0..=n).map(|i| lo + step * i as f64).collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

/// What the samples of a [`Spectrum`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Dimensionless fraction in (0, 1].
    Transmittance,
    /// Measured absorption coefficient in cm⁻¹, non-negative.
    AbsorptionCoefficient,
    /// Fit residual in cm⁻¹; the only kind allowed to go negative.
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    #[serde(rename = "wavelength_nm")]
    grid: WavelengthGrid,
    values: Vec<f64>,
    kind: SpectrumKind,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        let violations = validate_spectrum(grid.values(), &values, kind);
        if !violations.is_empty() {
            return Err(Error::Violations(violations));
        }
        Ok(Self { grid, values, kind })
    }

    /// Builds a spectrum from raw wavelength/value columns.
    pub fn from_columns(wavelengths: Vec<f64>, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        let violations = validate_spectrum(&wavelengths, &values, kind);
        if !violations.is_empty() {
            return Err(Error::Violations(violations));
        }
        Ok(Self {
            grid: WavelengthGrid(wavelengths),
            values,
            kind,
        })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn wavelengths(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.iter().zip(self.values.iter().copied())
    }

    /// Re-runs validation; always empty for a constructed spectrum.
    pub fn validate(&self) -> Vec<Violation> {
        validate_spectrum(self.grid.values(), &self.values, self.kind)
    }

    /// Same grid and kind with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|v| v * factor).collect(),
            self.kind,
        )
    }
}

/// Which invariant a [`Violation`] breaks.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    GridTooShort { len: usize },
    GridNotIncreasing,
    GridNonPositive,
    LengthMismatch { grid: usize, values: usize },
    TransmittanceOutOfRange,
    NegativeAbsorption,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: Option<usize>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |f: &mut fmt::Formatter<'_>, what: &str| match self.index {
            Some(i) => write!(f, "{what} at index {i}"),
            None => write!(f, "{what}"),
        };
        match &self.rule {
            Rule::GridTooShort { len } => write!(f, "grid has {len} points, need at least 2"),
            Rule::GridNotIncreasing => at(f, "grid not strictly increasing"),
            Rule::GridNonPositive => at(f, "wavelength not positive"),
            Rule::LengthMismatch { grid, values } => {
                write!(f, "values length {values} does not match grid length {grid}")
            }
            Rule::TransmittanceOutOfRange => at(f, "transmittance out of (0,1]"),
            Rule::NegativeAbsorption => at(f, "negative absorption coefficient"),
            Rule::NonFinite => at(f, "non-finite value"),
        }
    }
}

fn grid_violations(grid: &[f64]) -> Vec<Violation> {
    let mut out = Vec::new();
    if grid.len() < 2 {
        out.push(Violation {
            index: None,
            rule: Rule::GridTooShort { len: grid.len() },
        });
    }
    for (i, &w) in grid.iter().enumerate() {
        if !w.is_finite() {
            out.push(Violation {
                index: Some(i),
                rule: Rule::NonFinite,
            });
        } else if w <= 0.0 {
            out.push(Violation {
                index: Some(i),
                rule: Rule::GridNonPositive,
            });
        }
        if i > 0 && !(w > grid[i - 1]) {
            out.push(Violation {
                index: Some(i),
                rule: Rule::GridNotIncreasing,
            });
        }
    }
    out
}

/// Lists every broken spectrum invariant; empty iff the parts form a valid [`Spectrum`].
pub fn validate_spectrum(grid: &[f64], values: &[f64], kind: SpectrumKind) -> Vec<Violation> {
    let mut out = grid_violations(grid);
    if grid.len() != values.len() {
        out.push(Violation {
            index: None,
            rule: Rule::LengthMismatch {
                grid: grid.len(),
                values: values.len(),
            },
        });
    }
    for (i, &v) in values.iter().enumerate() {
        let rule = if !v.is_finite() {
            Some(Rule::NonFinite)
        } else {
            match kind {
                SpectrumKind::Transmittance if !(v > 0.0 && v <= 1.0) => {
                    Some(Rule::TransmittanceOutOfRange)
                }
                SpectrumKind::AbsorptionCoefficient if v < 0.0 => Some(Rule::NegativeAbsorption),
                _ => None,
            }
        };
        if let Some(rule) = rule {
            out.push(Violation {
                index: Some(i),
                rule,
            });
        }
    }
    out
}

/// µm → cm. Division by the exact 1e4 keeps powers of ten exact.
pub fn um_to_cm(t_um: f64) -> Result<f64> {
    if !(t_um > 0.0) || !t_um.is_finite() {
        return Err(Error::domain(format!("length must be positive, got {t_um} µm")));
    }
    Ok(t_um / 1e4)
}

/// µm → nm.
pub fn um_to_nm(t_um: f64) -> Result<f64> {
    if !(t_um > 0.0) || !t_um.is_finite() {
        return Err(Error::domain(format!("length must be positive, got {t_um} µm")));
    }
    Ok(t_um * 1e3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleGeometry {
    thickness_um: f64,
    lateral_mm: Option<f64>,
}

impl SampleGeometry {
    pub const MIN_THICKNESS_UM: f64 = 1.0;
    pub const MAX_THICKNESS_UM: f64 = 10_000.0;

    pub fn new(thickness_um: f64) -> Result<Self> {
        if !(Self::MIN_THICKNESS_UM..=Self::MAX_THICKNESS_UM).contains(&thickness_um) {
            return Err(Error::invalid(format!(
                "thickness {thickness_um} µm outside [{}, {}]",
                Self::MIN_THICKNESS_UM,
                Self::MAX_THICKNESS_UM
            )));
        }
        Ok(Self {
            thickness_um,
            lateral_mm: None,
        })
    }

    pub fn with_lateral_mm(mut self, lateral_mm: f64) -> Result<Self> {
        if !(lateral_mm > 0.0) || !lateral_mm.is_finite() {
            return Err(Error::invalid(format!("plate size must be positive, got {lateral_mm} mm")));
        }
        self.lateral_mm = Some(lateral_mm);
        Ok(self)
    }

    pub fn thickness_um(&self) -> f64 {
        self.thickness_um
    }

    pub fn thickness_cm(&self) -> f64 {
        self.thickness_um / 1e4
    }

    pub fn thickness_nm(&self) -> f64 {
        self.thickness_um * 1e3
    }

    pub fn lateral_mm(&self) -> Option<f64> {
        self.lateral_mm
    }
}

/// Treatment step, ordered as the processing sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageLabel {
    AsGrown,
    Irradiated,
    Annealed,
}

impl StageLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StageLabel::AsGrown => "as_grown",
            StageLabel::Irradiated => "irradiated",
            StageLabel::Annealed => "annealed",
        }
    }
}

impl std::fmt::Display for StageLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StageLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grown" | "as_grown" | "as-grown" | "asgrown" => Ok(StageLabel::AsGrown),
            "irr" | "irradiated" => Ok(StageLabel::Irradiated),
            "ann" | "annealed" => Ok(StageLabel::Annealed),
            other => Err(Error::invalid(format!("unknown stage label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreatmentStage {
    pub label: StageLabel,
    pub irradiation_energy_mev: Option<f64>,
    pub fluence_e_per_cm2: Option<f64>,
    pub anneal_temp_c: Option<f64>,
    pub anneal_hours: Option<f64>,
}

impl TreatmentStage {
    pub fn as_grown() -> Self {
        Self {
            label: StageLabel::AsGrown,
            irradiation_energy_mev: None,
            fluence_e_per_cm2: None,
            anneal_temp_c: None,
            anneal_hours: None,
        }
    }

    pub fn irradiated(energy_mev: f64, fluence_e_per_cm2: f64) -> Result<Self> {
        Self {
            label: StageLabel::Irradiated,
            irradiation_energy_mev: Some(energy_mev),
            fluence_e_per_cm2: Some(fluence_e_per_cm2),
            anneal_temp_c: None,
            anneal_hours: None,
        }
        .checked()
    }

    pub fn annealed(temp_c: f64, hours: f64) -> Result<Self> {
        Self {
            label: StageLabel::Annealed,
            irradiation_energy_mev: None,
            fluence_e_per_cm2: None,
            anneal_temp_c: Some(temp_c),
            anneal_hours: Some(hours),
        }
        .checked()
    }

    /// Validates the per-label required parameters.
    pub fn checked(self) -> Result<Self> {
        let positive = |v: Option<f64>| matches!(v, Some(x) if x > 0.0 && x.is_finite());
        match self.label {
            StageLabel::Irradiated
                if !(positive(self.irradiation_energy_mev) && positive(self.fluence_e_per_cm2)) =>
            {
                Err(Error::invalid("irradiated stage requires positive energy and fluence"))
            }
            StageLabel::Annealed if !(positive(self.anneal_temp_c) && positive(self.anneal_hours)) => {
                Err(Error::invalid("annealed stage requires positive temperature and duration"))
            }
            _ => Ok(self),
        }
    }
}

/// Checks that labels form a subsequence of as-grown → irradiated → annealed.
pub fn check_stage_order(labels: &[StageLabel]) -> Result<()> {
    for pair in labels.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::invalid(format!(
                "stage order violation: {} cannot precede {}",
                pair[0].as_str(),
                pair[1].as_str()
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    id: String,
    geometry: SampleGeometry,
    stages: Vec<(TreatmentStage, Vec<PathBuf>)>,
}

impl SampleRecord {
    pub fn new(
        id: impl Into<String>,
        geometry: SampleGeometry,
        stages: Vec<(TreatmentStage, Vec<PathBuf>)>,
    ) -> Result<Self> {
        let labels: Vec<StageLabel> = stages.iter().map(|(s, _)| s.label).collect();
        check_stage_order(&labels)?;
        for (stage, _) in &stages {
            stage.checked()?;
        }
        Ok(Self {
            id: id.into(),
            geometry,
            stages,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn geometry(&self) -> &SampleGeometry {
        &self.geometry
    }

    pub fn stages(&self) -> &[(TreatmentStage, Vec<PathBuf>)] {
        &self.stages
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(v: &[f64]) -> WavelengthGrid {
        WavelengthGrid::new(v.to_vec()).unwrap()
    }

    #[test]
    fn valid_transmittance_has_no_violations() {
        let v = validate_spectrum(&[680.0, 700.0, 720.0], &[0.5, 0.6, 1.0], SpectrumKind::Transmittance);
        assert!(v.is_empty());
    }

    #[test]
    fn repeated_wavelength_is_reported_at_index() {
        let v = validate_spectrum(&[400.0, 400.0, 401.0], &[0.5; 3], SpectrumKind::Transmittance);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "grid not strictly increasing at index 1");
    }

    #[test]
    fn transmittance_above_one_is_reported() {
        let v = validate_spectrum(&[400.0, 401.0, 402.0], &[0.5, 1.2, 0.5], SpectrumKind::Transmittance);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "transmittance out of (0,1] at index 1");
    }

    #[test]
    fn zero_transmittance_rejected_and_residuals_may_be_negative() {
        assert!(!validate_spectrum(&[1.0, 2.0], &[0.0, 0.5], SpectrumKind::Transmittance).is_empty());
        assert!(!validate_spectrum(&[1.0, 2.0], &[-0.1, 0.5], SpectrumKind::AbsorptionCoefficient).is_empty());
        assert!(validate_spectrum(&[1.0, 2.0], &[-0.1, 0.5], SpectrumKind::Residual).is_empty());
    }

    #[test]
    fn short_grid_and_length_mismatch() {
        assert!(WavelengthGrid::new(vec![500.0]).is_err());
        assert!(Spectrum::new(grid(&[1.0, 2.0]), vec![1.0], SpectrumKind::Residual).is_err());
    }

    #[test]
    fn constructed_spectrum_validates_clean() {
        let s = Spectrum::new(grid(&[1.0, 2.0]), vec![0.1, 0.2], SpectrumKind::Transmittance).unwrap();
        assert!(s.validate().is_empty());
    }

    #[test]
    fn unit_conversions() {
        assert_eq!(um_to_cm(300.0).unwrap(), 0.03);
        assert_eq!(um_to_cm(10000.0).unwrap(), 1.0);
        assert_eq!(um_to_cm(1.0).unwrap(), 1e-4);
        assert!(um_to_cm(0.0).is_err());
        assert!(um_to_cm(-5.0).is_err());
        assert_eq!(um_to_nm(300.0).unwrap(), 3e5);
    }

    #[test]
    fn powers_of_ten_are_exact() {
        for k in 0..=4 {
            let um = 10f64.powi(k);
            assert_eq!(um_to_cm(um).unwrap(), 10f64.powi(k - 4));
        }
    }

    #[test]
    fn geometry_bounds() {
        assert!(SampleGeometry::new(0.5).is_err());
        assert!(SampleGeometry::new(10_001.0).is_err());
        let g = SampleGeometry::new(300.0).unwrap();
        assert_eq!(g.thickness_cm(), 0.03);
        assert_eq!(g.thickness_nm(), 3e5);
    }

    #[test]
    fn stage_requirements() {
        assert!(TreatmentStage::irradiated(2.0, 3e18).is_ok());
        assert!(TreatmentStage::irradiated(0.0, 3e18).is_err());
        let mut s = TreatmentStage::as_grown();
        s.label = StageLabel::Annealed;
        assert!(s.checked().is_err());
    }

    #[test]
    fn sample_record_stage_order() {
        let geom = SampleGeometry::new(300.0).unwrap();
        let grown = (TreatmentStage::as_grown(), vec![]);
        let ann = (TreatmentStage::annealed(1000.0, 2.0).unwrap(), vec![]);
        assert!(SampleRecord::new("a", geom, vec![grown.clone(), ann.clone()]).is_ok());
        assert!(SampleRecord::new("a", geom, vec![ann, grown]).is_err());
    }

    #[test]
    fn uniform_grid_includes_endpoint() {
        let g = WavelengthGrid::uniform(220.0, 800.0, 1.0).unwrap();
        assert_eq!(g.len(), 581);
        assert_eq!(g.last(), 800.0);
    }
}
