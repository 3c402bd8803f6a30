//! Transmittance to absorption-coefficient conversion.
//!
//! Two conversions are provided. The integrating-sphere form accounts for
//! incoherent multiple reflection inside a plane-parallel plate with total
//! reflectance `R_t`:
//!
//! ```text
//! G = sqrt(4T² + ((1-R_t)² - T²)²) - (1-R_t)² + T²
//! A = -(1/d) · log10(G / (2T))
//! ```
//!
//! which has the closed-form inverse (`x = 10^(-A·d)`)
//!
//! ```text
//! T = [(x² - 1) + sqrt((x² - 1)² + 4x²(1-R_t)²)] / (2x)
//! ```
//!
//! The simple form `A = -log10(T)/d` ignores reflection and is used for
//! broadband spectral work where only the shape matters.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric;
use crate::types::{SampleGeometry, Spectrum, SpectrumKind};

/// Default total plate reflectance of diamond.
pub const DEFAULT_TOTAL_REFLECTANCE: f64 = 0.2913;
/// Refractive index of diamond used for the reflectance derivation.
pub const DIAMOND_REFRACTIVE_INDEX: f64 = 2.4;
/// Slack above the lossless bound tolerated before a transmittance is rejected.
pub const SUPERPHYSICAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectanceModel {
    r_total: f64,
    n: f64,
}

impl Default for ReflectanceModel {
    fn default() -> Self {
        Self {
            r_total: DEFAULT_TOTAL_REFLECTANCE,
            n: DIAMOND_REFRACTIVE_INDEX,
        }
    }
}

impl ReflectanceModel {
    /// Uses `r_total` directly. `n` is kept at the diamond value for reference only.
    pub fn with_total(r_total: f64) -> Result<Self> {
        check_rt(r_total)?;
        Ok(Self {
            r_total,
            n: DIAMOND_REFRACTIVE_INDEX,
        })
    }

    /// Derives the total reflectance from a refractive index.
    pub fn from_refractive_index(n: f64) -> Result<Self> {
        Ok(Self {
            r_total: fresnel_total_reflectance(n)?,
            n,
        })
    }

    pub fn r_total(&self) -> f64 {
        self.r_total
    }

    pub fn refractive_index(&self) -> f64 {
        self.n
    }

    /// Transmittance of a lossless plate, `1 - R_t`.
    pub fn lossless_transmittance(&self) -> f64 {
        1.0 - self.r_total
    }
}

fn check_rt(r_total: f64) -> Result<()> {
    if !(r_total > 0.0 && r_total < 1.0) {
        return Err(Error::domain(format!("total reflectance must lie in (0, 1), got {r_total}")));
    }
    Ok(())
}

fn check_thickness(d_cm: f64) -> Result<()> {
    if !(d_cm > 0.0) || !d_cm.is_finite() {
        return Err(Error::domain(format!("thickness must be positive, got {d_cm} cm")));
    }
    Ok(())
}

/// Incoherent two-surface total reflectance `2R/(1+R)` of a lossless plate,
/// with the single-surface normal-incidence `R = ((n-1)/(n+1))²`.
pub fn fresnel_total_reflectance(n: f64) -> Result<f64> {
    if !(n > 1.0) || !n.is_finite() {
        return Err(Error::domain(format!("refractive index must exceed 1, got {n}")));
    }
    let r = ((n - 1.0) / (n + 1.0)).powi(2);
    Ok(2.0 * r / (1.0 + r))
}

/// Integrating-sphere conversion; see the module docs.
///
/// `t` is a fraction, `d_cm` the thickness in cm. Transmittances within
/// [`SUPERPHYSICAL_TOLERANCE`] above `1 - R_t` are clamped to the lossless point.
pub fn absorption_coefficient_integrating(t: f64, d_cm: f64, r_total: f64) -> Result<f64> {
    integrating_with_flag(t, d_cm, r_total).map(|(a, _)| a)
}

/// As [`absorption_coefficient_integrating`], also reporting whether the
/// input was clamped to the lossless point.
pub fn integrating_with_flag(t: f64, d_cm: f64, r_total: f64) -> Result<(f64, bool)> {
    check_rt(r_total)?;
    check_thickness(d_cm)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("transmittance must be positive, got {t}")));
    }
    let bound = 1.0 - r_total;
    if t > bound + SUPERPHYSICAL_TOLERANCE {
        return Err(Error::SuperphysicalTransmittance { t, bound });
    }
    if t > bound {
        return Ok((0.0, true));
    }

    let c = bound * bound;
    // diff = T² - (1-R_t)² ; G = sqrt(4T² + diff²) + diff
    let diff = t * t - c;
    let s = (4.0 * t * t + diff * diff).sqrt();
    // G/(2T), rationalised when diff < 0 to avoid cancellation
    let ratio = if diff >= 0.0 {
        (s + diff) / (2.0 * t)
    } else {
        2.0 * t / (s - diff)
    };
    let a = -ratio.log10() / d_cm;
    Ok((a.max(0.0), false))
}

/// Exact forward model: transmittance of a plate with absorption `a` (cm⁻¹).
pub fn transmittance_forward(a: f64, d_cm: f64, r_total: f64) -> Result<f64> {
    check_rt(r_total)?;
    check_thickness(d_cm)?;
    if !(a >= 0.0) {
        return Err(Error::domain(format!("absorption coefficient must be non-negative, got {a}")));
    }
    if a.is_infinite() {
        return Ok(0.0);
    }
    let c = (1.0 - r_total).powi(2);
    let ln_x = -a * d_cm * std::f64::consts::LN_10;
    let x = ln_x.exp();
    if x == 0.0 {
        return Ok(0.0);
    }
    // u = x² - 1 without cancellation near x = 1
    let u = (2.0 * ln_x).exp_m1();
    let s = (u * u + 4.0 * x * x * c).sqrt();
    let t = if u >= 0.0 {
        (u + s) / (2.0 * x)
    } else {
        2.0 * x * c / (s - u)
    };
    Ok(t)
}

/// Reflection-free Beer-Lambert form `A = -log10(T)/d`.
pub fn absorption_coefficient_simple(t: f64, d_cm: f64) -> Result<f64> {
    check_thickness(d_cm)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("transmittance must lie in (0, 1], got {t}")));
    }
    Ok(-t.log10() / d_cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionMode {
    IntegratingSphere,
    Simple,
}

impl std::str::FromStr for ConversionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sphere" | "integrating_sphere" => Ok(ConversionMode::IntegratingSphere),
            "simple" => Ok(ConversionMode::Simple),
            other => Err(Error::invalid(format!("unknown conversion mode {other:?} (sphere|simple)"))),
        }
    }
}

/// Output of [`spectrum_to_absorption`].
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionSpectrum {
    pub spectrum: Spectrum,
    /// Wavelengths whose transmittance sat inside the superphysical tolerance
    /// band and were clamped to zero absorption.
    pub clamped_nm: Vec<f64>,
}

/// Pointwise conversion of a transmittance spectrum.
pub fn spectrum_to_absorption(
    s: &Spectrum,
    geom: &SampleGeometry,
    mode: ConversionMode,
    refl: &ReflectanceModel,
) -> Result<AbsorptionSpectrum> {
    if s.kind() != SpectrumKind::Transmittance {
        return Err(Error::invalid("spectrum_to_absorption expects a transmittance spectrum"));
    }
    let d = geom.thickness_cm();
    let mut values = Vec::with_capacity(s.len());
    let mut clamped_nm = Vec::new();
    for (w, t) in s.iter() {
        let at = |e: Error| Error::AtWavelength {
            wavelength_nm: w,
            source: Box::new(e),
        };
        let a = match mode {
            ConversionMode::IntegratingSphere => {
                let (a, clamped) = integrating_with_flag(t, d, refl.r_total()).map_err(at)?;
                if clamped {
                    clamped_nm.push(w);
                }
                a
            }
            ConversionMode::Simple => absorption_coefficient_simple(t, d).map_err(at)?,
        };
        values.push(a);
    }
    Ok(AbsorptionSpectrum {
        spectrum: Spectrum::new(s.grid().clone(), values, SpectrumKind::AbsorptionCoefficient)?,
        clamped_nm,
    })
}

/// Band-averaged absorption: trapezoidal integral over `[lo, hi]` (clipped to
/// the grid, edges linearly interpolated) divided by the clipped width.
pub fn band_average(s: &Spectrum, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::invalid(format!("band requires lo < hi, got [{lo}, {hi}]")));
    }
    let (integral, width) = numeric::integrate_window(s.wavelengths(), s.values(), lo, hi).ok_or_else(|| {
        Error::invalid(format!(
            "band [{lo}, {hi}] nm does not overlap grid [{}, {}] nm",
            s.grid().first(),
            s.grid().last()
        ))
    })?;
    Ok(integral / width)
}
