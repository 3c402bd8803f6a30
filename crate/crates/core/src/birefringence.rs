//! Retardation maps, birefringence maps and polarization-loss estimates.
//!
//! `Δn = Γ/d` per pixel, with `Γ` the measured retardation and `d` the plate
//! average thickness in the same length unit. Pixels outside the sample are
//! carried in an explicit validity mask; their stored value is irrelevant.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::SampleGeometry;

/// Mean birefringence below which a plate counts as ultra-low.
pub const ULTRA_LOW_THRESHOLD: f64 = 1e-5;

/// Row-major 2-D grid with a per-pixel validity mask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl PixelGrid {
    /// Invalid pixels are stored as 0 so that equal maps compare equal.
    pub fn new(width: usize, height: usize, mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("map dimensions must be positive, got {width}x{height}")));
        }
        if values.len() != width * height || mask.len() != width * height {
            return Err(Error::invalid(format!(
                "{width}x{height} map needs {} values and mask entries, got {} and {}",
                width * height,
                values.len(),
                mask.len()
            )));
        }
        for (v, &ok) in values.iter_mut().zip(&mask) {
            if !ok {
                *v = 0.0;
            }
        }
        Ok(Self {
            width,
            height,
            values,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Value at `(row, col)`, `None` for masked pixels.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.width + col;
        self.mask[i].then(|| self.values[i])
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| *v)
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn same_shape(&self, other: &PixelGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn map_valid(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { f(v) } else { 0.0 })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            values,
            mask: self.mask.clone(),
        }
    }
}

/// Measured retardation `Γ` in nm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetardationMap {
    pub pixel_pitch_um: f64,
    grid: PixelGrid,
}

impl RetardationMap {
    pub fn new(grid: PixelGrid, pixel_pitch_um: f64) -> Result<Self> {
        if !(pixel_pitch_um > 0.0) || !pixel_pitch_um.is_finite() {
            return Err(Error::invalid(format!("pixel pitch must be positive, got {pixel_pitch_um}")));
        }
        if grid.valid_count() == 0 {
            return Err(Error::invalid("retardation map has no valid pixels"));
        }
        for (i, v) in grid.values.iter().enumerate() {
            if grid.mask[i] && !(v.is_finite() && *v >= 0.0) {
                return Err(Error::invalid(format!(
                    "negative or non-finite retardation {v} at row {}, column {}",
                    i / grid.width,
                    i % grid.width
                )));
            }
        }
        Ok(Self { pixel_pitch_um, grid })
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }
}

/// Birefringence `Δn`, dimensionless.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaNMap {
    pub pixel_pitch_um: f64,
    grid: PixelGrid,
}

impl DeltaNMap {
    pub fn new(grid: PixelGrid, pixel_pitch_um: f64) -> Result<Self> {
        if grid.valid_values().any(|v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("birefringence must be finite and non-negative"));
        }
        Ok(Self { pixel_pitch_um, grid })
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }
}

/// Per-pixel worst-case single-pass loss fraction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossMap {
    pub wavelength_nm: f64,
    grid: PixelGrid,
}

impl LossMap {
    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub valid_fraction: f64,
}

/// `Δn = Γ/d` per valid pixel, using the plate-average thickness.
pub fn delta_n_map(m: &RetardationMap, geom: &SampleGeometry) -> DeltaNMap {
    let d_nm = geom.thickness_nm();
    DeltaNMap {
        pixel_pitch_um: m.pixel_pitch_um,
        grid: m.grid.map_valid(|gamma| gamma / d_nm),
    }
}

/// Statistics over valid pixels of any grid.
///
/// Values are summed in sorted order so the result does not depend on pixel
/// order.
pub fn grid_stats(grid: &PixelGrid) -> Result<MapStats> {
    let mut v: Vec<f64> = grid.valid_values().collect();
    if v.is_empty() {
        return Err(Error::invalid("map has no valid pixels"));
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let min = v[0];
    let max = v[v.len() - 1];
    let mean = (v.iter().sum::<f64>() / n).clamp(min, max);
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    let std = (dev.iter().sum::<f64>() / n).sqrt();
    Ok(MapStats {
        mean,
        std,
        min,
        max,
        valid_fraction: v.len() as f64 / grid.values.len() as f64,
    })
}

pub fn map_stats(m: &DeltaNMap) -> Result<MapStats> {
    grid_stats(&m.grid)
}

/// Ultra-low birefringence: mean `Δn` strictly below 1e-5.
pub fn classify_ultra_low(stats: &MapStats) -> bool {
    stats.mean < ULTRA_LOW_THRESHOLD
}

/// Worst-case single-pass intensity loss `sin²(π Δn d / λ)`.
///
/// Assumes the least favourable orientation of the birefringent axis and that
/// all light rotated out of the input polarization is lost; an upper bound.
pub fn worst_case_loss(delta_n: f64, d_cm: f64, wavelength_nm: f64) -> Result<f64> {
    if !(delta_n >= 0.0) || !delta_n.is_finite() {
        return Err(Error::domain(format!("birefringence must be non-negative, got {delta_n}")));
    }
    if !(d_cm > 0.0) || !(wavelength_nm > 0.0) {
        return Err(Error::domain(format!(
            "thickness and wavelength must be positive (got {d_cm} cm, {wavelength_nm} nm)"
        )));
    }
    let d_nm = d_cm * 1e7;
    Ok((PI * delta_n * d_nm / wavelength_nm).sin().powi(2))
}

/// Pointwise [`worst_case_loss`] over a birefringence map.
pub fn loss_map(m: &DeltaNMap, geom: &SampleGeometry, wavelength_nm: f64) -> Result<LossMap> {
    let d_cm = geom.thickness_cm();
    // validates the scalar preconditions once
    worst_case_loss(0.0, d_cm, wavelength_nm)?;
    Ok(LossMap {
        wavelength_nm,
        grid: m
            .grid
            .map_valid(|dn| worst_case_loss(dn, d_cm, wavelength_nm).expect("validated inputs")),
    })
}
