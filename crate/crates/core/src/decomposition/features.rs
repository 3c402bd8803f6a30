use serde::Serialize;

use super::DecompositionResult;
use crate::numeric;

/// Window of the rising absorption feature, nm.
pub const RISE_WINDOW_NM: (f64, f64) = (650.0, 800.0);
/// Broad GR1 (neutral vacancy) band, nm.
pub const GR1_WINDOW_NM: (f64, f64) = (500.0, 750.0);
/// NV absorption band, nm.
pub const NV_WINDOW_NM: (f64, f64) = (400.0, 650.0);

/// Defect signatures left in the residual. `None` means the window does not
/// overlap the residual grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureReport {
    /// OLS slope over 650-800 nm, cm⁻¹/nm.
    pub rise_650_800_slope: Option<f64>,
    /// Residual integral over 500-750 nm, cm⁻¹·nm.
    pub gr1_metric: Option<f64>,
    /// Residual integral over 400-650 nm, cm⁻¹·nm.
    pub nv_band_metric: Option<f64>,
}

pub fn residual_features(result: &DecompositionResult) -> FeatureReport {
    let xs = result.residual.wavelengths();
    let ys = result.residual.values();

    let (rx, ry): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(w, _)| **w >= RISE_WINDOW_NM.0 && **w <= RISE_WINDOW_NM.1)
        .map(|(w, y)| (*w, *y))
        .unzip();
    let rise = numeric::linear_fit(&rx, &ry).map(|(_, slope)| slope);

    let integral = |(lo, hi): (f64, f64)| numeric::integrate_window(xs, ys, lo, hi).map(|(v, _)| v);

    FeatureReport {
        rise_650_800_slope: rise,
        gr1_metric: integral(GR1_WINDOW_NM),
        nv_band_metric: integral(NV_WINDOW_NM),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::Coefficients;
    use crate::types::{Spectrum, SpectrumKind, WavelengthGrid};
    use approx::assert_relative_eq;

    fn result_with_residual(grid: WavelengthGrid, f: impl Fn(f64) -> f64) -> DecompositionResult {
        let v = grid.iter().map(f).collect();
        DecompositionResult {
            coefficients: Coefficients::five(0.0, 0.0, 0.0, 0.0, 0.0),
            residual: Spectrum::new(grid, v, SpectrumKind::Residual).unwrap(),
            rms_residual: 0.0,
            converged: true,
            condition_number: 1.0,
            refined_shape: None,
        }
    }

    #[test]
    fn zero_residual_gives_zero_metrics() {
        let r = result_with_residual(WavelengthGrid::uniform(220.0, 800.0, 1.0).unwrap(), |_| 0.0);
        let f = residual_features(&r);
        assert_eq!(f.rise_650_800_slope, Some(0.0));
        assert_eq!(f.gr1_metric, Some(0.0));
        assert_eq!(f.nv_band_metric, Some(0.0));
    }

    #[test]
    fn linear_rise_slope() {
        let r = result_with_residual(WavelengthGrid::uniform(650.0, 800.0, 2.0).unwrap(), |w| 0.01 * (w - 650.0));
        assert_relative_eq!(residual_features(&r).rise_650_800_slope.unwrap(), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_bump_area() {
        // bump well inside the GR1 window: area = amp · fwhm · sqrt(π / (4 ln 2))
        let (amp, center, fwhm) = (0.3, 625.0, 40.0);
        let bump = |w: f64| amp * (-4.0 * std::f64::consts::LN_2 * (w - center).powi(2) / (fwhm * fwhm)).exp();
        let r = result_with_residual(WavelengthGrid::uniform(220.0, 800.0, 0.25).unwrap(), bump);
        let got = residual_features(&r).gr1_metric.unwrap();

        // oracle: fine midpoint quadrature of the analytic bump over 500-750 nm
        let n = 1_000_000;
        let h = 250.0 / n as f64;
        let oracle: f64 = (0..n).map(|i| bump(500.0 + (i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert_relative_eq!(got, oracle, max_relative = 1e-6);
        let analytic = amp * fwhm * (std::f64::consts::PI / (4.0 * std::f64::consts::LN_2)).sqrt();
        assert_relative_eq!(oracle, analytic, max_relative = 1e-6);
    }

    #[test]
    fn windows_outside_grid_are_absent() {
        let r = result_with_residual(WavelengthGrid::uniform(220.0, 390.0, 1.0).unwrap(), |_| 1.0);
        let f = residual_features(&r);
        assert_eq!(f.rise_650_800_slope, None);
        assert_eq!(f.gr1_metric, None);
        assert_eq!(f.nv_band_metric, None);
    }

    #[test]
    fn windows_are_clipped() {
        let r = result_with_residual(WavelengthGrid::uniform(220.0, 700.0, 1.0).unwrap(), |_| 1.0);
        let f = residual_features(&r);
        assert_relative_eq!(f.gr1_metric.unwrap(), 200.0, max_relative = 1e-12);
    }
}
