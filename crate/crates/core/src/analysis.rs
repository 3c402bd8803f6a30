//! Cross-sample correlations and treatment-stage comparisons.

use serde::Serialize;

use crate::absorption::band_average;
use crate::birefringence::{DeltaNMap, PixelGrid};
use crate::decomposition::{fit_components, residual_features, Coefficients, ComponentModel, FeatureReport};
use crate::error::{Error, Result};
use crate::numeric;
use crate::types::{check_stage_order, Spectrum, StageLabel, TreatmentStage};

/// Band used for the ~700 nm figure of merit.
pub const FOM_BAND_NM: (f64, f64) = (680.0, 760.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationPoint {
    pub sample_id: String,
    pub p1_ppm: f64,
    /// Band-average absorption (cm⁻¹) or mean Δn.
    pub y: f64,
    pub y_err: Option<f64>,
}

impl CorrelationPoint {
    pub fn new(sample_id: impl Into<String>, p1_ppm: f64, y: f64) -> Self {
        Self {
            sample_id: sample_id.into(),
            p1_ppm,
            y,
            y_err: None,
        }
    }

    pub fn with_err(mut self, y_err: f64) -> Self {
        self.y_err = Some(y_err);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitWeighting {
    #[default]
    Unweighted,
    /// `1/σ²` weights in log space, `σ = y_err / (y ln 10)`.
    InverseVariance,
}

/// `y = a · p1^b`, fitted in log10-log10 space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    /// Coefficient of determination of the log-log line.
    pub r2: f64,
    pub n_points: usize,
    pub weighting: FitWeighting,
}

impl PowerLawFit {
    pub fn predict(&self, p1_ppm: f64) -> f64 {
        self.a * p1_ppm.powf(self.b)
    }
}

pub fn power_law_fit(points: &[CorrelationPoint]) -> Result<PowerLawFit> {
    power_law_fit_with(points, FitWeighting::Unweighted)
}

pub fn power_law_fit_with(points: &[CorrelationPoint], weighting: FitWeighting) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::invalid(format!("power-law fit needs at least 2 points, got {}", points.len())));
    }
    for p in points {
        if !(p.p1_ppm > 0.0 && p.y > 0.0) || !p.p1_ppm.is_finite() || !p.y.is_finite() {
            return Err(Error::invalid(format!(
                "sample {}: log-log fit needs positive values (p1 {}, y {})",
                p.sample_id, p.p1_ppm, p.y
            )));
        }
    }
    let lx: Vec<f64> = points.iter().map(|p| p.p1_ppm.log10()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.y.log10()).collect();
    let weights = match weighting {
        FitWeighting::Unweighted => None,
        FitWeighting::InverseVariance => Some(
            points
                .iter()
                .map(|p| match p.y_err {
                    Some(e) if e > 0.0 => {
                        let sigma = e / (p.y * std::f64::consts::LN_10);
                        Ok(1.0 / (sigma * sigma))
                    }
                    _ => Err(Error::invalid(format!(
                        "sample {}: weighted fit needs a positive metric_err",
                        p.sample_id
                    ))),
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
    };
    let (intercept, slope) = numeric::weighted_linear_fit(&lx, &ly, weights.as_deref())
        .ok_or_else(|| Error::invalid("power-law fit needs at least two distinct P1 values"))?;

    let w = |i: usize| weights.as_ref().map_or(1.0, |w| w[i]);
    let sw: f64 = (0..ly.len()).map(w).sum();
    let mean = (0..ly.len()).map(|i| w(i) * ly[i]).sum::<f64>() / sw;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..ly.len() {
        ss_res += w(i) * (ly[i] - (intercept + slope * lx[i])).powi(2);
        ss_tot += w(i) * (ly[i] - mean).powi(2);
    }
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).min(1.0) } else { 1.0 };
    Ok(PowerLawFit {
        a: 10f64.powf(intercept),
        b: slope,
        r2,
        n_points: points.len(),
        weighting,
    })
}

/// Super-linear means exponent strictly above 1.
pub fn superlinear_flag(fit: &PowerLawFit) -> bool {
    fit.b > 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicTrend {
    pub spearman_rho: f64,
    pub decreasing: bool,
    pub n_points: usize,
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation of `y` against P1. A constant series has
/// `rho = 0`.
pub fn monotonic_trend(points: &[CorrelationPoint]) -> Result<MonotonicTrend> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("trend needs at least 3 points, got {}", points.len())));
    }
    let rx = average_ranks(&points.iter().map(|p| p.p1_ppm).collect::<Vec<_>>());
    let ry = average_ranks(&points.iter().map(|p| p.y).collect::<Vec<_>>());
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let rho = if sxx > 0.0 && syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    Ok(MonotonicTrend {
        spearman_rho: rho,
        decreasing: rho < 0.0,
        n_points: points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverIrradiationThresholds {
    /// Minimum GR1 residual integral at the irradiated stage, cm⁻¹·nm.
    pub gr1_min: f64,
    /// Minimum excess of final over as-grown 680-760 nm absorption, cm⁻¹.
    pub residual_700_min: f64,
}

impl Default for OverIrradiationThresholds {
    fn default() -> Self {
        Self {
            gr1_min: 0.5,
            residual_700_min: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageMetrics {
    pub stage: TreatmentStage,
    pub band_avg_680_760: f64,
    pub features: FeatureReport,
    pub coefficients: Coefficients,
}

/// `later - earlier` for consecutive stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageDelta {
    pub from: StageLabel,
    pub to: StageLabel,
    pub band_avg_680_760: f64,
    pub gr1_metric: Option<f64>,
    pub nv_band_metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageComparison {
    pub stages: Vec<StageMetrics>,
    pub deltas: Vec<StageDelta>,
    /// Present when an irradiated stage exists.
    pub over_irradiated: Option<bool>,
    /// Present when both as-grown and annealed stages exist: annealing brought
    /// the 680-760 nm absorption back within `residual_700_min` of as-grown.
    pub anneal_recovered: Option<bool>,
    pub thresholds: OverIrradiationThresholds,
}

impl StageComparison {
    pub fn stage(&self, label: StageLabel) -> Option<&StageMetrics> {
        self.stages.iter().find(|s| s.stage.label == label)
    }
}

fn opt_sub(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

/// Band average and residual features per stage, plus consecutive deltas.
pub fn compare_stages(
    records: &[(TreatmentStage, Spectrum)],
    model: &ComponentModel,
    thresholds: &OverIrradiationThresholds,
) -> Result<StageComparison> {
    if records.len() < 2 {
        return Err(Error::invalid("stage comparison needs at least two stages"));
    }
    let labels: Vec<StageLabel> = records.iter().map(|(s, _)| s.label).collect();
    check_stage_order(&labels)?;

    let mut stages = Vec::with_capacity(records.len());
    for (stage, spectrum) in records {
        stage.checked()?;
        let band = band_average(spectrum, FOM_BAND_NM.0, FOM_BAND_NM.1)?;
        let fit = fit_components(spectrum, model)?;
        stages.push(StageMetrics {
            stage: *stage,
            band_avg_680_760: band,
            features: residual_features(&fit),
            coefficients: fit.coefficients,
        });
    }
    let deltas = stages
        .windows(2)
        .map(|w| StageDelta {
            from: w[0].stage.label,
            to: w[1].stage.label,
            band_avg_680_760: w[1].band_avg_680_760 - w[0].band_avg_680_760,
            gr1_metric: opt_sub(w[1].features.gr1_metric, w[0].features.gr1_metric),
            nv_band_metric: opt_sub(w[1].features.nv_band_metric, w[0].features.nv_band_metric),
        })
        .collect();

    let mut cmp = StageComparison {
        stages,
        deltas,
        over_irradiated: None,
        anneal_recovered: None,
        thresholds: *thresholds,
    };
    if cmp.stage(StageLabel::Irradiated).is_some() {
        cmp.over_irradiated = Some(over_irradiation_flag(&cmp, thresholds)?);
    }
    if let (Some(g), Some(a)) = (cmp.stage(StageLabel::AsGrown), cmp.stage(StageLabel::Annealed)) {
        cmp.anneal_recovered = Some(a.band_avg_680_760 - g.band_avg_680_760 <= thresholds.residual_700_min);
    }
    Ok(cmp)
}

/// True when the irradiated GR1 signature exceeds `gr1_min` and, if an
/// annealed stage follows (and as-grown is known), the final 680-760 nm
/// absorption still exceeds as-grown by more than `residual_700_min`.
pub fn over_irradiation_flag(cmp: &StageComparison, thresholds: &OverIrradiationThresholds) -> Result<bool> {
    let irr = cmp
        .stage(StageLabel::Irradiated)
        .ok_or_else(|| Error::invalid("over-irradiation check needs an irradiated stage"))?;
    let gr1_high = matches!(irr.features.gr1_metric, Some(g) if g > thresholds.gr1_min);
    let persists = match (cmp.stage(StageLabel::AsGrown), cmp.stage(StageLabel::Annealed)) {
        (Some(g), Some(a)) => a.band_avg_680_760 - g.band_avg_680_760 > thresholds.residual_700_min,
        _ => true,
    };
    Ok(gr1_high && persists)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapPairComparison {
    /// Mean of `after - before` over jointly valid pixels.
    pub mean_delta: f64,
    /// Population standard deviation of `after - before`.
    pub std_delta: f64,
    pub reduced: bool,
    pub jointly_valid: usize,
}

/// Pixelwise comparison of two birefringence maps of identical shape; no
/// registration is attempted.
pub fn map_pair_compare(before: &DeltaNMap, after: &DeltaNMap) -> Result<MapPairComparison> {
    let (b, a): (&PixelGrid, &PixelGrid) = (before.grid(), after.grid());
    if !b.same_shape(a) {
        return Err(Error::invalid(format!(
            "map shapes differ: {}x{} vs {}x{}",
            b.width(),
            b.height(),
            a.width(),
            a.height()
        )));
    }
    let diffs: Vec<f64> = (0..b.values().len())
        .filter(|&i| b.mask()[i] && a.mask()[i])
        .map(|i| a.values()[i] - b.values()[i])
        .collect();
    let (mean, std) =
        numeric::mean_std(&diffs).ok_or_else(|| Error::invalid("maps share no valid pixels"))?;
    Ok(MapPairComparison {
        mean_delta: mean,
        std_delta: std,
        reduced: mean < 0.0,
        jointly_valid: diffs.len(),
    })
}
