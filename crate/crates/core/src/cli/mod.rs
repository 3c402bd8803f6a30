//! Command-line front end.
//!
//! Every subcommand writes a JSON report (to `--report <path>` or stdout)
//! holding the input hashes, the effective settings and the results, and can
//! draw an SVG with `--plot <path>`. Commands that take several input files
//! process them in parallel; results keep the input order and equal what
//! one-file runs produce.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 numerical failure,
//! 4 I/O error.

mod settings;
mod synth_spec;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::absorption::{band_average, spectrum_to_absorption, ConversionMode};
use crate::analysis::{
    compare_stages, map_pair_compare, monotonic_trend, power_law_fit_with, superlinear_flag, FitWeighting,
    MapPairComparison, MonotonicTrend, PowerLawFit, StageComparison, FOM_BAND_NM,
};
use crate::birefringence::{classify_ultra_low, delta_n_map, grid_stats, loss_map, map_stats, MapStats, PixelGrid};
use crate::decomposition::{
    fit_components, p1_concentration, refine_fit, residual_features, DecompositionResult, FeatureReport, RefineBounds,
};
use crate::error::{Error, Result};
use crate::io::{
    parse_correlation_str, parse_map_str, parse_pair, parse_spectrum_str, read_bytes, write_map, write_report,
    write_spectrum, emit_plot, FileKind, InputRecord, KeyValues, Plot, ReportDocument, Series,
};
use crate::synth::{synth_retardation_map, MapSynthSpec, SynthSpec};
use crate::types::{SampleGeometry, Spectrum, StageLabel, TreatmentStage};

pub use settings::{ConversionSettings, ModelSettings};
use settings::{load_config, refine_bounds, thresholds};

#[derive(Debug, Parser)]
#[command(name = "diamond-optics", version, about = "Optical characterization of CVD diamond plates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat `key = value` defaults, overridden by flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Write an SVG plot here.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transmittance to absorption coefficient, with a band average.
    Absorb {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Conversion model: `sphere` (default) or `simple`.
        #[arg(long)]
        mode: Option<ConversionMode>,
        /// Total reflectance R_t.
        #[arg(long)]
        rt: Option<f64>,
        /// Averaging band `lo,hi` in nm.
        #[arg(long)]
        band: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Five-component decomposition and residual features.
    Decompose {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Model settings file (same format as --config, applied after it).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Refine band centres and widths after the linear fit.
        #[arg(long)]
        refine: bool,
        /// P1 calibration factor, ppm·cm.
        #[arg(long)]
        kappa: Option<f64>,
        /// Exclude the 400-650 nm NV side band from the fit.
        #[arg(long)]
        nv_mask: bool,
        /// Pure-diamond reference absorption file used as the offset component.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Conversion model: `sphere` (default) or `simple`.
        #[arg(long)]
        mode: Option<ConversionMode>,
        /// Total reflectance R_t.
        #[arg(long)]
        rt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Birefringence statistics, loss estimate and ultra-low classification.
    Biref {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Plate thickness in µm.
        #[arg(long)]
        thickness_um: Option<f64>,
        /// Wavelength for the loss estimate, nm (default 700).
        #[arg(long)]
        lambda_nm: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare spectra of one sample across treatment stages.
    Stages {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Stage of each file, e.g. `grown,irr,ann`.
        #[arg(long)]
        labels: Option<String>,
        /// Electron energy, MeV.
        #[arg(long)]
        energy_mev: Option<f64>,
        /// Electron fluence, e/cm².
        #[arg(long)]
        fluence: Option<f64>,
        /// Anneal temperature, °C.
        #[arg(long)]
        anneal_temp_c: Option<f64>,
        /// Anneal duration, hours.
        #[arg(long)]
        anneal_hours: Option<f64>,
        /// GR1 residual threshold for the over-irradiation flag, cm⁻¹·nm.
        #[arg(long)]
        gr1_min: Option<f64>,
        /// Persistent 680-760 nm excess threshold, cm⁻¹.
        #[arg(long)]
        residual_700_min: Option<f64>,
        /// Exclude the 400-650 nm NV side band from the fit.
        #[arg(long)]
        nv_mask: bool,
        /// Conversion model: `sphere` (default) or `simple`.
        #[arg(long)]
        mode: Option<ConversionMode>,
        /// Total reflectance R_t.
        #[arg(long)]
        rt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Power-law fit (or rank trend) of a metric against P1.
    Correlate {
        file: PathBuf,
        /// Spearman trend instead of a power-law fit.
        #[arg(long)]
        trend: bool,
        /// Weight points by `metric_err`.
        #[arg(long)]
        weighted: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Generate synthetic data files.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Pixelwise before/after comparison of two retardation maps.
    CompareMaps {
        before: PathBuf,
        after: PathBuf,
        /// Plate thickness in µm.
        #[arg(long)]
        thickness_um: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    Spectrum {
        /// Synthesis parameters, `key = value` per line.
        spec: PathBuf,
        /// Output data file.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    Map {
        /// Synthesis parameters, `key = value` per line.
        spec: PathBuf,
        /// Output data file.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// What a command produced. `failure` is raised after the report is written.
pub struct Outcome {
    pub report: ReportDocument,
    pub plot: Option<Plot>,
    pub failure: Option<Error>,
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let (common, outcome) = execute(cli.command)?;
    match &common.report {
        Some(path) => write_report(&outcome.report, path)?,
        None => print!("{}", outcome.report.to_json()?),
    }
    if let (Some(path), Some(plot)) = (&common.plot, &outcome.plot) {
        emit_plot(plot, path)?;
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Runs a command without touching stdout; the caller decides where output goes.
pub fn execute(command: Command) -> Result<(Common, Outcome)> {
    match command {
        Command::Absorb {
            files,
            mode,
            rt,
            band,
            common,
        } => {
            let kv = load_config(common.config.as_deref())?;
            let out = absorb(&files, &kv, mode, rt, band.as_deref())?;
            Ok((common, out))
        }
        Command::Decompose {
            files,
            model,
            refine,
            kappa,
            nv_mask,
            reference,
            mode,
            rt,
            common,
        } => {
            let kv = load_config(common.config.as_deref())?;
            let model_kv = load_config(model.as_deref())?;
            let opts = DecomposeFlags {
                refine,
                kappa,
                nv_mask,
                reference,
                mode,
                rt,
            };
            let out = decompose(&files, &kv, &model_kv, &opts)?;
            Ok((common, out))
        }
        Command::Biref {
            files,
            thickness_um,
            lambda_nm,
            common,
        } => {
            let kv = load_config(common.config.as_deref())?;
            let out = biref(&files, &kv, thickness_um, lambda_nm)?;
            Ok((common, out))
        }
        Command::Stages {
            files,
            labels,
            energy_mev,
            fluence,
            anneal_temp_c,
            anneal_hours,
            gr1_min,
            residual_700_min,
            nv_mask,
            mode,
            rt,
            common,
        } => {
            let kv = load_config(common.config.as_deref())?;
            let flags = StageFlags {
                labels,
                energy_mev,
                fluence,
                anneal_temp_c,
                anneal_hours,
                gr1_min,
                residual_700_min,
                nv_mask,
                mode,
                rt,
            };
            let out = stages(&files, &kv, &flags)?;
            Ok((common, out))
        }
        Command::Correlate {
            file,
            trend,
            weighted,
            common,
        } => {
            let kv = load_config(common.config.as_deref())?;
            let out = correlate(&file, &kv, trend, weighted)?;
            Ok((common, out))
        }
        Command::Synth { kind } => match kind {
            SynthKind::Spectrum { spec, out, common } => Ok((common, synth_spectrum_cmd(&spec, &out)?)),
            SynthKind::Map { spec, out, common } => Ok((common, synth_map_cmd(&spec, &out)?)),
        },
        Command::CompareMaps {
            before,
            after,
            thickness_um,
            common,
        } => {
            let kv = load_config(common.config.as_deref())?;
            let out = compare_maps(&before, &after, &kv, thickness_um)?;
            Ok((common, out))
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Reads a file, returning its text and provenance record.
fn read_input(path: &Path) -> Result<(String, InputRecord)> {
    let bytes = read_bytes(path)?;
    let record = InputRecord::from_bytes(display(path), &bytes);
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        path: display(path),
        line: 0,
        message: "file is not valid UTF-8".into(),
    })?;
    Ok((text, record))
}

/// Absorption spectrum of a file, converting transmittance when needed.
struct LoadedSpectrum {
    input: InputRecord,
    absorption: Spectrum,
    thickness_um: Option<f64>,
    clamped_nm: Vec<f64>,
}

fn load_absorption(path: &Path, conv: &ConversionSettings) -> Result<LoadedSpectrum> {
    let (text, input) = read_input(path)?;
    let file = parse_spectrum_str(&text, &display(path))?;
    let thickness_um = file.geometry.map(|g| g.thickness_um());
    let (absorption, clamped_nm) = if file.kind == FileKind::AbsorptionPerCm {
        (file.spectrum, Vec::new())
    } else {
        let geom = file.require_geometry()?;
        let a = spectrum_to_absorption(&file.spectrum, &geom, conv.mode, &conv.reflectance)?;
        (a.spectrum, a.clamped_nm)
    };
    Ok(LoadedSpectrum {
        input,
        absorption,
        thickness_um,
        clamped_nm,
    })
}

/// Runs `f` over `files` in parallel; the first error in input order wins.
fn batch<T: Send>(files: &[PathBuf], f: impl Fn(&Path) -> Result<T> + Sync) -> Result<Vec<T>> {
    files.par_iter().map(|p| f(p)).collect::<Vec<_>>().into_iter().collect()
}

fn spectrum_points(s: &Spectrum) -> Vec<(f64, f64)> {
    s.iter().collect()
}

#[derive(Serialize)]
struct AbsorbConfig {
    conversion: ConversionSettings,
    band_nm: (f64, f64),
}

#[derive(Serialize)]
struct AbsorbResult {
    file: String,
    thickness_um: Option<f64>,
    band_average_cm1: f64,
    /// Points in the superphysical tolerance band, clamped to zero absorption.
    clamped_nm: Vec<f64>,
    absorption: Spectrum,
}

fn absorb(files: &[PathBuf], kv: &KeyValues, mode: Option<ConversionMode>, rt: Option<f64>, band: Option<&str>) -> Result<Outcome> {
    let conversion = ConversionSettings::resolve(kv, mode, rt)?;
    let band_nm = match band {
        Some(b) => parse_pair(b)?,
        None => kv.get_pair("band")?.unwrap_or(FOM_BAND_NM),
    };
    let loaded = batch(files, |p| load_absorption(p, &conversion))?;
    let mut inputs = Vec::new();
    let mut results = Vec::new();
    let mut plot = Plot::new("Absorption coefficient", "wavelength (nm)", "absorption (cm^-1)");
    for (path, l) in files.iter().zip(loaded) {
        plot = plot.with_series(Series::line(display(path), spectrum_points(&l.absorption)));
        results.push(AbsorbResult {
            file: display(path),
            thickness_um: l.thickness_um,
            band_average_cm1: band_average(&l.absorption, band_nm.0, band_nm.1)?,
            clamped_nm: l.clamped_nm,
            absorption: l.absorption,
        });
        inputs.push(l.input);
    }
    Ok(Outcome {
        report: ReportDocument::new("absorb", inputs, AbsorbConfig { conversion, band_nm }, results)?,
        plot: Some(plot),
        failure: None,
    })
}

struct DecomposeFlags {
    refine: bool,
    kappa: Option<f64>,
    nv_mask: bool,
    reference: Option<PathBuf>,
    mode: Option<ConversionMode>,
    rt: Option<f64>,
}

#[derive(Serialize)]
struct DecomposeConfig<'a> {
    conversion: ConversionSettings,
    model: &'a ModelSettings,
    component_names: Vec<String>,
    refine: bool,
    refine_bounds: Option<RefineBounds>,
    kappa_ppm_cm: Option<f64>,
}

#[derive(Serialize)]
struct DecomposeResult {
    file: String,
    fit: DecompositionResult,
    features: FeatureReport,
    p1_ppm: Option<f64>,
}

fn decompose(files: &[PathBuf], kv: &KeyValues, model_kv: &KeyValues, flags: &DecomposeFlags) -> Result<Outcome> {
    let conversion = ConversionSettings::resolve(kv, flags.mode, flags.rt)?;
    let model = ModelSettings::resolve(&[kv, model_kv], flags.nv_mask, flags.reference.as_deref())?;
    let refine = flags.refine || kv.get::<bool>("refine")?.unwrap_or(false) || model_kv.get::<bool>("refine")?.unwrap_or(false);
    let bounds = refine_bounds(kv)?;
    let kappa = match flags.kappa {
        Some(k) => Some(k),
        None => kv.get::<f64>("kappa")?,
    };

    let fitted = batch(files, |p| {
        let l = load_absorption(p, &conversion)?;
        let mut fit = fit_components(&l.absorption, &model.model)?;
        if refine {
            fit = refine_fit(&l.absorption, &model.model, &fit, &bounds)?;
        }
        let p1 = kappa.map(|k| p1_concentration(fit.coefficients.bands[0], k)).transpose()?;
        Ok((l, fit, p1))
    })?;

    let mut inputs: Vec<InputRecord> = model.reference_input.iter().cloned().collect();
    let mut results = Vec::new();
    let mut failure = None;
    let mut plot = None;
    for (path, (l, fit, p1)) in files.iter().zip(fitted) {
        if !fit.converged && failure.is_none() {
            failure = Some(Error::Numerical(format!("refinement of {} did not converge", display(path))));
        }
        if plot.is_none() {
            let fit_model = match &fit.refined_shape {
                Some(r) => r.apply_to(&model.model),
                None => model.model.clone(),
            };
            let grid = fit.residual.grid();
            let modelled = fit_model.evaluate(&fit.coefficients, grid)?;
            let data: Vec<(f64, f64)> = grid.iter().zip(fit.residual.values()).zip(&modelled).map(|((w, r), m)| (w, m + r)).collect();
            plot = Some(
                Plot::new(format!("Decomposition of {}", display(path)), "wavelength (nm)", "absorption (cm^-1)")
                    .with_series(Series::line("measured", data))
                    .with_series(Series::line("model", grid.iter().zip(modelled).collect()))
                    .with_series(Series::line("residual", spectrum_points(&fit.residual))),
            );
        }
        inputs.push(l.input);
        results.push(DecomposeResult {
            file: display(path),
            features: residual_features(&fit),
            fit,
            p1_ppm: p1,
        });
    }
    let config = DecomposeConfig {
        conversion,
        component_names: model.model.component_names(),
        model: &model,
        refine,
        refine_bounds: refine.then_some(bounds),
        kappa_ppm_cm: kappa,
    };
    Ok(Outcome {
        report: ReportDocument::new("decompose", inputs, config, results)?,
        plot,
        failure,
    })
}

#[derive(Serialize)]
struct BirefConfig {
    thickness_um: f64,
    lambda_nm: f64,
    ultra_low_threshold: f64,
}

#[derive(Serialize)]
struct BirefResult {
    file: String,
    delta_n: MapStats,
    loss: MapStats,
    ultra_low: bool,
}

fn thickness(kv: &KeyValues, flag: Option<f64>) -> Result<SampleGeometry> {
    let t = flag
        .or(kv.get::<f64>("thickness_um")?)
        .ok_or_else(|| Error::invalid("--thickness-um is required"))?;
    SampleGeometry::new(t)
}

/// Equal-width histogram as (bin centre, count) pairs.
fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![(lo, values.len() as f64)];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    counts.iter().enumerate().map(|(i, &c)| (lo + (i as f64 + 0.5) * width, c as f64)).collect()
}

fn load_map(path: &Path) -> Result<(crate::birefringence::RetardationMap, InputRecord)> {
    let (text, input) = read_input(path)?;
    Ok((parse_map_str(&text, &display(path))?, input))
}

fn biref(files: &[PathBuf], kv: &KeyValues, thickness_um: Option<f64>, lambda_nm: Option<f64>) -> Result<Outcome> {
    let geom = thickness(kv, thickness_um)?;
    let lambda = lambda_nm.or(kv.get::<f64>("lambda_nm")?).unwrap_or(700.0);
    let done = batch(files, |p| {
        let (m, input) = load_map(p)?;
        let dn = delta_n_map(&m, &geom);
        let stats = map_stats(&dn)?;
        let loss = grid_stats(loss_map(&dn, &geom, lambda)?.grid())?;
        let values: Vec<f64> = dn.grid().valid_values().collect();
        Ok((input, stats, loss, values))
    })?;
    let mut inputs = Vec::new();
    let mut results = Vec::new();
    let mut plot = Plot::new("Birefringence distribution", "delta n", "pixels");
    for (path, (input, stats, loss, values)) in files.iter().zip(done) {
        plot = plot.with_series(Series::line(display(path), histogram(&values, 50)));
        inputs.push(input);
        results.push(BirefResult {
            file: display(path),
            ultra_low: classify_ultra_low(&stats),
            delta_n: stats,
            loss,
        });
    }
    let config = BirefConfig {
        thickness_um: geom.thickness_um(),
        lambda_nm: lambda,
        ultra_low_threshold: crate::birefringence::ULTRA_LOW_THRESHOLD,
    };
    Ok(Outcome {
        report: ReportDocument::new("biref", inputs, config, results)?,
        plot: Some(plot),
        failure: None,
    })
}

struct StageFlags {
    labels: Option<String>,
    energy_mev: Option<f64>,
    fluence: Option<f64>,
    anneal_temp_c: Option<f64>,
    anneal_hours: Option<f64>,
    gr1_min: Option<f64>,
    residual_700_min: Option<f64>,
    nv_mask: bool,
    mode: Option<ConversionMode>,
    rt: Option<f64>,
}

#[derive(Serialize)]
struct StagesConfig<'a> {
    conversion: ConversionSettings,
    model: &'a ModelSettings,
    band_nm: (f64, f64),
    stages: Vec<TreatmentStage>,
}

fn stages(files: &[PathBuf], kv: &KeyValues, f: &StageFlags) -> Result<Outcome> {
    let conversion = ConversionSettings::resolve(kv, f.mode, f.rt)?;
    let model = ModelSettings::resolve(&[kv], f.nv_mask, None)?;
    let th = thresholds(kv, f.gr1_min, f.residual_700_min)?;
    let labels_text = match &f.labels {
        Some(l) => l.clone(),
        None => kv
            .raw("labels")
            .map(str::to_string)
            .ok_or_else(|| Error::invalid("--labels is required"))?,
    };
    let labels: Vec<StageLabel> = labels_text.split(',').map(str::parse).collect::<Result<_>>()?;
    if labels.len() != files.len() {
        return Err(Error::invalid(format!("{} labels for {} files", labels.len(), files.len())));
    }
    let num = |flag: Option<f64>, key: &str| -> Result<Option<f64>> { Ok(flag.or(kv.get::<f64>(key)?)) };
    let (energy, fluence) = (num(f.energy_mev, "energy_mev")?, num(f.fluence, "fluence")?);
    let (temp, hours) = (num(f.anneal_temp_c, "anneal_temp_c")?, num(f.anneal_hours, "anneal_hours")?);
    let stage_list: Vec<TreatmentStage> = labels
        .iter()
        .map(|&label| {
            let need = |v: Option<f64>, flag: &str| {
                v.ok_or_else(|| Error::invalid(format!("{} stage needs --{flag}", label.as_str())))
            };
            match label {
                StageLabel::AsGrown => Ok(TreatmentStage::as_grown()),
                StageLabel::Irradiated => TreatmentStage::irradiated(need(energy, "energy-mev")?, need(fluence, "fluence")?),
                StageLabel::Annealed => TreatmentStage::annealed(need(temp, "anneal-temp-c")?, need(hours, "anneal-hours")?),
            }
        })
        .collect::<Result<_>>()?;

    let loaded = batch(files, |p| load_absorption(p, &conversion))?;
    let mut inputs = Vec::new();
    let mut records = Vec::new();
    let mut plot = Plot::new("Treatment stages", "wavelength (nm)", "absorption (cm^-1)");
    for (stage, l) in stage_list.iter().zip(loaded) {
        plot = plot.with_series(Series::line(stage.label.as_str(), spectrum_points(&l.absorption)));
        inputs.push(l.input);
        records.push((*stage, l.absorption));
    }
    let cmp: StageComparison = compare_stages(&records, &model.model, &th)?;
    let config = StagesConfig {
        conversion,
        model: &model,
        band_nm: FOM_BAND_NM,
        stages: stage_list,
    };
    #[derive(Serialize)]
    struct Echo<'a> {
        #[serde(flatten)]
        base: StagesConfig<'a>,
        thresholds: crate::analysis::OverIrradiationThresholds,
    }
    Ok(Outcome {
        report: ReportDocument::new("stages", inputs, Echo { base: config, thresholds: th }, cmp)?,
        plot: Some(plot),
        failure: None,
    })
}

#[derive(Serialize)]
#[serde(untagged)]
enum CorrelateResult {
    PowerLaw { fit: PowerLawFit, superlinear: bool },
    Trend { trend: MonotonicTrend },
}

fn correlate(file: &Path, kv: &KeyValues, trend: bool, weighted: bool) -> Result<Outcome> {
    let trend = trend || kv.get::<bool>("trend")?.unwrap_or(false);
    let weighted = weighted || kv.get::<bool>("weighted")?.unwrap_or(false);
    let (text, input) = read_input(file)?;
    let points = parse_correlation_str(&text, &display(file))?;
    let weighting = if weighted { FitWeighting::InverseVariance } else { FitWeighting::Unweighted };
    let data: Vec<(f64, f64)> = points.iter().map(|p| (p.p1_ppm, p.y)).collect();
    let mut plot = Plot::new("Metric against P1", "P1 (ppm)", "metric").with_series(Series::markers("samples", data));
    let result = if trend {
        CorrelateResult::Trend {
            trend: monotonic_trend(&points)?,
        }
    } else {
        let fit = power_law_fit_with(&points, weighting)?;
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.p1_ppm), b.max(p.p1_ppm)));
        let curve: Vec<(f64, f64)> = (0..=100)
            .map(|i| {
                let x = lo * (hi / lo).powf(i as f64 / 100.0);
                (x, fit.predict(x))
            })
            .collect();
        plot = plot.with_series(Series::line("power-law fit", curve)).log_x().log_y();
        CorrelateResult::PowerLaw {
            superlinear: superlinear_flag(&fit),
            fit,
        }
    };
    #[derive(Serialize)]
    struct Config {
        mode: &'static str,
        weighting: FitWeighting,
    }
    let config = Config {
        mode: if trend { "spearman_trend" } else { "power_law" },
        weighting,
    };
    Ok(Outcome {
        report: ReportDocument::new("correlate", vec![input], config, result)?,
        plot: Some(plot),
        failure: None,
    })
}

#[derive(Serialize)]
struct CompareResult {
    before: MapStats,
    after: MapStats,
    comparison: MapPairComparison,
}

fn compare_maps(before: &Path, after: &Path, kv: &KeyValues, thickness_um: Option<f64>) -> Result<Outcome> {
    let geom = thickness(kv, thickness_um)?;
    let (b, bi) = load_map(before)?;
    let (a, ai) = load_map(after)?;
    let (db, da) = (delta_n_map(&b, &geom), delta_n_map(&a, &geom));
    let comparison = map_pair_compare(&db, &da)?;
    let vals = |g: &PixelGrid| g.valid_values().collect::<Vec<f64>>();
    let plot = Plot::new("Birefringence before and after", "delta n", "pixels")
        .with_series(Series::line("before", histogram(&vals(db.grid()), 50)))
        .with_series(Series::line("after", histogram(&vals(da.grid()), 50)));
    let result = CompareResult {
        before: map_stats(&db)?,
        after: map_stats(&da)?,
        comparison,
    };
    #[derive(Serialize)]
    struct Config {
        thickness_um: f64,
    }
    Ok(Outcome {
        report: ReportDocument::new(
            "compare-maps",
            vec![bi, ai],
            Config {
                thickness_um: geom.thickness_um(),
            },
            result,
        )?,
        plot: Some(plot),
        failure: None,
    })
}

#[derive(Serialize)]
struct SynthResult {
    output: String,
    kind: &'static str,
    points: usize,
    clamped_pixels: Option<usize>,
}

fn synth_spectrum_cmd(spec_path: &Path, out: &Path) -> Result<Outcome> {
    let (text, input) = read_input(spec_path)?;
    let kv = KeyValues::parse(&text, &display(spec_path))?;
    let job = synth_spec::spectrum_job(&kv)?;
    let s = job.generate()?;
    write_spectrum(out, &s, Some(&job.spec.geometry))?;
    let plot = Plot::new("Synthetic spectrum", "wavelength (nm)", job.output.directive()).with_series(Series::line("synthetic", spectrum_points(&s)));
    #[derive(Serialize)]
    struct Config<'a> {
        spec: &'a SynthSpec,
        grid_nm: (f64, f64, f64),
        output: FileKind,
    }
    let config = Config {
        spec: &job.spec,
        grid_nm: job.grid_nm,
        output: job.output,
    };
    let result = SynthResult {
        output: display(out),
        kind: job.output.directive(),
        points: s.len(),
        clamped_pixels: None,
    };
    Ok(Outcome {
        report: ReportDocument::new("synth spectrum", vec![input], config, result)?,
        plot: Some(plot),
        failure: None,
    })
}

fn synth_map_cmd(spec_path: &Path, out: &Path) -> Result<Outcome> {
    let (text, input) = read_input(spec_path)?;
    let kv = KeyValues::parse(&text, &display(spec_path))?;
    let spec: MapSynthSpec = synth_spec::map_spec(&kv)?;
    let m = synth_retardation_map(&spec)?;
    write_map(out, &m.map)?;
    let vals: Vec<f64> = m.map.grid().valid_values().collect();
    let plot = Plot::new("Synthetic retardation", "retardation (nm)", "pixels").with_series(Series::line("synthetic", histogram(&vals, 50)));
    let result = SynthResult {
        output: display(out),
        kind: "retardation_map",
        points: spec.width * spec.height,
        clamped_pixels: Some(m.clamped),
    };
    Ok(Outcome {
        report: ReportDocument::new("synth map", vec![input], &spec, result)?,
        plot: Some(plot),
        failure: None,
    })
}
