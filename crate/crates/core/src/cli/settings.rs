//! Effective settings: built-in defaults, then the config file, then flags.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::absorption::{ConversionMode, ReflectanceModel};
use crate::analysis::OverIrradiationThresholds;
use crate::decomposition::{ComponentModel, Offset, RampForm, RefineBounds};
use crate::error::{Error, Result};
use crate::io::{parse_spectrum_str, read_bytes, FileKind, InputRecord, KeyValues};

const GENERAL_KEYS: &[&str] = &[
    "mode",
    "rt",
    "band",
    "ramp_form",
    "ramp_exponent",
    "ramp_tau_nm",
    "ramp_ref_nm",
    "fit_window",
    "nv_mask",
    "mask",
    "reference",
    "refine",
    "refine_center_nm",
    "refine_fwhm_factor",
    "refine_max_iterations",
    "kappa",
    "gr1_min",
    "residual_700_min",
    "labels",
    "energy_mev",
    "fluence",
    "anneal_temp_c",
    "anneal_hours",
    "thickness_um",
    "lambda_nm",
    "trend",
    "weighted",
];

/// Band keys are `center_<suffix>` and `fwhm_<suffix>`, where the suffix is
/// the band label without its leading `c` (`center_270`, `fwhm_520`, ...).
fn band_suffix(label: &str) -> &str {
    label.strip_prefix('c').unwrap_or(label)
}

/// Loads the optional config file and rejects keys no command understands.
pub fn load_config(path: Option<&Path>) -> Result<KeyValues> {
    let Some(path) = path else { return Ok(KeyValues::default()) };
    let kv = KeyValues::load(path)?;
    let model = ComponentModel::default();
    let mut known: Vec<String> = GENERAL_KEYS.iter().map(|s| s.to_string()).collect();
    for b in &model.bands {
        known.push(format!("center_{}", band_suffix(&b.label)));
        known.push(format!("fwhm_{}", band_suffix(&b.label)));
    }
    let known: Vec<&str> = known.iter().map(String::as_str).collect();
    kv.reject_unknown(&known)?;
    Ok(kv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConversionSettings {
    pub mode: ConversionMode,
    pub reflectance: ReflectanceModel,
}

impl ConversionSettings {
    pub fn resolve(kv: &KeyValues, mode: Option<ConversionMode>, rt: Option<f64>) -> Result<Self> {
        let mode = match mode {
            Some(m) => m,
            None => kv.get::<ConversionMode>("mode")?.unwrap_or(ConversionMode::IntegratingSphere),
        };
        let reflectance = match rt.or(kv.get::<f64>("rt")?) {
            Some(r) => ReflectanceModel::with_total(r)?,
            None => ReflectanceModel::default(),
        };
        Ok(Self { mode, reflectance })
    }
}

/// Decomposition model with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSettings {
    pub model: ComponentModel,
    pub reference_path: Option<String>,
    #[serde(skip)]
    pub reference_input: Option<InputRecord>,
}

impl ModelSettings {
    /// Applies model keys from each layer in order (later wins).
    pub fn resolve(layers: &[&KeyValues], nv_mask_flag: bool, reference_flag: Option<&Path>) -> Result<Self> {
        let mut model = ComponentModel::default();
        let mut reference: Option<PathBuf> = None;
        let mut nv_mask = false;
        for kv in layers {
            for band in &mut model.bands {
                let sfx = band_suffix(&band.label).to_string();
                if let Some(c) = kv.get::<f64>(&format!("center_{sfx}"))? {
                    band.center_nm = c;
                }
                if let Some(w) = kv.get::<f64>(&format!("fwhm_{sfx}"))? {
                    band.fwhm_nm = w;
                }
            }
            if let Some(form) = kv.raw("ramp_form") {
                model.ramp.form = match form {
                    "power_law" => RampForm::PowerLaw { exponent: 3.0 },
                    "exponential" => RampForm::Exponential { tau_nm: 100.0 },
                    other => return Err(Error::invalid(format!("unknown ramp_form {other:?} (power_law|exponential)"))),
                };
            }
            if let Some(p) = kv.get::<f64>("ramp_exponent")? {
                match &mut model.ramp.form {
                    RampForm::PowerLaw { exponent } => *exponent = p,
                    RampForm::Exponential { .. } => {
                        return Err(Error::invalid("ramp_exponent given for an exponential ramp"))
                    }
                }
            }
            if let Some(t) = kv.get::<f64>("ramp_tau_nm")? {
                match &mut model.ramp.form {
                    RampForm::Exponential { tau_nm } => *tau_nm = t,
                    RampForm::PowerLaw { .. } => return Err(Error::invalid("ramp_tau_nm given for a power-law ramp")),
                }
            }
            if let Some(r) = kv.get::<f64>("ramp_ref_nm")? {
                model.ramp.ref_nm = r;
            }
            if let Some(w) = kv.get_pair("fit_window")? {
                model.fit_window_nm = w;
            }
            if let Some(m) = kv.get_pair("mask")? {
                model.masks_nm.push(m);
            }
            if let Some(b) = kv.get::<bool>("nv_mask")? {
                nv_mask = b;
            }
            if let Some(r) = kv.raw("reference") {
                reference = Some(PathBuf::from(r));
            }
        }
        if nv_mask || nv_mask_flag {
            model = model.with_nv_mask();
        }
        if let Some(r) = reference_flag {
            reference = Some(r.to_path_buf());
        }
        let mut reference_input = None;
        if let Some(path) = &reference {
            let bytes = read_bytes(path)?;
            let origin = path.display().to_string();
            let text = String::from_utf8(bytes.clone()).map_err(|_| Error::invalid(format!("{origin} is not UTF-8")))?;
            let file = parse_spectrum_str(&text, &origin)?;
            if file.kind != FileKind::AbsorptionPerCm {
                return Err(Error::invalid(format!("reference {origin} must be an absorption_cm-1 file")));
            }
            model.offset = Offset::Reference(file.spectrum);
            reference_input = Some(InputRecord::from_bytes(origin, &bytes));
        }
        model.validate()?;
        Ok(Self {
            model,
            reference_path: reference.map(|p| p.display().to_string()),
            reference_input,
        })
    }
}

pub fn refine_bounds(kv: &KeyValues) -> Result<RefineBounds> {
    let mut b = RefineBounds::default();
    if let Some(c) = kv.get::<f64>("refine_center_nm")? {
        b.center_halfwidth_nm = c;
    }
    if let Some(f) = kv.get_pair("refine_fwhm_factor")? {
        b.fwhm_factor = f;
    }
    if let Some(n) = kv.get::<usize>("refine_max_iterations")? {
        b.max_iterations = n;
    }
    Ok(b)
}

pub fn thresholds(kv: &KeyValues, gr1_min: Option<f64>, residual_700_min: Option<f64>) -> Result<OverIrradiationThresholds> {
    let mut t = OverIrradiationThresholds::default();
    if let Some(g) = gr1_min.or(kv.get("gr1_min")?) {
        t.gr1_min = g;
    }
    if let Some(r) = residual_700_min.or(kv.get("residual_700_min")?) {
        t.residual_700_min = r;
    }
    Ok(t)
}
