//! Fits the three-band model to a noisy synthetic spectrum, refines band
//! shapes and reports residual features and the P1 estimate.

use diamond_optics::decomposition::{
    fit_components, p1_concentration, refine_fit, residual_features, Coefficients, ComponentModel, RefineBounds,
};
use diamond_optics::synth::{synth_absorption, SynthSpec};
use diamond_optics::types::WavelengthGrid;

fn main() -> diamond_optics::Result<()> {
    let grid = WavelengthGrid::uniform(220.0, 800.0, 1.0)?;
    let truth = Coefficients::five(1.2, 0.4, 0.25, 0.6, 0.3);
    let s = synth_absorption(&SynthSpec::new(truth.clone()).with_noise(0.01, 7), &grid)?;
    let model = ComponentModel::default();

    let fit = fit_components(&s, &model)?;
    let refined = refine_fit(&s, &model, &fit, &RefineBounds::default())?;
    for ((name, t), (c, r)) in model
        .component_names()
        .iter()
        .zip(truth.to_vec())
        .zip(fit.coefficients.to_vec().into_iter().zip(refined.coefficients.to_vec()))
    {
        println!("{name:>8}: true {t:.4}  nnls {c:.4}  refined {r:.4}");
    }
    println!("rms residual {:.2e} -> {:.2e}", fit.rms_residual, refined.rms_residual);
    println!("features: {:?}", residual_features(&refined));
    println!("P1 at kappa 1000 ppm*cm: {:.1} ppm", p1_concentration(refined.coefficients.c270(), 1000.0)?);
    Ok(())
}
