//! Converts a synthetic transmittance spectrum to absorption with both
//! conversion models and prints the 680-760 nm band average.

use diamond_optics::absorption::{band_average, spectrum_to_absorption, ConversionMode, ReflectanceModel};
use diamond_optics::decomposition::Coefficients;
use diamond_optics::synth::{synth_transmittance, SynthSpec};
use diamond_optics::types::WavelengthGrid;

fn main() -> diamond_optics::Result<()> {
    let grid = WavelengthGrid::uniform(220.0, 800.0, 1.0)?;
    let spec = SynthSpec::new(Coefficients::five(1.0, 0.4, 0.3, 0.5, 0.6));
    let t = synth_transmittance(&spec, &grid)?;
    let refl = ReflectanceModel::default();
    println!("lossless transmittance: {:.4}", refl.lossless_transmittance());
    for mode in [ConversionMode::IntegratingSphere, ConversionMode::Simple] {
        let a = spectrum_to_absorption(&t, &spec.geometry, mode, &refl)?;
        println!("{mode:?}: band average 680-760 nm = {:.4} cm^-1", band_average(&a.spectrum, 680.0, 760.0)?);
    }
    Ok(())
}
