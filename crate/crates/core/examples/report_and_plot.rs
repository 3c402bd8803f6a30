//! Builds a JSON report with input hashes and an SVG plot, the two outputs
//! every command produces.

use diamond_optics::absorption::{spectrum_to_absorption, ConversionMode, ReflectanceModel};
use diamond_optics::decomposition::Coefficients;
use diamond_optics::io::{format_spectrum, render_svg, InputRecord, Plot, ReportDocument, Series};
use diamond_optics::synth::{synth_transmittance, SynthSpec};
use diamond_optics::types::WavelengthGrid;

fn main() -> diamond_optics::Result<()> {
    let grid = WavelengthGrid::uniform(220.0, 800.0, 2.0)?;
    let spec = SynthSpec::new(Coefficients::five(1.0, 0.4, 0.3, 0.5, 0.6));
    let t = synth_transmittance(&spec, &grid)?;
    let text = format_spectrum(&t, Some(&spec.geometry))?;
    let a = spectrum_to_absorption(&t, &spec.geometry, ConversionMode::IntegratingSphere, &ReflectanceModel::default())?;

    let input = InputRecord::from_bytes("synthetic.csv", text.as_bytes());
    let doc = ReportDocument::new("example", vec![input], spec.geometry, a.spectrum.values())?;
    println!("{}", doc.to_json()?.lines().take(12).collect::<Vec<_>>().join("\n"));

    let plot = Plot::new("Absorption", "wavelength (nm)", "absorption (cm^-1)")
        .with_series(Series::line("sample", a.spectrum.iter().collect()))
        .log_y();
    let svg = render_svg(&plot)?;
    println!("svg: {} bytes", svg.len());
    Ok(())
}
