//! Writes a synthetic spectrum and retardation map in the text formats the
//! command-line tool reads, then parses them back.

use diamond_optics::decomposition::Coefficients;
use diamond_optics::io::{parse_map, parse_spectrum, write_map, write_spectrum};
use diamond_optics::synth::{synth_retardation_map, synth_transmittance, GaussianBump, MapSynthSpec, SynthSpec};
use diamond_optics::types::WavelengthGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("diamond-optics-example");
    std::fs::create_dir_all(&dir)?;

    let grid = WavelengthGrid::uniform(220.0, 800.0, 0.5)?;
    let spec = SynthSpec::new(Coefficients::five(0.8, 0.3, 0.2, 0.4, 0.5))
        .with_noise(0.005, 1)
        .with_bump(GaussianBump::new(575.0, 60.0, 0.05));
    let t = synth_transmittance(&spec, &grid)?;
    let spath = dir.join("sample.csv");
    write_spectrum(&spath, &t, Some(&spec.geometry))?;
    println!("{} round trip exact: {}", spath.display(), parse_spectrum(&spath)?.spectrum == t);

    let mut mspec = MapSynthSpec::uniform(32, 24, 500.0, 8e-6);
    mspec.noise_sigma_nm = 0.2;
    let map = synth_retardation_map(&mspec)?.map;
    let mpath = dir.join("map.txt");
    write_map(&mpath, &map)?;
    println!("{} round trip exact: {}", mpath.display(), parse_map(&mpath)? == map);
    Ok(())
}
