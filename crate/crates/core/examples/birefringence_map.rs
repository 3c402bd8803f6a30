//! Synthesizes a masked retardation map with a strain blob, converts it to
//! birefringence and reports statistics and polarization loss.

use diamond_optics::birefringence::{classify_ultra_low, delta_n_map, loss_map, map_stats, grid_stats, worst_case_loss};
use diamond_optics::synth::{synth_retardation_map, Blob, MapSynthSpec, MaskShape};
use diamond_optics::types::SampleGeometry;

fn main() -> diamond_optics::Result<()> {
    let mut spec = MapSynthSpec::uniform(64, 48, 300.0, 6e-6);
    spec.noise_sigma_nm = 0.3;
    spec.seed = 3;
    spec.blobs.push(Blob { center_px: (40.0, 20.0), radius_px: 5.0, amplitude: 2e-5 });
    spec.mask = MaskShape::Ellipse { cx: 31.5, cy: 23.5, rx: 30.0, ry: 22.0 };
    let map = synth_retardation_map(&spec)?.map;

    let geom = SampleGeometry::new(spec.thickness_um)?;
    let dn = delta_n_map(&map, &geom);
    let stats = map_stats(&dn)?;
    println!("{stats:?}");
    println!("ultra-low birefringence: {}", classify_ultra_low(&stats));
    println!("worst-case loss at the mean: {:.3e}", worst_case_loss(stats.mean, geom.thickness_cm(), 700.0)?);
    let loss = grid_stats(loss_map(&dn, &geom, 700.0)?.grid())?;
    println!("loss map at 700 nm: mean {:.3e}, max {:.3e}", loss.mean, loss.max);
    Ok(())
}
