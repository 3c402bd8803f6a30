//! Compares as-grown, irradiated and annealed stages for a high and a low
//! fluence scenario and evaluates the over-irradiation flag.

use diamond_optics::analysis::{compare_stages, over_irradiation_flag, OverIrradiationThresholds};
use diamond_optics::decomposition::ComponentModel;
use diamond_optics::synth::{high_fluence_scenario, low_fluence_scenario};
use diamond_optics::types::WavelengthGrid;

fn main() -> diamond_optics::Result<()> {
    let grid = WavelengthGrid::uniform(220.0, 800.0, 1.0)?;
    let model = ComponentModel::default();
    let th = OverIrradiationThresholds::default();
    for (name, records) in [("high fluence", high_fluence_scenario(&grid)?), ("low fluence", low_fluence_scenario(&grid)?)] {
        let cmp = compare_stages(&records, &model, &th)?;
        println!("{name}:");
        for d in &cmp.deltas {
            println!("  {} -> {}: 680-760 nm change {:+.4} cm^-1, GR1 {:?}", d.from, d.to, d.band_avg_680_760, d.gr1_metric);
        }
        println!("  over-irradiated: {}", over_irradiation_flag(&cmp, &th)?);
    }
    Ok(())
}
