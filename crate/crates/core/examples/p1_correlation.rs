//! Fits a power law to a figure of merit against P1 concentration, with and
//! without inverse-variance weights, and checks the monotonic trend.

use diamond_optics::analysis::{monotonic_trend, power_law_fit_with, superlinear_flag, CorrelationPoint, FitWeighting};
use diamond_optics::synth::NoiseSource;

fn main() -> diamond_optics::Result<()> {
    let mut rng = NoiseSource::new(11);
    let points: Vec<CorrelationPoint> = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .enumerate()
        .map(|(i, &p1)| {
            let y = 0.02 * f64::powf(p1, 1.3) * (1.0 + 0.05 * rng.normal());
            CorrelationPoint::new(format!("S{i}"), p1, y).with_err(0.05 * y)
        })
        .collect();
    for w in [FitWeighting::Unweighted, FitWeighting::InverseVariance] {
        let fit = power_law_fit_with(&points, w)?;
        println!("{w:?}: y = {:.4} * P1^{:.3}, r2 = {:.4}, superlinear {}", fit.a, fit.b, fit.r2, superlinear_flag(&fit));
    }
    let trend = monotonic_trend(&points)?;
    println!("spearman rho {:.3}", trend.spearman_rho);
    Ok(())
}
