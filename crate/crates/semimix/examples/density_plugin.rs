//! Estimate the unknown error density under different bandwidth rules.
//!
//! Runs the corrected kernel estimate over the residual range with the
//! two-stage plug-in selector and with the normal-reference scale rule,
//! then compares both bandwidths, the mass each curve carries, and the
//! worst pointwise gap to the true density.
//!
//! ```text
//! cargo run --example density_plugin
//! ```

use semimix::density::{f_n_pdf_grid, BandwidthRule, DensityConfig};
use semimix::simulate::{builtin_scenario, simulate};
use semimix::{fit_model, EvaluationGrid, Result};

fn main() -> Result<()> {
    let cfg = builtin_scenario("MOg", 0.7, 4_000, 3)?;
    let sim = simulate(&cfg)?;
    let fit = fit_model(&sim.data)?;
    let grid = EvaluationGrid::over_residual_range(&sim.data, &fit.euclidean.params, 200)?;

    for (label, rule) in [("plug-in", BandwidthRule::PlugIn), ("scale rule", BandwidthRule::ScaleRule)]
    {
        let density_cfg = DensityConfig { bandwidth: rule, ..Default::default() };
        let curve =
            f_n_pdf_grid(&sim.data, &cfg.known, &fit.euclidean.params, &grid, &density_cfg)?;
        let mass: f64 = grid
            .points()
            .windows(2)
            .zip(curve.clamped.windows(2))
            .map(|(t, f)| (t[1] - t[0]) * (f[0] + f[1]) / 2.0)
            .sum();
        let worst_gap = grid
            .points()
            .iter()
            .zip(&curve.clamped)
            .map(|(&t, &f)| (f - cfg.eps_law.pdf(t)).abs())
            .fold(0.0, f64::max);
        println!(
            "{label:<10}  bandwidth {:.4}  mass {:.3}  max |f_n - f| {:.4}",
            curve.bandwidth, mass, worst_gap
        );
    }
    Ok(())
}
