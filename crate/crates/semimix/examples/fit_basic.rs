//! Fit the three Euclidean parameters on simulated data.
//!
//! Draws one dataset from the weak-overlap scenario with normal errors,
//! runs the moment-based fit, and prints estimates with sandwich standard
//! errors next to the simulation truth.
//!
//! ```text
//! cargo run --example fit_basic
//! ```

use semimix::simulate::{builtin_scenario, simulate};
use semimix::{fit_model, Result};

fn main() -> Result<()> {
    let cfg = builtin_scenario("WOn", 0.7, 5_000, 42)?;
    let sim = simulate(&cfg)?;
    let fit = fit_model(&sim.data)?;

    let est = fit.euclidean.params;
    let se = fit.euclidean.std_errors;
    let truth = cfg.params;
    println!("{:>8} {:>10} {:>10} {:>10}", "", "estimate", "se", "truth");
    println!("{:>8} {:>10.4} {:>10.4} {:>10.4}", "alpha", est.alpha, se[0], truth.alpha);
    println!("{:>8} {:>10.4} {:>10.4} {:>10.4}", "beta", est.beta, se[1], truth.beta);
    println!("{:>8} {:>10.4} {:>10.4} {:>10.4}", "pi", est.pi, se[2], truth.pi);
    println!();
    println!("mixing weight inside (0, 1]: {}", fit.euclidean.pi_valid);
    println!("moment-system condition:     {:.2e}", fit.gamma.condition);
    Ok(())
}
