//! Probe the noise-scale diagnostic for the known component.
//!
//! The model fixes the known component's error law, including its variance.
//! A moment identity nevertheless lets that variance be estimated from the
//! data, which makes a useful specification check: a value far from the
//! assumed one suggests the known law is wrong.  The estimator leans on
//! third moments, so it is noisy and can even be undefined; running it over
//! growing sample sizes shows the slow stabilization.
//!
//! ```text
//! cargo run --example scale_diagnostic
//! ```

use semimix::euclidean::{sigma_star_diagnostic, SigmaStarDiagnostic};
use semimix::moments::accumulate_moments;
use semimix::simulate::{builtin_scenario, simulate};
use semimix::Result;

fn main() -> Result<()> {
    // The known component's errors are standard normal: true variance 1.
    println!("{:>9} {:>12}", "n", "variance");
    for n in [500, 5_000, 50_000, 500_000] {
        let cfg = builtin_scenario("WOn", 0.7, n, 123)?;
        let sim = simulate(&cfg)?;
        let moments = accumulate_moments(&sim.data)?;
        match sigma_star_diagnostic(&moments)? {
            SigmaStarDiagnostic::Estimate(v) => println!("{n:>9} {v:>12.4}"),
            SigmaStarDiagnostic::Undefined { reason } => println!("{n:>9} undefined: {reason}"),
        }
    }
    Ok(())
}
