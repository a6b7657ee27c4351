//! Compare the main fit with the nine closed-form alternatives.
//!
//! A smaller five-parameter system yields three closed-form estimators for
//! each of alpha, beta, and pi.  They are consistent but noticeably noisier
//! than the main fit, and individual variants can be undefined when their
//! denominator degenerates.  This example prints all nine next to the main
//! estimates on one simulated dataset.
//!
//! ```text
//! cargo run --example estimator_family
//! ```

use semimix::euclidean::lambda_param_family;
use semimix::moments::fit_lambda;
use semimix::simulate::{builtin_scenario, simulate};
use semimix::{fit_model, Result};

fn show(vals: &[Option<f64>; 3]) -> String {
    vals.iter()
        .map(|v| match v {
            Some(v) => format!("{v:>9.4}"),
            None => format!("{:>9}", "undef"),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> Result<()> {
    let cfg = builtin_scenario("WOn", 0.6, 2_000, 19)?;
    let sim = simulate(&cfg)?;
    let fit = fit_model(&sim.data)?;
    let lambda = fit_lambda(&fit.moments)?;
    let family = lambda_param_family(&lambda.lambda);

    let est = fit.euclidean.params;
    println!("{:>6} {:>9} {:>29} {:>9}", "", "main fit", "closed-form variants", "truth");
    println!("{:>6} {:>9.4} {} {:>9.4}", "alpha", est.alpha, show(&family.alpha), cfg.params.alpha);
    println!("{:>6} {:>9.4} {} {:>9.4}", "beta", est.beta, show(&family.beta), cfg.params.beta);
    println!("{:>6} {:>9.4} {} {:>9.4}", "pi", est.pi, show(&family.pi), cfg.params.pi);
    Ok(())
}
