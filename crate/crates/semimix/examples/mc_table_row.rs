//! Produce one row of a replicated-study table.
//!
//! Runs 500 replicates of the medium-overlap scenario with shifted-gamma
//! errors, summarizes bias and spread for the three parameters and for the
//! distribution estimate at three reference quantiles, and prints the
//! result in the same TSV layout the command-line tool writes.
//!
//! ```text
//! cargo run --release --example mc_table_row
//! ```

use semimix::{run_bias_study, Result};

fn main() -> Result<()> {
    let report = run_bias_study("MOg", 0.5, 1_000, 500, 2024)?;
    print!("{}", report.tsv());
    eprintln!(
        "({} of {} replicates left the identified region and were excluded)",
        report.invalid, report.replicates
    );
    Ok(())
}
