//! Replicated Monte Carlo studies of the estimators.
//!
//! A study draws M independent datasets from a built-in scenario, fits each
//! one, and aggregates bias and standard deviation for six estimands: the
//! three Euclidean parameters and the c.d.f. estimate at the true 0.1 / 0.5
//! / 0.9 quantiles of the unknown error law.  Replicates whose fit fails or
//! whose mixing-weight estimate leaves (0, 1] are counted and excluded from
//! the moments.  Optional passes add √n-scaled standard-deviation versus
//! mean-standard-error columns, and the miss rate of the multiplier
//! confidence band against the true c.d.f.
//!
//! Every replicate derives its own seed from the study seed by counter, so
//! studies are reproducible bit for bit whatever the thread count, and
//! aggregation walks replicates in index order with exact two-pass moments.

use crate::bootstrap::{confidence_band, BootstrapConfig};
use crate::density::{f_n_pdf_grid, DensityConfig};
use crate::error::{Error, Result};
use crate::euclidean::fit_model;
use crate::functional::{
    estimate_curves, f_n_cdf, influence_matrix, EvaluationGrid, DEFAULT_GRID_POINTS,
};
use crate::rng::derive_seed;
use crate::simulate::{builtin_scenario, simulate};
use rayon::prelude::*;
use serde::Serialize;

/// The six reported estimands, in row order.
pub const ESTIMANDS: [&str; 6] = ["alpha", "beta", "pi", "F(q0.1)", "F(q0.5)", "F(q0.9)"];

/// Quantile levels at which the c.d.f. estimate is scored.
pub const QUANTILE_LEVELS: [f64; 3] = [0.1, 0.5, 0.9];

/// Bias and spread of one estimand over the valid replicates.
#[derive(Debug, Clone, Serialize)]
pub struct EstimandRow {
    pub estimand: String,
    pub bias: f64,
    pub sd: f64,
    /// √n · sd — comparable across sample sizes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd_sqrt_n: Option<f64>,
    /// √n · mean of the estimated standard errors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_sqrt_n: Option<f64>,
}

/// Aggregated study results plus enough metadata to rerun them.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub scenario: String,
    pub pi0: f64,
    pub n: usize,
    pub replicates: usize,
    /// Replicates with a failed fit or mixing weight outside (0, 1].
    pub invalid: usize,
    pub seed: u64,
    /// One row per estimand; empty when fewer than two replicates were valid.
    pub rows: Vec<EstimandRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miss_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_level: Option<f64>,
}

impl McReport {
    /// Tab-separated table: `#`-prefixed metadata lines, a header, one row
    /// per estimand.
    pub fn tsv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# scenario={} pi0={} n={} replicates={} invalid={} seed={}",
            self.scenario, self.pi0, self.n, self.replicates, self.invalid, self.seed
        );
        if let Some(miss) = self.miss_rate {
            let _ = writeln!(
                out,
                "# band_miss_rate={:.6} band_replicates={} band_level={}",
                miss,
                self.band_replicates.unwrap_or(0),
                self.band_level.unwrap_or(0.0)
            );
        }
        let scaled = self.rows.iter().any(|r| r.sd_sqrt_n.is_some());
        let _ = writeln!(
            out,
            "estimand\tbias\tsd{}",
            if scaled { "\tsd_sqrt_n\tse_sqrt_n" } else { "" }
        );
        for row in &self.rows {
            let _ = write!(out, "{}\t{:.6}\t{:.6}", row.estimand, row.bias, row.sd);
            if scaled {
                let _ = write!(
                    out,
                    "\t{:.6}\t{:.6}",
                    row.sd_sqrt_n.unwrap_or(f64::NAN),
                    row.se_sqrt_n.unwrap_or(f64::NAN)
                );
            }
            out.push('\n');
        }
        out
    }
}

/// Confidence-band settings for a coverage study.
#[derive(Debug, Clone, Copy)]
pub struct BandSpec {
    pub replicates: usize,
    pub level: f64,
}

/// Everything a study needs.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub scenario: String,
    pub pi0: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Also aggregate √n·sd against √n·mean(se).
    pub with_se: bool,
    /// Also bootstrap a band per replicate and score its coverage.
    pub band: Option<BandSpec>,
}

#[derive(Debug, Clone, Copy)]
struct ReplicateOutcome {
    valid: bool,
    estimates: [f64; 6],
    se: [f64; 6],
    miss: bool,
}

impl ReplicateOutcome {
    fn invalid() -> Self {
        ReplicateOutcome { valid: false, estimates: [0.0; 6], se: [0.0; 6], miss: false }
    }
}

struct Plan<'a> {
    cfg: &'a McConfig,
    grid3: EvaluationGrid,
}

impl Plan<'_> {
    fn replicate(&self, r: usize) -> Result<ReplicateOutcome> {
        let cfg = self.cfg;
        let seed_r = derive_seed(cfg.seed, r as u64);
        let scen = builtin_scenario(&cfg.scenario, cfg.pi0, cfg.n, seed_r)?;
        let sim = simulate(&scen)?;
        let fit = match fit_model(&sim.data) {
            Ok(f) if f.euclidean.pi_valid => f,
            _ => return Ok(ReplicateOutcome::invalid()),
        };
        let params = fit.euclidean.params;
        let functional3 = f_n_cdf(&sim.data, &scen.known, &params, &self.grid3)?;
        let estimates = [
            params.alpha,
            params.beta,
            params.pi,
            functional3.f_raw[0],
            functional3.f_raw[1],
            functional3.f_raw[2],
        ];
        let mut se = [0.0_f64; 6];
        if cfg.with_se {
            se[..3].copy_from_slice(&fit.euclidean.std_errors);
            let pdf3 =
                f_n_pdf_grid(&sim.data, &scen.known, &params, &self.grid3, &DensityConfig::default())?;
            let infl = influence_matrix(&sim.data, &scen.known, &fit, &functional3, &pdf3.raw)?;
            se[3..].copy_from_slice(&infl.pointwise_se());
        }
        let mut miss = false;
        if let Some(spec) = cfg.band {
            let grid =
                EvaluationGrid::over_residual_range(&sim.data, &params, DEFAULT_GRID_POINTS)?;
            let bundle =
                estimate_curves(&sim.data, &scen.known, &fit, &grid, &DensityConfig::default())?;
            let band = confidence_band(
                &bundle.cdf,
                &bundle.influence,
                &BootstrapConfig {
                    replicates: spec.replicates,
                    level: spec.level,
                    seed: seed_r,
                    ..Default::default()
                },
            )?;
            // Coverage is judged against the unclamped band, on the same
            // grid the band was built on.
            miss = grid
                .points()
                .iter()
                .zip(&bundle.cdf.f_raw)
                .any(|(&t, &f)| (f - scen.eps_law.cdf(t)).abs() > band.halfwidth);
        }
        Ok(ReplicateOutcome { valid: true, estimates, se, miss })
    }
}

/// Aggregates per-replicate outcomes into a report.  Walks replicates in
/// index order; moments are exact two-pass.
fn summarize(cfg: &McConfig, truths: &[f64; 6], outcomes: &[ReplicateOutcome]) -> McReport {
    let valid: Vec<&ReplicateOutcome> = outcomes.iter().filter(|o| o.valid).collect();
    let v = valid.len();
    let sqrt_n = (cfg.n as f64).sqrt();
    let rows = if v >= 2 {
        (0..6)
            .map(|k| {
                let mean = valid.iter().map(|o| o.estimates[k]).sum::<f64>() / v as f64;
                let var = valid.iter().map(|o| (o.estimates[k] - mean).powi(2)).sum::<f64>()
                    / (v - 1) as f64;
                let sd = var.sqrt();
                EstimandRow {
                    estimand: ESTIMANDS[k].to_string(),
                    bias: mean - truths[k],
                    sd,
                    sd_sqrt_n: cfg.with_se.then_some(sd * sqrt_n),
                    se_sqrt_n: cfg.with_se.then(|| {
                        valid.iter().map(|o| o.se[k]).sum::<f64>() / v as f64 * sqrt_n
                    }),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let miss_rate = match (cfg.band, v) {
        (Some(_), v) if v >= 1 => {
            Some(valid.iter().filter(|o| o.miss).count() as f64 / v as f64)
        }
        _ => None,
    };
    McReport {
        scenario: cfg.scenario.clone(),
        pi0: cfg.pi0,
        n: cfg.n,
        replicates: cfg.replicates,
        invalid: outcomes.len() - v,
        seed: cfg.seed,
        rows,
        miss_rate,
        band_replicates: cfg.band.map(|b| b.replicates),
        band_level: cfg.band.map(|b| b.level),
    }
}

/// Runs a study: M parallel replicates, index-seeded, then a sequential
/// aggregation pass.
pub fn run_study(cfg: &McConfig) -> Result<McReport> {
    if cfg.replicates < 2 {
        return Err(Error::Config(format!(
            "a study needs at least two replicates, got {}",
            cfg.replicates
        )));
    }
    if let Some(spec) = cfg.band {
        if spec.replicates < 20 {
            return Err(Error::Config(format!(
                "coverage needs at least 20 bootstrap replicates, got {}",
                spec.replicates
            )));
        }
        if !(spec.level > 0.0 && spec.level < 1.0) {
            return Err(Error::Config(format!(
                "band level must lie strictly between 0 and 1, got {}",
                spec.level
            )));
        }
    }
    // The template validates the scenario and carries the true laws; seed 0
    // is never used for data (replicates derive their own).
    let template = builtin_scenario(&cfg.scenario, cfg.pi0, cfg.n, 0)?;
    let mut quantiles = [0.0_f64; 3];
    for (slot, p) in quantiles.iter_mut().zip(QUANTILE_LEVELS) {
        *slot = template.eps_law.quantile(p)?;
    }
    let grid3 = EvaluationGrid::new(quantiles.to_vec())?;
    let truths = [template.params.alpha, template.params.beta, cfg.pi0, 0.1, 0.5, 0.9];
    let plan = Plan { cfg, grid3 };
    let outcomes: Vec<ReplicateOutcome> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| plan.replicate(r))
        .collect::<Result<_>>()?;
    Ok(summarize(cfg, &truths, &outcomes))
}

/// Bias / standard deviation study.
pub fn run_bias_study(
    scenario: &str,
    pi0: f64,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<McReport> {
    run_study(&McConfig {
        scenario: scenario.to_string(),
        pi0,
        n,
        replicates,
        seed,
        with_se: false,
        band: None,
    })
}

/// Bias study plus √n·sd versus √n·mean(se) columns.
pub fn run_se_study(
    scenario: &str,
    pi0: f64,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<McReport> {
    run_study(&McConfig {
        scenario: scenario.to_string(),
        pi0,
        n,
        replicates,
        seed,
        with_se: true,
        band: None,
    })
}

/// Bias study plus the miss rate of the level-0.95 confidence band.
pub fn run_coverage_study(
    scenario: &str,
    pi0: f64,
    n: usize,
    replicates: usize,
    band_replicates: usize,
    seed: u64,
) -> Result<McReport> {
    run_study(&McConfig {
        scenario: scenario.to_string(),
        pi0,
        n,
        replicates,
        seed,
        with_se: false,
        band: Some(BandSpec { replicates: band_replicates, level: 0.05 }),
    })
}
