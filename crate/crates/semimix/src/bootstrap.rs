//! Multiplier-bootstrap confidence bands for the c.d.f. estimate.
//!
//! The limiting law of the centered, √n-scaled c.d.f. estimator is
//! approximated by reweighting its influence values with centered i.i.d.
//! multipliers: replicate j evaluates the process
//!
//! ```text
//!   t ↦ n^{−1/2} Σ_i (ξ_i^{(j)} − ξ̄^{(j)}) ψ̂_{t,i}
//! ```
//!
//! over the grid, takes the sup of its absolute value, and the (1−p)
//! empirical quantile of those sups — divided by √n — is the half-width of a
//! level-(1−p) simultaneous band around the raw curve.
//!
//! Each replicate draws its multipliers from its own counter-derived RNG
//! stream, so results are byte-identical whatever the thread count.
//! Replicates are processed in blocks that stream the influence matrix once
//! per block, keeping the pass over the n×|grid| values cache-friendly.

use crate::error::{Error, Result};
use crate::functional::{FunctionalFit, InfluenceMatrix};
use crate::rng::{stream_rng, STREAM_BOOTSTRAP};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Law of the i.i.d. multipliers ξ.  Standard normal satisfies the moment
/// condition the band's validity needs; no other law is offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum MultiplierLaw {
    #[default]
    StandardNormal,
}

/// Replicate count, band level, multiplier law, and master seed.
#[derive(Debug, Clone, Copy)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates N.
    pub replicates: usize,
    /// Band level p: the band covers with probability 1−p.
    pub level: f64,
    pub multiplier: MultiplierLaw,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replicates: 1000, level: 0.05, multiplier: MultiplierLaw::StandardNormal, seed: 0 }
    }
}

impl BootstrapConfig {
    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("bootstrap replicate count must be positive".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!(
                "band level must lie strictly between 0 and 1, got {}",
                self.level
            )));
        }
        Ok(())
    }
}

/// A simultaneous confidence band and the sup statistics behind it.
#[derive(Debug, Clone, Serialize)]
pub struct BandResult {
    /// (1−p) empirical quantile of the sup statistics, divided by √n.
    pub halfwidth: f64,
    /// Per-replicate sup_t of the absolute multiplier process.
    pub sup_stats: Vec<f64>,
    /// Raw band around the raw curve; may leave [0, 1].
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
    /// The same band clamped into [0, 1] for display.
    pub band_lo_clamped: Vec<f64>,
    pub band_hi_clamped: Vec<f64>,
}

/// One multiplier process over the grid: per grid point,
/// n^{−1/2} Σ_i (ξ_i − ξ̄) ψ̂_{t,i}.
pub fn multiplier_process(matrix: &InfluenceMatrix, xi: &[f64]) -> Vec<f64> {
    assert_eq!(xi.len(), matrix.n, "one multiplier per observation");
    let n = matrix.n as f64;
    let xi_bar = xi.iter().sum::<f64>() / n;
    let mut acc = vec![0.0_f64; matrix.grid_len];
    for (i, &w) in xi.iter().enumerate() {
        let c = w - xi_bar;
        for (slot, &v) in acc.iter_mut().zip(matrix.row(i)) {
            *slot += c * v;
        }
    }
    let scale = 1.0 / n.sqrt();
    for v in &mut acc {
        *v *= scale;
    }
    acc
}

/// The ⌈N(1−p)⌉-th order statistic — the generalized inverse of the step
/// e.c.d.f. of `values` at 1−p.  The tiny slack keeps a product like
/// 0.95·500 from ticking up to the next rank through float rounding.
pub fn empirical_upper_quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let n = values.len();
    let rank = (((1.0 - p) * n as f64) - 1e-9).ceil() as usize;
    let rank = rank.clamp(1, n);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sup statistics"));
    sorted[rank - 1]
}

/// Replicates processed per pass over the influence matrix.
const REPLICATE_BLOCK: usize = 16;

/// All N sup statistics.  Replicate j draws its multipliers from stream
/// `STREAM_BOOTSTRAP + j`, so the result is independent of how the blocks
/// are scheduled across threads.
pub fn sup_statistics(matrix: &InfluenceMatrix, cfg: &BootstrapConfig) -> Vec<f64> {
    let MultiplierLaw::StandardNormal = cfg.multiplier;
    let n = matrix.n;
    let m = matrix.grid_len;
    let nf = n as f64;
    let scale = 1.0 / nf.sqrt();
    let mut sups = vec![0.0_f64; cfg.replicates];
    sups.par_chunks_mut(REPLICATE_BLOCK).enumerate().for_each(|(block, out)| {
        let first = block * REPLICATE_BLOCK;
        let k = out.len();
        let mut xi = vec![0.0_f64; k * n];
        let mut centers = vec![0.0_f64; k];
        for (j, draws) in xi.chunks_mut(n).enumerate() {
            let mut rng = stream_rng(cfg.seed, STREAM_BOOTSTRAP + (first + j) as u64);
            for slot in draws.iter_mut() {
                *slot = rng.sample::<f64, _>(StandardNormal);
            }
            centers[j] = draws.iter().sum::<f64>() / nf;
        }
        // One pass over the matrix accumulates every process in the block.
        let mut acc = vec![0.0_f64; k * m];
        for i in 0..n {
            let row = matrix.row(i);
            for j in 0..k {
                let c = xi[j * n + i] - centers[j];
                for (slot, &v) in acc[j * m..(j + 1) * m].iter_mut().zip(row) {
                    *slot += c * v;
                }
            }
        }
        for (j, sup) in out.iter_mut().enumerate() {
            *sup = acc[j * m..(j + 1) * m]
                .iter()
                .fold(0.0_f64, |best, &v| best.max((v * scale).abs()));
        }
    });
    sups
}

/// The level-(1−p) simultaneous band around the raw c.d.f. curve.
///
/// For the quantile to sit strictly inside the sample of sups the replicate
/// count should satisfy N ≥ 1/p; with fewer replicates the rank clamps to an
/// extreme order statistic (N = 1 uses the single sup).
pub fn confidence_band(
    functional: &FunctionalFit,
    matrix: &InfluenceMatrix,
    cfg: &BootstrapConfig,
) -> Result<BandResult> {
    cfg.validate()?;
    assert_eq!(
        matrix.grid_len,
        functional.grid.len(),
        "influence matrix and functional fit must share a grid"
    );
    let sup_stats = sup_statistics(matrix, cfg);
    let quantile = empirical_upper_quantile(&sup_stats, cfg.level);
    let halfwidth = quantile / (matrix.n as f64).sqrt();
    let band_lo: Vec<f64> = functional.f_raw.iter().map(|&f| f - halfwidth).collect();
    let band_hi: Vec<f64> = functional.f_raw.iter().map(|&f| f + halfwidth).collect();
    let band_lo_clamped: Vec<f64> = band_lo.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
    let band_hi_clamped: Vec<f64> = band_hi.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
    Ok(BandResult { halfwidth, sup_stats, band_lo, band_hi, band_lo_clamped, band_hi_clamped })
}
