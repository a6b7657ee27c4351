//! Plug-in estimation of the unknown error distribution function.
//!
//! The observable mixture satisfies, on the canonical scale,
//!
//! ```text
//! P(Y − α − βX ≤ t | X) = π F(t) + (1 − π) F*(t + α + βX)
//! ```
//!
//! so F can be recovered by inverting the mixture: estimate the left side by
//! the empirical c.d.f. J_n of the plug-in residuals, the known part by the
//! sample average K_n of F* along the fitted line, and set
//!
//! ```text
//! F_n(t) = { J_n(t) − (1 − π_n) K_n(t) } / π_n .
//! ```
//!
//! F_n need not be a proper c.d.f. in finite samples; the clamped version
//! (F_n ∨ 0) ∧ 1 is reported alongside the raw one and nothing is
//! isotonized.
//!
//! The per-observation influence of F_n(t) combines the raw indicator with
//! the parameter influences inherited through (α̂, β̂, π̂); its empirical
//! variance yields pointwise standard errors, and the full observation ×
//! grid influence matrix is what the multiplier bootstrap reweights.  The
//! matrix is stored observation-major so a bootstrap replicate is one
//! sequential pass over rows.

use crate::density::{f_n_pdf_grid, DensityConfig, DensityCurve};
use crate::error::{Error, Result};
use crate::euclidean::ModelFit;
use crate::model::{Dataset, EuclideanParams, KnownComponent};
use crate::moments::{grad_phi_gamma, Vec8};
use rayon::prelude::*;

/// Default number of grid points for curve estimates and bands.
pub const DEFAULT_GRID_POINTS: usize = 100;

/// Strictly increasing, finite evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    points: Vec<f64>,
}

impl EvaluationGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("evaluation grid must be nonempty".into()));
        }
        for w in points.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Config(format!(
                    "evaluation grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("evaluation grid must be finite".into()));
        }
        Ok(EvaluationGrid { points })
    }

    /// `k` evenly spaced points over [lo, hi]; a single-point grid collapses
    /// to the midpoint.
    pub fn uniform(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("grid needs at least one point".into()));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("grid range must be finite, got [{lo}, {hi}]")));
        }
        if k == 1 {
            return EvaluationGrid::new(vec![0.5 * (lo + hi)]);
        }
        if !(hi > lo) {
            return Err(Error::Config(format!(
                "grid range must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / (k - 1) as f64;
        let points = (0..k).map(|i| lo + step * i as f64).collect();
        EvaluationGrid::new(points)
    }

    /// Default grid of the curve estimators: `k` points spanning the range
    /// of the plug-in residuals.  Collapses to one point when all residuals
    /// coincide.
    pub fn over_residual_range(data: &Dataset, params: &EuclideanParams, k: usize) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for o in data.obs() {
            let r = o.y - params.alpha - params.beta * o.x;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if lo == hi {
            return EvaluationGrid::new(vec![lo]);
        }
        EvaluationGrid::uniform(lo, hi, k)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Empirical c.d.f. of the plug-in residuals at one point.
pub fn j_n(data: &Dataset, alpha: f64, beta: f64, t: f64) -> f64 {
    let count = data.obs().iter().filter(|o| o.y - alpha - beta * o.x <= t).count();
    count as f64 / data.n() as f64
}

/// Sample mean of the known error law's c.d.f. along the fitted line.  The
/// known component must already be on the canonical scale (its own line
/// removed); only its noise law enters.
pub fn k_n(data: &Dataset, known: &KnownComponent, alpha: f64, beta: f64, t: f64) -> f64 {
    let sum: f64 = data.obs().iter().map(|o| known.noise.cdf(t + alpha + beta * o.x)).sum();
    sum / data.n() as f64
}

/// The c.d.f. estimate over a grid, with its building blocks.
#[derive(Debug, Clone)]
pub struct FunctionalFit {
    pub grid: EvaluationGrid,
    /// Raw F_n — may leave [0, 1] in finite samples.
    pub f_raw: Vec<f64>,
    /// (F_n ∨ 0) ∧ 1.
    pub f_clamped: Vec<f64>,
    pub j_vals: Vec<f64>,
    pub k_vals: Vec<f64>,
    /// Pointwise standard errors; empty until influence-based errors are
    /// attached (see [`attach_se`] / [`estimate_curves`]).
    pub se: Vec<f64>,
}

fn check_pi(pi: f64) -> Result<f64> {
    if !pi.is_finite() || pi == 0.0 {
        return Err(Error::OutsideDomain(format!(
            "mixing weight estimate {pi} leaves the c.d.f. estimator undefined"
        )));
    }
    Ok(pi)
}

/// Evaluates F_n over the grid: one residual sort amortizes every J_n
/// evaluation, K_n is averaged per point.
pub fn f_n_cdf(
    data: &Dataset,
    known: &KnownComponent,
    params: &EuclideanParams,
    grid: &EvaluationGrid,
) -> Result<FunctionalFit> {
    let pi = check_pi(params.pi)?;
    let mut resid = data.residuals(params.alpha, params.beta);
    resid.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
    let n = data.n() as f64;
    let j_vals: Vec<f64> =
        grid.points().iter().map(|&t| resid.partition_point(|&r| r <= t) as f64 / n).collect();
    let k_vals: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&t| {
            let sum: f64 =
                data.obs().iter().map(|o| known.noise.cdf(t + params.alpha + params.beta * o.x)).sum();
            sum / n
        })
        .collect();
    let f_raw: Vec<f64> =
        j_vals.iter().zip(&k_vals).map(|(&j, &k)| (j - (1.0 - pi) * k) / pi).collect();
    let f_clamped: Vec<f64> = f_raw.iter().map(|&f| f.clamp(0.0, 1.0)).collect();
    Ok(FunctionalFit { grid: grid.clone(), f_raw, f_clamped, j_vals, k_vals, se: Vec::new() })
}

/// Observation × grid influence values for F_n, observation-major: row i
/// holds ψ̂_{t₁..t_m, i}.  Column sums are accumulated sequentially so every
/// downstream statistic is independent of the parallel row fill.
#[derive(Debug, Clone)]
pub struct InfluenceMatrix {
    pub n: usize,
    pub grid_len: usize,
    values: Vec<f64>,
    /// ℙ_n ψ̂ per grid point.
    pub col_means: Vec<f64>,
    /// ℙ_n ψ̂² per grid point.
    pub col_mean_squares: Vec<f64>,
}

impl InfluenceMatrix {
    /// Builds a matrix from explicit rows (one per observation).  Mainly for
    /// tests and diagnostics; the estimator pipeline uses
    /// [`influence_matrix`].
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(n > 0, "at least one observation row");
        let m = rows[0].len();
        let mut values = Vec::with_capacity(n * m);
        for row in rows {
            assert_eq!(row.len(), m, "ragged influence rows");
            values.extend_from_slice(row);
        }
        let mut col_means = vec![0.0_f64; m];
        let mut col_mean_squares = vec![0.0_f64; m];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                col_means[j] += v;
                col_mean_squares[j] += v * v;
            }
        }
        let nf = n as f64;
        for j in 0..m {
            col_means[j] /= nf;
            col_mean_squares[j] /= nf;
        }
        InfluenceMatrix { n, grid_len: m, values, col_means, col_mean_squares }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid_len..(i + 1) * self.grid_len]
    }

    /// Pointwise standard errors n^{−1/2}{ℙψ̂² − (ℙψ̂)²}^{1/2}.
    pub fn pointwise_se(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.col_means
            .iter()
            .zip(&self.col_mean_squares)
            .map(|(&m, &msq)| ((msq - m * m).max(0.0) / n).sqrt())
            .collect()
    }
}

/// Builds the influence matrix of F_n over the grid.  `density` holds the
/// raw density estimate f_n at each grid point (the unclamped plug-in value,
/// which is what the linearization differentiates).
pub fn influence_matrix(
    data: &Dataset,
    known: &KnownComponent,
    fit: &ModelFit,
    functional: &FunctionalFit,
    density: &[f64],
) -> Result<InfluenceMatrix> {
    let params = fit.euclidean.params;
    let pi = check_pi(params.pi)?;
    let grid = functional.grid.points();
    let m = grid.len();
    assert_eq!(density.len(), m, "density values must align with the grid");
    assert_eq!(functional.j_vals.len(), m, "functional fit must align with the grid");
    let n = data.n();
    let x_bar = fit.gamma.gamma[4];
    // (K_n − J_n)/π² per grid point, the π-sensitivity of F_n.
    let c_pi: Vec<f64> = functional
        .k_vals
        .iter()
        .zip(&functional.j_vals)
        .map(|(&k, &j)| (k - j) / (pi * pi))
        .collect();
    let neg_ratio = (1.0 - pi) / pi;
    let mut values = vec![0.0_f64; n * m];
    let obs = data.obs();
    values
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, row)| {
            let o = obs[i];
            let g = grad_phi_gamma(&fit.gamma.gamma, o.x, o.y);
            let psi3 = fit.euclidean.influence_map * Vec8::from_column_slice(&g);
            let a_i = psi3[0] + x_bar * psi3[1];
            let psi_pi = psi3[2];
            let r_i = o.y - params.alpha - params.beta * o.x;
            let line_i = params.alpha + params.beta * o.x;
            // First grid index with t ≥ r_i: indicator turns on there.
            let j0 = grid.partition_point(|&t| t < r_i);
            for (jj, slot) in row.iter_mut().enumerate() {
                let t = grid[jj];
                let indicator = if jj >= j0 { 1.0 / pi } else { 0.0 };
                *slot = indicator + density[jj] * a_i + c_pi[jj] * psi_pi
                    - neg_ratio * known.noise.cdf(t + line_i);
            }
        });
    // Sequential column reductions: byte-stable under any thread count.
    let mut col_means = vec![0.0_f64; m];
    let mut col_mean_squares = vec![0.0_f64; m];
    for i in 0..n {
        let row = &values[i * m..(i + 1) * m];
        for (j, &v) in row.iter().enumerate() {
            col_means[j] += v;
            col_mean_squares[j] += v * v;
        }
    }
    let nf = n as f64;
    for j in 0..m {
        col_means[j] /= nf;
        col_mean_squares[j] /= nf;
    }
    Ok(InfluenceMatrix { n, grid_len: m, values, col_means, col_mean_squares })
}

/// Influence values of F_n(t) at a single point, one entry per observation.
/// `f_n_at_t` is the raw density estimate at t.
pub fn influence_hat(
    data: &Dataset,
    known: &KnownComponent,
    fit: &ModelFit,
    f_n_at_t: f64,
    t: f64,
) -> Result<Vec<f64>> {
    let grid = EvaluationGrid::new(vec![t])?;
    let functional = f_n_cdf(data, known, &fit.euclidean.params, &grid)?;
    let matrix = influence_matrix(data, known, fit, &functional, &[f_n_at_t])?;
    Ok((0..matrix.n).map(|i| matrix.row(i)[0]).collect())
}

/// n^{−1/2}{ℙ_n ψ̂² − (ℙ_n ψ̂)²}^{1/2} for one influence sequence.
pub fn pointwise_se(influence: &[f64]) -> f64 {
    let n = influence.len() as f64;
    if influence.is_empty() {
        return 0.0;
    }
    let m1 = influence.iter().sum::<f64>() / n;
    let m2 = influence.iter().map(|v| v * v).sum::<f64>() / n;
    ((m2 - m1 * m1).max(0.0) / n).sqrt()
}

/// Fills the `se` column of a functional fit from its influence matrix.
pub fn attach_se(functional: &mut FunctionalFit, matrix: &InfluenceMatrix) {
    assert_eq!(matrix.grid_len, functional.grid.len());
    functional.se = matrix.pointwise_se();
}

/// Everything the curve pipeline produces in one pass: the c.d.f. estimate
/// with standard errors, the density estimate on the same grid, and the
/// influence matrix ready for the multiplier bootstrap.
#[derive(Debug, Clone)]
pub struct CurveBundle {
    pub cdf: FunctionalFit,
    pub pdf: DensityCurve,
    pub influence: InfluenceMatrix,
}

/// Runs the full curve pipeline on a fitted model.
pub fn estimate_curves(
    data: &Dataset,
    known: &KnownComponent,
    fit: &ModelFit,
    grid: &EvaluationGrid,
    density_cfg: &DensityConfig,
) -> Result<CurveBundle> {
    let mut cdf = f_n_cdf(data, known, &fit.euclidean.params, grid)?;
    let pdf = f_n_pdf_grid(data, known, &fit.euclidean.params, grid, density_cfg)?;
    let influence = influence_matrix(data, known, fit, &cdf, &pdf.raw)?;
    attach_se(&mut cdf, &influence);
    Ok(CurveBundle { cdf, pdf, influence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euclidean::fit_model;
    use crate::model::{Dataset, ErrorDistribution};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn fixture_line() -> Dataset {
        Dataset::from_pairs(&[(-1.0, 1.0), (0.0, 2.0), (1.0, 3.0), (2.0, 4.0)]).unwrap()
    }

    fn unit_known() -> KnownComponent {
        KnownComponent::canonical(ErrorDistribution::normal(1.0).unwrap())
    }

    #[test]
    fn grid_constructors_validate() {
        assert!(EvaluationGrid::new(vec![]).is_err());
        assert!(EvaluationGrid::new(vec![0.0, 0.0]).is_err());
        assert!(EvaluationGrid::new(vec![1.0, 0.0]).is_err());
        assert!(EvaluationGrid::uniform(0.0, 1.0, 0).is_err());
        assert!(EvaluationGrid::uniform(1.0, 1.0, 5).is_err());
        let g = EvaluationGrid::uniform(0.0, 1.0, 5).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let single = EvaluationGrid::uniform(-1.0, 3.0, 1).unwrap();
        assert_eq!(single.points(), &[1.0]);
    }

    #[test]
    fn exact_fit_residual_grid_collapses() {
        let params = EuclideanParams { alpha: 2.0, beta: 1.0, pi: 1.0 };
        let g = EvaluationGrid::over_residual_range(&fixture_line(), &params, 100).unwrap();
        assert_eq!(g.points(), &[0.0]);
    }

    #[test]
    fn ecdf_boundaries_and_steps() {
        let data = Dataset::from_pairs(&[(0.0, 1.0), (0.0, 2.0), (0.0, 4.0)]).unwrap();
        // Residuals at (0,0): the y values themselves.
        assert_eq!(j_n(&data, 0.0, 0.0, 0.5), 0.0);
        assert_eq!(j_n(&data, 0.0, 0.0, 1.0), 1.0 / 3.0);
        assert_eq!(j_n(&data, 0.0, 0.0, 3.0), 2.0 / 3.0);
        assert_eq!(j_n(&data, 0.0, 0.0, 10.0), 1.0);
    }

    #[test]
    fn ecdf_on_the_exact_fixture_is_a_unit_step() {
        let data = fixture_line();
        assert_eq!(j_n(&data, 2.0, 1.0, -1e-12), 0.0);
        assert_eq!(j_n(&data, 2.0, 1.0, 0.0), 1.0);
    }

    #[test]
    fn known_average_reduces_to_the_cdf_without_slope() {
        let data = Dataset::from_pairs(&[(5.0, 0.0), (-3.0, 1.0), (0.4, 2.0)]).unwrap();
        let known = unit_known();
        for &t in &[-1.0, 0.0, 0.7] {
            assert_relative_eq!(
                k_n(&data, &known, 0.0, 0.0, t),
                known.noise.cdf(t),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn known_average_two_point_symmetry() {
        let data = Dataset::from_pairs(&[(-1.0, 0.0), (1.0, 0.0)]).unwrap();
        let known = unit_known();
        // (Φ(−1) + Φ(1))/2 = 1/2 by symmetry.
        assert_relative_eq!(k_n(&data, &known, 0.0, 1.0, 0.0), 0.5, epsilon = 1e-14);
        assert!(k_n(&data, &known, 0.0, 1.0, 50.0) > 1.0 - 1e-12);
        assert!(k_n(&data, &known, 0.0, 1.0, -50.0) < 1e-12);
    }

    #[test]
    fn cdf_estimate_is_the_ecdf_when_the_weight_is_one() {
        let data = fixture_line();
        let params = EuclideanParams { alpha: 2.0, beta: 1.0, pi: 1.0 };
        let grid = EvaluationGrid::new(vec![-1.0, -0.5, 0.0, 0.5, 1.0]).unwrap();
        let fit = f_n_cdf(&data, &unit_known(), &params, &grid).unwrap();
        assert_eq!(fit.f_raw, vec![0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(fit.f_raw, fit.j_vals);
        assert_eq!(fit.f_clamped, fit.f_raw);
    }

    #[test]
    fn cdf_estimate_satisfies_its_defining_identity() {
        let data = sample_mixture(21, 400, 0.6);
        let fit = fit_model(&data).unwrap();
        let grid =
            EvaluationGrid::over_residual_range(&data, &fit.euclidean.params, 50).unwrap();
        let f = f_n_cdf(&data, &unit_known(), &fit.euclidean.params, &grid).unwrap();
        let pi = fit.euclidean.params.pi;
        for j in 0..grid.len() {
            let lhs = f.f_raw[j];
            let rhs = (f.j_vals[j] - (1.0 - pi) * f.k_vals[j]) / pi;
            assert!((lhs - rhs).abs() <= 1e-12);
            assert!((0.0..=1.0).contains(&f.f_clamped[j]));
        }
        // J is a nondecreasing step function with increments in units of 1/n.
        for w in f.j_vals.windows(2) {
            assert!(w[1] >= w[0]);
            let step_units = (w[1] - w[0]) * data.n() as f64;
            assert_relative_eq!(step_units, step_units.round(), epsilon = 1e-9);
        }
        for w in f.k_vals.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn zero_weight_is_outside_the_domain() {
        let params = EuclideanParams { alpha: 0.0, beta: 1.0, pi: 0.0 };
        let grid = EvaluationGrid::new(vec![0.0]).unwrap();
        assert!(matches!(
            f_n_cdf(&fixture_line(), &unit_known(), &params, &grid),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn sorted_ecdf_matches_the_naive_loop_bitwise() {
        let data = sample_mixture(33, 157, 0.7);
        let fit = fit_model(&data).unwrap();
        let params = fit.euclidean.params;
        // Include exact residual values in the grid to probe the ≤ boundary.
        let mut pts: Vec<f64> = data.residuals(params.alpha, params.beta);
        pts.truncate(40);
        pts.extend((0..20).map(|i| -3.0 + 0.3 * i as f64));
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let grid = EvaluationGrid::new(pts).unwrap();
        let f = f_n_cdf(&data, &unit_known(), &params, &grid).unwrap();
        for (j, &t) in grid.points().iter().enumerate() {
            let naive = j_n(&data, params.alpha, params.beta, t);
            assert_eq!(f.j_vals[j], naive, "t = {t}");
        }
    }

    #[test]
    fn pointwise_se_closed_forms() {
        assert_eq!(pointwise_se(&[3.0, 3.0, 3.0, 3.0]), 0.0);
        assert_relative_eq!(pointwise_se(&[0.0, 2.0]), 1.0 / 2.0_f64.sqrt(), epsilon = 1e-15);
    }

    fn sample_mixture(seed: u64, n: usize, pi: f64) -> Dataset {
        let mut rng = crate::rng::stream_rng(seed, 7);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let x = 2.0 + 3.0 * rng.sample::<f64, _>(StandardNormal);
                let y = if rng.random::<f64>() < pi {
                    2.0 + x + rng.sample::<f64, _>(StandardNormal)
                } else {
                    rng.sample::<f64, _>(StandardNormal)
                };
                (x, y)
            })
            .collect();
        Dataset::from_pairs(&pairs).unwrap()
    }

    #[test]
    fn parameter_influences_average_to_zero() {
        let data = sample_mixture(14, 2_000, 0.7);
        let fit = fit_model(&data).unwrap();
        let mut mean = [0.0_f64; 3];
        for o in data.obs() {
            let v = fit.parameter_influence(o.x, o.y);
            for k in 0..3 {
                mean[k] += v[k];
            }
        }
        for v in mean {
            assert!((v / data.n() as f64).abs() < 1e-8, "mean influence {v}");
        }
    }

    #[test]
    fn influence_matrix_matches_the_naive_formula() {
        let data = sample_mixture(25, 120, 0.65);
        let fit = fit_model(&data).unwrap();
        let params = fit.euclidean.params;
        let grid = EvaluationGrid::uniform(-2.0, 2.0, 7).unwrap();
        let known = unit_known();
        let functional = f_n_cdf(&data, &known, &params, &grid).unwrap();
        let density: Vec<f64> = grid.points().iter().map(|&t| 0.1 + 0.05 * t).collect();
        let matrix = influence_matrix(&data, &known, &fit, &functional, &density).unwrap();
        let pi = params.pi;
        let x_bar = fit.gamma.gamma[4];
        for (i, o) in data.obs().iter().enumerate() {
            let psi = fit.parameter_influence(o.x, o.y);
            let r = o.y - params.alpha - params.beta * o.x;
            for (j, &t) in grid.points().iter().enumerate() {
                let expected = if r <= t { 1.0 / pi } else { 0.0 }
                    + density[j] * psi[0]
                    + density[j] * x_bar * psi[1]
                    - (1.0 - pi) / pi * known.noise.cdf(t + params.alpha + params.beta * o.x)
                    + (functional.k_vals[j] - functional.j_vals[j]) / (pi * pi) * psi[2];
                assert!(
                    (matrix.row(i)[j] - expected).abs() <= 1e-12,
                    "obs {i} point {j}: {} vs {expected}",
                    matrix.row(i)[j]
                );
            }
        }
    }

    #[test]
    fn single_point_influence_agrees_with_the_matrix() {
        let data = sample_mixture(31, 90, 0.7);
        let fit = fit_model(&data).unwrap();
        let known = unit_known();
        let seq = influence_hat(&data, &known, &fit, 0.2, 0.3).unwrap();
        assert_eq!(seq.len(), data.n());
        let se = pointwise_se(&seq);
        assert!(se.is_finite() && se > 0.0);
    }

    #[test]
    fn estimator_tracks_the_true_distribution_in_large_samples() {
        // 20 replicates at n = 10⁵: |F_n(F⁻¹(p)) − p| < 0.02 must hold for
        // p ∈ {0.1, 0.5, 0.9} in at least 19.
        let known = unit_known();
        let std = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::ContinuousCDF;
        let mut good = 0;
        for rep in 0..20 {
            let data = sample_mixture(100 + rep, 100_000, 0.7);
            let fit = fit_model(&data).unwrap();
            let quantiles: Vec<f64> = [0.1, 0.5, 0.9].iter().map(|&p| std.inverse_cdf(p)).collect();
            let grid = EvaluationGrid::new(quantiles).unwrap();
            let f = f_n_cdf(&data, &known, &fit.euclidean.params, &grid).unwrap();
            let ok = f
                .f_raw
                .iter()
                .zip([0.1, 0.5, 0.9])
                .all(|(&est, p)| (est - p).abs() < 0.02);
            if ok {
                good += 1;
            }
        }
        assert!(good >= 19, "only {good} of 20 replicates were accurate");
    }
}
