//! Streaming moment accumulation and the two least-squares systems built from
//! the accumulated means.
//!
//! Everything downstream of the data is a function of a fixed set of raw
//! moments of (X, Y): the response regressed on X, the squared response
//! regressed on (1, X, X²), the cubed response regressed on (1, X, X², X³)
//! for a variance diagnostic, plus the plain X-powers through X⁸ used by the
//! joint covariance. [`accumulate_moments`] gathers all of them in one pass
//! with compensated (Neumaier) summation, so the result is permutation-stable
//! to ~1e−15 and a later overflow is reported by monomial name.
//!
//! Two parameter systems are solved from the summary:
//! * the 5-parameter system λ (response and squared-response regressions),
//!   enough for the closed-form estimator family;
//! * the 8-parameter system γ (same regressions with the squared response
//!   regressed on (1, X²) only, plus the first four X-power means), whose
//!   estimating-equation structure drives the joint sandwich covariance.
//!
//! The solves use analytically expanded 2×2/3×3 normal-equation solutions;
//! the full matrix solves exist as cross-check paths and must agree to 1e−10
//! (enforced in the test suite).

use crate::error::{Error, Result};
use crate::model::Dataset;
use nalgebra::{SMatrix, SVector};

pub type Mat8 = SMatrix<f64, 8, 8>;
pub type Vec8 = SVector<f64, 8>;
pub type Mat5 = SMatrix<f64, 5, 5>;
pub type Vec5 = SVector<f64, 5>;

/// Condition-number ceiling above which a moment system is treated as
/// degenerate rather than solved.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Compensated accumulator (Neumaier's variant of Kahan summation).
#[derive(Debug, Clone, Copy, Default)]
struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample means of every monomial the estimators consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub n: usize,
    pub x: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
    pub x5: f64,
    pub x6: f64,
    pub x7: f64,
    pub x8: f64,
    pub y: f64,
    pub y2: f64,
    pub y3: f64,
    pub xy: f64,
    pub xy2: f64,
    pub xy3: f64,
    pub x2y: f64,
    pub x2y2: f64,
    pub x2y3: f64,
    pub x3y2: f64,
    pub x3y3: f64,
}

const MONOMIALS: [&str; 19] = [
    "mean(X)", "mean(X^2)", "mean(X^3)", "mean(X^4)", "mean(X^5)", "mean(X^6)", "mean(X^7)",
    "mean(X^8)", "mean(Y)", "mean(Y^2)", "mean(Y^3)", "mean(XY)", "mean(XY^2)", "mean(XY^3)",
    "mean(X^2Y)", "mean(X^2Y^2)", "mean(X^2Y^3)", "mean(X^3Y^2)", "mean(X^3Y^3)",
];

/// One pass over the data, compensated summation per monomial.
pub fn accumulate_moments(data: &Dataset) -> Result<MomentSummary> {
    let mut acc = [NeumaierSum::default(); 19];
    for o in data.obs() {
        let x = o.x;
        let y = o.y;
        let x2 = x * x;
        let x3 = x2 * x;
        let x4 = x3 * x;
        let x5 = x4 * x;
        let x6 = x5 * x;
        let x7 = x6 * x;
        let x8 = x7 * x;
        let y2 = y * y;
        let y3 = y2 * y;
        let terms = [
            x,
            x2,
            x3,
            x4,
            x5,
            x6,
            x7,
            x8,
            y,
            y2,
            y3,
            x * y,
            x * y2,
            x * y3,
            x2 * y,
            x2 * y2,
            x2 * y3,
            x3 * y2,
            x3 * y3,
        ];
        for (a, t) in acc.iter_mut().zip(terms) {
            a.add(t);
        }
    }
    let n = data.n() as f64;
    let mut means = [0.0_f64; 19];
    for (i, a) in acc.iter().enumerate() {
        means[i] = a.value() / n;
        if !means[i].is_finite() {
            return Err(Error::NumericOverflow { monomial: MONOMIALS[i] });
        }
    }
    Ok(MomentSummary {
        n: data.n(),
        x: means[0],
        x2: means[1],
        x3: means[2],
        x4: means[3],
        x5: means[4],
        x6: means[5],
        x7: means[6],
        x8: means[7],
        y: means[8],
        y2: means[9],
        y3: means[10],
        xy: means[11],
        xy2: means[12],
        xy3: means[13],
        x2y: means[14],
        x2y2: means[15],
        x2y3: means[16],
        x3y2: means[17],
        x3y3: means[18],
    })
}

/// The 8-parameter system: coefficient vector, its normal-equation matrix,
/// and the moment vector it solves against.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    pub gamma: [f64; 8],
    pub matrix: Mat8,
    pub theta: Vec8,
    pub condition: f64,
}

/// The 5-parameter system: coefficient vector, matrix, right-hand side, and
/// the matrix condition number used for the degeneracy guard.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEstimate {
    pub lambda: [f64; 5],
    pub matrix: Mat5,
    pub upsilon: Vec5,
    pub condition: f64,
}

/// Normal-equation matrix and right-hand side of the 8-parameter system.
pub fn gamma_system(m: &MomentSummary) -> (Mat8, Vec8) {
    let mut a = Mat8::zeros();
    a[(0, 0)] = 1.0;
    a[(0, 1)] = m.x;
    a[(1, 0)] = m.x;
    a[(1, 1)] = m.x2;
    a[(2, 2)] = 1.0;
    a[(2, 3)] = m.x2;
    a[(3, 2)] = m.x2;
    a[(3, 3)] = m.x4;
    for k in 4..8 {
        a[(k, k)] = 1.0;
    }
    let theta = Vec8::from_column_slice(&[m.y, m.xy, m.y2, m.x2y2, m.x, m.x2, m.x3, m.x4]);
    (a * 2.0, theta * 2.0)
}

/// Normal-equation matrix and right-hand side of the 5-parameter system.
pub fn lambda_system(m: &MomentSummary) -> (Mat5, Vec5) {
    let mut a = Mat5::zeros();
    a[(0, 0)] = 1.0;
    a[(0, 1)] = m.x;
    a[(1, 0)] = m.x;
    a[(1, 1)] = m.x2;
    a[(2, 2)] = 1.0;
    a[(2, 3)] = m.x;
    a[(2, 4)] = m.x2;
    a[(3, 2)] = m.x;
    a[(3, 3)] = m.x2;
    a[(3, 4)] = m.x3;
    a[(4, 2)] = m.x2;
    a[(4, 3)] = m.x3;
    a[(4, 4)] = m.x4;
    let upsilon = Vec5::from_column_slice(&[m.y, m.xy, m.y2, m.xy2, m.x2y2]);
    (a * 2.0, upsilon * 2.0)
}

/// Spectral condition number from extreme singular values, rejected against
/// [`CONDITION_LIMIT`].
pub(crate) fn condition_check(sv_max: f64, sv_min: f64, what: &str) -> Result<f64> {
    let cond = if sv_min <= 0.0 { f64::INFINITY } else { sv_max / sv_min };
    if !cond.is_finite() || cond >= CONDITION_LIMIT {
        return Err(Error::DegenerateDesign { what: what.into(), condition: cond });
    }
    Ok(cond)
}

fn check_condition8(a: &Mat8, what: &str) -> Result<f64> {
    let sv = a.singular_values();
    condition_check(sv.max(), sv.min(), what)
}

fn check_condition5(a: &Mat5, what: &str) -> Result<f64> {
    let sv = a.singular_values();
    condition_check(sv.max(), sv.min(), what)
}

/// Solves the 8-parameter system by its closed-form per-regression solution:
/// y on x, y² on x², and the four X-power means.
pub fn fit_gamma(m: &MomentSummary) -> Result<GammaEstimate> {
    let (matrix, theta) = gamma_system(m);
    let condition = check_condition8(&matrix, "8-parameter moment system")?;
    let var_x = m.x2 - m.x * m.x;
    let cov_xy = m.xy - m.x * m.y;
    let g2 = cov_xy / var_x;
    let g1 = m.y - g2 * m.x;
    let var_x2 = m.x4 - m.x2 * m.x2;
    let cov_x2y2 = m.x2y2 - m.x2 * m.y2;
    let g4 = cov_x2y2 / var_x2;
    let g3 = m.y2 - g4 * m.x2;
    Ok(GammaEstimate {
        gamma: [g1, g2, g3, g4, m.x, m.x2, m.x3, m.x4],
        matrix,
        theta,
        condition,
    })
}

/// Cross-check path: the same system solved as one dense 8×8 problem.
pub fn solve_gamma_full(m: &MomentSummary) -> Result<[f64; 8]> {
    let (a, theta) = gamma_system(m);
    check_condition8(&a, "8-parameter moment system")?;
    let sol = a.lu().solve(&theta).ok_or_else(|| Error::DegenerateDesign {
        what: "8-parameter moment system (LU)".into(),
        condition: f64::INFINITY,
    })?;
    Ok(sol.as_slice().try_into().expect("length 8"))
}

/// Solves the 5-parameter system: y on x closed-form, y² on (1, x, x²) by an
/// analytically expanded 3×3 solve.
pub fn fit_lambda(m: &MomentSummary) -> Result<LambdaEstimate> {
    let (matrix, upsilon) = lambda_system(m);
    let condition = check_condition5(&matrix, "5-parameter moment system")?;
    let var_x = m.x2 - m.x * m.x;
    let l2 = (m.xy - m.x * m.y) / var_x;
    let l1 = m.y - l2 * m.x;
    // 3×3 normal equations of y² on (1, x, x²), Cramer expansion.
    let a11 = 1.0;
    let a12 = m.x;
    let a13 = m.x2;
    let a22 = m.x2;
    let a23 = m.x3;
    let a33 = m.x4;
    let b1 = m.y2;
    let b2 = m.xy2;
    let b3 = m.x2y2;
    let det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13)
        + a13 * (a12 * a23 - a22 * a13);
    let det3 = |c1: [f64; 3], c2: [f64; 3], c3: [f64; 3]| {
        c1[0] * (c2[1] * c3[2] - c2[2] * c3[1]) - c2[0] * (c1[1] * c3[2] - c1[2] * c3[1])
            + c3[0] * (c1[1] * c2[2] - c1[2] * c2[1])
    };
    let col1 = [a11, a12, a13];
    let col2 = [a12, a22, a23];
    let col3 = [a13, a23, a33];
    let rhs = [b1, b2, b3];
    let l3 = det3(rhs, col2, col3) / det;
    let l4 = det3(col1, rhs, col3) / det;
    let l5 = det3(col1, col2, rhs) / det;
    Ok(LambdaEstimate { lambda: [l1, l2, l3, l4, l5], matrix, upsilon, condition })
}

/// Cross-check path: the same system solved as one dense 5×5 problem.
pub fn solve_lambda_full(m: &MomentSummary) -> Result<[f64; 5]> {
    let (a, upsilon) = lambda_system(m);
    check_condition5(&a, "5-parameter moment system")?;
    let sol = a.lu().solve(&upsilon).ok_or_else(|| Error::DegenerateDesign {
        what: "5-parameter moment system (LU)".into(),
        condition: f64::INFINITY,
    })?;
    Ok(sol.as_slice().try_into().expect("length 5"))
}

/// Pointwise objective whose empirical stationarity defines the 8-parameter
/// fit: squared residuals of both regressions plus squared deviations of the
/// X-power means.
pub fn phi_gamma(g: &[f64; 8], x: f64, y: f64) -> f64 {
    let x2 = x * x;
    let r1 = y - g[0] - g[1] * x;
    let r2 = y * y - g[2] - g[3] * x2;
    let d5 = x - g[4];
    let d6 = x2 - g[5];
    let d7 = x2 * x - g[6];
    let d8 = x2 * x2 - g[7];
    r1 * r1 + r2 * r2 + d5 * d5 + d6 * d6 + d7 * d7 + d8 * d8
}

/// Gradient of [`phi_gamma`] in the eight parameters at one observation.
#[inline]
pub fn grad_phi_gamma(g: &[f64; 8], x: f64, y: f64) -> [f64; 8] {
    let x2 = x * x;
    let r1 = y - g[0] - g[1] * x;
    let r2 = y * y - g[2] - g[3] * x2;
    [
        -2.0 * r1,
        -2.0 * x * r1,
        -2.0 * r2,
        -2.0 * x2 * r2,
        -2.0 * (x - g[4]),
        -2.0 * (x2 - g[5]),
        -2.0 * (x2 * x - g[6]),
        -2.0 * (x2 * x2 - g[7]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dataset;
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Four noiseless points on y = 2 + x; every system solves exactly.
    pub(crate) fn fixture_line() -> Dataset {
        Dataset::from_pairs(&[(-1.0, 1.0), (0.0, 2.0), (1.0, 3.0), (2.0, 4.0)]).unwrap()
    }

    #[test]
    fn fixture_means_are_exact() {
        let m = accumulate_moments(&fixture_line()).unwrap();
        assert_eq!(m.n, 4);
        assert_eq!(m.x, 0.5);
        assert_eq!(m.x2, 1.5);
        assert_eq!(m.x3, 2.0);
        assert_eq!(m.x4, 4.5);
        assert_eq!(m.y, 2.5);
        assert_eq!(m.xy, 2.5);
        assert_eq!(m.y2, 7.5);
        assert_eq!(m.x2y2, 18.5);
    }

    #[test]
    fn fixture_gamma_is_the_frozen_vector() {
        let m = accumulate_moments(&fixture_line()).unwrap();
        let g = fit_gamma(&m).unwrap();
        let expected = [2.0, 1.0, 8.0 / 3.0, 29.0 / 9.0, 0.5, 1.5, 2.0, 4.5];
        for (a, b) in g.gamma.iter().zip(expected) {
            assert_relative_eq!(a, &b, max_relative = 1e-12);
        }
    }

    #[test]
    fn fixture_lambda_is_the_frozen_vector() {
        // y = x + 2 exactly, so y² = x² + 4x + 4 exactly.
        let m = accumulate_moments(&fixture_line()).unwrap();
        let l = fit_lambda(&m).unwrap();
        let expected = [2.0, 1.0, 4.0, 4.0, 1.0];
        for (a, b) in l.lambda.iter().zip(expected) {
            assert_relative_eq!(a, &b, max_relative = 1e-12);
        }
    }

    fn random_data(seed: u64, n: usize) -> Dataset {
        let mut rng = crate::rng::stream_rng(seed, 17);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let x: f64 = rng.random::<f64>() * 4.0 - 2.0;
                let y: f64 = rng.random::<f64>() * 6.0 - 3.0;
                (x, y)
            })
            .collect();
        Dataset::from_pairs(&pairs).unwrap()
    }

    #[test]
    fn normal_equations_hold_at_the_solution() {
        for seed in 0..5 {
            let m = accumulate_moments(&random_data(seed, 150)).unwrap();
            let g = fit_gamma(&m).unwrap();
            let resid = g.matrix * Vec8::from_column_slice(&g.gamma) - g.theta;
            let scale = g.theta.amax().max(1.0);
            assert!(resid.amax() <= 1e-9 * scale, "residual {:?}", resid);
            let l = fit_lambda(&m).unwrap();
            let resid = l.matrix * Vec5::from_column_slice(&l.lambda) - l.upsilon;
            let scale = l.upsilon.amax().max(1.0);
            assert!(resid.amax() <= 1e-9 * scale, "residual {:?}", resid);
        }
    }

    #[test]
    fn mean_gradient_vanishes_at_the_fit() {
        let data = random_data(3, 200);
        let m = accumulate_moments(&data).unwrap();
        let g = fit_gamma(&m).unwrap();
        let mut mean = [0.0_f64; 8];
        for o in data.obs() {
            let grad = grad_phi_gamma(&g.gamma, o.x, o.y);
            for (m, v) in mean.iter_mut().zip(grad) {
                *m += v;
            }
        }
        let scale = g.theta.amax().max(1.0);
        for v in mean {
            assert!((v / data.n() as f64).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn accumulation_is_permutation_stable() {
        let data = random_data(11, 500);
        let m1 = accumulate_moments(&data).unwrap();
        let mut obs: Vec<_> = data.obs().to_vec();
        // Deterministic shuffle.
        let mut rng = crate::rng::stream_rng(5, 23);
        for i in (1..obs.len()).rev() {
            let j = rng.random_range(0..=i);
            obs.swap(i, j);
        }
        let m2 = accumulate_moments(&Dataset::new(obs).unwrap()).unwrap();
        let pairs = [
            (m1.x, m2.x),
            (m1.x8, m2.x8),
            (m1.y3, m2.y3),
            (m1.x3y3, m2.x3y3),
            (m1.x2y2, m2.x2y2),
        ];
        for (a, b) in pairs {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn overflow_names_the_monomial() {
        let data = Dataset::from_pairs(&[(1e100, 1.0), (2.0, 3.0)]).unwrap();
        match accumulate_moments(&data).unwrap_err() {
            Error::NumericOverflow { monomial } => assert_eq!(monomial, "mean(X^4)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn second_moments_dominate_squared_means() {
        let m = accumulate_moments(&random_data(7, 300)).unwrap();
        assert!(m.x2 >= m.x * m.x);
        assert!(m.x4 >= m.x2 * m.x2);
        assert!(m.y2 >= m.y * m.y);
    }

    #[test]
    fn constant_x_is_degenerate() {
        let data = Dataset::from_pairs(&[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]).unwrap();
        let m = accumulate_moments(&data).unwrap();
        assert!(matches!(fit_gamma(&m), Err(Error::DegenerateDesign { .. })));
        assert!(matches!(fit_lambda(&m), Err(Error::DegenerateDesign { .. })));
    }

    #[test]
    fn closed_form_matches_full_solve() {
        for seed in 20..25 {
            let m = accumulate_moments(&random_data(seed, 120)).unwrap();
            let g = fit_gamma(&m).unwrap();
            let full = solve_gamma_full(&m).unwrap();
            let scale = g.gamma.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
            for (a, b) in g.gamma.iter().zip(full) {
                assert!((a - b).abs() <= 1e-10 * scale);
            }
            let l = fit_lambda(&m).unwrap();
            let full = solve_lambda_full(&m).unwrap();
            let scale = l.lambda.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
            for (a, b) in l.lambda.iter().zip(full) {
                assert!((a - b).abs() <= 1e-10 * scale);
            }
        }
    }
}
