//! Euclidean parameter estimation: the smooth map from the 8-parameter moment
//! system to (α, β, π), its Jacobian, and the joint sandwich covariance.
//!
//! With the known component reduced to canonical form, the intercept and
//! slope of the response regression identify π·α and π·β, while the squared
//! response regressed on (1, X²) contributes the curvature coefficient that
//! separates the three parameters.  The map is evaluated literally in the
//! order slope → weight → intercept:
//!
//! ```text
//! q = γ₈ − γ₆²          (central fourth-power spread of X)
//! r = γ₇ − γ₅γ₆         (third-order cross term)
//! D = γ₂ + 2γ₁ r / q
//! β = γ₄ / D,   π = γ₂ / β,   α = γ₁ / π
//! ```
//!
//! Standard errors come from the estimating-equation sandwich
//! Σ = Ψ Γ⁻¹ ℙₙ(φ̇φ̇ᵀ) Γ⁻¹ Ψᵀ with Ψ the analytic Jacobian of the map; the
//! per-observation influence of every parameter falls out of the same
//! product and is reused by the distribution-function estimator.
//!
//! The module also carries the closed-form estimator family built from the
//! 5-parameter system (three algebraically distinct expressions per
//! parameter, each defined only where its denominator is bounded away from
//! zero) and a diagnostic that recovers the variance of the known component
//! from a cubed-response regression.

use crate::error::{Error, Result};
use crate::model::{Dataset, EuclideanParams};
use crate::moments::{
    accumulate_moments, fit_gamma, fit_lambda, grad_phi_gamma, GammaEstimate, MomentSummary, Vec8,
};
use nalgebra::{SMatrix, SVector};

pub type Mat3 = SMatrix<f64, 3, 3>;
pub type Jacobian38 = SMatrix<f64, 3, 8>;

/// Relative guard: denominators smaller than this times the coefficient
/// scale make the map undefined.
const MAP_GUARD: f64 = 1e-12;

fn guard_scale(g: &[f64; 8]) -> f64 {
    g.iter().fold(1.0_f64, |a, b| a.max(b.abs())) * MAP_GUARD
}

struct MapParts {
    q: f64,
    s: f64,
    d: f64,
    beta: f64,
    pi: f64,
    alpha: f64,
}

fn map_parts(g: &[f64; 8]) -> Result<MapParts> {
    let tol = guard_scale(g);
    let q = g[7] - g[5] * g[5];
    if q.abs() <= tol {
        return Err(Error::OutsideDomain(
            "fourth-power spread of the design is zero; slope denominator undefined".into(),
        ));
    }
    let r = g[6] - g[4] * g[5];
    let s = r / q;
    let d = g[1] + 2.0 * g[0] * s;
    if d.abs() <= tol {
        return Err(Error::OutsideDomain(
            "slope denominator D = γ₂ + 2γ₁r/q vanishes".into(),
        ));
    }
    let beta = g[3] / d;
    if beta.abs() <= tol {
        return Err(Error::OutsideDomain("estimated slope is zero; weight undefined".into()));
    }
    let pi = g[1] / beta;
    if pi.abs() <= tol {
        return Err(Error::OutsideDomain("estimated weight is zero; intercept undefined".into()));
    }
    let alpha = g[0] / pi;
    Ok(MapParts { q, s, d, beta, pi, alpha })
}

/// Evaluates the map γ ↦ (α, β, π).  Values outside the identified region
/// (π ∉ (0, 1]) are returned as-is; only algebraic degeneracies error.
pub fn map_gamma_to_params(g: &[f64; 8]) -> Result<EuclideanParams> {
    let p = map_parts(g)?;
    Ok(EuclideanParams { alpha: p.alpha, beta: p.beta, pi: p.pi })
}

/// Analytic Jacobian of the map, rows ordered (α, β, π), columns γ₁..γ₈.
pub fn jacobian_psi(g: &[f64; 8]) -> Result<Jacobian38> {
    let p = map_parts(g)?;
    let MapParts { q, s, d, beta, pi, alpha } = p;
    // dD/dγ via the chain q, r → s → D.
    let mut dd = [0.0_f64; 8];
    dd[0] = 2.0 * s;
    dd[1] = 1.0;
    // ds/dγₖ = (dr/dγₖ − s·dq/dγₖ)/q for k ∈ {5,6,7,8}.
    dd[4] = 2.0 * g[0] * (-g[5]) / q;
    dd[5] = 2.0 * g[0] * (-g[4] + 2.0 * s * g[5]) / q;
    dd[6] = 2.0 * g[0] / q;
    dd[7] = 2.0 * g[0] * (-s) / q;
    let mut dbeta = [0.0_f64; 8];
    for k in 0..8 {
        dbeta[k] = -beta * dd[k] / d;
    }
    dbeta[3] += 1.0 / d;
    let mut dpi = [0.0_f64; 8];
    for k in 0..8 {
        dpi[k] = -pi * dbeta[k] / beta;
    }
    dpi[1] += 1.0 / beta;
    let mut dalpha = [0.0_f64; 8];
    for k in 0..8 {
        dalpha[k] = -alpha * dpi[k] / pi;
    }
    dalpha[0] += 1.0 / pi;
    let mut j = Jacobian38::zeros();
    for k in 0..8 {
        j[(0, k)] = dalpha[k];
        j[(1, k)] = dbeta[k];
        j[(2, k)] = dpi[k];
    }
    Ok(j)
}

/// The Euclidean fit: point estimates, their joint sandwich covariance, and
/// the linear operator taking an observation's objective gradient to its
/// parameter-estimate influence.
#[derive(Debug, Clone)]
pub struct EuclideanFit {
    pub params: EuclideanParams,
    /// Whether the estimated weight lies in the identified range (0, 1].
    pub pi_valid: bool,
    /// Sandwich covariance of (α, β, π), before the 1/n scaling.
    pub covariance: Mat3,
    /// sqrt(diag(covariance)/n).
    pub std_errors: [f64; 3],
    pub jacobian: Jacobian38,
    /// −Ψ Γ⁻¹; applied to the objective gradient of one observation it
    /// yields that observation's influence on (α̂, β̂, π̂).
    pub influence_map: Jacobian38,
}

/// Full fit of one dataset: moment summary, the 8-parameter system, and the
/// Euclidean parameters with covariance.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub moments: MomentSummary,
    pub gamma: GammaEstimate,
    pub euclidean: EuclideanFit,
}

impl ModelFit {
    /// Influence of the observation (x, y) on the three parameter estimates.
    #[inline]
    pub fn parameter_influence(&self, x: f64, y: f64) -> [f64; 3] {
        let g = grad_phi_gamma(&self.gamma.gamma, x, y);
        let v = self.euclidean.influence_map * Vec8::from_column_slice(&g);
        [v[0], v[1], v[2]]
    }
}

/// One-pass fit: moments, 8-parameter solve, parameter map, sandwich.
pub fn fit_model(data: &Dataset) -> Result<ModelFit> {
    let moments = accumulate_moments(data)?;
    let gamma = fit_gamma(&moments)?;
    let params = map_gamma_to_params(&gamma.gamma)?;
    let jacobian = jacobian_psi(&gamma.gamma)?;
    let gamma_inv = gamma.matrix.try_inverse().ok_or_else(|| Error::DegenerateDesign {
        what: "8-parameter moment system (inverse)".into(),
        condition: f64::INFINITY,
    })?;
    let bread = jacobian * gamma_inv;
    let mut meat = SMatrix::<f64, 8, 8>::zeros();
    for o in data.obs() {
        let g = Vec8::from_column_slice(&grad_phi_gamma(&gamma.gamma, o.x, o.y));
        meat += g * g.transpose();
    }
    meat /= data.n() as f64;
    let raw = bread * meat * bread.transpose();
    let covariance = (raw + raw.transpose()) * 0.5;
    let n = data.n() as f64;
    let std_errors = [
        (covariance[(0, 0)].max(0.0) / n).sqrt(),
        (covariance[(1, 1)].max(0.0) / n).sqrt(),
        (covariance[(2, 2)].max(0.0) / n).sqrt(),
    ];
    let pi_valid = params.pi_in_range();
    Ok(ModelFit {
        moments,
        gamma,
        euclidean: EuclideanFit {
            params,
            pi_valid,
            covariance,
            std_errors,
            jacobian,
            influence_map: -bread,
        },
    })
}

/// The closed-form estimator family from the 5-parameter system: three
/// algebraically distinct expressions per parameter.  A variant whose
/// denominator is within 1e−12 of zero is reported as undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaFamily {
    pub alpha: [Option<f64>; 3],
    pub beta: [Option<f64>; 3],
    pub pi: [Option<f64>; 3],
}

const FAMILY_GUARD: f64 = 1e-12;

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den.abs() > FAMILY_GUARD {
        Some(num / den)
    } else {
        None
    }
}

/// Evaluates all nine closed-form expressions at a 5-parameter vector.
pub fn lambda_param_family(l: &[f64; 5]) -> LambdaFamily {
    // The third coordinate (the constant of the squared-response regression)
    // does not enter any of the nine expressions.
    let [l1, l2, _l3, l4, l5] = *l;
    LambdaFamily {
        alpha: [
            ratio(l1 * l5, l2 * l2),
            ratio(l4, 2.0 * l2),
            ratio(l4 * l4, 4.0 * l1 * l5),
        ],
        beta: [
            ratio(l5, l2),
            ratio(l4, 2.0 * l1),
            ratio(l2 * l4 * l4, 4.0 * l5 * l1 * l1),
        ],
        pi: [
            ratio(l2 * l2, l5),
            ratio(2.0 * l1 * l2, l4),
            ratio(4.0 * l1 * l1 * l5, l4 * l4),
        ],
    }
}

/// Outcome of the known-component variance diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaStarDiagnostic {
    /// Estimated variance of the known component's error law.
    Estimate(f64),
    /// The defining ratio is 0/0 at the boundary π = 1 (or numerically
    /// indistinguishable from it).
    Undefined { reason: String },
}

/// Estimates the variance of the known component from the 5-parameter system
/// together with one coefficient of the cubed response regressed on
/// (1, X, X², X³).  The estimate exists only away from π = 1, where the
/// higher-order response moments still carry the known component's scale.
pub fn sigma_star_diagnostic(m: &MomentSummary) -> Result<SigmaStarDiagnostic> {
    let lam = fit_lambda(m)?;
    let [_l1, l2, l3, _l4, l5] = lam.lambda;
    // Cubed-response regression: 4×4 normal equations in the X powers.
    let mut a = SMatrix::<f64, 4, 4>::zeros();
    let pow = [1.0, m.x, m.x2, m.x3, m.x4, m.x5, m.x6];
    for i in 0..4 {
        for j in 0..4 {
            a[(i, j)] = pow[i + j];
        }
    }
    let rhs = SVector::<f64, 4>::from_column_slice(&[m.y3, m.xy3, m.x2y3, m.x3y3]);
    let sv = a.singular_values();
    let cond = crate::moments::condition_check(sv.max(), sv.min(), "cubed-response regression")?;
    let coef = a.lu().solve(&rhs).ok_or_else(|| Error::DegenerateDesign {
        what: "cubed-response regression (LU)".into(),
        condition: cond,
    })?;
    let l7 = coef[1] / 3.0;
    let scale = lam.lambda.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let den = l5 - l2 * l2;
    if den.abs() <= 1e-12 * scale {
        return Ok(SigmaStarDiagnostic::Undefined {
            reason: "λ₅ − λ₂² ≈ 0: the mixture weight is at (or numerically at) 1, so the \
                     known component leaves no trace in the response moments"
                .into(),
        });
    }
    Ok(SigmaStarDiagnostic::Estimate((l3 * l5 - l7 * l2) / den))
}
