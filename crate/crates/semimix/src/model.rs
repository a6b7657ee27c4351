//! Data model: observations on the canonical scale, the known component, and
//! the error laws used both as known residual distributions and as simulation
//! inputs.
//!
//! The estimators in this crate see pairs (x, y) in which the response is a
//! mixture: with probability 1 − π it is pure noise from a fully known law,
//! and with probability π it follows an unknown line α + βx plus unknown
//! noise. Raw data where the known component is a non-trivial line y* = a +
//! b·x are first brought onto that canonical scale by subtracting the line
//! ([`transform_to_canonical`]); afterwards only the known component's error
//! law matters.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::Distribution as RandDistribution;
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal cdf.
pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// One observation on the canonical scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
}

/// A validated, non-empty sample of observations (all values finite).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    obs: Vec<Observation>,
}

impl Dataset {
    /// Builds a dataset, rejecting empty input and non-finite values; the
    /// error names the 1-based position of the offending observation.
    pub fn new(obs: Vec<Observation>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::Ingestion { row: 0, message: "empty dataset".into() });
        }
        for (i, o) in obs.iter().enumerate() {
            if !o.x.is_finite() || !o.y.is_finite() {
                return Err(Error::Ingestion {
                    row: i + 1,
                    message: format!("non-finite observation ({}, {})", o.x, o.y),
                });
            }
        }
        Ok(Dataset { obs })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Dataset::new(pairs.iter().map(|&(x, y)| Observation { x, y }).collect())
    }

    pub fn n(&self) -> usize {
        self.obs.len()
    }

    pub fn obs(&self) -> &[Observation] {
        &self.obs
    }

    /// Residuals y − α − βx for a candidate line of the unknown component.
    pub fn residuals(&self, alpha: f64, beta: f64) -> Vec<f64> {
        self.obs.iter().map(|o| o.y - alpha - beta * o.x).collect()
    }
}

/// The Euclidean part of the model: unknown intercept, slope, and mixing
/// weight. A candidate triple — validity of π is checked where it matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EuclideanParams {
    pub alpha: f64,
    pub beta: f64,
    pub pi: f64,
}

impl EuclideanParams {
    pub fn new(alpha: f64, beta: f64, pi: f64) -> Self {
        EuclideanParams { alpha, beta, pi }
    }

    /// The mixing weight is identifiable only on (0, 1].
    pub fn pi_in_range(&self) -> bool {
        self.pi.is_finite() && self.pi > 0.0 && self.pi <= 1.0
    }
}

/// Mean-zero error law. Parametric members are recentered/rescaled so the mean
/// is exactly zero and the variance hits a declared target; the tabulated
/// member interpolates a user-supplied cdf.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorDistribution {
    /// Centered normal with standard deviation `sigma`.
    Normal { sigma: f64 },
    /// `scale · (G − shape/rate)` for G ~ Gamma(shape, rate); `scale` is chosen
    /// at construction so the variance equals a requested target.
    ShiftedGamma { shape: f64, rate: f64, scale: f64 },
    /// `scale · (E − 1)` for E a unit exponential.
    ShiftedExponential { scale: f64 },
    /// Piecewise-linear cdf through strictly increasing knots `(t, F(t))`.
    TabulatedCdf { knots: Vec<(f64, f64)> },
}

fn require_pos(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl ErrorDistribution {
    pub fn normal(sigma: f64) -> Result<Self> {
        Ok(ErrorDistribution::Normal { sigma: require_pos("sigma", sigma)? })
    }

    /// Gamma(shape, rate) recentered to mean zero, rescaled so the variance is
    /// `target_variance`.
    pub fn shifted_gamma(shape: f64, rate: f64, target_variance: f64) -> Result<Self> {
        let shape = require_pos("shape", shape)?;
        let rate = require_pos("rate", rate)?;
        let target = require_pos("target variance", target_variance)?;
        let base_var = shape / (rate * rate);
        Ok(ErrorDistribution::ShiftedGamma { shape, rate, scale: (target / base_var).sqrt() })
    }

    /// Unit exponential recentered to mean zero, rescaled so the variance is
    /// `target_variance`.
    pub fn shifted_exponential(target_variance: f64) -> Result<Self> {
        let target = require_pos("target variance", target_variance)?;
        Ok(ErrorDistribution::ShiftedExponential { scale: target.sqrt() })
    }

    /// Piecewise-linear cdf through `(t, F(t))` knots: t strictly increasing
    /// and finite, F non-decreasing within [0, 1], at least two knots.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Config("tabulated cdf needs at least two knots".into()));
        }
        for (i, &(t, f)) in knots.iter().enumerate() {
            if !t.is_finite() || !f.is_finite() || !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!(
                    "tabulated cdf knot {} out of range: ({t}, {f})",
                    i + 1
                )));
            }
            if i > 0 {
                let (tp, fp) = knots[i - 1];
                if t <= tp || f < fp {
                    return Err(Error::Config(format!(
                        "tabulated cdf knots must have strictly increasing t and non-decreasing F (knot {})",
                        i + 1
                    )));
                }
            }
        }
        Ok(ErrorDistribution::TabulatedCdf { knots })
    }

    /// Variance of the law. For the tabulated cdf this is the exact variance
    /// of the interpolated distribution (mass outside the knot range, if the
    /// tabulated F does not reach 0/1, sits at the end knots).
    pub fn variance(&self) -> f64 {
        match self {
            ErrorDistribution::Normal { sigma } => sigma * sigma,
            ErrorDistribution::ShiftedGamma { shape, rate, scale } => {
                scale * scale * shape / (rate * rate)
            }
            ErrorDistribution::ShiftedExponential { scale } => scale * scale,
            ErrorDistribution::TabulatedCdf { knots } => {
                // Mixture of uniforms on the segments plus point masses at the
                // ends for any untabulated tail mass.
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                let (t0, f0) = knots[0];
                let (tl, fl) = *knots.last().unwrap();
                m1 += f0 * t0 + (1.0 - fl) * tl;
                m2 += f0 * t0 * t0 + (1.0 - fl) * tl * tl;
                for w in knots.windows(2) {
                    let (a, fa) = w[0];
                    let (b, fb) = w[1];
                    let df = fb - fa;
                    m1 += df * 0.5 * (a + b);
                    m2 += df * (a * a + a * b + b * b) / 3.0;
                }
                m2 - m1 * m1
            }
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            ErrorDistribution::Normal { sigma } => std_normal_cdf(t / sigma),
            ErrorDistribution::ShiftedGamma { shape, rate, scale } => {
                let arg = shape / rate + t / scale;
                if arg <= 0.0 {
                    0.0
                } else {
                    statrs::function::gamma::gamma_lr(*shape, rate * arg)
                }
            }
            ErrorDistribution::ShiftedExponential { scale } => {
                let arg = t / scale + 1.0;
                if arg <= 0.0 {
                    0.0
                } else {
                    -(-arg).exp_m1()
                }
            }
            ErrorDistribution::TabulatedCdf { knots } => {
                let (t0, _) = knots[0];
                let (tl, fl) = *knots.last().unwrap();
                if t < t0 {
                    return 0.0;
                }
                if t >= tl {
                    // Beyond the table the interpolant is exhausted; any
                    // untabulated tail mass sits past the last knot.
                    return if t > tl { 1.0 } else { fl };
                }
                let idx = knots.partition_point(|&(tk, _)| tk <= t);
                let (ta, fa) = knots[idx - 1];
                let (tb, fb) = knots[idx];
                fa + (fb - fa) * (t - ta) / (tb - ta)
            }
        }
    }

    /// Density (derivative of the cdf; for the tabulated law the slope of the
    /// active segment, with centered differencing exactly at interior knots).
    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            ErrorDistribution::Normal { sigma } => std_normal_pdf(t / sigma) / sigma,
            ErrorDistribution::ShiftedGamma { shape, rate, scale } => {
                let arg = shape / rate + t / scale;
                if arg <= 0.0 {
                    0.0
                } else {
                    let g = statrs::distribution::Gamma::new(*shape, *rate)
                        .expect("validated at construction");
                    g.pdf(arg) / scale
                }
            }
            ErrorDistribution::ShiftedExponential { scale } => {
                let arg = t / scale + 1.0;
                if arg <= 0.0 {
                    0.0
                } else {
                    (-arg).exp() / scale
                }
            }
            ErrorDistribution::TabulatedCdf { knots } => {
                let (t0, _) = knots[0];
                let (tl, _) = *knots.last().unwrap();
                if t < t0 || t > tl {
                    return 0.0;
                }
                // Piecewise-linear density: each segment's slope is attached
                // to its midpoint and slopes are interpolated between
                // midpoints.  At an interior knot this reduces to the
                // spacing-weighted average of the adjacent slopes.
                let nseg = knots.len() - 1;
                let slope = |i: usize| (knots[i + 1].1 - knots[i].1) / (knots[i + 1].0 - knots[i].0);
                let mid = |i: usize| 0.5 * (knots[i].0 + knots[i + 1].0);
                let idx = knots.partition_point(|&(tk, _)| tk < t);
                let i = if idx == 0 { 0 } else { (idx - 1).min(nseg - 1) };
                let (j0, j1) = if t <= mid(i) {
                    (i.saturating_sub(1), i)
                } else {
                    (i, (i + 1).min(nseg - 1))
                };
                if j0 == j1 {
                    return slope(j0);
                }
                let (m0, m1) = (mid(j0), mid(j1));
                let w = (t - m0) / (m1 - m0);
                slope(j0) + w * (slope(j1) - slope(j0))
            }
        }
    }

    /// Quantile function for p in (0, 1). The shifted gamma inverts its cdf by
    /// bisection to 1e−10; the others are closed-form / interpolated.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!("quantile level must be in (0,1), got {p}")));
        }
        match self {
            ErrorDistribution::Normal { sigma } => {
                let std = statrs::distribution::Normal::new(0.0, 1.0).expect("unit normal");
                Ok(sigma * std.inverse_cdf(p))
            }
            ErrorDistribution::ShiftedGamma { shape, rate, scale } => {
                // Bisection on the base Gamma(shape, rate) cdf.
                let mean = shape / rate;
                let mut lo = 0.0_f64;
                let mut hi = mean.max(1.0);
                let cdf = |g: f64| statrs::function::gamma::gamma_lr(*shape, rate * g);
                let mut guard = 0;
                while cdf(hi) < p {
                    hi *= 2.0;
                    guard += 1;
                    assert!(guard < 300, "gamma quantile bracket failed");
                }
                while hi - lo > 1e-10 * hi.abs().max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    if cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(scale * (0.5 * (lo + hi) - mean))
            }
            ErrorDistribution::ShiftedExponential { scale } => {
                Ok(scale * (-(1.0 - p).ln() - 1.0))
            }
            ErrorDistribution::TabulatedCdf { knots } => {
                let (t0, f0) = knots[0];
                let (tl, fl) = *knots.last().unwrap();
                if p <= f0 {
                    return Ok(t0);
                }
                if p >= fl {
                    return Ok(tl);
                }
                let idx = knots.partition_point(|&(_, fk)| fk < p);
                let (ta, fa) = knots[idx - 1];
                let (tb, fb) = knots[idx];
                if fb == fa {
                    return Ok(ta);
                }
                Ok(ta + (tb - ta) * (p - fa) / (fb - fa))
            }
        }
    }

    /// Draws one value.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorDistribution::Normal { sigma } => {
                let d = rand_distr::Normal::new(0.0, *sigma).expect("validated at construction");
                d.sample(rng)
            }
            ErrorDistribution::ShiftedGamma { shape, rate, scale } => {
                let d = rand_distr::Gamma::new(*shape, 1.0 / rate).expect("validated at construction");
                scale * (d.sample(rng) - shape / rate)
            }
            ErrorDistribution::ShiftedExponential { scale } => {
                let e: f64 = rand_distr::Exp1.sample(rng);
                scale * (e - 1.0)
            }
            ErrorDistribution::TabulatedCdf { .. } => {
                let u: f64 = rng.random();
                // u in [0,1); clamp into the open interval the quantile accepts.
                self.quantile(u.max(f64::MIN_POSITIVE)).expect("quantile on (0,1)")
            }
        }
    }
}

/// The fully known component: its line (subtracted during canonicalization)
/// and its mean-zero error law, which stays part of the estimation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownComponent {
    pub alpha: f64,
    pub beta: f64,
    pub noise: ErrorDistribution,
}

impl KnownComponent {
    pub fn new(alpha: f64, beta: f64, noise: ErrorDistribution) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Config(format!("known line must be finite, got ({alpha}, {beta})")));
        }
        Ok(KnownComponent { alpha, beta, noise })
    }

    /// A known component already on the canonical scale (zero line).
    pub fn canonical(noise: ErrorDistribution) -> Self {
        KnownComponent { alpha: 0.0, beta: 0.0, noise }
    }
}

/// Removes the known component's line from raw responses: y = ỹ − a − b·x.
/// Rejects non-finite input (or a non-finite transformed value) naming the
/// 1-based row.
pub fn transform_to_canonical(raw: &[(f64, f64)], known: &KnownComponent) -> Result<Dataset> {
    let mut obs = Vec::with_capacity(raw.len());
    for (i, &(x, y_raw)) in raw.iter().enumerate() {
        if !x.is_finite() || !y_raw.is_finite() {
            return Err(Error::Ingestion {
                row: i + 1,
                message: format!("non-finite value ({x}, {y_raw})"),
            });
        }
        let y = y_raw - (known.alpha + known.beta * x);
        if !y.is_finite() {
            return Err(Error::Ingestion {
                row: i + 1,
                message: format!("transformed response overflows ({x}, {y_raw})"),
            });
        }
        obs.push(Observation { x, y });
    }
    Dataset::new(obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, STREAM_EPS};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn parametric_variances_hit_target_exactly() {
        let g = ErrorDistribution::shifted_gamma(2.0, 0.5, 4.0).unwrap();
        assert_relative_eq!(g.variance(), 4.0, max_relative = 1e-12);
        let e = ErrorDistribution::shifted_exponential(4.0).unwrap();
        assert_relative_eq!(e.variance(), 4.0, max_relative = 1e-12);
        let n = ErrorDistribution::normal(2.0).unwrap();
        assert_relative_eq!(n.variance(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn sample_moments_match_law() {
        let laws = [
            ErrorDistribution::normal(1.0).unwrap(),
            ErrorDistribution::shifted_gamma(2.0, 0.5, 4.0).unwrap(),
            ErrorDistribution::shifted_exponential(4.0).unwrap(),
        ];
        for (k, law) in laws.iter().enumerate() {
            let mut rng = stream_rng(99 + k as u64, STREAM_EPS);
            let n = 400_000;
            let draws: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 0.02, "law {k}: sample mean {mean}");
            assert!((var / law.variance() - 1.0).abs() < 0.03, "law {k}: sample var {var}");
        }
    }

    #[test]
    fn cdf_derivative_matches_pdf() {
        let laws = [
            ErrorDistribution::normal(1.5).unwrap(),
            ErrorDistribution::shifted_gamma(2.0, 0.5, 4.0).unwrap(),
            ErrorDistribution::shifted_exponential(2.0).unwrap(),
        ];
        for law in &laws {
            for &t in &[-1.3, -0.2, 0.0, 0.4, 1.7, 3.1] {
                let h = 1e-5;
                let fd = (law.cdf(t + h) - law.cdf(t - h)) / (2.0 * h);
                assert_relative_eq!(fd, law.pdf(t), max_relative = 1e-5, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let laws = [
            ErrorDistribution::normal(2.0).unwrap(),
            ErrorDistribution::shifted_gamma(2.0, 0.5, 4.0).unwrap(),
            ErrorDistribution::shifted_exponential(4.0).unwrap(),
        ];
        for law in &laws {
            for &p in &[0.01, 0.1, 0.5, 0.9, 0.99] {
                let q = law.quantile(p).unwrap();
                assert!((law.cdf(q) - p).abs() < 1e-9, "p={p}, q={q}, cdf={}", law.cdf(q));
            }
        }
    }

    #[test]
    fn tabulated_tracks_the_law_it_sampled() {
        let base = ErrorDistribution::normal(1.0).unwrap();
        let knots: Vec<(f64, f64)> =
            (0..=400).map(|i| -5.0 + i as f64 * 0.025).map(|t| (t, base.cdf(t))).collect();
        let tab = ErrorDistribution::tabulated(knots).unwrap();
        for &t in &[-2.0, -0.5, 0.0, 0.77, 2.5] {
            assert!((tab.cdf(t) - base.cdf(t)).abs() < 1e-4);
            assert!((tab.pdf(t) - base.pdf(t)).abs() < 1e-3);
        }
        for &p in &[0.1, 0.5, 0.9] {
            assert!(
                (tab.quantile(p).unwrap() - base.quantile(p).unwrap()).abs() < 1e-3,
                "p = {p}"
            );
        }
        assert!((tab.variance() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tabulated_rejects_bad_knots() {
        assert!(ErrorDistribution::tabulated(vec![(0.0, 0.0)]).is_err());
        assert!(ErrorDistribution::tabulated(vec![(0.0, 0.2), (0.0, 0.4)]).is_err());
        assert!(ErrorDistribution::tabulated(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(ErrorDistribution::tabulated(vec![(0.0, 0.5), (1.0, 1.4)]).is_err());
    }

    #[test]
    fn dataset_rejects_bad_rows() {
        assert!(Dataset::from_pairs(&[]).is_err());
        let err = Dataset::from_pairs(&[(0.0, 1.0), (f64::NAN, 2.0)]).unwrap_err();
        match err {
            Error::Ingestion { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn transform_is_invertible(
            x in -1e6f64..1e6,
            y_raw in -1e6f64..1e6,
            a in -1e3f64..1e3,
            b in -1e3f64..1e3,
        ) {
            let known = KnownComponent::new(a, b, ErrorDistribution::normal(1.0).unwrap()).unwrap();
            let data = transform_to_canonical(&[(x, y_raw)], &known).unwrap();
            let back = data.obs()[0].y + (a + b * x);
            let scale = y_raw.abs().max((a + b * x).abs()).max(1.0);
            prop_assert!((back - y_raw).abs() <= f64::EPSILON * scale);
        }
    }
}
