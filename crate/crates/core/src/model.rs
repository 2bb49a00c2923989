//! Closed-form probability model for the photon-pair experiment.
//!
//! All angles are radians. Polarization physics has period π, so every
//! quantity here is unchanged when any input angle is shifted by a multiple
//! of π; [`Angle`] stores the canonical representative in `[0, π)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::error::{Error, Result};

/// An orientation on the polarization half-circle, in radians, `0 <= value < π`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Reduces `radians` modulo π into `[0, π)`.
    pub fn new(radians: f64) -> Result<Self> {
        normalize_angle(radians)
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(Error::NonFiniteAngle(degrees));
        }
        normalize_angle(degrees.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(radians: f64) -> Result<Self> {
        normalize_angle(radians)
    }
}

impl From<Angle> for f64 {
    fn from(angle: Angle) -> f64 {
        angle.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Canonical representative of `x` modulo π, in `[0, π)`.
pub fn normalize_angle(x: f64) -> Result<Angle> {
    if !x.is_finite() {
        return Err(Error::NonFiniteAngle(x));
    }
    // `+ 0.0` turns a -0.0 result into 0.0.
    let r = x.rem_euclid(PI) + 0.0;
    // rem_euclid can round up to exactly π for tiny negative inputs.
    if r >= PI {
        Ok(Angle(0.0))
    } else {
        Ok(Angle(r))
    }
}

/// Expectation of the product of two ±1 outcomes, in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Correlation(f64);

impl Correlation {
    pub const ZERO: Correlation = Correlation(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value.abs() <= 1.0 {
            Ok(Correlation(value))
        } else {
            Err(Error::domain(format!(
                "correlation {value} outside [-1, 1]"
            )))
        }
    }

    /// For values that are in range by construction; clamps rounding overshoot.
    pub(crate) fn from_bounded(value: f64) -> Self {
        Correlation(value.clamp(-1.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Correlation> for f64 {
    fn from(c: Correlation) -> f64 {
        c.0
    }
}

/// Probabilities of the four outcome pairs `(+,+)`, `(+,−)`, `(−,+)`, `(−,−)`
/// for one pair of polarizer settings. The first sign is photon A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointDistribution {
    /// Probability of equal outcomes minus probability of opposite outcomes.
    pub fn correlation(&self) -> Correlation {
        Correlation::from_bounded(self.p_pp + self.p_mm - self.p_pm - self.p_mp)
    }

    /// Probability that photon A passes.
    pub fn marginal_a(&self) -> f64 {
        self.p_pp + self.p_pm
    }

    /// Probability that photon B passes.
    pub fn marginal_b(&self) -> f64 {
        self.p_pp + self.p_mp
    }

    pub fn total(&self) -> f64 {
        self.p_pp + self.p_pm + self.p_mp + self.p_mm
    }

    /// Entries in the order `[p_pp, p_pm, p_mp, p_mm]`.
    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    /// Distribution with `p_pp = p_mm = ¼(1 + e)` and `p_pm = p_mp = ¼(1 − e)`,
    /// the unique one with both marginals ½ and correlation `e`.
    fn symmetric(e: f64) -> Self {
        let same = 0.25 * (1.0 + e);
        let opposite = 0.25 * (1.0 - e);
        JointDistribution {
            p_pp: same,
            p_pm: opposite,
            p_mp: opposite,
            p_mm: same,
        }
    }
}

/// Malus-law probability that photon A, polarized at `theta`, passes a
/// polarizer at `alpha`: `cos²(θ − α)`.
pub fn lhv_detect_prob_a(theta: Angle, alpha: Angle) -> f64 {
    let c = (theta.0 - alpha.0).cos();
    c * c
}

/// Probability that photon B, polarized at `theta + π/2`, passes a polarizer
/// at `beta`: `cos²(θ + π/2 − β)`.
pub fn lhv_detect_prob_b(theta: Angle, beta: Angle) -> f64 {
    let c = (theta.0 + FRAC_PI_2 - beta.0).cos();
    c * c
}

/// `p(++) = p(−−) = ¼ − ⅛·cos 2(α − β)`, `p(+−) = p(−+) = ¼ + ⅛·cos 2(α − β)`.
pub fn lhv_joint_distribution(alpha: Angle, beta: Angle) -> JointDistribution {
    JointDistribution::symmetric(lhv_correlation(alpha, beta).value())
}

/// `E(α, β) = −½·cos 2(α − β)`.
pub fn lhv_correlation(alpha: Angle, beta: Angle) -> Correlation {
    Correlation::from_bounded(-0.5 * (2.0 * (alpha.0 - beta.0)).cos())
}

/// Born-rule distribution for an orthogonally polarized photon pair:
/// `p(++) = p(−−) = ¼(1 − cos 2(α − β))`, `p(+−) = p(−+) = ¼(1 + cos 2(α − β))`.
pub fn qm_joint_distribution(alpha: Angle, beta: Angle) -> JointDistribution {
    JointDistribution::symmetric(qm_correlation(alpha, beta).value())
}

/// `E(α, β) = −cos 2(α − β)`.
pub fn qm_correlation(alpha: Angle, beta: Angle) -> Correlation {
    Correlation::from_bounded(-(2.0 * (alpha.0 - beta.0)).cos())
}

/// Composite midpoint approximation of
/// `(1/π) ∫₀^π cos²(θ − α)·cos²(θ + π/2 − β) dθ`.
///
/// Integrates the detection probabilities directly and never touches the
/// closed form, so it serves as an independent check of
/// [`lhv_joint_distribution`]. The integrand is a trigonometric polynomial
/// over a full period, for which the midpoint rule is exact up to rounding
/// once `steps > 4`.
pub fn quadrature_p_pp(alpha: Angle, beta: Angle, steps: usize) -> Result<f64> {
    if steps < 2 {
        return Err(Error::domain(format!(
            "quadrature needs at least 2 steps, got {steps}"
        )));
    }
    let h = PI / steps as f64;
    let sum: f64 = (0..steps)
        .map(|i| {
            let theta = Angle((i as f64 + 0.5) * h); // < π
            lhv_detect_prob_a(theta, alpha) * lhv_detect_prob_b(theta, beta)
        })
        .sum();
    Ok(sum / steps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn a(x: f64) -> Angle {
        Angle::new(x).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert!((a(3.0 * PI / 2.0).radians() - FRAC_PI_2).abs() < 1e-15);
        assert!((a(-FRAC_PI_4).radians() - 3.0 * FRAC_PI_4).abs() < 1e-15);
        assert_eq!(a(PI).radians(), 0.0);
        assert_eq!(a(-1e-300).radians(), 0.0);
        assert!(a(-0.0).radians().is_sign_positive());
        assert!(matches!(
            Angle::new(f64::NAN),
            Err(Error::NonFiniteAngle(_))
        ));
        assert!(Angle::new(f64::INFINITY).is_err());
        assert!(Angle::from_degrees(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn degrees_input() {
        assert!((Angle::from_degrees(90.0).unwrap().radians() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(Angle::from_degrees(180.0).unwrap().radians(), 0.0);
    }

    #[test]
    fn detection_examples() {
        assert!((lhv_detect_prob_a(a(0.0), a(0.0)) - 1.0).abs() < 1e-15);
        assert!(lhv_detect_prob_a(a(FRAC_PI_2), a(0.0)).abs() < 1e-15);
        assert!((lhv_detect_prob_a(a(FRAC_PI_4), a(0.0)) - 0.5).abs() < 1e-15);

        assert!((lhv_detect_prob_b(a(0.0), a(FRAC_PI_2)) - 1.0).abs() < 1e-15);
        assert!(lhv_detect_prob_b(a(0.0), a(0.0)).abs() < 1e-15);
        assert!((lhv_detect_prob_b(a(FRAC_PI_4), a(FRAC_PI_2)) - 0.5).abs() < 1e-15);
    }

    fn assert_dist(d: JointDistribution, expected: [f64; 4]) {
        for (got, want) in d.as_array().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{d:?} vs {expected:?}");
        }
    }

    #[test]
    fn lhv_distribution_examples() {
        assert_dist(
            lhv_joint_distribution(a(0.0), a(0.0)),
            [0.125, 0.375, 0.375, 0.125],
        );
        assert_dist(lhv_joint_distribution(a(0.0), a(FRAC_PI_4)), [0.25; 4]);
        assert_dist(
            lhv_joint_distribution(a(0.0), a(FRAC_PI_2)),
            [0.375, 0.125, 0.125, 0.375],
        );
    }

    #[test]
    fn lhv_correlation_examples() {
        assert!((lhv_correlation(a(0.0), a(0.0)).value() + 0.5).abs() < 1e-12);
        assert!(lhv_correlation(a(0.0), a(FRAC_PI_4)).value().abs() < 1e-12);
        assert!((lhv_correlation(a(0.0), a(FRAC_PI_2)).value() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn qm_examples() {
        assert_dist(qm_joint_distribution(a(0.0), a(0.0)), [0.0, 0.5, 0.5, 0.0]);
        assert_dist(qm_joint_distribution(a(0.0), a(FRAC_PI_4)), [0.25; 4]);
        assert_dist(
            qm_joint_distribution(a(0.0), a(FRAC_PI_2)),
            [0.5, 0.0, 0.0, 0.5],
        );

        assert!((qm_correlation(a(0.0), a(0.0)).value() + 1.0).abs() < 1e-12);
        assert!(qm_correlation(a(0.0), a(FRAC_PI_4)).value().abs() < 1e-12);
        assert!((qm_correlation(a(0.0), a(FRAC_PI_2)).value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_examples() {
        let cases = [(0.0, 0.125), (FRAC_PI_4, 0.25), (FRAC_PI_2, 0.375)];
        for (beta, want) in cases {
            let got = quadrature_p_pp(a(0.0), a(beta), 100_000).unwrap();
            assert!((got - want).abs() < 1e-6, "beta={beta}: {got}");
        }
    }

    #[test]
    fn quadrature_rejects_too_few_steps() {
        assert!(quadrature_p_pp(a(0.0), a(0.0), 0).is_err());
        assert!(quadrature_p_pp(a(0.0), a(0.0), 1).is_err());
        assert!(quadrature_p_pp(a(0.0), a(0.0), 2).is_ok());
    }

    #[test]
    fn correlation_range_checked() {
        assert!(Correlation::new(1.0).is_ok());
        assert!(Correlation::new(1.0 + 1e-12).is_err());
        assert!(Correlation::new(f64::NAN).is_err());
    }
}
