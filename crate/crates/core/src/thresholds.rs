//! Threshold distributions.
//!
//! A node with threshold `δ` and degree `d` switches once at least `δ·d` of
//! its influence neighbors are active (ties activate). The distribution of
//! `δ` is what distinguishes the spreading models: `δ` uniform on `[0,1]`
//! recovers the linear threshold model, a constant `δ` recovers majority
//! vote, and power-law payoffs yield `F(x) = x^(γ-1)`. Whether the CDF is
//! concave, continuous, and strictly increasing decides whether the expected
//! spread is monotone and submodular, so the judgment lives here too.

use std::fmt;
use std::str::FromStr;

use rand::distr::OpenClosed01;
use rand::Rng;

use crate::error::{Error, Result};

/// Distribution of the per-node adoption threshold `δ`, specified through
/// its CDF `F(x) = Pr[δ ≤ x]` on `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdModel {
    /// `δ ~ U[0,1]`, `F(x) = x` (linear threshold model).
    Linear,
    /// `δ = X²` for `X ~ U[0,1]`, `F(x) = √x`.
    ConcaveSquare,
    /// `δ = √X` for `X ~ U[0,1]`, `F(x) = x²`.
    ConvexSqrt,
    /// Constant threshold `δ0 ∈ (0,1]`, `F(x) = 1[x ≥ δ0]` (majority vote
    /// when `δ0 = 1/2`).
    Constant(f64),
    /// Power-law payoff for behavior B with exponent `γ > 1`,
    /// `F(x) = x^(γ-1)`. `γ = 2` coincides with `Linear`.
    PowerLaw(f64),
}

/// Analytic judgment of the concave threshold property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concavity {
    /// CDF is continuous, strictly increasing, and concave on `[0,1]`;
    /// expected spread is monotone and submodular.
    ConcaveContinuousIncreasing,
    /// Continuous but not concave.
    NotConcave,
    /// CDF has a jump (constant thresholds); fails the property.
    Discontinuous,
}

impl fmt::Display for Concavity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concavity::ConcaveContinuousIncreasing => write!(f, "concave"),
            Concavity::NotConcave => write!(f, "not concave"),
            Concavity::Discontinuous => write!(f, "discontinuous"),
        }
    }
}

impl ThresholdModel {
    /// Constant-threshold model; `δ0` must lie in `(0,1]`. A zero threshold
    /// would let every node activate spontaneously, which the payoff
    /// derivation (strictly positive payoffs) rules out.
    pub fn constant(delta0: f64) -> Result<Self> {
        if delta0.is_finite() && delta0 > 0.0 && delta0 <= 1.0 {
            Ok(ThresholdModel::Constant(delta0))
        } else {
            Err(Error::Model(format!(
                "constant threshold must be in (0,1], got {delta0}"
            )))
        }
    }

    /// Power-law model; requires `γ > 1` so the payoff density normalizes.
    pub fn power_law(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 1.0 {
            Ok(ThresholdModel::PowerLaw(gamma))
        } else {
            Err(Error::Model(format!("power-law exponent must be > 1, got {gamma}")))
        }
    }

    /// `F(x) = Pr[δ ≤ x]` for `x ∈ [0,1]`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "cdf argument must be in [0,1], got {x}"
            )));
        }
        Ok(self.cdf_unchecked(x))
    }

    #[inline]
    fn cdf_unchecked(&self, x: f64) -> f64 {
        match *self {
            ThresholdModel::Linear => x,
            ThresholdModel::ConcaveSquare => x.sqrt(),
            ThresholdModel::ConvexSqrt => x * x,
            ThresholdModel::Constant(d0) => {
                if x >= d0 {
                    1.0
                } else {
                    0.0
                }
            }
            ThresholdModel::PowerLaw(gamma) => x.powf(gamma - 1.0),
        }
    }

    /// Generalized inverse CDF; maps `u ∈ (0,1]` to a threshold in `(0,1]`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u <= 1.0);
        match *self {
            ThresholdModel::Linear => u,
            ThresholdModel::ConcaveSquare => u * u,
            ThresholdModel::ConvexSqrt => u.sqrt(),
            ThresholdModel::Constant(d0) => d0,
            ThresholdModel::PowerLaw(gamma) => u.powf(1.0 / (gamma - 1.0)),
        }
    }

    /// Draw one threshold by inverse-CDF sampling. The constant variant
    /// returns `δ0` without consuming randomness.
    pub fn sample_threshold<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ThresholdModel::Constant(d0) => d0,
            _ => {
                let u: f64 = rng.sample(OpenClosed01);
                self.inverse_cdf(u)
            }
        }
    }

    /// Analytic concavity judgment (per variant, not numeric).
    pub fn concavity(&self) -> Concavity {
        match *self {
            ThresholdModel::Linear | ThresholdModel::ConcaveSquare => {
                Concavity::ConcaveContinuousIncreasing
            }
            ThresholdModel::ConvexSqrt => Concavity::NotConcave,
            ThresholdModel::Constant(_) => Concavity::Discontinuous,
            ThresholdModel::PowerLaw(gamma) => {
                if gamma <= 2.0 {
                    Concavity::ConcaveContinuousIncreasing
                } else {
                    Concavity::NotConcave
                }
            }
        }
    }

    /// Numeric cross-check of the analytic judgment: midpoint concavity
    /// `F((a+b)/2) ≥ (F(a)+F(b))/2 - tol` over all pairs of a uniform grid.
    /// False negatives are possible for a discontinuous CDF only in the
    /// sense that it correctly fails the test.
    pub fn midpoint_concave(&self, grid_points: usize, tol: f64) -> bool {
        let n = grid_points.max(2);
        let at = |i: usize| i as f64 / (n - 1) as f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (at(i), at(j));
                let mid = self.cdf_unchecked((a + b) / 2.0);
                let chord = (self.cdf_unchecked(a) + self.cdf_unchecked(b)) / 2.0;
                if mid < chord - tol {
                    return false;
                }
            }
        }
        true
    }

    /// Distribution of the minimal activating neighbor count `m` for a node
    /// of the given degree: `p[k] = Pr[m = k]`, `k = 0..=degree`.
    pub fn requirement_distribution(&self, degree: u32) -> Result<Vec<f64>> {
        if degree < 1 {
            return Err(Error::InvalidArgument(
                "requirement_distribution needs degree >= 1".into(),
            ));
        }
        let d = degree as usize;
        let mut p = vec![0.0; d + 1];
        match *self {
            ThresholdModel::Constant(d0) => {
                let m = min_activation_count(d0, degree);
                p[m as usize] = 1.0;
            }
            _ => {
                // Continuous F: Pr[m = k] = Pr[(k-1)/d < δ ≤ k/d].
                let mut prev = 0.0;
                for (k, slot) in p.iter_mut().enumerate().skip(1) {
                    let cur = self.cdf_unchecked(k as f64 / degree as f64);
                    *slot = (cur - prev).max(0.0);
                    prev = cur;
                }
            }
        }
        Ok(p)
    }
}

impl fmt::Display for ThresholdModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ThresholdModel::Linear => write!(f, "linear"),
            ThresholdModel::ConcaveSquare => write!(f, "concave"),
            ThresholdModel::ConvexSqrt => write!(f, "convex"),
            ThresholdModel::Constant(d0) => write!(f, "majority:{d0}"),
            ThresholdModel::PowerLaw(g) => write!(f, "powerlaw:{g}"),
        }
    }
}

impl FromStr for ThresholdModel {
    type Err = Error;

    /// Parse a CLI model spec: `linear`, `concave`, `convex`,
    /// `majority:<δ0>`, or `powerlaw:<γ>` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "linear" => return Ok(ThresholdModel::Linear),
            "concave" => return Ok(ThresholdModel::ConcaveSquare),
            "convex" => return Ok(ThresholdModel::ConvexSqrt),
            _ => {}
        }
        if let Some(arg) = lower.strip_prefix("majority:") {
            let d0: f64 = arg
                .parse()
                .map_err(|_| Error::Model(format!("bad majority threshold `{arg}`")))?;
            return ThresholdModel::constant(d0);
        }
        if let Some(arg) = lower.strip_prefix("powerlaw:") {
            let gamma: f64 = arg
                .parse()
                .map_err(|_| Error::Model(format!("bad power-law exponent `{arg}`")))?;
            return ThresholdModel::power_law(gamma);
        }
        Err(Error::Model(format!("unknown model spec `{s}`")))
    }
}

/// Threshold from coordination-game payoffs: `δ = pA / (pA + pB)`.
pub fn delta_from_payoffs(p_a: f64, p_b: f64) -> Result<f64> {
    if !(p_a.is_finite() && p_b.is_finite() && p_a > 0.0 && p_b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "payoffs must be positive and finite, got ({p_a}, {p_b})"
        )));
    }
    Ok(p_a / (p_a + p_b))
}

/// Smallest integer `k` with `k ≥ δ·degree`, evaluating the product of the
/// two floats exactly (two-product via fused multiply-add) so that boundary
/// cases like `0.1 × 10` resolve the way the real numbers do. Ties activate,
/// so this is the minimal active-neighbor count that switches the node.
///
/// A degree of 0 yields 1: an unreachable requirement, i.e. nodes without
/// influence neighbors activate only when seeded.
pub fn min_activation_count(delta: f64, degree: u32) -> u32 {
    debug_assert!((0.0..=1.0).contains(&delta));
    if degree == 0 {
        return 1;
    }
    let d = degree as f64;
    let p = delta * d;
    // delta*d = p + err exactly.
    let err = delta.mul_add(d, -p);
    let base = p.ceil();
    let k = if (base - 1.0) - p >= err {
        base - 1.0
    } else if base - p >= err {
        base
    } else {
        base + 1.0
    };
    (k.max(0.0) as u32).min(degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use approx::assert_relative_eq;
    use rand::RngCore;

    #[test]
    fn cdf_matches_variant_table() {
        assert_eq!(ThresholdModel::power_law(2.0).unwrap().cdf(0.25).unwrap(), 0.25);
        assert_eq!(ThresholdModel::ConcaveSquare.cdf(0.25).unwrap(), 0.5);
        let mv = ThresholdModel::constant(0.5).unwrap();
        assert_eq!(mv.cdf(0.49).unwrap(), 0.0);
        assert_eq!(mv.cdf(0.5).unwrap(), 1.0);
        assert_eq!(ThresholdModel::ConvexSqrt.cdf(0.5).unwrap(), 0.25);
    }

    #[test]
    fn cdf_endpoints() {
        for model in [
            ThresholdModel::Linear,
            ThresholdModel::ConcaveSquare,
            ThresholdModel::ConvexSqrt,
            ThresholdModel::constant(0.3).unwrap(),
            ThresholdModel::power_law(1.7).unwrap(),
        ] {
            if !matches!(model, ThresholdModel::Constant(_)) {
                assert_eq!(model.cdf(0.0).unwrap(), 0.0, "{model}");
            }
            assert_eq!(model.cdf(1.0).unwrap(), 1.0, "{model}");
        }
    }

    #[test]
    fn cdf_rejects_out_of_domain() {
        assert!(ThresholdModel::Linear.cdf(-0.1).is_err());
        assert!(ThresholdModel::Linear.cdf(1.1).is_err());
        assert!(ThresholdModel::Linear.cdf(f64::NAN).is_err());
    }

    #[test]
    fn payoff_thresholds() {
        assert_eq!(delta_from_payoffs(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(delta_from_payoffs(1.0, 3.0).unwrap(), 0.25);
        assert_eq!(delta_from_payoffs(2.0, 6.0).unwrap(), 0.25);
        assert!(delta_from_payoffs(0.0, 1.0).is_err());
        assert!(delta_from_payoffs(1.0, -2.0).is_err());
        assert!(delta_from_payoffs(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn concavity_judgments() {
        use Concavity::*;
        assert_eq!(ThresholdModel::Linear.concavity(), ConcaveContinuousIncreasing);
        assert_eq!(ThresholdModel::ConcaveSquare.concavity(), ConcaveContinuousIncreasing);
        assert_eq!(ThresholdModel::ConvexSqrt.concavity(), NotConcave);
        assert_eq!(ThresholdModel::constant(0.5).unwrap().concavity(), Discontinuous);
        assert_eq!(
            ThresholdModel::power_law(3.0).unwrap().concavity(),
            NotConcave
        );
        assert_eq!(
            ThresholdModel::power_law(1.5).unwrap().concavity(),
            ConcaveContinuousIncreasing
        );
        assert_eq!(
            ThresholdModel::power_law(2.0).unwrap().concavity(),
            ConcaveContinuousIncreasing
        );
    }

    #[test]
    fn numeric_probe_agrees_with_judgment() {
        for model in [
            ThresholdModel::Linear,
            ThresholdModel::ConcaveSquare,
            ThresholdModel::ConvexSqrt,
            ThresholdModel::constant(0.5).unwrap(),
            ThresholdModel::power_law(1.4).unwrap(),
            ThresholdModel::power_law(3.0).unwrap(),
        ] {
            let expected = matches!(model.concavity(), Concavity::ConcaveContinuousIncreasing);
            assert_eq!(model.midpoint_concave(1000, 1e-9), expected, "{model}");
        }
    }

    #[test]
    fn powerlaw_two_is_linear_pointwise() {
        let pl = ThresholdModel::power_law(2.0).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert_relative_eq!(
                pl.cdf(x).unwrap(),
                ThresholdModel::Linear.cdf(x).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn inverse_cdf_spot_values() {
        assert_eq!(ThresholdModel::Linear.inverse_cdf(0.36), 0.36);
        assert_relative_eq!(
            ThresholdModel::ConcaveSquare.inverse_cdf(0.36),
            0.1296,
            max_relative = 1e-12
        );
        assert_eq!(ThresholdModel::constant(0.5).unwrap().inverse_cdf(0.9), 0.5);
    }

    #[test]
    fn sampling_follows_inverse_cdf() {
        let key = StreamKey::new(11).child(0);
        for model in [
            ThresholdModel::Linear,
            ThresholdModel::ConcaveSquare,
            ThresholdModel::ConvexSqrt,
            ThresholdModel::power_law(2.5).unwrap(),
        ] {
            let u: f64 = key.rng().sample(OpenClosed01);
            let s = model.sample_threshold(&mut key.rng());
            assert_eq!(s, model.inverse_cdf(u), "{model}");
        }
    }

    #[test]
    fn constant_sampling_consumes_no_randomness() {
        let mv = ThresholdModel::constant(0.5).unwrap();
        let mut rng = StreamKey::new(3).rng();
        assert_eq!(mv.sample_threshold(&mut rng), 0.5);
        assert_eq!(mv.sample_threshold(&mut rng), 0.5);
        assert_eq!(rng.next_u64(), StreamKey::new(3).rng().next_u64());
    }

    #[test]
    fn requirement_distribution_examples() {
        let p = ThresholdModel::Linear.requirement_distribution(3).unwrap();
        for (got, want) in p.iter().zip([0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }

        let p = ThresholdModel::constant(0.5)
            .unwrap()
            .requirement_distribution(4)
            .unwrap();
        assert_eq!(p, vec![0.0, 0.0, 1.0, 0.0, 0.0]);

        let p = ThresholdModel::ConcaveSquare.requirement_distribution(2).unwrap();
        let root_half = (0.5f64).sqrt();
        assert_relative_eq!(p[1], root_half, max_relative = 1e-12);
        assert_relative_eq!(p[2], 1.0 - root_half, max_relative = 1e-12);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);

        assert!(ThresholdModel::Linear.requirement_distribution(0).is_err());
    }

    #[test]
    fn min_activation_count_boundaries() {
        assert_eq!(min_activation_count(0.5, 4), 2);
        assert_eq!(min_activation_count(0.5, 3), 2);
        assert_eq!(min_activation_count(1.0, 5), 5);
        // 0.1 * 10 rounds to 1.0 in f64 but the exact product is above 1;
        // the stored 0.1 is itself above 1/10, so the true requirement is 2.
        assert_eq!(min_activation_count(0.1, 10), 2);
        // 1/3 as f64 sits below the real 1/3, so one neighbor out of three
        // meets it.
        assert_eq!(min_activation_count(1.0 / 3.0, 3), 1);
        assert_eq!(min_activation_count(0.25, 4), 1);
        assert_eq!(min_activation_count(0.2500000001, 4), 2);
        assert_eq!(min_activation_count(0.5, 0), 1);
        assert_eq!(min_activation_count(1e-12, 7), 1);
    }

    #[test]
    fn model_spec_round_trip() {
        for spec in ["linear", "concave", "convex", "majority:0.5", "powerlaw:2.5"] {
            let model: ThresholdModel = spec.parse().unwrap();
            assert_eq!(model.to_string(), spec);
        }
        assert_eq!(
            "LINEAR".parse::<ThresholdModel>().unwrap(),
            ThresholdModel::Linear
        );
        assert_eq!(
            "Majority:0.75".parse::<ThresholdModel>().unwrap(),
            ThresholdModel::Constant(0.75)
        );
        for bad in ["majority:0", "majority:1.5", "powerlaw:1", "powerlaw:0.5", "foo", "majority:x"] {
            assert!(bad.parse::<ThresholdModel>().is_err(), "{bad}");
        }
    }
}
