use super::Frontier;
use crate::dist::{std_normal_cdf, std_normal_quantile};
use crate::error::{Error, Result};

/// Right-continuous step boundary: `g(t) = c_j` on `[c_j, c_{j+1})`, zero below `c_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepBoundary {
    alpha: f64,
    steps: Vec<f64>,
}

impl StepBoundary {
    /// Accepts any strictly increasing list of positive step points.
    pub fn from_steps(alpha: f64, steps: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidProbability(alpha));
        }
        if steps.is_empty() {
            return Err(Error::MalformedFile("step list is empty".into()));
        }
        if steps.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvariantViolation(
                "step points must be finite and positive".into(),
            ));
        }
        if steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvariantViolation(
                "step points must be strictly increasing".into(),
            ));
        }
        Ok(Self { alpha, steps })
    }

    /// Step points `c_1 < … < c_{R−1}`.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Value for `t` at or beyond the last step.
    pub fn tail(&self) -> f64 {
        *self.steps.last().expect("non-empty")
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        let n = self.steps.partition_point(|&c| c <= t);
        if n == 0 {
            0.0
        } else {
            self.steps[n - 1]
        }
    }

    /// `inf{x : g(x) > t}`: the first step point strictly above `t`, or `+∞`.
    pub fn generalized_inverse(&self, t: f64) -> f64 {
        let n = self.steps.partition_point(|&c| c <= t);
        self.steps.get(n).copied().unwrap_or(f64::INFINITY)
    }
}

impl Frontier for StepBoundary {
    fn eval(&self, t: f64) -> f64 {
        StepBoundary::eval(self, t)
    }

    fn kinks(&self) -> Vec<f64> {
        self.steps.clone()
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// The unique similar step boundary at level `alpha`; exists iff `1/alpha` is an integer.
pub fn exact_similar_boundary(alpha: f64) -> Result<StepBoundary> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProbability(alpha));
    }
    let r_real = 1.0 / alpha;
    let r = r_real.round();
    if (r_real - r).abs() > 1e-9 * r_real || r < 2.0 {
        return Err(Error::NoSimilarTestExists { alpha });
    }
    let r = r as u64;
    let steps = (1..r)
        .map(|j| std_normal_quantile(0.5 + j as f64 / (2 * r) as f64))
        .collect::<Result<Vec<_>>>()?;
    StepBoundary::from_steps(alpha, steps)
}

/// `Φ(g⁻¹(t)) − Φ(g(t)) − α/2`, identically zero for the similar step boundary.
pub fn similarity_residual(b: &StepBoundary, t: f64) -> f64 {
    let upper = b.generalized_inverse(t);
    let phi_upper = if upper.is_infinite() {
        1.0
    } else {
        std_normal_cdf(upper)
    };
    phi_upper - std_normal_cdf(b.eval(t)) - 0.5 * b.alpha
}
