use super::Frontier;
use crate::dist::two_sided_critical_value;
use crate::error::{Error, Result};

/// Tolerance on `g(t) ≤ t` and on monotonicity when validating knots.
const KNOT_SLACK: f64 = 1e-12;

/// Tolerance for the tail against `Φ⁻¹(1 − α/2)`; admits tails rounded to five decimals.
pub(crate) const TAIL_SLACK: f64 = 1e-5;

/// Abscissae of the published optimal boundary.
pub const PUBLISHED_T: [f64; 17] = [
    0.0, 0.1, 0.11, 0.13, 0.14, 0.15, 1.35, 1.36, 1.37, 1.44, 1.45, 2.05, 2.06, 2.07, 2.08, 2.09,
    2.1,
];

/// Ordinates of the published optimal boundary. The last entry is printed as
/// 1.95996; [`published_optimal_boundary`] replaces it with the exact
/// two-sided 5% critical value.
pub const PUBLISHED_G: [f64; 17] = [
    0.0, 0.1, 0.106723, 0.106723, 0.106724, 0.106724, 1.30583, 1.31286, 1.3131, 1.3131, 1.3175,
    1.9175, 1.9275, 1.9375, 1.9475, 1.9575, 1.95996,
];

/// Piecewise-linear boundary through `knots`, constant `tail` beyond the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct GBoundary {
    alpha: f64,
    knots: Vec<(f64, f64)>,
    tail: f64,
}

impl GBoundary {
    /// Validates the knots: non-empty, strictly increasing abscissae starting
    /// at or above 0, non-decreasing ordinates with `0 ≤ g ≤ t`, and a tail at
    /// the two-sided critical value that does not undercut the last ordinate.
    pub fn new(alpha: f64, knots: Vec<(f64, f64)>, tail: f64) -> Result<Self> {
        let z = two_sided_critical_value(alpha)?;
        if knots.is_empty() {
            return Err(Error::MalformedFile("knot list is empty".into()));
        }
        for (i, &(t, g)) in knots.iter().enumerate() {
            if !(t.is_finite() && g.is_finite()) {
                return Err(Error::MalformedFile(format!("knot {i} is not finite")));
            }
            if t < 0.0 || g < -KNOT_SLACK {
                return Err(Error::InvariantViolation(format!(
                    "knot {i} ({t}, {g}) is negative"
                )));
            }
            if g > t + KNOT_SLACK {
                return Err(Error::InvariantViolation(format!(
                    "knot {i} has g = {g} above the diagonal t = {t}"
                )));
            }
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvariantViolation(format!(
                    "knot abscissae not strictly increasing at index {}",
                    i + 1
                )));
            }
            if w[1].1 < w[0].1 - KNOT_SLACK {
                return Err(Error::InvariantViolation(format!(
                    "g decreases between knots {i} and {}",
                    i + 1
                )));
            }
        }
        let (t_last, g_last) = *knots.last().expect("non-empty");
        if !tail.is_finite() || (tail - z).abs() > TAIL_SLACK {
            return Err(Error::InvariantViolation(format!(
                "tail {tail} differs from the critical value {z}"
            )));
        }
        if tail < g_last - KNOT_SLACK {
            return Err(Error::InvariantViolation(format!(
                "tail {tail} is below the last knot value {g_last}"
            )));
        }
        if tail > t_last.max(g_last) + TAIL_SLACK {
            return Err(Error::InvariantViolation(format!(
                "tail {tail} lies above the diagonal at the last knot t = {t_last}"
            )));
        }
        Ok(Self { alpha, knots, tail })
    }

    /// Builds from parallel abscissa/ordinate slices.
    pub fn from_xy(alpha: f64, t: &[f64], g: &[f64], tail: f64) -> Result<Self> {
        if t.len() != g.len() {
            return Err(Error::MalformedFile(format!(
                "{} abscissae but {} ordinates",
                t.len(),
                g.len()
            )));
        }
        Self::new(
            alpha,
            t.iter().copied().zip(g.iter().copied()).collect(),
            tail,
        )
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t.is_nan() {
            return f64::NAN;
        }
        let k = &self.knots;
        let (t_last, g_last) = k[k.len() - 1];
        if t > t_last {
            return self.tail;
        }
        if t == t_last {
            return g_last;
        }
        if t <= k[0].0 {
            return k[0].1;
        }
        // First knot with abscissa > t.
        let hi = k.partition_point(|&(x, _)| x <= t);
        let (x0, y0) = k[hi - 1];
        let (x1, y1) = k[hi];
        let lam = (t - x0) / (x1 - x0);
        y0 + lam * (y1 - y0)
    }
}

impl Frontier for GBoundary {
    fn eval(&self, t: f64) -> f64 {
        GBoundary::eval(self, t)
    }

    fn kinks(&self) -> Vec<f64> {
        self.knots.iter().map(|&(t, _)| t).collect()
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// The published 17-knot optimal 5% boundary.
///
/// The last knot and the tail are set to the exact `Φ⁻¹(0.975)` rather than
/// its five-decimal rounding 1.95996. The rounded value sits 4e-6 above the
/// critical value and pushes the null rejection probability roughly 5e-7
/// above 5% once the larger noncentrality is big.
pub fn published_optimal_boundary() -> GBoundary {
    let z = two_sided_critical_value(0.05).expect("0.05 is a valid level");
    let mut g = PUBLISHED_G;
    g[16] = z;
    GBoundary::from_xy(0.05, &PUBLISHED_T, &g, z).expect("published knots are valid")
}

/// Boundary of the likelihood-ratio test: `g(t) = min(t, z_{α/2})`.
pub fn lr_boundary(alpha: f64) -> Result<GBoundary> {
    let z = two_sided_critical_value(alpha)?;
    GBoundary::new(alpha, vec![(0.0, 0.0), (z, z)], z)
}
