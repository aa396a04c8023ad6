//! Decision procedures for the no-mediation hypothesis and the OLS front-end.

mod ols;

pub use ols::{ols_mediation, MediationData, MediationEstimates, VarianceConvention};

use crate::boundary::{published_optimal_boundary, Frontier, GBoundary};
use crate::dist::two_sided_critical_value;
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Accept,
}

impl Decision {
    fn from_bool(reject: bool) -> Self {
        if reject {
            Decision::Reject
        } else {
            Decision::Accept
        }
    }

    pub fn is_reject(self) -> bool {
        self == Decision::Reject
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub test: String,
    pub inputs: Vec<f64>,
    /// Test statistic compared against `critical`.
    pub statistic: f64,
    /// Boundary or critical value the statistic must exceed.
    pub critical: f64,
    pub decision: Decision,
    pub alpha: f64,
}

fn sorted_abs<const K: usize>(t: [f64; K]) -> [f64; K] {
    let mut a = t.map(f64::abs);
    a.sort_by(f64::total_cmp);
    a
}

/// g-test: reject iff `|t|₍₁₎ > g(|t|₍₂₎)`.
pub fn g_test(t1: f64, t2: f64, boundary: &dyn Frontier) -> TestReport {
    let [lo, hi] = sorted_abs([t1, t2]);
    let g = boundary.eval(hi);
    TestReport {
        test: "g-test".into(),
        inputs: vec![t1, t2],
        statistic: lo,
        critical: g,
        decision: Decision::from_bool(lo > g),
        alpha: boundary.alpha(),
    }
}

/// Likelihood-ratio test: reject iff `min(|t₁|, |t₂|) > z_{α/2}`.
pub fn lr_test(t1: f64, t2: f64, alpha: f64) -> Result<TestReport> {
    let z = two_sided_critical_value(alpha)?;
    let stat = t1.abs().min(t2.abs());
    Ok(TestReport {
        test: "lr".into(),
        inputs: vec![t1, t2],
        statistic: stat,
        critical: z,
        decision: Decision::from_bool(stat > z),
        alpha,
    })
}

/// Sobel statistic `|t₁t₂| / √(t₁² + t₂²)`, the square root of the Wald statistic.
pub fn sobel_statistic(t1: f64, t2: f64) -> Result<f64> {
    let s = t1 * t1 + t2 * t2;
    if s == 0.0 {
        return Err(Error::UndefinedStatistic(
            "Wald statistic is 0/0 at t1 = t2 = 0".into(),
        ));
    }
    Ok((t1 * t2).abs() / s.sqrt())
}

/// Sobel/Wald test: reject iff the Sobel statistic exceeds `z_{α/2}`,
/// equivalently `W > χ²₁(1 − α)`.
pub fn sobel_wald_test(t1: f64, t2: f64, alpha: f64) -> Result<TestReport> {
    let z = two_sided_critical_value(alpha)?;
    let stat = sobel_statistic(t1, t2)?;
    Ok(TestReport {
        test: "sobel".into(),
        inputs: vec![t1, t2],
        statistic: stat,
        critical: z,
        decision: Decision::from_bool(stat > z),
        alpha,
    })
}

/// Wald rejection frontier written as a boundary on the ordered pair:
/// reject iff `t₍₁₎ > √(c t₍₂₎² / (t₍₂₎² − c))` with `c = z²_{α/2}`.
///
/// Below `t₍₂₎ = √(2c)` no point of the octant is rejected and `eval`
/// returns the diagonal. Not a valid [`GBoundary`]: it decreases beyond that point.
#[derive(Debug, Clone, Copy)]
pub struct WaldFrontier {
    alpha: f64,
    c: f64,
}

impl WaldFrontier {
    pub fn new(alpha: f64) -> Result<Self> {
        let z = two_sided_critical_value(alpha)?;
        Ok(Self { alpha, c: z * z })
    }
}

impl Frontier for WaldFrontier {
    fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        let t2 = t * t;
        if t2 <= 2.0 * self.c {
            return t;
        }
        (self.c * t2 / (t2 - self.c)).sqrt()
    }

    fn kinks(&self) -> Vec<f64> {
        vec![(2.0 * self.c).sqrt()]
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Weight knots `(t₃, w)`; `w = 1` beyond the last one.
pub const WEIGHT_KNOTS: [(f64, f64); 4] = [(0.0, 0.0), (1.35, 0.959), (2.025, 0.842), (2.7, 1.0)];

/// Linear spline weight on the 2D boundary as a function of `|t|₍₃₎`.
pub fn weight(t3: f64) -> f64 {
    let t = t3.abs();
    let k = &WEIGHT_KNOTS;
    if t >= k[k.len() - 1].0 {
        return 1.0;
    }
    let i = k.partition_point(|&(x, _)| x <= t);
    let (x0, y0) = k[i - 1];
    let (x1, y1) = k[i];
    y0 + (t - x0) / (x1 - x0) * (y1 - y0)
}

/// Three-dimensional boundary `g(t₂, t₃) = (1 − w(t₃))·min(t₂, z) + w(t₃)·g(t₂)`.
#[derive(Debug, Clone)]
pub struct WeightedBoundary3d {
    g: GBoundary,
    z: f64,
}

impl Default for WeightedBoundary3d {
    fn default() -> Self {
        Self::new(published_optimal_boundary())
    }
}

impl WeightedBoundary3d {
    pub fn new(g: GBoundary) -> Self {
        let z = g.tail();
        Self { g, z }
    }

    pub fn eval(&self, t2: f64, t3: f64) -> f64 {
        let w = weight(t3);
        let t2 = t2.abs();
        (1.0 - w) * t2.min(self.z) + w * self.g.eval(t2)
    }

    pub fn two_dim(&self) -> &GBoundary {
        &self.g
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn alpha(&self) -> f64 {
        Frontier::alpha(&self.g)
    }
}

/// 3D g-test with the weighted boundary.
pub fn g_test_3d_with(t1: f64, t2: f64, t3: f64, b: &WeightedBoundary3d) -> TestReport {
    let [lo, mid, hi] = sorted_abs([t1, t2, t3]);
    let g = b.eval(mid, hi);
    TestReport {
        test: "g-test-3d".into(),
        inputs: vec![t1, t2, t3],
        statistic: lo,
        critical: g,
        decision: Decision::from_bool(lo > g),
        alpha: b.alpha(),
    }
}

/// 3D g-test with the published 2D boundary.
pub fn g_test_3d(t1: f64, t2: f64, t3: f64) -> TestReport {
    g_test_3d_with(t1, t2, t3, &WeightedBoundary3d::default())
}

/// The 2D rule applied to the two smallest of three statistics, ignoring the largest.
pub fn naive_test_3d(t1: f64, t2: f64, t3: f64, g: &GBoundary) -> TestReport {
    let [lo, mid, _] = sorted_abs([t1, t2, t3]);
    let crit = g.eval(mid);
    TestReport {
        test: "naive-3d".into(),
        inputs: vec![t1, t2, t3],
        statistic: lo,
        critical: crit,
        decision: Decision::from_bool(lo > crit),
        alpha: Frontier::alpha(g),
    }
}
