//! Three-dimensional rejection probabilities.
//!
//! The ordered density is a sum over the six assignments of noncentralities to
//! the three coordinates. For each, the `t₁` integral is a folded-normal CDF
//! difference, leaving a nested integral over the triangle `t₂ ≤ t₃`.

use super::TRUNCATION;
use crate::boundary::{Frontier, GBoundary};
use crate::dist::{chi, folded_cdf, Noncentrality};
use crate::error::{Error, Result};
use crate::mediation::{WeightedBoundary3d, WEIGHT_KNOTS};
use crate::quad::{integrate, Estimate, QuadConfig};
use std::cell::Cell;

/// Boundary on the two largest ordered statistics.
pub trait Frontier3d: Send + Sync {
    fn eval(&self, t2: f64, t3: f64) -> f64;
    /// Kinks in the `t₂` direction.
    fn kinks_t2(&self) -> Vec<f64>;
    /// Kinks in the `t₃` direction.
    fn kinks_t3(&self) -> Vec<f64>;
}

impl Frontier3d for WeightedBoundary3d {
    fn eval(&self, t2: f64, t3: f64) -> f64 {
        WeightedBoundary3d::eval(self, t2, t3)
    }

    fn kinks_t2(&self) -> Vec<f64> {
        let mut k = self.two_dim().kinks();
        k.push(self.z());
        k
    }

    fn kinks_t3(&self) -> Vec<f64> {
        WEIGHT_KNOTS.iter().map(|&(t, _)| t).collect()
    }
}

/// The 2D rule applied to the two smallest statistics, ignoring the largest.
#[derive(Debug, Clone)]
pub struct NaiveBoundary3d(pub GBoundary);

impl Frontier3d for NaiveBoundary3d {
    fn eval(&self, t2: f64, _t3: f64) -> f64 {
        self.0.eval(t2)
    }

    fn kinks_t2(&self) -> Vec<f64> {
        self.0.kinks()
    }

    fn kinks_t3(&self) -> Vec<f64> {
        Vec::new()
    }
}

const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// `P[|t|₍₁₎ > g(|t|₍₂₎, |t|₍₃₎) | μ]` for three independent unit-variance t-statistics.
pub fn rejection_prob_3d(
    boundary: &dyn Frontier3d,
    mu: &Noncentrality,
    tol: f64,
) -> Result<Estimate> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if mu.dim() != 3 {
        return Err(Error::Domain(format!(
            "expected a 3-vector of noncentralities, got {}",
            mu.dim()
        )));
    }
    let m = mu.values();
    let upper = mu.max() + TRUNCATION;
    let kinks2 = boundary.kinks_t2();
    let mut kinks3 = boundary.kinks_t3();
    kinks3.extend(kinks2.iter().copied());
    // The inner tolerance is spread over the outer range; the inner errors add up through the outer rule.
    let inner_tol = 0.25 * tol / upper;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let inner_err = Cell::new(0.0f64);

    let outer = |t3: f64| -> f64 {
        let chi3 = [chi(t3, m[0]), chi(t3, m[1]), chi(t3, m[2])];
        let f = |t2: f64| {
            let b = boundary.eval(t2, t3).min(t2).max(0.0);
            if b >= t2 {
                return 0.0;
            }
            let mut s = 0.0;
            for p in PERMS {
                let w = chi(t2, m[p[1]]) * chi3[p[2]];
                if w != 0.0 {
                    s += w * (folded_cdf(t2, m[p[0]]) - folded_cdf(b, m[p[0]]));
                }
            }
            s
        };
        match integrate(f, 0.0, t3, &kinks2, QuadConfig::new(inner_tol)) {
            Ok(e) => {
                inner_err.set(inner_err.get().max(e.error));
                e.value
            }
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let est = integrate(outer, 0.0, upper, &kinks3, QuadConfig::new(0.5 * tol))?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let err = est.error + inner_err.get() * upper;
    Ok(Estimate {
        value: est.value.clamp(0.0, 1.0),
        error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{lr_boundary, published_optimal_boundary};
    use crate::dist::{std_normal_cdf, std_normal_sf};
    use crate::rp::monte_carlo_rp;

    /// With `g ≡ min(t₂, z)` the rule rejects iff the smallest exceeds z,
    /// i.e. all three coordinates do.
    fn all_exceed(m: [f64; 3]) -> f64 {
        let z = 1.959_963_984_540_054;
        m.iter()
            .map(|&u| std_normal_sf(z - u) + std_normal_cdf(-z - u))
            .product()
    }

    #[test]
    fn lr_like_rule_matches_closed_form() {
        let b = NaiveBoundary3d(lr_boundary(0.05).unwrap());
        for m in [[0.0, 0.0, 0.0], [0.0, 0.0, 3.0], [0.5, 1.0, 2.0]] {
            let mu = Noncentrality::from_signed(&m).unwrap();
            let q = rejection_prob_3d(&b, &mu, 1e-9).unwrap().value;
            assert!((q - all_exceed(m)).abs() < 1e-9, "{m:?}: {q}");
        }
    }

    #[test]
    fn weighted_origin_agrees_with_monte_carlo() {
        let b = WeightedBoundary3d::default();
        let mu = Noncentrality::from_signed(&[0.0, 0.0, 0.0]).unwrap();
        let q = rejection_prob_3d(&b, &mu, 1e-8).unwrap().value;
        let rule = |t: &[f64]| {
            let mut a = [t[0].abs(), t[1].abs(), t[2].abs()];
            a.sort_by(f64::total_cmp);
            a[0] > b.eval(a[1], a[2])
        };
        let mc = monte_carlo_rp(rule, &[0.0, 0.0, 0.0], 1_000_000, 99);
        assert!(mc.agrees_with(q, 3.5), "quad {q}, mc {mc:?}");
    }

    #[test]
    fn naive_rule_is_oversized_at_origin() {
        let b = NaiveBoundary3d(published_optimal_boundary());
        let mu = Noncentrality::from_signed(&[0.0, 0.0, 0.0]).unwrap();
        let q = rejection_prob_3d(&b, &mu, 1e-8).unwrap().value;
        assert!((q - 0.072).abs() < 0.002, "{q}");
    }
}
