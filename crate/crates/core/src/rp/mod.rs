//! Rejection probabilities of boundary tests by quadrature, with a Monte Carlo cross-check.
//!
//! In two dimensions the `t₁` integral has a closed form, so
//! `π_g(μ) = ∫₀^{max μ + 9} Σ χ(t₂, μ_b)·[F(t₂; μ_a) − F(b(t₂); μ_a)] dt₂`,
//! summed over both assignments `(a, b)` of the noncentralities, with
//! `b(t₂) = min(g(t₂), t₂)` and `F` the folded-normal CDF. Integrating the
//! rejection region directly avoids the cancellation in `1 − P(accept)`.

mod mc;
mod three;

pub use mc::{monte_carlo_rp, McEstimate};
pub use three::{rejection_prob_3d, Frontier3d, NaiveBoundary3d};

use crate::boundary::Frontier;
use crate::dist::{chi, folded_cdf, Noncentrality};
use crate::error::{Error, Result};
use crate::quad::{integrate, Estimate, QuadConfig};
use rayon::prelude::*;
use serde::Serialize;

/// Default absolute quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Width of the integration window beyond the largest noncentrality.
pub const TRUNCATION: f64 = 9.0;

/// Integrand of the rejection probability at abscissa `t2`.
#[inline]
pub(crate) fn rejection_density(t2: f64, b: f64, m1: f64, m2: f64) -> f64 {
    let b = b.min(t2).max(0.0);
    if b >= t2 {
        return 0.0;
    }
    chi(t2, m2) * (folded_cdf(t2, m1) - folded_cdf(b, m1))
        + chi(t2, m1) * (folded_cdf(t2, m2) - folded_cdf(b, m2))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// `P[|t|₍₁₎ > g(|t|₍₂₎) | μ]` for two independent unit-variance t-statistics.
pub fn rejection_prob(boundary: &dyn Frontier, mu: &Noncentrality, tol: f64) -> Result<Estimate> {
    check_tol(tol)?;
    if mu.dim() != 2 {
        return Err(Error::Domain(format!(
            "expected a 2-vector of noncentralities, got {}",
            mu.dim()
        )));
    }
    let (m1, m2) = (mu.values()[0], mu.values()[1]);
    let upper = mu.max() + TRUNCATION;
    let kinks = boundary.kinks();
    let est = integrate(
        |t2| rejection_density(t2, boundary.eval(t2), m1, m2),
        0.0,
        upper,
        &kinks,
        QuadConfig::new(tol),
    )?;
    Ok(Estimate {
        value: est.value.clamp(0.0, 1.0),
        error: est.error,
    })
}

/// Rejection probabilities with their quadrature error estimates on a list of parameter points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RPGrid {
    pub boundary_id: String,
    pub mu: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

impl RPGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Delimited text: one row per point, mu components then value and error estimate.
    pub fn to_delimited(&self, sep: char) -> String {
        let k = self.mu.first().map_or(0, Vec::len);
        let mut out = String::new();
        for i in 0..k {
            out.push_str(&format!("mu{}{sep}", i + 1));
        }
        out.push_str(&format!("value{sep}error\n"));
        for ((m, v), e) in self.mu.iter().zip(&self.values).zip(&self.errors) {
            for x in m {
                out.push_str(&format!("{x}{sep}"));
            }
            out.push_str(&format!("{v:.12e}{sep}{e:.3e}\n"));
        }
        out
    }
}

/// Power surface over `(μ₁, μ₂)` points, evaluated in parallel.
pub fn power_surface(
    boundary: &dyn Frontier,
    id: &str,
    points: &[(f64, f64)],
    tol: f64,
) -> Result<RPGrid> {
    let results: Vec<Estimate> = points
        .par_iter()
        .map(|&(a, b)| rejection_prob(boundary, &Noncentrality::pair(a, b)?, tol))
        .collect::<Result<_>>()?;
    Ok(RPGrid {
        boundary_id: id.to_string(),
        mu: points.iter().map(|&(a, b)| vec![a, b]).collect(),
        values: results.iter().map(|e| e.value).collect(),
        errors: results.iter().map(|e| e.error).collect(),
    })
}

/// Null rejection probabilities at `μ = (0, μ₀)` for each `μ₀` in the grid.
pub fn nrp_curve(boundary: &dyn Frontier, id: &str, mu0: &[f64], tol: f64) -> Result<RPGrid> {
    let points: Vec<(f64, f64)> = mu0.iter().map(|&m| (0.0, m)).collect();
    power_surface(boundary, id, &points, tol)
}

/// `start:step:stop` grid, inclusive of `stop` up to rounding.
pub fn linspace_step(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "bad grid {start}:{step}:{stop}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{exact_similar_boundary, lr_boundary, published_optimal_boundary};
    use crate::dist::{std_normal_cdf, std_normal_sf};
    use crate::mediation::WaldFrontier;
    use proptest::prelude::*;

    fn rp(b: &dyn Frontier, a: f64, c: f64) -> f64 {
        rejection_prob(b, &Noncentrality::pair(a, c).unwrap(), DEFAULT_TOL)
            .unwrap()
            .value
    }

    /// LR rejects iff both |T₁| and |T₂| exceed z, so π factorizes.
    fn lr_closed_form(m1: f64, m2: f64) -> f64 {
        let z = 1.959_963_984_540_054;
        let tail = |m: f64| std_normal_sf(z - m) + std_normal_cdf(-z - m);
        tail(m1) * tail(m2)
    }

    #[test]
    fn lr_matches_product_form() {
        let lr = lr_boundary(0.05).unwrap();
        for &(a, b) in &[
            (0.0, 0.0),
            (0.0, 1.0),
            (0.5, 2.0),
            (3.0, 3.0),
            (0.0, 7.0),
            (1.0, 10.0),
        ] {
            let q = rp(&lr, a, b);
            assert!((q - lr_closed_form(a, b)).abs() < 1e-10, "({a}, {b}): {q}");
        }
        assert!((rp(&lr, 0.0, 0.0) - 0.0025).abs() < 1e-9);
        assert!((rp(&lr, 0.0, 20.0) - 0.05).abs() < 1e-6);
    }

    #[test]
    fn published_boundary_is_near_similar_at_sample_points() {
        let g = published_optimal_boundary();
        for m in [0.0, 1.0, 3.0] {
            let v = rp(&g, 0.0, m);
            assert!((0.05 - 1.5e-5..=0.05 + 1e-8).contains(&v), "mu0 = {m}: {v}");
        }
    }

    #[test]
    fn high_power_point_agrees_with_monte_carlo() {
        let g = published_optimal_boundary();
        let q = rp(&g, 5.0, 5.0);
        assert!(q >= lr_closed_form(5.0, 5.0) - 1e-12);
        let rule = |t: &[f64]| {
            let (a, c) = (t[0].abs(), t[1].abs());
            g.rejects(a.min(c), a.max(c))
        };
        let mc = monte_carlo_rp(rule, &[5.0, 5.0], 1_000_000, 3);
        assert!(mc.agrees_with(q, 3.5), "quad {q}, mc {mc:?}");
        assert!((q - 0.99765).abs() < 5e-5, "{q}");
    }

    #[test]
    fn exact_similar_boundary_is_similar() {
        let b = exact_similar_boundary(0.25).unwrap();
        for i in 0..=16 {
            let m = 0.5 * i as f64;
            assert!((rp(&b, 0.0, m) - 0.25).abs() < 1e-7, "mu0 = {m}");
        }
    }

    #[test]
    fn wald_origin_matches_quarter_chi_square() {
        // W → χ²₁/4 at the origin, so NRP = P[χ²₁ > 4c] = 2·(1 − Φ(2z)).
        let w = WaldFrontier::new(0.05).unwrap();
        let want = 2.0 * std_normal_sf(2.0 * 1.959_963_984_540_054);
        assert!((want - 8.85e-5).abs() < 1e-6);
        assert!((rp(&w, 0.0, 0.0) - want).abs() < 1e-9);
    }

    #[test]
    fn doubling_truncation_changes_nothing() {
        let g = published_optimal_boundary();
        for &(a, b) in &[(0.0, 0.0), (0.0, 2.0), (1.0, 4.0)] {
            let mu = Noncentrality::pair(a, b).unwrap();
            let base = rp(&g, a, b);
            let wide = integrate(
                |t2| rejection_density(t2, g.eval(t2), mu.values()[0], mu.values()[1]),
                0.0,
                mu.max() + 2.0 * TRUNCATION,
                &g.kinks(),
                QuadConfig::new(1e-10),
            )
            .unwrap();
            assert!((base - wide.value).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_and_delimited_output() {
        let lr = lr_boundary(0.05).unwrap();
        let grid = nrp_curve(&lr, "lr", &linspace_step(0.0, 0.5, 3.0).unwrap(), 1e-9).unwrap();
        assert_eq!(grid.len(), 7);
        assert!(grid.values.windows(2).all(|w| w[1] >= w[0]));
        let text = grid.to_delimited(',');
        assert!(text.starts_with("mu1,mu2,value,error\n"));
        assert_eq!(text.lines().count(), 8);
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace_step(0.0, 0.1, 7.5).unwrap();
        assert_eq!(g.len(), 76);
        assert!((g[75] - 7.5).abs() < 1e-12);
        assert!(linspace_step(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn invalid_tolerance() {
        let lr = lr_boundary(0.05).unwrap();
        let mu = Noncentrality::pair(0.0, 0.0).unwrap();
        assert!(matches!(
            rejection_prob(&lr, &mu, 0.0),
            Err(Error::InvalidConfig(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn symmetric_in_mu(a in 0.0f64..5.0, b in 0.0f64..5.0) {
            let g = published_optimal_boundary();
            let p = rejection_prob(&g, &Noncentrality::from_signed(&[a, -b]).unwrap(), 1e-10).unwrap().value;
            let q = rejection_prob(&g, &Noncentrality::from_signed(&[b, a]).unwrap(), 1e-10).unwrap().value;
            prop_assert!((p - q).abs() < 1e-12);
        }

        #[test]
        fn lower_boundary_rejects_more(a in 0.0f64..4.0, b in 0.0f64..4.0) {
            // LR lies above the published boundary everywhere.
            let g = published_optimal_boundary();
            let lr = lr_boundary(0.05).unwrap();
            prop_assert!(rp(&g, a, b) >= rp(&lr, a, b) - 1e-9);
        }

        #[test]
        fn lr_power_monotone(a in 0.0f64..4.0, b in 0.0f64..4.0, d in 0.0f64..1.0) {
            let lr = lr_boundary(0.05).unwrap();
            prop_assert!(rp(&lr, a + d, b) >= rp(&lr, a, b) - 1e-9);
            prop_assert!(rp(&lr, a, b + d) >= rp(&lr, a, b) - 1e-9);
        }
    }
}
