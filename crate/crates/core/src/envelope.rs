//! Discretized power envelope of near-similar invariant tests.
//!
//! The triangle `0 ≤ t₁ ≤ t₂ ≤ t_max` is cut into square cells of side `h`,
//! with half-cells on the diagonal. A critical region is a set of cells; its
//! rejection probability is linear in the selection, so the most powerful
//! region against one alternative is a 0/1 linear program with two rows per
//! null point. The LP relaxation gives the envelope value `π̄`; a greedy
//! repair of the fractional cells gives a genuine region.
//!
//! Beyond `t_max` every region uses the rule `t₁ > z`, which is what any
//! boundary with tail `z` does there. Its mass enters the rows as a constant.

use crate::dist::{chi, folded_cdf, pdf2_raw, two_sided_critical_value, Noncentrality};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::quad::{gauss_legendre, integrate, QuadConfig};
use crate::rp::{rejection_density, RPGrid, TRUNCATION};
use rayon::prelude::*;
use serde::Serialize;

/// Selection threshold for LP values.
const INTEGRAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeProblem {
    pub t_max: f64,
    pub cell: f64,
    pub alpha: f64,
    pub epsilon: f64,
    /// Null points `(0, μ₀)`, given by `μ₀`.
    pub null_grid: Vec<f64>,
    /// Drops the lower similarity bound.
    pub nonsimilar: bool,
    /// Quadrature tolerance for the diagonal cells and the outer region.
    pub tol: f64,
}

impl Default for EnvelopeProblem {
    fn default() -> Self {
        Self {
            t_max: 6.0,
            cell: 0.05,
            alpha: 0.05,
            epsilon: 1e-5,
            null_grid: (0..20).map(|i| 7.5 * i as f64 / 19.0).collect(),
            nonsimilar: false,
            tol: 1e-13,
        }
    }
}

impl EnvelopeProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidProbability(self.alpha));
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in [0, alpha], got {}",
                self.epsilon
            )));
        }
        if !(self.cell > 0.0 && self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidConfig(
                "cell size and t_max must be positive".into(),
            ));
        }
        let n = self.t_max / self.cell;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "t_max {} is not a multiple of the cell size {}",
                self.t_max, self.cell
            )));
        }
        if self.null_grid.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidConfig(
                "null grid values must be finite and non-negative".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Number of cell columns along `t₂`.
    pub fn columns(&self) -> usize {
        (self.t_max / self.cell).round() as usize
    }

    pub fn cells(&self) -> usize {
        let n = self.columns();
        n * (n + 1) / 2
    }

    /// Flat index of the cell in row `i` (along `t₁`) and column `j ≥ i`.
    pub fn index(i: usize, j: usize) -> usize {
        j * (j + 1) / 2 + i
    }

    /// Inverse of [`EnvelopeProblem::index`].
    pub fn position(c: usize) -> (usize, usize) {
        let mut j = ((((8 * c + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
        while j * (j + 1) / 2 > c {
            j -= 1;
        }
        while (j + 1) * (j + 2) / 2 <= c {
            j += 1;
        }
        (c - j * (j + 1) / 2, j)
    }

    fn edge(&self, k: usize) -> f64 {
        k as f64 * self.cell
    }
}

/// Probability of every cell under `μ`, in flat index order.
///
/// Off-diagonal cells are rectangles, where the ordered density integrates to
/// `ΔF_i(μ₁)ΔF_j(μ₂) + ΔF_i(μ₂)ΔF_j(μ₁)` in folded-normal CDF increments.
/// Diagonal cells integrate the inner closed form over the column by quadrature.
pub fn cell_probabilities(mu: &Noncentrality, problem: &EnvelopeProblem) -> Result<Vec<f64>> {
    problem.validate()?;
    if mu.dim() != 2 {
        return Err(Error::Domain(format!(
            "expected a 2-vector of noncentralities, got {}",
            mu.dim()
        )));
    }
    let (m1, m2) = (mu.values()[0], mu.values()[1]);
    let n = problem.columns();
    let cdf = |m: f64| -> Vec<f64> { (0..=n).map(|k| folded_cdf(problem.edge(k), m)).collect() };
    let (f1, f2) = (cdf(m1), cdf(m2));
    let d1: Vec<f64> = f1.windows(2).map(|w| w[1] - w[0]).collect();
    let d2: Vec<f64> = f2.windows(2).map(|w| w[1] - w[0]).collect();
    let mut p = vec![0.0; problem.cells()];
    for j in 0..n {
        for i in 0..j {
            p[EnvelopeProblem::index(i, j)] = d1[i] * d2[j] + d2[i] * d1[j];
        }
        let (a, b) = (problem.edge(j), problem.edge(j + 1));
        let diag = integrate(
            |t| chi(t, m2) * (folded_cdf(t, m1) - f1[j]) + chi(t, m1) * (folded_cdf(t, m2) - f2[j]),
            a,
            b,
            &[],
            QuadConfig::new(problem.tol),
        )?;
        p[EnvelopeProblem::index(j, j)] = diag.value.max(0.0);
    }
    Ok(p)
}

/// Mass of `{t₂ > t_max, t₁ > z}` under `μ`.
fn outer_mass(problem: &EnvelopeProblem, m1: f64, m2: f64, z: f64) -> Result<f64> {
    let upper = m1.max(m2) + TRUNCATION;
    if upper <= problem.t_max {
        return Ok(0.0);
    }
    let est = integrate(
        |t| rejection_density(t, z, m1, m2),
        problem.t_max,
        upper,
        &[],
        QuadConfig::new(problem.tol.max(1e-14)),
    )?;
    Ok(est.value)
}

/// Null cell probabilities, computed once and shared across alternatives.
#[derive(Debug, Clone)]
pub struct PreparedEnvelope {
    pub problem: EnvelopeProblem,
    null_probs: Vec<Vec<f64>>,
    null_outer: Vec<f64>,
    /// `max_ι p^ι` per cell, the denominator of the repair order.
    null_peak: Vec<f64>,
    z: f64,
}

impl PreparedEnvelope {
    pub fn new(problem: EnvelopeProblem) -> Result<Self> {
        problem.validate()?;
        let z = two_sided_critical_value(problem.alpha)?;
        let rows: Vec<(Vec<f64>, f64)> = problem
            .null_grid
            .par_iter()
            .map(|&m0| {
                let mu = Noncentrality::pair(0.0, m0)?;
                Ok((
                    cell_probabilities(&mu, &problem)?,
                    outer_mass(&problem, 0.0, m0, z)?,
                ))
            })
            .collect::<Result<_>>()?;
        let (null_probs, null_outer): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let null_peak = (0..problem.cells())
            .map(|c| null_probs.iter().map(|p| p[c]).fold(0.0f64, f64::max))
            .collect();
        Ok(Self {
            problem,
            null_probs,
            null_outer,
            null_peak,
            z,
        })
    }

    /// Null rejection probabilities of a selection, from the cell sums.
    pub fn null_rp(&self, selection: &[bool]) -> Vec<f64> {
        self.null_probs
            .iter()
            .zip(&self.null_outer)
            .map(|(p, out)| {
                out + p
                    .iter()
                    .zip(selection)
                    .filter(|(_, &s)| s)
                    .map(|(p, _)| p)
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Point-optimal critical region against one alternative.
#[derive(Debug, Clone, Serialize)]
pub struct PointOptimal {
    pub mu: (f64, f64),
    /// LP relaxation value `π̄`.
    pub relaxed_power: f64,
    /// Power of the rounded 0/1 region.
    pub power: f64,
    #[serde(skip)]
    pub selection: Vec<bool>,
    /// Cells with a fractional LP value before rounding.
    pub fractional_cells: usize,
    /// Null rejection probabilities of the rounded region.
    pub null_rp: Vec<f64>,
    /// `α − min NRP` of the rounded region.
    pub achieved_epsilon: f64,
    pub lp_iterations: usize,
}

pub fn point_optimal_cr(prepared: &PreparedEnvelope, mu: (f64, f64)) -> Result<PointOptimal> {
    let pr = &prepared.problem;
    let alt = cell_probabilities(&Noncentrality::pair(mu.0, mu.1)?, pr)?;
    let alt_outer = outer_mass(pr, mu.0.abs(), mu.1.abs(), prepared.z)?;
    let n = pr.cells();
    let a = pr.alpha;

    let mut lp = LinearProgram::new(n, Sense::Maximize);
    for (c, &p) in alt.iter().enumerate() {
        lp.set_cost(c, p);
        lp.set_bounds(c, 0.0, 1.0);
    }
    for (p, out) in prepared.null_probs.iter().zip(&prepared.null_outer) {
        lp.add_row(p.clone(), Relation::Le, a - out);
        if !pr.nonsimilar {
            lp.add_row(p.clone(), Relation::Ge, a - pr.epsilon - out);
        }
    }
    let sol = lp.solve().map_err(|e| match e {
        LpError::Infeasible => Error::InfeasibleConstraints(format!(
            "no cell selection meets the null constraints with epsilon {} at cell size {}",
            pr.epsilon, pr.cell
        )),
        other => Error::OptimizationFailure {
            reason: format!("envelope LP: {other}"),
        },
    })?;
    let relaxed_power = alt_outer + sol.objective;

    let mut selection: Vec<bool> = sol.x.iter().map(|&v| v >= 1.0 - INTEGRAL_TOL).collect();
    let fractional: Vec<usize> = (0..n)
        .filter(|&c| sol.x[c] > INTEGRAL_TOL && !selection[c])
        .collect();
    let ratio = |c: usize| {
        let den = prepared.null_peak[c];
        if den > 0.0 {
            alt[c] / den
        } else {
            f64::INFINITY
        }
    };
    let by_ratio = |cells: &mut Vec<usize>| {
        cells.sort_by(|&x, &y| ratio(y).total_cmp(&ratio(x)).then(x.cmp(&y)));
    };
    let mut nrp = prepared.null_rp(&selection);
    let try_add = |c: usize, selection: &mut Vec<bool>, nrp: &mut Vec<f64>| {
        let fits = prepared
            .null_probs
            .iter()
            .zip(nrp.iter())
            .all(|(p, r)| r + p[c] <= a);
        if fits {
            selection[c] = true;
            for (r, p) in nrp.iter_mut().zip(&prepared.null_probs) {
                *r += p[c];
            }
        }
        fits
    };
    let mut order = fractional.clone();
    by_ratio(&mut order);
    for c in order {
        try_add(c, &mut selection, &mut nrp);
    }
    if !pr.nonsimilar && nrp.iter().any(|&r| r < a - pr.epsilon) {
        let mut rest: Vec<usize> = (0..n).filter(|&c| !selection[c]).collect();
        by_ratio(&mut rest);
        for c in rest {
            if nrp.iter().all(|&r| r >= a - pr.epsilon) {
                break;
            }
            try_add(c, &mut selection, &mut nrp);
        }
    }
    let power = alt_outer
        + alt
            .iter()
            .zip(&selection)
            .filter(|(_, &s)| s)
            .map(|(p, _)| p)
            .sum::<f64>();
    let achieved_epsilon = a - nrp.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PointOptimal {
        mu,
        relaxed_power,
        power,
        selection,
        fractional_cells: fractional.len(),
        null_rp: nrp,
        achieved_epsilon,
        lp_iterations: sol.iterations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSurface {
    /// LP relaxation values `π̄`.
    pub relaxed: RPGrid,
    /// Powers of the rounded regions.
    pub rounded: RPGrid,
    pub points: Vec<PointOptimal>,
}

/// Runs [`point_optimal_cr`] over the alternative grid, in parallel.
pub fn power_envelope(
    alt_grid: &[(f64, f64)],
    problem: &EnvelopeProblem,
) -> Result<EnvelopeSurface> {
    let prepared = PreparedEnvelope::new(problem.clone())?;
    power_envelope_prepared(alt_grid, &prepared)
}

pub fn power_envelope_prepared(
    alt_grid: &[(f64, f64)],
    prepared: &PreparedEnvelope,
) -> Result<EnvelopeSurface> {
    let points: Vec<PointOptimal> = alt_grid
        .par_iter()
        .map(|&mu| point_optimal_cr(prepared, mu))
        .collect::<Result<_>>()?;
    let id = if prepared.problem.nonsimilar {
        "envelope-nonsimilar"
    } else {
        "envelope-similar"
    };
    let mus: Vec<Vec<f64>> = alt_grid.iter().map(|&(a, b)| vec![a, b]).collect();
    let grid = |values: Vec<f64>, suffix: &str| RPGrid {
        boundary_id: format!("{id}{suffix}"),
        mu: mus.clone(),
        errors: vec![0.0; values.len()],
        values,
    };
    Ok(EnvelopeSurface {
        relaxed: grid(points.iter().map(|p| p.relaxed_power).collect(), ""),
        rounded: grid(points.iter().map(|p| p.power).collect(), "-rounded"),
        points,
    })
}

/// Rejection probability of a selection under `μ` by an `order`-point
/// Gauss–Legendre product rule on each selected cell, independent of the
/// cell sums. Includes the outer region.
pub fn verify_selection(
    prepared: &PreparedEnvelope,
    selection: &[bool],
    mu: (f64, f64),
    order: usize,
) -> Result<f64> {
    let pr = &prepared.problem;
    if selection.len() != pr.cells() {
        return Err(Error::Domain(format!(
            "selection has {} cells, the problem has {}",
            selection.len(),
            pr.cells()
        )));
    }
    let (m1, m2) = (mu.0.abs(), mu.1.abs());
    let (x, w) = gauss_legendre(order);
    let h = pr.cell;
    let mut total = 0.0;
    for (c, _) in selection.iter().enumerate().filter(|(_, &s)| s) {
        let (i, j) = EnvelopeProblem::position(c);
        let (a1, a2) = (pr.edge(i), pr.edge(j));
        let mut s = 0.0;
        for (xk, wk) in x.iter().zip(&w) {
            let t2 = a2 + 0.5 * h * (xk + 1.0);
            // Rows run up to the diagonal inside diagonal cells.
            let top = if i == j { t2 } else { a1 + h };
            let half = 0.5 * (top - a1);
            for (xl, wl) in x.iter().zip(&w) {
                let t1 = a1 + half * (xl + 1.0);
                s += wk * wl * half * pdf2_raw(t1, t2, m1, m2);
            }
        }
        total += 0.5 * h * s;
    }
    Ok(total + outer_mass(pr, m1, m2, prepared.z)?)
}

/// Selection as rows of `0`/`1`, one line per `t₁` row from the top, columns along `t₂`.
pub fn selection_bitmap(problem: &EnvelopeProblem, selection: &[bool]) -> String {
    let n = problem.columns();
    let mut out = String::with_capacity(n * (n + 1));
    for i in (0..n).rev() {
        for j in 0..n {
            out.push(if j >= i && selection[EnvelopeProblem::index(i, j)] {
                '1'
            } else {
                '0'
            });
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{published_optimal_boundary, Frontier};
    use crate::rp::{monte_carlo_rp, rejection_prob};
    use rand::{Rng, SeedableRng};

    fn coarse(null_grid: Vec<f64>) -> EnvelopeProblem {
        EnvelopeProblem {
            t_max: 6.0,
            cell: 0.2,
            null_grid,
            ..EnvelopeProblem::default()
        }
    }

    #[test]
    fn index_round_trip() {
        for c in 0..5000 {
            let (i, j) = EnvelopeProblem::position(c);
            assert!(i <= j);
            assert_eq!(EnvelopeProblem::index(i, j), c);
        }
    }

    #[test]
    fn cells_cover_the_whole_triangle() {
        let pr = EnvelopeProblem {
            t_max: 11.0,
            cell: 0.05,
            ..EnvelopeProblem::default()
        };
        let p = cell_probabilities(&Noncentrality::pair(0.0, 0.0).unwrap(), &pr).unwrap();
        assert_eq!(p.len(), 220 * 221 / 2);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let pr = EnvelopeProblem::default();
        let p = cell_probabilities(&Noncentrality::pair(1.0, 2.5).unwrap(), &pr).unwrap();
        let mass = folded_cdf(6.0, 1.0) * folded_cdf(6.0, 2.5);
        assert!((p.iter().sum::<f64>() - mass).abs() < 1e-12);
    }

    #[test]
    fn cells_match_monte_carlo() {
        let pr = EnvelopeProblem {
            cell: 0.25,
            ..EnvelopeProblem::default()
        };
        let p = cell_probabilities(&Noncentrality::pair(1.0, 2.0).unwrap(), &pr).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = pr.cell;
        for _ in 0..20 {
            // Cells with some mass, so the check has power.
            let c = loop {
                let c = rng.random_range(0..pr.cells());
                if p[c] > 1e-4 {
                    break c;
                }
            };
            let (i, j) = EnvelopeProblem::position(c);
            let rule = move |t: &[f64]| {
                let (a, b) = (t[0].abs(), t[1].abs());
                let (lo, hi) = (a.min(b), a.max(b));
                ((lo / h).floor() as usize, (hi / h).floor() as usize) == (i, j)
            };
            let mc = monte_carlo_rp(rule, &[1.0, 2.0], 1_000_000, 100 + c as u64);
            assert!(
                mc.agrees_with(p[c], 3.5),
                "cell ({i},{j}): {} vs {mc:?}",
                p[c]
            );
        }
    }

    #[test]
    fn no_constraints_selects_everything() {
        let pr = EnvelopeProblem {
            nonsimilar: true,
            epsilon: 0.05,
            null_grid: vec![],
            ..coarse(vec![])
        };
        let prep = PreparedEnvelope::new(pr.clone()).unwrap();
        let r = point_optimal_cr(&prep, (1.0, 1.5)).unwrap();
        let p = cell_probabilities(&Noncentrality::pair(1.0, 1.5).unwrap(), &pr).unwrap();
        // Cells below the LP's pricing tolerance may stay out.
        assert!(p.iter().zip(&r.selection).all(|(&p, &s)| s || p < 1e-9));
        let out = outer_mass(&pr, 1.0, 1.5, prep.z).unwrap();
        assert!((r.power - p.iter().sum::<f64>() - out).abs() < 1e-9);
        assert!((r.power - r.relaxed_power).abs() < 1e-12);
    }

    /// Fractional knapsack: with one upper row the LP optimum is the greedy fill by ratio.
    #[test]
    fn single_null_point_matches_greedy_knapsack() {
        let pr = EnvelopeProblem {
            t_max: 3.0,
            cell: 0.3,
            nonsimilar: true,
            ..coarse(vec![0.0])
        };
        let prep = PreparedEnvelope::new(pr.clone()).unwrap();
        let mu = (1.0, 1.8);
        let alt = cell_probabilities(&Noncentrality::pair(mu.0, mu.1).unwrap(), &pr).unwrap();
        let null = cell_probabilities(&Noncentrality::pair(0.0, 0.0).unwrap(), &pr).unwrap();
        let out_null = outer_mass(&pr, 0.0, 0.0, prep.z).unwrap();
        let out_alt = outer_mass(&pr, mu.0, mu.1, prep.z).unwrap();
        let mut order: Vec<usize> = (0..pr.cells()).collect();
        order.sort_by(|&a, &b| (alt[b] / null[b]).total_cmp(&(alt[a] / null[a])));
        let mut room = 0.05 - out_null;
        let (mut value, mut greedy) = (out_alt, vec![false; pr.cells()]);
        for c in order {
            if null[c] <= room {
                room -= null[c];
                value += alt[c];
                greedy[c] = true;
            } else {
                value += alt[c] * room / null[c];
                break;
            }
        }
        let r = point_optimal_cr(&prep, mu).unwrap();
        assert!(
            (r.relaxed_power - value).abs() < 1e-12,
            "{} vs {value}",
            r.relaxed_power
        );
        assert!(r.fractional_cells <= 1);
        let differ = r
            .selection
            .iter()
            .zip(&greedy)
            .filter(|(a, b)| a != b)
            .count();
        assert!(differ <= 1, "{differ} cells differ");
        assert!(r.null_rp[0] <= 0.05);
    }

    #[test]
    fn envelope_dominates_published_boundary() {
        let pr = coarse((0..10).map(|i| 7.5 * i as f64 / 9.0).collect());
        let prep = PreparedEnvelope::new(pr).unwrap();
        let g = published_optimal_boundary();
        for mu in [(0.4, 0.8), (1.0, 2.0), (2.0, 2.0)] {
            let r = point_optimal_cr(&prep, mu).unwrap();
            let pg = rejection_prob(&g, &Noncentrality::pair(mu.0, mu.1).unwrap(), 1e-10)
                .unwrap()
                .value;
            assert!(
                r.relaxed_power >= pg - 1e-6,
                "{mu:?}: {} < {pg}",
                r.relaxed_power
            );
            assert!(r.null_rp.iter().all(|&v| v <= 0.05 + 1e-12));
        }
        assert!(g.alpha() == 0.05);
    }

    #[test]
    fn monotone_in_epsilon_and_null_grid() {
        let grid: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let mu = (1.0, 1.4);
        let at = |eps: f64, grid: Vec<f64>| {
            let pr = EnvelopeProblem {
                epsilon: eps,
                ..coarse(grid)
            };
            point_optimal_cr(&PreparedEnvelope::new(pr).unwrap(), mu)
                .unwrap()
                .relaxed_power
        };
        let tight = at(1e-4, grid.clone());
        let loose = at(1e-3, grid.clone());
        assert!(loose >= tight - 1e-12);
        let mut finer = grid.clone();
        finer.extend([0.5, 1.5, 2.5]);
        assert!(at(1e-4, finer) <= tight + 1e-12);
    }

    #[test]
    fn selection_reverified_by_gauss_legendre() {
        let pr = coarse((0..10).map(|i| 7.5 * i as f64 / 9.0).collect());
        let prep = PreparedEnvelope::new(pr.clone()).unwrap();
        let r = point_optimal_cr(&prep, (1.0, 2.0)).unwrap();
        for (k, &m0) in pr.null_grid.iter().enumerate() {
            let v = verify_selection(&prep, &r.selection, (0.0, m0), 10).unwrap();
            assert!(
                (v - r.null_rp[k]).abs() < 1e-10,
                "{m0}: {v} vs {}",
                r.null_rp[k]
            );
        }
        let bitmap = selection_bitmap(&pr, &r.selection);
        assert_eq!(bitmap.lines().count(), pr.columns());
    }
}
