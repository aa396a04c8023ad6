//! Varying-g boundary construction.
//!
//! The boundary is a linear spline through `(0, 0)`, `J` interior knots and
//! `(2.5, z)`, followed by the constant tail `z`. One interior knot keeps its
//! abscissa at `z`; the others move freely. Both algorithms run sequential
//! linear programming with a trust region on the knot coordinates, using
//! analytic derivatives of the rejection probabilities:
//!
//! * `∂P/∂y_k = −∫ f(g(t), t) ĥ_k(t) dt`
//! * `∂P/∂x_k = ∫ f(g(t), t) g′(t) ĥ_k(t) dt`
//!
//! where `f` is the ordered density and `ĥ_k` the hat function of knot `k`.
//! Steps are accepted on an exact-penalty merit function, so every accepted
//! iterate satisfies the linear shape constraints and the penalty keeps the
//! null rejection probabilities below `α`.

use crate::boundary::{Frontier, GBoundary};
use crate::dist::{pdf2_raw, two_sided_critical_value, Noncentrality};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::quad::gk21;
use crate::rp::{rejection_prob, RPGrid};
use rayon::prelude::*;
use serde::Serialize;

/// Abscissa of the last knot; the boundary equals `z` from here on.
pub const KNOT_END: f64 = 2.5;
/// Minimum spacing between neighbouring knot abscissae.
const MIN_GAP: f64 = 0.005;
/// Excess of a null rejection probability over `α` still counted as feasible.
pub const LEVEL_SLACK: f64 = 5e-9;
/// The LP subproblem aims this far inside the slack, leaving room for its own row tolerance.
const LP_TARGET: f64 = 1e-9;
/// Merit weight on constraint violation while restoring feasibility.
const PENALTY: f64 = 100.0;
/// Cost of elastic slack in the LP subproblem.
const LP_PENALTY: f64 = 1e4;
const MAX_RADIUS: f64 = 0.2;
const MIN_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeConfig {
    /// Largest number of interior knots on the escalation path 1, 2, 4, ….
    pub j_max: usize,
    /// Null points `(0, μ₀)`, given by `μ₀`.
    pub null_grid: Vec<f64>,
    pub alt_grid: Vec<(f64, f64)>,
    pub epsilon: f64,
    pub alpha: f64,
    /// Quadrature tolerance for rejection probabilities.
    pub tol: f64,
    /// SLP iterations per knot level.
    pub max_iterations: usize,
    /// Escalation stops once a doubling improves the achieved ε by less than this.
    pub escalation_threshold: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            j_max: 16,
            null_grid: default_null_grid(),
            alt_grid: default_alt_grid(),
            epsilon: 1e-5,
            alpha: 0.05,
            tol: 1e-10,
            max_iterations: 150,
            escalation_threshold: 1e-8,
        }
    }
}

impl OptimizeConfig {
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
        if self.j_max == 0 {
            return Err(Error::InvalidConfig("j_max must be at least 1".into()));
        }
        if self.null_grid.len() <= self.j_max {
            return Err(Error::InvalidConfig(format!(
                "the null grid needs more points ({}) than knots ({})",
                self.null_grid.len(),
                self.j_max
            )));
        }
        if self.null_grid.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidConfig(
                "null grid values must be finite and non-negative".into(),
            ));
        }
        if self
            .alt_grid
            .iter()
            .any(|&(a, b)| !(a.is_finite() && b.is_finite()))
        {
            return Err(Error::InvalidConfig(
                "alternative grid values must be finite".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if two_sided_critical_value(self.alpha)? >= KNOT_END {
            return Err(Error::InvalidConfig(format!(
                "alpha {} puts the critical value beyond the last knot {KNOT_END}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// 60 points spanning [0, 6] and 16 more on (6, 20].
pub fn default_null_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..60).map(|i| 6.0 * i as f64 / 59.0).collect();
    g.extend((1..=16).map(|k| 6.0 + 14.0 * k as f64 / 16.0));
    g
}

/// `μ₂ ∈ {0.2, 0.4, …, 4}`, `μ₁ ∈ {0.2, …, μ₂}`.
pub fn default_alt_grid() -> Vec<(f64, f64)> {
    let mut g = Vec::new();
    for j in 1..=20 {
        for i in 1..=j {
            g.push((0.2 * i as f64, 0.2 * j as f64));
        }
    }
    g
}

#[derive(Debug, Clone, Serialize)]
pub struct LogEntry {
    pub j: usize,
    pub iteration: usize,
    /// `Σ (NRP − α)²` over the null grid.
    pub q: f64,
    /// `α − min NRP`.
    pub epsilon: f64,
    pub max_nrp: f64,
    pub merit: f64,
    pub radius: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeResult {
    #[serde(skip)]
    pub boundary: GBoundary,
    pub j: usize,
    pub achieved_epsilon: f64,
    pub max_nrp: f64,
    pub q: f64,
    /// Mean power over the alternative grid (optimal algorithm only).
    pub mean_power: Option<f64>,
    /// Whether every knot level ended by a small step or trust region rather than the iteration cap.
    pub converged: bool,
    pub log: Vec<LogEntry>,
}

/// Interior knots of the spline.
#[derive(Debug, Clone, PartialEq)]
struct Knots {
    x: Vec<f64>,
    y: Vec<f64>,
    pinned: usize,
    z: f64,
}

impl Knots {
    fn lr(z: f64) -> Self {
        Self {
            x: vec![z],
            y: vec![z],
            pinned: 0,
            z,
        }
    }

    fn from_boundary(b: &GBoundary, z: f64) -> Result<Self> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &(t, g) in b.knots() {
            if t > 0.0 && t < KNOT_END - MIN_GAP {
                x.push(t);
                y.push(g);
            }
        }
        let pinned = match x.iter().position(|&t| (t - z).abs() < MIN_GAP) {
            Some(i) => {
                x[i] = z;
                i
            }
            None => {
                let i = x.partition_point(|&t| t < z);
                x.insert(i, z);
                y.insert(i, b.eval(z));
                i
            }
        };
        let mut k = Self { x, y, pinned, z };
        if k.x.windows(2).any(|w| w[1] - w[0] < MIN_GAP) || k.x[0] < MIN_GAP {
            return Err(Error::InvalidConfig(
                "start boundary knots are closer than the minimum gap".into(),
            ));
        }
        k.repair();
        Ok(k)
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    /// Full knot list including both endpoints.
    fn full(&self) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(self.len() + 2);
        let mut y = Vec::with_capacity(self.len() + 2);
        x.push(0.0);
        y.push(0.0);
        x.extend(&self.x);
        y.extend(&self.y);
        x.push(KNOT_END);
        y.push(self.z);
        (x, y)
    }

    fn boundary(&self, alpha: f64) -> Result<GBoundary> {
        let (x, y) = self.full();
        GBoundary::from_xy(alpha, &x, &y, self.z)
    }

    /// Projects the ordinates back onto `0 ≤ y ≤ min(x, z)` and monotone order.
    fn repair(&mut self) {
        let mut prev = 0.0f64;
        for k in 0..self.len() {
            self.y[k] = self.y[k].max(prev).min(self.x[k]).min(self.z);
            prev = self.y[k];
        }
        for k in (0..self.len().saturating_sub(1)).rev() {
            self.y[k] = self.y[k].min(self.y[k + 1]);
        }
    }

    /// Inserts a knot at the midpoint of each of the `count` widest segments without changing the boundary.
    fn split(&mut self, count: usize) {
        let (fx, fy) = self.full();
        let mut seg: Vec<usize> = (0..fx.len() - 1).collect();
        seg.sort_by(|&a, &b| {
            (fx[b + 1] - fx[b])
                .total_cmp(&(fx[a + 1] - fx[a]))
                .then(a.cmp(&b))
        });
        let mut mids: Vec<(f64, f64)> = seg
            .iter()
            .take(count)
            .map(|&s| (0.5 * (fx[s] + fx[s + 1]), 0.5 * (fy[s] + fy[s + 1])))
            .collect();
        mids.sort_by(|a, b| a.0.total_cmp(&b.0));
        let pinned_x = self.x[self.pinned];
        let mut pts: Vec<(f64, f64)> = self.x.iter().copied().zip(self.y.iter().copied()).collect();
        pts.extend(mids);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.x = pts.iter().map(|p| p.0).collect();
        self.y = pts.iter().map(|p| p.1).collect();
        self.pinned = self
            .x
            .iter()
            .position(|&t| t == pinned_x)
            .expect("pinned knot kept");
    }
}

/// A rejection probability with its gradient: `∂/∂y` for each interior knot, then `∂/∂x`.
#[derive(Debug, Clone)]
struct Sensitivity {
    value: f64,
    grad: Vec<f64>,
}

fn sensitivity(
    knots: &Knots,
    boundary: &GBoundary,
    mu: (f64, f64),
    tol: f64,
) -> Result<Sensitivity> {
    let nc = Noncentrality::pair(mu.0, mu.1)?;
    let value = rejection_prob(boundary, &nc, tol)?.value;
    let (fx, fy) = knots.full();
    let j = knots.len();
    let (m1, m2) = (mu.0.abs(), mu.1.abs());
    // Per segment s: ∫ f(g,t)·(t−x_s)/h and ∫ f(g,t)·(x_{s+1}−t)/h.
    let mut rise = vec![0.0; fx.len() - 1];
    let mut fall = vec![0.0; fx.len() - 1];
    for s in 0..fx.len() - 1 {
        let (a, b) = (fx[s], fx[s + 1]);
        let h = b - a;
        let slope = (fy[s + 1] - fy[s]) / h;
        let dens = |t: f64| {
            let g = fy[s] + slope * (t - a);
            pdf2_raw(g.min(t).max(0.0), t, m1, m2)
        };
        let mid = 0.5 * (a + b);
        for (lo, hi) in [(a, mid), (mid, b)] {
            rise[s] += gk21(&|t| dens(t) * (t - a) / h, lo, hi).value;
            fall[s] += gk21(&|t| dens(t) * (b - t) / h, lo, hi).value;
        }
    }
    let mut grad = vec![0.0; 2 * j];
    for k in 0..j {
        let i = k + 1;
        let left = i - 1;
        let right = i;
        let sl = (fy[i] - fy[i - 1]) / (fx[i] - fx[i - 1]);
        let sr = (fy[i + 1] - fy[i]) / (fx[i + 1] - fx[i]);
        grad[k] = -(rise[left] + fall[right]);
        grad[j + k] = sl * rise[left] + sr * fall[right];
    }
    Ok(Sensitivity { value, grad })
}

fn evaluate(
    knots: &Knots,
    alpha: f64,
    points: &[(f64, f64)],
    tol: f64,
) -> Result<Vec<Sensitivity>> {
    let b = knots.boundary(alpha)?;
    points
        .par_iter()
        .map(|&mu| sensitivity(knots, &b, mu, tol))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Basic,
    Optimal { epsilon: f64 },
}

struct Problem<'a> {
    cfg: &'a OptimizeConfig,
    mode: Mode,
    null_pts: Vec<(f64, f64)>,
}

struct Iterate {
    knots: Knots,
    null: Vec<Sensitivity>,
    alt: Vec<Sensitivity>,
    objective: f64,
    merit: f64,
    feasible: bool,
}

/// Second-order corrections: observed excess of each null rejection
/// probability over its linear prediction, above (`up`) and below (`down`).
struct Shifts {
    up: Vec<f64>,
    down: Vec<f64>,
}

impl Shifts {
    fn new(n: usize) -> Self {
        Self {
            up: vec![0.0; n],
            down: vec![0.0; n],
        }
    }

    fn scale(&mut self, f: f64) {
        self.up
            .iter_mut()
            .chain(self.down.iter_mut())
            .for_each(|v| *v *= f);
    }

    fn absorb(&mut self, base: &[Sensitivity], trial: &[Sensitivity], d: &[f64]) {
        for (i, (b, t)) in base.iter().zip(trial).enumerate() {
            let lin = b.value + b.grad.iter().zip(d).map(|(g, d)| g * d).sum::<f64>();
            self.up[i] += (t.value - lin).max(0.0);
            self.down[i] += (lin - t.value).max(0.0);
        }
    }
}

impl Problem<'_> {
    fn alpha(&self) -> f64 {
        self.cfg.alpha
    }

    /// Objective and total constraint violation.
    fn score(&self, null: &[Sensitivity], alt: &[Sensitivity]) -> (f64, f64) {
        let a = self.alpha();
        let over: f64 = null.iter().map(|s| (s.value - a).max(0.0)).sum();
        match self.mode {
            Mode::Basic => {
                let eps = null
                    .iter()
                    .map(|s| a - s.value)
                    .fold(f64::NEG_INFINITY, f64::max);
                (eps, over)
            }
            Mode::Optimal { epsilon } => {
                let under: f64 = null.iter().map(|s| (a - epsilon - s.value).max(0.0)).sum();
                let power = alt.iter().map(|s| s.value).sum::<f64>() / alt.len() as f64;
                (-power, over + under)
            }
        }
    }

    fn is_feasible(&self, null: &[Sensitivity]) -> bool {
        let a = self.alpha();
        null.iter().all(|s| {
            s.value <= a + LEVEL_SLACK
                && match self.mode {
                    Mode::Basic => true,
                    Mode::Optimal { epsilon } => s.value >= a - epsilon - LEVEL_SLACK,
                }
        })
    }

    fn iterate(&self, knots: Knots) -> Result<Iterate> {
        let null = evaluate(&knots, self.alpha(), &self.null_pts, self.cfg.tol)?;
        let alt = match self.mode {
            Mode::Basic => Vec::new(),
            Mode::Optimal { .. } => {
                evaluate(&knots, self.alpha(), &self.cfg.alt_grid, self.cfg.tol)?
            }
        };
        let (objective, violation) = self.score(&null, &alt);
        let feasible = self.is_feasible(&null);
        Ok(Iterate {
            knots,
            null,
            alt,
            objective,
            merit: objective + PENALTY * violation,
            feasible,
        })
    }

    /// Solves the trust-region LP; returns the step, the model objective and the model violation.
    fn step(&self, it: &Iterate, radius: f64, shifts: &Shifts) -> Result<(Vec<f64>, f64, f64)> {
        let k = &it.knots;
        let j = k.len();
        let nu = it.null.len();
        let a = self.alpha();
        let (fx, fy) = k.full();
        // Columns: Δy (j), Δx (j), then mode-specific extras.
        let (n_extra, s_col, v_col, w_col) = match self.mode {
            Mode::Basic => (1 + nu, Some(2 * j), 2 * j + 1, None),
            Mode::Optimal { .. } => (2 * nu, None, 2 * j, Some(2 * j + nu)),
        };
        let n = 2 * j + n_extra;
        let mut lp = LinearProgram::new(n, Sense::Minimize);
        for i in 0..j {
            let lo = (-radius).max(-k.y[i]);
            let hi = radius.min(k.z - k.y[i]).max(lo);
            lp.set_bounds(i, lo, hi);
            if i == k.pinned {
                lp.set_bounds(j + i, 0.0, 0.0);
            } else {
                let lo = (-radius).max(MIN_GAP - k.x[i]);
                let hi = radius.min(KNOT_END - MIN_GAP - k.x[i]).max(lo);
                lp.set_bounds(j + i, lo, hi);
            }
        }
        // Slack is priced per unit of knot movement needed to remove it.
        let price: Vec<f64> = it
            .null
            .iter()
            .map(|s| LP_PENALTY / s.grad.iter().fold(1e-4f64, |m, g| m.max(g.abs())))
            .collect();
        for r in 0..nu {
            lp.set_cost(v_col + r, price[r]);
        }
        // A feasible iterate keeps points already inside the slack from rising further.
        let upper_rhs = |v: f64| {
            let room = a + LP_TARGET - v;
            if it.feasible {
                room.max(0.0)
            } else {
                room
            }
        };
        let lower_rhs = |v: f64, eps: f64| {
            let need = a - eps + LP_TARGET - v;
            if it.feasible {
                need.min(0.0)
            } else {
                need
            }
        };
        match self.mode {
            Mode::Basic => {
                let s = s_col.expect("basic mode has s");
                lp.set_bounds(s, -1.0, 1.0);
                lp.set_cost(s, 1.0);
                for sen in &it.null {
                    // α − (P + ∇P·Δ) ≤ s
                    let mut terms: Vec<(usize, f64)> =
                        sen.grad.iter().enumerate().map(|(c, &g)| (c, -g)).collect();
                    terms.push((s, -1.0));
                    lp.add_sparse_row(&terms, Relation::Le, sen.value - a);
                }
            }
            Mode::Optimal { epsilon } => {
                let w = w_col.expect("optimal mode has lower slacks");
                let na = it.alt.len() as f64;
                for c in 0..2 * j {
                    let g: f64 = it.alt.iter().map(|s| s.grad[c]).sum();
                    lp.set_cost(c, -g / na);
                }
                for (r, sen) in it.null.iter().enumerate() {
                    lp.set_cost(w + r, price[r]);
                    // P + ∇P·Δ + w ≥ α − ε
                    let mut terms: Vec<(usize, f64)> =
                        sen.grad.iter().copied().enumerate().collect();
                    terms.push((w + r, 1.0));
                    lp.add_sparse_row(
                        &terms,
                        Relation::Ge,
                        lower_rhs(sen.value, epsilon) + shifts.down[r],
                    );
                }
            }
        }
        for (r, sen) in it.null.iter().enumerate() {
            // P + ∇P·Δ − v ≤ α + slack
            let mut terms: Vec<(usize, f64)> = sen.grad.iter().copied().enumerate().collect();
            terms.push((v_col + r, -1.0));
            lp.add_sparse_row(&terms, Relation::Le, upper_rhs(sen.value) - shifts.up[r]);
        }
        // Shape constraints between consecutive knots, endpoints fixed.
        for s in 0..=j {
            let dy: Vec<(usize, f64)> = [(s.checked_sub(1), -1.0), ((s < j).then_some(s), 1.0)]
                .into_iter()
                .filter_map(|(c, v)| c.map(|c| (c, v)))
                .collect();
            let dx: Vec<(usize, f64)> = dy.iter().map(|&(c, v)| (j + c, v)).collect();
            let gap_y = fy[s + 1] - fy[s];
            let gap_x = fx[s + 1] - fx[s];
            // Monotone.
            lp.add_sparse_row(&dy, Relation::Ge, -gap_y);
            // Slope at most one.
            let mut slope: Vec<(usize, f64)> = dy.clone();
            slope.extend(dx.iter().map(|&(c, v)| (c, -v)));
            lp.add_sparse_row(&slope, Relation::Le, gap_x - gap_y);
            // Spacing.
            lp.add_sparse_row(&dx, Relation::Ge, MIN_GAP - gap_x);
        }
        let sol = lp.solve().map_err(|e| match e {
            LpError::Infeasible => {
                Error::InfeasibleConstraints("trust-region subproblem has no feasible step".into())
            }
            other => Error::OptimizationFailure {
                reason: format!("trust-region subproblem: {other}"),
            },
        })?;
        let slack: f64 = sol.x[v_col..].iter().sum();
        let priced: f64 = sol.x[v_col..]
            .iter()
            .zip(price.iter().chain(&price))
            .map(|(x, p)| x * p)
            .sum();
        let model = sol.objective - priced;
        let model = match self.mode {
            Mode::Basic => model,
            Mode::Optimal { .. } => {
                model - it.alt.iter().map(|s| s.value).sum::<f64>() / it.alt.len() as f64
            }
        };
        Ok((sol.x[..2 * j].to_vec(), model, slack))
    }

    fn trial(&self, it: &Iterate, d: &[f64]) -> Knots {
        let mut k = it.knots.clone();
        let j = k.len();
        for i in 0..j {
            k.y[i] += d[i];
            if i != k.pinned {
                k.x[i] += d[j + i];
            }
        }
        k.repair();
        k
    }

    fn log_entry(&self, it: &Iterate, iteration: usize, radius: f64, accepted: bool) -> LogEntry {
        let a = self.alpha();
        let (mut lo, mut hi, mut q) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for s in &it.null {
            lo = lo.min(s.value);
            hi = hi.max(s.value);
            q += (s.value - a).powi(2);
        }
        LogEntry {
            j: it.knots.len(),
            iteration,
            q,
            epsilon: a - lo,
            max_nrp: hi,
            merit: it.merit,
            radius,
            accepted,
        }
    }

    /// Runs the trust-region SLP at a fixed knot count. Returns whether it converged.
    ///
    /// A feasible iterate only gives way to a feasible trial. A trial that
    /// breaks a null constraint feeds its curvature into the shifts and the
    /// subproblem is re-solved before the radius shrinks.
    fn solve_level(&self, it: &mut Iterate, log: &mut Vec<LogEntry>) -> Result<bool> {
        let mut radius = 0.1f64;
        let mut shifts = Shifts::new(it.null.len());
        let mut corrections = 0;
        for iteration in 0..self.cfg.max_iterations {
            let (d, model, slack) = self.step(it, radius, &shifts)?;
            let (predicted, current) = if it.feasible {
                (it.objective - model, it.objective)
            } else {
                (it.merit - model - PENALTY * slack, it.merit)
            };
            if predicted <= 1e-14 {
                if corrections == 0 {
                    return Ok(true);
                }
                // The corrected subproblem found nothing; retry closer in.
                radius *= 0.5;
                shifts.scale(0.0);
                corrections = 0;
                continue;
            }
            let cand = self.iterate(self.trial(it, &d))?;
            let actual = current
                - if it.feasible {
                    cand.objective
                } else {
                    cand.merit
                };
            let keeps_feasible = !it.feasible || cand.feasible;
            let accepted = keeps_feasible && actual >= 0.1 * predicted && actual > 0.0;
            if accepted {
                let step_len = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if actual >= 0.75 * predicted && step_len >= 0.99 * radius {
                    radius = (2.0 * radius).min(MAX_RADIUS);
                }
                shifts.scale(0.5);
                corrections = 0;
                *it = cand;
            } else if !keeps_feasible && corrections < 2 {
                shifts.absorb(&it.null, &cand.null, &d);
                corrections += 1;
            } else {
                radius *= 0.5;
                shifts.scale(0.25);
                corrections = 0;
            }
            log.push(self.log_entry(it, iteration, radius, accepted));
            if radius < MIN_RADIUS {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn finish(&self, it: &Iterate, converged: bool, log: Vec<LogEntry>) -> Result<OptimizeResult> {
        let e = self.log_entry(it, 0, 0.0, true);
        if e.max_nrp > self.alpha() + LEVEL_SLACK {
            return Err(Error::OptimizationFailure {
                reason: format!(
                    "best iterate (J = {}) exceeds the level: max NRP {} with achieved epsilon {}",
                    e.j, e.max_nrp, e.epsilon
                ),
            });
        }
        let mean_power = match self.mode {
            Mode::Basic => None,
            Mode::Optimal { .. } => {
                Some(it.alt.iter().map(|s| s.value).sum::<f64>() / it.alt.len() as f64)
            }
        };
        Ok(OptimizeResult {
            boundary: it.knots.boundary(self.alpha())?,
            j: e.j,
            achieved_epsilon: e.epsilon,
            max_nrp: e.max_nrp,
            q: e.q,
            mean_power,
            converged,
            log,
        })
    }
}

fn null_points(cfg: &OptimizeConfig) -> Vec<(f64, f64)> {
    cfg.null_grid.iter().map(|&m| (0.0, m)).collect()
}

/// Near-similar boundary: maximizes the smallest null rejection probability
/// subject to `NRP ≤ α`, starting from the LR boundary and doubling the knot
/// count up to `j_max`. Doubling inserts knots on the current spline, so the
/// achieved ε never increases along the path.
pub fn basic_varying_g(cfg: &OptimizeConfig) -> Result<OptimizeResult> {
    cfg.validate()?;
    let z = two_sided_critical_value(cfg.alpha)?;
    let problem = Problem {
        cfg,
        mode: Mode::Basic,
        null_pts: null_points(cfg),
    };
    let mut it = problem.iterate(Knots::lr(z))?;
    let mut log = vec![problem.log_entry(&it, 0, 0.0, true)];
    let mut converged = true;
    let mut last_eps = f64::INFINITY;
    loop {
        converged &= problem.solve_level(&mut it, &mut log)?;
        let eps = problem.log_entry(&it, 0, 0.0, true).epsilon;
        let j = it.knots.len();
        if j >= cfg.j_max || (j > 1 && last_eps - eps < cfg.escalation_threshold) {
            break;
        }
        last_eps = eps;
        let mut knots = it.knots.clone();
        knots.split(j.min(cfg.j_max - j));
        it = problem.iterate(knots)?;
    }
    problem.finish(&it, converged, log)
}

/// Envelope-matching boundary: maximizes power summed over the alternative
/// grid, equivalently minimizes `Σ (π̄ − π_g)`, subject to
/// `α − ε ≤ NRP ≤ α` on the null grid and the shape constraints. Starts from
/// `start` or, if absent, from the basic algorithm's output.
pub fn optimal_varying_g(
    cfg: &OptimizeConfig,
    start: Option<&GBoundary>,
) -> Result<OptimizeResult> {
    cfg.validate()?;
    if cfg.alt_grid.is_empty() {
        return Err(Error::InvalidConfig("the alternative grid is empty".into()));
    }
    let z = two_sided_critical_value(cfg.alpha)?;
    let knots = match start {
        Some(b) => Knots::from_boundary(b, z)?,
        None => Knots::from_boundary(&basic_varying_g(cfg)?.boundary, z)?,
    };
    let problem = Problem {
        cfg,
        mode: Mode::Optimal {
            epsilon: cfg.epsilon,
        },
        null_pts: null_points(cfg),
    };
    let mut it = problem.iterate(knots)?;
    let mut log = vec![problem.log_entry(&it, 0, 0.0, true)];
    let converged = problem.solve_level(&mut it, &mut log)?;
    let result = problem.finish(&it, converged, log)?;
    if result.achieved_epsilon > cfg.epsilon + LEVEL_SLACK {
        return Err(Error::OptimizationFailure {
            reason: format!(
                "could not reach the similarity band: achieved epsilon {} above {}",
                result.achieved_epsilon, cfg.epsilon
            ),
        });
    }
    Ok(result)
}

/// `Q = Σ (NRP(0, μ₀) − α)²` over a null grid, with the NRP curve.
#[derive(Debug, Clone, Serialize)]
pub struct QReport {
    pub q: f64,
    pub achieved_epsilon: f64,
    pub max_nrp: f64,
    pub nrp: RPGrid,
}

pub fn q_value(boundary: &dyn Frontier, id: &str, null_grid: &[f64], tol: f64) -> Result<QReport> {
    let nrp = crate::rp::nrp_curve(boundary, id, null_grid, tol)?;
    let a = boundary.alpha();
    let q = nrp.values.iter().map(|v| (v - a).powi(2)).sum();
    Ok(QReport {
        q,
        achieved_epsilon: a - nrp.min(),
        max_nrp: nrp.max(),
        nrp,
    })
}

/// Total shortfall `Σ (π̄ − π_g)` of a boundary against an envelope surface.
pub fn envelope_gap(boundary: &dyn Frontier, envelope: &RPGrid, tol: f64) -> Result<(f64, f64)> {
    let gaps: Vec<f64> = envelope
        .mu
        .par_iter()
        .zip(&envelope.values)
        .map(|(mu, &top)| {
            let nc = Noncentrality::new(mu.clone())?;
            Ok(top - rejection_prob(boundary, &nc, tol)?.value)
        })
        .collect::<Result<_>>()?;
    let sum = gaps.iter().sum();
    let max = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((sum, max))
}
