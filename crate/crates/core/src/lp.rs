//! Dense bounded-variable revised simplex.
//!
//! Sized for the problems in this crate: up to a few hundred rows and some
//! thousands of columns. Rows are equilibrated, `≥` rows are negated, lower
//! bounds are shifted to zero and every row gets a slack. Phase one minimizes
//! the sum of artificials; phase two keeps them pinned at zero. Pricing is
//! Dantzig with a switch to Bland's rule on long degenerate runs, and the
//! ratio test is Harris's two-pass rule including bound flips.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error(
        "invalid linear program: variable lower bounds must be finite and not above upper bounds"
    )]
    BadBounds,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    n: usize,
    sense: Sense,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    /// `n` variables with zero cost and bounds `[0, ∞)`.
    pub fn new(n: usize, sense: Sense) -> Self {
        Self {
            n,
            sense,
            cost: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_cost(&mut self, j: usize, c: f64) {
        self.cost[j] = c;
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    /// Adds a dense row `coef · x (rel) rhs`.
    pub fn add_row(&mut self, coef: Vec<f64>, rel: Relation, rhs: f64) {
        assert_eq!(
            coef.len(),
            self.n,
            "row length must equal the number of variables"
        );
        self.rows.push((coef, rel, rhs));
    }

    /// Adds a sparse row given as `(index, coefficient)` pairs.
    pub fn add_sparse_row(&mut self, terms: &[(usize, f64)], rel: Relation, rhs: f64) {
        let mut coef = vec![0.0; self.n];
        for &(j, a) in terms {
            coef[j] += a;
        }
        self.add_row(coef, rel, rhs);
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        Simplex::build(self)?.run(self)
    }
}

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
const PIV_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct Simplex {
    m: usize,
    /// Total columns: structural, slack, artificial.
    ncol: usize,
    n_struct: usize,
    n_art_start: usize,
    /// Column-major constraint matrix, `m` entries per column.
    a: Vec<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    xb: Vec<f64>,
    binv: Vec<f64>,
    iterations: usize,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Result<Self, LpError> {
        let n = lp.n;
        for j in 0..n {
            if !lp.lower[j].is_finite() || lp.upper[j] < lp.lower[j] || lp.upper[j].is_nan() {
                return Err(LpError::BadBounds);
            }
        }
        let m = lp.rows.len();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        let mut is_eq = Vec::with_capacity(m);
        for (coef, rel, rhs) in &lp.rows {
            let sign = if *rel == Relation::Ge { -1.0 } else { 1.0 };
            let mut r: Vec<f64> = coef.iter().map(|a| sign * a).collect();
            let mut rhs = sign * rhs;
            for j in 0..n {
                rhs -= r[j] * lp.lower[j];
            }
            let scale = r.iter().fold(0.0f64, |s, a| s.max(a.abs()));
            if scale > 0.0 {
                r.iter_mut().for_each(|a| *a /= scale);
                rhs /= scale;
            } else {
                let ok = if *rel == Relation::Eq {
                    rhs.abs() <= FEAS_TOL
                } else {
                    rhs >= -FEAS_TOL
                };
                if !ok {
                    return Err(LpError::Infeasible);
                }
                rhs = 0.0;
            }
            rows.push(r);
            b.push(rhs);
            is_eq.push(*rel == Relation::Eq);
        }

        let needs_art: Vec<bool> = (0..m)
            .map(|i| if is_eq[i] { b[i] != 0.0 } else { b[i] < 0.0 })
            .collect();
        let n_art = needs_art.iter().filter(|&&x| x).count();
        let ncol = n + m + n_art;
        let mut a = vec![0.0; m * ncol];
        for (i, r) in rows.iter().enumerate() {
            for j in 0..n {
                a[j * m + i] = r[j];
            }
            a[(n + i) * m + i] = 1.0;
        }
        let mut upper = Vec::with_capacity(ncol);
        upper.extend((0..n).map(|j| lp.upper[j] - lp.lower[j]));
        upper.extend(is_eq.iter().map(|&e| if e { 0.0 } else { f64::INFINITY }));
        let mut status = vec![Status::AtLower; ncol];
        let mut basis = Vec::with_capacity(m);
        let mut xb = Vec::with_capacity(m);
        let mut k = n + m;
        for i in 0..m {
            if needs_art[i] {
                a[k * m + i] = b[i].signum();
                upper.push(f64::INFINITY);
                status[k] = Status::Basic;
                basis.push(k);
                xb.push(b[i].abs());
                k += 1;
            } else {
                status[n + i] = Status::Basic;
                basis.push(n + i);
                xb.push(b[i]);
            }
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = a[basis[i] * m + i];
        }
        Ok(Self {
            m,
            ncol,
            n_struct: n,
            n_art_start: n + m,
            a,
            b,
            upper,
            status,
            basis,
            xb,
            binv,
            iterations: 0,
        })
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let limit = 20_000 + 20 * (self.m + self.ncol);
        if self.ncol > self.n_art_start {
            let mut c1 = vec![0.0; self.ncol];
            c1[self.n_art_start..].iter_mut().for_each(|c| *c = 1.0);
            self.optimize(&c1, limit)?;
            let infeas: f64 = (self.n_art_start..self.ncol).map(|j| self.value(j)).sum();
            let bnorm = self.b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            if infeas > FEAS_TOL * bnorm {
                return Err(LpError::Infeasible);
            }
            for j in self.n_art_start..self.ncol {
                self.upper[j] = 0.0;
                if self.status[j] != Status::Basic {
                    self.status[j] = Status::AtLower;
                }
            }
            self.refactor();
        }
        let sign = if lp.sense == Sense::Maximize {
            -1.0
        } else {
            1.0
        };
        let mut c2 = vec![0.0; self.ncol];
        for j in 0..self.n_struct {
            c2[j] = sign * lp.cost[j];
        }
        self.optimize(&c2, limit)?;
        let x: Vec<f64> = (0..self.n_struct)
            .map(|j| {
                let v = self.value(j).clamp(0.0, self.upper[j]);
                lp.lower[j] + v
            })
            .collect();
        let objective = x.iter().zip(&lp.cost).map(|(x, c)| x * c).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations: self.iterations,
        })
    }

    fn value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::AtLower => 0.0,
            Status::AtUpper => self.upper[j],
            Status::Basic => {
                let r = self
                    .basis
                    .iter()
                    .position(|&k| k == j)
                    .expect("basic variable is in basis");
                self.xb[r]
            }
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.a[j * self.m..(j + 1) * self.m]
    }

    /// Rebuilds `B⁻¹` from scratch and recomputes the basic values.
    fn refactor(&mut self) {
        let m = self.m;
        if m == 0 {
            return;
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.a[self.basis[k] * m + i]);
        if let Some(inv) = bmat.try_inverse() {
            for i in 0..m {
                for k in 0..m {
                    self.binv[i * m + k] = inv[(i, k)];
                }
            }
        }
        let mut rhs = self.b.clone();
        for j in 0..self.ncol {
            if self.status[j] == Status::AtUpper {
                let u = self.upper[j];
                for (r, a) in rhs.iter_mut().zip(self.col(j)) {
                    *r -= a * u;
                }
            }
        }
        for i in 0..m {
            self.xb[i] = (0..m).map(|k| self.binv[i * m + k] * rhs[k]).sum();
        }
    }

    fn optimize(&mut self, cost: &[f64], limit: usize) -> Result<(), LpError> {
        let m = self.m;
        let mut since_refactor = 0;
        let mut degenerate = 0usize;
        let mut y = vec![0.0; m];
        let mut w = vec![0.0; m];
        self.refactor();
        loop {
            if self.iterations >= limit {
                return Err(LpError::IterationLimit);
            }
            if since_refactor >= REFACTOR_EVERY {
                self.refactor();
                since_refactor = 0;
            }
            // Duals y = c_Bᵀ B⁻¹.
            y.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    for k in 0..m {
                        y[k] += cb * self.binv[i * m + k];
                    }
                }
            }
            let bland = degenerate > 50;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.ncol {
                let st = self.status[j];
                if st == Status::Basic || self.upper[j] == 0.0 {
                    continue;
                }
                let d = cost[j] - self.col(j).iter().zip(&y).map(|(a, y)| a * y).sum::<f64>();
                let improving = match st {
                    Status::AtLower => d < -OPT_TOL,
                    Status::AtUpper => d > OPT_TOL,
                    Status::Basic => false,
                };
                if improving {
                    if bland {
                        enter = Some((j, d));
                        break;
                    }
                    if enter.is_none_or(|(_, best)| d.abs() > best.abs()) {
                        enter = Some((j, d));
                    }
                }
            }
            let Some((j, _)) = enter else {
                return Ok(());
            };
            let sigma = if self.status[j] == Status::AtLower {
                1.0
            } else {
                -1.0
            };
            let col: Vec<f64> = self.col(j).to_vec();
            for i in 0..m {
                w[i] = (0..m).map(|k| self.binv[i * m + k] * col[k]).sum();
            }
            // x_B moves by θ·δ with δ = −σ w.
            let delta: Vec<f64> = w.iter().map(|wi| -sigma * wi).collect();

            // Harris pass one: largest step keeping every basic within bounds plus tolerance.
            let mut theta_max = f64::INFINITY;
            for i in 0..m {
                let d = delta[i];
                let ub = self.upper[self.basis[i]];
                if d < -PIV_TOL {
                    theta_max = theta_max.min((self.xb[i].max(0.0) + FEAS_TOL) / -d);
                } else if d > PIV_TOL && ub.is_finite() {
                    theta_max = theta_max.min(((ub - self.xb[i]).max(0.0) + FEAS_TOL) / d);
                }
            }
            let flip = self.upper[j];
            if flip.is_infinite() && theta_max.is_infinite() {
                return Err(LpError::Unbounded);
            }
            if flip <= theta_max {
                for i in 0..m {
                    self.xb[i] += flip * delta[i];
                }
                self.status[j] = if sigma > 0.0 {
                    Status::AtUpper
                } else {
                    Status::AtLower
                };
                self.iterations += 1;
                degenerate = 0;
                continue;
            }
            // Pass two: among rows that block before θ_max, take the largest pivot.
            let mut leave: Option<(usize, f64, bool)> = None;
            let mut best_piv = 0.0;
            for i in 0..m {
                let d = delta[i];
                let ub = self.upper[self.basis[i]];
                let (ratio, to_upper) = if d < -PIV_TOL {
                    (self.xb[i].max(0.0) / -d, false)
                } else if d > PIV_TOL && ub.is_finite() {
                    ((ub - self.xb[i]).max(0.0) / d, true)
                } else {
                    continue;
                };
                if ratio <= theta_max {
                    let better = if bland {
                        leave.is_none_or(|(r, _, _)| self.basis[i] < self.basis[r])
                            && ratio <= leave.map_or(f64::INFINITY, |(_, t, _)| t)
                    } else {
                        d.abs() > best_piv
                    };
                    if better {
                        best_piv = d.abs();
                        leave = Some((i, ratio, to_upper));
                    }
                }
            }
            let Some((r, theta, to_upper)) = leave else {
                return Err(LpError::Unbounded);
            };
            for i in 0..m {
                self.xb[i] += theta * delta[i];
            }
            let leaving = self.basis[r];
            self.status[leaving] = if to_upper {
                Status::AtUpper
            } else {
                Status::AtLower
            };
            let entering_value = if sigma > 0.0 {
                theta
            } else {
                self.upper[j] - theta
            };
            self.status[j] = Status::Basic;
            self.basis[r] = j;
            self.xb[r] = entering_value;

            let piv = w[r];
            for k in 0..m {
                self.binv[r * m + k] /= piv;
            }
            for i in 0..m {
                if i != r && w[i] != 0.0 {
                    let f = w[i];
                    for k in 0..m {
                        self.binv[i * m + k] -= f * self.binv[r * m + k];
                    }
                }
            }
            self.iterations += 1;
            since_refactor += 1;
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
        }
    }
}
