//! Fixtures shared by the benchmarks.

use medgtest::envelope::EnvelopeProblem;
use medgtest::lp::{LinearProgram, Relation, Sense};

/// Alternatives spanning low, moderate and high power.
pub const ALT_POINTS: [(f64, f64); 4] = [(0.6, 0.6), (1.0, 2.0), (2.0, 2.0), (3.0, 3.0)];

/// Dense packing LP with `rows` coupling constraints over `n` boxed variables.
///
/// Coefficients follow a fixed quasi-random pattern so every run solves the same program.
pub fn packing_lp(n: usize, rows: usize) -> LinearProgram {
    let mut lp = LinearProgram::new(n, Sense::Maximize);
    let frac = |k: usize| (k as f64 * 0.618_033_988_749_895).fract();
    for j in 0..n {
        lp.set_cost(j, 0.1 + frac(j));
        lp.set_bounds(j, 0.0, 1.0);
    }
    for r in 0..rows {
        let coef = (0..n).map(|j| 0.05 + frac(r * n + j + 7)).collect();
        lp.add_row(coef, Relation::Le, 0.2 * n as f64);
    }
    lp
}

/// Envelope problem on a coarse grid, small enough to solve in well under a second.
pub fn coarse_envelope() -> EnvelopeProblem {
    EnvelopeProblem {
        cell: 0.2,
        null_grid: (0..8).map(|i| i as f64).collect(),
        ..EnvelopeProblem::default()
    }
}
