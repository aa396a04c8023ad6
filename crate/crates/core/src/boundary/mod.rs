//! Boundary functions `g` that delimit the critical region
//! `{|t|₍₁₎ > g(|t|₍₂₎)}` in the ordered-absolute octant.

mod io;
mod linear;
mod step;

pub use io::{from_json, read_file, to_json, write_file};
pub use linear::{lr_boundary, published_optimal_boundary, GBoundary, PUBLISHED_G, PUBLISHED_T};
pub use step::{exact_similar_boundary, similarity_residual, StepBoundary};

/// Common evaluation interface of linear and step boundaries.
pub trait Frontier: Send + Sync {
    /// `g(|t|)`.
    fn eval(&self, t: f64) -> f64;

    /// Abscissae where `g` has a kink or jump; quadrature splits there.
    fn kinks(&self) -> Vec<f64>;

    fn alpha(&self) -> f64;

    /// Strict-inequality decision rule on the ordered pair.
    fn rejects(&self, t_small: f64, t_large: f64) -> bool {
        t_small > self.eval(t_large)
    }
}

/// Either kind of boundary, as stored in boundary files.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Linear(GBoundary),
    Step(StepBoundary),
}

impl Frontier for Boundary {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Boundary::Linear(b) => b.eval(t),
            Boundary::Step(b) => b.eval(t),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Boundary::Linear(b) => b.kinks(),
            Boundary::Step(b) => b.kinks(),
        }
    }

    fn alpha(&self) -> f64 {
        match self {
            Boundary::Linear(b) => b.alpha(),
            Boundary::Step(b) => b.alpha(),
        }
    }
}

impl From<GBoundary> for Boundary {
    fn from(b: GBoundary) -> Self {
        Boundary::Linear(b)
    }
}

impl From<StepBoundary> for Boundary {
    fn from(b: StepBoundary) -> Self {
        Boundary::Step(b)
    }
}
