//! Near-similar g-test for the no-mediation hypothesis `θ₁θ₂ = 0`.

pub mod boundary;
pub mod dist;
pub mod envelope;
pub mod error;
pub mod lp;
pub mod mediation;
pub mod optimize;
pub mod quad;
pub mod rp;

pub use boundary::{Boundary, Frontier, GBoundary, StepBoundary};
pub use dist::{Noncentrality, OrderedAbsT};
pub use envelope::{EnvelopeProblem, EnvelopeSurface, PointOptimal};
pub use error::{Error, Result};
pub use mediation::{Decision, MediationData, TestReport};
pub use optimize::{OptimizeConfig, OptimizeResult};
pub use rp::RPGrid;
