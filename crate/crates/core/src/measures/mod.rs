//! Atomic probability measures: 1D mass functions, products, finite atomic
//! laws in ℝⁿ and uniform laws on lattice p-balls.

mod atomic;
mod json;
mod lattice_ball;
mod pmf;
mod product;

pub use atomic::{Atom, FiniteAtomicLaw};
pub use json::{fmt17, Measure};
pub use lattice_ball::{LatticeBallLaw, DEFAULT_ENUMERATION_CAP};
pub use pmf::{
    make_bernoulli, make_symmetric_geometric, validate_log_concave, LogConcavityReport, Pmf1D,
    TailPolicy,
};
pub use product::ProductLaw;

use crate::error::Result;

/// Lattice points of the ball in lexicographic order.
pub fn lattice_ball_enumerate(law: &LatticeBallLaw, cap: u64) -> Result<Vec<Vec<i64>>> {
    law.enumerate(cap)
}
