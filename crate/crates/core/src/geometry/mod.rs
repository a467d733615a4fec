//! Convex hull membership and Tukey half-space depth.

mod depth;
mod simplex;

pub use depth::{
    tukey_depth_1d, tukey_depth_2d, tukey_depth_sampled, HalfspaceMass, PROJECTION_CAP,
};
pub use simplex::{hull_membership, HullStatus, HullWitness, MAX_PIVOTS, WITNESS_TOL};

/// Default marginal band on the phase-1 objective.
pub const DEFAULT_HULL_TOL: f64 = 1e-9;
