//! Captured mass of random polytopes spanned by samples of atomic measures:
//! Cramér transforms, half-space depth, lattice ball combinatorics and a
//! reproducible Monte Carlo harness.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix `f64`.

pub mod convext;
pub mod counterexamples;
pub mod cramer;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod measures;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};

pub type Pmf = measures::Pmf1D<f64>;
pub type Product = measures::ProductLaw<f64>;
pub type AtomicLaw = measures::FiniteAtomicLaw<f64>;
pub type AnyMeasure = measures::Measure<f64>;
pub type Evaluator = cramer::CramerEvaluator1D<f64>;
pub type ValueDist = cramer::ValueDistribution<f64>;
pub type Extension = convext::PiecewiseLinearExtension<f64>;

pub type Pmf32 = measures::Pmf1D<f32>;
pub type Evaluator32 = cramer::CramerEvaluator1D<f32>;
