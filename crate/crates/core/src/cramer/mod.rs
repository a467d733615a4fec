//! Log-moment generating functions, Cramér transforms and the law of
//! `Λ*(X)` under product measures.

mod atomic;
mod distribution;
mod evaluator;
mod tails;

pub use atomic::{atomic_lambda_star_bracket, atomic_value_distribution, ray_supremum, Bracket};
pub use distribution::{
    cramer_distribution, lambda_star_moments, DistributionOptions, LambdaStarMoments,
    ValueDistribution,
};
pub use evaluator::{
    cramer_product, CramerEvaluator1D, CramerPoint, CramerStatus, ProductCramer, SolverOptions,
};
pub use tails::{
    lambda_star_condition_classify, survival_diagnostics, ClassifierReport, SurvivalRow, Verdict,
    CLASSIFIER_CAVEAT,
};
