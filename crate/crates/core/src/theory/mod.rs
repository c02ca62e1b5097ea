//! Numerical verification of the accuracy and parity guarantees: error
//! exponents, exact Poisson-binomial computations, the sharp sup-pmf
//! constant, and the parity bounds built from them.

mod baillon;
mod bounds;
mod exponents;
mod poisson_binomial;

pub use baillon::{baillon_eta, baillon_h};
pub use bounds::{
    divergence_condition_check, dp_bound_check, small_crowd_bound, small_crowd_bound_exact,
    BoundAggregator, BoundReport, CrowdPartition, SmallCrowdReport,
};
pub use exponents::{bayes_exponent, mv_exponent};
pub use poisson_binomial::{mv_strict_tail, mv_tail_derivative, poisson_binomial_pmf};
