//! Predictive density estimation for a Gaussian mean when a second population
//! supplies side information through a constraint on the mean difference.
//!
//! The model observes `X1 ~ N_p(theta1, s1 I)` and `X2 ~ N_p(theta2, s2 I)`
//! with `theta1 - theta2` known to lie in a convex set, and predicts the
//! density of `Y1 ~ N_p(theta1, sY I)`. Estimators are scored by
//! alpha-divergence loss.
//!
//! Layering, bottom up:
//! - [`special`]: normal tails, quadrature, orthant and chi-square CDFs
//! - [`model`]: problem description, constraint sets, rotations, reductions
//! - [`skewnormal`]: the skew-normal families behind univariate Bayes densities
//! - [`estimators`]: predictive density constructors
//! - [`risk`]: losses and frequentist risk
//! - [`dominance`]: variance-expansion calculus and persistence checks

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dominance;
pub mod error;
pub mod estimators;
pub mod model;
pub mod risk;
mod rng;
pub mod skewnormal;
pub mod special;

pub use error::{Error, Result};
