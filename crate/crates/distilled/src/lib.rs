//! Task-specific dataset distillation: synthesize a small dataset such that
//! a model trained on it performs a chosen inference task close to ground
//! truth.
//!
//! The synthetic dataset is always the decision variable ([`dataset`]); an
//! application supplies the model family, the inference task and the risk
//! measure ([`risk`]). Outer optimizers: the zero-order two-point loop
//! ([`zo`]), the budgeted (1+1) evolution strategy ([`dfo`]) and greedy
//! coordinate descent for categorical data ([`mixar`]). Case studies:
//! Gaussian dynamic Bayesian networks from heterogeneous medical-style
//! partitions ([`gdbn`]), boundary-generalizable physics-informed networks
//! ([`pinn`]) and categorical mixture autoregression ([`mixar`]). The
//! [`harness`] module and the `distilled` binary reproduce the studies at
//! desk or paper scale.

// Indexed loops are the house style for the numeric kernels, and negated
// float comparisons (`!(x > 0.0)`) also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod dataset;
pub mod dfo;
pub mod error;
pub mod gdbn;
pub mod harness;
pub mod linalg;
pub mod mixar;
pub mod pinn;
pub mod risk;
pub mod rng;
pub mod zo;
