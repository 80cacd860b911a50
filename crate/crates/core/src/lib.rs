//! Brascamp-Lieb constants and their entropic duals.
//!
//! The crate computes best constants of forward and forward-reverse
//! Brascamp-Lieb inequalities on finite alphabets, checks the equivalence
//! between their functional and entropic forms numerically, and solves the
//! log-determinant programs that arise for Gaussian sources (hypercontractivity,
//! Wyner common information, secret-key and common-randomness regions, the
//! Gaussian transportation inequality).
//!
//! Every information quantity is in nats.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bl_forward;
pub mod coupling;
pub mod error;
pub mod frbl;
pub mod gaussian;
pub mod gaussian_opt;
pub mod linalg;
pub mod lp;
pub mod measures;
pub mod property_harness;
pub mod report;
pub mod simplex;
pub mod special_cases;

pub use error::{Error, Result};
pub use gaussian::{GaussianChannel, GaussianMeasure};
pub use measures::{CostFunction, DiscreteDistribution, DiscreteMeasure, Kernel};
pub use report::{Certification, CheckReport};
