//! Boundary perturbation of semigroup generators on discretized function spaces.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod analytic_perturb;
pub mod boundary;
pub mod error;
pub mod examples;
pub mod linalg;
pub mod models;
pub mod operator_core;
pub mod report;
pub mod scales;
pub mod suite;

pub use error::{Error, Result};
pub use linalg::{c64, CMat, CVec};
pub use operator_core::{DiscreteSpace, GeneratorRep, NormKind, OperatorBlock};
pub use report::{CheckRecord, Verdict};
