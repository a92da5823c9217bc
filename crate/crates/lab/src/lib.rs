//! Numerical laboratory for teacher/student recovery of a two-layer
//! non-overlapping CNN: closed-form population loss, perturbed gradient
//! descent with noise annealing, finite-sample SGD variants, and a
//! Monte-Carlo verification suite for the expectation bounds the
//! convergence argument rests on.

pub mod analysis;
pub mod empirical;
pub mod error;
pub mod harness;
pub mod optim;
pub mod population;
pub mod rng;
pub mod sphere;
pub mod vecmath;

pub use error::{Error, Result};
