//! Strong approximation of regenerative cumulative processes.
//!
//! The crate simulates cumulative processes built from i.i.d. regeneration
//! cycles, estimates their drift and asymptotic covariance, couples them with
//! an explicitly constructed Wiener process, splits the approximation error
//! into eight terms, evaluates the closed-form probability inequalities that
//! control each term, and runs Monte Carlo experiments that check the
//! `o(t^{1/p})` almost-sure rate and the `a t x^{-p}` tail bound.
//!
//! Module map:
//!
//! * [`model`]: cycles, paths, counting processes.
//! * [`generators`]: the model catalog and reproducible RNG streams ([`rng`]).
//! * [`greeks`]: drift/covariance parameters, matrix square root and pseudo-inverse.
//! * [`coupling`]: Gaussian drivers, Poisson embedding, Wiener surrogates, the
//!   assembled Wiener process and the error decomposition.
//! * [`bounds`]: inequality calculators with validity regions.
//! * [`harness`]: Monte Carlo experiments and bound certification.
//! * [`config`]: the experiment configuration file.

pub mod bounds;
pub mod config;
pub mod coupling;
pub mod error;
pub mod generators;
pub mod greeks;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod output;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
