//! Constructive coupling of a cumulative process with a Wiener process.
//!
//! The pipeline, for one replication:
//!
//! 1. [`drivers`]: unit Gaussian increments of `B` (d-dim) and `B~` (scalar)
//!    together with the cycles, coupled according to a [`CouplingMode`].
//! 2. [`poisson`]: a rate-`lambda` Poisson process `N` computed from `B~` alone.
//! 3. [`wiener`]: surrogates `W~_u = -sqrt(mu) B~_{u/mu}`,
//!    `W*_s = sqrt(lambda) B_{s/lambda}`, an independent `W°`, and the assembled
//!    `W = s+(lambda^{-1/2} v W*_{t/gamma} - lambda^{-1} gamma^{-1/2} mu alpha W~_t) + (I - s+ s) W°_t`.
//! 4. [`phi`]: the exact eight-term split of `S(u) - kappa u - sigma W_u`.
//!
//! Surrogate rates are measured by the harness, never assumed.

pub mod bundle;
pub mod drivers;
pub mod paths;
pub mod phi;
pub mod poisson;
pub mod wiener;

pub use bundle::CouplingBundle;
pub use drivers::{check_mode, drive_gaussians, CouplingMode, DriverSource, GaussianDriver};
pub use paths::UnitGridPath;
pub use phi::{evaluation_grid, phi_decomposition, sup_deviation, sweep_sups, HorizonSups, PhiDecomposition, Sweep};
pub use poisson::{build_poisson_from_brownian, PoissonEmbedding};
pub use wiener::{assemble_w, build_inverse_wiener, build_timechange_wiener, InverseWiener, TimeChangeWiener, WAssembler};
