//! Multi-fidelity Gaussian process emulation.
//!
//! The crate fits emulators to hierarchies of computer-model outputs
//! where level 1 is the cheapest code and level L the most complex:
//!
//! - a hierarchical Bayesian emulator in which the posterior of each
//!   level becomes the prior of the next ([`multilevel::fit_bayhem`]),
//! - autoregressive co-kriging with independent discrepancy processes
//!   ([`multilevel::fit_ko`]),
//! - hierarchical kriging with a scaled low-fidelity trend
//!   ([`multilevel::fit_hk`]),
//! - a plain single-level GP baseline ([`gp::fit_gp`]).
//!
//! [`mod@bench`] carries the analytic test functions, Latin hypercube
//! designs and the replicated RMSE harness; [`model_io`] persists
//! fitted models to a versioned JSON document.

pub mod bench;
pub mod design;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod model_io;
pub mod multilevel;
pub mod optim;

pub use design::{DesignMatrix, LevelData, MultiLevelData};
pub use error::{Error, Result};
pub use gp::{fit_gp, log_marginal_likelihood, FittedGP, Prediction};
pub use kernels::{eval_cov, eval_mean, Hyperparams, KernelSpec, MeanSpec};
pub use optim::OptimizerConfig;

/// Crate version reported in file metadata blocks.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
