//! Multi-level emulators behind a common fit/predict interface.

mod bayhem;
mod hk;
mod ko;
mod surface;

pub use bayhem::{
    conditional_log_marginal_likelihood, fit_bayhem, BayHEmModel, Objective, ThetaMode,
};
pub use hk::{fit_hk, hk_with_hyperparams, HKModel, HkLevel};
pub use ko::{fit_ko, ko_with_hyperparams, Discrepancy, KOModel, RhoMode};
pub use surface::{condition_level, ConditionedSurface, GaussianSurface, PriorSurface};
