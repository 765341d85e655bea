//! Korevaar-Schoen functional estimators and the experiment harnesses built
//! on them.

pub mod function;
pub mod harness;
pub mod ne;
pub mod phi;

pub use function::SampledFunction;
pub use harness::{
    extend_hat, hat_u, hoelder_check, log_slope, min_convergence_level, thm_bridge_check,
    uniform_convergence_gap, BridgeReport,
};
pub use ne::{
    ne_ratio, random_values, run_ne_suite, standard_suite, NeReport, NeRow, SuiteFunction,
    SuiteOptions, DEFAULT_TAIL,
};
pub use phi::{
    besov_profile, check_grid, default_grid, log_grid, phi_estimate, resolution_level, Estimator,
    KSProfile, PhiEstimate, PhiOptions, ProfileEntry,
};
