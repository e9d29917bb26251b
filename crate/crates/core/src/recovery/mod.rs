//! The preconditioned factored solver, its spectral initialization, a plain
//! gradient baseline, and diagnostics.

mod config;
mod distance;
mod solver;

pub use config::{GammaSchedule, Incoherence, RecoveryConfig};
pub use distance::{approx_dist, ground_truth_factors};
pub use solver::{
    hsnld_step, incoherence_level, plain_gd_step, project_incoherence, recovery_error,
    run_hsnld, run_plain_gd, spectral_init, Factors, Initialization, IterateState, Problem,
    RecoveryReport, Termination, TraceEntry,
};
