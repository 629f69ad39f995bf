//! Equilibria, synchronization detection and Monte-Carlo experiments.

pub mod equilibria;
pub mod experiments;
pub mod sync;

pub use equilibria::{
    enumerate_candidate_equilibria, in_equilibrium_set, instability_direction, quadratic_form,
    verify_fixed_point_drc, verify_fixed_point_krw, DrcCheck, EquilibriumReport, GraphState,
    Violation, FIXED_POINT_TOL,
};
pub use experiments::{
    averaging_experiment, drc_trial, escape_experiment, krw_trial, mean_and_std_error, run_trials,
    sync_probability_experiment, AveragingRow, AveragingTable, EscapeReport, EscapeTrial,
    Experiment, SyncReport, SyncTrial, Trial,
};
pub use sync::{
    detect_synchronization, twisted_state, EscapeDetector, SyncDetector, Theta0Spec, DEFAULT_DWELL,
    DEFAULT_SYNC_TOL,
};
