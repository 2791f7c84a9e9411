//! Verification and measurement: exact stability and correctness checks
//! by reachability at fixed population size, runtime statistics, the
//! `n ln n` fit and geometric tail bounds.

mod reach;
mod stats;
mod tails;

pub use reach::{
    decide_stable, explore, model_check, replay, successors, Counterexample, ReachError,
    ReachGraph, Verdict, VerdictStatus, Violation, DEFAULT_BUDGET,
};
pub use stats::{
    fit_nlogn, harmonic, measure_time, stats_csv, Estimator, FitError, NlognFit, RunStats,
    TrialRecord, POOR_FIT_RESIDUAL,
};
pub use tails::{
    coupon_probs, geom_tail_lower, geom_tail_upper, harmonic_tail_threshold, sample_geom_sum,
    solve_lambda, TailError,
};
