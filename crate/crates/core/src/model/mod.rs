//! The computation model: configurations, broadcast steps, the uniform
//! random scheduler and stable-consensus semantics.

mod config;
pub mod format;
mod protocol;
pub mod sim;
mod spec;

pub use config::Configuration;
pub use protocol::{Consensus, Protocol};
pub use sim::{
    apply_broadcast, enabled_nonsilent, init_config, is_consensus, run_execution, run_from,
    sample_step, seeded_rng, trial_rng, Execution, RunOptions, SimError, StopPolicy, Trace,
    TraceStep, RNG_NAME,
};
pub use spec::{
    close_states, materialize, split_label, tabulate, BroadcastTransition, GlobalBuilder, ProtocolBuilder, ProtocolSpec, SpecError,
    StateId,
};
