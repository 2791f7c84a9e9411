//! Broadcast protocols that simulate counter machines: the step BP, epidemic
//! clocks, the clock-hardened step and the full compiler with restarts.

mod clock;
mod compile;
mod hardened;
mod step;

pub use clock::{
    chain_length, chained_clock_bp, clock_bp, clock_delta, run_clock, ChainedClock, Clock, ClockLocal, ClockRun,
};
pub use compile::{
    cm_to_bcp, compile_with, compiled_input, halted, inject_failure, run_compiled, CmAgent, CmGlobal, CmProtocol,
    CompileError, CompiledCm, CompiledRun, SimLocal, Stage,
};
pub use hardened::{hardened_step_bp, run_hardened, HardGlobal, HardLocal, HardMove, HardOutcome, Hardened};
pub use step::{step_bp, step_conformance, step_delta, Conformance, Contribution, StepBp, StepGlobal, StepMove, StepState};
