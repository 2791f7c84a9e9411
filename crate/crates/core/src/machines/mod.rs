//! Machine models and the reductions from Turing machines to counter
//! machines.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub mod cm;
pub mod passes;
pub mod stack;
pub mod tm;

pub use cm::{
    cm_step, parse_cm, power_of_two_cm, print_cm, run_cm, step_config, CmConfig, CmError, CmOp,
    CmRun, Cmd, CounterMachine, CounterProgram,
};
pub use passes::{compile_tm_to_cm, height_bound, CompiledTm, Split, StackToCm, TmToStack, UnaryToBinary};
pub use stack::{
    load_input, parse_stack_machine, print_stack_machine, run_stack_machine, StackMachine, StackOp, StackProgram,
    StackRun, Stacks,
};
pub use tm::{
    binary_tape, lazy_parity_rtm, parity_rtm, parse_rtm, print_rtm, run_tm, run_two_tape, unary_tape, Move, Rtm,
    Tape, TmError, TmRun, TuringProgram, TwoTapeProgram,
};

/// State names in order of first mention, for the text parsers.
struct Names {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Names {
    fn new(fixed: &[&str]) -> Names {
        Names {
            names: fixed.iter().map(|s| s.to_string()).collect(),
            index: fixed.iter().enumerate().map(|(i, s)| (s.to_string(), i)).collect(),
        }
    }

    fn id(&mut self, s: &str) -> usize {
        if let Some(&q) = self.index.get(s) {
            return q;
        }
        self.names.push(s.to_string());
        self.index.insert(s.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// How a machine run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Accept,
    Reject,
    Timeout,
}

impl Outcome {
    pub fn of_bool(b: bool) -> Outcome {
        if b {
            Outcome::Accept
        } else {
            Outcome::Reject
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Outcome::Accept => Some(true),
            Outcome::Reject => Some(false),
            Outcome::Timeout => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Accept => "accept",
            Outcome::Reject => "reject",
            Outcome::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct MachineParseError {
    pub line: usize,
    pub message: String,
}
