//! Protocols for Presburger predicates: majority, linear inequalities,
//! linear congruences, and Boolean combinations of those by parallel
//! composition.

mod compile;
mod formula;
mod protocols;

pub use compile::{compile_formula, CompileError};
pub use formula::{eval_formula, parse_formula, Cmp, Formula, FormulaParseError, Linear, NormalAtom, Term};
pub use protocols::{
    inequality_protocol, majority_protocol, modulo_protocol, LinearCongruence, LinearInequality,
    PresburgerError,
};
