//! Broadcast consensus protocols.
//!
//! A population of anonymous finite-state agents computes by broadcasts: a
//! uniformly random agent sends a signal, every other agent reacts through a
//! response function, and the sender moves to a successor state. This crate
//! provides the model and its random scheduler ([`model`]), protocol
//! combinators ([`combinators`]), compilers from Presburger formulas
//! ([`presburger`]), machine models and reductions ([`machines`]), the
//! counter-machine simulation protocols ([`cmsim`]) and verification and
//! measurement tooling ([`analysis`]).

pub mod analysis;
pub mod cmsim;
pub mod combinators;
pub mod machines;
pub mod model;
pub mod par;
pub mod presburger;

pub use model::{
    Configuration, Consensus, Protocol, ProtocolBuilder, ProtocolSpec, StateId,
};
