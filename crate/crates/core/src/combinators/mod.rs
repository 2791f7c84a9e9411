//! Protocol-to-protocol constructions: synchronous parallel composition,
//! the synthetic coin for nondeterministic broadcasts, and rendezvous
//! transitions simulated by broadcasts.

mod coin;
mod compose;
mod nondet;
mod rendezvous;

pub use coin::{with_coin, Coin, CoinBits, CoinError, CoinMove, CoinState, CoinType};
pub use compose::{complement, extend_alphabet, parallel_compose, project, ComposeError};
pub use nondet::{apply_nondet, nondet_step, Branch, NondetError, NondetProtocol, NondetSpec};
pub use rendezvous::{
    pp_step, pp_successors, with_rendezvous, RendezvousError, RendezvousLayout, RendezvousSpec,
};
