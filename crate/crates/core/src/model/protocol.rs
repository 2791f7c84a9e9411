use std::fmt::Debug;
use std::hash::Hash;

/// A broadcast protocol over some state type.
///
/// `δ(q) = (successor(q), respond(q, ·))`. Implementations must make the
/// response total; returning `s` unchanged is the identity. Protocols that
/// compute a predicate additionally provide an input mapping and an
/// accepting set; plain building-block protocols keep the defaults.
///
/// Explicit tables implement this through [`ProtocolSpec`](super::ProtocolSpec);
/// the larger compiled constructions implement it directly on structured
/// states so their state space never has to be enumerated.
pub trait Protocol: Sync {
    type State: Clone + Ord + Hash + Debug + Send + Sync;

    /// The state `r` the broadcasting agent moves to.
    fn successor(&self, q: &Self::State) -> Self::State;

    /// The response `f(s)` of an agent in `s` receiving the broadcast of `q`.
    fn respond(&self, q: &Self::State, s: &Self::State) -> Self::State;

    /// True if `δ(q)` is `q ↦ q` with the identity response.
    fn is_silent(&self, q: &Self::State) -> bool;

    fn is_accepting(&self, _s: &Self::State) -> bool {
        false
    }

    fn input_state(&self, _symbol: &str) -> Option<Self::State> {
        None
    }

    fn input_alphabet(&self) -> Vec<String> {
        Vec::new()
    }

    /// Human-readable label, `local@global` for factored states.
    fn label(&self, s: &Self::State) -> String {
        format!("{s:?}")
    }
}

/// Output value of a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Consensus {
    Zero,
    One,
    Mixed,
}

impl Consensus {
    pub fn of_bool(b: bool) -> Self {
        if b {
            Consensus::One
        } else {
            Consensus::Zero
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Consensus::Zero => Some(false),
            Consensus::One => Some(true),
            Consensus::Mixed => None,
        }
    }
}

impl std::fmt::Display for Consensus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Consensus::Zero => "0",
            Consensus::One => "1",
            Consensus::Mixed => "mixed",
        })
    }
}

impl<P: Protocol + ?Sized> Protocol for &P {
    type State = P::State;
    fn successor(&self, q: &Self::State) -> Self::State {
        (**self).successor(q)
    }
    fn respond(&self, q: &Self::State, s: &Self::State) -> Self::State {
        (**self).respond(q, s)
    }
    fn is_silent(&self, q: &Self::State) -> bool {
        (**self).is_silent(q)
    }
    fn is_accepting(&self, s: &Self::State) -> bool {
        (**self).is_accepting(s)
    }
    fn input_state(&self, symbol: &str) -> Option<Self::State> {
        (**self).input_state(symbol)
    }
    fn input_alphabet(&self) -> Vec<String> {
        (**self).input_alphabet()
    }
    fn label(&self, s: &Self::State) -> String {
        (**self).label(s)
    }
}
