use std::fmt::Debug;
use std::hash::Hash;

use rand::Rng;
use thiserror::Error;

use crate::model::format::Document;
use crate::model::{BroadcastTransition, Configuration, Protocol, ProtocolSpec, StateId};

/// A broadcast protocol with `branches()` transition functions per state;
/// a broadcasting agent uses one of them, chosen uniformly at random.
pub trait NondetProtocol: Sync {
    type State: Clone + Ord + Hash + Debug + Send + Sync;

    fn branches(&self) -> usize;
    fn successor(&self, branch: usize, q: &Self::State) -> Self::State;
    fn respond(&self, branch: usize, q: &Self::State, s: &Self::State) -> Self::State;
    fn is_silent(&self, branch: usize, q: &Self::State) -> bool;

    /// True if every branch behaves the same at `q`.
    fn deterministic(&self, _q: &Self::State) -> bool {
        false
    }

    fn is_accepting(&self, _s: &Self::State) -> bool {
        false
    }

    fn input_state(&self, _symbol: &str) -> Option<Self::State> {
        None
    }

    fn input_alphabet(&self) -> Vec<String> {
        Vec::new()
    }

    fn label(&self, s: &Self::State) -> String {
        format!("{s:?}")
    }
}

impl<N: NondetProtocol + ?Sized> NondetProtocol for &N {
    type State = N::State;
    fn branches(&self) -> usize {
        (**self).branches()
    }
    fn successor(&self, b: usize, q: &Self::State) -> Self::State {
        (**self).successor(b, q)
    }
    fn respond(&self, b: usize, q: &Self::State, s: &Self::State) -> Self::State {
        (**self).respond(b, q, s)
    }
    fn is_silent(&self, b: usize, q: &Self::State) -> bool {
        (**self).is_silent(b, q)
    }
    fn deterministic(&self, q: &Self::State) -> bool {
        (**self).deterministic(q)
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

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NondetError {
    #[error("transition table {index} has {got} entries, expected {expected}")]
    NotTotal {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("state {0} out of range")]
    BadState(u32),
    #[error("file has no [transitions2] section")]
    MissingSecond,
}

/// Explicit protocol whose base transitions are `δ0`, with further total
/// transition functions `δ1, δ2, …` alongside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NondetSpec {
    pub base: ProtocolSpec,
    extra: Vec<Vec<BroadcastTransition>>,
}

impl NondetSpec {
    pub fn new(base: ProtocolSpec, extra: Vec<Vec<BroadcastTransition>>) -> Result<Self, NondetError> {
        let n = base.num_states();
        for (i, d) in extra.iter().enumerate() {
            if d.len() != n {
                return Err(NondetError::NotTotal {
                    index: i + 1,
                    got: d.len(),
                    expected: n,
                });
            }
            for t in d {
                for id in std::iter::once(t.successor).chain(t.response.iter().flat_map(|&(a, b)| [a, b])) {
                    if id.index() >= n {
                        return Err(NondetError::BadState(id.0));
                    }
                }
            }
        }
        Ok(NondetSpec { base, extra })
    }

    pub fn from_document(doc: &Document) -> Result<Self, NondetError> {
        let d2 = doc.transitions2.clone().ok_or(NondetError::MissingSecond)?;
        Self::new(doc.spec.clone(), vec![d2])
    }

    pub fn to_document(&self) -> Document {
        Document {
            spec: self.base.clone(),
            transitions2: self.extra.first().cloned(),
            rendezvous: Vec::new(),
        }
    }

    pub fn transition(&self, branch: usize, q: StateId) -> &BroadcastTransition {
        if branch == 0 {
            self.base.transition(q)
        } else {
            &self.extra[branch - 1][q.index()]
        }
    }
}

impl NondetProtocol for NondetSpec {
    type State = StateId;

    fn branches(&self) -> usize {
        1 + self.extra.len()
    }

    fn successor(&self, branch: usize, q: &StateId) -> StateId {
        self.transition(branch, *q).successor
    }

    fn respond(&self, branch: usize, q: &StateId, s: &StateId) -> StateId {
        self.transition(branch, *q).respond(*s)
    }

    fn is_silent(&self, branch: usize, q: &StateId) -> bool {
        let t = self.transition(branch, *q);
        t.successor == *q && t.response.is_empty()
    }

    fn is_accepting(&self, s: &StateId) -> bool {
        self.base.accepts(*s)
    }

    fn input_state(&self, symbol: &str) -> Option<StateId> {
        self.base.input_state(symbol)
    }

    fn input_alphabet(&self) -> Vec<String> {
        self.base.alphabet().to_vec()
    }

    fn label(&self, s: &StateId) -> String {
        self.base.label_of(*s).to_string()
    }
}

/// One branch of a nondeterministic protocol viewed as a deterministic one.
#[derive(Clone, Copy, Debug)]
pub struct Branch<N> {
    pub inner: N,
    pub branch: usize,
}

impl<N: NondetProtocol> Protocol for Branch<N> {
    type State = N::State;
    fn successor(&self, q: &N::State) -> N::State {
        self.inner.successor(self.branch, q)
    }
    fn respond(&self, q: &N::State, s: &N::State) -> N::State {
        self.inner.respond(self.branch, q, s)
    }
    fn is_silent(&self, q: &N::State) -> bool {
        self.inner.is_silent(self.branch, q)
    }
    fn is_accepting(&self, s: &N::State) -> bool {
        self.inner.is_accepting(s)
    }
    fn input_state(&self, symbol: &str) -> Option<N::State> {
        self.inner.input_state(symbol)
    }
    fn input_alphabet(&self) -> Vec<String> {
        self.inner.input_alphabet()
    }
    fn label(&self, s: &N::State) -> String {
        self.inner.label(s)
    }
}

/// Applies branch `branch` of `q`'s broadcast; `q` must be present.
pub fn apply_nondet<N: NondetProtocol>(
    p: &N,
    config: &Configuration<N::State>,
    branch: usize,
    q: &N::State,
) -> Configuration<N::State> {
    debug_assert!(config.get(q) > 0);
    if p.is_silent(branch, q) {
        return config.clone();
    }
    let mut rest = config.clone();
    rest.remove(q, 1);
    let mut next = rest.map(|s| p.respond(branch, q, s));
    next.add(p.successor(branch, q), 1);
    next
}

/// Reference semantics: a uniformly random agent broadcasts with a
/// uniformly random branch. Returns the broadcaster and the branch.
pub fn nondet_step<N: NondetProtocol, R: Rng + ?Sized>(
    p: &N,
    config: &mut Configuration<N::State>,
    rng: &mut R,
) -> (N::State, usize) {
    let q = config.nth_agent(rng.random_range(0..config.size())).clone();
    let branch = rng.random_range(0..p.branches());
    *config = apply_nondet(p, config, branch, &q);
    (q, branch)
}
