//! Synthetic coin: runs a nondeterministic protocol as a deterministic one.
//!
//! Agents pair up into types 0 and 1 (with `?`, `+`, `-` as the pairing
//! stages), so there are always equally many of each. A typed agent flips
//! the shared coin by announcing its type; the next broadcaster then uses
//! the transition function the coin selected. With `k > 2` functions the
//! coin is flipped `⌈log₂ k⌉` times to select a leaf of a binary tree, and
//! leaves beyond `k` reject (reset the coin without effect).

use std::fmt;

use thiserror::Error;

use super::nondet::{NondetProtocol, NondetSpec};
use crate::model::{materialize, Protocol, ProtocolSpec, SpecError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoinType {
    Untyped,
    Seeking,
    Candidate,
    Zero,
    One,
}

impl CoinType {
    pub const ALL: [CoinType; 5] = [
        CoinType::Untyped,
        CoinType::Seeking,
        CoinType::Candidate,
        CoinType::Zero,
        CoinType::One,
    ];

    fn bit(self) -> Option<u32> {
        match self {
            CoinType::Zero => Some(0),
            CoinType::One => Some(1),
            _ => None,
        }
    }

    fn symbol(self) -> char {
        match self {
            CoinType::Untyped => '?',
            CoinType::Seeking => '+',
            CoinType::Candidate => '-',
            CoinType::Zero => '0',
            CoinType::One => '1',
        }
    }
}

/// Coin state: `len` bits flipped so far (`len == 0` is `*`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoinBits {
    pub len: u8,
    pub bits: u32,
}

impl CoinBits {
    pub const IDLE: CoinBits = CoinBits { len: 0, bits: 0 };

    fn push(self, b: u32) -> CoinBits {
        CoinBits {
            len: self.len + 1,
            bits: (self.bits << 1) | b,
        }
    }
}

impl fmt::Display for CoinBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("*");
        }
        for i in (0..self.len).rev() {
            write!(f, "{}", (self.bits >> i) & 1)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoinState<S> {
    pub q: S,
    pub t: CoinType,
    pub coin: CoinBits,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoinError {
    #[error("need at least two transition functions, got {0}")]
    TooFewBranches(usize),
    #[error("too many transition functions ({0})")]
    TooManyBranches(usize),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// What the broadcast of a coin state does.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoinMove {
    Seek,
    Find,
    Flip(u32),
    Exec(usize),
    Reject,
    Silent,
}

/// The coin construction over `N`, implementing [`Protocol`] lazily.
#[derive(Clone, Debug)]
pub struct Coin<N> {
    pub inner: N,
    depth: u8,
}

impl<N: NondetProtocol> Coin<N> {
    pub fn new(inner: N) -> Result<Self, CoinError> {
        let k = inner.branches();
        if k < 2 {
            return Err(CoinError::TooFewBranches(k));
        }
        if k > 1 << 16 {
            return Err(CoinError::TooManyBranches(k));
        }
        let depth = (usize::BITS - (k - 1).leading_zeros()) as u8;
        Ok(Coin { inner, depth })
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    /// Every coin value that can occur.
    pub fn coin_values(&self) -> Vec<CoinBits> {
        let mut out = vec![CoinBits::IDLE];
        for len in 1..=self.depth {
            for bits in 0..(1u32 << len) {
                out.push(CoinBits { len, bits });
            }
        }
        out
    }

    pub fn classify(&self, q: &CoinState<N::State>) -> CoinMove {
        let c = q.coin;
        if c.len == self.depth {
            let leaf = c.bits as usize;
            return if leaf < self.inner.branches() {
                CoinMove::Exec(leaf)
            } else {
                CoinMove::Reject
            };
        }
        if c.len == 0 {
            let inner = &self.inner;
            let quiet = (0..inner.branches()).all(|i| inner.is_silent(i, &q.q));
            if inner.deterministic(&q.q) && !quiet {
                return CoinMove::Exec(0);
            }
            if quiet && q.t.bit().is_some() {
                return CoinMove::Silent;
            }
        }
        match (q.t.bit(), c.len) {
            (Some(b), _) => CoinMove::Flip(b),
            (None, 0) => match q.t {
                CoinType::Untyped => CoinMove::Seek,
                CoinType::Candidate => CoinMove::Find,
                _ => CoinMove::Silent,
            },
            (None, _) => CoinMove::Silent,
        }
    }

    pub fn lift(&self, q: N::State) -> CoinState<N::State> {
        CoinState {
            q,
            t: CoinType::Untyped,
            coin: CoinBits::IDLE,
        }
    }
}

impl<N: NondetProtocol> Protocol for Coin<N> {
    type State = CoinState<N::State>;

    fn successor(&self, q: &Self::State) -> Self::State {
        let mut r = q.clone();
        match self.classify(q) {
            CoinMove::Seek => r.t = CoinType::Seeking,
            CoinMove::Find => r.t = CoinType::One,
            CoinMove::Flip(b) => r.coin = q.coin.push(b),
            CoinMove::Exec(i) => {
                r.q = self.inner.successor(i, &q.q);
                r.coin = CoinBits::IDLE;
            }
            CoinMove::Reject => r.coin = CoinBits::IDLE,
            CoinMove::Silent => {}
        }
        r
    }

    fn respond(&self, q: &Self::State, s: &Self::State) -> Self::State {
        if s.coin != q.coin {
            return s.clone();
        }
        let mut r = s.clone();
        match self.classify(q) {
            CoinMove::Seek => {
                if s.t == CoinType::Untyped {
                    r.t = CoinType::Candidate;
                }
            }
            CoinMove::Find => match s.t {
                CoinType::Candidate => r.t = CoinType::Untyped,
                CoinType::Seeking => r.t = CoinType::Zero,
                _ => {}
            },
            CoinMove::Flip(b) => r.coin = s.coin.push(b),
            CoinMove::Exec(i) => {
                r.q = self.inner.respond(i, &q.q, &s.q);
                r.coin = CoinBits::IDLE;
            }
            CoinMove::Reject => r.coin = CoinBits::IDLE,
            CoinMove::Silent => {}
        }
        r
    }

    fn is_silent(&self, q: &Self::State) -> bool {
        self.classify(q) == CoinMove::Silent
    }

    fn is_accepting(&self, s: &Self::State) -> bool {
        self.inner.is_accepting(&s.q)
    }

    fn input_state(&self, symbol: &str) -> Option<Self::State> {
        self.inner.input_state(symbol).map(|q| self.lift(q))
    }

    fn input_alphabet(&self) -> Vec<String> {
        self.inner.input_alphabet()
    }

    fn label(&self, s: &Self::State) -> String {
        format!("{}/{}@{}", self.inner.label(&s.q), s.t.symbol(), s.coin)
    }
}

/// Tabulated coin construction for an explicit nondeterministic protocol:
/// states `Q × T × coin`, with the coin as global component.
pub fn with_coin(spec: &NondetSpec) -> Result<ProtocolSpec, CoinError> {
    let coin = Coin::new(spec)?;
    let mut states = Vec::new();
    for c in coin.coin_values() {
        for q in spec.base.states() {
            for t in CoinType::ALL {
                states.push(CoinState { q, t, coin: c });
            }
        }
    }
    Ok(materialize(&coin, states, true)?)
}
