//! Epidemic clocks: a leader waits to be infected by an epidemic it
//! started, and chains of such clocks run in sequence.

use rand::Rng;

use crate::model::{materialize, Configuration, Execution, Protocol, ProtocolSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClockLocal {
    Zero,
    One,
    C1,
    C2,
    C3,
    C1p,
    C2p,
}

impl ClockLocal {
    pub const ALL: [ClockLocal; 7] = [
        ClockLocal::Zero,
        ClockLocal::One,
        ClockLocal::C1,
        ClockLocal::C2,
        ClockLocal::C3,
        ClockLocal::C1p,
        ClockLocal::C2p,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClockLocal::Zero => "0",
            ClockLocal::One => "1",
            ClockLocal::C1 => "c1",
            ClockLocal::C2 => "c2",
            ClockLocal::C3 => "c3",
            ClockLocal::C1p => "c1+",
            ClockLocal::C2p => "c2+",
        }
    }
}

pub type ClockMap = &'static [(ClockLocal, ClockLocal)];

/// `δ(q) = (r, f)` with `f` given by the states it moves.
pub fn clock_delta(q: ClockLocal) -> Option<(ClockLocal, ClockMap)> {
    use ClockLocal::*;
    match q {
        Zero => Some((C1p, &[(Zero, C2p)])),
        C2p => Some((C3, &[(C2p, C2), (C1p, C1)])),
        C3 => Some((C3, &[(C2, C2p), (C1, C1p)])),
        C1p => Some((One, &[(C2p, One), (C3, One)])),
        _ => None,
    }
}

pub fn apply_map(map: ClockMap, s: ClockLocal) -> ClockLocal {
    map.iter().find(|(from, _)| *from == s).map_or(s, |&(_, to)| to)
}

/// A single epidemic clock on its own.
#[derive(Clone, Copy, Debug, Default)]
pub struct Clock;

impl Protocol for Clock {
    type State = ClockLocal;

    fn successor(&self, q: &ClockLocal) -> ClockLocal {
        clock_delta(*q).map_or(*q, |(r, _)| r)
    }

    fn respond(&self, q: &ClockLocal, s: &ClockLocal) -> ClockLocal {
        clock_delta(*q).map_or(*s, |(_, f)| apply_map(f, *s))
    }

    fn is_silent(&self, q: &ClockLocal) -> bool {
        clock_delta(*q).is_none()
    }

    fn label(&self, s: &ClockLocal) -> String {
        s.name().to_string()
    }
}

pub fn clock_bp() -> ProtocolSpec {
    materialize(&Clock, ClockLocal::ALL, false).expect("closed state set")
}

/// `l` clocks in sequence, with the running clock's index as global.
#[derive(Clone, Copy, Debug)]
pub struct ChainedClock {
    phases: u32,
}

/// `28k²`.
pub fn chain_length(k: u32) -> u32 {
    28 * k * k
}

impl ChainedClock {
    pub fn new(k: u32) -> Self {
        Self::with_phases(chain_length(k))
    }

    pub fn with_phases(phases: u32) -> Self {
        assert!(phases >= 1);
        ChainedClock { phases }
    }

    pub fn phases(&self) -> u32 {
        self.phases
    }

    pub fn initial(&self) -> (ClockLocal, u32) {
        (ClockLocal::Zero, 1)
    }

    pub fn is_final(&self, q: &(ClockLocal, u32)) -> bool {
        *q == (ClockLocal::One, self.phases)
    }

    /// Broadcaster's new state and the response on clock locals, or `None`
    /// if silent.
    pub fn fire(&self, q: ClockLocal, phase: u32) -> Option<(ClockLocal, u32, ClockMap)> {
        if let Some((r, f)) = clock_delta(q) {
            return Some((r, phase, f));
        }
        if q == ClockLocal::One && phase < self.phases {
            return Some((ClockLocal::Zero, phase + 1, &[(ClockLocal::One, ClockLocal::Zero)]));
        }
        None
    }

    pub fn states(&self) -> Vec<(ClockLocal, u32)> {
        (1..=self.phases)
            .flat_map(|i| ClockLocal::ALL.iter().map(move |&q| (q, i)))
            .collect()
    }
}

impl Protocol for ChainedClock {
    type State = (ClockLocal, u32);

    fn successor(&self, q: &Self::State) -> Self::State {
        self.fire(q.0, q.1).map_or(*q, |(r, i, _)| (r, i))
    }

    fn respond(&self, q: &Self::State, s: &Self::State) -> Self::State {
        self.fire(q.0, q.1).map_or(*s, |(_, i, f)| (apply_map(f, s.0), i))
    }

    fn is_silent(&self, q: &Self::State) -> bool {
        self.fire(q.0, q.1).is_none()
    }

    fn label(&self, s: &Self::State) -> String {
        format!("{}@{}", s.0.name(), s.1)
    }
}

pub fn chained_clock_bp(k: u32) -> ProtocolSpec {
    let c = ChainedClock::new(k);
    materialize(&c, c.states(), true).expect("closed state set")
}

/// One clock run from `⟨0, …, 0⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClockRun {
    /// Steps until every agent is final; `None` if the limit was hit.
    pub time: Option<u64>,
    /// Some agent was final while another was not.
    pub early_final: bool,
}

/// Runs a clock protocol from `n` agents in `zero` until all are in
/// `one`, checking after every step that `one` is occupied by everyone
/// or no one.
pub fn run_clock<P: Protocol, R: Rng + ?Sized>(
    p: &P,
    zero: P::State,
    one: &P::State,
    n: u64,
    rng: &mut R,
    max_steps: u64,
) -> ClockRun {
    let mut exec = Execution::new(p, Configuration::uniform(zero, n));
    let mut early_final = false;
    loop {
        let k = exec.config().get(one);
        if k == n {
            return ClockRun {
                time: Some(exec.steps()),
                early_final,
            };
        }
        early_final |= k > 0;
        if exec.next_nonsilent(rng, max_steps).is_none() {
            return ClockRun {
                time: None,
                early_final,
            };
        }
    }
}
