//! The step BP: one counter-machine command applied to a counter spread
//! over the population as per-agent contributions.

use std::fmt;

use crate::analysis::{explore, ReachError};
use crate::machines::{cm_step, Cmd};
use crate::model::{materialize, Configuration, Protocol, ProtocolSpec};

/// An agent's contribution to the counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Contribution {
    Zero,
    Half,
    One,
    Two,
    Star,
}

impl Contribution {
    pub const ALL: [Contribution; 5] = [
        Contribution::Zero,
        Contribution::Half,
        Contribution::One,
        Contribution::Two,
        Contribution::Star,
    ];

    pub fn of_bit(b: bool) -> Contribution {
        if b {
            Contribution::One
        } else {
            Contribution::Zero
        }
    }

    /// `Some(b)` for the canonical contributions 0 and 1.
    pub fn bit(self) -> Option<bool> {
        match self {
            Contribution::Zero => Some(false),
            Contribution::One => Some(true),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Contribution::Zero => "0",
            Contribution::Half => "h",
            Contribution::One => "1",
            Contribution::Two => "2",
            Contribution::Star => "*",
        }
    }

    /// Twice the value; `*` stands for a 1 that is under test.
    fn doubled(self) -> u64 {
        match self {
            Contribution::Zero => 0,
            Contribution::Half => 1,
            Contribution::One | Contribution::Star => 2,
            Contribution::Two => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepGlobal {
    Cmd(Cmd),
    Done(bool),
    High,
}

impl StepGlobal {
    pub const ALL: [StepGlobal; 7] = [
        StepGlobal::Cmd(Cmd::Mul2),
        StepGlobal::Cmd(Cmd::Inc),
        StepGlobal::Cmd(Cmd::Divmod2),
        StepGlobal::Cmd(Cmd::IsZero),
        StepGlobal::Done(false),
        StepGlobal::Done(true),
        StepGlobal::High,
    ];

    pub fn done(self) -> Option<bool> {
        match self {
            StepGlobal::Done(b) => Some(b),
            _ => None,
        }
    }
}

impl fmt::Display for StepGlobal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepGlobal::Cmd(c) => write!(f, "{c}"),
            StepGlobal::Done(b) => write!(f, "done{}", u8::from(*b)),
            StepGlobal::High => f.write_str("high"),
        }
    }
}

/// A non-silent transition: the broadcaster's new local and global, and
/// the one local state that other agents change, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepMove {
    pub local: Contribution,
    pub global: StepGlobal,
    pub map: Option<(Contribution, Contribution)>,
}

impl StepMove {
    pub fn respond(&self, s: Contribution) -> Contribution {
        match self.map {
            Some((from, to)) if from == s => to,
            _ => s,
        }
    }

    /// True for the normalising transitions, which fire after the command.
    pub fn is_normalizing(from: StepGlobal) -> bool {
        !matches!(from, StepGlobal::Cmd(_))
    }
}

/// The transition table; `None` is silent.
pub fn step_delta(x: Contribution, g: StepGlobal) -> Option<StepMove> {
    use Contribution::*;
    let mv = |local, global, map| Some(StepMove { local, global, map });
    match (g, x) {
        (StepGlobal::Cmd(cmd), Zero | One) => {
            let b = x == One;
            match cmd {
                Cmd::Mul2 => mv(if b { Two } else { Zero }, StepGlobal::Done(false), Some((One, Two))),
                Cmd::Divmod2 => mv(if b { Half } else { Zero }, StepGlobal::Done(false), Some((One, Half))),
                Cmd::Inc => mv(x, StepGlobal::High, None),
                Cmd::IsZero if b => mv(One, StepGlobal::Done(true), None),
                Cmd::IsZero => mv(Zero, StepGlobal::Done(false), Some((One, Star))),
            }
        }
        (StepGlobal::High, Zero) => mv(One, StepGlobal::Done(false), None),
        (StepGlobal::Done(false), Two) => mv(One, StepGlobal::High, None),
        (StepGlobal::Done(false), Half) => mv(Zero, StepGlobal::Done(true), None),
        (StepGlobal::Done(true), Half) => mv(One, StepGlobal::Done(false), None),
        (StepGlobal::Done(false), Star) => mv(One, StepGlobal::Done(true), Some((Star, One))),
        _ => None,
    }
}

pub type StepState = (Contribution, StepGlobal);

/// The step BP on structured states.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepBp;

impl Protocol for StepBp {
    type State = StepState;

    fn successor(&self, q: &StepState) -> StepState {
        match step_delta(q.0, q.1) {
            Some(m) => (m.local, m.global),
            None => *q,
        }
    }

    fn respond(&self, q: &StepState, s: &StepState) -> StepState {
        match step_delta(q.0, q.1) {
            Some(m) => (m.respond(s.0), m.global),
            None => *s,
        }
    }

    fn is_silent(&self, q: &StepState) -> bool {
        step_delta(q.0, q.1).is_none()
    }

    fn label(&self, s: &StepState) -> String {
        format!("{}@{}", s.0.name(), s.1)
    }
}

impl StepBp {
    pub fn states() -> Vec<StepState> {
        StepGlobal::ALL
            .iter()
            .flat_map(|&g| Contribution::ALL.iter().map(move |&x| (x, g)))
            .collect()
    }

    /// `φ(j, x)`: `x` agents in `(1, j)`, the rest in `(0, j)`.
    pub fn phi(j: StepGlobal, x: u64, n: u64) -> Configuration<StepState> {
        assert!(x <= n);
        Configuration::from_counts([((Contribution::One, j), x), ((Contribution::Zero, j), n - x)])
    }

    /// `b + Σ contributions`, with `b = 1` under `high`. `*` counts as 1.
    pub fn counter_value(c: &Configuration<StepState>) -> Option<u64> {
        let mut twice = 0;
        let mut high = false;
        for (&(x, g), k) in c.iter() {
            twice += x.doubled() * k;
            high |= g == StepGlobal::High;
        }
        (twice % 2 == 0).then(|| twice / 2 + u64::from(high))
    }

    /// `Φ = 2·#{½, 2, *} + [high]`.
    pub fn potential(c: &Configuration<StepState>) -> u64 {
        let mut phi = 0;
        let mut high = false;
        for (&(x, g), k) in c.iter() {
            if x.bit().is_none() {
                phi += 2 * k;
            }
            high |= g == StepGlobal::High;
        }
        phi + u64::from(high)
    }

    /// The `(done_b, x)` for which `c = φ(done_b, x)`, if any.
    pub fn as_final(c: &Configuration<StepState>) -> Option<(bool, u64)> {
        let mut done = None;
        let mut ones = 0;
        for (&(x, g), k) in c.iter() {
            let b = g.done()?;
            if *done.get_or_insert(b) != b {
                return None;
            }
            if x.bit()? {
                ones += k;
            }
        }
        done.map(|b| (b, ones))
    }
}

/// One `(command, w)` pair of a conformance check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conformance {
    pub cmd: Cmd,
    pub w: u64,
    /// `(b, x)` of every reachable final configuration.
    pub finals: Vec<(bool, u64)>,
    /// Every reachable configuration can reach a final one.
    pub always_finishes: bool,
}

impl Conformance {
    pub fn holds(&self) -> bool {
        let (b, x) = cm_step(self.cmd, self.w);
        self.finals == [(b, x)] && self.always_finishes
    }
}

/// Exhaustive reachability from `φ(j, w)` for every command `j` and every
/// `w ≤ n` whose result stays within `n`.
pub fn step_conformance(n: u64, budget: usize) -> Result<Vec<Conformance>, ReachError> {
    let mut out = Vec::new();
    for cmd in Cmd::ALL {
        for w in 0..=n {
            if cm_step(cmd, w).1 > n {
                continue;
            }
            let g = explore(&StepBp, &StepBp::phi(StepGlobal::Cmd(cmd), w, n), budget)?;
            let is_final: Vec<bool> = g.configs.iter().map(|c| StepBp::as_final(c).is_some()).collect();
            let mut finals: Vec<(bool, u64)> = g.configs.iter().filter_map(StepBp::as_final).collect();
            finals.sort_unstable();
            let always_finishes = g.can_reach(|i| is_final[i]).into_iter().all(|b| b);
            out.push(Conformance {
                cmd,
                w,
                finals,
                always_finishes,
            });
        }
    }
    Ok(out)
}

/// The step BP tabulated, with labels `local@global` and `½` written `h`.
pub fn step_bp() -> ProtocolSpec {
    materialize(&StepBp, StepBp::states(), true).expect("closed state set")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_ten_transitions() {
        let spec = step_bp();
        assert_eq!(spec.num_states(), 35);
        let active = spec.states().filter(|&q| !spec.transition_is_silent(q)).count();
        // α1..α4 for both bits except α4/α5 split iszero; β1..β5
        assert_eq!(active, 2 * 4 + 5);
    }

    #[test]
    fn final_states_are_silent() {
        for q in StepBp::states() {
            if q.1.done().is_some() && q.0.bit().is_some() {
                assert!(StepBp.is_silent(&q), "{q:?}");
            }
        }
    }
}
