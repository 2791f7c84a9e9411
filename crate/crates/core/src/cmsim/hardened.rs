//! The step BP run alongside a chained clock. When the clock runs out the
//! result is published as a return global, or stragglers fail to `⊥`.

use std::fmt;

use rand::Rng;

use super::clock::{apply_map, ChainedClock, ClockLocal};
use super::step::{step_delta, Contribution, StepGlobal};
use crate::model::{Configuration, Execution, Protocol};

/// Step component (`None` is `⊥`) and clock component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HardLocal {
    pub step: Option<Contribution>,
    pub clock: ClockLocal,
}

impl HardLocal {
    pub const FAILED: HardLocal = HardLocal {
        step: None,
        clock: ClockLocal::Zero,
    };

    /// The plain 0 or 1 of the step BP, clock idle.
    pub fn bit(b: bool) -> HardLocal {
        HardLocal {
            step: Some(Contribution::of_bit(b)),
            clock: ClockLocal::Zero,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.step.is_none()
    }

    /// `Some(b)` for the identified states `(b, 0)`.
    pub fn as_bit(&self) -> Option<bool> {
        if self.clock != ClockLocal::Zero {
            return None;
        }
        self.step?.bit()
    }
}

impl fmt::Display for HardLocal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let step = self.step.map_or("bot", |x| x.name());
        if self.clock == ClockLocal::Zero {
            f.write_str(step)
        } else {
            write!(f, "{step}:{}", self.clock.name())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HardGlobal {
    Run { step: StepGlobal, phase: u32 },
    Ret(bool),
}

impl HardGlobal {
    pub fn start(step: StepGlobal) -> HardGlobal {
        HardGlobal::Run { step, phase: 1 }
    }
}

impl fmt::Display for HardGlobal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HardGlobal::Run { step, phase } => write!(f, "{step}:{phase}"),
            HardGlobal::Ret(b) => write!(f, "ret{}", u8::from(*b)),
        }
    }
}

/// What a broadcast does to the other agents' locals.
#[derive(Clone, Copy, Debug)]
enum HardResponse {
    Product {
        step: Option<(Contribution, Contribution)>,
        clock: &'static [(ClockLocal, ClockLocal)],
    },
    Publish,
}

#[derive(Clone, Copy, Debug)]
pub struct HardMove {
    pub local: HardLocal,
    pub global: HardGlobal,
    response: HardResponse,
}

impl HardMove {
    pub fn respond(&self, s: HardLocal) -> HardLocal {
        match self.response {
            HardResponse::Product { step, clock } => HardLocal {
                step: match (s.step, step) {
                    (Some(x), Some((from, to))) if x == from => Some(to),
                    (x, _) => x,
                },
                clock: apply_map(clock, s.clock),
            },
            HardResponse::Publish => publish(s),
        }
    }

    pub fn is_publish(&self) -> bool {
        matches!(self.response, HardResponse::Publish)
    }
}

fn publish(s: HardLocal) -> HardLocal {
    match s.step.and_then(Contribution::bit) {
        Some(b) => HardLocal::bit(b),
        None => HardLocal::FAILED,
    }
}

/// Lazy product of the step BP with a chained clock.
#[derive(Clone, Copy, Debug)]
pub struct Hardened {
    pub clock: ChainedClock,
}

/// The hardened step BP with a chain of `28k²` clocks.
pub fn hardened_step_bp(k: u32) -> Hardened {
    Hardened {
        clock: ChainedClock::new(k),
    }
}

impl Default for Hardened {
    fn default() -> Self {
        hardened_step_bp(2)
    }
}

impl Hardened {
    pub fn with_phases(phases: u32) -> Self {
        Hardened {
            clock: ChainedClock::with_phases(phases),
        }
    }

    pub fn fire(&self, q: HardLocal, g: HardGlobal) -> Option<HardMove> {
        let HardGlobal::Run { step: j, phase } = g else {
            return None;
        };
        let x = q.step?;
        if let (ClockLocal::One, Some(b)) = (q.clock, j.done()) {
            if phase == self.clock.phases() {
                return Some(HardMove {
                    local: publish(q),
                    global: HardGlobal::Ret(b),
                    response: HardResponse::Publish,
                });
            }
        }
        let s = step_delta(x, j);
        let c = self.clock.fire(q.clock, phase);
        if s.is_none() && c.is_none() {
            return None;
        }
        let (x2, j2, smap) = s.map_or((x, j, None), |m| (m.local, m.global, m.map));
        let (c2, phase2, cmap) = c.unwrap_or((q.clock, phase, &[]));
        Some(HardMove {
            local: HardLocal {
                step: Some(x2),
                clock: c2,
            },
            global: HardGlobal::Run {
                step: j2,
                phase: phase2,
            },
            response: HardResponse::Product {
                step: smap,
                clock: cmap,
            },
        })
    }

    /// `φ(j, x)` at population `n`.
    pub fn phi(j: StepGlobal, x: u64, n: u64) -> Configuration<(HardLocal, HardGlobal)> {
        let g = HardGlobal::start(j);
        Configuration::from_counts([((HardLocal::bit(true), g), x), ((HardLocal::bit(false), g), n - x)])
    }

    /// The `(b, x)` of a final configuration `φ(done_b, x)`.
    pub fn as_final(c: &Configuration<(HardLocal, HardGlobal)>) -> Option<(bool, u64)> {
        let mut ret = None;
        let mut ones = 0;
        for (&(q, g), k) in c.iter() {
            let HardGlobal::Ret(b) = g else { return None };
            ret = Some(b);
            if q.as_bit()? {
                ones += k;
            }
        }
        ret.map(|b| (b, ones))
    }

    pub fn is_failing(c: &Configuration<(HardLocal, HardGlobal)>) -> bool {
        c.support().any(|(q, _)| q.is_failed())
    }
}

impl Protocol for Hardened {
    type State = (HardLocal, HardGlobal);

    fn successor(&self, q: &Self::State) -> Self::State {
        self.fire(q.0, q.1).map_or(*q, |m| (m.local, m.global))
    }

    fn respond(&self, q: &Self::State, s: &Self::State) -> Self::State {
        self.fire(q.0, q.1).map_or(*s, |m| (m.respond(s.0), m.global))
    }

    fn is_silent(&self, q: &Self::State) -> bool {
        self.fire(q.0, q.1).is_none()
    }

    fn label(&self, s: &Self::State) -> String {
        format!("{}@{}", s.0, s.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HardOutcome {
    /// Reached `φ(done_b, x)`.
    Final(bool, u64),
    Failing,
    Timeout,
}

/// Runs from `φ(j, x)` until a return global is published.
pub fn run_hardened<R: Rng + ?Sized>(
    h: &Hardened,
    j: StepGlobal,
    x: u64,
    n: u64,
    rng: &mut R,
    max_steps: u64,
) -> (HardOutcome, u64) {
    let mut exec = Execution::new(h, Hardened::phi(j, x, n));
    while exec.next_nonsilent(rng, max_steps).is_some() {}
    let c = exec.config();
    let outcome = if Hardened::is_failing(c) {
        HardOutcome::Failing
    } else if let Some((b, v)) = Hardened::as_final(c) {
        HardOutcome::Final(b, v)
    } else {
        HardOutcome::Timeout
    };
    (outcome, exec.steps())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::Cmd;
    use crate::model::seeded_rng;

    #[test]
    fn inc_finishes() {
        let h = Hardened::with_phases(3);
        let (o, _) = run_hardened(&h, StepGlobal::Cmd(Cmd::Inc), 1, 4, &mut seeded_rng(3), 1 << 20);
        assert!(matches!(o, HardOutcome::Final(false, 2) | HardOutcome::Failing), "{o:?}");
    }
}
