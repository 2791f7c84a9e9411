//! Counter machine to broadcast consensus protocol.
//!
//! Every real agent carries `l` simulated agents (`l` = number of
//! counters) and remembers its input. A simulated agent is either a unit
//! of counter `i` or a worker of the hardened step BP; the working
//! register is the set of workers with contribution 1. The global state
//! holds the machine state and the stage: `init` loads the counter a
//! command acts on, `run` executes the hardened step, and publishing a
//! return value writes the register back and moves the machine on. The two
//! transition functions of the machine are the two branches of the
//! synthetic coin. A worker in `⊥` resets the population to its inputs.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use super::hardened::{HardGlobal, HardLocal, Hardened};
use super::step::StepGlobal;
use crate::combinators::{Coin, CoinError, CoinState, NondetProtocol};
use crate::machines::{CmOp, CounterProgram, Outcome};
use crate::model::{Configuration, Execution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimLocal {
    /// A unit of counter `i`, written `1_i`.
    Counter(u16),
    Work(HardLocal),
}

impl SimLocal {
    pub const ZERO: SimLocal = SimLocal::Work(HardLocal {
        step: Some(super::step::Contribution::Zero),
        clock: super::clock::ClockLocal::Zero,
    });

    fn is_failed(&self) -> bool {
        matches!(self, SimLocal::Work(h) if h.is_failed())
    }
}

impl fmt::Display for SimLocal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimLocal::Counter(i) => write!(f, "1_{}", i + 1),
            SimLocal::Work(h) => write!(f, "{h}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Init,
    /// Executing the row of the given transition function.
    Run { branch: u8, hard: HardGlobal },
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Init => f.write_str("init"),
            Stage::Run { branch, hard } => write!(f, "t{}:{hard}", branch + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CmGlobal<S> {
    pub stage: Stage,
    pub cm: S,
}

/// A real agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CmAgent<S> {
    pub input: SimLocal,
    pub sims: Vec<SimLocal>,
    /// Where the search for a simulated agent to act starts.
    pub next: u8,
    pub global: CmGlobal<S>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("machine has {inputs} inputs but only {counters} counters")]
    ArityMismatch { inputs: usize, counters: usize },
    #[error("machine needs at least one counter")]
    NoCounters,
    #[error("too many counters ({0})")]
    TooManyCounters(usize),
    #[error(transparent)]
    Coin(#[from] CoinError),
}

/// The compiled protocol before the coin is added: branch `b` executes
/// `T_{b+1}` at `init`.
#[derive(Clone, Debug)]
pub struct CmProtocol<P> {
    pub cm: P,
    pub hard: Hardened,
}

/// Simulated transition: the broadcaster's new local and the global.
struct SimMove<S> {
    local: SimLocal,
    global: CmGlobal<S>,
    kind: SimKind,
}

enum SimKind {
    /// Load counter `i` into the register.
    Load(u16),
    Hard(super::hardened::HardMove),
    /// Write the register back into counter `i`.
    Store(u16),
}

impl<P: CounterProgram> CmProtocol<P> {
    pub fn new(cm: P, hard: Hardened) -> Result<Self, CompileError> {
        let (inputs, counters) = (cm.inputs(), cm.counters());
        if counters == 0 {
            return Err(CompileError::NoCounters);
        }
        if inputs > counters {
            return Err(CompileError::ArityMismatch { inputs, counters });
        }
        if counters > u8::MAX as usize {
            return Err(CompileError::TooManyCounters(counters));
        }
        Ok(CmProtocol { cm, hard })
    }

    fn row(&self, branch: usize, s: &P::State) -> CmOp<P::State> {
        self.cm.op(branch, s)
    }

    fn sim_fire(&self, branch: usize, q: SimLocal, g: &CmGlobal<P::State>) -> Option<SimMove<P::State>> {
        match g.stage {
            Stage::Init => {
                self.cm.halted(&g.cm).is_none().then_some(())?;
                let op = self.row(branch, &g.cm);
                let i = op.counter as u16;
                let local = match q {
                    SimLocal::Counter(m) if m == i => SimLocal::Work(HardLocal::bit(true)),
                    SimLocal::Work(h) if h == HardLocal::bit(false) => q,
                    _ => return None,
                };
                Some(SimMove {
                    local,
                    global: CmGlobal {
                        stage: Stage::Run {
                            branch: branch as u8,
                            hard: HardGlobal::start(StepGlobal::Cmd(op.cmd)),
                        },
                        cm: g.cm.clone(),
                    },
                    kind: SimKind::Load(i),
                })
            }
            Stage::Run {
                branch: b,
                hard: HardGlobal::Ret(bit),
            } => {
                let h = match q {
                    SimLocal::Work(h) => h,
                    SimLocal::Counter(_) => return None,
                };
                let op = self.row(b as usize, &g.cm);
                let i = op.counter as u16;
                let local = match h.as_bit()? {
                    true => SimLocal::Counter(i),
                    false => q,
                };
                let [s0, s1] = op.next;
                Some(SimMove {
                    local,
                    global: CmGlobal {
                        stage: Stage::Init,
                        cm: if bit { s1 } else { s0 },
                    },
                    kind: SimKind::Store(i),
                })
            }
            Stage::Run { branch: b, hard } => {
                let SimLocal::Work(h) = q else { return None };
                let m = self.hard.fire(h, hard)?;
                Some(SimMove {
                    local: SimLocal::Work(m.local),
                    global: CmGlobal {
                        stage: Stage::Run { branch: b, hard: m.global },
                        cm: g.cm.clone(),
                    },
                    kind: SimKind::Hard(m),
                })
            }
        }
    }

    fn sim_respond(kind: &SimKind, s: SimLocal) -> SimLocal {
        match (kind, s) {
            (SimKind::Load(i), SimLocal::Counter(m)) if m == *i => SimLocal::Work(HardLocal::bit(true)),
            (SimKind::Hard(m), SimLocal::Work(h)) => SimLocal::Work(m.respond(h)),
            (SimKind::Store(i), SimLocal::Work(h)) if h == HardLocal::bit(true) => SimLocal::Counter(*i),
            _ => s,
        }
    }

    fn initial_global(&self) -> CmGlobal<P::State> {
        CmGlobal {
            stage: Stage::Init,
            cm: self.cm.init(),
        }
    }

    fn reset(&self, a: &CmAgent<P::State>) -> CmAgent<P::State> {
        self.agent(a.input)
    }

    fn agent(&self, input: SimLocal) -> CmAgent<P::State> {
        let mut sims = vec![SimLocal::ZERO; self.cm.counters()];
        sims[0] = input;
        CmAgent {
            input,
            sims,
            next: 0,
            global: self.initial_global(),
        }
    }

    /// The real agent for an input unit of counter `i` (0-based).
    pub fn input_agent(&self, i: usize) -> CmAgent<P::State> {
        self.agent(SimLocal::Counter(i as u16))
    }

    /// The simulated agent that acts when `q` broadcasts on `branch`.
    fn pick(&self, branch: usize, q: &CmAgent<P::State>) -> Option<(usize, SimMove<P::State>)> {
        let l = q.sims.len();
        (0..l).find_map(|d| {
            let i = (q.next as usize + d) % l;
            self.sim_fire(branch, q.sims[i], &q.global).map(|m| (i, m))
        })
    }

    fn failed(q: &CmAgent<P::State>) -> bool {
        q.sims.iter().any(SimLocal::is_failed)
    }

    /// Machine configuration represented by `c`, if it is at `init`.
    pub fn machine_state(c: &Configuration<CmAgent<P::State>>) -> Option<(P::State, Vec<u64>)> {
        let (first, _) = c.iter().next()?;
        if first.global.stage != Stage::Init {
            return None;
        }
        let mut counters = vec![0; first.sims.len()];
        for (a, k) in c.iter() {
            for s in &a.sims {
                if let SimLocal::Counter(i) = s {
                    counters[*i as usize] += k;
                }
            }
        }
        Some((first.global.cm.clone(), counters))
    }
}

impl<P: CounterProgram> NondetProtocol for CmProtocol<P> {
    type State = CmAgent<P::State>;

    fn branches(&self) -> usize {
        2
    }

    fn successor(&self, branch: usize, q: &Self::State) -> Self::State {
        if Self::failed(q) {
            return self.reset(q);
        }
        let Some((i, m)) = self.pick(branch, q) else {
            return q.clone();
        };
        let mut r = q.clone();
        for (j, s) in r.sims.iter_mut().enumerate() {
            *s = if j == i { m.local } else { Self::sim_respond(&m.kind, *s) };
        }
        r.next = ((i + 1) % q.sims.len()) as u8;
        r.global = m.global;
        r
    }

    fn respond(&self, branch: usize, q: &Self::State, s: &Self::State) -> Self::State {
        if Self::failed(q) {
            return self.reset(s);
        }
        let Some((_, m)) = self.pick(branch, q) else {
            return s.clone();
        };
        let mut r = s.clone();
        for x in r.sims.iter_mut() {
            *x = Self::sim_respond(&m.kind, *x);
        }
        r.global = m.global;
        r
    }

    fn is_silent(&self, branch: usize, q: &Self::State) -> bool {
        !Self::failed(q) && self.pick(branch, q).is_none()
    }

    fn deterministic(&self, q: &Self::State) -> bool {
        match q.global.stage {
            Stage::Init => Self::failed(q) || self.row(0, &q.global.cm) == self.row(1, &q.global.cm),
            Stage::Run { .. } => true,
        }
    }

    fn is_accepting(&self, s: &Self::State) -> bool {
        self.cm.halted(&s.global.cm) == Some(true)
    }

    fn input_state(&self, symbol: &str) -> Option<Self::State> {
        let i: usize = symbol.strip_prefix('x')?.parse().ok()?;
        (1..=self.cm.inputs()).contains(&i).then(|| self.input_agent(i - 1))
    }

    fn input_alphabet(&self) -> Vec<String> {
        (1..=self.cm.inputs()).map(|i| format!("x{i}")).collect()
    }

    fn label(&self, s: &Self::State) -> String {
        let sims: Vec<String> = s.sims.iter().map(|x| x.to_string()).collect();
        format!(
            "{}/{}/{}.{}@{}",
            self.cm.label(&s.global.cm),
            s.next,
            s.input,
            sims.join("."),
            s.global.stage
        )
    }
}

pub type CompiledCm<P> = Coin<CmProtocol<P>>;

/// The protocol computing the predicate of `cm`, with hardened steps
/// built on `28k²` clocks. Input symbol `xi` is a unit of counter `i`.
pub fn cm_to_bcp<P: CounterProgram>(cm: P, k: u32) -> Result<CompiledCm<P>, CompileError> {
    compile_with(cm, super::hardened::hardened_step_bp(k))
}

pub fn compile_with<P: CounterProgram>(cm: P, hard: Hardened) -> Result<CompiledCm<P>, CompileError> {
    Ok(Coin::new(CmProtocol::new(cm, hard)?)?)
}

/// Initial configuration for the counter values `input`.
pub fn compiled_input<P: CounterProgram>(
    p: &CompiledCm<P>,
    input: &[u64],
) -> Configuration<CoinState<CmAgent<P::State>>> {
    Configuration::from_counts(
        input
            .iter()
            .enumerate()
            .map(|(i, &k)| (p.lift(p.inner.input_agent(i)), k)),
    )
}

/// Puts one random agent's first simulated agent into `⊥`.
pub fn inject_failure<S: Clone + Ord, R: Rng + ?Sized>(
    c: &Configuration<CoinState<CmAgent<S>>>,
    rng: &mut R,
) -> Configuration<CoinState<CmAgent<S>>> {
    let mut index = rng.random_range(0..c.size());
    let mut victim = None;
    for (q, k) in c.iter() {
        if index < k {
            victim = Some(q.clone());
            break;
        }
        index -= k;
    }
    let victim = victim.expect("non-empty configuration");
    let mut hit = victim.clone();
    hit.q.sims[0] = SimLocal::Work(HardLocal::FAILED);
    let mut out = c.clone();
    out.remove(&victim, 1);
    out.add(hit, 1);
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledRun {
    pub outcome: Outcome,
    pub steps: u64,
    /// Machine steps completed, counting those undone by resets.
    pub cm_steps: u64,
    pub resets: u64,
}

/// Runs until the machine state is halting at `init`, which is stable:
/// every simulated agent is silent from then on and the output only
/// depends on the machine state.
pub fn run_compiled<P: CounterProgram, R: Rng + ?Sized>(
    p: &CompiledCm<P>,
    config: Configuration<CoinState<CmAgent<P::State>>>,
    rng: &mut R,
    max_steps: u64,
) -> CompiledRun {
    let mut exec = Execution::new(p, config);
    let mut cm_steps = 0;
    let mut resets = 0;
    loop {
        if let Some(b) = halted(p, exec.config()) {
            return CompiledRun {
                outcome: Outcome::of_bool(b),
                steps: exec.steps(),
                cm_steps,
                resets,
            };
        }
        let Some(q) = exec.next_nonsilent(rng, max_steps) else {
            return CompiledRun {
                outcome: Outcome::Timeout,
                steps: exec.steps(),
                cm_steps,
                resets,
            };
        };
        if CmProtocol::<P>::failed(&q.q) {
            resets += 1;
        } else if matches!(q.q.global.stage, Stage::Run { hard: HardGlobal::Ret(_), .. }) {
            cm_steps += 1;
        }
    }
}

/// `Some(b)` if `c` is at `init` in halting state `b`.
pub fn halted<P: CounterProgram>(p: &CompiledCm<P>, c: &Configuration<CoinState<CmAgent<P::State>>>) -> Option<bool> {
    let (q, _) = c.iter().next()?;
    if q.q.global.stage != Stage::Init || c.iter().any(|(a, _)| CmProtocol::<P>::failed(&a.q)) {
        return None;
    }
    p.inner.cm.halted(&q.q.global.cm)
}
