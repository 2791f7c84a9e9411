//! The uniform random scheduler.
//!
//! Every step picks an agent uniformly at random and lets it broadcast.
//! Steps whose broadcaster is in a silent state leave the configuration
//! unchanged; [`Execution`] can skip runs of them by sampling their number
//! from the matching geometric law, which yields exactly the same
//! distribution over (step index, configuration) pairs while touching only
//! the non-silent steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use super::config::Configuration;
use super::protocol::{Consensus, Protocol};
use crate::analysis::{decide_stable, ReachError};

/// Generator used for every randomized computation; recorded in outputs.
pub const RNG_NAME: &str = "ChaCha8Rng";

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `trial` of the generator seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("unknown input symbol `{0}`")]
    UnknownSymbol(String),
    #[error("empty population")]
    EmptyPopulation,
    #[error("state `{0}` is not present in the configuration")]
    StateNotPresent(String),
    #[error("stability check failed: {0}")]
    Reach(#[from] ReachError),
}

/// `I(X)`: the multiset image of the input counts.
pub fn init_config<P, K>(
    p: &P,
    input: impl IntoIterator<Item = (K, u64)>,
) -> Result<Configuration<P::State>, SimError>
where
    P: Protocol,
    K: AsRef<str>,
{
    let mut c = Configuration::new();
    for (sym, k) in input {
        let q = p
            .input_state(sym.as_ref())
            .ok_or_else(|| SimError::UnknownSymbol(sym.as_ref().to_string()))?;
        c.add(q, k);
    }
    if c.is_empty() {
        return Err(SimError::EmptyPopulation);
    }
    Ok(c)
}

/// `f(C − ⟨q⟩) + ⟨r⟩` for `δ(q) = (r, f)`.
pub fn apply_broadcast<P: Protocol>(
    p: &P,
    config: &Configuration<P::State>,
    q: &P::State,
) -> Result<Configuration<P::State>, SimError> {
    if config.get(q) == 0 {
        return Err(SimError::StateNotPresent(p.label(q)));
    }
    if p.is_silent(q) {
        return Ok(config.clone());
    }
    let mut rest = config.clone();
    rest.remove(q, 1);
    let mut next = rest.map(|s| p.respond(q, s));
    next.add(p.successor(q), 1);
    Ok(next)
}

/// One scheduler step: `q` is drawn with probability `C(q)/|C|`.
pub fn sample_step<P: Protocol, R: Rng + ?Sized>(
    p: &P,
    config: &Configuration<P::State>,
    rng: &mut R,
) -> Result<(P::State, Configuration<P::State>), SimError> {
    if config.is_empty() {
        return Err(SimError::EmptyPopulation);
    }
    let q = config.nth_agent(rng.random_range(0..config.size())).clone();
    let next = apply_broadcast(p, config, &q)?;
    Ok((q, next))
}

pub fn is_consensus<P: Protocol>(p: &P, config: &Configuration<P::State>) -> Consensus {
    let mut acc = false;
    let mut rej = false;
    for s in config.support() {
        if p.is_accepting(s) {
            acc = true;
        } else {
            rej = true;
        }
        if acc && rej {
            return Consensus::Mixed;
        }
    }
    // the empty configuration is vacuously both; report 1
    Consensus::of_bool(!rej)
}

pub fn enabled_nonsilent<P: Protocol>(p: &P, config: &Configuration<P::State>) -> Vec<P::State> {
    config.support().filter(|q| !p.is_silent(q)).cloned().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopPolicy {
    /// Stop once every present state is silent.
    Quiescence,
    /// Stop at the first configuration that is a stable consensus.
    ExactStable { budget: usize },
    /// Run exactly `max_steps` steps.
    FixedSteps,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub stop: StopPolicy,
    pub max_steps: u64,
    /// Keep every non-silent step in the trace.
    pub record: bool,
    /// Sample runs of silent steps in one draw instead of one by one.
    pub skip_silent: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            stop: StopPolicy::Quiescence,
            max_steps: u64::MAX,
            record: false,
            skip_silent: true,
        }
    }
}

impl RunOptions {
    pub fn new(stop: StopPolicy, max_steps: u64) -> Self {
        RunOptions {
            stop,
            max_steps,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct TraceStep<S: Ord> {
    /// 1-based index of the step producing `config`.
    pub index: u64,
    pub broadcaster: S,
    pub config: Configuration<S>,
}

#[derive(Clone, Debug)]
pub struct Trace<S: Ord> {
    pub initial: Configuration<S>,
    pub final_config: Configuration<S>,
    /// Non-silent steps, if recorded.
    pub steps: Option<Vec<TraceStep<S>>>,
    pub step_count: u64,
    pub nonsilent_steps: u64,
    /// `(step index, consensus)` at index 0 and at every change.
    pub consensus_changes: Vec<(u64, Consensus)>,
    /// Index of the first stable configuration (only under `ExactStable`).
    pub stable_at: Option<u64>,
    pub truncated: bool,
}

impl<S: Ord> Trace<S> {
    pub fn final_consensus(&self) -> Consensus {
        self.consensus_changes.last().expect("history starts at 0").1
    }

    pub fn last_consensus_change(&self) -> u64 {
        self.consensus_changes.last().expect("history starts at 0").0
    }
}

/// A random execution in progress.
#[derive(Clone, Debug)]
pub struct Execution<'p, P: Protocol> {
    protocol: &'p P,
    config: Configuration<P::State>,
    steps: u64,
    nonsilent: u64,
}

impl<'p, P: Protocol> Execution<'p, P> {
    pub fn new(protocol: &'p P, config: Configuration<P::State>) -> Self {
        Execution {
            protocol,
            config,
            steps: 0,
            nonsilent: 0,
        }
    }

    pub fn config(&self) -> &Configuration<P::State> {
        &self.config
    }

    pub fn into_config(self) -> Configuration<P::State> {
        self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn nonsilent_steps(&self) -> u64 {
        self.nonsilent
    }

    /// Replaces the configuration, keeping the step counters.
    pub fn set_config(&mut self, config: Configuration<P::State>) {
        self.config = config;
    }

    /// Number of agents in non-silent states.
    pub fn active(&self) -> u64 {
        self.config
            .iter()
            .filter(|(q, _)| !self.protocol.is_silent(q))
            .map(|(_, k)| k)
            .sum()
    }

    /// One scheduler step, silent or not; returns the broadcaster.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> P::State {
        let q = self
            .config
            .nth_agent(rng.random_range(0..self.config.size()))
            .clone();
        self.steps += 1;
        if !self.protocol.is_silent(&q) {
            self.fire(&q);
        }
        q
    }

    /// Advances to the next non-silent step, counting the silent steps
    /// skipped on the way. Returns `None` without moving when the
    /// configuration is quiescent, and also when the next non-silent step
    /// would land beyond `limit` (then the counter is set to `limit`).
    pub fn next_nonsilent<R: Rng + ?Sized>(&mut self, rng: &mut R, limit: u64) -> Option<P::State> {
        let active = self.active();
        if active == 0 {
            return None;
        }
        let n = self.config.size();
        let wait = if active == n {
            0
        } else {
            Geometric::new(active as f64 / n as f64)
                .expect("probability in (0, 1]")
                .sample(rng)
        };
        let at = self.steps.saturating_add(wait).saturating_add(1);
        if at > limit {
            self.steps = limit;
            return None;
        }
        self.steps = at;
        let mut index = rng.random_range(0..active);
        let mut chosen = None;
        for (q, k) in self.config.iter() {
            if self.protocol.is_silent(q) {
                continue;
            }
            if index < k {
                chosen = Some(q.clone());
                break;
            }
            index -= k;
        }
        let q = chosen.expect("index below active count");
        self.fire(&q);
        Some(q)
    }

    fn fire(&mut self, q: &P::State) {
        let p = self.protocol;
        self.config.remove(q, 1);
        let mut next = self.config.map(|s| p.respond(q, s));
        next.add(p.successor(q), 1);
        self.config = next;
        self.nonsilent += 1;
    }
}

/// Runs the random execution from `I(input)`.
pub fn run_execution<P, K, R>(
    p: &P,
    input: impl IntoIterator<Item = (K, u64)>,
    rng: &mut R,
    opts: RunOptions,
) -> Result<Trace<P::State>, SimError>
where
    P: Protocol,
    K: AsRef<str>,
    R: Rng + ?Sized,
{
    let c0 = init_config(p, input)?;
    run_from(p, c0, rng, opts)
}

/// Runs the random execution from an arbitrary configuration.
pub fn run_from<P: Protocol, R: Rng + ?Sized>(
    p: &P,
    initial: Configuration<P::State>,
    rng: &mut R,
    opts: RunOptions,
) -> Result<Trace<P::State>, SimError> {
    if initial.is_empty() {
        return Err(SimError::EmptyPopulation);
    }
    let mut ex = Execution::new(p, initial.clone());
    let mut history = vec![(0, is_consensus(p, &initial))];
    let mut steps = opts.record.then(Vec::new);
    let mut stable_at = None;
    let mut truncated = false;

    let check_stable = |c: &Configuration<P::State>| -> Result<bool, SimError> {
        match opts.stop {
            StopPolicy::ExactStable { budget } => Ok(decide_stable(p, c, budget)?),
            _ => Ok(false),
        }
    };

    if check_stable(ex.config())? {
        stable_at = Some(0);
    } else {
        loop {
            let moved = if opts.skip_silent {
                ex.next_nonsilent(rng, opts.max_steps)
            } else if ex.steps() < opts.max_steps
                && !(opts.stop == StopPolicy::Quiescence && ex.active() == 0)
            {
                Some(ex.step(rng))
            } else {
                None
            };
            let Some(q) = moved else {
                let quiescent = ex.active() == 0;
                match opts.stop {
                    StopPolicy::FixedSteps => {
                        if opts.max_steps != u64::MAX {
                            ex.steps = opts.max_steps;
                        }
                    }
                    StopPolicy::Quiescence => truncated = !quiescent,
                    // quiescent but unstable means a mixed terminal configuration
                    StopPolicy::ExactStable { .. } => truncated = true,
                }
                break;
            };
            if p.is_silent(&q) {
                continue;
            }
            let c = is_consensus(p, ex.config());
            if history.last().expect("nonempty").1 != c {
                history.push((ex.steps(), c));
            }
            if let Some(v) = steps.as_mut() {
                v.push(TraceStep {
                    index: ex.steps(),
                    broadcaster: q,
                    config: ex.config().clone(),
                });
            }
            if check_stable(ex.config())? {
                stable_at = Some(ex.steps());
                break;
            }
        }
    }
    Ok(Trace {
        initial,
        step_count: ex.steps(),
        nonsilent_steps: ex.nonsilent_steps(),
        final_config: ex.into_config(),
        steps,
        consensus_changes: history,
        stable_at,
        truncated,
    })
}
