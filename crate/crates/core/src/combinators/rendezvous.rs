//! Rendezvous transitions on top of broadcasts.
//!
//! An agent in `q` may announce that it wants to interact (`q ↦ q̃`, every
//! other agent `r` moves to the waiting state `r_q`); the next waiting agent
//! to broadcast completes the pair according to `R(q, r) = (s, t)` and
//! releases everyone else.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use super::nondet::NondetSpec;
use crate::model::format::Document;
use crate::model::{BroadcastTransition, Configuration, ProtocolBuilder, ProtocolSpec, SpecError, StateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RendezvousError {
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// A protocol together with a rendezvous map `R: Q² → Q²`, stored by its
/// non-identity entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RendezvousSpec {
    pub base: ProtocolSpec,
    pairs: BTreeMap<(StateId, StateId), (StateId, StateId)>,
}

impl RendezvousSpec {
    pub fn new(
        base: ProtocolSpec,
        pairs: impl IntoIterator<Item = ((StateId, StateId), (StateId, StateId))>,
    ) -> Self {
        let pairs = pairs.into_iter().filter(|(a, b)| a != b).collect();
        RendezvousSpec { base, pairs }
    }

    pub fn from_document(doc: &Document) -> Self {
        Self::new(doc.spec.clone(), doc.rendezvous.iter().copied())
    }

    pub fn to_document(&self) -> Document {
        Document {
            spec: self.base.clone(),
            transitions2: None,
            rendezvous: self.pairs.iter().map(|(&a, &b)| (a, b)).collect(),
        }
    }

    pub fn rendezvous(&self, q: StateId, r: StateId) -> (StateId, StateId) {
        self.pairs.get(&(q, r)).copied().unwrap_or((q, r))
    }
}

/// The states added by [`with_rendezvous`], in terms of the original ones.
#[derive(Clone, Debug)]
pub struct RendezvousLayout {
    pub original: usize,
}

impl RendezvousLayout {
    /// `q̃`.
    pub fn active(&self, q: StateId) -> StateId {
        StateId((self.original + q.index()) as u32)
    }

    /// `r_q`.
    pub fn waiting(&self, r: StateId, q: StateId) -> StateId {
        StateId((2 * self.original + q.index() * self.original + r.index()) as u32)
    }

    /// The original state an extended state stands for: `q` for `q̃`, `r`
    /// for `r_q`.
    pub fn underlying(&self, s: StateId) -> StateId {
        let i = s.index();
        let n = self.original;
        if i < 2 * n {
            StateId((i % n) as u32)
        } else {
            StateId(((i - 2 * n) % n) as u32)
        }
    }

    pub fn is_original(&self, s: StateId) -> bool {
        s.index() < self.original
    }

    pub fn is_active(&self, s: StateId) -> bool {
        (self.original..2 * self.original).contains(&s.index())
    }
}

/// Branch 0 is the original broadcast of every `q`, branch 1 its
/// activating transition. Added states use the same transition in both
/// branches.
pub fn with_rendezvous(spec: &RendezvousSpec) -> Result<(NondetSpec, RendezvousLayout), RendezvousError> {
    let base = &spec.base;
    let n = base.num_states();
    let layout = RendezvousLayout { original: n };
    let mut b = ProtocolBuilder::new();
    for q in base.states() {
        b.new_state(base.label_of(q));
    }
    for q in base.states() {
        b.new_state(&format!("~{}", base.label_of(q)));
    }
    for q in base.states() {
        for r in base.states() {
            b.new_state(&format!("{}^{}", base.label_of(r), base.label_of(q)));
        }
    }
    for s in base.states() {
        if base.accepts(s) {
            b.accept(s);
            b.accept(layout.active(s));
            for q in base.states() {
                b.accept(layout.waiting(s, q));
            }
        }
    }
    for (sym, &q) in base.input_map() {
        b.input(sym, q);
    }
    for q in base.states() {
        let t = base.transition(q);
        if !base.transition_is_silent(q) {
            b.transition(q, t.successor, t.response.clone());
        }
        for r in base.states() {
            // deactivating: r_q ↦ s, {q̃ ↦ t} ∪ {u_q ↦ u}
            let (s, t) = spec.rendezvous(q, r);
            let mut response = vec![(layout.active(q), t)];
            response.extend(base.states().map(|u| (layout.waiting(u, q), u)));
            b.transition(layout.waiting(r, q), s, response);
        }
    }
    let spec0 = b.build()?;
    let activating: Vec<_> = spec0
        .states()
        .map(|s| {
            if layout.is_original(s) {
                // q ↦ q̃, {r ↦ r_q}
                BroadcastTransition {
                    successor: layout.active(s),
                    response: base.states().map(|r| (r, layout.waiting(r, s))).collect(),
                }
            } else {
                spec0.transition(s).clone()
            }
        })
        .collect();
    let nd = NondetSpec::new(spec0, vec![activating]).expect("tables are total");
    Ok((nd, layout))
}

/// Reference population-protocol step: an ordered pair of distinct agents
/// is drawn uniformly and replaced by `R` of their states.
pub fn pp_step<R: Rng + ?Sized>(
    spec: &RendezvousSpec,
    config: &mut Configuration<StateId>,
    rng: &mut R,
) -> Option<(StateId, StateId)> {
    let n = config.size();
    if n < 2 {
        return None;
    }
    let q = *config.nth_agent(rng.random_range(0..n));
    config.remove(&q, 1);
    let r = *config.nth_agent(rng.random_range(0..n - 1));
    config.remove(&r, 1);
    let (s, t) = spec.rendezvous(q, r);
    config.add(s, 1);
    config.add(t, 1);
    Some((q, r))
}

/// All configurations one population-protocol step away from `config`.
pub fn pp_successors(spec: &RendezvousSpec, config: &Configuration<StateId>) -> Vec<Configuration<StateId>> {
    let mut out = Vec::new();
    for (&q, kq) in config.iter() {
        for (&r, kr) in config.iter() {
            if q == r && kq < 2 || kr == 0 {
                continue;
            }
            let mut c = config.clone();
            c.remove(&q, 1);
            c.remove(&r, 1);
            let (s, t) = spec.rendezvous(q, r);
            c.add(s, 1);
            c.add(t, 1);
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    out
}
