use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::protocol::Protocol;

/// Index of a state in a [`ProtocolSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// `δ(q) = (r, f)` with `f` stored as its non-identity entries, sorted by
/// source state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BroadcastTransition {
    pub successor: StateId,
    pub response: Vec<(StateId, StateId)>,
}

impl BroadcastTransition {
    pub fn silent(q: StateId) -> Self {
        BroadcastTransition {
            successor: q,
            response: Vec::new(),
        }
    }

    pub fn respond(&self, s: StateId) -> StateId {
        match self.response.binary_search_by_key(&s, |&(from, _)| from) {
            Ok(i) => self.response[i].1,
            Err(_) => s,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("invalid state label `{0}`")]
    BadLabel(String),
    #[error("duplicate state label `{0}`")]
    DuplicateState(String),
    #[error("protocol has no states")]
    NoStates,
    #[error("state `{0}` is not of the form local@global with a declared global")]
    NotFactored(String),
    #[error("transition of `{q}` maps `{s}` to `{t}`, leaving global state `{expected}`")]
    GlobalViolation {
        q: String,
        s: String,
        t: String,
        expected: String,
    },
    #[error("input states do not share one global state")]
    InputGlobals,
    #[error("duplicate input symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("state `{0}` is reachable by a transition but was not listed")]
    NotClosed(String),
}

/// Explicit broadcast consensus protocol `(Q, Σ, δ, I, O)`, optionally with a
/// declared global-state factorization `Q = S × G`.
///
/// Immutable once built; share it freely across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolSpec {
    labels: Vec<String>,
    index: HashMap<String, StateId>,
    transitions: Vec<BroadcastTransition>,
    alphabet: Vec<String>,
    input_map: BTreeMap<String, StateId>,
    accepting: Vec<bool>,
    globals: Option<Vec<String>>,
    global_of: Vec<u32>,
}

pub(crate) fn valid_label(l: &str) -> bool {
    !l.is_empty()
        && !l.contains("->")
        && !l
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | ';' | '=' | '#' | '[' | ']'))
}

/// Splits a factored label at its last `@`.
pub fn split_label(l: &str) -> Option<(&str, &str)> {
    l.rfind('@').map(|i| (&l[..i], &l[i + 1..]))
}

impl ProtocolSpec {
    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.labels.len() as u32).map(StateId)
    }

    pub fn label_of(&self, q: StateId) -> &str {
        &self.labels[q.index()]
    }

    pub fn id(&self, label: &str) -> Option<StateId> {
        self.index.get(label).copied()
    }

    pub fn transition(&self, q: StateId) -> &BroadcastTransition {
        &self.transitions[q.index()]
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn input_map(&self) -> &BTreeMap<String, StateId> {
        &self.input_map
    }

    pub fn accepts(&self, q: StateId) -> bool {
        self.accepting[q.index()]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|&q| self.accepts(q))
    }

    pub fn globals(&self) -> Option<&[String]> {
        self.globals.as_deref()
    }

    /// Global component of `q`, if the protocol is factored.
    pub fn global_of(&self, q: StateId) -> Option<&str> {
        self.globals
            .as_ref()
            .map(|g| g[self.global_of[q.index()] as usize].as_str())
    }

    pub fn transition_is_silent(&self, q: StateId) -> bool {
        let t = self.transition(q);
        t.successor == q && t.response.is_empty()
    }

    /// Same protocol with the accepting set replaced by `keep(q)`.
    pub fn with_accepting(&self, keep: impl Fn(StateId) -> bool) -> ProtocolSpec {
        let mut out = self.clone();
        out.accepting = self.states().map(keep).collect();
        out
    }

    /// Re-opens the protocol for editing.
    pub fn to_builder(&self) -> ProtocolBuilder {
        let mut b = ProtocolBuilder::new();
        for l in &self.labels {
            b.state(l);
        }
        for q in self.states() {
            if !self.transition_is_silent(q) {
                let t = self.transition(q);
                b.transition(q, t.successor, t.response.clone());
            }
        }
        for (sym, &q) in &self.input_map {
            b.input(sym, q);
        }
        b.alphabet = self.alphabet.clone();
        for q in self.accepting_states() {
            b.accept(q);
        }
        if let Some(g) = &self.globals {
            b.declare_globals(g.iter().cloned());
        }
        b
    }
}

impl Protocol for ProtocolSpec {
    type State = StateId;

    fn successor(&self, q: &StateId) -> StateId {
        self.transitions[q.index()].successor
    }

    fn respond(&self, q: &StateId, s: &StateId) -> StateId {
        self.transitions[q.index()].respond(*s)
    }

    fn is_silent(&self, q: &StateId) -> bool {
        self.transition_is_silent(*q)
    }

    fn is_accepting(&self, s: &StateId) -> bool {
        self.accepts(*s)
    }

    fn input_state(&self, symbol: &str) -> Option<StateId> {
        self.input_map.get(symbol).copied()
    }

    fn input_alphabet(&self) -> Vec<String> {
        self.alphabet.clone()
    }

    fn label(&self, s: &StateId) -> String {
        self.labels[s.index()].clone()
    }
}

/// States reachable from the input states under successors and responses,
/// in discovery order; `None` past `budget` states.
pub fn close_states<P: Protocol>(p: &P, budget: usize) -> Option<Vec<P::State>> {
    closure(p, budget).map(|(order, _)| order)
}

type Rows = Vec<Option<(usize, Vec<(usize, usize)>)>>;

/// Closure plus, per state, its successor and non-identity responses by
/// index. Every pair is evaluated once, when the later of the two appears.
fn closure<P: Protocol>(p: &P, budget: usize) -> Option<(Vec<P::State>, Rows)> {
    let mut index: HashMap<P::State, usize> = HashMap::new();
    let mut order: Vec<P::State> = Vec::new();
    let mut intern = |q: P::State, order: &mut Vec<P::State>| -> Option<usize> {
        let n = order.len();
        let i = *index.entry(q.clone()).or_insert_with(|| {
            order.push(q);
            n
        });
        (order.len() <= budget).then_some(i)
    };
    for sym in p.input_alphabet() {
        if let Some(q) = p.input_state(&sym) {
            intern(q, &mut order)?;
        }
    }
    let mut rows: Rows = Vec::new();
    let mut done = 0;
    while done < order.len() {
        let q = order[done].clone();
        let mut row = None;
        if !p.is_silent(&q) {
            let succ = intern(p.successor(&q), &mut order)?;
            let mut resp = Vec::new();
            for j in 0..=done {
                let t = p.respond(&q, &order[j].clone());
                let t = intern(t, &mut order)?;
                if t != j {
                    resp.push((j, t));
                }
            }
            row = Some((succ, resp));
        }
        rows.push(row);
        for b in 0..done {
            if let Some((_, resp)) = &mut rows[b] {
                let t = p.respond(&order[b].clone(), &q);
                let t = intern(t, &mut order)?;
                if t != done {
                    resp.push((done, t));
                }
            }
        }
        done += 1;
    }
    Some((order, rows))
}

/// Tabulates the states reachable from the inputs; `Ok(None)` past
/// `budget` states.
pub fn tabulate<P: Protocol>(p: &P, budget: usize, factored: bool) -> Result<Option<ProtocolSpec>, SpecError> {
    let Some((states, rows)) = closure(p, budget) else {
        return Ok(None);
    };
    let mut b = ProtocolBuilder::new();
    let mut globals: Vec<String> = Vec::new();
    for q in &states {
        let l = p.label(q);
        if factored {
            if let Some((_, g)) = split_label(&l) {
                if !globals.iter().any(|x| x == g) {
                    globals.push(g.to_string());
                }
            }
        }
        b.new_state(&l);
    }
    for (i, row) in rows.into_iter().enumerate() {
        if let Some((succ, mut resp)) = row {
            resp.sort_unstable();
            let resp: Vec<_> = resp.into_iter().map(|(j, t)| (StateId(j as u32), StateId(t as u32))).collect();
            b.transition(StateId(i as u32), StateId(succ as u32), resp);
        }
    }
    for (i, q) in states.iter().enumerate() {
        if p.is_accepting(q) {
            b.accept(StateId(i as u32));
        }
    }
    for sym in p.input_alphabet() {
        if let Some(q) = p.input_state(&sym) {
            b.input(&sym, StateId(states.iter().position(|s| *s == q).expect("interned") as u32));
        }
    }
    if factored {
        b.declare_globals(globals);
    }
    b.build().map(Some)
}

/// Tabulates a protocol over the listed states, which must be closed under
/// successors and responses. With `factored`, globals are taken from the
/// labels (text after the last `@`) in order of first appearance.
pub fn materialize<P: Protocol>(
    p: &P,
    states: impl IntoIterator<Item = P::State>,
    factored: bool,
) -> Result<ProtocolSpec, SpecError> {
    let states: Vec<P::State> = states.into_iter().collect();
    let index: HashMap<P::State, StateId> = states
        .iter()
        .enumerate()
        .map(|(i, q)| (q.clone(), StateId(i as u32)))
        .collect();
    let id = |q: &P::State| -> Result<StateId, SpecError> {
        index
            .get(q)
            .copied()
            .ok_or_else(|| SpecError::NotClosed(p.label(q)))
    };
    let mut b = ProtocolBuilder::new();
    let mut globals: Vec<String> = Vec::new();
    for q in &states {
        let l = p.label(q);
        if factored {
            if let Some((_, g)) = split_label(&l) {
                if !globals.iter().any(|x| x == g) {
                    globals.push(g.to_string());
                }
            }
        }
        b.new_state(&l);
    }
    for (i, q) in states.iter().enumerate() {
        if p.is_silent(q) {
            continue;
        }
        let mut response = Vec::new();
        for (j, s) in states.iter().enumerate() {
            let t = p.respond(q, s);
            if &t != s {
                response.push((StateId(j as u32), id(&t)?));
            }
        }
        b.transition(StateId(i as u32), id(&p.successor(q))?, response);
    }
    for (i, q) in states.iter().enumerate() {
        if p.is_accepting(q) {
            b.accept(StateId(i as u32));
        }
    }
    for sym in p.input_alphabet() {
        if let Some(q) = p.input_state(&sym) {
            b.input(&sym, id(&q)?);
        }
    }
    if factored {
        b.declare_globals(globals);
    }
    b.build()
}

/// Incremental constructor for [`ProtocolSpec`]. Unset transitions are silent.
#[derive(Clone, Debug, Default)]
pub struct ProtocolBuilder {
    labels: Vec<String>,
    index: HashMap<String, StateId>,
    transitions: Vec<Option<BroadcastTransition>>,
    alphabet: Vec<String>,
    input_map: BTreeMap<String, StateId>,
    accepting: BTreeSet<StateId>,
    globals: Option<Vec<String>>,
    duplicate: Option<String>,
}

impl ProtocolBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `label`, declaring it if needed.
    pub fn state(&mut self, label: &str) -> StateId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = StateId(self.labels.len() as u32);
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        self.transitions.push(None);
        id
    }

    /// Declares a state that must be new.
    pub fn new_state(&mut self, label: &str) -> StateId {
        if self.index.contains_key(label) && self.duplicate.is_none() {
            self.duplicate = Some(label.to_string());
        }
        self.state(label)
    }

    pub fn lookup(&self, label: &str) -> Option<StateId> {
        self.index.get(label).copied()
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    /// Sets `δ(q) = (r, f)`; identity entries in `response` are dropped.
    pub fn transition(
        &mut self,
        q: StateId,
        r: StateId,
        response: impl IntoIterator<Item = (StateId, StateId)>,
    ) -> &mut Self {
        let mut map: BTreeMap<StateId, StateId> = BTreeMap::new();
        for (s, t) in response {
            if s != t {
                map.insert(s, t);
            } else {
                map.remove(&s);
            }
        }
        self.transitions[q.index()] = Some(BroadcastTransition {
            successor: r,
            response: map.into_iter().collect(),
        });
        self
    }

    pub fn input(&mut self, symbol: &str, q: StateId) -> &mut Self {
        if self.input_map.insert(symbol.to_string(), q).is_none() {
            self.alphabet.push(symbol.to_string());
        }
        self
    }

    pub fn has_input(&self, symbol: &str) -> bool {
        self.input_map.contains_key(symbol)
    }

    pub fn accept(&mut self, q: StateId) -> &mut Self {
        self.accepting.insert(q);
        self
    }

    pub fn declare_globals(&mut self, names: impl IntoIterator<Item = String>) -> &mut Self {
        self.globals = Some(names.into_iter().collect());
        self
    }

    pub fn build(self) -> Result<ProtocolSpec, SpecError> {
        if let Some(d) = self.duplicate {
            return Err(SpecError::DuplicateState(d));
        }
        if self.labels.is_empty() {
            return Err(SpecError::NoStates);
        }
        if let Some(bad) = self.labels.iter().find(|l| !valid_label(l)) {
            return Err(SpecError::BadLabel(bad.clone()));
        }
        for s in &self.alphabet {
            if !valid_label(s) {
                return Err(SpecError::BadLabel(s.clone()));
            }
        }
        let transitions: Vec<BroadcastTransition> = self
            .transitions
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.unwrap_or_else(|| BroadcastTransition::silent(StateId(i as u32))))
            .collect();
        let accepting = (0..self.labels.len() as u32)
            .map(|i| self.accepting.contains(&StateId(i)))
            .collect();
        let mut global_of = vec![0u32; self.labels.len()];
        if let Some(globals) = &self.globals {
            let gidx: HashMap<&str, u32> = globals
                .iter()
                .enumerate()
                .map(|(i, g)| (g.as_str(), i as u32))
                .collect();
            for (i, l) in self.labels.iter().enumerate() {
                let g = split_label(l)
                    .and_then(|(_, g)| gidx.get(g))
                    .ok_or_else(|| SpecError::NotFactored(l.clone()))?;
                global_of[i] = *g;
            }
            let mut by_global: Vec<Vec<usize>> = vec![Vec::new(); globals.len()];
            for (i, &g) in global_of.iter().enumerate() {
                by_global[g as usize].push(i);
            }
            for (q, t) in transitions.iter().enumerate() {
                let g = global_of[q];
                let g2 = global_of[t.successor.index()];
                for &s in &by_global[g as usize] {
                    let img = t.respond(StateId(s as u32));
                    if global_of[img.index()] != g2 {
                        return Err(SpecError::GlobalViolation {
                            q: self.labels[q].clone(),
                            s: self.labels[s].clone(),
                            t: self.labels[img.index()].clone(),
                            expected: globals[g2 as usize].clone(),
                        });
                    }
                }
            }
            let mut input_globals = self.input_map.values().map(|q| global_of[q.index()]);
            if let Some(first) = input_globals.next() {
                if input_globals.any(|g| g != first) {
                    return Err(SpecError::InputGlobals);
                }
            }
        }
        Ok(ProtocolSpec {
            labels: self.labels,
            index: self.index,
            transitions,
            alphabet: self.alphabet,
            input_map: self.input_map,
            accepting,
            globals: self.globals,
            global_of,
        })
    }
}

/// Builder for protocols with global states, using the compact notation
/// where a transition's response is given on local components only and the
/// global component of every agent follows the broadcaster's new global.
#[derive(Clone, Debug)]
pub struct GlobalBuilder {
    inner: ProtocolBuilder,
    locals: Vec<String>,
    globals: Vec<String>,
}

impl GlobalBuilder {
    pub fn new(locals: Vec<String>, globals: Vec<String>) -> Self {
        let mut inner = ProtocolBuilder::new();
        for g in &globals {
            for l in &locals {
                inner.new_state(&format!("{l}@{g}"));
            }
        }
        inner.declare_globals(globals.iter().cloned());
        GlobalBuilder {
            inner,
            locals,
            globals,
        }
    }

    pub fn id(&self, local: usize, global: usize) -> StateId {
        StateId((global * self.locals.len() + local) as u32)
    }

    pub fn local_index(&self, name: &str) -> Option<usize> {
        self.locals.iter().position(|l| l == name)
    }

    pub fn global_index(&self, name: &str) -> Option<usize> {
        self.globals.iter().position(|g| g == name)
    }

    /// `(l, g) ↦ (l2, g2), {s ↦ map(s)}` with unmapped locals fixed.
    pub fn transition(
        &mut self,
        (l, g): (usize, usize),
        (l2, g2): (usize, usize),
        local_map: &[(usize, usize)],
    ) -> &mut Self {
        let q = self.id(l, g);
        let r = self.id(l2, g2);
        let response: Vec<(StateId, StateId)> = (0..self.locals.len())
            .map(|s| {
                let t = local_map
                    .iter()
                    .find(|&&(from, _)| from == s)
                    .map_or(s, |&(_, to)| to);
                (self.id(s, g), self.id(t, g2))
            })
            .collect();
        self.inner.transition(q, r, response);
        self
    }

    pub fn input(&mut self, symbol: &str, q: StateId) -> &mut Self {
        self.inner.input(symbol, q);
        self
    }

    pub fn accept(&mut self, q: StateId) -> &mut Self {
        self.inner.accept(q);
        self
    }

    pub fn build(self) -> Result<ProtocolSpec, SpecError> {
        self.inner.build()
    }
}
