use std::collections::HashMap;

use thiserror::Error;

use crate::model::{split_label, ProtocolBuilder, ProtocolSpec, SpecError, StateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComposeError {
    #[error("cannot add symbol `{0}`: the protocol has no global states to carry an inert agent")]
    NoGlobals(String),
    #[error("cannot add symbol `{symbol}`: acceptance at global `{global}` depends on the local state")]
    MixedGlobal { symbol: String, global: String },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Extends `p` with every symbol of `alphabet` it lacks. Each missing symbol
/// maps to an inert local state `_` that never broadcasts and follows the
/// global component; its output is the output determined by the global.
pub fn extend_alphabet(p: &ProtocolSpec, alphabet: &[String]) -> Result<ProtocolSpec, ComposeError> {
    let missing: Vec<&String> = alphabet
        .iter()
        .filter(|s| !p.input_map().contains_key(*s))
        .collect();
    let Some(first) = missing.first() else {
        return Ok(p.clone());
    };
    let Some(globals) = p.globals() else {
        return Err(ComposeError::NoGlobals(first.to_string()));
    };
    let mut b = p.to_builder();
    // output per global, if uniform
    let mut out: HashMap<&str, Option<bool>> = HashMap::new();
    for q in p.states() {
        let g = p.global_of(q).expect("factored");
        let a = p.accepts(q);
        out.entry(g)
            .and_modify(|v| {
                if *v != Some(a) {
                    *v = None
                }
            })
            .or_insert(Some(a));
    }
    let mut inert_label = String::from("_");
    while p.states().any(|q| {
        split_label(p.label_of(q)).is_some_and(|(l, _)| l == inert_label)
    }) {
        inert_label.push('_');
    }
    let inert: Vec<StateId> = globals
        .iter()
        .map(|g| b.new_state(&format!("{inert_label}@{g}")))
        .collect();
    let gidx = |g: &str| globals.iter().position(|x| x == g).expect("declared");
    for (gi, g) in globals.iter().enumerate() {
        match out.get(g.as_str()) {
            Some(Some(true)) => {
                b.accept(inert[gi]);
            }
            Some(Some(false)) | None => {}
            Some(None) => {
                return Err(ComposeError::MixedGlobal {
                    symbol: first.to_string(),
                    global: g.clone(),
                })
            }
        }
    }
    for q in p.states() {
        if p.transition_is_silent(q) {
            continue;
        }
        let t = p.transition(q);
        let g = gidx(p.global_of(q).expect("factored"));
        let g2 = gidx(p.global_of(t.successor).expect("factored"));
        let mut response = t.response.clone();
        response.push((inert[g], inert[g2]));
        b.transition(q, t.successor, response);
    }
    let input_global = p
        .input_map()
        .values()
        .next()
        .map_or(0, |&q| gidx(p.global_of(q).expect("factored")));
    for sym in missing {
        b.input(sym, inert[input_global]);
    }
    Ok(b.build()?)
}

fn union_alphabet(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = a.to_vec();
    for s in b {
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    out
}

fn pair_label(p1: &ProtocolSpec, q1: StateId, p2: &ProtocolSpec, q2: StateId, factored: bool) -> String {
    let (a, b) = (p1.label_of(q1), p2.label_of(q2));
    if factored {
        let (l1, g1) = split_label(a).expect("factored");
        let (l2, g2) = split_label(b).expect("factored");
        format!("{l1}|{l2}@{g1}|{g2}")
    } else {
        format!("{a}|{b}")
    }
}

/// The synchronous product: every broadcast of `(q1, q2)` performs the
/// broadcasts of `q1` and `q2` in their respective components. The output
/// of a product state is `combine(q1 ∈ O1, q2 ∈ O2)`.
pub fn parallel_compose(
    p1: &ProtocolSpec,
    p2: &ProtocolSpec,
    combine: impl Fn(bool, bool) -> bool,
) -> Result<ProtocolSpec, ComposeError> {
    let alphabet = union_alphabet(p1.alphabet(), p2.alphabet());
    let p1 = extend_alphabet(p1, &alphabet)?;
    let p2 = extend_alphabet(p2, &alphabet)?;
    let factored = p1.globals().is_some() && p2.globals().is_some();
    let n2 = p2.num_states();
    let id = |q1: StateId, q2: StateId| StateId((q1.index() * n2 + q2.index()) as u32);
    let mut b = ProtocolBuilder::new();
    for q1 in p1.states() {
        for q2 in p2.states() {
            let s = b.new_state(&pair_label(&p1, q1, &p2, q2, factored));
            debug_assert_eq!(s, id(q1, q2));
            if combine(p1.accepts(q1), p2.accepts(q2)) {
                b.accept(s);
            }
        }
    }
    // Receivers outside the broadcaster's global pair never coexist with
    // it, so the response is left as the identity there.
    let receivers = |p: &ProtocolSpec, q: StateId| -> Vec<StateId> {
        match p.global_of(q) {
            Some(g) if factored => p.states().filter(|&s| p.global_of(s) == Some(g)).collect(),
            _ => p.states().collect(),
        }
    };
    let mut cache1: HashMap<Option<String>, Vec<StateId>> = HashMap::new();
    let mut cache2: HashMap<Option<String>, Vec<StateId>> = HashMap::new();
    for q1 in p1.states() {
        let r1 = cache1
            .entry(p1.global_of(q1).map(str::to_string))
            .or_insert_with(|| receivers(&p1, q1))
            .clone();
        let t1 = p1.transition(q1);
        for q2 in p2.states() {
            if p1.transition_is_silent(q1) && p2.transition_is_silent(q2) {
                continue;
            }
            let r2 = cache2
                .entry(p2.global_of(q2).map(str::to_string))
                .or_insert_with(|| receivers(&p2, q2));
            let t2 = p2.transition(q2);
            let mut response = Vec::new();
            for &s1 in &r1 {
                let f1 = t1.respond(s1);
                for &s2 in r2.iter() {
                    let f2 = t2.respond(s2);
                    if f1 != s1 || f2 != s2 {
                        response.push((id(s1, s2), id(f1, f2)));
                    }
                }
            }
            b.transition(id(q1, q2), id(t1.successor, t2.successor), response);
        }
    }
    for sym in &alphabet {
        let q1 = p1.input_map()[sym];
        let q2 = p2.input_map()[sym];
        b.input(sym, id(q1, q2));
    }
    if factored {
        let g1 = p1.globals().expect("factored");
        let g2 = p2.globals().expect("factored");
        b.declare_globals(
            g1.iter()
                .flat_map(|a| g2.iter().map(move |c| format!("{a}|{c}"))),
        );
    }
    Ok(b.build()?)
}

/// Projections of a product state onto its two components.
pub fn project(p2_states: usize, q: StateId) -> (StateId, StateId) {
    let i = q.index();
    (StateId((i / p2_states) as u32), StateId((i % p2_states) as u32))
}

/// Accepting-set complement, used for negation.
pub fn complement(p: &ProtocolSpec) -> ProtocolSpec {
    p.with_accepting(|q| !p.accepts(q))
}
