//! Text format for protocols.
//!
//! ```text
//! # majority
//! [states]
//! x@0 y@0 d@0
//! x@1 y@1 d@1
//! [globals]
//! 0 1
//! [inputs]
//! x = x@0
//! y = y@0
//! [accepting]
//! x@1 y@1 d@1
//! [transitions]
//! x@0 -> d@1 ; x@0 -> x@1, y@0 -> y@1, d@0 -> d@1
//! y@1 -> d@0 ; x@1 -> x@0, y@1 -> y@0, d@1 -> d@0
//! ```
//!
//! States not listed under `[transitions]` are silent; response entries
//! not listed are the identity. `[globals]` is optional. Two extra
//! sections carry the nondeterministic and rendezvous extensions:
//! `[transitions2]` (same syntax, the second transition function) and
//! `[rendezvous]` with lines `q r -> s t`. `#` starts a comment.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use super::spec::{BroadcastTransition, ProtocolBuilder, ProtocolSpec, SpecError, StateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// A parsed file: the base protocol plus optional extension sections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub spec: ProtocolSpec,
    /// Second transition function, total over the states, if present.
    pub transitions2: Option<Vec<BroadcastTransition>>,
    /// Non-identity rendezvous entries `(q, r) -> (s, t)`.
    pub rendezvous: Vec<((StateId, StateId), (StateId, StateId))>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok<'a> {
    Label(&'a str),
    Arrow,
    Comma,
    Semi,
    Eq,
}

struct Token<'a> {
    tok: Tok<'a>,
    col: usize,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Token<'_>>, ParseError> {
    let mut out = Vec::new();
    let idx: Vec<(usize, char)> = line.char_indices().collect();
    let mut i = 0;
    while i < idx.len() {
        let (b, c) = idx[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if line[b..].starts_with("->") {
            out.push(Token { tok: Tok::Arrow, col });
            i += 2;
            continue;
        }
        let punct = match c {
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            '[' | ']' => return Err(ParseError::new(lineno, col, format!("unexpected `{c}`"))),
            _ => None,
        };
        if let Some(t) = punct {
            out.push(Token { tok: t, col });
            i += 1;
            continue;
        }
        let start = b;
        let mut j = i;
        while j < idx.len() {
            let (bj, cj) = idx[j];
            if cj.is_whitespace()
                || matches!(cj, ',' | ';' | '=' | '[' | ']')
                || line[bj..].starts_with("->")
            {
                break;
            }
            j += 1;
        }
        let end = if j < idx.len() { idx[j].0 } else { line.len() };
        out.push(Token {
            tok: Tok::Label(&line[start..end]),
            col,
        });
        i = j;
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    States,
    Globals,
    Inputs,
    Accepting,
    Transitions,
    Transitions2,
    Rendezvous,
}

impl Section {
    fn from_name(s: &str) -> Option<Section> {
        Some(match s {
            "states" => Section::States,
            "globals" => Section::Globals,
            "inputs" => Section::Inputs,
            "accepting" => Section::Accepting,
            "transitions" => Section::Transitions,
            "transitions2" => Section::Transitions2,
            "rendezvous" => Section::Rendezvous,
            _ => return None,
        })
    }
}

type Pos = (usize, usize);

struct Parser {
    b: ProtocolBuilder,
    state_pos: HashMap<String, Pos>,
    trans_pos: HashMap<StateId, Pos>,
    globals: Option<Vec<String>>,
    delta2: Option<Vec<Option<BroadcastTransition>>>,
    trans2_pos: HashMap<StateId, Pos>,
    rendezvous: Vec<((StateId, StateId), (StateId, StateId))>,
    rdv_seen: HashMap<(StateId, StateId), Pos>,
}

impl Parser {
    fn state_ref(&self, name: &str, lineno: usize, col: usize) -> Result<StateId, ParseError> {
        self.b
            .lookup(name)
            .ok_or_else(|| ParseError::new(lineno, col, format!("undeclared state `{name}`")))
    }

    fn label<'a>(toks: &[Token<'a>], i: usize, lineno: usize, what: &str) -> Result<&'a str, ParseError> {
        match toks.get(i) {
            Some(Token {
                tok: Tok::Label(l), ..
            }) => Ok(l),
            Some(t) => Err(ParseError::new(lineno, t.col, format!("expected {what}"))),
            None => Err(ParseError::new(
                lineno,
                toks.last().map_or(1, |t| t.col + 1),
                format!("expected {what}"),
            )),
        }
    }

    fn expect(toks: &[Token<'_>], i: usize, tok: Tok<'_>, lineno: usize, what: &str) -> Result<(), ParseError> {
        match toks.get(i) {
            Some(t) if t.tok == tok => Ok(()),
            Some(t) => Err(ParseError::new(lineno, t.col, format!("expected {what}"))),
            None => Err(ParseError::new(
                lineno,
                toks.last().map_or(1, |t| t.col + 1),
                format!("expected {what}"),
            )),
        }
    }

    fn transition_line(
        &self,
        toks: &[Token<'_>],
        lineno: usize,
    ) -> Result<(StateId, BroadcastTransition), ParseError> {
        let q = Self::label(toks, 0, lineno, "state")?;
        let q = self.state_ref(q, lineno, toks[0].col)?;
        Self::expect(toks, 1, Tok::Arrow, lineno, "`->`")?;
        let r = Self::label(toks, 2, lineno, "successor state")?;
        let r = self.state_ref(r, lineno, toks[2].col)?;
        let mut response: Vec<(StateId, StateId)> = Vec::new();
        let mut i = 3;
        if i < toks.len() {
            Self::expect(toks, i, Tok::Semi, lineno, "`;`")?;
            i += 1;
            loop {
                let s = Self::label(toks, i, lineno, "state")?;
                let s = self.state_ref(s, lineno, toks[i].col)?;
                Self::expect(toks, i + 1, Tok::Arrow, lineno, "`->`")?;
                let t = Self::label(toks, i + 2, lineno, "state")?;
                let t = self.state_ref(t, lineno, toks[i + 2].col)?;
                if response.iter().any(|&(from, _)| from == s) {
                    return Err(ParseError::new(lineno, toks[i].col, "state mapped twice"));
                }
                response.push((s, t));
                i += 3;
                if i >= toks.len() {
                    break;
                }
                Self::expect(toks, i, Tok::Comma, lineno, "`,`")?;
                i += 1;
            }
        }
        response.retain(|(s, t)| s != t);
        response.sort();
        Ok((
            q,
            BroadcastTransition {
                successor: r,
                response,
            },
        ))
    }

    fn line(&mut self, sec: Section, toks: &[Token<'_>], lineno: usize) -> Result<(), ParseError> {
        match sec {
            Section::States => {
                for t in toks {
                    let Tok::Label(l) = t.tok else {
                        return Err(ParseError::new(lineno, t.col, "expected state label"));
                    };
                    if self.b.lookup(l).is_some() {
                        return Err(ParseError::new(lineno, t.col, format!("duplicate state `{l}`")));
                    }
                    self.b.state(l);
                    self.state_pos.insert(l.to_string(), (lineno, t.col));
                }
            }
            Section::Globals => {
                let g = self.globals.get_or_insert_with(Vec::new);
                for t in toks {
                    let Tok::Label(l) = t.tok else {
                        return Err(ParseError::new(lineno, t.col, "expected global label"));
                    };
                    if g.iter().any(|x| x == l) {
                        return Err(ParseError::new(lineno, t.col, format!("duplicate global `{l}`")));
                    }
                    g.push(l.to_string());
                }
            }
            Section::Inputs => {
                let sym = Self::label(toks, 0, lineno, "input symbol")?;
                Self::expect(toks, 1, Tok::Eq, lineno, "`=`")?;
                let q = Self::label(toks, 2, lineno, "state")?;
                let q = self.state_ref(q, lineno, toks[2].col)?;
                if toks.len() > 3 {
                    return Err(ParseError::new(lineno, toks[3].col, "trailing input"));
                }
                if self.b.has_input(sym) {
                    return Err(ParseError::new(lineno, toks[0].col, format!("duplicate symbol `{sym}`")));
                }
                self.b.input(sym, q);
            }
            Section::Accepting => {
                for t in toks {
                    let Tok::Label(l) = t.tok else {
                        return Err(ParseError::new(lineno, t.col, "expected state label"));
                    };
                    let q = self.state_ref(l, lineno, t.col)?;
                    self.b.accept(q);
                }
            }
            Section::Transitions => {
                let (q, t) = self.transition_line(toks, lineno)?;
                if self.trans_pos.insert(q, (lineno, toks[0].col)).is_some() {
                    return Err(ParseError::new(lineno, toks[0].col, "second transition for state"));
                }
                self.b.transition(q, t.successor, t.response);
            }
            Section::Transitions2 => {
                let (q, t) = self.transition_line(toks, lineno)?;
                if self.trans2_pos.insert(q, (lineno, toks[0].col)).is_some() {
                    return Err(ParseError::new(lineno, toks[0].col, "second transition for state"));
                }
                let n = self.b.num_states();
                let d = self.delta2.get_or_insert_with(|| vec![None; n]);
                d.resize(n, None);
                d[q.index()] = Some(t);
            }
            Section::Rendezvous => {
                let names = [
                    Self::label(toks, 0, lineno, "state")?,
                    Self::label(toks, 1, lineno, "state")?,
                ];
                Self::expect(toks, 2, Tok::Arrow, lineno, "`->`")?;
                let outs = [
                    Self::label(toks, 3, lineno, "state")?,
                    Self::label(toks, 4, lineno, "state")?,
                ];
                if toks.len() > 5 {
                    return Err(ParseError::new(lineno, toks[5].col, "trailing input"));
                }
                let q = self.state_ref(names[0], lineno, toks[0].col)?;
                let r = self.state_ref(names[1], lineno, toks[1].col)?;
                let s = self.state_ref(outs[0], lineno, toks[3].col)?;
                let t = self.state_ref(outs[1], lineno, toks[4].col)?;
                if self.rdv_seen.insert((q, r), (lineno, toks[0].col)).is_some() {
                    return Err(ParseError::new(lineno, toks[0].col, "pair mapped twice"));
                }
                if (q, r) != (s, t) {
                    self.rendezvous.push(((q, r), (s, t)));
                }
            }
        }
        Ok(())
    }
}

/// Parses a file that may contain extension sections.
pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    let mut p = Parser {
        b: ProtocolBuilder::new(),
        state_pos: HashMap::new(),
        trans_pos: HashMap::new(),
        globals: None,
        delta2: None,
        trans2_pos: HashMap::new(),
        rendezvous: Vec::new(),
        rdv_seen: HashMap::new(),
    };
    let mut section: Option<Section> = None;
    let mut seen: Vec<Section> = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = raw.split('#').next().unwrap_or("");
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('[') {
            let col = line.find('[').map_or(1, |b| line[..b].chars().count() + 1);
            let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) else {
                return Err(ParseError::new(lineno, col, "malformed section header"));
            };
            let Some(sec) = Section::from_name(name.trim()) else {
                return Err(ParseError::new(lineno, col, format!("unknown section `{}`", name.trim())));
            };
            if seen.contains(&sec) {
                return Err(ParseError::new(lineno, col, format!("section `{}` repeated", name.trim())));
            }
            if sec != Section::States && sec != Section::Globals && !seen.contains(&Section::States) {
                return Err(ParseError::new(lineno, col, "`[states]` must come first"));
            }
            seen.push(sec);
            section = Some(sec);
            continue;
        }
        let Some(sec) = section else {
            return Err(ParseError::new(lineno, 1, "content before the first section"));
        };
        let toks = tokenize(line, lineno)?;
        p.line(sec, &toks, lineno)?;
    }
    if p.b.num_states() == 0 {
        return Err(ParseError::new(last_line.max(1), 1, "no states declared"));
    }
    if let Some(g) = &p.globals {
        p.b.declare_globals(g.iter().cloned());
    }
    let spec = p.b.clone().build().map_err(|e| {
        let pos = match &e {
            SpecError::BadLabel(l) | SpecError::DuplicateState(l) | SpecError::NotFactored(l) => {
                p.state_pos.get(l).copied()
            }
            SpecError::GlobalViolation { q, .. } => p
                .b
                .lookup(q)
                .and_then(|id| p.trans_pos.get(&id).copied()),
            _ => None,
        };
        let (line, col) = pos.unwrap_or((last_line.max(1), 1));
        ParseError::new(line, col, e.to_string())
    })?;
    let transitions2 = p.delta2.map(|d| {
        let n = spec.num_states();
        (0..n)
            .map(|i| {
                d.get(i)
                    .cloned()
                    .flatten()
                    .unwrap_or_else(|| BroadcastTransition::silent(StateId(i as u32)))
            })
            .collect()
    });
    let mut rendezvous = p.rendezvous;
    rendezvous.sort();
    Ok(Document {
        spec,
        transitions2,
        rendezvous,
    })
}

/// Parses a plain protocol file; extension sections are rejected.
pub fn parse_protocol(text: &str) -> Result<ProtocolSpec, ParseError> {
    let doc = parse_document(text)?;
    if doc.transitions2.is_some() || !doc.rendezvous.is_empty() {
        return Err(ParseError::new(
            1,
            1,
            "extension sections are not allowed in a plain protocol",
        ));
    }
    Ok(doc.spec)
}

fn write_transition(out: &mut String, p: &ProtocolSpec, q: StateId, t: &BroadcastTransition) -> fmt::Result {
    write!(out, "{} -> {}", p.label_of(q), p.label_of(t.successor))?;
    for (i, &(s, u)) in t.response.iter().enumerate() {
        out.push_str(if i == 0 { " ; " } else { ", " });
        write!(out, "{} -> {}", p.label_of(s), p.label_of(u))?;
    }
    out.push('\n');
    Ok(())
}

fn write_base(out: &mut String, p: &ProtocolSpec) -> fmt::Result {
    out.push_str("[states]\n");
    for q in p.states() {
        writeln!(out, "{}", p.label_of(q))?;
    }
    if let Some(g) = p.globals() {
        out.push_str("[globals]\n");
        writeln!(out, "{}", g.join(" "))?;
    }
    out.push_str("[inputs]\n");
    for sym in p.alphabet() {
        writeln!(out, "{sym} = {}", p.label_of(p.input_map()[sym]))?;
    }
    out.push_str("[accepting]\n");
    for q in p.accepting_states() {
        writeln!(out, "{}", p.label_of(q))?;
    }
    out.push_str("[transitions]\n");
    for q in p.states() {
        if !p.transition_is_silent(q) {
            write_transition(out, p, q, p.transition(q))?;
        }
    }
    Ok(())
}

pub fn print_protocol(p: &ProtocolSpec) -> String {
    let mut out = String::new();
    write_base(&mut out, p).expect("writing to a String");
    out
}

pub fn print_document(d: &Document) -> String {
    let mut out = String::new();
    write_base(&mut out, &d.spec).expect("writing to a String");
    if let Some(t2) = &d.transitions2 {
        out.push_str("[transitions2]\n");
        for (i, t) in t2.iter().enumerate() {
            let q = StateId(i as u32);
            if !(t.successor == q && t.response.is_empty()) {
                write_transition(&mut out, &d.spec, q, t).expect("writing to a String");
            }
        }
    }
    if !d.rendezvous.is_empty() {
        out.push_str("[rendezvous]\n");
        for &((q, r), (s, t)) in &d.rendezvous {
            let l = |x| d.spec.label_of(x);
            let _ = writeln!(out, "{} {} -> {} {}", l(q), l(r), l(s), l(t));
        }
    }
    out
}
