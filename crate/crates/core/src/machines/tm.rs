//! Randomised Turing machines: single tape, and read-only input tape plus
//! work tape.

use std::collections::HashMap;
use std::fmt::{self, Debug, Write as _};
use std::hash::Hash;

use rand::Rng;
use thiserror::Error;

use super::{MachineParseError, Outcome};

/// Tape symbols are indices; the first three are fixed.
pub const BLANK: u32 = 0;
pub const ZERO: u32 = 1;
pub const ONE: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    L,
    S,
    R,
}

impl Move {
    pub fn delta(self) -> i64 {
        match self {
            Move::L => -1,
            Move::S => 0,
            Move::R => 1,
        }
    }

    fn parse(s: &str) -> Option<Move> {
        match s {
            "L" => Some(Move::L),
            "S" => Some(Move::S),
            "R" => Some(Move::R),
            _ => None,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::L => "L",
            Move::S => "S",
            Move::R => "R",
        })
    }
}

/// A single-tape RTM, possibly with structured states.
pub trait TuringProgram: Sync {
    type State: Clone + Ord + Hash + Debug + Send + Sync;

    /// Size of the tape alphabet; symbols are `0..symbols()`.
    fn symbols(&self) -> u32;
    fn start(&self) -> Self::State;
    fn halted(&self, q: &Self::State) -> Option<bool>;
    /// `δ_{branch+1}(q, a)`.
    fn delta(&self, branch: usize, q: &Self::State, a: u32) -> (Self::State, u32, Move);

    /// States that signal the simulation left its space bound.
    fn fault(&self, _q: &Self::State) -> bool {
        false
    }

    fn label(&self, q: &Self::State) -> String {
        format!("{q:?}")
    }
}

/// An RTM with a read-only input tape over `{□, 0, 1}` and a work tape.
pub trait TwoTapeProgram: Sync {
    type State: Clone + Ord + Hash + Debug + Send + Sync;

    fn work_symbols(&self) -> u32;
    fn start(&self) -> Self::State;
    fn halted(&self, q: &Self::State) -> Option<bool>;
    /// `δ(q, read, work) = (q', work', read move, work move)`.
    fn delta(&self, branch: usize, q: &Self::State, read: u32, work: u32) -> (Self::State, u32, Move, Move);

    fn label(&self, q: &Self::State) -> String {
        format!("{q:?}")
    }
}

impl<P: TuringProgram + ?Sized> TuringProgram for &P {
    type State = P::State;
    fn symbols(&self) -> u32 {
        (**self).symbols()
    }
    fn start(&self) -> P::State {
        (**self).start()
    }
    fn halted(&self, q: &P::State) -> Option<bool> {
        (**self).halted(q)
    }
    fn delta(&self, b: usize, q: &P::State, a: u32) -> (P::State, u32, Move) {
        (**self).delta(b, q, a)
    }
    fn fault(&self, q: &P::State) -> bool {
        (**self).fault(q)
    }
    fn label(&self, q: &P::State) -> String {
        (**self).label(q)
    }
}

impl<P: TwoTapeProgram + ?Sized> TwoTapeProgram for &P {
    type State = P::State;
    fn work_symbols(&self) -> u32 {
        (**self).work_symbols()
    }
    fn start(&self) -> P::State {
        (**self).start()
    }
    fn halted(&self, q: &P::State) -> Option<bool> {
        (**self).halted(q)
    }
    fn delta(&self, b: usize, q: &P::State, r: u32, w: u32) -> (P::State, u32, Move, Move) {
        (**self).delta(b, q, r, w)
    }
    fn label(&self, q: &P::State) -> String {
        (**self).label(q)
    }
}

/// A tape `ℤ → Γ`, blank outside the stored cells.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tape {
    cells: HashMap<i64, u32>,
}

impl Tape {
    pub fn get(&self, i: i64) -> u32 {
        self.cells.get(&i).copied().unwrap_or(BLANK)
    }

    pub fn set(&mut self, i: i64, a: u32) {
        if a == BLANK {
            self.cells.remove(&i);
        } else {
            self.cells.insert(i, a);
        }
    }

    /// Cells `start, start+1, …` set to `word`.
    pub fn from_word(start: i64, word: &[u32]) -> Tape {
        let mut t = Tape::default();
        for (k, &a) in word.iter().enumerate() {
            t.set(start + k as i64, a);
        }
        t
    }
}

/// `τ(1)…τ(x+2) = □1^x□`, blank elsewhere.
pub fn unary_tape(x: u64) -> Tape {
    Tape::from_word(2, &vec![ONE; x as usize])
}

/// Binary digits of `x`, most significant first; `0` is `"0"`.
pub fn binary_digits(x: u64) -> Vec<u32> {
    if x == 0 {
        return vec![ZERO];
    }
    let bits = 64 - x.leading_zeros();
    (0..bits).rev().map(|i| if x >> i & 1 == 1 { ONE } else { ZERO }).collect()
}

/// `τ(1)…τ(N+2) = □(x)₂□`, blank elsewhere.
pub fn binary_tape(x: u64) -> Tape {
    Tape::from_word(2, &binary_digits(x))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TmError {
    #[error("simulation left its space bound in state {0}")]
    SpaceBound(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmRun {
    pub outcome: Outcome,
    pub steps: u64,
    /// Leftmost and rightmost head positions visited.
    pub span: (i64, i64),
}

pub fn run_tm<P: TuringProgram, R: Rng + ?Sized>(
    m: &P,
    mut tape: Tape,
    rng: &mut R,
    max_steps: u64,
) -> Result<TmRun, TmError> {
    let mut q = m.start();
    let mut head = 0i64;
    let mut span = (0, 0);
    let mut steps = 0;
    let outcome = loop {
        if let Some(b) = m.halted(&q) {
            break Outcome::of_bool(b);
        }
        if m.fault(&q) {
            return Err(TmError::SpaceBound(m.label(&q)));
        }
        if steps >= max_steps {
            break Outcome::Timeout;
        }
        let (q2, a, d) = m.delta(rng.random_range(0..2), &q, tape.get(head));
        tape.set(head, a);
        head += d.delta();
        span = (span.0.min(head), span.1.max(head));
        q = q2;
        steps += 1;
    };
    Ok(TmRun { outcome, steps, span })
}

/// Runs a two-tape machine on `x` encoded as unary.
pub fn run_two_tape<P: TwoTapeProgram, R: Rng + ?Sized>(
    m: &P,
    x: u64,
    rng: &mut R,
    max_steps: u64,
) -> TmRun {
    let input = unary_tape(x);
    let mut work = Tape::default();
    let mut q = m.start();
    let (mut i, mut j) = (0i64, 0i64);
    let mut span = (0, 0);
    let mut steps = 0;
    let outcome = loop {
        if let Some(b) = m.halted(&q) {
            break Outcome::of_bool(b);
        }
        if steps >= max_steps {
            break Outcome::Timeout;
        }
        let (q2, a, dr, dw) = m.delta(rng.random_range(0..2), &q, input.get(i), work.get(j));
        work.set(j, a);
        i += dr.delta();
        j += dw.delta();
        span = (span.0.min(j), span.1.max(j));
        q = q2;
        steps += 1;
    };
    TmRun { outcome, steps, span }
}

pub const START: usize = 0;
pub const ACCEPT: usize = 1;
pub const REJECT: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TmRow {
    pub next: usize,
    pub write: u32,
    /// Single tape uses `moves[0]`; two tapes use (read, work).
    pub moves: [Move; 2],
}

/// Explicit RTM. `start`, `accept` and `reject` are states 0, 1 and 2;
/// symbol 0 is written `_`. Rows are indexed by `(q, read)` for one tape
/// and `(q, read, work)` for two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rtm {
    pub two_tape: bool,
    states: Vec<String>,
    symbols: Vec<String>,
    table: [Vec<TmRow>; 2],
}

impl Rtm {
    fn width(&self) -> usize {
        if self.two_tape {
            3 * self.symbols.len()
        } else {
            self.symbols.len()
        }
    }

    fn index(&self, q: usize, read: u32, work: u32) -> usize {
        let s = self.symbols.len();
        if self.two_tape {
            q * 3 * s + read as usize * s + work as usize
        } else {
            q * s + read as usize
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.states[q]
    }

    pub fn row(&self, branch: usize, q: usize, read: u32, work: u32) -> TmRow {
        self.table[branch][self.index(q, read, work)]
    }

    /// Tabulates the states of `p` reachable from its start.
    pub fn from_program<P: TuringProgram>(p: &P, max_states: usize) -> Option<Rtm> {
        let s = p.symbols();
        let mut index: HashMap<P::State, usize> = HashMap::new();
        let mut order = vec![p.start()];
        index.insert(p.start(), 0);
        let mut rows: Vec<[Vec<(usize, u32, Move)>; 2]> = Vec::new();
        let mut next = 0;
        while next < order.len() {
            let q = order[next].clone();
            let mut here: [Vec<(usize, u32, Move)>; 2] = [Vec::new(), Vec::new()];
            if p.halted(&q).is_none() {
                for (branch, out) in here.iter_mut().enumerate() {
                    for a in 0..s {
                        let (q2, w, d) = p.delta(branch, &q, a);
                        let id = match index.get(&q2) {
                            Some(&id) => id,
                            None => {
                                if order.len() >= max_states {
                                    return None;
                                }
                                index.insert(q2.clone(), order.len());
                                order.push(q2);
                                order.len() - 1
                            }
                        };
                        out.push((id, w, d));
                    }
                }
            }
            rows.push(here);
            next += 1;
        }
        let mut perm = vec![0; order.len()];
        let mut names = vec!["start".to_string(), "accept".to_string(), "reject".to_string()];
        for (i, q) in order.iter().enumerate() {
            perm[i] = match (i, p.halted(q)) {
                (0, None) => START,
                (_, Some(true)) => ACCEPT,
                (_, Some(false)) => REJECT,
                _ => {
                    names.push(format!("s{}", names.len()));
                    names.len() - 1
                }
            };
        }
        let symbols: Vec<String> = (0..s).map(default_symbol_name).collect();
        let mut m = Rtm {
            two_tape: false,
            states: names,
            symbols,
            table: [Vec::new(), Vec::new()],
        };
        m.table = std::array::from_fn(|_| halting_rows(&m));
        for (i, r) in rows.iter().enumerate() {
            for (branch, out) in r.iter().enumerate() {
                for (a, &(q2, w, d)) in out.iter().enumerate() {
                    let k = m.index(perm[i], a as u32, 0);
                    m.table[branch][k] = TmRow {
                        next: perm[q2],
                        write: w,
                        moves: [d, Move::S],
                    };
                }
            }
        }
        Some(m)
    }
}

fn default_symbol_name(a: u32) -> String {
    match a {
        BLANK => "_".into(),
        ZERO => "0".into(),
        ONE => "1".into(),
        _ => format!("g{a}"),
    }
}

/// Every row `(q, a) ↦ (q, a, 0)`; missing rows of non-halting states are
/// later overwritten or sent to `reject`.
fn halting_rows(m: &Rtm) -> Vec<TmRow> {
    let mut rows = Vec::with_capacity(m.states.len() * m.width());
    for q in 0..m.states.len() {
        for k in 0..m.width() {
            let work = if m.two_tape { k % m.symbols.len() } else { k };
            let next = if q == ACCEPT || q == REJECT { q } else { REJECT };
            rows.push(TmRow {
                next,
                write: work as u32,
                moves: [Move::S, Move::S],
            });
        }
    }
    rows
}

impl TuringProgram for Rtm {
    type State = usize;

    fn symbols(&self) -> u32 {
        self.symbols.len() as u32
    }

    fn start(&self) -> usize {
        START
    }

    fn halted(&self, q: &usize) -> Option<bool> {
        match *q {
            ACCEPT => Some(true),
            REJECT => Some(false),
            _ => None,
        }
    }

    fn delta(&self, branch: usize, q: &usize, a: u32) -> (usize, u32, Move) {
        assert!(!self.two_tape, "two-tape machine used as single-tape");
        let r = self.row(branch, *q, a, 0);
        (r.next, r.write, r.moves[0])
    }

    fn label(&self, q: &usize) -> String {
        self.states[*q].clone()
    }
}

impl TwoTapeProgram for Rtm {
    type State = usize;

    fn work_symbols(&self) -> u32 {
        self.symbols.len() as u32
    }

    fn start(&self) -> usize {
        START
    }

    fn halted(&self, q: &usize) -> Option<bool> {
        <Self as TuringProgram>::halted(self, q)
    }

    fn delta(&self, branch: usize, q: &usize, read: u32, work: u32) -> (usize, u32, Move, Move) {
        assert!(self.two_tape, "single-tape machine used as two-tape");
        let r = self.row(branch, *q, read.min(ONE), work);
        (r.next, r.write, r.moves[0], r.moves[1])
    }

    fn label(&self, q: &usize) -> String {
        self.states[*q].clone()
    }
}

/// Text format:
///
/// ```text
/// tapes 2
/// symbols _ 0 1
/// start _ _ -> skip _ R S
/// ```
///
/// One-tape rows read `q a -> q' b m`; two-tape rows read
/// `q r w -> q' w' mr mw` with `r` from `_ 0 1`. A second row after `;`
/// gives `δ2`, otherwise `δ2 = δ1`. Missing rows go to `reject`.
pub fn parse_rtm(text: &str) -> Result<Rtm, MachineParseError> {
    let err = |line: usize, m: &str| MachineParseError {
        line,
        message: m.to_string(),
    };
    let mut two_tape = None;
    let mut symbols: Option<Vec<String>> = None;
    let mut states = super::Names::new(&["start", "accept", "reject"]);
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(v) = body.strip_prefix("tapes ") {
            two_tape = Some(match v.trim() {
                "1" => false,
                "2" => true,
                _ => return Err(err(line, "tapes must be 1 or 2")),
            });
        } else if let Some(v) = body.strip_prefix("symbols ") {
            let s: Vec<String> = v.split_whitespace().map(String::from).collect();
            if s.len() < 3 || s[0] != "_" || s[1] != "0" || s[2] != "1" {
                return Err(err(line, "symbols must start with `_ 0 1`"));
            }
            symbols = Some(s);
        } else {
            rows.push((line, body.split(';').map(|r| r.trim().to_string()).collect()));
        }
    }
    let two_tape = two_tape.unwrap_or(false);
    let symbols = symbols.unwrap_or_else(|| vec!["_".into(), "0".into(), "1".into()]);
    let sym = |s: &str, line: usize| -> Result<u32, MachineParseError> {
        symbols
            .iter()
            .position(|x| x == s)
            .map(|i| i as u32)
            .ok_or_else(|| err(line, &format!("unknown symbol `{s}`")))
    };
    let mut state = |s: &str| states.id(s);
    type Parsed = (usize, u32, u32, [TmRow; 2]);
    let mut parsed: Vec<(usize, Parsed)> = Vec::new();
    let heads = if two_tape { 2 } else { 1 };
    for (line, alts) in &rows {
        if alts.len() > 2 {
            return Err(err(*line, "at most two rows per line"));
        }
        let mut key = None;
        let mut out = Vec::new();
        for alt in alts {
            let (lhs, rhs) = alt.split_once("->").ok_or_else(|| err(*line, "expected `->`"))?;
            let l: Vec<&str> = lhs.split_whitespace().collect();
            let r: Vec<&str> = rhs.split_whitespace().collect();
            if l.len() != 1 + heads || r.len() != 2 + heads {
                return Err(err(*line, "wrong number of fields"));
            }
            let q = state(l[0]);
            let read = sym(l[1], *line)?;
            let work = if two_tape { sym(l[2], *line)? } else { 0 };
            if two_tape && read > ONE {
                return Err(err(*line, "input tape symbols are `_ 0 1`"));
            }
            let k = (q, read, work);
            if *key.get_or_insert(k) != k {
                return Err(err(*line, "both rows must have the same left side"));
            }
            let mut moves = [Move::S; 2];
            for (h, m) in moves.iter_mut().take(heads).enumerate() {
                *m = Move::parse(r[2 + h]).ok_or_else(|| err(*line, "moves are L, S or R"))?;
            }
            out.push(TmRow {
                next: state(r[0]),
                write: sym(r[1], *line)?,
                moves,
            });
        }
        let (q, read, work) = key.ok_or_else(|| err(*line, "empty row"))?;
        let second = *out.get(1).unwrap_or(&out[0]);
        parsed.push((*line, (q, read, work, [out[0], second])));
    }
    let mut m = Rtm {
        two_tape,
        states: states.names,
        symbols,
        table: [Vec::new(), Vec::new()],
    };
    m.table = std::array::from_fn(|_| halting_rows(&m));
    let mut seen = std::collections::HashSet::new();
    for (line, (q, read, work, pair)) in parsed {
        if q == ACCEPT || q == REJECT {
            return Err(err(line, "halting states have fixed rows"));
        }
        if !seen.insert((q, read, work)) {
            return Err(err(line, "duplicate row"));
        }
        let k = m.index(q, read, work);
        for (branch, row) in pair.into_iter().enumerate() {
            m.table[branch][k] = row;
        }
    }
    Ok(m)
}

pub fn print_rtm(m: &Rtm) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tapes {}", if m.two_tape { 2 } else { 1 });
    let _ = writeln!(out, "symbols {}", m.symbols.join(" "));
    let s = m.symbols.len();
    for q in 0..m.states.len() {
        if q == ACCEPT || q == REJECT {
            continue;
        }
        for k in 0..m.width() {
            let (read, work) = if m.two_tape { ((k / s) as u32, (k % s) as u32) } else { (k as u32, 0) };
            let rows = [m.table[0][m.index(q, read, work)], m.table[1][m.index(q, read, work)]];
            let lhs = if m.two_tape {
                format!("{} {} {}", m.states[q], m.symbols[read as usize], m.symbols[work as usize])
            } else {
                format!("{} {}", m.states[q], m.symbols[read as usize])
            };
            let rhs = |r: TmRow| {
                if m.two_tape {
                    format!("{} {} {} {}", m.states[r.next], m.symbols[r.write as usize], r.moves[0], r.moves[1])
                } else {
                    format!("{} {} {}", m.states[r.next], m.symbols[r.write as usize], r.moves[0])
                }
            };
            if rows[0] == rows[1] {
                let _ = writeln!(out, "{lhs} -> {}", rhs(rows[0]));
            } else {
                let _ = writeln!(out, "{lhs} -> {} ; {lhs} -> {}", rhs(rows[0]), rhs(rows[1]));
            }
        }
    }
    out
}

/// Two-tape machine accepting odd `x`: skip the two leading blanks, then
/// alternate between `even` and `odd` on every 1.
pub fn parity_rtm() -> Rtm {
    parse_rtm(
        "tapes 2
         symbols _ 0 1
         start _ _ -> skip _ R S
         skip _ _ -> even _ R S
         even 1 _ -> odd _ R S
         even _ _ -> reject _ S S
         odd 1 _ -> even _ R S
         odd _ _ -> accept _ S S",
    )
    .expect("well formed")
}

/// Like [`parity_rtm`], but `δ2` idles on every 1, so the running time is
/// random while the decision is not.
pub fn lazy_parity_rtm() -> Rtm {
    parse_rtm(
        "tapes 2
         symbols _ 0 1
         start _ _ -> skip _ R S
         skip _ _ -> even _ R S
         even 1 _ -> odd _ R S ; even 1 _ -> even _ S S
         even _ _ -> reject _ S S
         odd 1 _ -> even _ R S ; odd 1 _ -> odd _ S S
         odd _ _ -> accept _ S S",
    )
    .expect("well formed")
}
