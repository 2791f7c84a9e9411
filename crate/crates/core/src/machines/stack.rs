//! Randomised multi-stack machines over `{0, 1}`.

use std::collections::HashMap;
use std::fmt::{Debug, Write as _};
use std::hash::Hash;

use rand::Rng;

use super::tm::{binary_digits, BLANK};
use super::{MachineParseError, Outcome};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StackOp<S> {
    Push { stack: usize, bit: bool, next: S },
    /// Goes to `on0`/`on1` after popping that bit, or `on_empty`.
    Pop { stack: usize, on0: S, on1: S, on_empty: S },
}

impl<S> StackOp<S> {
    pub fn map<T>(self, mut f: impl FnMut(S) -> T) -> StackOp<T> {
        match self {
            StackOp::Push { stack, bit, next } => StackOp::Push { stack, bit, next: f(next) },
            StackOp::Pop { stack, on0, on1, on_empty } => StackOp::Pop {
                stack,
                on0: f(on0),
                on1: f(on1),
                on_empty: f(on_empty),
            },
        }
    }
}

/// A stack machine, possibly with structured states.
///
/// Inputs are loaded by feeding the binary input tape `□(x)₂□` preceded by
/// `τ(0) = □`, bottom cell first, through [`StackProgram::load`]. Each call
/// returns the pushes that encode one tape cell.
pub trait StackProgram: Sync {
    type State: Clone + Ord + Hash + Debug + Send + Sync;
    type Loader: Clone + Ord + Hash + Debug + Send + Sync;

    fn stacks(&self) -> usize;
    fn loader(&self) -> Self::Loader;
    fn load(&self, l: &Self::Loader, sym: u32) -> (Vec<(usize, bool)>, Self::Loader);
    /// Control state once loading is done.
    fn start(&self, l: &Self::Loader) -> Self::State;
    fn halted(&self, q: &Self::State) -> Option<bool>;
    fn op(&self, branch: usize, q: &Self::State) -> StackOp<Self::State>;

    fn label(&self, q: &Self::State) -> String {
        format!("{q:?}")
    }
}

impl<P: StackProgram + ?Sized> StackProgram for &P {
    type State = P::State;
    type Loader = P::Loader;
    fn stacks(&self) -> usize {
        (**self).stacks()
    }
    fn loader(&self) -> P::Loader {
        (**self).loader()
    }
    fn load(&self, l: &P::Loader, sym: u32) -> (Vec<(usize, bool)>, P::Loader) {
        (**self).load(l, sym)
    }
    fn start(&self, l: &P::Loader) -> P::State {
        (**self).start(l)
    }
    fn halted(&self, q: &P::State) -> Option<bool> {
        (**self).halted(q)
    }
    fn op(&self, b: usize, q: &P::State) -> StackOp<P::State> {
        (**self).op(b, q)
    }
    fn label(&self, q: &P::State) -> String {
        (**self).label(q)
    }
}

/// Cells of the binary input tape, bottom of the stack first:
/// `τ(N+2), τ(N+1), …, τ(1), τ(0)`.
pub fn input_stream(x: u64) -> Vec<u32> {
    let mut s = vec![BLANK];
    s.extend(binary_digits(x).into_iter().rev());
    s.extend([BLANK, BLANK]);
    s
}

/// Bits of a `w`-bit symbol code, top first: `□` is all ones, every other
/// symbol is its own index.
pub fn code_bits(sym: u32, w: u32) -> Vec<bool> {
    let c = if sym == BLANK { (1 << w) - 1 } else { sym };
    (0..w).rev().map(|i| c >> i & 1 == 1).collect()
}

/// Inverse of [`code_bits`] on a value read top first.
pub fn decode(bits: u32, w: u32) -> u32 {
    if bits == (1 << w) - 1 {
        BLANK
    } else {
        bits
    }
}

/// Smallest `w` with `symbols ≤ 2^w − 1`, so `□ ↦ 1…1` never collides.
pub fn code_width(symbols: u32) -> u32 {
    let mut w = 1;
    while (1u64 << w) - 1 < symbols as u64 {
        w += 1;
    }
    w
}

/// Pushes that put `bits` (top first) on `stack`.
pub fn push_bits(stack: usize, bits: &[bool]) -> Vec<(usize, bool)> {
    bits.iter().rev().map(|&b| (stack, b)).collect()
}

/// Stacks are stored bottom first; index 0 of the public view is the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stacks(Vec<Vec<bool>>);

impl Stacks {
    pub fn empty(l: usize) -> Stacks {
        Stacks(vec![Vec::new(); l])
    }

    /// From contents written top first.
    pub fn from_top_first(s: Vec<Vec<bool>>) -> Stacks {
        Stacks(s.into_iter().map(|mut v| {
            v.reverse();
            v
        }).collect())
    }

    pub fn top_first(&self, k: usize) -> Vec<bool> {
        self.0[k].iter().rev().copied().collect()
    }

    pub fn push(&mut self, k: usize, b: bool) {
        self.0[k].push(b);
    }

    pub fn pop(&mut self, k: usize) -> Option<bool> {
        self.0[k].pop()
    }

    pub fn len(&self, k: usize) -> usize {
        self.0[k].len()
    }

    pub fn max_len(&self) -> usize {
        self.0.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn count(&self) -> usize {
        self.0.len()
    }
}

/// Control state and stacks after loading `x`.
pub fn load_input<P: StackProgram>(p: &P, x: u64) -> (P::State, Stacks) {
    let mut stacks = Stacks::empty(p.stacks());
    let mut l = p.loader();
    for sym in input_stream(x) {
        let (pushes, l2) = p.load(&l, sym);
        for (k, b) in pushes {
            stacks.push(k, b);
        }
        l = l2;
    }
    (p.start(&l), stacks)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackRun<S> {
    pub outcome: Outcome,
    pub steps: u64,
    /// Longest any single stack got.
    pub max_len: usize,
    pub state: S,
    pub stacks: Stacks,
}

pub fn run_stack_machine<P: StackProgram, R: Rng + ?Sized>(
    p: &P,
    mut q: P::State,
    mut stacks: Stacks,
    rng: &mut R,
    max_steps: u64,
) -> StackRun<P::State> {
    let mut steps = 0;
    let mut max_len = stacks.max_len();
    let outcome = loop {
        if let Some(b) = p.halted(&q) {
            break Outcome::of_bool(b);
        }
        if steps >= max_steps {
            break Outcome::Timeout;
        }
        q = match p.op(rng.random_range(0..2), &q) {
            StackOp::Push { stack, bit, next } => {
                stacks.push(stack, bit);
                max_len = max_len.max(stacks.len(stack));
                next
            }
            StackOp::Pop { stack, on0, on1, on_empty } => match stacks.pop(stack) {
                Some(false) => on0,
                Some(true) => on1,
                None => on_empty,
            },
        };
        steps += 1;
    };
    StackRun {
        outcome,
        steps,
        max_len,
        state: q,
        stacks,
    }
}

pub const START: usize = 0;
pub const ACCEPT: usize = 1;
pub const REJECT: usize = 2;

/// Explicit stack machine; `start`, `accept` and `reject` are states 0, 1
/// and 2. Halting states pop stack 0 and stay put. The input is loaded with
/// 2-bit codes on stack 0: `0 ↦ 01`, `1 ↦ 10`, `□ ↦ 11`, top first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackMachine {
    stacks: usize,
    states: Vec<String>,
    table: [Vec<StackOp<usize>>; 2],
}

impl StackMachine {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.states[q]
    }

    fn halting_row(q: usize) -> StackOp<usize> {
        StackOp::Pop {
            stack: 0,
            on0: q,
            on1: q,
            on_empty: q,
        }
    }
}

impl StackProgram for StackMachine {
    type State = usize;
    type Loader = ();

    fn stacks(&self) -> usize {
        self.stacks
    }

    fn loader(&self) {}

    fn load(&self, _: &(), sym: u32) -> (Vec<(usize, bool)>, ()) {
        (push_bits(0, &code_bits(sym, 2)), ())
    }

    fn start(&self, _: &()) -> usize {
        START
    }

    fn halted(&self, q: &usize) -> Option<bool> {
        match *q {
            ACCEPT => Some(true),
            REJECT => Some(false),
            _ => None,
        }
    }

    fn op(&self, branch: usize, q: &usize) -> StackOp<usize> {
        self.table[branch][*q].clone()
    }

    fn label(&self, q: &usize) -> String {
        self.states[*q].clone()
    }
}

/// Text format:
///
/// ```text
/// stacks 2
/// start = push 1 1 back
/// back = pop 1 reject accept reject ; push 2 0 back
/// ```
///
/// `push k b next` and `pop k on0 on1 on_empty`, stacks 1-based. A second
/// row after `;` gives `δ2`. States without rows reject.
pub fn parse_stack_machine(text: &str) -> Result<StackMachine, MachineParseError> {
    let err = |line: usize, m: &str| MachineParseError {
        line,
        message: m.to_string(),
    };
    let mut stacks = None;
    let mut states = super::Names::new(&["start", "accept", "reject"]);
    let mut rows: Vec<(usize, usize, [StackOp<usize>; 2])> = Vec::new();
    let id = |s: &str, states: &mut super::Names| states.id(s);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(v) = body.strip_prefix("stacks ") {
            stacks = Some(v.trim().parse::<usize>().map_err(|_| err(line, "bad stack count"))?);
            continue;
        }
        let l = stacks.ok_or_else(|| err(line, "`stacks` must come first"))?;
        let (lhs, rhs) = body.split_once('=').ok_or_else(|| err(line, "expected `=`"))?;
        let q = id(lhs.trim(), &mut states);
        let mut ops = Vec::new();
        for alt in rhs.split(';') {
            let f: Vec<&str> = alt.split_whitespace().collect();
            let stack = f
                .get(1)
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&k| (1..=l).contains(&k))
                .ok_or_else(|| err(line, "stack index out of range"))?
                - 1;
            let op = match (f.first().copied(), f.len()) {
                (Some("push"), 4) => StackOp::Push {
                    stack,
                    bit: match f[2] {
                        "0" => false,
                        "1" => true,
                        _ => return Err(err(line, "pushed bit must be 0 or 1")),
                    },
                    next: id(f[3], &mut states),
                },
                (Some("pop"), 5) => StackOp::Pop {
                    stack,
                    on0: id(f[2], &mut states),
                    on1: id(f[3], &mut states),
                    on_empty: id(f[4], &mut states),
                },
                _ => return Err(err(line, "expected `push k b q` or `pop k q0 q1 qe`")),
            };
            ops.push(op);
        }
        if ops.len() > 2 {
            return Err(err(line, "at most two rows per state"));
        }
        if q == ACCEPT || q == REJECT {
            return Err(err(line, "halting states have fixed rows"));
        }
        let second = ops.get(1).cloned().unwrap_or_else(|| ops[0].clone());
        rows.push((line, q, [ops[0].clone(), second]));
    }
    let stacks = stacks.ok_or_else(|| err(0, "missing `stacks`"))?;
    if stacks == 0 {
        return Err(err(0, "need at least one stack"));
    }
    let mut table: [Vec<StackOp<usize>>; 2] = std::array::from_fn(|_| {
        (0..states.len())
            .map(|q| {
                if q == ACCEPT || q == REJECT {
                    StackMachine::halting_row(q)
                } else {
                    StackMachine::halting_row(REJECT)
                }
            })
            .collect()
    });
    let mut seen = HashMap::new();
    for (line, q, pair) in rows {
        if seen.insert(q, line).is_some() {
            return Err(err(line, "duplicate state"));
        }
        for (b, op) in pair.into_iter().enumerate() {
            table[b][q] = op;
        }
    }
    Ok(StackMachine {
        stacks,
        states: states.names,
        table,
    })
}

pub fn print_stack_machine(m: &StackMachine) -> String {
    let mut out = format!("stacks {}\n", m.stacks);
    let row = |op: &StackOp<usize>| match op {
        StackOp::Push { stack, bit, next } => format!("push {} {} {}", stack + 1, *bit as u8, m.states[*next]),
        StackOp::Pop { stack, on0, on1, on_empty } => format!(
            "pop {} {} {} {}",
            stack + 1,
            m.states[*on0],
            m.states[*on1],
            m.states[*on_empty]
        ),
    };
    for q in 0..m.states.len() {
        if q == ACCEPT || q == REJECT {
            continue;
        }
        let (a, b) = (&m.table[0][q], &m.table[1][q]);
        if a == b {
            let _ = writeln!(out, "{} = {}", m.states[q], row(a));
        } else {
            let _ = writeln!(out, "{} = {} ; {}", m.states[q], row(a), row(b));
        }
    }
    out
}
