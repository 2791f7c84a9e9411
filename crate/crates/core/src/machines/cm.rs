//! Multiplicative counter machines.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::{self, Debug, Write as _};
use std::hash::Hash;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use super::{MachineParseError, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmd {
    Mul2,
    Inc,
    Divmod2,
    IsZero,
}

impl Cmd {
    pub const ALL: [Cmd; 4] = [Cmd::Mul2, Cmd::Inc, Cmd::Divmod2, Cmd::IsZero];

    pub fn name(self) -> &'static str {
        match self {
            Cmd::Mul2 => "mul2",
            Cmd::Inc => "inc",
            Cmd::Divmod2 => "divmod2",
            Cmd::IsZero => "iszero",
        }
    }
}

impl fmt::Display for Cmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Cmd {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Cmd::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// The step-execution function: `(b, x')` stands for `(done_b, x')`.
pub fn cm_step(cmd: Cmd, x: u64) -> (bool, u64) {
    match cmd {
        Cmd::Mul2 => (false, 2 * x),
        Cmd::Inc => (false, x + 1),
        Cmd::Divmod2 => (x % 2 == 1, x / 2),
        Cmd::IsZero => (x > 0, x),
    }
}

/// One row of a transition function: apply `cmd` to `counter` and continue
/// in `next[b]` on `done_b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CmOp<S> {
    pub counter: usize,
    pub cmd: Cmd,
    pub next: [S; 2],
}

/// A counter machine given by its transition functions, possibly with a
/// structured state space that is never enumerated.
pub trait CounterProgram: Sync {
    type State: Clone + Ord + Hash + Debug + Send + Sync;

    fn counters(&self) -> usize;

    /// Number of input counters; inputs occupy counters `0..inputs()`.
    fn inputs(&self) -> usize;

    fn init(&self) -> Self::State;

    /// `Some(b)` for the halting state `b`.
    fn halted(&self, q: &Self::State) -> Option<bool>;

    /// Row of `T_{branch+1}` at `q`. Halting states map to
    /// `(0, iszero, q, q)`.
    fn op(&self, branch: usize, q: &Self::State) -> CmOp<Self::State>;

    fn label(&self, q: &Self::State) -> String {
        format!("{q:?}")
    }
}

impl<P: CounterProgram + ?Sized> CounterProgram for &P {
    type State = P::State;
    fn counters(&self) -> usize {
        (**self).counters()
    }
    fn inputs(&self) -> usize {
        (**self).inputs()
    }
    fn init(&self) -> P::State {
        (**self).init()
    }
    fn halted(&self, q: &P::State) -> Option<bool> {
        (**self).halted(q)
    }
    fn op(&self, branch: usize, q: &P::State) -> CmOp<P::State> {
        (**self).op(branch, q)
    }
    fn label(&self, q: &P::State) -> String {
        (**self).label(q)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CmConfig<S> {
    pub state: S,
    pub counters: Vec<u64>,
}

impl<S> CmConfig<S> {
    /// `(init, input, 0, …, 0)`.
    pub fn initial<P: CounterProgram<State = S>>(p: &P, input: &[u64]) -> Result<Self, CmError> {
        if input.len() > p.inputs() {
            return Err(CmError::ArityMismatch {
                expected: p.inputs(),
                got: input.len(),
            });
        }
        let mut counters = vec![0; p.counters()];
        counters[..input.len()].copy_from_slice(input);
        Ok(CmConfig {
            state: p.init(),
            counters,
        })
    }
}

/// Applies `T_{branch+1}` in place; returns the counter touched.
pub fn step_config<P: CounterProgram>(p: &P, c: &mut CmConfig<P::State>, branch: usize) -> usize {
    let op = p.op(branch, &c.state);
    let (b, x) = cm_step(op.cmd, c.counters[op.counter]);
    c.counters[op.counter] = x;
    let [n0, n1] = op.next;
    c.state = if b { n1 } else { n0 };
    op.counter
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CmError {
    #[error("machine takes {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("counter {counter} reached {value} > bound {bound} at step {step}")]
    CounterOverflow {
        counter: usize,
        value: u64,
        bound: u64,
        step: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CmRun<S> {
    pub outcome: Outcome,
    pub steps: u64,
    pub max_counter: u64,
    pub last: CmConfig<S>,
}

/// Random execution: every step picks `T1` or `T2` with a fair coin.
/// With `bound` set, a counter above it is an error.
pub fn run_cm<P: CounterProgram, R: Rng + ?Sized>(
    p: &P,
    input: &[u64],
    rng: &mut R,
    max_steps: u64,
    bound: Option<u64>,
) -> Result<CmRun<P::State>, CmError> {
    let mut c = CmConfig::initial(p, input)?;
    let mut max_counter = c.counters.iter().copied().max().unwrap_or(0);
    let mut steps = 0;
    let outcome = loop {
        if let Some(b) = p.halted(&c.state) {
            break Outcome::of_bool(b);
        }
        if steps >= max_steps {
            break Outcome::Timeout;
        }
        let i = step_config(p, &mut c, rng.random_range(0..2));
        steps += 1;
        let v = c.counters[i];
        max_counter = max_counter.max(v);
        if let Some(bound) = bound {
            if v > bound {
                return Err(CmError::CounterOverflow {
                    counter: i,
                    value: v,
                    bound,
                    step: steps,
                });
            }
        }
    };
    Ok(CmRun {
        outcome,
        steps,
        max_counter,
        last: c,
    })
}

/// Explicit counter machine. States are named; `init`, `0` and `1` always
/// exist. Counters are numbered from 1 in the text format and from 0 in
/// the API.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterMachine {
    states: Vec<String>,
    counters: usize,
    inputs: usize,
    table: [Vec<CmOp<usize>>; 2],
}

pub const INIT: usize = 0;
pub const REJECT: usize = 1;
pub const ACCEPT: usize = 2;

impl CounterMachine {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.states[q]
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn row(&self, branch: usize, q: usize) -> &CmOp<usize> {
        &self.table[branch][q]
    }

    /// Tabulates the control states of `p` reachable from `init` under
    /// either transition function, ignoring counter values.
    pub fn from_program<P: CounterProgram>(p: &P, max_states: usize) -> Option<CounterMachine> {
        let mut index: HashMap<P::State, usize> = HashMap::new();
        let mut order: Vec<P::State> = Vec::new();
        let mut queue = VecDeque::new();
        let mut intern = |q: P::State, order: &mut Vec<P::State>, queue: &mut VecDeque<usize>| {
            *index.entry(q.clone()).or_insert_with(|| {
                order.push(q);
                queue.push_back(order.len() - 1);
                order.len() - 1
            })
        };
        intern(p.init(), &mut order, &mut queue);
        let mut rows: [BTreeMap<usize, CmOp<usize>>; 2] = [BTreeMap::new(), BTreeMap::new()];
        while let Some(i) = queue.pop_front() {
            if order.len() > max_states {
                return None;
            }
            let q = order[i].clone();
            if p.halted(&q).is_some() {
                continue;
            }
            for (branch, table) in rows.iter_mut().enumerate() {
                let op = p.op(branch, &q);
                let [a, b] = op.next;
                let a = intern(a, &mut order, &mut queue);
                let b = intern(b, &mut order, &mut queue);
                table.insert(
                    i,
                    CmOp {
                        counter: op.counter,
                        cmd: op.cmd,
                        next: [a, b],
                    },
                );
            }
        }
        // init, 0, 1 first
        let mut perm: Vec<usize> = Vec::with_capacity(order.len());
        let mut names = vec!["init".to_string(), "0".to_string(), "1".to_string()];
        let halted: Vec<Option<bool>> = order.iter().map(|q| p.halted(q)).collect();
        let mut fresh = 3;
        for (i, h) in halted.iter().enumerate() {
            perm.push(match (i, h) {
                (0, _) => INIT,
                (_, Some(false)) => REJECT,
                (_, Some(true)) => ACCEPT,
                _ => {
                    names.push(format!("s{fresh}"));
                    fresh += 1;
                    fresh - 1
                }
            });
        }
        let halt_row = |q: usize| CmOp {
            counter: 0,
            cmd: Cmd::IsZero,
            next: [q, q],
        };
        let mut table: [Vec<CmOp<usize>>; 2] = [
            (0..names.len()).map(halt_row).collect(),
            (0..names.len()).map(halt_row).collect(),
        ];
        for (branch, rows) in rows.iter().enumerate() {
            for (&i, op) in rows {
                table[branch][perm[i]] = CmOp {
                    counter: op.counter,
                    cmd: op.cmd,
                    next: [perm[op.next[0]], perm[op.next[1]]],
                };
            }
        }
        Some(CounterMachine {
            states: names,
            counters: p.counters(),
            inputs: p.inputs(),
            table,
        })
    }
}

impl CounterProgram for CounterMachine {
    type State = usize;

    fn counters(&self) -> usize {
        self.counters
    }

    fn inputs(&self) -> usize {
        self.inputs
    }

    fn init(&self) -> usize {
        INIT
    }

    fn halted(&self, q: &usize) -> Option<bool> {
        match *q {
            REJECT => Some(false),
            ACCEPT => Some(true),
            _ => None,
        }
    }

    fn op(&self, branch: usize, q: &usize) -> CmOp<usize> {
        self.table[branch][*q].clone()
    }

    fn label(&self, q: &usize) -> String {
        self.states[*q].clone()
    }
}

/// Text format:
///
/// ```text
/// counters 1
/// inputs 1
/// init = 1 iszero 0 half
/// half = 1 divmod2 init last
/// last = 1 iszero 1 0 ; 1 iszero 1 0
/// ```
///
/// A row is `counter command next0 [next1]`; an optional second row after
/// `;` gives `T2`, which otherwise equals `T1`. Rows for `0` and `1` may be
/// omitted.
pub fn parse_cm(text: &str) -> Result<CounterMachine, MachineParseError> {
    let mut counters = None;
    let mut inputs = None;
    let mut names: Vec<String> = vec!["init".into(), "0".into(), "1".into()];
    let mut index: HashMap<String, usize> = names.iter().cloned().zip(0..).collect();
    let mut rows: Vec<(usize, usize, [RawRow; 2])> = Vec::new();
    let err = |line: usize, m: String| MachineParseError { line, message: m };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(v) = body.strip_prefix("counters ") {
            counters = Some(v.trim().parse::<usize>().map_err(|e| err(line, e.to_string()))?);
            continue;
        }
        if let Some(v) = body.strip_prefix("inputs ") {
            inputs = Some(v.trim().parse::<usize>().map_err(|e| err(line, e.to_string()))?);
            continue;
        }
        let (state, rest) = body
            .split_once('=')
            .ok_or_else(|| err(line, "expected `state = row`".into()))?;
        let state = state.trim().to_string();
        let q = *index.entry(state.clone()).or_insert_with(|| {
            names.push(state);
            names.len() - 1
        });
        let mut parts = rest.split(';');
        let first = parse_row(parts.next().unwrap_or(""), line)?;
        let second = match parts.next() {
            Some(s) => parse_row(s, line)?,
            None => first.clone(),
        };
        if parts.next().is_some() {
            return Err(err(line, "at most two rows per state".into()));
        }
        rows.push((line, q, [first, second]));
    }
    let counters = counters.ok_or_else(|| err(0, "missing `counters`".into()))?;
    let inputs = inputs.unwrap_or(1);
    if inputs > counters {
        return Err(err(0, "more inputs than counters".into()));
    }
    let mut resolve = |name: &str| -> usize {
        *index.entry(name.to_string()).or_insert_with(|| {
            names.push(name.to_string());
            names.len() - 1
        })
    };
    let mut resolved: Vec<(usize, usize, [CmOp<usize>; 2])> = Vec::new();
    for (line, q, raw) in &rows {
        let mut ops = raw.clone().map(|r| CmOp {
            counter: r.counter,
            cmd: r.cmd,
            next: [0, 0],
        });
        for (op, r) in ops.iter_mut().zip(raw) {
            if op.counter == 0 || op.counter > counters {
                return Err(err(*line, format!("counter {} out of range", op.counter)));
            }
            op.counter -= 1;
            let a = resolve(&r.next[0]);
            let b = r.next.get(1).map_or(a, |s| resolve(s));
            op.next = [a, b];
        }
        resolved.push((*line, *q, ops));
    }
    let halt_row = |q: usize| CmOp {
        counter: 0,
        cmd: Cmd::IsZero,
        next: [q, q],
    };
    let mut table: [Vec<Option<CmOp<usize>>>; 2] = [vec![None; names.len()], vec![None; names.len()]];
    for (line, q, ops) in resolved {
        if table[0][q].is_some() {
            return Err(err(line, format!("state `{}` defined twice", names[q])));
        }
        if (q == REJECT || q == ACCEPT) && ops.iter().any(|op| *op != halt_row(q)) {
            return Err(err(line, format!("halting state `{}` must be `1 iszero {0} {0}`", names[q])));
        }
        let [a, b] = ops;
        table[0][q] = Some(a);
        table[1][q] = Some(b);
    }
    for q in [REJECT, ACCEPT] {
        table[0][q].get_or_insert(halt_row(q));
        table[1][q].get_or_insert(halt_row(q));
    }
    let mut full: [Vec<CmOp<usize>>; 2] = [Vec::new(), Vec::new()];
    for (branch, t) in table.into_iter().enumerate() {
        for (q, row) in t.into_iter().enumerate() {
            full[branch].push(row.ok_or_else(|| err(0, format!("state `{}` has no row", names[q])))?);
        }
    }
    Ok(CounterMachine {
        states: names,
        counters,
        inputs,
        table: full,
    })
}

#[derive(Clone, Debug)]
struct RawRow {
    counter: usize,
    cmd: Cmd,
    next: Vec<String>,
}

fn parse_row(s: &str, line: usize) -> Result<RawRow, MachineParseError> {
    let err = |m: String| MachineParseError { line, message: m };
    let words: Vec<&str> = s.split_whitespace().collect();
    if !(3..=4).contains(&words.len()) {
        return Err(err("expected `counter command next0 [next1]`".into()));
    }
    Ok(RawRow {
        counter: words[0].parse().map_err(|_| err(format!("bad counter `{}`", words[0])))?,
        cmd: words[1].parse().map_err(err)?,
        next: words[2..].iter().map(|w| w.to_string()).collect(),
    })
}

pub fn print_cm(m: &CounterMachine) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "counters {}", m.counters);
    let _ = writeln!(out, "inputs {}", m.inputs);
    let row = |op: &CmOp<usize>| {
        format!(
            "{} {} {} {}",
            op.counter + 1,
            op.cmd,
            m.states[op.next[0]],
            m.states[op.next[1]]
        )
    };
    for q in 0..m.states.len() {
        if q == REJECT || q == ACCEPT {
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

/// Accepts `x` iff `x` is a power of two: halve while even, then check
/// that nothing is left.
pub fn power_of_two_cm() -> CounterMachine {
    parse_cm(
        "counters 1
         inputs 1
         init = 1 iszero 0 half
         half = 1 divmod2 init last
         last = 1 iszero 1 0",
    )
    .expect("well formed")
}
