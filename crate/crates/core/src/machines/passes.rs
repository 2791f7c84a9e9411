//! Reductions: unary two-tape RTM → binary single-tape RTM → two-stack
//! machine → space-split stack machine → counter machine.
//!
//! Every pass is lazy: it wraps its input and computes rows on demand, so
//! the product state spaces are never enumerated. Each pass makes its random
//! choice exactly once per simulated step; all other rows have `δ1 = δ2`.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::hash::Hash;

use super::cm::{CmOp, Cmd, CounterProgram};
use super::stack::{code_bits, code_width, decode, push_bits, StackOp, StackProgram};
use super::tm::{Move, TuringProgram, TwoTapeProgram, BLANK, ONE, ZERO};

// ---------------------------------------------------------------------------
// Unary to binary

/// One cell of the simulating machine's tape, split into tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cell {
    /// Binary input: `□`, `0` or `1`.
    input: u32,
    /// Digit of `|r|`, present on the cells `0..=N+1`.
    counter: Option<bool>,
    work: u32,
    /// Work head of the simulated machine.
    mark: bool,
    /// Cell 0.
    home: bool,
}

impl Cell {
    fn decode(a: u32, work: u32) -> Cell {
        let input = a % 3;
        let a = a / 3;
        let counter = match a % 3 {
            0 => None,
            1 => Some(false),
            _ => Some(true),
        };
        let a = a / 3;
        let w = a % work;
        let a = a / work;
        Cell {
            input,
            counter,
            work: w,
            mark: a % 2 == 1,
            home: a / 2 == 1,
        }
    }

    fn encode(self, work: u32) -> u32 {
        let c = match self.counter {
            None => 0,
            Some(false) => 1,
            Some(true) => 2,
        };
        self.input + 3 * (c + 3 * (self.work + work * (self.mark as u32 + 2 * self.home as u32)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ctx<Q> {
    q: Q,
    /// Sign of `r = p − 1`, where `p` is the simulated input head.
    neg: bool,
    /// `|r| > 0`, as of the last comparison pass.
    nonzero: bool,
    /// The work head sits left of cell 0.
    left: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UState<Q> {
    Init(u8),
    /// Home: back to cell 0, then compare.
    Home(Ctx<Q>),
    /// Scanning right over the counter, comparing `|r|` with `x`.
    Compare(Ctx<Q>, Ordering),
    /// Back to cell 0 knowing the input symbol.
    Back(Ctx<Q>, u32),
    /// Looking for the work head.
    Seek(Ctx<Q>, u32),
    /// Marking the new work head.
    Mark(Ctx<Q>, Move, bool),
    Return(Ctx<Q>, Move),
    /// Walking to the least significant digit, then adding (`true`) or
    /// subtracting one.
    ToEnd(Ctx<Q>, bool),
    Carry(Ctx<Q>, bool),
    Halt(bool),
    /// `|r|` outgrew the counter track.
    Fault,
}

/// Single-tape binary-input simulation of a two-tape unary-input machine.
///
/// Tracks hold the binary input, a sign-magnitude counter for the simulated
/// input head (cells `0..=N+1`, most significant digit first, so the digits
/// line up with the input), the simulated work tape and a work-head marker.
/// Every simulated step scans the counter once to decide whether the input
/// head is on a `1`, finds the work head, applies `δ`, and adjusts the
/// counter.
#[derive(Clone, Debug)]
pub struct UnaryToBinary<M> {
    pub inner: M,
}

impl<M: TwoTapeProgram> UnaryToBinary<M> {
    pub fn new(inner: M) -> Self {
        UnaryToBinary { inner }
    }

    fn work(&self) -> u32 {
        self.inner.work_symbols()
    }

    fn enter(&self, ctx: Ctx<M::State>, k: impl FnOnce(Ctx<M::State>) -> UState<M::State>) -> UState<M::State> {
        match self.inner.halted(&ctx.q) {
            Some(b) => UState::Halt(b),
            None => k(ctx),
        }
    }
}

impl<M: TwoTapeProgram> TuringProgram for UnaryToBinary<M> {
    type State = UState<M::State>;

    fn symbols(&self) -> u32 {
        36 * self.work()
    }

    fn start(&self) -> Self::State {
        UState::Init(0)
    }

    fn halted(&self, q: &Self::State) -> Option<bool> {
        match q {
            UState::Halt(b) => Some(*b),
            _ => None,
        }
    }

    fn fault(&self, q: &Self::State) -> bool {
        matches!(q, UState::Fault)
    }

    fn delta(&self, branch: usize, s: &Self::State, a: u32) -> (Self::State, u32, Move) {
        use UState::*;
        let w = self.work();
        let cell = Cell::decode(a, w);
        let put = |c: Cell| c.encode(w);
        let toward_home = |ctx: &Ctx<M::State>| if ctx.left { Move::R } else { Move::L };
        match s.clone() {
            Init(0) => {
                let c = Cell {
                    counter: Some(false),
                    mark: true,
                    home: true,
                    ..cell
                };
                (Init(1), put(c), Move::R)
            }
            Init(1) => (Init(2), put(Cell { counter: Some(false), ..cell }), Move::R),
            Init(2) if cell.input != BLANK => (Init(2), put(Cell { counter: Some(false), ..cell }), Move::R),
            Init(2) => (Init(3), a, Move::L),
            Init(_) => {
                let ctx = Ctx {
                    q: self.inner.start(),
                    neg: true,
                    nonzero: true,
                    left: false,
                };
                let next = self.enter(ctx, Home);
                (next, put(Cell { counter: Some(true), ..cell }), Move::S)
            }
            Home(ctx) if cell.home => (Compare(Ctx { nonzero: false, ..ctx }, Ordering::Equal), a, Move::S),
            Home(ctx) => (Home(ctx), a, Move::L),
            Compare(mut ctx, cmp) => match cell.counter {
                Some(d) => {
                    let cmp = cmp.then(d.cmp(&(cell.input == ONE)));
                    ctx.nonzero |= d;
                    (Compare(ctx, cmp), a, Move::R)
                }
                None => {
                    ctx.neg &= ctx.nonzero;
                    let read = if !ctx.neg && ctx.nonzero && cmp != Ordering::Greater { ONE } else { BLANK };
                    (Back(ctx, read), a, Move::L)
                }
            },
            Back(ctx, read) if cell.home => (Seek(ctx, read), a, Move::S),
            Back(ctx, read) => (Back(ctx, read), a, Move::L),
            Seek(ctx, read) if cell.mark => {
                let (q, work, dr, dw) = self.inner.delta(branch, &ctx.q, read, cell.work);
                let c = Cell {
                    work,
                    mark: dw == Move::S,
                    ..cell
                };
                let from_home = cell.home && dw == Move::L;
                let next = self.enter(Ctx { q, ..ctx }, |ctx| Mark(ctx, dr, from_home));
                (next, put(c), dw)
            }
            Seek(ctx, read) => {
                let d = if ctx.left { Move::L } else { Move::R };
                (Seek(ctx, read), a, d)
            }
            Mark(mut ctx, dr, from_home) => {
                ctx.left = if cell.home { false } else { from_home || ctx.left };
                let d = if cell.home { Move::S } else { toward_home(&ctx) };
                (Return(ctx, dr), put(Cell { mark: true, ..cell }), d)
            }
            Return(ctx, dr) if !cell.home => {
                let d = toward_home(&ctx);
                (Return(ctx, dr), a, d)
            }
            Return(mut ctx, dr) => {
                let inc = match dr {
                    Move::S => return (Compare(Ctx { nonzero: false, ..ctx }, Ordering::Equal), a, Move::S),
                    Move::R => !ctx.neg,
                    Move::L if ctx.neg => true,
                    Move::L if ctx.nonzero => false,
                    Move::L => {
                        ctx.neg = true;
                        true
                    }
                };
                (ToEnd(ctx, inc), a, Move::R)
            }
            ToEnd(ctx, inc) if cell.counter.is_some() => (ToEnd(ctx, inc), a, Move::R),
            ToEnd(ctx, inc) => (Carry(ctx, inc), a, Move::L),
            Carry(ctx, inc) => match cell.counter {
                None => (Fault, a, Move::S),
                Some(d) => {
                    let c = put(Cell { counter: Some(!d), ..cell });
                    // Incrementing stops at a 0, decrementing at a 1.
                    if d != inc {
                        (Home(ctx), c, Move::S)
                    } else {
                        (Carry(ctx, inc), c, Move::L)
                    }
                }
            },
            Halt(b) => (Halt(b), a, Move::S),
            Fault => (Fault, a, Move::S),
        }
    }

    fn label(&self, q: &Self::State) -> String {
        format!("{q:?}")
    }
}

// ---------------------------------------------------------------------------
// Single tape to two stacks

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TsState<Q> {
    /// Popping the code of the scanned cell from the right stack.
    Read { q: Q, bits: u32, count: u8 },
    /// About to apply `δ` to the decoded symbol.
    Apply { q: Q, sym: u32 },
    /// Pushing the remaining `left` bits of `code`, least significant first.
    Push { stack: u8, code: u32, left: u8, then: Box<TsState<Q>> },
    /// Moving the cell left of the head onto the right stack.
    Fetch { q: Q, bits: u32, count: u8 },
    Halt(bool),
    Fault,
}

/// Two-stack simulation of a single-tape machine. The left stack holds the
/// cells left of the head, nearest on top; the right stack holds the
/// scanned cell and everything right of it. Each cell is a `w`-bit code
/// (see [`code_bits`]) and an empty stack reads as `□`.
#[derive(Clone, Debug)]
pub struct TmToStack<M> {
    pub inner: M,
    w: u32,
}

impl<M: TuringProgram> TmToStack<M> {
    pub fn new(inner: M) -> Self {
        let w = code_width(inner.symbols());
        TmToStack { inner, w }
    }

    pub fn code_width(&self) -> u32 {
        self.w
    }

    fn code(&self, sym: u32) -> u32 {
        if sym == BLANK {
            (1 << self.w) - 1
        } else {
            sym
        }
    }

    fn read(&self, q: M::State) -> TsState<M::State> {
        match self.inner.halted(&q) {
            Some(b) => TsState::Halt(b),
            None if self.inner.fault(&q) => TsState::Fault,
            None => TsState::Read { q, bits: 0, count: 0 },
        }
    }

    fn push(&self, stack: usize, sym: u32, then: TsState<M::State>) -> TsState<M::State> {
        TsState::Push {
            stack: stack as u8,
            code: self.code(sym),
            left: self.w as u8,
            then: Box::new(then),
        }
    }
}

impl<M: TuringProgram> StackProgram for TmToStack<M> {
    type State = TsState<M::State>;
    type Loader = ();

    fn stacks(&self) -> usize {
        2
    }

    fn loader(&self) {}

    fn load(&self, _: &(), sym: u32) -> (Vec<(usize, bool)>, ()) {
        (push_bits(RIGHT, &code_bits(sym, self.w)), ())
    }

    fn start(&self, _: &()) -> Self::State {
        self.read(self.inner.start())
    }

    fn halted(&self, q: &Self::State) -> Option<bool> {
        match q {
            TsState::Halt(b) => Some(*b),
            _ => None,
        }
    }

    fn op(&self, branch: usize, s: &Self::State) -> StackOp<Self::State> {
        use TsState::*;
        let w = self.w as u8;
        match s {
            Read { q, bits, count } => {
                let after = |b: u32| {
                    let bits = bits << 1 | b;
                    if count + 1 == w {
                        Apply {
                            q: q.clone(),
                            sym: decode(bits, self.w),
                        }
                    } else {
                        Read {
                            q: q.clone(),
                            bits,
                            count: count + 1,
                        }
                    }
                };
                StackOp::Pop {
                    stack: RIGHT,
                    on0: after(0),
                    on1: after(1),
                    on_empty: Apply { q: q.clone(), sym: BLANK },
                }
            }
            Apply { q, sym } => {
                let (q2, sym2, d) = self.inner.delta(branch, q, *sym);
                let (stack, then) = match d {
                    Move::L => (RIGHT, Fetch { q: q2, bits: 0, count: 0 }),
                    Move::S => (RIGHT, self.read(q2)),
                    Move::R => (LEFT, self.read(q2)),
                };
                self.op(branch, &self.push(stack, sym2, then))
            }
            Push { stack, code, left, then } => {
                let bit = code >> (w - left) & 1 == 1;
                let next = if *left == 1 {
                    (**then).clone()
                } else {
                    Push {
                        stack: *stack,
                        code: *code,
                        left: left - 1,
                        then: then.clone(),
                    }
                };
                StackOp::Push {
                    stack: *stack as usize,
                    bit,
                    next,
                }
            }
            Fetch { q, bits, count } => {
                let after = |b: u32| {
                    let bits = bits << 1 | b;
                    if count + 1 == w {
                        self.push(RIGHT, decode(bits, self.w), self.read(q.clone()))
                    } else {
                        Fetch {
                            q: q.clone(),
                            bits,
                            count: count + 1,
                        }
                    }
                };
                StackOp::Pop {
                    stack: LEFT,
                    on0: after(0),
                    on1: after(1),
                    on_empty: self.push(RIGHT, BLANK, self.read(q.clone())),
                }
            }
            Halt(_) | Fault => StackOp::Pop {
                stack: RIGHT,
                on0: s.clone(),
                on1: s.clone(),
                on_empty: s.clone(),
            },
        }
    }

    fn label(&self, q: &Self::State) -> String {
        format!("{q:?}")
    }
}

// ---------------------------------------------------------------------------
// Round-robin split

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SplitState<Q> {
    pub q: Q,
    /// Per original stack, the sub-stack holding its top.
    pub ptr: Vec<u16>,
}

/// Splits each stack into `c` sub-stacks filled round-robin: the `m`-th
/// push lands on sub-stack `m mod c`, so a stack of height `h` becomes
/// sub-stacks of height at most `⌈h/c⌉`. Stack `k`, sub-stack `i` is
/// stack `k·c + i`.
#[derive(Clone, Debug)]
pub struct Split<S> {
    pub inner: S,
    pub c: usize,
}

impl<S: StackProgram> Split<S> {
    pub fn new(inner: S, c: usize) -> Self {
        assert!((1..=u16::MAX as usize).contains(&c), "split factor out of range");
        Split { inner, c }
    }

    fn advance(&self, ptr: &mut [u16], k: usize) -> usize {
        ptr[k] = ((ptr[k] as usize + 1) % self.c) as u16;
        k * self.c + ptr[k] as usize
    }
}

impl<S: StackProgram> StackProgram for Split<S> {
    type State = SplitState<S::State>;
    type Loader = (S::Loader, Vec<u16>);

    fn stacks(&self) -> usize {
        self.inner.stacks() * self.c
    }

    fn loader(&self) -> Self::Loader {
        (self.inner.loader(), vec![0; self.inner.stacks()])
    }

    fn load(&self, (l, ptr): &Self::Loader, sym: u32) -> (Vec<(usize, bool)>, Self::Loader) {
        let (pushes, l2) = self.inner.load(l, sym);
        let mut ptr = ptr.clone();
        let pushes = pushes.into_iter().map(|(k, b)| (self.advance(&mut ptr, k), b)).collect();
        (pushes, (l2, ptr))
    }

    fn start(&self, (l, ptr): &Self::Loader) -> Self::State {
        SplitState {
            q: self.inner.start(l),
            ptr: ptr.clone(),
        }
    }

    fn halted(&self, s: &Self::State) -> Option<bool> {
        self.inner.halted(&s.q)
    }

    fn op(&self, branch: usize, s: &Self::State) -> StackOp<Self::State> {
        let with = |q: S::State, ptr: &Vec<u16>| SplitState { q, ptr: ptr.clone() };
        match self.inner.op(branch, &s.q) {
            StackOp::Push { stack, bit, next } => {
                let mut ptr = s.ptr.clone();
                let sub = self.advance(&mut ptr, stack);
                StackOp::Push {
                    stack: sub,
                    bit,
                    next: with(next, &ptr),
                }
            }
            StackOp::Pop { stack, on0, on1, on_empty } => {
                let mut ptr = s.ptr.clone();
                let sub = stack * self.c + ptr[stack] as usize;
                ptr[stack] = ((ptr[stack] as usize + self.c - 1) % self.c) as u16;
                StackOp::Pop {
                    stack: sub,
                    on0: with(on0, &ptr),
                    on1: with(on1, &ptr),
                    on_empty: with(on_empty, &s.ptr),
                }
            }
        }
    }

    fn label(&self, s: &Self::State) -> String {
        format!("{}/{:?}", self.inner.label(&s.q), s.ptr)
    }
}

// ---------------------------------------------------------------------------
// Stacks to counters

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LoadPhase {
    Start,
    /// Is the input counter zero? `first` until a digit has been emitted.
    Check { first: bool },
    Div,
    Bit(bool),
    Zero,
    Tail(u8),
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmState<Q, L> {
    Load { l: L, phase: LoadPhase },
    /// Micro-step `step` of the first pending push.
    Push {
        pushes: Vec<(u32, bool)>,
        step: u8,
        then: Box<CmState<Q, L>>,
    },
    Run(Q),
    /// Popping: shift the value counter.
    PopDiv { stack: u32, next: [Q; 2] },
    /// Popping: shift the length counter.
    PopLen { stack: u32, next: Q },
}

/// Counter simulation of a stack machine. Stack `k` with contents
/// `w_1 … w_m` (top first) is the pair `x = Σ w_j 2^(j−1)` and
/// `x' = 2^m − 1` in counters `1 + 2k` and `2 + 2k`. Counter 0 holds the
/// input, which the machine first converts into the stack encoding by
/// repeated halving.
#[derive(Clone, Debug)]
pub struct StackToCm<S> {
    pub inner: S,
}

impl<S: StackProgram> StackToCm<S> {
    pub fn new(inner: S) -> Self {
        StackToCm { inner }
    }

    fn value(k: u32) -> usize {
        1 + 2 * k as usize
    }

    fn length(k: u32) -> usize {
        2 + 2 * k as usize
    }

    fn settle(&self, s: CmState<S::State, S::Loader>) -> CmState<S::State, S::Loader> {
        use LoadPhase::*;
        let CmState::Load { l, phase } = s else { return s };
        let (sym, then) = match phase {
            Start => (BLANK, Check { first: true }),
            Bit(b) => (if b { ONE } else { ZERO }, Check { first: false }),
            Zero => (ZERO, Tail(0)),
            Tail(0) => (BLANK, Tail(1)),
            Tail(_) => (BLANK, Done),
            Done => return CmState::Run(self.inner.start(&l)),
            Check { .. } | Div => return CmState::Load { l, phase },
        };
        let (pushes, l) = self.inner.load(&l, sym);
        let then = self.settle(CmState::Load { l, phase: then });
        if pushes.is_empty() {
            return then;
        }
        CmState::Push {
            pushes: pushes.into_iter().map(|(k, b)| (k as u32, b)).collect(),
            step: 0,
            then: Box::new(then),
        }
    }
}

impl<S: StackProgram> CounterProgram for StackToCm<S> {
    type State = CmState<S::State, S::Loader>;

    fn counters(&self) -> usize {
        1 + 2 * self.inner.stacks()
    }

    fn inputs(&self) -> usize {
        1
    }

    fn init(&self) -> Self::State {
        self.settle(CmState::Load {
            l: self.inner.loader(),
            phase: LoadPhase::Start,
        })
    }

    fn halted(&self, q: &Self::State) -> Option<bool> {
        match q {
            CmState::Run(q) => self.inner.halted(q),
            _ => None,
        }
    }

    fn op(&self, branch: usize, s: &Self::State) -> CmOp<Self::State> {
        use CmState::*;
        let det = |counter, cmd, next: Self::State| CmOp {
            counter,
            cmd,
            next: [next.clone(), next],
        };
        if self.halted(s).is_some() {
            return det(0, Cmd::IsZero, s.clone());
        }
        match s {
            Load { l, phase: LoadPhase::Check { first } } => {
                let zero = if *first { LoadPhase::Zero } else { LoadPhase::Tail(0) };
                CmOp {
                    counter: 0,
                    cmd: Cmd::IsZero,
                    next: [
                        self.settle(Load { l: l.clone(), phase: zero }),
                        Load {
                            l: l.clone(),
                            phase: LoadPhase::Div,
                        },
                    ],
                }
            }
            Load { l, .. } => CmOp {
                counter: 0,
                cmd: Cmd::Divmod2,
                next: [false, true].map(|b| {
                    self.settle(Load {
                        l: l.clone(),
                        phase: LoadPhase::Bit(b),
                    })
                }),
            },
            Push { pushes, step, then } => {
                let (k, bit) = pushes[0];
                let last = if bit { 3 } else { 2 };
                let (counter, cmd) = match step {
                    0 => (Self::value(k), Cmd::Mul2),
                    1 => (Self::length(k), Cmd::Mul2),
                    2 => (Self::length(k), Cmd::Inc),
                    _ => (Self::value(k), Cmd::Inc),
                };
                let next = if *step < last {
                    Push {
                        pushes: pushes.clone(),
                        step: step + 1,
                        then: then.clone(),
                    }
                } else if pushes.len() > 1 {
                    Push {
                        pushes: pushes[1..].to_vec(),
                        step: 0,
                        then: then.clone(),
                    }
                } else {
                    (**then).clone()
                };
                det(counter, cmd, next)
            }
            Run(q) => match self.inner.op(branch, q) {
                StackOp::Push { stack, bit, next } => self.op(
                    branch,
                    &Push {
                        pushes: vec![(stack as u32, bit)],
                        step: 0,
                        then: Box::new(Run(next)),
                    },
                ),
                StackOp::Pop { stack, on0, on1, on_empty } => CmOp {
                    counter: Self::length(stack as u32),
                    cmd: Cmd::IsZero,
                    next: [
                        Run(on_empty),
                        PopDiv {
                            stack: stack as u32,
                            next: [on0, on1],
                        },
                    ],
                },
            },
            PopDiv { stack, next } => CmOp {
                counter: Self::value(*stack),
                cmd: Cmd::Divmod2,
                next: next.clone().map(|q| PopLen { stack: *stack, next: q }),
            },
            PopLen { stack, next } => det(Self::length(*stack), Cmd::Divmod2, Run(next.clone())),
        }
    }

    fn label(&self, q: &Self::State) -> String {
        format!("{q:?}")
    }
}

pub type CompiledTm<M> = StackToCm<Split<TmToStack<UnaryToBinary<M>>>>;

/// All passes: a unary-input two-tape machine becomes a one-input counter
/// machine, with stacks split `c` ways.
pub fn compile_tm_to_cm<M: TwoTapeProgram>(m: M, c: usize) -> CompiledTm<M> {
    StackToCm::new(Split::new(TmToStack::new(UnaryToBinary::new(m)), c))
}

/// Largest stack height whose length counter `2^h − 1` stays within `n`.
pub fn height_bound(n: u64) -> usize {
    (64 - (n + 1).leading_zeros() - 1) as usize
}
