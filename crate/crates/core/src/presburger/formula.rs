//! Quantifier-free Presburger formulas in prefix notation.
//!
//! ```text
//! formula := (and formula ...) | (or formula ...) | (not formula)
//!          | (< term term) | (<= term term) | (> term term)
//!          | (>= term term) | (= term term)
//!          | (mod term l c)                      ; term ≡ c (mod l)
//!          | true | false
//! term    := integer | variable
//!          | (+ term ...) | (- term) | (- term term ...) | (* integer term)
//! ```
//!
//! Variables are `[A-Za-z_][A-Za-z0-9_]*`; `;` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::protocols::{LinearCongruence, LinearInequality, PresburgerError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Const(i64),
    Var(String),
    Add(Vec<Term>),
    /// `(- a)` negates, `(- a b c)` is `a − b − c`.
    Sub(Vec<Term>),
    Mul(i64, Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Cmp(Cmp, Term, Term),
    Mod { term: Term, l: i64, c: i64 },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

/// A term as `Σ coeff·var + constant`, variables in first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Linear {
    pub coeffs: Vec<(String, i64)>,
    pub constant: i64,
}

impl Linear {
    fn add_var(&mut self, x: &str, a: i64) -> Result<(), PresburgerError> {
        match self.coeffs.iter_mut().find(|(y, _)| y == x) {
            Some((_, b)) => *b = b.checked_add(a).ok_or(PresburgerError::Overflow)?,
            None => self.coeffs.push((x.to_string(), a)),
        }
        Ok(())
    }

    fn add_scaled(&mut self, other: &Linear, k: i64) -> Result<(), PresburgerError> {
        for (x, a) in &other.coeffs {
            self.add_var(x, a.checked_mul(k).ok_or(PresburgerError::Overflow)?)?;
        }
        let c = other.constant.checked_mul(k).ok_or(PresburgerError::Overflow)?;
        self.constant = self.constant.checked_add(c).ok_or(PresburgerError::Overflow)?;
        Ok(())
    }
}

impl Term {
    pub fn linear(&self) -> Result<Linear, PresburgerError> {
        let mut out = Linear::default();
        match self {
            Term::Const(c) => out.constant = *c,
            Term::Var(x) => out.coeffs.push((x.clone(), 1)),
            Term::Add(ts) => {
                for t in ts {
                    out.add_scaled(&t.linear()?, 1)?;
                }
            }
            Term::Sub(ts) => match ts.as_slice() {
                [t] => out.add_scaled(&t.linear()?, -1)?,
                [first, rest @ ..] => {
                    out.add_scaled(&first.linear()?, 1)?;
                    for t in rest {
                        out.add_scaled(&t.linear()?, -1)?;
                    }
                }
                [] => {}
            },
            Term::Mul(k, t) => out.add_scaled(&t.linear()?, *k)?,
        }
        Ok(out)
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(x) => {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
            Term::Add(ts) | Term::Sub(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Term::Mul(_, t) => t.collect_vars(out),
        }
    }

    pub fn eval(&self, input: &BTreeMap<String, u64>) -> i128 {
        match self {
            Term::Const(c) => *c as i128,
            Term::Var(x) => input.get(x).copied().unwrap_or(0) as i128,
            Term::Add(ts) => ts.iter().map(|t| t.eval(input)).sum(),
            Term::Sub(ts) => match ts.as_slice() {
                [t] => -t.eval(input),
                [first, rest @ ..] => first.eval(input) - rest.iter().map(|t| t.eval(input)).sum::<i128>(),
                [] => 0,
            },
            Term::Mul(k, t) => *k as i128 * t.eval(input),
        }
    }
}

/// A formula atom in the normal form the protocol compilers take.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalAtom {
    Ineq(LinearInequality),
    Cong(LinearCongruence),
}

impl Formula {
    /// Variables in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Formula::Const(_) => {}
            Formula::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Mod { term, .. } => term.collect_vars(out),
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
        }
    }

    /// Rewrites a comparison or congruence as `Σ αᵢxᵢ < c` atoms (two,
    /// conjoined, for `=`) or a congruence.
    pub fn normalize_atom(&self) -> Result<Vec<NormalAtom>, PresburgerError> {
        let neg = |l: &Linear| -> Result<Vec<(String, i64)>, PresburgerError> {
            l.coeffs
                .iter()
                .map(|(x, a)| Ok((x.clone(), a.checked_neg().ok_or(PresburgerError::Overflow)?)))
                .collect()
        };
        let inc = |c: i64| c.checked_add(1).ok_or(PresburgerError::Overflow);
        let negc = |c: i64| c.checked_neg().ok_or(PresburgerError::Overflow);
        match self {
            Formula::Cmp(op, a, b) => {
                // a − b = Σβx + κ
                let mut d = a.linear()?;
                d.add_scaled(&b.linear()?, -1)?;
                let k = d.constant;
                let lt = |terms, c| LinearInequality::new(terms, c).map(NormalAtom::Ineq);
                Ok(match op {
                    Cmp::Lt => vec![lt(d.coeffs.clone(), negc(k)?)?],
                    Cmp::Le => vec![lt(d.coeffs.clone(), inc(negc(k)?)?)?],
                    Cmp::Gt => vec![lt(neg(&d)?, k)?],
                    Cmp::Ge => vec![lt(neg(&d)?, inc(k)?)?],
                    Cmp::Eq => vec![
                        lt(d.coeffs.clone(), inc(negc(k)?)?)?,
                        lt(neg(&d)?, inc(k)?)?,
                    ],
                })
            }
            Formula::Mod { term, l, c } => {
                let d = term.linear()?;
                let c = c.checked_sub(d.constant).ok_or(PresburgerError::Overflow)?;
                Ok(vec![NormalAtom::Cong(LinearCongruence::new(d.coeffs, c, *l)?)])
            }
            _ => Ok(Vec::new()),
        }
    }
}

/// Direct evaluation; absent variables count as 0.
pub fn eval_formula(f: &Formula, input: &BTreeMap<String, u64>) -> bool {
    match f {
        Formula::Const(b) => *b,
        Formula::Cmp(op, a, b) => {
            let (x, y) = (a.eval(input), b.eval(input));
            match op {
                Cmp::Lt => x < y,
                Cmp::Le => x <= y,
                Cmp::Gt => x > y,
                Cmp::Ge => x >= y,
                Cmp::Eq => x == y,
            }
        }
        Formula::Mod { term, l, c } => {
            let l = *l as i128;
            l >= 1 && (term.eval(input) - *c as i128).rem_euclid(l) == 0
        }
        Formula::Not(g) => !eval_formula(g, input),
        Formula::And(fs) => fs.iter().all(|g| eval_formula(g, input)),
        Formula::Or(fs) => fs.iter().any(|g| eval_formula(g, input)),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(x) => f.write_str(x),
            Term::Add(ts) | Term::Sub(ts) => {
                f.write_str(if matches!(self, Term::Add(_)) { "(+" } else { "(-" })?;
                for t in ts {
                    write!(f, " {t}")?;
                }
                f.write_str(")")
            }
            Term::Mul(k, t) => write!(f, "(* {k} {t})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Cmp(op, a, b) => write!(f, "({} {a} {b})", op.symbol()),
            Formula::Mod { term, l, c } => write!(f, "(mod {term} {l} {c})"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(fs) | Formula::Or(fs) => {
                f.write_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" })?;
                for g in fs {
                    write!(f, " {g}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct FormulaParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String, (usize, usize)),
    List(Vec<Sexp>, (usize, usize)),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn err(pos: (usize, usize), message: impl Into<String>) -> FormulaParseError {
    FormulaParseError {
        line: pos.0,
        column: pos.1,
        message: message.into(),
    }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, FormulaParseError> {
    let mut stack: Vec<(Vec<Sexp>, (usize, usize))> = vec![(Vec::new(), (1, 1))];
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let pos = (li + 1, i + 1);
            match chars[i] {
                ';' => break,
                c if c.is_whitespace() => i += 1,
                '(' => {
                    stack.push((Vec::new(), pos));
                    i += 1;
                }
                ')' => {
                    if stack.len() == 1 {
                        return Err(err(pos, "unbalanced `)`"));
                    }
                    let (items, start) = stack.pop().expect("checked");
                    stack.last_mut().expect("root").0.push(Sexp::List(items, start));
                    i += 1;
                }
                _ => {
                    let start = i;
                    while i < chars.len()
                        && !chars[i].is_whitespace()
                        && !matches!(chars[i], '(' | ')' | ';')
                    {
                        i += 1;
                    }
                    let tok: String = chars[start..i].iter().collect();
                    stack.last_mut().expect("root").0.push(Sexp::Atom(tok, pos));
                }
            }
        }
    }
    if stack.len() > 1 {
        let (_, start) = stack.pop().expect("nonempty");
        return Err(err(start, "unclosed `(`"));
    }
    Ok(stack.pop().expect("root").0)
}

fn parse_int(s: &str, pos: (usize, usize)) -> Result<i64, FormulaParseError> {
    s.parse::<i64>().map_err(|_| err(pos, format!("expected integer, found `{s}`")))
}

fn is_var(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "and" | "or" | "not" | "mod" | "true" | "false")
}

fn parse_term(s: &Sexp) -> Result<Term, FormulaParseError> {
    match s {
        Sexp::Atom(a, pos) => {
            if is_var(a) {
                Ok(Term::Var(a.clone()))
            } else {
                Ok(Term::Const(parse_int(a, *pos)?))
            }
        }
        Sexp::List(items, pos) => {
            let Some(Sexp::Atom(head, hpos)) = items.first() else {
                return Err(err(*pos, "expected operator"));
            };
            let args = &items[1..];
            match head.as_str() {
                "+" => Ok(Term::Add(args.iter().map(parse_term).collect::<Result<_, _>>()?)),
                "-" => {
                    if args.is_empty() {
                        return Err(err(*hpos, "`-` needs an argument"));
                    }
                    Ok(Term::Sub(args.iter().map(parse_term).collect::<Result<_, _>>()?))
                }
                "*" => match args {
                    [Sexp::Atom(k, kpos), t] => Ok(Term::Mul(parse_int(k, *kpos)?, Box::new(parse_term(t)?))),
                    _ => Err(err(*hpos, "`*` takes an integer and a term")),
                },
                other => Err(err(*hpos, format!("unknown term operator `{other}`"))),
            }
        }
    }
}

fn parse_formula_sexp(s: &Sexp) -> Result<Formula, FormulaParseError> {
    match s {
        Sexp::Atom(a, pos) => match a.as_str() {
            "true" => Ok(Formula::Const(true)),
            "false" => Ok(Formula::Const(false)),
            _ => Err(err(*pos, format!("expected formula, found `{a}`"))),
        },
        Sexp::List(items, pos) => {
            let Some(Sexp::Atom(head, hpos)) = items.first() else {
                return Err(err(*pos, "expected operator"));
            };
            let args = &items[1..];
            let cmp = |op| -> Result<Formula, FormulaParseError> {
                match args {
                    [a, b] => Ok(Formula::Cmp(op, parse_term(a)?, parse_term(b)?)),
                    _ => Err(err(*hpos, format!("`{head}` takes two terms"))),
                }
            };
            match head.as_str() {
                "and" | "or" => {
                    let fs = args.iter().map(parse_formula_sexp).collect::<Result<Vec<_>, _>>()?;
                    if fs.is_empty() {
                        return Err(err(*hpos, format!("`{head}` needs an argument")));
                    }
                    Ok(if head == "and" { Formula::And(fs) } else { Formula::Or(fs) })
                }
                "not" => match args {
                    [g] => Ok(Formula::Not(Box::new(parse_formula_sexp(g)?))),
                    _ => Err(err(*hpos, "`not` takes one formula")),
                },
                "<" => cmp(Cmp::Lt),
                "<=" => cmp(Cmp::Le),
                ">" => cmp(Cmp::Gt),
                ">=" => cmp(Cmp::Ge),
                "=" => cmp(Cmp::Eq),
                "mod" => match args {
                    [t, Sexp::Atom(l, lpos), Sexp::Atom(c, cpos)] => {
                        let l = parse_int(l, *lpos)?;
                        if l < 2 {
                            return Err(err(*lpos, "modulus must be at least 2"));
                        }
                        Ok(Formula::Mod {
                            term: parse_term(t)?,
                            l,
                            c: parse_int(c, *cpos)?,
                        })
                    }
                    _ => Err(err(*hpos, "`mod` takes a term, a modulus and a residue")),
                },
                other => Err(err(*hpos, format!("unknown operator `{other}`"))),
            }
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, FormulaParseError> {
    let items = read_sexps(text)?;
    match items.as_slice() {
        [one] => parse_formula_sexp(one),
        [] => Err(err((1, 1), "empty formula")),
        [_, second, ..] => Err(err(second.pos(), "trailing input after formula")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn parse_print_round_trip() {
        let text = "(and (< (+ (* 2 x) (* -1 y)) 3) (mod (+ x y) 2 1))";
        let f = parse_formula(text).unwrap();
        assert_eq!(f.to_string(), text);
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        assert_eq!(f.variables(), ["x", "y"]);
    }

    #[test]
    fn positions_in_errors() {
        let e = parse_formula("(and (< x 1)\n  (foo x))").unwrap_err();
        assert_eq!((e.line, e.column), (2, 4));
        let e = parse_formula("(< x 1").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        let e = parse_formula("(mod x 1 0)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 8));
    }

    #[test]
    fn evaluation() {
        let f = parse_formula("(< (- x y) 0)").unwrap();
        assert!(eval_formula(&f, &input(&[("x", 1), ("y", 2)])));
        let g = parse_formula("(mod x 2 1)").unwrap();
        assert!(!eval_formula(&g, &input(&[("x", 4)])));
        let h = parse_formula("(mod (- x) 3 1)").unwrap();
        assert!(eval_formula(&h, &input(&[("x", 2)])));
    }

    #[test]
    fn normalization_matches_evaluation() {
        for text in ["(<= x 2)", "(> (* 3 x) y)", "(>= x (+ y 1))", "(= x y)", "(mod (+ x 5) 3 2)"] {
            let f = parse_formula(text).unwrap();
            let atoms = f.normalize_atom().unwrap();
            for x in 0..5 {
                for y in 0..5 {
                    let inp = input(&[("x", x), ("y", y)]);
                    let via = atoms.iter().all(|a| match a {
                        NormalAtom::Ineq(i) => i.holds(&inp),
                        NormalAtom::Cong(c) => c.holds(&inp),
                    });
                    assert_eq!(via, eval_formula(&f, &inp), "{text} at {x},{y}");
                }
            }
        }
    }
}
