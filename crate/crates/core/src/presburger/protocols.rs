use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{GlobalBuilder, ProtocolSpec, SpecError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresburgerError {
    #[error("coefficient of `{0}` is zero")]
    CoefficientZero(String),
    #[error("modulus {0} is below 2")]
    BadModulus(i64),
    #[error("coefficients of `{0}` and `{1}` coincide")]
    DuplicateCoefficient(String, String),
    #[error("variable `{0}` appears twice")]
    DuplicateVariable(String),
    #[error("constant out of range")]
    Overflow,
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// `x > y` with `O = {(·, 1)}`: an `x` agent broadcasting in global 0 turns
/// the global to 1, a `y` agent broadcasting in global 1 turns it back.
/// Each broadcast retires the broadcaster to `d`.
pub fn majority_protocol() -> ProtocolSpec {
    let mut g = GlobalBuilder::new(
        vec!["x".into(), "y".into(), "d".into()],
        vec!["0".into(), "1".into()],
    );
    let (x, y, d) = (0, 1, 2);
    g.transition((x, 0), (d, 1), &[]);
    g.transition((y, 1), (d, 0), &[]);
    for l in [x, y, d] {
        let q = g.id(l, 1);
        g.accept(q);
    }
    let (ix, iy) = (g.id(x, 0), g.id(y, 0));
    g.input("x", ix);
    g.input("y", iy);
    g.build().expect("majority protocol is well formed")
}

/// `Σ αᵢ·xᵢ < c` over named variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearInequality {
    pub terms: Vec<(String, i64)>,
    pub c: i64,
}

impl LinearInequality {
    /// Rejects zero or repeated coefficients.
    pub fn strict(terms: Vec<(String, i64)>, c: i64) -> Result<Self, PresburgerError> {
        check_distinct(&terms)?;
        let mut seen: BTreeMap<i64, &String> = BTreeMap::new();
        for (x, a) in &terms {
            if *a == 0 {
                return Err(PresburgerError::CoefficientZero(x.clone()));
            }
            if let Some(y) = seen.insert(*a, x) {
                return Err(PresburgerError::DuplicateCoefficient(y.clone(), x.clone()));
            }
        }
        Ok(LinearInequality { terms, c })
    }

    /// Accepts any coefficients; zero coefficients make a variable inert
    /// and equal coefficients share an input state.
    pub fn new(terms: Vec<(String, i64)>, c: i64) -> Result<Self, PresburgerError> {
        check_distinct(&terms)?;
        Ok(LinearInequality { terms, c })
    }

    /// `A = max(|αᵢ|, |c|, 1)`.
    pub fn bound(&self) -> i64 {
        self.terms
            .iter()
            .map(|(_, a)| a.abs())
            .chain([self.c.abs(), 1])
            .max()
            .expect("nonempty")
    }

    pub fn holds(&self, input: &BTreeMap<String, u64>) -> bool {
        lhs(&self.terms, input) < self.c as i128
    }
}

/// `Σ αᵢ·xᵢ ≡ c (mod l)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCongruence {
    pub terms: Vec<(String, i64)>,
    pub c: i64,
    pub l: i64,
}

impl LinearCongruence {
    pub fn new(terms: Vec<(String, i64)>, c: i64, l: i64) -> Result<Self, PresburgerError> {
        if l < 2 {
            return Err(PresburgerError::BadModulus(l));
        }
        check_distinct(&terms)?;
        Ok(LinearCongruence { terms, c, l })
    }

    pub fn holds(&self, input: &BTreeMap<String, u64>) -> bool {
        let l = self.l as i128;
        (lhs(&self.terms, input) - self.c as i128).rem_euclid(l) == 0
    }
}

fn check_distinct(terms: &[(String, i64)]) -> Result<(), PresburgerError> {
    for (i, (x, _)) in terms.iter().enumerate() {
        if terms[..i].iter().any(|(y, _)| y == x) {
            return Err(PresburgerError::DuplicateVariable(x.clone()));
        }
    }
    Ok(())
}

fn lhs(terms: &[(String, i64)], input: &BTreeMap<String, u64>) -> i128 {
    terms
        .iter()
        .map(|(x, a)| *a as i128 * input.get(x).copied().unwrap_or(0) as i128)
        .sum()
}

/// Local states are contributions: `0` and each distinct coefficient. The
/// global is a counter in `[-2A, 2A]`; an agent with contribution `α` adds
/// it to the counter and drops to 0 whenever the result stays in range.
/// Output is `counter < c`.
pub fn inequality_protocol(ineq: &LinearInequality) -> Result<ProtocolSpec, PresburgerError> {
    let a = ineq.bound();
    if a > 1 << 20 {
        return Err(PresburgerError::Overflow);
    }
    let mut contribs: Vec<i64> = vec![0];
    for &(_, x) in &ineq.terms {
        if !contribs.contains(&x) {
            contribs.push(x);
        }
    }
    let values: Vec<i64> = (-2 * a..=2 * a).collect();
    let mut g = GlobalBuilder::new(
        contribs.iter().map(i64::to_string).collect(),
        values.iter().map(i64::to_string).collect(),
    );
    let gi = |v: i64| (v + 2 * a) as usize;
    for (li, &alpha) in contribs.iter().enumerate().skip(1) {
        for &v in &values {
            let w = v + alpha;
            if (-2 * a..=2 * a).contains(&w) {
                g.transition((li, gi(v)), (0, gi(w)), &[]);
            }
        }
    }
    for (li, _) in contribs.iter().enumerate() {
        for &v in &values {
            if v < ineq.c {
                let q = g.id(li, gi(v));
                g.accept(q);
            }
        }
    }
    for (x, alpha) in &ineq.terms {
        let li = contribs.iter().position(|c| c == alpha).expect("listed");
        let q = g.id(li, gi(0));
        g.input(x, q);
    }
    Ok(g.build()?)
}

/// As the inequality protocol, with the counter in `Z_l` and no guard.
/// Output is `counter ≡ c`.
pub fn modulo_protocol(cong: &LinearCongruence) -> Result<ProtocolSpec, PresburgerError> {
    let l = cong.l;
    if l < 2 {
        return Err(PresburgerError::BadModulus(l));
    }
    if l > 1 << 20 {
        return Err(PresburgerError::Overflow);
    }
    let mut contribs: Vec<i64> = vec![0];
    for &(_, x) in &cong.terms {
        let r = x.rem_euclid(l);
        if !contribs.contains(&r) {
            contribs.push(r);
        }
    }
    let mut g = GlobalBuilder::new(
        contribs.iter().map(i64::to_string).collect(),
        (0..l).map(|v| v.to_string()).collect(),
    );
    for (li, &alpha) in contribs.iter().enumerate().skip(1) {
        for v in 0..l {
            g.transition((li, v as usize), (0, ((v + alpha) % l) as usize), &[]);
        }
    }
    let target = cong.c.rem_euclid(l) as usize;
    for li in 0..contribs.len() {
        let q = g.id(li, target);
        g.accept(q);
    }
    for (x, alpha) in &cong.terms {
        let li = contribs
            .iter()
            .position(|&c| c == alpha.rem_euclid(l))
            .expect("listed");
        let q = g.id(li, 0);
        g.input(x, q);
    }
    Ok(g.build()?)
}
