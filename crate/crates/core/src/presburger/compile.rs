use thiserror::Error;

use super::formula::{Formula, NormalAtom};
use super::protocols::{
    inequality_protocol, modulo_protocol, LinearCongruence, LinearInequality, PresburgerError,
};
use crate::combinators::{complement, parallel_compose, ComposeError};
use crate::model::{GlobalBuilder, ProtocolSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error(transparent)]
    Atom(#[from] PresburgerError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

/// One-state-per-variable protocol with constant output.
fn constant_protocol(vars: &[String], value: bool) -> Result<ProtocolSpec, CompileError> {
    let mut g = GlobalBuilder::new(vec!["0".into()], vec!["0".into()]);
    let q = g.id(0, 0);
    for x in vars {
        g.input(x, q);
    }
    if value {
        g.accept(q);
    }
    Ok(g.build().map_err(PresburgerError::from)?)
}

/// Coefficients over the whole variable list, zero where absent.
fn widen(terms: &[(String, i64)], vars: &[String]) -> Vec<(String, i64)> {
    vars.iter()
        .map(|x| {
            let a = terms.iter().find(|(y, _)| y == x).map_or(0, |(_, a)| *a);
            (x.clone(), a)
        })
        .collect()
}

fn atom_protocol(a: &NormalAtom, vars: &[String]) -> Result<ProtocolSpec, CompileError> {
    Ok(match a {
        NormalAtom::Ineq(i) => inequality_protocol(&LinearInequality::new(widen(&i.terms, vars), i.c)?)?,
        NormalAtom::Cong(c) => modulo_protocol(&LinearCongruence::new(widen(&c.terms, vars), c.c, c.l)?)?,
    })
}

fn fold(
    parts: Vec<ProtocolSpec>,
    combine: fn(bool, bool) -> bool,
) -> Result<ProtocolSpec, CompileError> {
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("at least one part");
    for p in it {
        acc = parallel_compose(&acc, &p, combine)?;
    }
    Ok(acc)
}

fn compile(f: &Formula, vars: &[String]) -> Result<ProtocolSpec, CompileError> {
    match f {
        Formula::Const(b) => constant_protocol(vars, *b),
        Formula::Cmp(..) | Formula::Mod { .. } => {
            let parts = f
                .normalize_atom()?
                .iter()
                .map(|a| atom_protocol(a, vars))
                .collect::<Result<Vec<_>, _>>()?;
            fold(parts, |a, b| a && b)
        }
        Formula::Not(g) => Ok(complement(&compile(g, vars)?)),
        Formula::And(fs) => fold(
            fs.iter().map(|g| compile(g, vars)).collect::<Result<_, _>>()?,
            |a, b| a && b,
        ),
        Formula::Or(fs) => fold(
            fs.iter().map(|g| compile(g, vars)).collect::<Result<_, _>>()?,
            |a, b| a || b,
        ),
    }
}

/// Compiles every atom over the formula's full variable list and composes
/// them in parallel; the Boolean structure lives in the accepting set.
pub fn compile_formula(f: &Formula) -> Result<ProtocolSpec, CompileError> {
    compile(f, &f.variables())
}
