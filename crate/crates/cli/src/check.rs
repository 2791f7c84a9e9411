use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use bcp::analysis::{model_check, VerdictStatus};
use bcp::cmsim::step_conformance;
use bcp::model::format::parse_protocol;
use bcp::model::init_config;
use bcp::presburger::{eval_formula, parse_formula};
use bcp::Protocol;
use clap::ValueEnum;

use crate::{header, header_field, read, CmdResult, Fail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    /// A formula given by `--formula`, or the one recorded by `compile`.
    Formula,
}

#[derive(clap::Args)]
pub struct Args {
    /// Protocol file, or `stepbp` with `--conformance`.
    target: String,
    #[arg(long)]
    inputs_up_to: Option<u64>,
    #[arg(long, value_enum, default_value_t = Oracle::Formula)]
    oracle: Oracle,
    #[arg(long)]
    formula: Option<String>,
    /// Check the step BP against the command semantics.
    #[arg(long)]
    conformance: bool,
    /// Population size for `--conformance`.
    #[arg(long, default_value_t = 4)]
    n: u64,
    /// Configurations explored per input.
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    /// Where to write a counterexample; defaults to `<target>.replay`.
    #[arg(long)]
    replay: Option<PathBuf>,
}

pub fn run(a: Args) -> CmdResult {
    if a.conformance {
        if a.target != "stepbp" {
            return Err(Fail::Runtime("--conformance applies to `stepbp` only".into()));
        }
        return conformance(&a);
    }
    let path = PathBuf::from(&a.target);
    let text = read(&path)?;
    let spec = parse_protocol(&text).map_err(|e| Fail::Parse(format!("{}:{e}", path.display())))?;
    let Oracle::Formula = a.oracle;
    let ftext = a
        .formula
        .clone()
        .or_else(|| header_field(&text, "formula").map(String::from))
        .ok_or_else(|| Fail::Runtime("no formula: pass --formula or check a compiled file".into()))?;
    let formula = parse_formula(&ftext).map_err(|e| Fail::Parse(format!("formula: {e}")))?;
    let up_to = a.inputs_up_to.unwrap_or(5);
    let symbols = spec.alphabet().to_vec();
    let mut explored = 0;
    let mut inputs = 0;
    let mut exceeded = Vec::new();
    for n in 1..=up_to {
        for counts in compositions(n, symbols.len()) {
            let input: BTreeMap<String, u64> = symbols.iter().cloned().zip(counts.iter().copied()).collect();
            let c0 = init_config(&spec, input.iter().map(|(k, v)| (k.as_str(), *v)))
                .map_err(|e| Fail::Runtime(e.to_string()))?;
            let expected = eval_formula(&formula, &input);
            let v = model_check(&spec, &c0, expected, a.budget);
            explored += v.explored;
            inputs += 1;
            let shown = input.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
            match v.status {
                VerdictStatus::Correct => {}
                VerdictStatus::BoundExceeded => exceeded.push(shown),
                VerdictStatus::Counterexample => {
                    let w = v.witness.expect("counterexamples carry a witness");
                    let mut out = header(
                        "check",
                        &[
                            ("target", a.target.clone()),
                            ("formula", ftext.clone()),
                            ("input", shown.clone()),
                            ("expected", u8::from(expected).to_string()),
                            ("violation", format!("{:?}", w.violation)),
                        ],
                    );
                    let show = |c: &bcp::Configuration<bcp::StateId>| {
                        c.iter().map(|(q, k)| format!("{}:{k}", spec.label(q))).collect::<Vec<_>>().join(" ")
                    };
                    let _ = writeln!(out, "initial {}", show(&w.initial));
                    for q in &w.path {
                        let _ = writeln!(out, "step {}", spec.label(q));
                    }
                    let _ = writeln!(out, "last {}", show(&w.last));
                    let replay = a.replay.clone().unwrap_or_else(|| PathBuf::from(format!("{}.replay", a.target)));
                    crate::write_out(Some(&replay), &out)?;
                    println!("verdict=counterexample");
                    println!("input={shown}");
                    println!("violation={:?}", w.violation);
                    println!("replay={}", replay.display());
                    return Err(Fail::Counterexample(format!(
                        "input {shown}: {:?} after {} steps",
                        w.violation,
                        w.path.len()
                    )));
                }
            }
        }
    }
    println!("inputs={inputs}");
    println!("explored={explored}");
    if !exceeded.is_empty() {
        println!("verdict=bound_exceeded");
        return Err(Fail::Budget(format!("budget exceeded on {}", exceeded.join(" "))));
    }
    println!("verdict=correct");
    Ok(())
}

/// All ways to write `n` as an ordered sum of `k` naturals.
fn compositions(n: u64, k: usize) -> Vec<Vec<u64>> {
    if k == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn conformance(a: &Args) -> CmdResult {
    let cases = step_conformance(a.n, a.budget).map_err(|e| Fail::Budget(e.to_string()))?;
    let mut bad = 0;
    for c in &cases {
        let finals: Vec<String> = c.finals.iter().map(|(b, x)| format!("done{}:{x}", u8::from(*b))).collect();
        println!(
            "{} w={} finals={} always_finishes={} ok={}",
            c.cmd,
            c.w,
            finals.join(","),
            c.always_finishes,
            c.holds()
        );
        bad += usize::from(!c.holds());
    }
    println!("cases={}", cases.len());
    if bad > 0 {
        println!("verdict=counterexample");
        return Err(Fail::Counterexample(format!("{bad} cases violate conformance")));
    }
    println!("verdict=correct");
    Ok(())
}
