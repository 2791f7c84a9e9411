use std::path::PathBuf;

use bcp::cmsim::{chain_length, compile_with, Hardened};
use bcp::machines::{compile_tm_to_cm, parse_cm, parse_rtm, print_cm, CounterMachine};
use bcp::model::format::print_protocol;
use bcp::model::tabulate;
use bcp::presburger::{compile_formula, parse_formula};
use bcp::ProtocolSpec;
use clap::ValueEnum;

use crate::{header, read, write_out, CmdResult, Fail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Bcp,
    Cm,
}

#[derive(clap::Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
pub struct Args {
    /// Presburger formula, e.g. `(< (+ x (* -1 y)) 0)`.
    #[arg(long, group = "source")]
    formula: Option<String>,
    /// Two-tape RTM file.
    #[arg(long, group = "source")]
    rtm: Option<PathBuf>,
    /// Counter machine file.
    #[arg(long, group = "source")]
    cm: Option<PathBuf>,
    /// Target; defaults to `bcp` for formulas and machines, `cm` for RTMs.
    #[arg(long, value_enum)]
    emit: Option<Emit>,
    /// Hardness: the clock chain has `28k²` phases.
    #[arg(short, default_value_t = 2)]
    k: u32,
    /// Clock phases, overriding `-k`.
    #[arg(long)]
    phases: Option<u32>,
    /// Space constant: each stack is split this many ways. Tabulating
    /// beyond 3 exceeds millions of states even for tiny machines.
    #[arg(long, default_value_t = 1)]
    space: usize,
    /// State budget for tabulating lazy constructions.
    #[arg(long, default_value_t = 2_000_000)]
    max_states: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn run(a: Args) -> CmdResult {
    let phases = a.phases.unwrap_or_else(|| chain_length(a.k));
    let mut fields = vec![];
    let text = if let Some(f) = &a.formula {
        if a.emit == Some(Emit::Cm) {
            return Err(Fail::Runtime("formulas compile to protocols only".into()));
        }
        let formula = parse_formula(f).map_err(|e| Fail::Parse(format!("formula: {e}")))?;
        let spec = compile_formula(&formula).map_err(|e| Fail::Runtime(format!("stage formula→bcp: {e}")))?;
        fields.push(("formula", f.clone()));
        fields.push(("emit", "bcp".into()));
        print_protocol(&spec)
    } else if let Some(path) = &a.rtm {
        let m = parse_rtm(&read(path)?).map_err(|e| Fail::Parse(format!("{}:{e}", path.display())))?;
        if !m.two_tape {
            return Err(Fail::Runtime("stage rtm→cm: needs a two-tape machine with unary input".into()));
        }
        let cm = CounterMachine::from_program(&compile_tm_to_cm(&m, a.space), a.max_states).ok_or_else(|| {
            Fail::Budget(format!("stage rtm→cm: more than {} machine states", a.max_states))
        })?;
        fields.push(("rtm", path.display().to_string()));
        fields.push(("space", a.space.to_string()));
        match a.emit.unwrap_or(Emit::Cm) {
            Emit::Cm => {
                fields.push(("emit", "cm".into()));
                print_cm(&cm)
            }
            Emit::Bcp => {
                fields.push(("emit", "bcp".into()));
                fields.push(("phases", phases.to_string()));
                print_protocol(&to_bcp(cm, phases, a.max_states)?)
            }
        }
    } else {
        let path = a.cm.as_ref().expect("source group is required");
        let cm = parse_cm(&read(path)?).map_err(|e| Fail::Parse(format!("{}:{e}", path.display())))?;
        if a.emit == Some(Emit::Cm) {
            return Err(Fail::Runtime("source is already a counter machine".into()));
        }
        fields.push(("cm", path.display().to_string()));
        fields.push(("emit", "bcp".into()));
        fields.push(("phases", phases.to_string()));
        print_protocol(&to_bcp(cm, phases, a.max_states)?)
    };
    write_out(a.output.as_ref(), &(header("compile", &fields) + &text))
}

fn to_bcp(cm: CounterMachine, phases: u32, max_states: usize) -> Result<ProtocolSpec, Fail> {
    let p = compile_with(cm, Hardened::with_phases(phases)).map_err(|e| Fail::Runtime(format!("stage cm→bcp: {e}")))?;
    tabulate(&p, max_states, true)
        .map_err(|e| Fail::Runtime(format!("stage cm→bcp: {e}")))?
        .ok_or_else(|| Fail::Budget(format!("stage cm→bcp: more than {max_states} agent states")))
}
