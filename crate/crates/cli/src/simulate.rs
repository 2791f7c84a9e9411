use std::fmt::Write as _;
use std::path::PathBuf;

use bcp::machines::{
    binary_tape, load_input, parse_cm, parse_rtm, parse_stack_machine, run_cm, run_stack_machine, run_tm,
    run_two_tape, Outcome,
};
use bcp::model::format::parse_protocol;
use bcp::model::{run_execution, seeded_rng, Protocol, RunOptions, StopPolicy};
use bcp::Consensus;

use crate::{parse_counts, parse_numbers, read, resolve_seed, CmdResult, Fail, Stop};

#[derive(clap::Args)]
pub struct Args {
    /// Protocol (.bcp) or machine (.cm, .rtm, .sm) file.
    file: PathBuf,
    /// `x=3,y=2` for protocols, `5` or `5,3` for machines.
    #[arg(long, default_value = "")]
    input: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100_000_000)]
    max_steps: u64,
    /// When a protocol run ends.
    #[arg(long, value_enum, default_value_t = Stop::Quiescence)]
    stop: Stop,
    /// Configuration budget for the stability check of `--stop stable`.
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    /// Write every non-silent step here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

pub fn run(a: Args) -> CmdResult {
    let text = read(&a.file)?;
    let seed = resolve_seed(a.seed);
    let at = |m: String| Fail::Parse(format!("{}:{m}", a.file.display()));
    match a.file.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "cm" => {
            let cm = parse_cm(&text).map_err(|e| at(e.to_string()))?;
            let input = parse_numbers(&a.input)?;
            let r = run_cm(&cm, &input, &mut seeded_rng(seed), a.max_steps, None)
                .map_err(|e| Fail::Runtime(e.to_string()))?;
            println!("steps={}", r.steps);
            println!("max_counter={}", r.max_counter);
            machine_outcome(r.outcome)
        }
        "rtm" => {
            let m = parse_rtm(&text).map_err(|e| at(e.to_string()))?;
            let x = single(&parse_numbers(&a.input)?)?;
            let mut rng = seeded_rng(seed);
            let r = if m.two_tape {
                run_two_tape(&m, x, &mut rng, a.max_steps)
            } else {
                run_tm(&m, binary_tape(x), &mut rng, a.max_steps).map_err(|e| Fail::Runtime(e.to_string()))?
            };
            println!("steps={}", r.steps);
            machine_outcome(r.outcome)
        }
        "sm" => {
            let m = parse_stack_machine(&text).map_err(|e| at(e.to_string()))?;
            let x = single(&parse_numbers(&a.input)?)?;
            let (q, stacks) = load_input(&m, x);
            let r = run_stack_machine(&m, q, stacks, &mut seeded_rng(seed), a.max_steps);
            println!("steps={}", r.steps);
            println!("max_stack={}", r.max_len);
            machine_outcome(r.outcome)
        }
        _ => protocol(&a, &text, seed),
    }
}

fn single(xs: &[u64]) -> Result<u64, Fail> {
    match xs {
        [x] => Ok(*x),
        _ => Err(Fail::Runtime(format!("expected one input, got {}", xs.len()))),
    }
}

fn machine_outcome(o: Outcome) -> CmdResult {
    println!("outcome={o}");
    match o {
        Outcome::Timeout => Err(Fail::Timeout("step limit reached".into())),
        _ => Ok(()),
    }
}

fn protocol(a: &Args, text: &str, seed: u64) -> CmdResult {
    let spec = parse_protocol(text).map_err(|e| Fail::Parse(format!("{}:{e}", a.file.display())))?;
    let input = parse_counts(&a.input)?;
    let stop = match a.stop {
        Stop::Stable => StopPolicy::ExactStable { budget: a.budget },
        _ => StopPolicy::Quiescence,
    };
    let opts = RunOptions {
        record: a.trace.is_some(),
        ..RunOptions::new(stop, a.max_steps)
    };
    let tr = run_execution(&spec, input.iter().map(|(k, v)| (k.as_str(), *v)), &mut seeded_rng(seed), opts)
        .map_err(|e| Fail::Runtime(e.to_string()))?;
    let outcome = match tr.final_consensus() {
        Consensus::Mixed => "none".to_string(),
        c => u8::from(c.as_bool() == Some(true)).to_string(),
    };
    println!("n={}", tr.initial.size());
    println!("steps={}", tr.step_count);
    println!("nonsilent_steps={}", tr.nonsilent_steps);
    if let Some(s) = tr.stable_at {
        println!("stable_at={s}");
    }
    println!("last_consensus_change={}", tr.last_consensus_change());
    let history: Vec<String> = tr
        .consensus_changes
        .iter()
        .map(|(i, c)| format!("{i}:{}", c.as_bool().map_or("none".into(), |b| u8::from(b).to_string())))
        .collect();
    println!("consensus_changes={}", history.len() - 1);
    println!("history={}", digest(&history));
    println!("outcome={outcome}");
    if let (Some(path), Some(steps)) = (&a.trace, &tr.steps) {
        let show = |c: &bcp::Configuration<bcp::StateId>| {
            c.iter().map(|(q, k)| format!("{}:{k}", spec.label(q))).collect::<Vec<_>>().join(" ")
        };
        let mut out = crate::header("simulate", &[("file", a.file.display().to_string()), ("seed", seed.to_string())]);
        let _ = writeln!(out, "0 - {}", show(&tr.initial));
        for s in steps {
            let _ = writeln!(out, "{} {} {}", s.index, spec.label(&s.broadcaster), show(&s.config));
        }
        crate::write_out(Some(path), &out)?;
    }
    if tr.truncated && tr.stable_at.is_none() {
        return Err(Fail::Timeout(format!("no quiescence within {} steps", a.max_steps)));
    }
    Ok(())
}

/// The first and last few entries.
fn digest(h: &[String]) -> String {
    if h.len() <= 8 {
        h.join(",")
    } else {
        format!("{},…,{}", h[..4].join(","), h[h.len() - 4..].join(","))
    }
}
