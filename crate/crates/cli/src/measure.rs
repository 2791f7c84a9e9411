use std::path::PathBuf;

use bcp::analysis::{fit_nlogn, measure_time, stats_csv, Estimator, RunStats, TrialRecord};
use bcp::cmsim::{run_clock, Clock, ClockLocal};
use bcp::model::format::parse_protocol;
use bcp::model::trial_rng;
use bcp::par::{map_trials, Exec};
use bcp::presburger::majority_protocol;
use bcp::{Consensus, Protocol, ProtocolSpec};
use clap::ValueEnum;

use crate::{parse_counts, read, resolve_seed, write_out, CmdResult, Fail, Stop};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Majority,
    Clock,
}

#[derive(clap::Args)]
#[command(group = clap::ArgGroup::new("target").required(true))]
pub struct Args {
    /// Protocol file.
    #[arg(group = "target")]
    file: Option<PathBuf>,
    #[arg(long, value_enum, group = "target")]
    protocol: Option<Builtin>,
    /// Population sizes, e.g. `10,100,1000`.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Stop::Quiescence)]
    estimator: Stop,
    /// Relative input weights, e.g. `x=1,y=1`; all symbols equal by default.
    #[arg(long)]
    mix: Option<String>,
    #[arg(long, default_value_t = 100_000_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    /// Run trials on the calling thread.
    #[arg(long)]
    sequential: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Splits `n` by weight, largest remainders first, ties to the earlier
/// symbol.
fn split(n: u64, weights: &[(String, u64)]) -> Result<Vec<(String, u64)>, Fail> {
    let total: u64 = weights.iter().map(|w| w.1).sum();
    if total == 0 {
        return Err(Fail::Runtime("weights sum to zero".into()));
    }
    let mut out: Vec<(String, u64)> = weights.iter().map(|(k, w)| (k.clone(), n * w / total)).collect();
    let mut rest: Vec<(usize, u64)> = weights.iter().enumerate().map(|(i, (_, w))| (i, n * w % total)).collect();
    rest.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let left = n - out.iter().map(|x| x.1).sum::<u64>();
    for &(i, _) in rest.iter().take(left as usize) {
        out[i].1 += 1;
    }
    Ok(out)
}

pub fn run(a: Args) -> CmdResult {
    let seed = resolve_seed(a.seed);
    let exec = if a.sequential { Exec::Sequential } else { Exec::available() };
    let (name, stats) = match (&a.file, a.protocol) {
        (_, Some(Builtin::Clock)) => ("clock".to_string(), clock(&a, seed, exec)),
        (Some(path), _) => {
            let spec = parse_protocol(&read(path)?).map_err(|e| Fail::Parse(format!("{}:{e}", path.display())))?;
            (path.display().to_string(), protocol(&a, &spec, seed, exec)?)
        }
        _ => ("majority".to_string(), protocol(&a, &majority_protocol(), seed, exec)?),
    };
    let estimator = stats.first().map_or("none", |s| s.estimator);
    let sweep: Vec<String> = a.n.iter().map(u64::to_string).collect();
    let fields = [
        ("command", "measure".to_string()),
        ("protocol", name.clone()),
        ("n", sweep.join(";")),
        ("trials", a.trials.to_string()),
        ("seed", seed.to_string()),
        ("estimator", estimator.to_string()),
        ("mix", a.mix.clone().unwrap_or_default()),
        ("max_steps", a.max_steps.to_string()),
    ];
    let csv = stats_csv(&fields, &stats);
    match &a.output {
        Some(_) => write_out(a.output.as_ref(), &csv)?,
        None => print!("{csv}"),
    }
    for s in &stats {
        let n = s.n as f64;
        print!("n={} mean_T={:.1} truncated={}", s.n, s.mean_t(), s.truncated());
        if name == "clock" {
            print!(" bound_2nlnn+4={:.1}", 2.0 * n * n.ln() + 4.0);
        } else {
            print!(" bound_2nH_n={:.1}", 2.0 * n * bcp::analysis::harmonic(s.n));
        }
        println!();
    }
    let points: Vec<(u64, f64)> = stats.iter().map(|s| (s.n, s.mean_t())).collect();
    match fit_nlogn(&points) {
        Ok(fit) => {
            let ratios: Vec<String> = fit.ratios.iter().map(|(n, r)| format!("{n}:{r:.3}")).collect();
            println!(
                "fit a={:.4} residual={:.4} poor_fit={} ratios={} nonincreasing={}",
                fit.a,
                fit.residual,
                fit.poor_fit,
                ratios.join(","),
                fit.ratios_nonincreasing(0.05)
            );
        }
        Err(e) => println!("fit skipped: {e}"),
    }
    Ok(())
}

fn protocol(a: &Args, spec: &ProtocolSpec, seed: u64, exec: Exec) -> Result<Vec<RunStats>, Fail> {
    let weights = match &a.mix {
        Some(m) => parse_counts(m)?,
        None => spec.alphabet().iter().map(|s| (s.clone(), 1)).collect(),
    };
    let estimator = match a.estimator {
        Stop::Quiescence => Estimator::Quiescence,
        Stop::Stable => Estimator::ExactStable { budget: a.budget },
        Stop::LastChange => Estimator::LastConsensusChange,
    };
    a.n.iter()
        .map(|&n| {
            let input = split(n, &weights)?;
            measure_time(spec, &input, a.trials, estimator, a.max_steps, seed, exec)
                .map_err(|e| Fail::Runtime(format!("n={n}: {e}")))
        })
        .collect()
}

/// Time for every agent to reach state 1 of a single clock.
fn clock(a: &Args, seed: u64, exec: Exec) -> Vec<RunStats> {
    a.n.iter()
        .map(|&n| {
            let records = map_trials(a.trials, exec, |trial| {
                let r = run_clock(&Clock, ClockLocal::Zero, &ClockLocal::One, n, &mut trial_rng(seed, trial), a.max_steps);
                let t = r.time.unwrap_or(a.max_steps);
                TrialRecord {
                    n,
                    trial,
                    seed,
                    steps: t,
                    t,
                    truncated: r.time.is_none(),
                    outcome: if r.time.is_some() {
                        Consensus::of_bool(Clock.is_accepting(&ClockLocal::One))
                    } else {
                        Consensus::Mixed
                    },
                }
            });
            RunStats {
                n,
                seed,
                estimator: "clock_time",
                records,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_by_weight() {
        let w = |v: &[(&str, u64)]| v.iter().map(|(k, x)| (k.to_string(), *x)).collect::<Vec<_>>();
        assert_eq!(split(5, &w(&[("x", 1), ("y", 1)])).unwrap(), w(&[("x", 3), ("y", 2)]));
        assert_eq!(split(10, &w(&[("x", 3), ("y", 1)])).unwrap(), w(&[("x", 8), ("y", 2)]));
        assert!(split(3, &w(&[("x", 0)])).is_err());
    }
}
