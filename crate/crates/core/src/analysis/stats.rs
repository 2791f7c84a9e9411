use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    init_config, run_from, trial_rng, Consensus, Protocol, RunOptions, SimError, StopPolicy,
    RNG_NAME,
};
use crate::par::{map_trials, Exec};

/// How the stabilization index of a trial is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    /// First configuration decided stable by exhaustive search.
    ExactStable { budget: usize },
    /// Index of the last non-silent step before quiescence.
    Quiescence,
    /// Last index at which the consensus value changed.
    LastConsensusChange,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::ExactStable { .. } => "exact_stable",
            Estimator::Quiescence => "quiescence",
            Estimator::LastConsensusChange => "last_consensus_change",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub n: u64,
    pub trial: u64,
    pub seed: u64,
    pub steps: u64,
    pub t: u64,
    pub truncated: bool,
    pub outcome: Consensus,
}

/// Per-trial results of one measurement at a fixed population size.
#[derive(Clone, Debug)]
pub struct RunStats {
    pub n: u64,
    pub seed: u64,
    pub estimator: &'static str,
    pub records: Vec<TrialRecord>,
}

impl RunStats {
    pub fn trials(&self) -> usize {
        self.records.len()
    }

    pub fn mean_t(&self) -> f64 {
        mean(self.records.iter().map(|r| r.t as f64))
    }

    pub fn var_t(&self) -> f64 {
        let m = self.mean_t();
        let k = self.records.len();
        if k < 2 {
            return 0.0;
        }
        self.records
            .iter()
            .map(|r| (r.t as f64 - m).powi(2))
            .sum::<f64>()
            / (k - 1) as f64
    }

    pub fn truncated(&self) -> usize {
        self.records.iter().filter(|r| r.truncated).count()
    }

    pub fn outcomes(&self, c: Consensus) -> usize {
        self.records.iter().filter(|r| r.outcome == c).count()
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if k == 0 {
        f64::NAN
    } else {
        s / k as f64
    }
}

/// Runs `trials` independent executions from `I(input)`; trial `i` uses
/// stream `i` of `seed`.
pub fn measure_time<P, K>(
    p: &P,
    input: &[(K, u64)],
    trials: u64,
    estimator: Estimator,
    max_steps: u64,
    seed: u64,
    exec: Exec,
) -> Result<RunStats, SimError>
where
    P: Protocol,
    K: AsRef<str> + Sync,
{
    let c0 = init_config(p, input.iter().map(|(k, v)| (k.as_ref(), *v)))?;
    let n = c0.size();
    let stop = match estimator {
        Estimator::ExactStable { budget } => StopPolicy::ExactStable { budget },
        _ => StopPolicy::Quiescence,
    };
    let results = map_trials(trials, exec, |trial| {
        let mut rng = trial_rng(seed, trial);
        let tr = run_from(p, c0.clone(), &mut rng, RunOptions::new(stop, max_steps))?;
        let t = match estimator {
            Estimator::ExactStable { .. } => tr.stable_at.unwrap_or(tr.step_count),
            Estimator::Quiescence => tr.step_count,
            Estimator::LastConsensusChange => tr.last_consensus_change(),
        };
        Ok(TrialRecord {
            n,
            trial,
            seed,
            steps: tr.step_count,
            t,
            truncated: tr.truncated,
            outcome: tr.final_consensus(),
        })
    });
    let records = results.into_iter().collect::<Result<Vec<_>, SimError>>()?;
    Ok(RunStats {
        n,
        seed,
        estimator: estimator.name(),
        records,
    })
}

/// CSV with a `# key=value` header block followed by
/// `n,trial,seed,steps,T,estimator,truncated`.
pub fn stats_csv(header: &[(&str, String)], stats: &[RunStats]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# rng={RNG_NAME}");
    for (k, v) in header {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("n,trial,seed,steps,T,estimator,truncated\n");
    for s in stats {
        for r in &s.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n, r.trial, r.seed, r.steps, r.t, s.estimator, r.truncated
            );
        }
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FitError {
    #[error("need at least 3 distinct population sizes, got {0}")]
    DegenerateInput(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NlognFit {
    /// Fitted constant in `T ≈ a·n ln n`.
    pub a: f64,
    /// Root mean square of the relative residuals `(T − a·n ln n) / T`.
    pub residual: f64,
    /// `mean T / (n ln n)` per population size, by increasing `n`.
    pub ratios: Vec<(u64, f64)>,
    pub poor_fit: bool,
}

impl NlognFit {
    /// True if no ratio exceeds the previous one by more than `slack`
    /// (relative).
    pub fn ratios_nonincreasing(&self, slack: f64) -> bool {
        self.ratios
            .windows(2)
            .all(|w| w[1].1 <= w[0].1 * (1.0 + slack))
    }
}

/// Relative residual above which a fit is reported as poor.
pub const POOR_FIT_RESIDUAL: f64 = 0.25;

/// Least-squares fit of `T = a·n ln n` in relative error, so that small and
/// large populations weigh equally.
pub fn fit_nlogn(points: &[(u64, f64)]) -> Result<NlognFit, FitError> {
    let mut pts: Vec<(u64, f64)> = points.iter().copied().filter(|&(n, _)| n >= 2).collect();
    pts.sort_by_key(|&(n, _)| n);
    let mut distinct: Vec<u64> = pts.iter().map(|&(n, _)| n).collect();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(FitError::DegenerateInput(distinct.len()));
    }
    let x = |n: u64| n as f64 * (n as f64).ln();
    // minimize Σ (1 − a·x/y)²
    let (num, den) = pts.iter().fold((0.0, 0.0), |(num, den), &(n, y)| {
        let r = x(n) / y;
        (num + r, den + r * r)
    });
    let a = num / den;
    let residual = (pts
        .iter()
        .map(|&(n, y)| ((y - a * x(n)) / y).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    let ratios = distinct
        .iter()
        .map(|&n| {
            let m = mean(pts.iter().filter(|p| p.0 == n).map(|p| p.1));
            (n, m / x(n))
        })
        .collect();
    Ok(NlognFit {
        a,
        residual,
        ratios,
        poor_fit: residual > POOR_FIT_RESIDUAL,
    })
}

/// `H_n = Σ_{k=1}^n 1/k`.
pub fn harmonic(n: u64) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}
