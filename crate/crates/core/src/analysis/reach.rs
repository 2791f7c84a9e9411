use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::model::{apply_broadcast, enabled_nonsilent, is_consensus, Configuration, Consensus, Protocol};

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReachError {
    #[error("search budget of {budget} configurations exceeded")]
    BudgetExceeded { budget: usize },
}

/// Successors of `c` under the non-silent transitions, paired with the
/// broadcaster. Silent steps only add self-loops and are omitted.
pub fn successors<P: Protocol>(
    p: &P,
    c: &Configuration<P::State>,
) -> Vec<(P::State, Configuration<P::State>)> {
    enabled_nonsilent(p, c)
        .into_iter()
        .map(|q| {
            let next = apply_broadcast(p, c, &q).expect("q is in the support");
            (q, next)
        })
        .collect()
}

/// The reachable fragment of the configuration graph.
#[derive(Clone, Debug)]
pub struct ReachGraph<S: Ord> {
    pub configs: Vec<Configuration<S>>,
    pub succ: Vec<Vec<usize>>,
    /// BFS tree: predecessor index and the broadcaster that led here.
    parent: Vec<Option<(usize, S)>>,
}

impl<S: Ord + Clone> ReachGraph<S> {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Broadcasters leading from the root to node `i` along the BFS tree.
    pub fn path_to(&self, mut i: usize) -> Vec<S> {
        let mut path = Vec::new();
        while let Some((j, q)) = &self.parent[i] {
            path.push(q.clone());
            i = *j;
        }
        path.reverse();
        path
    }

    /// Nodes from which some node satisfying `target` is reachable.
    pub fn can_reach(&self, target: impl Fn(usize) -> bool) -> Vec<bool> {
        let n = self.len();
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in self.succ.iter().enumerate() {
            for &j in s {
                pred[j].push(i);
            }
        }
        let mut mark = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for (i, m) in mark.iter_mut().enumerate() {
            if target(i) {
                *m = true;
                queue.push_back(i);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &i in &pred[j] {
                if !mark[i] {
                    mark[i] = true;
                    queue.push_back(i);
                }
            }
        }
        mark
    }
}

/// Breadth-first exploration of everything reachable from `root`.
pub fn explore<P: Protocol>(
    p: &P,
    root: &Configuration<P::State>,
    budget: usize,
) -> Result<ReachGraph<P::State>, ReachError> {
    let mut index: HashMap<Configuration<P::State>, usize> = HashMap::new();
    let mut g = ReachGraph {
        configs: vec![root.clone()],
        succ: Vec::new(),
        parent: vec![None],
    };
    index.insert(root.clone(), 0);
    let mut next = 0;
    while next < g.configs.len() {
        let c = g.configs[next].clone();
        let mut out = Vec::new();
        for (q, d) in successors(p, &c) {
            let j = match index.get(&d) {
                Some(&j) => j,
                None => {
                    if g.configs.len() >= budget {
                        return Err(ReachError::BudgetExceeded { budget });
                    }
                    let j = g.configs.len();
                    index.insert(d.clone(), j);
                    g.configs.push(d);
                    g.parent.push(Some((next, q)));
                    j
                }
            };
            if !out.contains(&j) {
                out.push(j);
            }
        }
        g.succ.push(out);
        next += 1;
    }
    Ok(g)
}

/// True iff `c` is a `b`-consensus and every configuration reachable from
/// it is a `b`-consensus.
pub fn decide_stable<P: Protocol>(
    p: &P,
    c: &Configuration<P::State>,
    budget: usize,
) -> Result<bool, ReachError> {
    let b = is_consensus(p, c);
    if b == Consensus::Mixed {
        return Ok(false);
    }
    let mut seen: HashMap<Configuration<P::State>, ()> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(c.clone(), ());
    queue.push_back(c.clone());
    while let Some(x) = queue.pop_front() {
        for (_, d) in successors(p, &x) {
            if seen.contains_key(&d) {
                continue;
            }
            if is_consensus(p, &d) != b {
                return Ok(false);
            }
            if seen.len() >= budget {
                return Err(ReachError::BudgetExceeded { budget });
            }
            seen.insert(d.clone(), ());
            queue.push_back(d);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictStatus {
    Correct,
    Counterexample,
    BoundExceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A stable consensus on the wrong value is reachable.
    StableWrong,
    /// A reachable configuration from which no stable correct consensus
    /// can be reached.
    CannotStabilize,
}

#[derive(Clone, Debug)]
pub struct Counterexample<S: Ord> {
    pub violation: Violation,
    pub initial: Configuration<S>,
    /// Broadcasters to replay from `initial`.
    pub path: Vec<S>,
    pub last: Configuration<S>,
}

#[derive(Clone, Debug)]
pub struct Verdict<S: Ord> {
    pub status: VerdictStatus,
    pub witness: Option<Counterexample<S>>,
    pub explored: usize,
}

/// Checks that the execution from `initial` stabilizes to `expected` with
/// probability 1. Over the finite configuration graph this holds iff every
/// reachable configuration can reach a stable `expected`-consensus; we also
/// report any reachable stable wrong consensus first, as it is the more
/// informative witness.
pub fn model_check<P: Protocol>(
    p: &P,
    initial: &Configuration<P::State>,
    expected: bool,
    budget: usize,
) -> Verdict<P::State> {
    let g = match explore(p, initial, budget) {
        Ok(g) => g,
        Err(ReachError::BudgetExceeded { budget }) => {
            return Verdict {
                status: VerdictStatus::BoundExceeded,
                witness: None,
                explored: budget,
            }
        }
    };
    let cons: Vec<Consensus> = g.configs.iter().map(|c| is_consensus(p, c)).collect();
    let good = Consensus::of_bool(expected);
    let bad = Consensus::of_bool(!expected);
    // unstable w.r.t. value v: can reach a configuration that is not a v-consensus
    let reach_not_good = g.can_reach(|i| cons[i] != good);
    let reach_not_bad = g.can_reach(|i| cons[i] != bad);
    let stable_good: Vec<bool> = reach_not_good.iter().map(|r| !r).collect();
    let witness = |i: usize, violation| Counterexample {
        violation,
        initial: initial.clone(),
        path: g.path_to(i),
        last: g.configs[i].clone(),
    };
    if let Some(i) = (0..g.len()).find(|&i| !reach_not_bad[i]) {
        return Verdict {
            status: VerdictStatus::Counterexample,
            witness: Some(witness(i, Violation::StableWrong)),
            explored: g.len(),
        };
    }
    let reach_stable_good = g.can_reach(|i| stable_good[i]);
    if let Some(i) = (0..g.len()).find(|&i| !reach_stable_good[i]) {
        return Verdict {
            status: VerdictStatus::Counterexample,
            witness: Some(witness(i, Violation::CannotStabilize)),
            explored: g.len(),
        };
    }
    Verdict {
        status: VerdictStatus::Correct,
        witness: None,
        explored: g.len(),
    }
}

/// Replays a broadcaster sequence; `None` if some broadcaster is absent.
pub fn replay<P: Protocol>(
    p: &P,
    initial: &Configuration<P::State>,
    path: &[P::State],
) -> Option<Vec<Configuration<P::State>>> {
    let mut out = vec![initial.clone()];
    for q in path {
        let next = apply_broadcast(p, out.last().expect("nonempty"), q).ok()?;
        out.push(next);
    }
    Some(out)
}
