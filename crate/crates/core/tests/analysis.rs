use std::collections::{BTreeSet, VecDeque};

use bcp::analysis::{
    coupon_probs, decide_stable, fit_nlogn, geom_tail_lower, geom_tail_upper, harmonic,
    harmonic_tail_threshold, measure_time, model_check, replay, solve_lambda, stats_csv,
    Estimator, FitError, VerdictStatus, Violation, DEFAULT_BUDGET,
};
use bcp::model::{apply_broadcast, init_config, is_consensus, seeded_rng, Consensus};
use bcp::par::Exec;
use bcp::presburger::{
    compile_formula, inequality_protocol, majority_protocol, modulo_protocol, parse_formula,
    LinearCongruence, LinearInequality,
};
use bcp::{Configuration, ProtocolBuilder, ProtocolSpec, StateId};
use proptest::prelude::*;
use rand::Rng;

/// Reachable set by plain BFS over `apply_broadcast`.
fn reachable(p: &ProtocolSpec, c0: &Configuration<StateId>) -> Vec<Configuration<StateId>> {
    let mut seen = BTreeSet::from([c0.clone()]);
    let mut queue = VecDeque::from([c0.clone()]);
    while let Some(c) = queue.pop_front() {
        for q in c.support() {
            let next = apply_broadcast(p, &c, q).unwrap();
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    seen.into_iter().collect()
}

fn brute_stable(p: &ProtocolSpec, c: &Configuration<StateId>) -> bool {
    let b = is_consensus(p, c);
    b != Consensus::Mixed && reachable(p, c).iter().all(|d| is_consensus(p, d) == b)
}

fn corpus() -> Vec<(ProtocolSpec, Vec<&'static str>)> {
    vec![
        (majority_protocol(), vec!["x", "y"]),
        (
            inequality_protocol(&LinearInequality::strict(vec![("x".into(), 2), ("y".into(), -1)], 1).unwrap()).unwrap(),
            vec!["x", "y"],
        ),
        (
            modulo_protocol(&LinearCongruence::new(vec![("x".into(), 1)], 0, 3).unwrap()).unwrap(),
            vec!["x"],
        ),
        (
            compile_formula(&parse_formula("(or (< x 2) (mod y 2 0))").unwrap()).unwrap(),
            vec!["x", "y"],
        ),
    ]
}

#[test]
fn decide_stable_matches_brute_force() {
    for (p, vars) in corpus() {
        for n in 1..=4u64 {
            for xs in 0..=n {
                let input: Vec<(&str, u64)> = match vars.as_slice() {
                    [a] => vec![(*a, n)],
                    [a, b] => vec![(*a, xs), (*b, n - xs)],
                    _ => unreachable!(),
                };
                if vars.len() == 1 && xs > 0 {
                    continue;
                }
                let c0 = init_config(&p, input).unwrap();
                for c in reachable(&p, &c0) {
                    assert_eq!(
                        decide_stable(&p, &c, DEFAULT_BUDGET).unwrap(),
                        brute_stable(&p, &c),
                        "{c:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn decide_stable_budget() {
    // a ↦ b, both accepting: stable, with six reachable configurations
    let mut b = ProtocolBuilder::new();
    let a = b.state("a");
    let bb = b.state("b");
    b.transition(a, bb, []);
    b.input("x", a);
    b.accept(a);
    b.accept(bb);
    let p = b.build().unwrap();
    let c = init_config(&p, [("x", 5)]).unwrap();
    assert!(decide_stable(&p, &c, 2).is_err());
    assert!(decide_stable(&p, &c, 6).unwrap());

    // an unstable configuration is refuted as soon as a wrong successor shows up
    let m = majority_protocol();
    let c = Configuration::from_counts([(m.id("x@1").unwrap(), 3), (m.id("y@1").unwrap(), 3)]);
    assert!(!decide_stable(&m, &c, 2).unwrap());
}

#[test]
fn model_check_examples() {
    let p = majority_protocol();
    let c0 = init_config(&p, [("x", 2), ("y", 1)]).unwrap();
    let v = model_check(&p, &c0, true, DEFAULT_BUDGET);
    assert_eq!(v.status, VerdictStatus::Correct);
    assert!(v.explored > 1);

    // a budget too small to finish
    let v = model_check(&p, &c0, true, 2);
    assert_eq!(v.status, VerdictStatus::BoundExceeded);

    // single agent, single silent state
    let mut b = ProtocolBuilder::new();
    let s = b.state("s");
    b.input("x", s);
    b.accept(s);
    let one = b.build().unwrap();
    let c0 = init_config(&one, [("x", 1)]).unwrap();
    assert_eq!(model_check(&one, &c0, true, 100).status, VerdictStatus::Correct);
    let v = model_check(&one, &c0, false, 100);
    assert_eq!(v.status, VerdictStatus::Counterexample);
    assert_eq!(v.witness.unwrap().violation, Violation::StableWrong);
}

#[test]
fn cannot_stabilize_counterexample() {
    // a and b swap forever: never a consensus
    let mut b = ProtocolBuilder::new();
    let a = b.state("a");
    let bb = b.state("b");
    b.transition(a, bb, []);
    b.transition(bb, a, []);
    b.input("x", a);
    b.accept(a);
    let p = b.build().unwrap();
    let c0 = init_config(&p, [("x", 2)]).unwrap();
    let v = model_check(&p, &c0, true, DEFAULT_BUDGET);
    assert_eq!(v.status, VerdictStatus::Counterexample);
    let w = v.witness.unwrap();
    assert_eq!(w.violation, Violation::CannotStabilize);
    let path = replay(&p, &w.initial, &w.path).unwrap();
    assert_eq!(path.last().unwrap(), &w.last);
}

#[test]
fn measure_majority_n100() {
    let p = majority_protocol();
    let s = measure_time(&p, &[("x", 51), ("y", 49)], 200, Estimator::Quiescence, u64::MAX, 1, Exec::default()).unwrap();
    assert_eq!(s.trials(), 200);
    assert_eq!(s.truncated(), 0);
    assert_eq!(s.outcomes(Consensus::One), 200);
    let bound = 2.0 * 100.0 * harmonic(100);
    assert!((bound - 1037.4).abs() < 0.1);
    assert!(s.mean_t() <= bound, "{}", s.mean_t());
}

#[test]
fn measure_silent_protocol_is_zero() {
    let mut b = ProtocolBuilder::new();
    let s = b.state("s");
    b.input("x", s);
    let p = b.build().unwrap();
    for est in [Estimator::Quiescence, Estimator::LastConsensusChange, Estimator::ExactStable { budget: 100 }] {
        let st = measure_time(&p, &[("x", 1)], 10, est, 1000, 0, Exec::Sequential).unwrap();
        assert!(st.records.iter().all(|r| r.t == 0));
    }
}

#[test]
fn measure_is_reproducible_across_exec_modes() {
    let p = majority_protocol();
    let run = |exec| {
        measure_time(&p, &[("x", 20), ("y", 12)], 40, Estimator::LastConsensusChange, u64::MAX, 77, exec).unwrap()
    };
    assert_eq!(run(Exec::Sequential).records, run(Exec::Parallel).records);
}

#[test]
fn truncated_trials_are_flagged() {
    let p = majority_protocol();
    let st = measure_time(&p, &[("x", 50), ("y", 50)], 5, Estimator::Quiescence, 3, 0, Exec::Sequential).unwrap();
    assert_eq!(st.truncated(), 5);
    let csv = stats_csv(&[("protocol", "majority".into())], &[st]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# rng=ChaCha8Rng"));
    assert_eq!(lines.next(), Some("# protocol=majority"));
    assert_eq!(lines.next(), Some("n,trial,seed,steps,T,estimator,truncated"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "100");
    assert_eq!(row[5], "quiescence");
    assert_eq!(row[6], "true");
}

#[test]
fn estimator_ordering_on_majority() {
    let p = majority_protocol();
    let input = [("x", 4u64), ("y", 3u64)];
    let exact = measure_time(&p, &input, 50, Estimator::ExactStable { budget: DEFAULT_BUDGET }, u64::MAX, 5, Exec::Sequential).unwrap();
    let quiet = measure_time(&p, &input, 50, Estimator::Quiescence, u64::MAX, 5, Exec::Sequential).unwrap();
    for (e, q) in exact.records.iter().zip(&quiet.records) {
        assert!(e.t <= q.t, "{e:?} {q:?}");
    }
}

#[test]
fn fit_examples() {
    let pts: Vec<(u64, f64)> = [10u64, 100, 1000].iter().map(|&n| (n, 3.0 * n as f64 * (n as f64).ln())).collect();
    let f = fit_nlogn(&pts).unwrap();
    assert!((f.a - 3.0).abs() < 1e-12);
    assert!(f.residual < 1e-12);
    assert!(!f.poor_fit);

    let quad: Vec<(u64, f64)> = [10u64, 100, 1000].iter().map(|&n| (n, (n * n) as f64)).collect();
    let f = fit_nlogn(&quad).unwrap();
    assert!(f.poor_fit, "{f:?}");
    assert!(!f.ratios_nonincreasing(0.05));

    assert_eq!(fit_nlogn(&[(10, 1.0), (10, 2.0), (20, 3.0)]), Err(FitError::DegenerateInput(2)));
}

#[test]
fn tail_bound_examples() {
    let n = 100;
    let ps = coupon_probs(n);
    // λ with λ - 1 - ln λ = k gives exactly e^{-k H_n}
    for k in [0.5, 1.0, 2.0] {
        let lambda = solve_lambda(k);
        assert!((lambda - 1.0 - lambda.ln() - k).abs() < 1e-9);
        let b = geom_tail_upper(&ps, lambda).unwrap();
        assert!((b / (-k * harmonic(n)).exp() - 1.0).abs() < 1e-8);
    }
    // λ = 1/7, p* = 1/n, μ = n·H_n ≥ n/2·ln n
    let b = geom_tail_lower(&ps, 1.0 / 7.0).unwrap();
    assert!(b <= (n as f64).powf(-0.5));
    let mut prev = 0.0;
    for k in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let l = harmonic_tail_threshold(n, k).unwrap();
        assert!(l > prev);
        prev = l;
    }
}

/// Inverse-transform sample of a geometric variable on {1, 2, …}.
fn geom<R: Rng>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let u: f64 = rng.random::<f64>();
    ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64 + 1
}

#[test]
fn tail_bounds_dominate_monte_carlo() {
    let n = 100u64;
    let ps = coupon_probs(n);
    let mu: f64 = ps.iter().map(|p| 1.0 / p).sum();
    let samples = 10_000;
    let mut rng = seeded_rng(2024);
    let xs: Vec<f64> = (0..samples)
        .map(|_| ps.iter().map(|&p| geom(p, &mut rng)).sum::<u64>() as f64)
        .collect();
    let freq = |pred: &dyn Fn(f64) -> bool| xs.iter().filter(|&&x| pred(x)).count() as f64 / samples as f64;
    let slack = |p: f64| 3.0 * (p.max(1.0 / samples as f64) * (1.0 - p) / samples as f64).sqrt();
    for lambda in [1.0, 1.1, 1.25, 1.5, 2.0, 3.0] {
        let b = geom_tail_upper(&ps, lambda).unwrap();
        let f = freq(&|x| x >= lambda * mu);
        assert!(f <= b + slack(b), "upper λ={lambda}: {f} > {b}");
    }
    for lambda in [0.3, 0.5, 0.7, 0.9, 1.0] {
        let b = geom_tail_lower(&ps, lambda).unwrap();
        let f = freq(&|x| x <= lambda * mu);
        assert!(f <= b + slack(b), "lower λ={lambda}: {f} > {b}");
    }
    let l = harmonic_tail_threshold(n, 1.0).unwrap();
    let f = freq(&|x| x >= l * n as f64 * (n as f64).ln());
    let b = 1.0 / n as f64;
    assert!(f <= b + slack(b));
}

proptest! {
    #[test]
    fn fit_recovers_constant(a in 0.1f64..50.0, ns in proptest::collection::btree_set(3u64..5000, 3..8)) {
        let pts: Vec<(u64, f64)> = ns.iter().map(|&n| (n, a * n as f64 * (n as f64).ln())).collect();
        let f = fit_nlogn(&pts).unwrap();
        prop_assert!((f.a - a).abs() / a < 1e-9);
        prop_assert!(!f.poor_fit);
    }

    #[test]
    fn upper_bound_monotone_in_lambda(n in 2u64..200, l1 in 1.0f64..5.0, d in 0.0f64..3.0) {
        let ps = coupon_probs(n);
        prop_assert!(geom_tail_upper(&ps, l1 + d).unwrap() <= geom_tail_upper(&ps, l1).unwrap());
        let lo = 1.0 / (1.0 + l1);
        prop_assert!(geom_tail_lower(&ps, lo).unwrap() <= 1.0);
    }
}
