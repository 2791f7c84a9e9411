use bcp::analysis::{decide_stable, explore, DEFAULT_BUDGET};
use bcp::model::{
    apply_broadcast, enabled_nonsilent, init_config, is_consensus, run_execution, sample_step,
    seeded_rng, Configuration, Consensus, Execution, Protocol, ProtocolBuilder, RunOptions,
    SimError, StopPolicy,
};
use bcp::presburger::{inequality_protocol, majority_protocol, LinearInequality};
use proptest::prelude::*;

fn cfg(p: &bcp::ProtocolSpec, items: &[(&str, u64)]) -> Configuration<bcp::StateId> {
    Configuration::from_counts(items.iter().map(|&(l, k)| (p.id(l).unwrap(), k)))
}

/// `a ↦ b, {a ↦ c, b ↦ d}` over states a, b, c, d.
fn abcd() -> bcp::ProtocolSpec {
    let mut b = ProtocolBuilder::new();
    let [a, bb, c, d] = ["a", "b", "c", "d"].map(|l| b.state(l));
    b.transition(a, bb, [(a, c), (bb, d)]);
    b.input("a", a);
    b.input("b", bb);
    b.build().unwrap()
}

#[test]
fn init_config_majority() {
    let p = majority_protocol();
    let c = init_config(&p, [("x", 3), ("y", 2)]).unwrap();
    assert_eq!(c, cfg(&p, &[("x@0", 3), ("y@0", 2)]));
    assert_eq!(c.size(), 5);
    assert_eq!(init_config(&p, [("x", 1)]).unwrap().size(), 1);
    assert_eq!(
        init_config(&p, [("z", 1)]),
        Err(SimError::UnknownSymbol("z".into()))
    );
    assert_eq!(init_config(&p, [("x", 0)]), Err(SimError::EmptyPopulation));
}

#[test]
fn init_config_inequality() {
    let ineq = LinearInequality::strict(vec![("x".into(), 1), ("y".into(), -1)], 0).unwrap();
    let p = inequality_protocol(&ineq).unwrap();
    let c = init_config(&p, [("x", 2), ("y", 2)]).unwrap();
    assert_eq!(c, cfg(&p, &[("1@0", 2), ("-1@0", 2)]));
}

#[test]
fn apply_broadcast_example() {
    let p = abcd();
    let c = cfg(&p, &[("a", 2), ("b", 1)]);
    let a = p.id("a").unwrap();
    assert_eq!(
        apply_broadcast(&p, &c, &a).unwrap(),
        cfg(&p, &[("b", 1), ("c", 1), ("d", 1)])
    );
    let d = p.id("d").unwrap();
    assert!(matches!(
        apply_broadcast(&p, &c, &d),
        Err(SimError::StateNotPresent(_))
    ));
    let b = p.id("b").unwrap();
    assert_eq!(apply_broadcast(&p, &c, &b).unwrap(), c);
}

#[test]
fn apply_broadcast_majority_first_step() {
    let p = majority_protocol();
    let c = cfg(&p, &[("x@0", 3), ("y@0", 2)]);
    let next = apply_broadcast(&p, &c, &p.id("x@0").unwrap()).unwrap();
    assert_eq!(next, cfg(&p, &[("d@1", 1), ("x@1", 2), ("y@1", 2)]));
}

#[test]
fn sample_step_frequencies() {
    let p = abcd();
    let c = cfg(&p, &[("a", 2), ("b", 1)]);
    let a = p.id("a").unwrap();
    let mut rng = seeded_rng(11);
    let trials = 100_000u32;
    let hits = (0..trials)
        .filter(|_| sample_step(&p, &c, &mut rng).unwrap().0 == a)
        .count() as f64;
    let (n, pr) = (trials as f64, 2.0 / 3.0);
    let sigma = (n * pr * (1.0 - pr)).sqrt();
    assert!((hits - n * pr).abs() <= 3.0 * sigma, "hits {hits}");

    let single = cfg(&p, &[("a", 1)]);
    for _ in 0..100 {
        assert_eq!(sample_step(&p, &single, &mut rng).unwrap().0, a);
    }
}

#[test]
fn sample_step_majority_branches() {
    let p = majority_protocol();
    let c = cfg(&p, &[("x@0", 1), ("y@0", 1)]);
    let after_x = cfg(&p, &[("d@1", 1), ("y@1", 1)]);
    let mut rng = seeded_rng(5);
    let trials = 20_000;
    let mut hits_x = 0.0;
    for _ in 0..trials {
        let (_, next) = sample_step(&p, &c, &mut rng).unwrap();
        if next == after_x {
            hits_x += 1.0;
        } else {
            assert_eq!(next, c, "y@0 is silent");
        }
    }
    let sigma = (trials as f64 * 0.25).sqrt();
    assert!((hits_x - trials as f64 / 2.0).abs() <= 3.0 * sigma);
}

#[test]
fn run_execution_examples() {
    let p = majority_protocol();
    let mut rng = seeded_rng(1);
    let t = run_execution(&p, [("x", 3), ("y", 2)], &mut rng, RunOptions::default()).unwrap();
    assert_eq!(t.final_consensus(), Consensus::One);
    assert!(!t.truncated);

    let t = run_execution(&p, [("x", 0), ("y", 1)], &mut rng, RunOptions::default()).unwrap();
    assert_eq!(t.final_consensus(), Consensus::Zero);
    assert_eq!(t.nonsilent_steps, 0);
    assert_eq!(t.step_count, 0);

    let ineq = LinearInequality::strict(vec![("x".into(), 1), ("y".into(), -1)], 0).unwrap();
    let q = inequality_protocol(&ineq).unwrap();
    let opts = RunOptions::new(StopPolicy::ExactStable { budget: DEFAULT_BUDGET }, 10_000);
    for seed in 0..20 {
        let t = run_execution(&q, [("x", 1), ("y", 2)], &mut seeded_rng(seed), opts).unwrap();
        assert!(t.stable_at.is_some());
        assert_eq!(t.final_consensus(), Consensus::One);
    }
}

#[test]
fn consensus_classification() {
    let p = majority_protocol();
    assert_eq!(is_consensus(&p, &cfg(&p, &[("d@1", 2)])), Consensus::One);
    assert_eq!(is_consensus(&p, &cfg(&p, &[("x@0", 1), ("x@1", 1)])), Consensus::Mixed);
    assert_eq!(
        is_consensus(&p, &cfg(&p, &[("x@0", 1), ("y@0", 1), ("d@0", 1)])),
        Consensus::Zero
    );
}

#[test]
fn enabled_nonsilent_examples() {
    let p = majority_protocol();
    assert!(enabled_nonsilent(&p, &cfg(&p, &[("d@1", 1), ("x@1", 1)])).is_empty());
    assert_eq!(
        enabled_nonsilent(&p, &cfg(&p, &[("x@0", 1), ("y@0", 1)])),
        vec![p.id("x@0").unwrap()]
    );
    let mut b = ProtocolBuilder::new();
    let s = b.state("s");
    b.input("x", s);
    let silent = b.build().unwrap();
    assert!(enabled_nonsilent(&silent, &Configuration::uniform(s, 4)).is_empty());
}

#[test]
fn same_seed_same_trace() {
    let p = majority_protocol();
    let opts = RunOptions {
        record: true,
        ..RunOptions::default()
    };
    let a = run_execution(&p, [("x", 30), ("y", 20)], &mut seeded_rng(3), opts).unwrap();
    let b = run_execution(&p, [("x", 30), ("y", 20)], &mut seeded_rng(3), opts).unwrap();
    let key = |t: &bcp::model::Trace<bcp::StateId>| {
        t.steps
            .as_ref()
            .unwrap()
            .iter()
            .map(|s| (s.index, s.broadcaster, s.config.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&a), key(&b));
    assert_eq!(a.step_count, b.step_count);
}

#[test]
fn silent_skipping_preserves_mean_steps() {
    // the mean number of steps to quiescence is the same with and without
    // skipping silent steps
    let p = majority_protocol();
    let trials = 3000;
    let mean = |skip: bool| {
        let opts = RunOptions {
            skip_silent: skip,
            ..RunOptions::default()
        };
        let total: u64 = (0..trials)
            .map(|s| {
                run_execution(&p, [("x", 6), ("y", 4)], &mut seeded_rng(s), opts)
                    .unwrap()
                    .step_count
            })
            .sum();
        total as f64 / trials as f64
    };
    let (a, b) = (mean(true), mean(false));
    assert!((a - b).abs() / b < 0.05, "{a} vs {b}");
}

#[test]
fn global_states_preserved_on_reachable_configs() {
    let p = majority_protocol();
    let c0 = init_config(&p, [("x", 3), ("y", 2)]).unwrap();
    let g = explore(&p, &c0, DEFAULT_BUDGET).unwrap();
    for c in &g.configs {
        let globals: std::collections::BTreeSet<_> = c.support().map(|&q| p.global_of(q)).collect();
        assert_eq!(globals.len(), 1, "{c:?}");
    }
}

#[test]
fn decide_stable_examples() {
    let p = majority_protocol();
    assert!(decide_stable(&p, &cfg(&p, &[("d@1", 2)]), 1000).unwrap());
    assert!(!decide_stable(&p, &cfg(&p, &[("x@0", 1), ("y@0", 1)]), 1000).unwrap());
    assert!(!decide_stable(&p, &cfg(&p, &[("x@0", 1), ("x@1", 1)]), 1000).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steps_conserve_agents(x in 0u64..8, y in 0u64..8, seed in any::<u64>()) {
        prop_assume!(x + y > 0);
        let p = majority_protocol();
        let c0 = init_config(&p, [("x", x), ("y", y)]).unwrap();
        let mut rng = seeded_rng(seed);
        let mut c = c0.clone();
        for _ in 0..50 {
            let (_, next) = sample_step(&p, &c, &mut rng).unwrap();
            prop_assert_eq!(next.size(), c0.size());
            c = next;
        }
    }

    #[test]
    fn silent_broadcast_is_identity(x in 1u64..6, y in 1u64..6) {
        let p = majority_protocol();
        let c = init_config(&p, [("x", x), ("y", y)]).unwrap();
        let y0 = p.id("y@0").unwrap();
        prop_assert!(p.is_silent(&y0));
        prop_assert_eq!(apply_broadcast(&p, &c, &y0).unwrap(), c);
    }

    #[test]
    fn execution_counts_match(x in 1u64..20, y in 0u64..20, seed in any::<u64>()) {
        let p = majority_protocol();
        let c0 = init_config(&p, [("x", x), ("y", y)]).unwrap();
        let mut ex = Execution::new(&p, c0);
        let mut rng = seeded_rng(seed);
        let mut fired = 0;
        while ex.next_nonsilent(&mut rng, u64::MAX).is_some() {
            fired += 1;
        }
        prop_assert_eq!(ex.nonsilent_steps(), fired);
        prop_assert!(ex.steps() >= fired);
        prop_assert_eq!(ex.active(), 0);
    }
}
