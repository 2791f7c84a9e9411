use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bcp::analysis::{decide_stable, replay};
use bcp::machines::{parity_rtm, parse_cm, run_cm, run_two_tape};
use bcp::model::format::{parse_protocol, print_protocol};
use bcp::model::sim::is_consensus;
use bcp::model::{run_execution, seeded_rng, RunOptions, StopPolicy};
use bcp::presburger::{eval_formula, parse_formula};
use bcp::{Configuration, Consensus};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
        .unwrap_or_else(|| panic!("no `{key}` in\n{out}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn simulate_replays_the_library_run_for_a_fixed_seed() {
    let file = fixture("majority.bcp");
    let args = ["simulate", path_str(&file), "--input", "x=3,y=2", "--seed", "7"];
    let a = bcp(&args);
    let b = bcp(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert_eq!(field(&out, "seed"), "7");
    assert_eq!(field(&out, "outcome"), "1");

    let spec = parse_protocol(&std::fs::read_to_string(&file).unwrap()).unwrap();
    let tr = run_execution(
        &spec,
        [("x", 3), ("y", 2)],
        &mut seeded_rng(7),
        RunOptions::new(StopPolicy::Quiescence, 100_000_000),
    )
    .unwrap();
    assert_eq!(field(&out, "steps"), tr.step_count.to_string());
    assert_eq!(field(&out, "nonsilent_steps"), tr.nonsilent_steps.to_string());
}

#[test]
fn simulate_lone_y_is_silent() {
    let o = bcp(&["simulate", path_str(&fixture("majority.bcp")), "--input", "x=0,y=1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(field(&out, "seed").parse::<u64>().is_ok());
    assert_eq!(field(&out, "outcome"), "0");
    assert_eq!(field(&out, "nonsilent_steps"), "0");
}

#[test]
fn malformed_file_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bcp");
    std::fs::write(&bad, "[states]\nx@0\n[inputs]\nx = q\n").unwrap();
    let o = bcp(&["simulate", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.bcp:4:5:"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bcp(&["simulate"]).status.code(), Some(2));
    assert_eq!(bcp(&["measure", "--n", "10"]).status.code(), Some(2));
}

#[test]
fn step_limit_exits_4() {
    let o = bcp(&["simulate", path_str(&fixture("majority.bcp")), "--input", "x=30,y=20", "--seed", "1", "--max-steps", "3"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn compiled_formula_stabilizes_to_the_formula_value() {
    let dir = tempfile::tempdir().unwrap();
    let lt = dir.path().join("lt.bcp");
    let f = "(< (+ x (* -1 y)) 0)";
    assert!(bcp(&["compile", "--formula", f, "-o", path_str(&lt)]).status.success());
    let formula = parse_formula(f).unwrap();
    for (x, y) in [(1, 3), (3, 1), (2, 2), (0, 4), (5, 0)] {
        let o = bcp(&["simulate", path_str(&lt), "--input", &format!("x={x},y={y}"), "--seed", "11", "--stop", "stable"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let want = eval_formula(&formula, &BTreeMap::from([("x".into(), x), ("y".into(), y)]));
        assert_eq!(field(&stdout(&o), "outcome"), if want { "1" } else { "0" }, "x={x} y={y}");
    }
}

#[test]
fn rtm_to_cm_agrees_with_the_machine() {
    let dir = tempfile::tempdir().unwrap();
    let cm_path = dir.path().join("parity.cm");
    let o = bcp(&["compile", "--rtm", path_str(&fixture("parity.rtm")), "--emit", "cm", "--space", "1", "-o", path_str(&cm_path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&cm_path).unwrap();
    assert!(text.starts_with("# bcp compile\n"));
    let cm = parse_cm(&text).unwrap();
    let m = parity_rtm();
    for x in 0..=8 {
        let want = run_two_tape(&m, x, &mut seeded_rng(0), 1000).outcome;
        let got = run_cm(&cm, &[x], &mut seeded_rng(x), 10_000_000, None).unwrap().outcome;
        assert_eq!(got, want, "x={x}");
    }
}

#[test]
fn cm_to_bcp_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.bcp");
    let o = bcp(&["compile", "--cm", path_str(&fixture("iszero.cm")), "--emit", "bcp", "--phases", "1", "-o", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# phases=1\n"));
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    assert_eq!(print_protocol(&parse_protocol(&text).unwrap()), body);
}

#[test]
fn over_budget_compilation_exits_5_with_stage() {
    let o = bcp(&["compile", "--cm", path_str(&fixture("powtwo.cm")), "--emit", "bcp", "-k", "2", "--max-states", "1000"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage cm→bcp"));
}

#[test]
fn measure_single_trial_sweep_refuses_to_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let o = bcp(&["measure", "--protocol", "majority", "--n", "10,100", "--trials", "1", "--seed", "3", "-o", path_str(&csv)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("fit skipped"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,trial,seed,steps,T,estimator,truncated");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("10,0,3,") && rows[2].starts_with("100,0,3,"));
}

#[test]
fn measure_is_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["measure", "--protocol", "majority", "--n", "10,20,40", "--trials", "30", "--seed", "5"];
    assert!(bcp(&[&base[..], &["-o", path_str(&a)]].concat()).status.success());
    assert!(bcp(&[&base[..], &["-o", path_str(&b), "--sequential"]].concat()).status.success());
    let a = std::fs::read(&a).unwrap();
    assert_eq!(a, std::fs::read(&b).unwrap());
    assert!(String::from_utf8_lossy(&a).contains("# seed=5\n"));
}

#[test]
fn measure_clock_reports_against_the_bound() {
    let o = bcp(&["measure", "--protocol", "clock", "--n", "1000", "--trials", "20", "--seed", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("n=1000 ")).unwrap();
    let mean: f64 = line.split(' ').find_map(|w| w.strip_prefix("mean_T=")).unwrap().parse().unwrap();
    let bound = 2.0 * 1000.0 * 1000f64.ln() + 4.0;
    assert!(line.contains("bound_2nlnn+4="));
    assert!(mean > 0.0 && mean <= bound, "{line}");
}

#[test]
fn check_compiled_formula_is_correct() {
    let dir = tempfile::tempdir().unwrap();
    let lt = dir.path().join("lt.bcp");
    assert!(bcp(&["compile", "--formula", "(< (+ x (* -1 y)) 0)", "-o", path_str(&lt)]).status.success());
    let o = bcp(&["check", path_str(&lt), "--inputs-up-to", "5", "--oracle", "formula"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(field(&out, "verdict"), "correct");
    assert_eq!(field(&out, "inputs"), "20");
}

#[test]
fn check_budget_exits_5() {
    let o = bcp(&[
        "check",
        path_str(&fixture("majority.bcp")),
        "--formula",
        "(> (+ x (* -1 y)) 0)",
        "--inputs-up-to",
        "4",
        "--budget",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(field(&stdout(&o), "verdict"), "bound_exceeded");
}

#[test]
fn check_step_bp_conformance() {
    let o = bcp(&["check", "stepbp", "--conformance", "--n", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(field(&out, "verdict"), "correct");
    for cmd in ["mul2", "inc", "divmod2", "iszero"] {
        assert!(out.lines().any(|l| l.starts_with(cmd)), "{cmd} missing");
    }
}

/// Dropping `y`'s transition leaves a protocol that never flips back to 0.
#[test]
fn mutated_majority_yields_a_replayable_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("majority.bcp")).unwrap();
    let mutated: String = text.lines().filter(|l| !l.starts_with("y@1 ->")).map(|l| format!("{l}\n")).collect();
    let file = dir.path().join("mut.bcp");
    std::fs::write(&file, &mutated).unwrap();
    let replay_path = dir.path().join("cex.txt");
    let o = bcp(&[
        "check",
        path_str(&file),
        "--formula",
        "(> (+ x (* -1 y)) 0)",
        "--inputs-up-to",
        "4",
        "--replay",
        path_str(&replay_path),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(field(&stdout(&o), "verdict"), "counterexample");

    let spec = parse_protocol(&mutated).unwrap();
    let cex = std::fs::read_to_string(&replay_path).unwrap();
    let config = |rest: &str| {
        Configuration::from_counts(rest.split_whitespace().map(|e| {
            let (l, k) = e.rsplit_once(':').unwrap();
            (spec.id(l).unwrap(), k.parse().unwrap())
        }))
    };
    let mut initial = None;
    let mut last = None;
    let mut path = Vec::new();
    for l in cex.lines().filter(|l| !l.starts_with('#')) {
        let (kind, rest) = l.split_once(' ').unwrap();
        match kind {
            "initial" => initial = Some(config(rest)),
            "step" => path.push(spec.id(rest).unwrap()),
            "last" => last = Some(config(rest)),
            other => panic!("unexpected line kind {other}"),
        }
    }
    let initial = initial.unwrap();
    let x = initial.get(&spec.id("x@0").unwrap());
    let y = initial.get(&spec.id("y@0").unwrap());
    let configs = replay(&spec, &initial, &path).expect("path replays");
    let end = configs.last().unwrap();
    assert_eq!(Some(end), last.as_ref());
    let expected = Consensus::of_bool(x > y);
    let reached = is_consensus(&spec, end);
    assert!(reached != expected, "x={x} y={y}");
    assert!(reached == Consensus::Mixed || decide_stable(&spec, end, 10_000).unwrap());
}
