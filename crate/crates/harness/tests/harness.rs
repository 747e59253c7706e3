// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use dynlang::structure::ConcreteUpdate;
use dynlang::formula::program::ACCEPT;
use dynlang::{Engine, Formula};
use dynlang_harness::bench::{bench, to_csv, CSV_HEADER};
use dynlang_harness::difftest::difftest_mutated;
use dynlang_harness::script::ScriptError;
use dynlang_harness::{difftest, parse_script, run_script, Family, Limits, Spec};

fn small(f: Family) -> Limits {
    let mut l = Limits::for_family(f);
    l.max_len = l.max_len.min(12);
    l
}

#[test]
fn script_runs_with_trace() {
    let spec = Spec::parse(Family::Regular, "alphabet: a b\nregex: (a|b)*a(a|b)*").unwrap();
    let sc = parse_script("universe 4\nins a 2\nexpect accept true\nreset 2\nexpect accept false\n").unwrap();
    let (p, _) = spec.compile().unwrap();
    let e = Engine::new(&p).unwrap();
    let mut out = Vec::new();
    let (o, st) = run_script(&e, &sc, Some(&mut out)).unwrap();
    assert!(o.misses.is_empty());
    assert_eq!(o.trace, vec![true, false]);
    assert!(!st.accept());
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next(), Some("step=1 update=ins a 2 accept=true"));
}

#[test]
fn failed_expectations_are_reported() {
    let spec = Spec::Dyck1;
    let sc = spec.resolve_script(&parse_script("universe 2\nins ( 1\nexpect accept true\n").unwrap());
    assert_eq!(sc.updates(), vec![ConcreteUpdate::InsSym("(1".into(), 1)]);
    let (p, _) = spec.compile().unwrap();
    let (o, _) = run_script(&Engine::new(&p).unwrap(), &sc, None).unwrap();
    assert_eq!(o.misses.len(), 1);
}

#[test]
fn out_of_range_positions() {
    match parse_script("universe 4\nins a 9") {
        Err(ScriptError::OutOfRange { line: 2, pos: 9, n: 4, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn reports_are_deterministic() {
    for f in [Family::Regular, Family::Dyckn, Family::Tree] {
        let a = difftest(f, 17, 4, &small(f)).to_string();
        let b = difftest(f, 17, 4, &small(f)).to_string();
        assert_eq!(a, b);
        assert!(a.contains("failures=0"), "{a}");
    }
}

#[test]
fn efo_runs_are_audited() {
    let r = difftest(Family::Efo, 3, 3, &small(Family::Efo));
    assert!(r.passed(), "{r}");
    assert!(r.audits > 0);
}

#[test]
fn planted_bug_is_caught_and_shrunk() {
    let negate = |mut p: dynlang::DynamicProgram| {
        for u in &mut p.updates {
            if let Some(rule) = u.relations.get_mut(ACCEPT) {
                rule.body = Formula::Not(Arc::new(rule.body.clone()));
            }
        }
        p
    };
    let limits = Limits { seqs: 5, ..Limits::for_family(Family::Regular) };
    let r = difftest_mutated(Family::Regular, 1, 3, &limits, &negate);
    assert!(!r.passed());
    let c = r.counterexample.expect("counterexample");
    // a single update already flips the answer
    assert_eq!(c.script.items.len(), 1, "{}", c.script);
    assert_ne!(c.expected, c.actual);
}

#[test]
fn bench_csv() {
    let csv = to_csv(&bench(Family::Eqr, &[4], 1, 0).unwrap());
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert!(lines.next().unwrap().starts_with("eqr,4,8,"));
}

#[test]
fn cli_run_and_exit_codes() {
    use std::process::Command;
    let dir = std::env::temp_dir().join(format!("dynlang-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = dir.join("contains-a.dfa");
    let ok = dir.join("ok.script");
    let bad = dir.join("bad.script");
    std::fs::write(&spec, "alphabet: a b\nregex: (a|b)*a(a|b)*\n").unwrap();
    std::fs::write(&ok, "universe 3\nins b 1\nins a 3\nexpect accept true\n").unwrap();
    std::fs::write(&bad, "universe 3\nins a 7\n").unwrap();
    let run = |script: &std::path::Path| {
        Command::new(env!("CARGO_BIN_EXE_dynlang"))
            .args(["run", "--family", "regular", "--trace", "--spec"])
            .arg(&spec)
            .arg("--script")
            .arg(script)
            .output()
            .unwrap()
    };
    let out = run(&ok);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "step=1 update=ins b 1 accept=false\nstep=2 update=ins a 3 accept=true\n"
    );
    assert_eq!(run(&bad).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}
