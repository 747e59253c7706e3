// SPDX-License-Identifier: Apache-2.0

//! Differential testing of compiled programs against from-scratch oracles.

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use dynlang::cfl::{cfl_relation, cyk_oracle, CnfGrammar};
use dynlang::counting::{chain_invariants, counter_invariants, SuccBlock};
use dynlang::efo::{extensions, DisjointType, EfoProgram};
use dynlang::regular::r_name;
use dynlang::structure::{all_tuples, new_empty_structure, ConcreteUpdate, Elem, Structure};
use dynlang::trees::{expected_tables, labels_of, tree_universe};
use dynlang::{DynamicProgram, Engine, ProgramState};

use crate::family::{augmented, Family, Spec};
use crate::gen::{random_n, random_sequence, random_spec, rng_for, sequence_stream, SPEC_STREAM};
use crate::script::UpdateScript;

/// Sizes of a run. `seqs` sequences are drawn per spec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_n: usize,
    pub max_len: usize,
    pub seqs: usize,
    /// Check auxiliary tables after every step where the family has a
    /// structural audit.
    pub audit: bool,
}

impl Limits {
    pub fn for_family(f: Family) -> Limits {
        let (max_n, max_len) = match f {
            Family::Regular => (9, 30),
            Family::Dyck1 | Family::Dyckn => (12, 40),
            Family::Cfl => (6, 15),
            Family::Eqr => (10, 40),
            Family::Efo => (5, 20),
            Family::Tree => (15, 30),
        };
        Limits { max_n, max_len, seqs: 1, audit: true }
    }

    /// Largest universe a family is tested on.
    pub fn guard(f: Family) -> usize {
        match f {
            Family::Cfl => 8,
            Family::Efo => 7,
            Family::Tree => 15,
            _ => 64,
        }
    }

    pub fn check(&self, f: Family) -> Result<(), String> {
        if self.max_n == 0 {
            return Err("max-n must be positive".into());
        }
        if self.max_n > Self::guard(f) {
            return Err(format!("max-n {} exceeds the limit {} for {f}", self.max_n, Self::guard(f)));
        }
        if self.max_len > 10_000 {
            return Err(format!("max-len {} exceeds 10000", self.max_len));
        }
        Ok(())
    }
}

/// First failure of a case, after shrinking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub spec: String,
    pub script: UpdateScript,
    /// 1-based update index; 0 is the initial state.
    pub step: usize,
    pub expected: bool,
    pub actual: bool,
    /// Set for audit failures and engine errors.
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct Timing {
    pub update: Duration,
    pub oracle: Duration,
}

#[derive(Clone, Debug)]
pub struct DiffReport {
    pub family: String,
    pub seed: u64,
    pub cases: usize,
    pub sequences: usize,
    pub steps: usize,
    pub audits: usize,
    pub failures: usize,
    pub counterexample: Option<Counterexample>,
    pub timing: Timing,
}

impl DiffReport {
    fn new(family: &str, seed: u64) -> Self {
        DiffReport {
            family: family.to_string(),
            seed,
            cases: 0,
            sequences: 0,
            steps: 0,
            audits: 0,
            failures: 0,
            counterexample: None,
            timing: Timing::default(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn timing_line(&self) -> String {
        let per = |d: Duration| {
            if self.steps == 0 {
                0.0
            } else {
                d.as_secs_f64() * 1e6 / self.steps as f64
            }
        };
        format!(
            "mean_us_update={:.1} mean_us_oracle={:.1}",
            per(self.timing.update),
            per(self.timing.oracle)
        )
    }

    fn absorb(&mut self, other: DiffReport) {
        self.cases += other.cases;
        self.sequences += other.sequences;
        self.steps += other.steps;
        self.audits += other.audits;
        self.failures += other.failures;
        if self.counterexample.is_none() {
            self.counterexample = other.counterexample;
        }
        self.timing.update += other.timing.update;
        self.timing.oracle += other.timing.oracle;
    }
}

/// Everything except timing, so equal seeds print equal reports.
impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "family={} seed={} cases={} sequences={} steps={} audits={} failures={}",
            self.family, self.seed, self.cases, self.sequences, self.steps, self.audits, self.failures
        )?;
        if let Some(c) = &self.counterexample {
            writeln!(f, "counterexample: step={} expected={} actual={}", c.step, c.expected, c.actual)?;
            if let Some(note) = &c.note {
                writeln!(f, "note: {note}")?;
            }
            writeln!(f, "--- spec")?;
            write!(f, "{}", c.spec)?;
            writeln!(f, "--- script")?;
            write!(f, "{}", c.script)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Failure {
    step: usize,
    expected: bool,
    actual: bool,
    note: Option<String>,
}

/// A compiled spec ready to replay sequences.
pub struct Checker<'a> {
    spec: &'a Spec,
    grammar: Option<CnfGrammar>,
    engine: Engine,
    efo: Option<EfoProgram>,
    audit: bool,
}

#[derive(Default)]
struct SeqStats {
    steps: usize,
    audits: usize,
    timing: Timing,
}

impl<'a> Checker<'a> {
    pub fn new(spec: &'a Spec, audit: bool) -> Result<Self, String> {
        let (p, efo) = spec.compile().map_err(|e| e.to_string())?;
        Self::with_program(spec, &p, efo, audit)
    }

    /// Check `p` against the oracle of `spec`.
    pub fn with_program(spec: &'a Spec, p: &DynamicProgram, efo: Option<EfoProgram>, audit: bool) -> Result<Self, String> {
        let engine = Engine::new(p).map_err(|e| e.to_string())?.with_env_timeout();
        let grammar = match spec {
            Spec::Cfl(g) => Some(augmented(g)),
            _ => None,
        };
        Ok(Checker { spec, grammar, engine, efo, audit })
    }

    fn run(&self, n: usize, seq: &[ConcreteUpdate], stats: &mut SeqStats) -> Result<(), Failure> {
        let engine_err = |step: usize, e: &dyn fmt::Display| Failure {
            step,
            expected: false,
            actual: false,
            note: Some(format!("engine: {e}")),
        };
        let mut st = self.engine.initial_state(n).map_err(|e| engine_err(0, &e))?;
        let mut s = new_empty_structure(&self.engine.program().input, n).map_err(|e| engine_err(0, &e))?;
        self.compare(&st, &s, 0, stats)?;
        for (i, u) in seq.iter().enumerate() {
            let t = Instant::now();
            self.engine.apply(&mut st, u).map_err(|e| engine_err(i + 1, &e))?;
            stats.timing.update += t.elapsed();
            s.apply(u).map_err(|e| engine_err(i + 1, &e))?;
            stats.steps += 1;
            self.compare(&st, &s, i + 1, stats)?;
        }
        Ok(())
    }

    fn compare(&self, st: &ProgramState, s: &Structure, step: usize, stats: &mut SeqStats) -> Result<(), Failure> {
        let t = Instant::now();
        let expected = self.spec.oracle(s);
        stats.timing.oracle += t.elapsed();
        let actual = st.accept();
        if expected != actual {
            return Err(Failure { step, expected, actual, note: None });
        }
        if self.audit && step > 0 {
            if let Some(r) = self.audit_state(st, s) {
                stats.audits += 1;
                r.map_err(|msg| Failure { step, expected, actual, note: Some(msg) })?;
            }
        }
        Ok(())
    }

    /// Family-specific checks of auxiliary tables; `None` if there is none
    /// at this size.
    fn audit_state(&self, st: &ProgramState, s: &Structure) -> Option<Result<(), String>> {
        let n = s.n();
        match self.spec {
            Spec::Regular(a) if n <= 6 => Some(regular_audit(a, st, s)),
            Spec::Cfl(_) if n <= 5 => self.grammar.as_ref().map(|g| splice_audit(g, st, s)),
            Spec::Eqr { r, qf } => Some(counter_invariants(st, *r).and_then(|()| {
                if *qf {
                    chain_invariants(st, &SuccBlock::default())
                } else {
                    Ok(())
                }
            })),
            Spec::Efo { .. } => self.efo.as_ref().map(|p| efo_audit(p, st, s)),
            Spec::Tree(a) if n <= 7 => {
                let expect = expected_tables(&tree_universe(n), &labels_of(s, a), a);
                Some(
                    expect
                        .iter()
                        .find(|(name, t)| st.relation(name) != Some(t))
                        .map_or(Ok(()), |(name, _)| Err(format!("table {name} differs from the tree runs"))),
                )
            }
            _ => None,
        }
    }
}

fn regular_audit(a: &dynlang::regular::Dfa, st: &ProgramState, s: &Structure) -> Result<(), String> {
    let n = s.n() as Elem;
    for i in 1..=n {
        for j in i + 1..=n {
            let w: Vec<&str> = (i + 1..j).filter_map(|k| s.label(k)).collect();
            for p in 0..a.num_states() {
                let q = a.run_from(p, &w).map_err(|e| e.to_string())?;
                for q2 in 0..a.num_states() {
                    if st.holds(&r_name(p, q2), &[i, j]) != (q == q2) {
                        return Err(format!("R_{p}_{q2}({i},{j}) wrong"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// `R_{X,E}(i1,i2,j1,j2)` iff `X` derives the word with `[j1,j2]` cut out.
fn splice_audit(g: &CnfGrammar, st: &ProgramState, s: &Structure) -> Result<(), String> {
    let n = s.n();
    let e = g.empty.expect("augmented grammar");
    for x in 0..g.nonterminals.len() {
        let mut gx = g.clone();
        gx.start = x;
        let name = cfl_relation(g, x, e);
        let table = st.relation(&name).ok_or_else(|| format!("no relation {name}"))?;
        let mut memo: HashMap<Vec<String>, bool> = HashMap::new();
        for t in all_tuples(4, n) {
            let [i1, i2, j1, j2] = [t[0], t[1], t[2], t[3]];
            let expect = i1 <= j1 && j1 <= j2 && j2 <= i2 && {
                let word: Vec<String> = (i1..j1)
                    .chain(j2 + 1..=i2)
                    .filter_map(|i| s.label(i).map(str::to_string))
                    .collect();
                *memo.entry(word).or_insert_with_key(|w| cyk_oracle(&gx, w))
            };
            if table.get(&t) != expect {
                return Err(format!("{name}{t:?} should be {expect}"));
            }
        }
    }
    Ok(())
}

/// Every `f^I_τ(x̄)` against a tally of the types of all disjoint tuples,
/// and `Σ_τ f^∅_τ` against the number of disjoint tuples.
pub fn efo_audit(p: &EfoProgram, st: &ProgramState, s: &Structure) -> Result<(), String> {
    let n = s.n();
    for space in &p.spaces {
        let ell = space.ell;
        let mut tally: HashMap<(u64, u32, Vec<Elem>), u64> = HashMap::new();
        for z in all_tuples(ell, n) {
            if (0..ell).any(|i| (i + 1..ell).any(|j| z[i] == z[j])) {
                continue;
            }
            let tau = DisjointType::of(space, s, &z);
            for set in 0..1u32 << ell {
                let x: Vec<Elem> = (0..ell).filter(|i| set >> i & 1 == 1).map(|i| z[i]).collect();
                *tally.entry((tau.bits, set, x)).or_default() += 1;
            }
        }
        let mut total = 0;
        for bits in 0..space.num_types() as u64 {
            let tau = DisjointType { ell, bits };
            for set in 0..1u32 << ell {
                let idx: Vec<usize> = (0..ell).filter(|i| set >> i & 1 == 1).map(|i| i + 1).collect();
                for x in all_tuples(idx.len(), n) {
                    let got = p.count(st, tau, &idx, &x);
                    let want = tally.get(&(bits, set, x.clone())).copied().unwrap_or(0);
                    if got != want {
                        return Err(format!("f^{idx:?}_{bits} on {x:?} (ell={ell}) is {got}, expected {want}"));
                    }
                }
            }
            total += p.count(st, tau, &[], &[]);
        }
        if total != extensions(n, 0, ell) {
            return Err(format!("counts of {ell}-types sum to {total}"));
        }
    }
    Ok(())
}

/// Greedily delete updates while the case still fails.
fn shrink(checker: &Checker, n: usize, seq: &[ConcreteUpdate], first: Failure) -> (Vec<ConcreteUpdate>, Failure) {
    let mut cur: Vec<ConcreteUpdate> = seq[..first.step.min(seq.len())].to_vec();
    let mut fail = first;
    let mut changed = true;
    while changed {
        changed = false;
        let mut i = cur.len();
        while i > 0 {
            i -= 1;
            let mut cand = cur.clone();
            cand.remove(i);
            if let Err(f) = checker.run(n, &cand, &mut SeqStats::default()) {
                cand.truncate(f.step);
                cur = cand;
                fail = f;
                changed = true;
                i = i.min(cur.len());
            }
        }
    }
    (cur, fail)
}

/// Replay sequences on one spec. Sequence `j` of the run is drawn from
/// stream `j + 1` of `(seed, case)`.
pub fn difftest_spec(spec: &Spec, seed: u64, case: usize, limits: &Limits) -> DiffReport {
    match Checker::new(spec, limits.audit) {
        Ok(c) => difftest_checker(&c, seed, case, limits),
        Err(e) => {
            let mut r = DiffReport::new(spec.family().name(), seed);
            r.cases = 1;
            r.failures = 1;
            r.counterexample = Some(Counterexample {
                spec: spec.to_string(),
                script: UpdateScript::from_updates(spec.min_n(), &[]),
                step: 0,
                expected: false,
                actual: false,
                note: Some(format!("compile: {e}")),
            });
            r
        }
    }
}

/// As [`difftest_spec`], with a program substituted for the compiled one.
pub fn difftest_program(spec: &Spec, p: &DynamicProgram, seed: u64, limits: &Limits) -> DiffReport {
    let c = Checker::with_program(spec, p, None, false).expect("program loads");
    difftest_checker(&c, seed, 0, limits)
}

fn difftest_checker(c: &Checker, seed: u64, case: usize, limits: &Limits) -> DiffReport {
    let spec = c.spec;
    let mut report = DiffReport::new(spec.family().name(), seed);
    report.cases = 1;
    for j in 0..limits.seqs {
        let mut rng = rng_for(seed, case, sequence_stream(j));
        let n = random_n(spec, &mut rng, limits.max_n);
        let len = rand::Rng::gen_range(&mut rng, 1..=limits.max_len.max(1));
        let seq = random_sequence(&mut rng, &c.engine.program().input, n, len);
        let mut stats = SeqStats::default();
        let outcome = c.run(n, &seq, &mut stats);
        report.sequences += 1;
        report.steps += stats.steps;
        report.audits += stats.audits;
        report.timing.update += stats.timing.update;
        report.timing.oracle += stats.timing.oracle;
        if let Err(f) = outcome {
            report.failures = 1;
            let (min, f) = shrink(c, n, &seq, f);
            report.counterexample = Some(Counterexample {
                spec: spec.to_string(),
                script: UpdateScript::from_updates(n, &min),
                step: f.step,
                expected: f.expected,
                actual: f.actual,
                note: f.note,
            });
            break;
        }
    }
    report
}

/// Random specs of a family, `limits.seqs` sequences each. Case `i` draws
/// its spec from stream 0 of `(seed, i)`.
pub fn difftest(family: Family, seed: u64, cases: usize, limits: &Limits) -> DiffReport {
    let mut report = DiffReport::new(family.name(), seed);
    for case in 0..cases {
        let spec = random_spec(family, &mut rng_for(seed, case, SPEC_STREAM));
        report.absorb(difftest_spec(&spec, seed, case, limits));
    }
    report
}

/// Like [`difftest`], with every compiled program passed through `mutate`
/// first. Used to check that planted bugs are caught.
pub fn difftest_mutated(
    family: Family,
    seed: u64,
    cases: usize,
    limits: &Limits,
    mutate: &dyn Fn(DynamicProgram) -> DynamicProgram,
) -> DiffReport {
    let mut report = DiffReport::new(family.name(), seed);
    for case in 0..cases {
        let spec = random_spec(family, &mut rng_for(seed, case, SPEC_STREAM));
        let (p, efo) = spec.compile().expect("generated specs compile");
        let c = Checker::with_program(&spec, &mutate(p), efo, limits.audit).expect("program loads");
        report.absorb(difftest_checker(&c, seed, case, limits));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(f: Family) -> Limits {
        Limits { max_n: 4.min(Limits::for_family(f).max_n), max_len: 8, seqs: 3, audit: true }
    }

    #[test]
    fn every_family_passes_small_runs() {
        for f in Family::ALL {
            let r = difftest(f, 3, 2, &small(f));
            assert!(r.passed(), "{r}");
            assert_eq!(r.cases, 2);
            assert!(r.steps > 0);
        }
    }

    #[test]
    fn audits_are_counted() {
        let r = difftest(Family::Efo, 1, 1, &small(Family::Efo));
        assert_eq!(r.audits, r.steps);
        let r = difftest(Family::Dyck1, 1, 1, &small(Family::Dyck1));
        assert_eq!(r.audits, 0);
    }

    #[test]
    fn limits_are_guarded() {
        assert!(Limits { max_n: 9, ..Limits::for_family(Family::Cfl) }.check(Family::Cfl).is_err());
        assert!(Limits::for_family(Family::Cfl).check(Family::Cfl).is_ok());
    }
}
