// SPDX-License-Identifier: Apache-2.0

//! Deterministic finite automata and their dynamic programs.

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use crate::formula::ast::*;
use crate::formula::program::{DynamicProgram, PrecomputedTables, ProgramBuilder, UpdateKind, ACCEPT};
use crate::formula::transform::eliminate_init;
use crate::structure::{Elem, RelTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DfaError {
    #[error("automaton has no states")]
    NoStates,
    #[error("state index {0} out of range")]
    BadState(usize),
    #[error("transition table row {row} has {got} entries, alphabet has {expected}")]
    NotTotal { row: usize, expected: usize, got: usize },
    #[error("symbol `{0}` not in the alphabet")]
    UnknownSymbol(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
}

/// A complete DFA. States are indices into `states`; `delta[q][a]` is the
/// successor of `q` under `alphabet[a]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub delta: Vec<Vec<usize>>,
    pub start: usize,
    pub accepting: Vec<bool>,
}

impl Dfa {
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        delta: Vec<Vec<usize>>,
        start: usize,
        accepting: Vec<bool>,
    ) -> Result<Self, DfaError> {
        let d = Dfa {
            states,
            alphabet,
            delta,
            start,
            accepting,
        };
        d.validate()?;
        Ok(d)
    }

    /// Build from numbered states `q0..q{k-1}`.
    pub fn from_table<S: AsRef<str>>(
        alphabet: &[S],
        delta: Vec<Vec<usize>>,
        start: usize,
        accepting: &[usize],
    ) -> Result<Self, DfaError> {
        let k = delta.len();
        let mut acc = vec![false; k];
        for &q in accepting {
            *acc.get_mut(q).ok_or(DfaError::BadState(q))? = true;
        }
        Dfa::new(
            (0..k).map(|i| format!("q{i}")).collect(),
            alphabet.iter().map(|s| s.as_ref().to_string()).collect(),
            delta,
            start,
            acc,
        )
    }

    pub fn validate(&self) -> Result<(), DfaError> {
        let k = self.states.len();
        if k == 0 {
            return Err(DfaError::NoStates);
        }
        for names in [&self.states, &self.alphabet] {
            let mut seen = std::collections::BTreeSet::new();
            for s in names.iter() {
                if !seen.insert(s) {
                    return Err(DfaError::Duplicate(s.clone()));
                }
            }
        }
        if self.start >= k {
            return Err(DfaError::BadState(self.start));
        }
        if self.delta.len() != k || self.accepting.len() != k {
            return Err(DfaError::NotTotal {
                row: self.delta.len().min(self.accepting.len()),
                expected: k,
                got: self.delta.len(),
            });
        }
        for (row, r) in self.delta.iter().enumerate() {
            if r.len() != self.alphabet.len() {
                return Err(DfaError::NotTotal {
                    row,
                    expected: self.alphabet.len(),
                    got: r.len(),
                });
            }
            if let Some(&q) = r.iter().find(|&&q| q >= k) {
                return Err(DfaError::BadState(q));
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn symbol_index(&self, s: &str) -> Result<usize, DfaError> {
        self.alphabet
            .iter()
            .position(|a| a == s)
            .ok_or_else(|| DfaError::UnknownSymbol(s.to_string()))
    }

    pub fn step(&self, q: usize, s: &str) -> Result<usize, DfaError> {
        Ok(self.delta[q][self.symbol_index(s)?])
    }

    /// `δ*(q, w)`.
    pub fn run_from<S: AsRef<str>>(&self, q: usize, w: &[S]) -> Result<usize, DfaError> {
        w.iter().try_fold(q, |q, s| self.step(q, s.as_ref()))
    }

    pub fn accepts<S: AsRef<str>>(&self, w: &[S]) -> Result<bool, DfaError> {
        Ok(self.accepting[self.run_from(self.start, w)?])
    }

    /// The equivalent minimal DFA (reachable part, Moore refinement).
    pub fn minimize(&self) -> Dfa {
        let mut reach = vec![false; self.num_states()];
        let mut order = vec![self.start];
        reach[self.start] = true;
        let mut i = 0;
        while i < order.len() {
            for &t in &self.delta[order[i]] {
                if !reach[t] {
                    reach[t] = true;
                    order.push(t);
                }
            }
            i += 1;
        }
        let mut class: HashMap<usize, usize> = order.iter().map(|&q| (q, self.accepting[q] as usize)).collect();
        let mut count = 0;
        loop {
            let mut sigs: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
            let mut next = HashMap::new();
            for &q in &order {
                let sig = (class[&q], self.delta[q].iter().map(|t| class[t]).collect());
                let len = sigs.len();
                let c = *sigs.entry(sig).or_insert(len);
                next.insert(q, c);
            }
            let done = sigs.len() == count;
            count = sigs.len();
            class = next;
            if done {
                break;
            }
        }
        // renumber classes in order of first discovery for a canonical result
        let mut renum = HashMap::new();
        for &q in &order {
            let len = renum.len();
            renum.entry(class[&q]).or_insert(len);
        }
        let k = renum.len();
        let mut delta = vec![Vec::new(); k];
        let mut accepting = vec![false; k];
        for &q in &order {
            let c = renum[&class[&q]];
            if delta[c].is_empty() {
                delta[c] = self.delta[q].iter().map(|t| renum[&class[t]]).collect();
                accepting[c] = self.accepting[q];
            }
        }
        Dfa {
            states: (0..k).map(|i| format!("m{i}")).collect(),
            alphabet: self.alphabet.clone(),
            delta,
            start: renum[&class[&self.start]],
            accepting,
        }
    }

    /// Language equality over the same alphabet (product reachability).
    pub fn equivalent(&self, other: &Dfa) -> bool {
        if self.alphabet != other.alphabet {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        let mut queue = VecDeque::from([(self.start, other.start)]);
        seen.insert((self.start, other.start));
        while let Some((p, q)) = queue.pop_front() {
            if self.accepting[p] != other.accepting[q] {
                return false;
            }
            for a in 0..self.alphabet.len() {
                let next = (self.delta[p][a], other.delta[q][a]);
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        true
    }
}

pub fn r_name(p: usize, q: usize) -> String {
    format!("R_{p}_{q}")
}

pub fn i_name(q: usize) -> String {
    format!("I_{q}")
}

pub fn f_name(p: usize) -> String {
    format!("F_{p}")
}

fn r(p: usize, q: usize, a: Term, b: Term) -> Formula {
    rel(&r_name(p, q), vec![a, b])
}

fn between(a: Term, y: Term, b: Term) -> Formula {
    and(vec![lt(a, y.clone()), lt(y, b)])
}

/// State pairs `(p', q')` joined across the updated position: transitions
/// on `σ` for an insertion, the identity for a reset.
fn joins(a: &Dfa, sym: Option<usize>) -> Vec<(usize, usize)> {
    (0..a.num_states())
        .map(|p| (p, sym.map_or(p, |s| a.delta[p][s])))
        .collect()
}

fn add_updates(a: &Dfa, b: &mut ProgramBuilder, kinds: &[UpdateKind]) {
    let k = a.num_states();
    let (y, x, x1, x2) = (var("y"), var("x"), var("x1"), var("x2"));
    for kind in kinds {
        let sym = match kind {
            UpdateKind::Ins(s) => Some(a.symbol_index(s).expect("alphabet mismatch")),
            _ => None,
        };
        let js = joins(a, sym);
        for p in 0..k {
            for q in 0..k {
                let body = or(vec![
                    and(vec![not(between(x1.clone(), y.clone(), x2.clone())), r(p, q, x1.clone(), x2.clone())]),
                    and(vec![
                        between(x1.clone(), y.clone(), x2.clone()),
                        or(js
                            .iter()
                            .map(|&(p1, q1)| and(vec![r(p, p1, x1.clone(), y.clone()), r(q1, q, y.clone(), x2.clone())]))
                            .collect()),
                    ]),
                ]);
                b.update_rel(kind, &r_name(p, q), &["x1", "x2"], body);
            }
            let q = p;
            let i_body = or(vec![
                and(vec![le(x.clone(), y.clone()), rel(&i_name(q), vec![x.clone()])]),
                and(vec![
                    lt(y.clone(), x.clone()),
                    or(js
                        .iter()
                        .map(|&(p1, q1)| and(vec![rel(&i_name(p1), vec![y.clone()]), r(q1, q, y.clone(), x.clone())]))
                        .collect()),
                ]),
            ]);
            b.update_rel(kind, &i_name(q), &["x"], i_body);
            let f_body = or(vec![
                and(vec![le(y.clone(), x.clone()), rel(&f_name(p), vec![x.clone()])]),
                and(vec![
                    lt(x.clone(), y.clone()),
                    or(js
                        .iter()
                        .map(|&(p1, q1)| and(vec![r(p, p1, x.clone(), y.clone()), rel(&f_name(q1), vec![y.clone()])]))
                        .collect()),
                ]),
            ]);
            b.update_rel(kind, &f_name(p), &["x"], f_body);
        }
        let acc = or(js
            .iter()
            .map(|&(p1, q1)| and(vec![rel(&i_name(p1), vec![y.clone()]), rel(&f_name(q1), vec![y.clone()])]))
            .collect());
        b.update_rel(kind, ACCEPT, &[], acc);
    }
}

fn declare(a: &Dfa, b: &mut ProgramBuilder) {
    let k = a.num_states();
    for p in 0..k {
        for q in 0..k {
            b.relation(&r_name(p, q), 2);
        }
    }
    for q in 0..k {
        b.relation(&i_name(q), 1);
    }
    for p in 0..k {
        b.relation(&f_name(p), 1);
    }
}

/// The quantifier-free program maintaining `R_{p,q}(i,j)` (the run from
/// `p` over the open interval `(i,j)` ends in `q`), `I_q` (prefix runs) and
/// `F_p` (suffix runs). Initialization is compiled away.
pub fn compile_regular(a: &Dfa) -> DynamicProgram {
    eliminate_init(&compile_regular_with_init(a))
}

/// [`compile_regular`] with its initialization rules in place.
pub fn compile_regular_with_init(a: &Dfa) -> DynamicProgram {
    let mut b = ProgramBuilder::word("regular", &a.alphabet);
    declare(a, &mut b);
    let kinds = b.kinds();
    add_updates(a, &mut b, &kinds);
    let (x1, x2) = (var("x1"), var("x2"));
    for p in 0..a.num_states() {
        b.init_rel(&r_name(p, p), &["x1", "x2"], lt(x1.clone(), x2.clone()));
        if a.accepting[p] {
            b.init_rel(&f_name(p), &["x"], Formula::True);
        }
    }
    b.init_rel(&i_name(a.start), &["x"], Formula::True);
    if a.accepting[a.start] {
        b.init_rel(ACCEPT, &[], Formula::True);
    }
    b.build().expect("regular program is well formed")
}

/// Power table of `σ0`: `pow[m][p] = δ*(p, σ0^m)` for `m ≤ n`.
fn powers(a: &Dfa, s0: usize, n: usize) -> Vec<Vec<usize>> {
    let mut pow = vec![(0..a.num_states()).collect::<Vec<_>>()];
    for m in 1..=n {
        let row = pow[m - 1].iter().map(|&q| a.delta[q][s0]).collect();
        pow.push(row);
    }
    pow
}

/// Change-only variant: every position starts labeled `σ0`; the same update
/// formulas, with initial tables computed from powers of `σ0`.
pub fn compile_regular_alt(a: &Dfa, initial: &str) -> Result<DynamicProgram, DfaError> {
    let s0 = a.symbol_index(initial)?;
    let mut b = ProgramBuilder::change_only("regular-alt", &a.alphabet, initial);
    declare(a, &mut b);
    let kinds = b.kinds();
    add_updates(a, &mut b, &kinds);
    let dfa = a.clone();
    b.precompute(move |n| {
        let pow = powers(&dfa, s0, n);
        let k = dfa.num_states();
        let mut t = PrecomputedTables::default();
        for p in 0..k {
            for q in 0..k {
                let mut tab = RelTable::new(2, n);
                for i in 1..=n {
                    for j in i + 1..=n {
                        tab.set(&[i as Elem, j as Elem], pow[j - i - 1][p] == q);
                    }
                }
                t.relations.insert(r_name(p, q), tab);
            }
            let mut it = RelTable::new(1, n);
            let mut ft = RelTable::new(1, n);
            for i in 1..=n {
                it.set(&[i as Elem], pow[i - 1][dfa.start] == p);
                ft.set(&[i as Elem], dfa.accepting[pow[n - i][p]]);
            }
            t.relations.insert(i_name(p), it);
            t.relations.insert(f_name(p), ft);
        }
        let mut acc = RelTable::new(0, n);
        acc.set(&[], dfa.accepting[pow[n][dfa.start]]);
        t.relations.insert(ACCEPT.to_string(), acc);
        t
    });
    Ok(b.build().expect("regular program is well formed"))
}

/// The hand-written program for `(a+b)*a(a+b)*` with relations `A`, `I`, `F`.
///
/// The printed formulas read `I(y)`/`F(y)` in the unchanged branch and mix
/// `∧`/`∨` without brackets; this uses `I(x)`/`F(x)` and groups the
/// disjunction under the interval guard.
pub fn example_reg_program() -> DynamicProgram {
    let (y, x, x1, x2) = (var("y"), var("x"), var("x1"), var("x2"));
    let a = |u: &Term, v: &Term| rel("A", vec![u.clone(), v.clone()]);
    let i = |u: &Term| rel("I", vec![u.clone()]);
    let f = |u: &Term| rel("F", vec![u.clone()]);
    let outside = or(vec![le(y.clone(), x1.clone()), le(x2.clone(), y.clone())]);
    let inside = between(x1.clone(), y.clone(), x2.clone());
    let mut b = ProgramBuilder::word("example-reg", &["a", "b"]);
    b.relation("A", 2).relation("I", 1).relation("F", 1);
    let ins_a = UpdateKind::Ins("a".into());
    b.update_rel(&ins_a, "A", &["x1", "x2"], or(vec![and(vec![outside.clone(), a(&x1, &x2)]), inside.clone()]));
    b.update_rel(&ins_a, "I", &["x"], or(vec![and(vec![le(x.clone(), y.clone()), i(&x)]), lt(y.clone(), x.clone())]));
    b.update_rel(&ins_a, "F", &["x"], or(vec![and(vec![le(y.clone(), x.clone()), f(&x)]), lt(x.clone(), y.clone())]));
    b.update_rel(&ins_a, ACCEPT, &[], Formula::True);
    for kind in [UpdateKind::Ins("b".into()), UpdateKind::Reset] {
        b.update_rel(
            &kind,
            "A",
            &["x1", "x2"],
            or(vec![
                and(vec![outside.clone(), a(&x1, &x2)]),
                and(vec![inside.clone(), or(vec![a(&x1, &y), a(&y, &x2)])]),
            ]),
        );
        b.update_rel(
            &kind,
            "I",
            &["x"],
            or(vec![
                and(vec![le(x.clone(), y.clone()), i(&x)]),
                and(vec![lt(y.clone(), x.clone()), or(vec![i(&y), a(&y, &x)])]),
            ]),
        );
        b.update_rel(
            &kind,
            "F",
            &["x"],
            or(vec![
                and(vec![le(y.clone(), x.clone()), f(&x)]),
                and(vec![lt(x.clone(), y.clone()), or(vec![f(&y), a(&x, &y)])]),
            ]),
        );
        b.update_rel(&kind, ACCEPT, &[], or(vec![i(&y), f(&y)]));
    }
    b.build().expect("example program is well formed")
}

/// The DFA of `(a+b)*a(a+b)*`.
pub fn example_reg_dfa() -> Dfa {
    Dfa::from_table(&["a", "b"], vec![vec![1, 0], vec![1, 1]], 0, &[1]).unwrap()
}

/// Change-only program for the words over `{a,b}` of odd length whose
/// middle letter is `b`, using the precomputed middle position `M`.
pub fn middle_program() -> DynamicProgram {
    let mut b = ProgramBuilder::change_only("middle", &["a", "b"], "a");
    b.pre_relation("M", 1);
    let y = var("y");
    b.update_rel(
        &UpdateKind::Ins("a".into()),
        ACCEPT,
        &[],
        and(vec![prop(ACCEPT), not(rel("M", vec![y.clone()]))]),
    );
    b.update_rel(&UpdateKind::Ins("b".into()), ACCEPT, &[], or(vec![prop(ACCEPT), rel("M", vec![y])]));
    b.precompute(|n| {
        let mut m = RelTable::new(1, n);
        if n % 2 == 1 {
            m.set(&[n.div_ceil(2) as Elem], true);
        }
        let mut t = PrecomputedTables::default();
        t.relations.insert("M".into(), m);
        t
    });
    b.build().expect("middle program is well formed")
}

/// Oracle for [`middle_program`].
pub fn middle_oracle<S: AsRef<str>>(w: &[S]) -> bool {
    w.len() % 2 == 1 && w[w.len() / 2].as_ref() == "b"
}

/// Whether inserting `σ` anywhere never changes membership: on the minimal
/// DFA, every state loops on `σ`.
pub fn is_neutral(a: &Dfa, sym: &str) -> Result<bool, DfaError> {
    let m = a.minimize();
    let s = m.symbol_index(sym)?;
    Ok((0..m.num_states()).all(|q| m.delta[q][s] == q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::engine::{run_program, Engine};
    use crate::formula::program::Tier;
    use crate::structure::{ConcreteUpdate, Structure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dfa(rng: &mut ChaCha8Rng, k: usize, sigma: usize) -> Dfa {
        let alphabet: Vec<String> = (0..sigma).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        let delta = (0..k).map(|_| (0..sigma).map(|_| rng.gen_range(0..k)).collect()).collect();
        let acc: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.5)).collect();
        Dfa::from_table(&alphabet, delta, 0, &acc).unwrap()
    }

    fn random_updates(rng: &mut ChaCha8Rng, alphabet: &[String], n: usize, len: usize) -> Vec<ConcreteUpdate> {
        (0..len)
            .map(|_| {
                let pos = rng.gen_range(1..=n) as Elem;
                if rng.gen_bool(0.25) {
                    ConcreteUpdate::Reset(pos)
                } else {
                    ConcreteUpdate::ins(alphabet[rng.gen_range(0..alphabet.len())].clone(), pos)
                }
            })
            .collect()
    }

    fn oracle_trace(a: &Dfa, p: &DynamicProgram, n: usize, seq: &[ConcreteUpdate]) -> Vec<bool> {
        let mut s = crate::structure::new_empty_structure(&p.input, n).unwrap();
        seq.iter()
            .map(|u| {
                s.apply(u).unwrap();
                a.accepts(crate::structure::word_of(&s).unwrap().symbols()).unwrap()
            })
            .collect()
    }

    #[test]
    fn example_sequences() {
        let p = compile_regular(&example_reg_dfa());
        let seq = [
            ConcreteUpdate::ins("b", 2),
            ConcreteUpdate::ins("a", 4),
            ConcreteUpdate::Reset(4),
        ];
        assert_eq!(run_program(&p, 4, &seq).unwrap(), vec![false, true, false]);
        let q = example_reg_program();
        assert_eq!(run_program(&q, 4, &seq).unwrap(), vec![false, true, false]);
        assert_eq!(run_program(&q, 3, &[ConcreteUpdate::ins("a", 2)]).unwrap(), vec![true]);
        assert_eq!(run_program(&q, 3, &[ConcreteUpdate::ins("b", 2)]).unwrap(), vec![false]);
    }

    #[test]
    fn compiled_program_is_prop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = compile_regular(&random_dfa(&mut rng, 3, 2));
        assert_eq!(p.tier, Tier::Prop);
        assert!(p.fun_init.is_empty() && p.rel_init.keys().all(|k| k == ACCEPT));
    }

    #[test]
    fn sigma_star_always_accepts() {
        let a = Dfa::from_table(&["a", "b"], vec![vec![0, 0]], 0, &[0]).unwrap();
        let p = compile_regular(&a);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = random_updates(&mut rng, &a.alphabet, 5, 20);
        assert!(run_program(&p, 5, &seq).unwrap().into_iter().all(|b| b));
    }

    #[test]
    fn initial_substring_relations() {
        let a = Dfa::from_table(&["a"], vec![vec![1], vec![0]], 0, &[0]).unwrap();
        let p = compile_regular(&a);
        let e = Engine::new(&p).unwrap();
        let mut st = e.initial_state(4).unwrap();
        // one reset of an empty position leaves the word empty
        e.apply(&mut st, &ConcreteUpdate::Reset(3)).unwrap();
        for p_ in 0..2 {
            for q in 0..2 {
                assert_eq!(st.holds(&r_name(p_, q), &[1, 2]), p_ == q);
            }
        }
    }

    #[test]
    fn random_dfas_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..15 {
            let k = rng.gen_range(1..=4);
            let sigma = rng.gen_range(1..=3);
            let a = random_dfa(&mut rng, k, sigma);
            let p = compile_regular(&a);
            for _ in 0..10 {
                let n = rng.gen_range(1..=7);
                let len = rng.gen_range(1..=20);
                let seq = random_updates(&mut rng, &a.alphabet, n, len);
                assert_eq!(run_program(&p, n, &seq).unwrap(), oracle_trace(&a, &p, n, &seq));
            }
        }
    }

    /// After every update, `R_{p,q}(i,j)` agrees with a direct run over the
    /// open interval.
    #[test]
    fn substring_semantics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_dfa(&mut rng, 3, 2);
        let p = compile_regular(&a);
        let e = Engine::new(&p).unwrap();
        let n = 6;
        let mut st = e.initial_state(n).unwrap();
        let mut s: Structure = crate::structure::new_empty_structure(&p.input, n).unwrap();
        for u in random_updates(&mut rng, &a.alphabet, n, 25) {
            e.apply(&mut st, &u).unwrap();
            s.apply(&u).unwrap();
            for i in 1..=n as Elem {
                for j in i + 1..=n as Elem {
                    let w: Vec<&str> = (i + 1..j).filter_map(|k| s.label(k)).collect();
                    for p_ in 0..3 {
                        let q = a.run_from(p_, &w).unwrap();
                        for q2 in 0..3 {
                            assert_eq!(st.holds(&r_name(p_, q2), &[i, j]), q == q2);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn example_matches_compiled() {
        let p = compile_regular(&example_reg_dfa());
        let q = example_reg_program();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alphabet = vec!["a".to_string(), "b".to_string()];
        for _ in 0..100 {
            let n = rng.gen_range(1..=7);
            let seq = random_updates(&mut rng, &alphabet, n, 15);
            assert_eq!(run_program(&p, n, &seq).unwrap(), run_program(&q, n, &seq).unwrap());
        }
    }

    fn even_a() -> Dfa {
        Dfa::from_table(&["a", "b"], vec![vec![1, 2], vec![0, 2], vec![2, 2]], 0, &[0]).unwrap()
    }

    #[test]
    fn alternative_semantics_parity() {
        let p = compile_regular_alt(&even_a(), "a").unwrap();
        assert_eq!(run_program(&p, 4, &[ConcreteUpdate::ins("a", 1)]).unwrap(), vec![true]);
        assert_eq!(run_program(&p, 5, &[ConcreteUpdate::ins("a", 1)]).unwrap(), vec![false]);
        let seq = [ConcreteUpdate::ins("b", 2), ConcreteUpdate::ins("a", 2)];
        assert_eq!(run_program(&p, 6, &seq).unwrap(), vec![false, true]);
    }

    #[test]
    fn middle_examples() {
        let p = middle_program();
        let seq = [ConcreteUpdate::ins("b", 3), ConcreteUpdate::ins("a", 3)];
        assert_eq!(run_program(&p, 5, &seq).unwrap(), vec![true, false]);
        let seq = [ConcreteUpdate::ins("b", 2), ConcreteUpdate::ins("b", 3)];
        assert_eq!(run_program(&p, 4, &seq).unwrap(), vec![false, false]);
    }

    #[test]
    fn neutral_elements() {
        let all = Dfa::from_table(&["a", "b"], vec![vec![0, 0]], 0, &[0]).unwrap();
        assert!(is_neutral(&all, "a").unwrap());
        let aa = Dfa::from_table(&["a"], vec![vec![1], vec![0]], 0, &[0]).unwrap();
        assert!(!is_neutral(&aa, "a").unwrap());
        // a*ba*, with a redundant copy of the sink to exercise minimization
        let aba = Dfa::from_table(
            &["a", "b"],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 2]],
            0,
            &[1],
        )
        .unwrap();
        assert!(is_neutral(&aba, "a").unwrap());
        assert!(!is_neutral(&aba, "b").unwrap());
        assert!(is_neutral(&aba, "c").is_err());
    }

    #[test]
    fn minimization_preserves_language() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let a = random_dfa(&mut rng, 5, 2);
            let m = a.minimize();
            assert!(m.num_states() <= a.num_states());
            assert!(a.equivalent(&m));
            assert_eq!(m.minimize().num_states(), m.num_states());
        }
    }
}
