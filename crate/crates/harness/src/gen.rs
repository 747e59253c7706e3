// SPDX-License-Identifier: Apache-2.0

//! Seeded random specs and update sequences.
//!
//! Each case draws its spec and its sequences from separate streams of
//! one ChaCha seed, so a sequence can be shrunk or replayed without
//! disturbing the spec.

use dynlang::cfl::{CnfGrammar, CnfRule, Rhs};
use dynlang::efo::EfoSentence;
use dynlang::regular::Dfa;
use dynlang::structure::{new_empty_structure, ConcreteUpdate, Elem, Structure, Symbol, Vocabulary};
use dynlang::trees::TreeAutomaton;
use dynlang::formula::ast::{and, eq, not, or, rel, var};
use dynlang::Formula;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::family::{Family, Spec};

/// Stream used for the spec of a case.
pub const SPEC_STREAM: u64 = 0;

/// Stream used for sequence `j` of a case.
pub fn sequence_stream(j: usize) -> u64 {
    1 + j as u64
}

pub fn rng_for(seed: u64, case: usize, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ case as u64);
    r.set_stream(stream);
    r
}

pub fn random_dfa(rng: &mut impl Rng, max_states: usize, alphabet: &[&str]) -> Dfa {
    let k = rng.gen_range(1..=max_states);
    let delta = (0..k)
        .map(|_| (0..alphabet.len()).map(|_| rng.gen_range(0..k)).collect())
        .collect();
    let accepting: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.5)).collect();
    Dfa::from_table(alphabet, delta, 0, &accepting).expect("valid table")
}

/// A random DFA with at most `max_states` states over `a`, `b`, … with
/// 1 to `max_symbols` letters.
pub fn random_regular(rng: &mut impl Rng, max_states: usize, max_symbols: usize) -> Dfa {
    let names = ["a", "b", "c", "d"];
    let s = rng.gen_range(1..=max_symbols.min(names.len()));
    random_dfa(rng, max_states, &names[..s])
}

/// A random grammar over `a`, `b` with up to `max_nts` nonterminals and
/// one to three rules each, before augmentation.
pub fn random_grammar(rng: &mut impl Rng, max_nts: usize) -> CnfGrammar {
    let k = rng.gen_range(1..=max_nts);
    let mut rules = Vec::new();
    for lhs in 0..k {
        for _ in 0..rng.gen_range(1..=3) {
            let rhs = match rng.gen_range(0..6) {
                0 => Rhs::Empty,
                1 | 2 => Rhs::Letter(["a", "b"][rng.gen_range(0..2)].to_string()),
                _ => Rhs::Pair(rng.gen_range(0..k), rng.gen_range(0..k)),
            };
            let r = CnfRule { lhs, rhs };
            if !rules.contains(&r) {
                rules.push(r);
            }
        }
    }
    CnfGrammar {
        nonterminals: (0..k).map(|i| format!("N{i}")).collect(),
        start: 0,
        terminals: vec!["a".into(), "b".into()],
        rules,
        empty: None,
    }
}

pub fn efo_vocabulary() -> Vocabulary {
    Vocabulary::general(vec![Symbol::new("E", 2), Symbol::new("U", 1)]).expect("valid vocabulary")
}

fn random_matrix<R: Rng>(rng: &mut R, vars: &[&str], depth: usize) -> Formula {
    let v = |rng: &mut R| var(vars.choose(rng).unwrap());
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..5) {
            0 => eq(v(rng), v(rng)),
            1 | 2 => rel("U", vec![v(rng)]),
            _ => rel("E", vec![v(rng), v(rng)]),
        };
    }
    match rng.gen_range(0..3) {
        0 => not(random_matrix(rng, vars, depth - 1)),
        1 => and(vec![random_matrix(rng, vars, depth - 1), random_matrix(rng, vars, depth - 1)]),
        _ => or(vec![random_matrix(rng, vars, depth - 1), random_matrix(rng, vars, depth - 1)]),
    }
}

/// An existential sentence with one or two variables over `E/2`, `U/1`.
pub fn random_sentence(rng: &mut impl Rng, max_k: usize) -> EfoSentence {
    let k = rng.gen_range(1..=max_k.clamp(1, 2));
    let vars = &["x", "y"][..k];
    EfoSentence::new(vars, random_matrix(rng, vars, 3))
}

/// A complete tree automaton with up to `max_states` states over 1 to
/// `max_symbols` letters.
pub fn random_tree_automaton(rng: &mut impl Rng, max_states: usize, max_symbols: usize) -> TreeAutomaton {
    let k = rng.gen_range(1..=max_states);
    let s = rng.gen_range(1..=max_symbols.clamp(1, 3));
    let init = (0..s).map(|_| rng.gen_range(0..k)).collect();
    let delta = (0..k)
        .map(|_| (0..k).map(|_| (0..s).map(|_| rng.gen_range(0..k)).collect()).collect())
        .collect();
    let accepting = (0..k).map(|_| rng.gen_bool(0.5)).collect();
    TreeAutomaton::new(
        (0..k).map(|q| format!("q{q}")).collect(),
        ["a", "b", "c"][..s].iter().map(|x| x.to_string()).collect(),
        init,
        delta,
        accepting,
    )
    .expect("valid automaton")
}

/// A random spec of a family at the desk-scale sizes of the test suite.
pub fn random_spec(family: Family, rng: &mut impl Rng) -> Spec {
    match family {
        Family::Regular => Spec::Regular(random_regular(rng, 5, 3)),
        Family::Dyck1 => Spec::Dyck1,
        Family::Dyckn => Spec::Dyckn(rng.gen_range(1..=3)),
        Family::Cfl => Spec::Cfl(random_grammar(rng, 4)),
        Family::Eqr => Spec::Eqr { r: rng.gen_range(2..=3), qf: rng.gen_bool(0.5) },
        Family::Efo => Spec::Efo { vocab: efo_vocabulary(), sentence: random_sentence(rng, 2) },
        Family::Tree => Spec::Tree(random_tree_automaton(rng, 3, 2)),
    }
}

/// Universe sizes for trees: complete binary trees.
pub const TREE_SIZES: [usize; 4] = [1, 3, 7, 15];

pub fn random_n(spec: &Spec, rng: &mut impl Rng, max_n: usize) -> usize {
    if let Spec::Tree(_) = spec {
        let sizes: Vec<usize> = TREE_SIZES.iter().copied().filter(|&s| s <= max_n.max(1)).collect();
        return *sizes.choose(rng).unwrap();
    }
    rng.gen_range(spec.min_n()..=max_n.max(spec.min_n()))
}

/// One random update applicable to `s`: for words 70% insertions and 30%
/// resets, for general structures insertions and deletions of random
/// tuples.
pub fn random_update(rng: &mut impl Rng, s: &Structure) -> ConcreteUpdate {
    let n = s.n() as Elem;
    let vocab = s.vocabulary();
    if vocab.is_word() {
        let pos = rng.gen_range(1..=n);
        if rng.gen_bool(0.7) {
            ConcreteUpdate::ins(vocab.alphabet().choose(rng).unwrap().clone(), pos)
        } else {
            ConcreteUpdate::Reset(pos)
        }
    } else {
        let sym = vocab.symbols().choose(rng).unwrap();
        let t: Vec<Elem> = (0..sym.arity).map(|_| rng.gen_range(1..=n)).collect();
        if rng.gen_bool(0.6) {
            ConcreteUpdate::InsTuple(sym.name.clone(), t)
        } else {
            ConcreteUpdate::DelTuple(sym.name.clone(), t)
        }
    }
}

pub fn random_sequence(rng: &mut impl Rng, vocab: &Vocabulary, n: usize, len: usize) -> Vec<ConcreteUpdate> {
    let mut s = new_empty_structure(vocab, n).expect("nonempty universe");
    (0..len)
        .map(|_| {
            let u = random_update(rng, &s);
            s.apply(&u).expect("applicable");
            u
        })
        .collect()
}

/// A sequence that only inserts on empty positions and resets labeled
/// ones.
pub fn disciplined_sequence(rng: &mut impl Rng, alphabet: &[String], n: usize, len: usize) -> Vec<ConcreteUpdate> {
    let mut labels: Vec<bool> = vec![false; n + 1];
    (0..len)
        .map(|_| {
            let p = rng.gen_range(1..=n);
            let u = if labels[p] {
                ConcreteUpdate::Reset(p as Elem)
            } else {
                ConcreteUpdate::ins(alphabet.choose(rng).unwrap().clone(), p as Elem)
            };
            labels[p] = !labels[p];
            u
        })
        .collect()
}

/// Relabelings only: every update inserts a symbol of `alphabet`.
pub fn change_only_sequence(rng: &mut impl Rng, alphabet: &[String], n: usize, len: usize) -> Vec<ConcreteUpdate> {
    (0..len)
        .map(|_| ConcreteUpdate::ins(alphabet.choose(rng).unwrap().clone(), rng.gen_range(1..=n as Elem)))
        .collect()
}
