// SPDX-License-Identifier: Apache-2.0

//! Automaton extraction from propositional dynamic programs. Words are
//! inserted left to right; the state after a prefix of length `i` is the
//! type of the window `(i+1, …, i+k)`, which determines the type after the
//! next insertion.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::formula::engine::{Engine, ProgramState};
use crate::formula::program::{check_tier, DynamicProgram, Tier, ACCEPT};
use crate::regular::Dfa;
use crate::structure::{all_tuples, ConcreteUpdate, Elem};

/// Upper bound on `maxlen`.
pub const MAX_WORD_LEN: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// Relation atom with 1-based variable indices.
    Rel(String, Vec<usize>),
    Lt(usize, usize),
    Eq(usize, usize),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel(r, xs) => {
                let xs: Vec<String> = xs.iter().map(|i| format!("x{i}")).collect();
                write!(f, "{r}({})", xs.join(","))
            }
            Atom::Lt(i, j) => write!(f, "x{i}<x{j}"),
            Atom::Eq(i, j) => write!(f, "x{i}=x{j}"),
        }
    }
}

/// The atoms over `x_1..x_k` true under a tuple.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KType {
    pub k: usize,
    pub atoms: BTreeSet<Atom>,
}

impl KType {
    pub fn holds(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn accepting(&self) -> bool {
        self.holds(&Atom::Rel(ACCEPT.to_string(), vec![]))
    }
}

impl fmt::Display for KType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        write!(f, "{{{}}}", atoms.join(", "))
    }
}

/// All relations of a state: input labels first, then auxiliary and
/// precomputed ones.
fn symbols(state: &ProgramState) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = state
        .input()
        .vocabulary()
        .symbols()
        .iter()
        .map(|s| (s.name.clone(), s.arity))
        .collect();
    out.extend(state.relation_symbols());
    out
}

/// Type of `tuple` in `state`: every relation atom of arity at most
/// `tuple.len()`, plus order and equality between components.
pub fn compute_type(state: &ProgramState, tuple: &[Elem]) -> KType {
    let k = tuple.len();
    let mut atoms = BTreeSet::new();
    for (name, arity) in symbols(state) {
        if arity > k {
            continue;
        }
        let table = state.relation(&name).expect("state symbol");
        for ix in all_tuples(arity, k) {
            let ix: Vec<usize> = ix.iter().map(|&i| i as usize).collect();
            let t: Vec<Elem> = ix.iter().map(|&i| tuple[i - 1]).collect();
            if table.get(&t) {
                atoms.insert(Atom::Rel(name.clone(), ix));
            }
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            let a = match tuple[i].cmp(&tuple[j]) {
                std::cmp::Ordering::Less => Atom::Lt(i + 1, j + 1),
                std::cmp::Ordering::Greater => Atom::Lt(j + 1, i + 1),
                std::cmp::Ordering::Equal => Atom::Eq(i + 1, j + 1),
            };
            atoms.insert(a);
        }
    }
    KType { k, atoms }
}

/// Increasing `l`-tuples over `set`.
fn increasing(set: &[Elem], l: usize) -> Vec<Vec<Elem>> {
    fn go(set: &[Elem], l: usize, from: usize, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        if cur.len() == l {
            out.push(cur.clone());
            return;
        }
        for i in from..set.len() {
            cur.push(set[i]);
            go(set, l, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    let mut out = Vec::new();
    go(&s, l, 0, &mut Vec::new(), &mut out);
    out
}

/// Whether all increasing `l`-tuples over `set` have the same type.
pub fn check_indiscernible(state: &ProgramState, set: &[Elem], l: usize) -> bool {
    let mut tuples = increasing(set, l).into_iter();
    let Some(first) = tuples.next() else { return true };
    let t0 = compute_type(state, &first);
    tuples.all(|t| compute_type(state, &t) == t0)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("program is {0}, extraction needs DynProp")]
    Tier(Tier),
    #[error("program uses precomputation")]
    Precomputation,
    #[error("program does not work on words")]
    NotWordMode,
    #[error("relation `{name}` has arity {arity} > k = {k}")]
    Arity { name: String, arity: usize, k: usize },
    #[error("maxlen {0} exceeds {MAX_WORD_LEN}")]
    TooLong(usize),
    #[error("types did not close within words of length {0}")]
    NotClosed(usize),
    #[error("type {source_type} has successors {first} and {second} on `{symbol}` (word `{word}`)")]
    Inconsistent {
        source_type: usize,
        symbol: String,
        first: usize,
        second: usize,
        word: String,
    },
    #[error("suffix after `{0}` is not indiscernible")]
    Indiscernible(String),
    #[error("engine: {0}")]
    Engine(String),
}

/// Largest arity among the program's relations.
pub fn aux_arity(p: &DynamicProgram) -> usize {
    p.schema.relations.iter().map(|s| s.arity).max().unwrap_or(0)
}

/// Result of an extraction: the automaton on window types.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub dfa: Dfa,
    pub types: Vec<KType>,
    /// Length of the longest word simulated.
    pub depth: usize,
}

struct Node {
    ty: usize,
    state: ProgramState,
    word: Vec<usize>,
}

/// Extract a DFA from a propositional word program by breadth-first
/// simulation of left-to-right insertions on a universe of
/// `maxlen + k` positions. Each type is expanded from two witness words
/// when available, so conflicting successors are detected.
pub fn extract_dfa(p: &DynamicProgram, k: usize, maxlen: usize) -> Result<Extraction, ExtractError> {
    let tier = check_tier(p);
    if tier != Tier::Prop {
        return Err(ExtractError::Tier(tier));
    }
    if p.precompute.is_some() {
        return Err(ExtractError::Precomputation);
    }
    if !p.is_word_mode() || p.initial_label.is_some() {
        return Err(ExtractError::NotWordMode);
    }
    if maxlen > MAX_WORD_LEN {
        return Err(ExtractError::TooLong(maxlen));
    }
    if let Some(s) = p.schema.relations.iter().find(|s| s.arity > k) {
        return Err(ExtractError::Arity { name: s.name.clone(), arity: s.arity, k });
    }
    let engine = Engine::new(p).map_err(|e| ExtractError::Engine(e.to_string()))?;
    let alphabet = p.input.alphabet();
    let n = maxlen + k;
    let window = |i: usize| -> Vec<Elem> { (i + 1..=i + k).map(|e| e as Elem).collect() };
    let spell = |w: &[usize]| w.iter().map(|&s| alphabet[s].as_str()).collect::<Vec<_>>().join(" ");

    let mut types: Vec<KType> = Vec::new();
    let mut index: HashMap<KType, usize> = HashMap::new();
    let mut witnesses: Vec<usize> = Vec::new();
    let mut delta: Vec<Vec<Option<usize>>> = Vec::new();
    let mut intern = |t: KType, types: &mut Vec<KType>, delta: &mut Vec<Vec<Option<usize>>>, witnesses: &mut Vec<usize>| {
        if let Some(&i) = index.get(&t) {
            return (i, false);
        }
        let i = types.len();
        index.insert(t.clone(), i);
        types.push(t);
        delta.push(vec![None; alphabet.len()]);
        witnesses.push(0);
        (i, true)
    };

    let s0 = engine.initial_state(n).map_err(|e| ExtractError::Engine(e.to_string()))?;
    let (t0, _) = intern(compute_type(&s0, &window(0)), &mut types, &mut delta, &mut witnesses);
    witnesses[t0] = 1;
    let mut queue = VecDeque::from([Node { ty: t0, state: s0, word: vec![] }]);
    let mut depth = 0;
    while let Some(node) = queue.pop_front() {
        let len = node.word.len();
        if len == maxlen {
            if delta[node.ty].iter().any(Option::is_none) {
                return Err(ExtractError::NotClosed(maxlen));
            }
            continue;
        }
        for (si, sym) in alphabet.iter().enumerate() {
            let mut state = node.state.clone();
            let u = ConcreteUpdate::ins(sym.clone(), (len + 1) as Elem);
            engine.apply(&mut state, &u).map_err(|e| ExtractError::Engine(e.to_string()))?;
            let mut word = node.word.clone();
            word.push(si);
            depth = depth.max(word.len());
            if !suffix_indiscernible(&state, word.len(), k) {
                return Err(ExtractError::Indiscernible(spell(&word)));
            }
            let (t, fresh) = intern(compute_type(&state, &window(word.len())), &mut types, &mut delta, &mut witnesses);
            match delta[node.ty][si] {
                Some(prev) if prev != t => {
                    return Err(ExtractError::Inconsistent {
                        source_type: node.ty,
                        symbol: sym.clone(),
                        first: prev,
                        second: t,
                        word: spell(&node.word),
                    })
                }
                _ => delta[node.ty][si] = Some(t),
            }
            if fresh || witnesses[t] < 2 {
                witnesses[t] += 1;
                queue.push_back(Node { ty: t, state, word });
            }
        }
    }
    let table: Vec<Vec<usize>> = delta
        .iter()
        .map(|row| row.iter().map(|d| d.expect("closed")).collect())
        .collect();
    let accepting = types.iter().map(KType::accepting).collect();
    let dfa = Dfa::new(
        (0..types.len()).map(|i| format!("t{i}")).collect(),
        alphabet.clone(),
        table,
        t0,
        accepting,
    )
    .expect("extracted automaton is complete");
    Ok(Extraction { dfa, types, depth })
}

/// Sampled check that positions after `i` are `k`-indiscernible: the
/// window, the last `k` positions and every other position.
fn suffix_indiscernible(state: &ProgramState, i: usize, k: usize) -> bool {
    let n = state.n();
    if k == 0 || n - i < k {
        return true;
    }
    let e = |v: usize| v as Elem;
    let w = compute_type(state, &(i + 1..=i + k).map(e).collect::<Vec<_>>());
    let last: Vec<Elem> = (n - k + 1..=n).map(e).collect();
    let spaced: Vec<Elem> = (0..k).map(|j| e(i + 1 + 2 * j)).filter(|&v| v as usize <= n).collect();
    compute_type(state, &last) == w && (spaced.len() < k || compute_type(state, &spaced) == w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::ast::*;
    use crate::formula::program::{ProgramBuilder, UpdateKind};
    use crate::regular::{compile_regular, example_reg_dfa, example_reg_program, r_name};
    use crate::structure::RelTable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn words(alphabet: &[String], max: usize) -> Vec<Vec<String>> {
        let mut out = vec![vec![]];
        let mut layer = vec![vec![]];
        for _ in 0..max {
            let next: Vec<Vec<String>> = layer
                .iter()
                .flat_map(|w: &Vec<String>| {
                    alphabet.iter().map(move |s| {
                        let mut v = w.clone();
                        v.push(s.clone());
                        v
                    })
                })
                .collect();
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    fn agree(a: &Dfa, b: &Dfa, max: usize) -> bool {
        words(&a.alphabet, max).iter().all(|w| a.accepts(w).unwrap() == b.accepts(w).unwrap())
    }

    #[test]
    fn window_types_after_a_prefix() {
        let a = example_reg_dfa();
        let p = compile_regular(&a);
        let e = Engine::new(&p).unwrap();
        let mut st = e.initial_state(6).unwrap();
        e.apply(&mut st, &ConcreteUpdate::ins("b", 1)).unwrap();
        let t = compute_type(&st, &[2, 3]);
        for q in 0..2 {
            assert!(t.holds(&Atom::Rel(r_name(q, q), vec![1, 2])));
        }
        assert!(t.holds(&Atom::Lt(1, 2)));
        let one = compute_type(&st, &[4]);
        assert!(!one.atoms.iter().any(|x| matches!(x, Atom::Rel(r, _) if r == "a" || r == "b")));
    }

    #[test]
    fn indiscernible_suffix() {
        let p = compile_regular(&example_reg_dfa());
        let e = Engine::new(&p).unwrap();
        let mut st = e.initial_state(8).unwrap();
        for (i, s) in ["b", "a", "b"].iter().enumerate() {
            e.apply(&mut st, &ConcreteUpdate::ins(*s, i as Elem + 1)).unwrap();
        }
        let suffix: Vec<Elem> = (4..=8).collect();
        assert!(check_indiscernible(&st, &suffix, 2));
        assert!(check_indiscernible(&st, &[5, 7], 2));
        assert!(!check_indiscernible(&st, &[1, 2, 3, 4], 1));
        let name = r_name(0, 1);
        let mut t = st.relation(&name).unwrap().clone();
        t.set(&[5, 6], !t.get(&[5, 6]));
        st.set_relation(&name, t).unwrap();
        assert!(!check_indiscernible(&st, &suffix, 2));
    }

    #[test]
    fn always_accept_has_one_state() {
        let mut b = ProgramBuilder::word("yes", &["a", "b"]);
        for kind in b.kinds() {
            b.update_rel(&kind, ACCEPT, &[], Formula::True);
        }
        b.init_rel(ACCEPT, &[], Formula::True);
        let p = b.build().unwrap();
        let x = extract_dfa(&p, aux_arity(&p), 8).unwrap();
        assert_eq!(x.dfa.num_states(), 1);
        assert!(x.dfa.accepting[0]);
    }

    #[test]
    fn example_program_extracts_its_language() {
        let p = example_reg_program();
        let x = extract_dfa(&p, aux_arity(&p), 16).unwrap();
        assert!(x.dfa.equivalent(&example_reg_dfa()));
        assert!(agree(&x.dfa, &example_reg_dfa(), 6));
    }

    #[test]
    fn round_trip_random_dfas() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..12 {
            let k = rng.gen_range(1..=3);
            let delta = (0..k).map(|_| (0..2).map(|_| rng.gen_range(0..k)).collect()).collect();
            let acc: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.5)).collect();
            let a = Dfa::from_table(&["a", "b"], delta, 0, &acc).unwrap();
            let p = compile_regular(&a);
            let x = extract_dfa(&p, aux_arity(&p), 24).unwrap();
            assert!(agree(&x.dfa, &a, 6), "{a:?}");
        }
    }

    #[test]
    fn rejects_unsuitable_programs() {
        let p = crate::regular::middle_program();
        assert!(matches!(extract_dfa(&p, 1, 8), Err(ExtractError::Precomputation)));
        let p = compile_regular(&example_reg_dfa());
        assert!(matches!(extract_dfa(&p, 1, 8), Err(ExtractError::Arity { .. })));
        let mut b = ProgramBuilder::word("succ", &["a"]);
        b.builtins();
        b.update_rel(&UpdateKind::Ins("a".into()), ACCEPT, &[], eq(app("succ", vec![var("y")]), var("y")));
        b.update_rel(&UpdateKind::Reset, ACCEPT, &[], Formula::False);
        let p = b.build().unwrap();
        assert!(matches!(extract_dfa(&p, 0, 8), Err(ExtractError::Tier(Tier::PropSucc))));
        let _ = RelTable::new(1, 1);
    }

    #[test]
    fn counting_program_does_not_close() {
        // parity of the length is regular, but a counter relation moving
        // right with each insertion never repeats its window type
        let mut b = ProgramBuilder::word("far", &["a"]);
        b.relation("C", 1);
        let (x, y) = (var("x"), var("y"));
        let ins = UpdateKind::Ins("a".into());
        b.update_rel(&ins, "C", &["x"], or(vec![rel("C", vec![x.clone()]), lt(y.clone(), x.clone())]));
        b.update_rel(&ins, ACCEPT, &[], Formula::True);
        b.update_rel(&UpdateKind::Reset, "C", &["x"], rel("C", vec![x]));
        b.update_rel(&UpdateKind::Reset, ACCEPT, &[], Formula::False);
        let p = b.build().unwrap();
        let x = extract_dfa(&p, 1, 8).unwrap();
        assert_eq!(x.dfa.minimize().num_states(), 2);
        let _ = y;
    }
}
