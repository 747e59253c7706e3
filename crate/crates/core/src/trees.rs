// SPDX-License-Identifier: Apache-2.0

//! Labeled balanced binary trees, bottom-up tree automata and the
//! quantifier-free program with precomputed tree functions deciding
//! acceptance as labels change.
//!
//! Nodes are heap indices `1..=n`: node `u` has children `2u` and `2u+1`
//! when they are at most `n`. The encoded tree is the largest labeled
//! subtree rooted at 1.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::formula::ast::*;
use crate::formula::program::{DynamicProgram, PrecomputedTables, ProgramBuilder, UpdateKind, ACCEPT};
use crate::structure::{Elem, FunTable, RelTable, Structure};

pub const ANC: &str = "anc";
pub const LCA: &str = "lca";
pub const PARENT: &str = "parent";
pub const LCHILD: &str = "lchild";
pub const RCHILD: &str = "rchild";
pub const ROOT: &str = "root";
pub const CON: &str = "con";

/// The fixed tree shape on `n` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeUniverse {
    pub n: usize,
}

pub fn tree_universe(n: usize) -> TreeUniverse {
    assert!(n >= 1, "a tree needs a root");
    TreeUniverse { n }
}

impl TreeUniverse {
    pub fn parent(&self, u: Elem) -> Elem {
        if u == 1 {
            1
        } else {
            u / 2
        }
    }

    pub fn lchild(&self, u: Elem) -> Elem {
        if 2 * u as usize <= self.n {
            2 * u
        } else {
            u
        }
    }

    pub fn rchild(&self, u: Elem) -> Elem {
        if 2 * u as usize + 1 <= self.n {
            2 * u + 1
        } else {
            u
        }
    }

    pub fn depth(&self, u: Elem) -> u32 {
        31 - (u as u32).leading_zeros()
    }

    /// Strict ancestor.
    pub fn anc(&self, x: Elem, y: Elem) -> bool {
        let (dx, dy) = (self.depth(x), self.depth(y));
        dx < dy && y >> (dy - dx) == x
    }

    pub fn lca(&self, mut x: Elem, mut y: Elem) -> Elem {
        while x != y {
            if x > y {
                x /= 2;
            } else {
                y /= 2;
            }
        }
        x
    }

    /// The path name of a node: `1` for the root, then `1`/`2` per left or
    /// right step.
    pub fn path_name(&self, u: Elem) -> String {
        let d = self.depth(u);
        let mut s = String::from("1");
        for i in (0..d).rev() {
            s.push(if u >> i & 1 == 0 { '1' } else { '2' });
        }
        s
    }

    pub fn tables(&self) -> PrecomputedTables {
        let n = self.n;
        let mut t = PrecomputedTables::default();
        let mut anc = RelTable::new(2, n);
        for x in 1..=n as Elem {
            for y in 1..=n as Elem {
                anc.set(&[x, y], self.anc(x, y));
            }
        }
        t.relations.insert(ANC.into(), anc);
        t.functions.insert(LCA.into(), FunTable::from_fn(2, n, |a| self.lca(a[0], a[1])));
        t.functions.insert(PARENT.into(), FunTable::from_fn(1, n, |a| self.parent(a[0])));
        t.functions.insert(LCHILD.into(), FunTable::from_fn(1, n, |a| self.lchild(a[0])));
        t.functions.insert(RCHILD.into(), FunTable::from_fn(1, n, |a| self.rchild(a[0])));
        t.functions.insert(ROOT.into(), FunTable::from_fn(0, n, |_| 1));
        t
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeAutomatonError {
    #[error("automaton has no states")]
    NoStates,
    #[error("automaton has no symbols")]
    NoSymbols,
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("no transition for ({0}, {1}, {2})")]
    NotTotal(String, String, String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A complete bottom-up deterministic tree automaton. `delta[p1][p2][σ]`
/// is the state of a node labeled `σ` whose children reach `p1` and `p2`;
/// leaves labeled `σ` get `init[σ]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeAutomaton {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub init: Vec<usize>,
    pub delta: Vec<Vec<Vec<usize>>>,
    pub accepting: Vec<bool>,
}

impl TreeAutomaton {
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        init: Vec<usize>,
        delta: Vec<Vec<Vec<usize>>>,
        accepting: Vec<bool>,
    ) -> Result<Self, TreeAutomatonError> {
        let a = TreeAutomaton {
            states,
            alphabet,
            init,
            delta,
            accepting,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), TreeAutomatonError> {
        let (k, s) = (self.states.len(), self.alphabet.len());
        if k == 0 {
            return Err(TreeAutomatonError::NoStates);
        }
        if s == 0 {
            return Err(TreeAutomatonError::NoSymbols);
        }
        for names in [&self.states, &self.alphabet] {
            for (i, a) in names.iter().enumerate() {
                if names[..i].contains(a) {
                    return Err(TreeAutomatonError::Duplicate(a.clone()));
                }
            }
        }
        let bad = |q: usize| TreeAutomatonError::UnknownState(q.to_string());
        if self.init.len() != s {
            return Err(TreeAutomatonError::NotTotal("-".into(), "-".into(), "init".into()));
        }
        if let Some(&q) = self.init.iter().find(|&&q| q >= k) {
            return Err(bad(q));
        }
        if self.accepting.len() != k || self.delta.len() != k {
            return Err(TreeAutomatonError::NotTotal("-".into(), "-".into(), "-".into()));
        }
        for (p1, row) in self.delta.iter().enumerate() {
            if row.len() != k {
                return Err(TreeAutomatonError::NotTotal(self.states[p1].clone(), "-".into(), "-".into()));
            }
            for (p2, cell) in row.iter().enumerate() {
                if cell.len() != s {
                    return Err(TreeAutomatonError::NotTotal(
                        self.states[p1].clone(),
                        self.states[p2].clone(),
                        "-".into(),
                    ));
                }
                if let Some(&q) = cell.iter().find(|&&q| q >= k) {
                    return Err(bad(q));
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn symbol_index(&self, s: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == s)
    }

    /// One state `q`, every symbol mapped to it.
    pub fn trivial<S: AsRef<str>>(alphabet: &[S]) -> Self {
        let s = alphabet.len();
        TreeAutomaton::new(
            vec!["q".into()],
            alphabet.iter().map(|a| a.as_ref().to_string()).collect(),
            vec![0; s],
            vec![vec![vec![0; s]]],
            vec![true],
        )
        .expect("trivial automaton is valid")
    }

    /// Accepts exactly the trees labeled only with `good`.
    pub fn all_of<S: AsRef<str>>(alphabet: &[S], good: &str) -> Self {
        let alphabet: Vec<String> = alphabet.iter().map(|a| a.as_ref().to_string()).collect();
        let g = alphabet.iter().position(|a| a == good).expect("symbol in alphabet");
        let s = alphabet.len();
        let init = (0..s).map(|i| usize::from(i != g)).collect();
        let delta = (0..2)
            .map(|p1| (0..2).map(|p2| (0..s).map(|i| usize::from(p1 + p2 > 0 || i != g)).collect()).collect())
            .collect();
        TreeAutomaton::new(vec!["ok".into(), "bad".into()], alphabet, init, delta, vec![true, false])
            .expect("valid automaton")
    }

    /// Text format: `states:`, `init: <σ> <q>`, `delta: <q1> <q2> <σ> <q>`
    /// and `accept:` lines; `#` starts a comment. The alphabet is the set of
    /// symbols with an `init` line, in order of appearance.
    pub fn parse(text: &str) -> Result<Self, TreeAutomatonError> {
        let mut states: Vec<String> = Vec::new();
        let mut alphabet: Vec<String> = Vec::new();
        let mut init: Vec<(usize, String)> = Vec::new();
        let mut deltas = Vec::new();
        let mut accept = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| TreeAutomatonError::Parse { line: i + 1, msg: msg.into() };
            let (key, rest) = line.split_once(':').ok_or_else(|| err("expected `key:`"))?;
            let words: Vec<&str> = rest.split_whitespace().collect();
            match key.trim() {
                "states" => states.extend(words.iter().map(|w| w.to_string())),
                "init" => {
                    let [s, q] = words[..] else { return Err(err("expected `init: <symbol> <state>`")) };
                    alphabet.push(s.into());
                    init.push((i + 1, q.to_string()));
                }
                "delta" => {
                    let [p1, p2, s, q] = words[..] else {
                        return Err(err("expected `delta: <q1> <q2> <symbol> <q>`"));
                    };
                    deltas.push((i + 1, [p1, p2, s, q].map(String::from)));
                }
                "accept" => accept.extend(words.iter().map(|w| w.to_string())),
                other => return Err(err(&format!("unknown key `{other}`"))),
            }
        }
        let state = |q: &str| states.iter().position(|s| s == q).ok_or_else(|| TreeAutomatonError::UnknownState(q.into()));
        let init_idx = init.iter().map(|(_, q)| state(q)).collect::<Result<Vec<_>, _>>()?;
        let (k, s) = (states.len(), alphabet.len());
        let mut delta = vec![vec![vec![usize::MAX; s]; k]; k];
        for (_, [p1, p2, a, q]) in &deltas {
            let ai = alphabet
                .iter()
                .position(|b| b == a)
                .ok_or_else(|| TreeAutomatonError::UnknownSymbol(a.clone()))?;
            delta[state(p1)?][state(p2)?][ai] = state(q)?;
        }
        for (p1, row) in delta.iter().enumerate() {
            for (p2, cell) in row.iter().enumerate() {
                if let Some(ai) = cell.iter().position(|&q| q == usize::MAX) {
                    return Err(TreeAutomatonError::NotTotal(
                        states[p1].clone(),
                        states[p2].clone(),
                        alphabet[ai].clone(),
                    ));
                }
            }
        }
        let mut accepting = vec![false; k];
        for q in &accept {
            accepting[state(q)?] = true;
        }
        TreeAutomaton::new(states, alphabet, init_idx, delta, accepting)
    }
}

impl fmt::Display for TreeAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states.join(" "))?;
        for (s, &q) in self.alphabet.iter().zip(&self.init) {
            writeln!(f, "init: {s} {}", self.states[q])?;
        }
        for (p1, row) in self.delta.iter().enumerate() {
            for (p2, cell) in row.iter().enumerate() {
                for (s, &q) in cell.iter().enumerate() {
                    writeln!(
                        f,
                        "delta: {} {} {} {}",
                        self.states[p1], self.states[p2], self.alphabet[s], self.states[q]
                    )?;
                }
            }
        }
        let acc: Vec<&str> = (0..self.num_states())
            .filter(|&q| self.accepting[q])
            .map(|q| self.states[q].as_str())
            .collect();
        writeln!(f, "accept: {}", acc.join(" "))
    }
}

/// Labels of a word structure as symbol indices of `a`, position `u` at
/// index `u - 1`.
pub fn labels_of(s: &Structure, a: &TreeAutomaton) -> Vec<Option<usize>> {
    (1..=s.n() as Elem)
        .map(|u| s.label(u).map(|l| a.symbol_index(l).expect("label in alphabet")))
        .collect()
}

/// State reached on the labeled subtree rooted at `x`, or `None` if it is
/// empty or some node has exactly one labeled child.
pub fn subtree_run(u: &TreeUniverse, labels: &[Option<usize>], a: &TreeAutomaton, x: Elem) -> Option<usize> {
    context_run(u, labels, a, x, None)
}

/// State reached at `x1` on the subtree below `x1` cut at `x2`, where `x2`
/// is a leaf assigned `q2` whatever its label. `None` when `x2` is not
/// reachable from `x1` through labeled nodes, or no run exists.
pub fn context_run(
    u: &TreeUniverse,
    labels: &[Option<usize>],
    a: &TreeAutomaton,
    x1: Elem,
    hole: Option<(Elem, usize)>,
) -> Option<usize> {
    if let Some((x2, q2)) = hole {
        if x1 == x2 {
            return Some(q2);
        }
    }
    let sym = labels[x1 as usize - 1]?;
    let present = |c: Elem| {
        c != x1 && (labels[c as usize - 1].is_some() || hole.is_some_and(|(x2, _)| x2 == c))
    };
    let (l, r) = (u.lchild(x1), u.rchild(x1));
    match (present(l), present(r)) {
        (false, false) => {
            if hole.is_some_and(|(x2, _)| u.anc(x1, x2)) {
                None
            } else {
                Some(a.init[sym])
            }
        }
        (true, true) => {
            let p1 = context_run(u, labels, a, l, hole)?;
            let p2 = context_run(u, labels, a, r, hole)?;
            Some(a.delta[p1][p2][sym])
        }
        _ => None,
    }
}

/// Whether the tree encoded by `labels` is accepted; the empty tree is
/// rejected.
pub fn tree_oracle(u: &TreeUniverse, labels: &[Option<usize>], a: &TreeAutomaton) -> bool {
    subtree_run(u, labels, a, 1).is_some_and(|q| a.accepting[q])
}

/// Every strict path node from `x` down to `y` is labeled.
pub fn connected(u: &TreeUniverse, labels: &[Option<usize>], x: Elem, y: Elem) -> bool {
    if !(x == y || u.anc(x, y)) {
        return false;
    }
    let mut z = y;
    while z != x {
        z = u.parent(z);
        if labels[z as usize - 1].is_none() {
            return false;
        }
    }
    true
}

pub fn run_name(q: usize) -> String {
    format!("Run_{q}")
}

pub fn ctx_name(q1: usize, q2: usize) -> String {
    format!("Ctx_{q1}_{q2}")
}

struct Ctx<'a> {
    a: &'a TreeAutomaton,
}

fn lc(t: &Term) -> Term {
    app(LCHILD, vec![t.clone()])
}

fn rc(t: &Term) -> Term {
    app(RCHILD, vec![t.clone()])
}

fn anc(x: &Term, y: &Term) -> Formula {
    rel(ANC, vec![x.clone(), y.clone()])
}

fn ancself(x: &Term, y: &Term) -> Formula {
    or(vec![anc(x, y), eq(x.clone(), y.clone())])
}

fn con(x: &Term, y: &Term) -> Formula {
    rel(CON, vec![x.clone(), y.clone()])
}

fn run(q: usize, x: &Term) -> Formula {
    rel(&run_name(q), vec![x.clone()])
}

fn ctx(q1: usize, q2: usize, x1: &Term, x2: &Term) -> Formula {
    rel(&ctx_name(q1, q2), vec![x1.clone(), x2.clone()])
}

impl Ctx<'_> {
    fn k(&self) -> usize {
        self.a.num_states()
    }

    fn labeled(&self, t: &Term) -> Formula {
        or(self.a.alphabet.iter().map(|s| rel(s, vec![t.clone()])).collect())
    }

    fn eps(&self, t: &Term) -> Formula {
        not(self.labeled(t))
    }

    /// Each child is absent or unlabeled.
    fn leaf(&self, t: &Term) -> Formula {
        and(vec![
            or(vec![eq(lc(t), t.clone()), self.eps(&lc(t))]),
            or(vec![eq(rc(t), t.clone()), self.eps(&rc(t))]),
        ])
    }

    /// Transitions `(p1, p2, σ)` into `p`, `σ` fixed when given.
    fn into(&self, p: usize, sym: Option<usize>) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for p1 in 0..self.k() {
            for p2 in 0..self.k() {
                for s in 0..self.a.alphabet.len() {
                    if sym.is_none_or(|t| t == s) && self.a.delta[p1][p2][s] == p {
                        out.push((p1, p2, s));
                    }
                }
            }
        }
        out
    }

    /// If `t` is labeled `σ`, its subtree runs to `p`. Both children must
    /// be present for the inner case, as `rchild` is a fixpoint on nodes
    /// with only a left child.
    fn phi(&self, sym: usize, p: usize, t: &Term) -> Formula {
        let inner = or(self
            .into(p, Some(sym))
            .into_iter()
            .map(|(p1, p2, _)| and(vec![run(p1, &lc(t)), run(p2, &rc(t))]))
            .collect());
        or(vec![
            and(vec![self.leaf(t), if self.a.init[sym] == p { Formula::True } else { Formula::False }]),
            and(vec![
                not(self.leaf(t)),
                neq(lc(t), t.clone()),
                neq(rc(t), t.clone()),
                inner,
            ]),
        ])
    }

    /// After `y` is cleared, the subtree of its parent `y'` runs to `p`:
    /// `y'` becomes a leaf, so its other child must be absent or unlabeled.
    /// For a right child `y` that sibling is `lchild(y')`.
    fn psi(&self, p: usize, y: &Term, y1: &Term) -> Formula {
        let labels = or(self
            .a
            .alphabet
            .iter()
            .enumerate()
            .filter(|&(s, _)| self.a.init[s] == p)
            .map(|(_, s)| rel(s, vec![y1.clone()]))
            .collect());
        let sibling_empty = or(vec![
            and(vec![
                eq(lc(y1), y.clone()),
                or(vec![eq(rc(y1), y1.clone()), self.eps(&rc(y1))]),
            ]),
            and(vec![eq(rc(y1), y.clone()), self.eps(&lc(y1))]),
        ]);
        and(vec![labels, sibling_empty])
    }

    fn con_ins(&self, y: &Term, x1: &Term, x2: &Term) -> Formula {
        or(vec![
            and(vec![not(and(vec![ancself(x1, y), anc(y, x2)])), con(x1, x2)]),
            and(vec![con(x1, y), or(vec![con(&lc(y), x2), con(&rc(y), x2)])]),
        ])
    }

    fn con_reset(&self, y: &Term, x1: &Term, x2: &Term) -> Formula {
        and(vec![not(and(vec![ancself(x1, y), anc(y, x2)])), con(x1, x2)])
    }

    /// `y` is a node of the subtree below `x`.
    fn inside(&self, x: &Term, y: &Term) -> Formula {
        and(vec![ancself(x, y), con(x, y)])
    }

    fn run_ins(&self, sym: usize, q: usize, y: &Term, x: &Term) -> Formula {
        or(vec![
            and(vec![not(self.inside(x, y)), run(q, x)]),
            and(vec![
                self.inside(x, y),
                or((0..self.k()).map(|p| and(vec![self.phi(sym, p, y), ctx(q, p, x, y)])).collect()),
            ]),
        ])
    }

    fn run_reset(&self, q: usize, y: &Term, x: &Term) -> Formula {
        let y1 = app(PARENT, vec![y.clone()]);
        or(vec![
            and(vec![not(self.inside(x, y)), run(q, x)]),
            and(vec![
                anc(x, y),
                or((0..self.k()).map(|p| and(vec![self.psi(p, y, &y1), ctx(q, p, x, &y1)])).collect()),
            ]),
        ])
    }

    /// The changed node `y` lies strictly inside the context `(x1, x2)`
    /// away from the path: its state is `p` (given by `at_y`, reached
    /// through `ctx(·, p, ·, hook)`), and the two sides meet at
    /// `z = lca(x2, y)`, whose label is read at `z`.
    fn side(
        &self,
        left: bool,
        q1: usize,
        q2: usize,
        x1: &Term,
        x2: &Term,
        y: &Term,
        hook: &Term,
        at_y: &dyn Fn(usize) -> Formula,
    ) -> Formula {
        let z = app(LCA, vec![x2.clone(), y.clone()]);
        let (near, far) = if left { (lc(&z), rc(&z)) } else { (rc(&z), lc(&z)) };
        let mut cases = Vec::new();
        for p in 0..self.k() {
            for r in 0..self.k() {
                for (r1, r2, s) in self.into(r, None) {
                    let (rn, rf) = if left { (r1, r2) } else { (r2, r1) };
                    cases.push(and(vec![
                        at_y(p),
                        rel(&self.a.alphabet[s], vec![z.clone()]),
                        ctx(rn, p, &near, hook),
                        ctx(rf, q2, &far, x2),
                        ctx(q1, r, x1, &z),
                    ]));
                }
            }
        }
        and(vec![neq(y.clone(), z.clone()), ancself(&near, y), or(cases)])
    }

    fn ctx_ins(&self, sym: usize, q1: usize, q2: usize, y: &Term, x1: &Term, x2: &Term) -> Formula {
        let affected = and(vec![self.inside(x1, y), not(ancself(x2, y))]);
        let unchanged = and(vec![not(affected.clone()), ctx(q1, q2, x1, x2)]);
        // y on the path above x2: its state follows from both children
        let mut on_path = Vec::new();
        for (left, child) in [(true, lc(y)), (false, rc(y))] {
            let cases = self
                .into_all(sym)
                .into_iter()
                .map(|(p, p1, p2)| {
                    let (down, other) = if left { (ctx(p1, q2, &child, x2), run(p2, &rc(y))) } else { (ctx(p2, q2, &child, x2), run(p1, &lc(y))) };
                    and(vec![down, other, ctx(q1, p, x1, y)])
                })
                .collect();
            on_path.push(and(vec![
                anc(y, x2),
                ancself(&child, x2),
                neq(lc(y), y.clone()),
                neq(rc(y), y.clone()),
                or(cases),
            ]));
        }
        let at_y = |p| self.phi(sym, p, y);
        let off_path = [true, false].map(|left| self.side(left, q1, q2, x1, x2, y, y, &at_y));
        and(vec![
            ancself(x1, x2),
            self.con_ins(y, x1, x2),
            or(vec![
                unchanged,
                and(vec![affected, or(on_path.into_iter().chain(off_path).collect())]),
            ]),
        ])
    }

    fn ctx_reset(&self, q1: usize, q2: usize, y: &Term, x1: &Term, x2: &Term) -> Formula {
        let affected = and(vec![self.inside(x1, y), not(ancself(x2, y))]);
        let unchanged = and(vec![not(affected.clone()), ctx(q1, q2, x1, x2)]);
        let y1 = app(PARENT, vec![y.clone()]);
        let at_y = |p| self.psi(p, y, &y1);
        let off_path = [true, false].map(|left| self.side(left, q1, q2, x1, x2, y, &y1, &at_y));
        and(vec![
            ancself(x1, x2),
            self.con_reset(y, x1, x2),
            or(vec![unchanged, and(vec![affected, or(off_path.to_vec())])]),
        ])
    }

    /// `(δ(p1, p2, σ), p1, p2)` for all state pairs.
    fn into_all(&self, sym: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for p1 in 0..self.k() {
            for p2 in 0..self.k() {
                out.push((self.a.delta[p1][p2][sym], p1, p2));
            }
        }
        out
    }
}

/// Compile a tree automaton into a quantifier-free program over the
/// precomputed functions `lca`, `parent`, `lchild`, `rchild`, `root` and the
/// relation `anc`. It maintains `con` (strict path nodes labeled),
/// `Run_q` (the subtree at `x` runs to `q`) and `Ctx_{q1,q2}` (the subtree
/// at `x1` cut at `x2` runs to `q1` when `x2` is given state `q2`).
pub fn compile_tree(a: &TreeAutomaton) -> DynamicProgram {
    let c = Ctx { a };
    let k = a.num_states();
    let mut b = ProgramBuilder::word("tree", &a.alphabet);
    b.pre_relation(ANC, 2)
        .pre_function(LCA, 2)
        .pre_function(PARENT, 1)
        .pre_function(LCHILD, 1)
        .pre_function(RCHILD, 1)
        .pre_function(ROOT, 0)
        .relation(CON, 2);
    for q in 0..k {
        b.relation(&run_name(q), 1);
    }
    for q1 in 0..k {
        for q2 in 0..k {
            b.relation(&ctx_name(q1, q2), 2);
        }
    }
    let (y, x, x1, x2) = (var("y"), var("x"), var("x1"), var("x2"));
    let root = constant(ROOT);
    for kind in b.kinds() {
        let sym = match &kind {
            UpdateKind::Ins(s) => Some(a.symbol_index(s).expect("alphabet")),
            _ => None,
        };
        let con_body = match sym {
            Some(_) => c.con_ins(&y, &x1, &x2),
            None => c.con_reset(&y, &x1, &x2),
        };
        b.update_rel(&kind, CON, &["x1", "x2"], con_body);
        let run_at = |q: usize, t: &Term| match sym {
            Some(s) => c.run_ins(s, q, &y, t),
            None => c.run_reset(q, &y, t),
        };
        for q in 0..k {
            b.update_rel(&kind, &run_name(q), &["x"], run_at(q, &x));
            for q2 in 0..k {
                let body = match sym {
                    Some(s) => c.ctx_ins(s, q, q2, &y, &x1, &x2),
                    None => c.ctx_reset(q, q2, &y, &x1, &x2),
                };
                b.update_rel(&kind, &ctx_name(q, q2), &["x1", "x2"], body);
            }
        }
        let acc = or((0..k).filter(|&q| a.accepting[q]).map(|q| run_at(q, &root)).collect());
        b.update_rel(&kind, ACCEPT, &[], acc);
    }
    b.precompute(move |n| {
        let mut t = tree_universe(n).tables();
        let mut diag = RelTable::new(2, n);
        for u in 1..=n as Elem {
            diag.set(&[u, u], true);
        }
        t.relations.insert(CON.into(), diag.clone());
        for q in 0..k {
            t.relations.insert(ctx_name(q, q), diag.clone());
        }
        t
    });
    b.build().expect("tree program is well formed")
}

/// Expected `con`, `Run_q` and `Ctx_{q1,q2}` tables, for coherence checks.
pub fn expected_tables(u: &TreeUniverse, labels: &[Option<usize>], a: &TreeAutomaton) -> BTreeMap<String, RelTable> {
    let n = u.n;
    let k = a.num_states();
    let mut out = BTreeMap::new();
    let mut con = RelTable::new(2, n);
    let mut runs: Vec<RelTable> = (0..k).map(|_| RelTable::new(1, n)).collect();
    let mut ctxs: Vec<RelTable> = (0..k * k).map(|_| RelTable::new(2, n)).collect();
    for x in 1..=n as Elem {
        if let Some(q) = subtree_run(u, labels, a, x) {
            runs[q].set(&[x], true);
        }
        for y in 1..=n as Elem {
            if !connected(u, labels, x, y) {
                continue;
            }
            con.set(&[x, y], true);
            for q2 in 0..k {
                if let Some(q1) = context_run(u, labels, a, x, Some((y, q2))) {
                    ctxs[q1 * k + q2].set(&[x, y], true);
                }
            }
        }
    }
    out.insert(CON.to_string(), con);
    for (q, t) in runs.into_iter().enumerate() {
        out.insert(run_name(q), t);
    }
    for (i, t) in ctxs.into_iter().enumerate() {
        out.insert(ctx_name(i / k, i % k), t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::engine::Engine;
    use crate::formula::program::{check_tier, Tier};
    use crate::structure::{new_empty_structure, ConcreteUpdate, Vocabulary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn universe_tables() {
        let u = tree_universe(3);
        assert_eq!((u.parent(2), u.parent(3), u.lca(2, 3)), (1, 1, 1));
        let one = tree_universe(1);
        assert_eq!((one.parent(1), one.lchild(1), one.rchild(1)), (1, 1, 1));
        let u7 = tree_universe(7);
        assert!(u7.anc(1, 7) && !u7.anc(2, 7) && !u7.anc(3, 3));
        assert_eq!(u7.lca(4, 5), 2);
        assert_eq!(u7.lca(4, 2), 2);
        assert_eq!(u7.lca(4, 7), 1);
        let names: Vec<String> = (1..=7).map(|i| u7.path_name(i)).collect();
        assert_eq!(names, ["1", "11", "12", "111", "112", "121", "122"]);
        let u6 = tree_universe(6);
        assert_eq!((u6.lchild(3), u6.rchild(3)), (6, 3));
    }

    #[test]
    fn oracle_examples() {
        let a = TreeAutomaton::all_of(&["a", "b"], "a");
        let u = tree_universe(3);
        assert!(!tree_oracle(&u, &[None, None, None], &a));
        assert!(tree_oracle(&u, &[Some(0), Some(0), Some(0)], &a));
        assert!(!tree_oracle(&u, &[Some(0), Some(0), Some(1)], &a));
        assert!(tree_oracle(&u, &[Some(0), None, Some(1)], &TreeAutomaton::trivial(&["a", "b"])) == false);
        assert!(tree_oracle(&u, &[Some(1), None, None], &TreeAutomaton::trivial(&["a", "b"])));
    }

    #[test]
    fn text_round_trip() {
        let a = TreeAutomaton::all_of(&["a", "b"], "a");
        let b = TreeAutomaton::parse(&a.to_string()).unwrap();
        assert_eq!(a, b);
        let bad = "states: q\ninit: a q\naccept: q\n";
        assert!(matches!(TreeAutomaton::parse(bad), Err(TreeAutomatonError::NotTotal(..))));
        assert!(matches!(TreeAutomaton::parse("states q"), Err(TreeAutomatonError::Parse { line: 1, .. })));
    }

    #[test]
    fn single_state_examples() {
        let a = TreeAutomaton::trivial(&["a"]);
        let p = compile_tree(&a);
        assert_eq!(check_tier(&p), Tier::QF);
        let e = Engine::new(&p).unwrap();
        let ins = |i| ConcreteUpdate::ins("a", i);
        assert_eq!(e.run(3, &[ins(1)]).unwrap(), vec![true]);
        assert_eq!(e.run(3, &[ins(1), ins(2)]).unwrap(), vec![true, false]);
        assert_eq!(e.run(3, &[ins(1), ins(2), ins(3)]).unwrap(), vec![true, false, true]);
    }

    pub(crate) fn random_automaton(rng: &mut ChaCha8Rng, k: usize, s: usize) -> TreeAutomaton {
        let alphabet: Vec<String> = ["a", "b", "c"][..s].iter().map(|x| x.to_string()).collect();
        let init = (0..s).map(|_| rng.gen_range(0..k)).collect();
        let delta = (0..k)
            .map(|_| (0..k).map(|_| (0..s).map(|_| rng.gen_range(0..k)).collect()).collect())
            .collect();
        let accepting = (0..k).map(|_| rng.gen_bool(0.5)).collect();
        TreeAutomaton::new((0..k).map(|i| format!("q{i}")).collect(), alphabet, init, delta, accepting).unwrap()
    }

    #[test]
    fn tables_stay_coherent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..40 {
            let (k, ns) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
            let a = random_automaton(&mut rng, k, ns);
            let e = Engine::new(&compile_tree(&a)).unwrap();
            let n = [1, 2, 3, 5, 6, 7, 10][round % 7];
            let u = tree_universe(n);
            let vocab = Vocabulary::word(&a.alphabet).unwrap();
            let mut s = new_empty_structure(&vocab, n).unwrap();
            let mut st = e.initial_state(n).unwrap();
            for step in 0..25 {
                let pos = rng.gen_range(1..=n as Elem);
                let upd = if rng.gen_bool(0.7) {
                    ConcreteUpdate::ins(a.alphabet[rng.gen_range(0..a.alphabet.len())].clone(), pos)
                } else {
                    ConcreteUpdate::Reset(pos)
                };
                e.apply(&mut st, &upd).unwrap();
                s.apply(&upd).unwrap();
                let labels = labels_of(&s, &a);
                for (name, want) in expected_tables(&u, &labels, &a) {
                    let got = st.relation(&name).unwrap();
                    assert_eq!(got.tuples(), want.tuples(), "{name} round {round} step {step} {labels:?}\n{a}");
                }
                assert_eq!(st.accept(), tree_oracle(&u, &labels, &a));
            }
        }
    }
}
