// SPDX-License-Identifier: Apache-2.0

//! Context-free grammars in Chomsky normal form and the first-order program
//! maintaining their derivation relations.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::formula::ast::*;
use crate::formula::program::{DynamicProgram, ProgramBuilder, UpdateKind, ACCEPT, PRE, SUCC};
use crate::formula::transform::eliminate_init;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar has no nonterminals")]
    Empty,
    #[error("unknown nonterminal `{0}`")]
    UnknownNonterminal(String),
    #[error("unknown terminal `{0}`")]
    UnknownTerminal(String),
    #[error("`{0}` is both a terminal and a nonterminal")]
    Clash(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("grammar is not augmented with a neutral nonterminal")]
    NotAugmented,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Right-hand side of a CNF rule; nonterminals are indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rhs {
    Pair(usize, usize),
    Letter(String),
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CnfRule {
    pub lhs: usize,
    pub rhs: Rhs,
}

/// A grammar with rules `U → XY`, `U → a` and `U → ε`. After
/// [`augment_cnf`], `empty` names a nonterminal `E` with `E → ε` and
/// `U → UE`, `U → EU` for every `U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfGrammar {
    pub nonterminals: Vec<String>,
    pub start: usize,
    pub terminals: Vec<String>,
    pub rules: Vec<CnfRule>,
    pub empty: Option<usize>,
}

impl CnfGrammar {
    pub fn new<S: AsRef<str>>(
        nonterminals: &[S],
        start: &str,
        terminals: &[S],
        rules: &[(&str, &[&str])],
    ) -> Result<Self, GrammarError> {
        let nonterminals: Vec<String> = nonterminals.iter().map(|s| s.as_ref().to_string()).collect();
        let terminals: Vec<String> = terminals.iter().map(|s| s.as_ref().to_string()).collect();
        let mut g = CnfGrammar {
            start: 0,
            nonterminals,
            terminals,
            rules: Vec::new(),
            empty: None,
        };
        g.check_names()?;
        g.start = g.nt(start)?;
        for (lhs, rhs) in rules {
            let rule = g.rule(lhs, rhs, 0)?;
            g.rules.push(rule);
        }
        Ok(g)
    }

    fn check_names(&self) -> Result<(), GrammarError> {
        if self.nonterminals.is_empty() {
            return Err(GrammarError::Empty);
        }
        let mut seen = HashSet::new();
        for s in self.nonterminals.iter().chain(&self.terminals) {
            if !seen.insert(s) {
                return Err(if self.nonterminals.contains(s) && self.terminals.contains(s) {
                    GrammarError::Clash(s.clone())
                } else {
                    GrammarError::Duplicate(s.clone())
                });
            }
        }
        Ok(())
    }

    fn nt(&self, s: &str) -> Result<usize, GrammarError> {
        self.nonterminals
            .iter()
            .position(|v| v == s)
            .ok_or_else(|| GrammarError::UnknownNonterminal(s.to_string()))
    }

    fn rule(&self, lhs: &str, rhs: &[&str], line: usize) -> Result<CnfRule, GrammarError> {
        let lhs = self.nt(lhs)?;
        let rhs = match rhs {
            [] | ["eps"] | ["ε"] => Rhs::Empty,
            [a] => {
                if !self.terminals.iter().any(|t| t == a) {
                    return Err(GrammarError::UnknownTerminal(a.to_string()));
                }
                Rhs::Letter(a.to_string())
            }
            [x, y] => Rhs::Pair(self.nt(x)?, self.nt(y)?),
            _ => {
                return Err(GrammarError::Parse {
                    line,
                    msg: format!("right-hand side `{}` is not in normal form", rhs.join(" ")),
                })
            }
        };
        Ok(CnfRule { lhs, rhs })
    }

    pub fn start_name(&self) -> &str {
        &self.nonterminals[self.start]
    }

    /// Whether `empty` names a nonterminal with the augmentation rules.
    pub fn is_augmented(&self) -> bool {
        let Some(e) = self.empty else { return false };
        let has = |r: CnfRule| self.rules.contains(&r);
        has(CnfRule { lhs: e, rhs: Rhs::Empty })
            && (0..self.nonterminals.len()).all(|u| {
                has(CnfRule { lhs: u, rhs: Rhs::Pair(u, e) }) && has(CnfRule { lhs: u, rhs: Rhs::Pair(e, u) })
            })
    }

    /// Nonterminals deriving the empty word.
    pub fn nullable(&self) -> Vec<bool> {
        let mut null = vec![false; self.nonterminals.len()];
        loop {
            let mut changed = false;
            for r in &self.rules {
                let yes = match r.rhs {
                    Rhs::Empty => true,
                    Rhs::Pair(x, y) => null[x] && null[y],
                    Rhs::Letter(_) => false,
                };
                if yes && !null[r.lhs] {
                    null[r.lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                return null;
            }
        }
    }

    /// `unit[u][x]`: `u ⇒* x` where everything else derived is nullable.
    pub fn unit_closure(&self) -> Vec<Vec<bool>> {
        let k = self.nonterminals.len();
        let null = self.nullable();
        let mut unit = vec![vec![false; k]; k];
        for (u, row) in unit.iter_mut().enumerate() {
            row[u] = true;
        }
        loop {
            let mut changed = false;
            for r in &self.rules {
                let Rhs::Pair(x, y) = r.rhs else { continue };
                for (child, other) in [(x, y), (y, x)] {
                    if !null[other] {
                        continue;
                    }
                    for t in 0..k {
                        if unit[child][t] && !unit[r.lhs][t] {
                            unit[r.lhs][t] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return unit;
            }
        }
    }

    /// Parse the line format
    /// `nonterminals:`, `start:`, `terminals:`, `rule: U -> X Y | a | eps`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut nonterminals = None;
        let mut start = None;
        let mut terminals = None;
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap().trim();
            if l.is_empty() {
                continue;
            }
            let err = |msg: &str| GrammarError::Parse { line, msg: msg.to_string() };
            let (key, rest) = l.split_once(':').ok_or_else(|| err("expected `key: value`"))?;
            let words: Vec<&str> = rest.split_whitespace().collect();
            match key.trim() {
                "nonterminals" => nonterminals = Some(words.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
                "terminals" => terminals = Some(words.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
                "start" => match words[..] {
                    [s] => start = Some(s.to_string()),
                    _ => return Err(err("expected one start symbol")),
                },
                "rule" => {
                    let (lhs, rhs) = rest.split_once("->").ok_or_else(|| err("expected `U -> ...`"))?;
                    let lhs = lhs.trim().to_string();
                    for alt in rhs.split('|') {
                        let mut body: Vec<String> = alt.split_whitespace().map(str::to_string).collect();
                        // a repeated left-hand side may be written out: `U -> X Y | U -> a`
                        if body.len() >= 2 && body[0] == lhs && body[1] == "->" {
                            body.drain(..2);
                        }
                        if body.is_empty() {
                            return Err(err("empty alternative; write `eps`"));
                        }
                        rules.push((line, lhs.clone(), body));
                    }
                }
                other => return Err(err(&format!("unknown key `{other}`"))),
            }
        }
        let missing = |what: &str| GrammarError::Parse { line: 0, msg: format!("missing `{what}:` line") };
        let nonterminals = nonterminals.ok_or_else(|| missing("nonterminals"))?;
        let terminals = terminals.unwrap_or_default();
        let start = start.ok_or_else(|| missing("start"))?;
        let mut g = CnfGrammar {
            nonterminals,
            start: 0,
            terminals,
            rules: Vec::new(),
            empty: None,
        };
        g.check_names()?;
        g.start = g.nt(&start)?;
        for (line, lhs, body) in rules {
            let body: Vec<&str> = body.iter().map(String::as_str).collect();
            let r = g.rule(&lhs, &body, line)?;
            g.rules.push(r);
        }
        Ok(g)
    }
}

impl fmt::Display for CnfGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nonterminals: {}", self.nonterminals.join(" "))?;
        writeln!(f, "start: {}", self.start_name())?;
        writeln!(f, "terminals: {}", self.terminals.join(" "))?;
        for r in &self.rules {
            let rhs = match &r.rhs {
                Rhs::Pair(x, y) => format!("{} {}", self.nonterminals[*x], self.nonterminals[*y]),
                Rhs::Letter(a) => a.clone(),
                Rhs::Empty => "eps".to_string(),
            };
            writeln!(f, "rule: {} -> {rhs}", self.nonterminals[r.lhs])?;
        }
        Ok(())
    }
}

/// Add a fresh `E` with `E → ε`, `U → UE` and `U → EU` for every `U`
/// (including `E`). If `E` is taken, `E_1`, `E_2`, … are tried.
///
/// Both `E → EE` rules are kept, so the rule count grows by `1 + 2(|V|+1)`.
pub fn augment_cnf(g: &CnfGrammar) -> CnfGrammar {
    let taken = |s: &str| g.nonterminals.iter().chain(&g.terminals).any(|t| t == s);
    let name = std::iter::once("E".to_string())
        .chain((1..).map(|i| format!("E_{i}")))
        .find(|s| !taken(s))
        .unwrap();
    let mut a = g.clone();
    let e = a.nonterminals.len();
    a.nonterminals.push(name);
    a.rules.push(CnfRule { lhs: e, rhs: Rhs::Empty });
    for u in 0..=e {
        a.rules.push(CnfRule { lhs: u, rhs: Rhs::Pair(u, e) });
        a.rules.push(CnfRule { lhs: u, rhs: Rhs::Pair(e, u) });
    }
    a.empty = Some(e);
    a
}

/// CYK with nullable and unit-via-nullable closure.
pub fn cyk_oracle<S: AsRef<str>>(g: &CnfGrammar, w: &[S]) -> bool {
    let n = w.len();
    if n == 0 {
        return g.nullable()[g.start];
    }
    let k = g.nonterminals.len();
    let unit = g.unit_closure();
    let close = |set: &mut Vec<bool>| {
        let base = set.clone();
        for u in 0..k {
            if !set[u] {
                set[u] = (0..k).any(|t| base[t] && unit[u][t]);
            }
        }
    };
    // t[i][l]: nonterminals deriving w[i..i+l]
    let mut t = vec![vec![vec![false; k]; n + 1]; n];
    for (i, a) in w.iter().enumerate() {
        let set = &mut t[i][1];
        for r in &g.rules {
            if matches!(&r.rhs, Rhs::Letter(b) if b == a.as_ref()) {
                set[r.lhs] = true;
            }
        }
        close(set);
    }
    for l in 2..=n {
        for i in 0..=n - l {
            let mut set = vec![false; k];
            for r in &g.rules {
                let Rhs::Pair(x, y) = r.rhs else { continue };
                if !set[r.lhs] {
                    set[r.lhs] = (1..l).any(|m| t[i][m][x] && t[i + m][l - m][y]);
                }
            }
            close(&mut set);
            t[i][l] = set;
        }
    }
    t[0][n][g.start]
}

/// Name of the relation `R_{X,Y}`.
pub fn cfl_relation(g: &CnfGrammar, x: usize, y: usize) -> String {
    format!("R_{}_{}", g.nonterminals[x], g.nonterminals[y])
}

fn r(g: &CnfGrammar, x: usize, y: usize, args: [&Term; 4]) -> Formula {
    rel(&cfl_relation(g, x, y), args.iter().map(|t| (*t).clone()).collect())
}

/// Binary rules grouped by left-hand side.
fn binary(g: &CnfGrammar) -> Vec<(usize, Vec<(usize, usize)>)> {
    let mut out: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    let mut seen = BTreeSet::new();
    for rule in &g.rules {
        let Rhs::Pair(x, y) = rule.rhs else { continue };
        if !seen.insert((rule.lhs, x, y)) {
            continue;
        }
        match out.iter_mut().find(|(u, _)| *u == rule.lhs) {
            Some((_, v)) => v.push((x, y)),
            None => out.push((rule.lhs, vec![(x, y)])),
        }
    }
    out
}

/// `R_{X,Y}(i1,i2,j1,j2)` after the position `y` becomes a leaf derived
/// from one of `leaves`: unchanged if `y` lies outside the context, else
/// the leaf's lowest common ancestor with the hole splits at `u1..u3`.
fn update_formula(g: &CnfGrammar, x: usize, yy: usize, leaves: &[usize]) -> Formula {
    let [i1, i2, j1, j2, p] = ["i1", "i2", "j1", "j2", "y"].map(var);
    let [u1, u2, u3] = ["u1", "u2", "u3"].map(var);
    let bin = binary(g);
    let leaf = |a: &Term, b: &Term, u1x: usize| or(leaves.iter().map(|&z| r(g, u1x, z, [a, b, &p, &p])).collect());
    let left = and(vec![
        le(i1.clone(), p.clone()),
        lt(p.clone(), j1.clone()),
        exists_many(
            &["u1", "u3"],
            and(vec![
                le(i1.clone(), u1.clone()),
                le(u1.clone(), p.clone()),
                le(j2.clone(), u3.clone()),
                le(u3.clone(), i2.clone()),
                or(bin
                    .iter()
                    .map(|(u, pairs)| {
                        and(vec![
                            r(g, x, *u, [&i1, &i2, &u1, &u3]),
                            exists(
                                "u2",
                                and(vec![
                                    le(p.clone(), u2.clone()),
                                    lt(u2.clone(), j1.clone()),
                                    or(pairs
                                        .iter()
                                        .map(|&(a, b)| {
                                            and(vec![
                                                leaf(&u1, &u2, a),
                                                r(g, b, yy, [&app(SUCC, vec![u2.clone()]), &u3, &j1, &j2]),
                                            ])
                                        })
                                        .collect()),
                                ]),
                            ),
                        ])
                    })
                    .collect()),
            ]),
        ),
    ]);
    let right = and(vec![
        lt(j2.clone(), p.clone()),
        le(p.clone(), i2.clone()),
        exists_many(
            &["u1", "u3"],
            and(vec![
                le(i1.clone(), u1.clone()),
                le(u1.clone(), j1.clone()),
                le(p.clone(), u3.clone()),
                le(u3.clone(), i2.clone()),
                or(bin
                    .iter()
                    .map(|(u, pairs)| {
                        and(vec![
                            r(g, x, *u, [&i1, &i2, &u1, &u3]),
                            exists(
                                "u2",
                                and(vec![
                                    lt(j2.clone(), u2.clone()),
                                    le(u2.clone(), p.clone()),
                                    or(pairs
                                        .iter()
                                        .map(|&(a, b)| {
                                            and(vec![
                                                r(g, a, yy, [&u1, &app(PRE, vec![u2.clone()]), &j1, &j2]),
                                                leaf(&u2, &u3, b),
                                            ])
                                        })
                                        .collect()),
                                ]),
                            ),
                        ])
                    })
                    .collect()),
            ]),
        ),
    ]);
    let untouched = and(vec![
        or(vec![
            lt(p.clone(), i1.clone()),
            lt(i2.clone(), p.clone()),
            and(vec![le(j1.clone(), p.clone()), le(p.clone(), j2.clone())]),
        ]),
        r(g, x, yy, [&i1, &i2, &j1, &j2]),
    ]);
    and(vec![
        le(i1.clone(), j1.clone()),
        le(j1.clone(), j2.clone()),
        le(j2.clone(), i2.clone()),
        or(vec![untouched, left, right]),
    ])
}

/// `S →* w[min, y−1] Z w[y+1, max]` for some `Z` in `leaves`, with the
/// constants defined in first-order logic.
fn accept_formula(g: &CnfGrammar, leaves: &[usize]) -> Formula {
    let [a, b, c, p] = ["a", "b", "c", "y"].map(var);
    exists_many(
        &["a", "b"],
        and(vec![
            forall("c", and(vec![le(a.clone(), c.clone()), le(c.clone(), b.clone())])),
            or(leaves.iter().map(|&z| r(g, g.start, z, [&a, &b, &p, &p])).collect()),
        ]),
    )
}

/// The first-order program maintaining `R_{X,Y}` for all `X, Y`: the
/// tuples `(i1,i2,j1,j2)` with `[j1,j2] ⊆ [i1,i2]` and
/// `X →* w[i1,j1−1] Y w[j2+1,i2]`. No auxiliary functions are used; the
/// successor and predecessor of the order appear as built-ins.
///
/// Initially every position is empty, so `R_{X,Y}` holds on all nested
/// intervals iff `X ⇒* Y` with nullable context.
pub fn compile_cfl(g: &CnfGrammar) -> Result<DynamicProgram, GrammarError> {
    compile_cfl_with_init(g).map(|p| eliminate_init(&p))
}

/// [`compile_cfl`] with its initialization rules in place.
pub fn compile_cfl_with_init(g: &CnfGrammar) -> Result<DynamicProgram, GrammarError> {
    if !g.is_augmented() {
        return Err(GrammarError::NotAugmented);
    }
    let e = g.empty.unwrap();
    let k = g.nonterminals.len();
    let mut b = ProgramBuilder::word("cfl", &g.terminals);
    b.builtins();
    for x in 0..k {
        for y in 0..k {
            b.relation(&cfl_relation(g, x, y), 4);
        }
    }
    let vars = ["i1", "i2", "j1", "j2"];
    for kind in b.kinds() {
        let leaves: Vec<usize> = match &kind {
            UpdateKind::Ins(s) => {
                let mut v: Vec<usize> = g
                    .rules
                    .iter()
                    .filter(|r| matches!(&r.rhs, Rhs::Letter(a) if a == s))
                    .map(|r| r.lhs)
                    .collect();
                v.sort();
                v.dedup();
                v
            }
            _ => vec![e],
        };
        for x in 0..k {
            for y in 0..k {
                b.update_rel(&kind, &cfl_relation(g, x, y), &vars, update_formula(g, x, y, &leaves));
            }
        }
        b.update_rel(&kind, ACCEPT, &[], accept_formula(g, &leaves));
    }
    let unit = g.unit_closure();
    let [i1, i2, j1, j2] = vars.map(var);
    let nested = and(vec![le(i1.clone(), j1.clone()), le(j1, j2.clone()), le(j2, i2)]);
    for x in 0..k {
        for y in 0..k {
            if unit[x][y] {
                b.init_rel(&cfl_relation(g, x, y), &vars, nested.clone());
            }
        }
    }
    if g.nullable()[g.start] {
        b.init_rel(ACCEPT, &[], Formula::True);
    }
    Ok(b.build().expect("cfl program is well formed"))
}

/// `S → ε | SS | L B`, `B → S R`, `L → (`, `R → )`.
pub fn dyck1_grammar() -> CnfGrammar {
    CnfGrammar::new(
        &["S", "B", "L", "R"],
        "S",
        &["(", ")"],
        &[
            ("S", &[]),
            ("S", &["S", "S"]),
            ("S", &["L", "B"]),
            ("B", &["S", "R"]),
            ("L", &["("]),
            ("R", &[")"]),
        ],
    )
    .unwrap()
}

/// `{aⁿbⁿ | n ≥ 0}`: `S → ε | A T | A B`, `T → S B`, `A → a`, `B → b`.
pub fn anbn_grammar() -> CnfGrammar {
    CnfGrammar::new(
        &["S", "T", "A", "B"],
        "S",
        &["a", "b"],
        &[
            ("S", &[]),
            ("S", &["A", "T"]),
            ("S", &["A", "B"]),
            ("T", &["S", "B"]),
            ("A", &["a"]),
            ("B", &["b"]),
        ],
    )
    .unwrap()
}
