// SPDX-License-Identifier: Apache-2.0

//! Terms and formulas, plus small constructors used by the compilers.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// A 0-ary function symbol.
    Const(String),
    Apply(String, Vec<Term>),
    Ite(Arc<Formula>, Arc<Term>, Arc<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Rel(String, Vec<Term>),
    Eq(Term, Term),
    Lt(Term, Term),
    Not(Arc<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, Arc<Formula>),
    Forall(String, Arc<Formula>),
}

pub fn var(name: &str) -> Term {
    Term::Var(name.to_string())
}

pub fn constant(name: &str) -> Term {
    Term::Const(name.to_string())
}

pub fn app(f: &str, args: Vec<Term>) -> Term {
    if args.is_empty() {
        Term::Const(f.to_string())
    } else {
        Term::Apply(f.to_string(), args)
    }
}

pub fn ite(c: Formula, a: Term, b: Term) -> Term {
    match c {
        Formula::True => a,
        Formula::False => b,
        c => {
            if a == b {
                a
            } else {
                Term::Ite(Arc::new(c), Arc::new(a), Arc::new(b))
            }
        }
    }
}

pub fn rel(r: &str, args: Vec<Term>) -> Formula {
    Formula::Rel(r.to_string(), args)
}

pub fn prop(r: &str) -> Formula {
    Formula::Rel(r.to_string(), vec![])
}

pub fn eq(a: Term, b: Term) -> Formula {
    Formula::Eq(a, b)
}

pub fn neq(a: Term, b: Term) -> Formula {
    not(Formula::Eq(a, b))
}

pub fn lt(a: Term, b: Term) -> Formula {
    Formula::Lt(a, b)
}

/// `a ≤ b`, written as `¬(b < a)`.
pub fn le(a: Term, b: Term) -> Formula {
    not(Formula::Lt(b, a))
}

pub fn not(f: Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(g) => Arc::try_unwrap(g).unwrap_or_else(|g| (*g).clone()),
        f => Formula::Not(Arc::new(f)),
    }
}

/// Conjunction with constant folding and flattening.
pub fn and(fs: Vec<Formula>) -> Formula {
    let mut out = Vec::new();
    for f in fs {
        match f {
            Formula::True => {}
            Formula::False => return Formula::False,
            Formula::And(gs) => out.extend(gs),
            f => out.push(f),
        }
    }
    match out.len() {
        0 => Formula::True,
        1 => out.pop().unwrap(),
        _ => Formula::And(out),
    }
}

/// Disjunction with constant folding and flattening.
pub fn or(fs: Vec<Formula>) -> Formula {
    let mut out = Vec::new();
    for f in fs {
        match f {
            Formula::False => {}
            Formula::True => return Formula::True,
            Formula::Or(gs) => out.extend(gs),
            f => out.push(f),
        }
    }
    match out.len() {
        0 => Formula::False,
        1 => out.pop().unwrap(),
        _ => Formula::Or(out),
    }
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    or(vec![not(a), b])
}

/// Formula-level if-then-else.
pub fn ite_f(c: Formula, a: Formula, b: Formula) -> Formula {
    match c {
        Formula::True => a,
        Formula::False => b,
        c => {
            if a == b {
                return a;
            }
            or(vec![and(vec![c.clone(), a]), and(vec![not(c), b])])
        }
    }
}

pub fn exists(v: &str, body: Formula) -> Formula {
    Formula::Exists(v.to_string(), Arc::new(body))
}

pub fn forall(v: &str, body: Formula) -> Formula {
    Formula::Forall(v.to_string(), Arc::new(body))
}

pub fn exists_many(vs: &[&str], body: Formula) -> Formula {
    vs.iter().rev().fold(body, |acc, v| exists(v, acc))
}

/// Identity of a shared node. Terms and formulas are trees of `Arc`s that
/// substitution turns into DAGs, so traversals that may meet compiled
/// programs remember the nodes they have seen.
fn key<T>(r: &Arc<T>) -> usize {
    Arc::as_ptr(r) as usize
}

fn term_free_vars(t: &Term, out: &mut BTreeSet<String>, seen: &mut HashSet<usize>) {
    match t {
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::Const(_) => {}
        Term::Apply(_, args) => args.iter().for_each(|a| term_free_vars(a, out, seen)),
        Term::Ite(c, a, b) => {
            if seen.insert(key(c)) {
                formula_free_vars(c, out, seen);
            }
            for x in [a, b] {
                if seen.insert(key(x)) {
                    term_free_vars(x, out, seen);
                }
            }
        }
    }
}

fn formula_free_vars(f: &Formula, out: &mut BTreeSet<String>, seen: &mut HashSet<usize>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Rel(_, args) => args.iter().for_each(|a| term_free_vars(a, out, seen)),
        Formula::Eq(a, b) | Formula::Lt(a, b) => {
            term_free_vars(a, out, seen);
            term_free_vars(b, out, seen);
        }
        Formula::Not(g) => {
            if seen.insert(key(g)) {
                formula_free_vars(g, out, seen)
            }
        }
        Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| formula_free_vars(f, out, seen)),
        Formula::Exists(v, f) | Formula::Forall(v, f) => {
            // shared nodes below a binder may have other free variables
            let mut inner = BTreeSet::new();
            formula_free_vars(f, &mut inner, &mut HashSet::new());
            inner.remove(v);
            out.extend(inner);
        }
    }
}

fn term_size(t: &Term, memo: &mut HashMap<usize, usize>) -> usize {
    match t {
        Term::Var(_) | Term::Const(_) => 1,
        Term::Apply(_, args) => args.iter().fold(1usize, |s, a| s.saturating_add(term_size(a, memo))),
        Term::Ite(c, a, b) => {
            let c = shared(c, memo, formula_size);
            let a = shared(a, memo, term_size);
            let b = shared(b, memo, term_size);
            1usize.saturating_add(c).saturating_add(a).saturating_add(b)
        }
    }
}

fn formula_size(f: &Formula, memo: &mut HashMap<usize, usize>) -> usize {
    match f {
        Formula::True | Formula::False => 1,
        Formula::Rel(_, args) => args.iter().fold(1usize, |s, a| s.saturating_add(term_size(a, memo))),
        Formula::Eq(a, b) | Formula::Lt(a, b) => 1usize
            .saturating_add(term_size(a, memo))
            .saturating_add(term_size(b, memo)),
        Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => {
            1usize.saturating_add(shared(g, memo, formula_size))
        }
        Formula::And(fs) | Formula::Or(fs) => fs.iter().fold(1usize, |s, f| s.saturating_add(formula_size(f, memo))),
    }
}

fn shared<T>(r: &Arc<T>, memo: &mut HashMap<usize, usize>, f: fn(&T, &mut HashMap<usize, usize>) -> usize) -> usize {
    if let Some(v) = memo.get(&key(r)) {
        return *v;
    }
    let v = f(r, memo);
    memo.insert(key(r), v);
    v
}

fn term_depth(t: &Term, memo: &mut HashMap<usize, usize>) -> usize {
    match t {
        Term::Var(_) | Term::Const(_) => 0,
        Term::Apply(_, args) => args.iter().map(|a| term_depth(a, memo)).max().unwrap_or(0),
        Term::Ite(c, a, b) => shared(c, memo, formula_depth)
            .max(shared(a, memo, term_depth))
            .max(shared(b, memo, term_depth)),
    }
}

fn formula_depth(f: &Formula, memo: &mut HashMap<usize, usize>) -> usize {
    match f {
        Formula::True | Formula::False => 0,
        Formula::Rel(_, args) => args.iter().map(|a| term_depth(a, memo)).max().unwrap_or(0),
        Formula::Eq(a, b) | Formula::Lt(a, b) => term_depth(a, memo).max(term_depth(b, memo)),
        Formula::Not(f) => shared(f, memo, formula_depth),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().map(|f| formula_depth(f, memo)).max().unwrap_or(0),
        Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + shared(f, memo, formula_depth),
    }
}

impl Term {
    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        term_free_vars(self, out, &mut HashSet::new())
    }

    /// Size of the term written out as a tree (saturating).
    pub fn size(&self) -> usize {
        term_size(self, &mut HashMap::new())
    }

    pub fn quantifier_depth(&self) -> usize {
        term_depth(self, &mut HashMap::new())
    }
}

impl Formula {
    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        formula_free_vars(self, out, &mut HashSet::new())
    }

    pub fn free_var_set(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    /// Size of the formula written out as a tree (saturating).
    pub fn size(&self) -> usize {
        formula_size(self, &mut HashMap::new())
    }

    /// Maximum nesting depth of quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        formula_depth(self, &mut HashMap::new())
    }
}

/// Visit every symbol occurrence: `(name, arity, is_function)`. Shared
/// subterms are visited once.
pub fn visit_symbols_formula(f: &Formula, visit: &mut dyn FnMut(&str, usize, bool)) {
    symbols_formula(f, visit, &mut HashSet::new())
}

pub fn visit_symbols_term(t: &Term, visit: &mut dyn FnMut(&str, usize, bool)) {
    symbols_term(t, visit, &mut HashSet::new())
}

fn symbols_formula(f: &Formula, visit: &mut dyn FnMut(&str, usize, bool), seen: &mut HashSet<usize>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Rel(r, args) => {
            visit(r, args.len(), false);
            args.iter().for_each(|a| symbols_term(a, visit, seen));
        }
        Formula::Eq(a, b) | Formula::Lt(a, b) => {
            symbols_term(a, visit, seen);
            symbols_term(b, visit, seen);
        }
        Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => {
            if seen.insert(key(g)) {
                symbols_formula(g, visit, seen)
            }
        }
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| symbols_formula(g, visit, seen)),
    }
}

fn symbols_term(t: &Term, visit: &mut dyn FnMut(&str, usize, bool), seen: &mut HashSet<usize>) {
    match t {
        Term::Var(_) => {}
        Term::Const(c) => visit(c, 0, true),
        Term::Apply(fun, args) => {
            visit(fun, args.len(), true);
            args.iter().for_each(|a| symbols_term(a, visit, seen));
        }
        Term::Ite(c, a, b) => {
            if seen.insert(key(c)) {
                symbols_formula(c, visit, seen);
            }
            for x in [a, b] {
                if seen.insert(key(x)) {
                    symbols_term(x, visit, seen);
                }
            }
        }
    }
}

pub fn has_quantifier(f: &Formula) -> bool {
    f.quantifier_depth() > 0
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::Apply(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Term::Ite(c, a, b) => write!(f, "ite({c}, {a}, {b})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Rel(r, args) => {
                write!(f, "{r}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Lt(a, b) => write!(f, "{a} < {b}"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(gs) => {
                write!(f, "(")?;
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, ")")
            }
            Formula::Or(gs) => {
                write!(f, "(")?;
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, ")")
            }
            Formula::Exists(v, g) => write!(f, "exists {v}. {g}"),
            Formula::Forall(v, g) => write!(f, "forall {v}. {g}"),
        }
    }
}
