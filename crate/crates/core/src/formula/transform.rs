// SPDX-License-Identifier: Apache-2.0

//! Program transformations: capture-avoiding substitution, elimination of
//! initialization rules, and normalization of the update discipline.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::ast::*;
use super::program::{check_tier, DynamicProgram, Rule, UpdateKind};
use crate::structure::Symbol;

static FRESH: AtomicUsize = AtomicUsize::new(0);

fn fresh(base: &str) -> String {
    let base = base.split('#').next().unwrap_or(base);
    format!("{base}#{}", FRESH.fetch_add(1, Ordering::Relaxed))
}

/// Rewritten shared nodes, keyed by the address of the original.
#[derive(Default)]
struct Memo {
    terms: HashMap<usize, Arc<Term>>,
    formulas: HashMap<usize, Arc<Formula>>,
}

impl Memo {
    fn term(&mut self, t: &Arc<Term>, f: &mut dyn FnMut(&Term, &mut Memo) -> Term) -> Arc<Term> {
        let k = Arc::as_ptr(t) as usize;
        if let Some(r) = self.terms.get(&k) {
            return r.clone();
        }
        let r = Arc::new(f(t, self));
        self.terms.insert(k, r.clone());
        r
    }

    fn formula(&mut self, g: &Arc<Formula>, f: &mut dyn FnMut(&Formula, &mut Memo) -> Formula) -> Arc<Formula> {
        let k = Arc::as_ptr(g) as usize;
        if let Some(r) = self.formulas.get(&k) {
            return r.clone();
        }
        let r = Arc::new(f(g, self));
        self.formulas.insert(k, r.clone());
        r
    }
}

/// Substitute terms for free variables, renaming bound variables that
/// would capture a variable of a substituted term.
pub fn subst_formula(f: &Formula, map: &HashMap<String, Term>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    subst_f(f, map, &mut Memo::default())
}

pub fn subst_term(t: &Term, map: &HashMap<String, Term>) -> Term {
    if map.is_empty() {
        return t.clone();
    }
    subst_t(t, map, &mut Memo::default())
}

fn subst_f(f: &Formula, map: &HashMap<String, Term>, memo: &mut Memo) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|a| subst_t(a, map, memo)).collect()),
        Formula::Eq(a, b) => Formula::Eq(subst_t(a, map, memo), subst_t(b, map, memo)),
        Formula::Lt(a, b) => Formula::Lt(subst_t(a, map, memo), subst_t(b, map, memo)),
        Formula::Not(g) => Formula::Not(memo.formula(g, &mut |g, m| subst_f(g, map, m))),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| subst_f(g, map, memo)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| subst_f(g, map, memo)).collect()),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let mut inner = map.clone();
            inner.remove(v);
            let body_free = g.free_var_set();
            let mut captured = false;
            for (k, t) in &inner {
                if body_free.contains(k) {
                    let mut fv = BTreeSet::new();
                    t.free_vars(&mut fv);
                    captured |= fv.contains(v);
                }
            }
            let v2 = if captured {
                let nv = fresh(v);
                inner.insert(v.clone(), Term::Var(nv.clone()));
                nv
            } else {
                v.clone()
            };
            // the map differs below the binder
            let body = Arc::new(subst_f(g, &inner, &mut Memo::default()));
            match f {
                Formula::Exists(..) => Formula::Exists(v2, body),
                _ => Formula::Forall(v2, body),
            }
        }
    }
}

fn subst_t(t: &Term, map: &HashMap<String, Term>, memo: &mut Memo) -> Term {
    match t {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) => t.clone(),
        Term::Apply(f, args) => Term::Apply(f.clone(), args.iter().map(|a| subst_t(a, map, memo)).collect()),
        Term::Ite(c, a, b) => Term::Ite(
            memo.formula(c, &mut |g, m| subst_f(g, map, m)),
            memo.term(a, &mut |x, m| subst_t(x, map, m)),
            memo.term(b, &mut |x, m| subst_t(x, map, m)),
        ),
    }
}

fn binding(vars: &[String], args: &[Term]) -> HashMap<String, Term> {
    vars.iter().cloned().zip(args.iter().cloned()).collect()
}

/// Bottom-up rewriting of relation atoms and function applications.
pub struct Rewriter<'a> {
    pub rel: &'a dyn Fn(&str, &[Term]) -> Option<Formula>,
    pub fun: &'a dyn Fn(&str, &[Term]) -> Option<Term>,
}

impl Rewriter<'_> {
    pub fn formula(&self, f: &Formula) -> Formula {
        self.formula_in(f, &mut Memo::default())
    }

    pub fn term(&self, t: &Term) -> Term {
        self.term_in(t, &mut Memo::default())
    }

    fn formula_in(&self, f: &Formula, memo: &mut Memo) -> Formula {
        match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Rel(r, args) => {
                let args: Vec<Term> = args.iter().map(|a| self.term_in(a, memo)).collect();
                (self.rel)(r, &args).unwrap_or(Formula::Rel(r.clone(), args))
            }
            Formula::Eq(a, b) => Formula::Eq(self.term_in(a, memo), self.term_in(b, memo)),
            Formula::Lt(a, b) => Formula::Lt(self.term_in(a, memo), self.term_in(b, memo)),
            Formula::Not(g) => Formula::Not(memo.formula(g, &mut |g, m| self.formula_in(g, m))),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| self.formula_in(g, memo)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| self.formula_in(g, memo)).collect()),
            Formula::Exists(v, g) => Formula::Exists(v.clone(), memo.formula(g, &mut |g, m| self.formula_in(g, m))),
            Formula::Forall(v, g) => Formula::Forall(v.clone(), memo.formula(g, &mut |g, m| self.formula_in(g, m))),
        }
    }

    fn term_in(&self, t: &Term, memo: &mut Memo) -> Term {
        match t {
            Term::Var(_) => t.clone(),
            Term::Const(c) => (self.fun)(c, &[]).unwrap_or_else(|| t.clone()),
            Term::Apply(f, args) => {
                let args: Vec<Term> = args.iter().map(|a| self.term_in(a, memo)).collect();
                (self.fun)(f, &args).unwrap_or(Term::Apply(f.clone(), args))
            }
            Term::Ite(c, a, b) => Term::Ite(
                memo.formula(c, &mut |g, m| self.formula_in(g, m)),
                memo.term(a, &mut |x, m| self.term_in(x, m)),
                memo.term(b, &mut |x, m| self.term_in(x, m)),
            ),
        }
    }
}

fn unused_name(p: &DynamicProgram, base: &str) -> String {
    let taken: BTreeSet<String> = p
        .schema
        .all_names()
        .into_iter()
        .map(String::from)
        .chain(p.input.alphabet())
        .collect();
    if !taken.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|c| !taken.contains(c))
        .unwrap()
}

/// Replace initialization rules by a 0-ary flag that is false before the
/// first update and true afterwards. Each atom `R(t̄)` of a symbol with an
/// initialization rule `β_R` is read as `(¬I0 ∧ β_R(t̄)) ∨ (I0 ∧ R(t̄))`,
/// each application `F(t̄)` as `ite(I0, F(t̄), init_F(t̄))`. Rules whose
/// initial content equals the default (empty relation) are dropped.
///
/// Propositional symbols initialized to `true` keep their rule: the value
/// does not depend on the universe, and it is what the empty update
/// sequence observes.
///
/// The name of the flag is `I0`, or `I0_k` if that name is taken; it is
/// reported in [`DynamicProgram::init_flag`].
pub fn eliminate_init(p: &DynamicProgram) -> DynamicProgram {
    let constant = |r: &Rule<Formula>| r.vars.is_empty() && r.body == Formula::True;
    let kept: BTreeMap<String, Rule<Formula>> = p
        .rel_init
        .iter()
        .filter(|(_, r)| constant(r))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let rel_init: BTreeMap<String, Rule<Formula>> = p
        .rel_init
        .iter()
        .filter(|(_, r)| r.body != Formula::False && !constant(r))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let fun_init = p.fun_init.clone();
    if rel_init.is_empty() && fun_init.is_empty() {
        let mut out = p.clone();
        out.rel_init = kept;
        return out;
    }
    let flag = unused_name(p, "I0");
    let i0 = prop(&flag);
    let rel = |r: &str, args: &[Term]| -> Option<Formula> {
        let rule = rel_init.get(r)?;
        let beta = subst_formula(&rule.body, &binding(&rule.vars, args));
        Some(or(vec![
            and(vec![not(i0.clone()), beta]),
            and(vec![i0.clone(), Formula::Rel(r.to_string(), args.to_vec())]),
        ]))
    };
    let fun = |f: &str, args: &[Term]| -> Option<Term> {
        let rule = fun_init.get(f)?;
        let init = subst_term(&rule.body, &binding(&rule.vars, args));
        Some(ite(i0.clone(), app(f, args.to_vec()), init))
    };
    let rw = Rewriter {
        rel: &rel,
        fun: &fun,
    };
    let mut out = p.clone();
    for u in &mut out.updates {
        for r in u.relations.values_mut() {
            r.body = rw.formula(&r.body);
        }
        for r in u.functions.values_mut() {
            r.body = rw.term(&r.body);
        }
        u.relations.insert(flag.clone(), Rule::new(&[], Formula::True));
    }
    out.schema.relations.push(Symbol::new(&flag, 0));
    out.rel_init = kept;
    out.fun_init.clear();
    out.init_flag = Some(flag);
    out.tier = check_tier(&out);
    out
}

/// Order constraints between the argument positions of a relation that
/// hold in every reachable state: those implied by every update rule and by
/// the initialization rule (an empty initial relation satisfies anything).
fn invariant_guard(p: &DynamicProgram, name: &str, arity: usize) -> Formula {
    let canon: Vec<String> = (0..arity).map(|i| format!("x#{i}")).collect();
    let mut acc: Option<BTreeSet<(usize, usize, bool)>> = None;
    let mut bodies: Vec<(Vec<String>, &Formula)> = p
        .updates
        .iter()
        .filter_map(|u| u.relations.get(name))
        .map(|r| (r.vars.clone(), &r.body))
        .collect();
    if let Some(r) = p.rel_init.get(name) {
        bodies.push((r.vars.clone(), &r.body));
    }
    for (vars, body) in bodies {
        let cons = order_constraints(body, &vars);
        acc = Some(match acc {
            None => cons,
            Some(a) => {
                let mut out = BTreeSet::new();
                for &(i, j, s) in &a {
                    if cons.contains(&(i, j, s)) || (!s && cons.contains(&(i, j, true))) {
                        out.insert((i, j, s));
                    } else if s && cons.contains(&(i, j, false)) {
                        out.insert((i, j, false));
                    }
                }
                out
            }
        });
    }
    let guards = acc
        .unwrap_or_default()
        .into_iter()
        .map(|(i, j, strict)| {
            let (a, b) = (var(&canon[i]), var(&canon[j]));
            if strict {
                lt(a, b)
            } else {
                le(a, b)
            }
        })
        .collect();
    and(guards)
}

/// Constraints `vars[i] < vars[j]` (strict) or `≤` among rule variables
/// found as top-level conjuncts, through disjunctions by intersection.
fn order_constraints(f: &Formula, vars: &[String]) -> BTreeSet<(usize, usize, bool)> {
    fn go(f: &Formula, vars: &[String]) -> Option<BTreeSet<(usize, usize, bool)>> {
        let pos = |t: &Term| match t {
            Term::Var(v) => vars.iter().position(|w| w == v),
            _ => None,
        };
        let one = |a: &Term, b: &Term, s: bool| {
            let mut set = BTreeSet::new();
            if let (Some(i), Some(j)) = (pos(a), pos(b)) {
                if i != j {
                    set.insert((i, j, s));
                }
            }
            set
        };
        match f {
            Formula::False => None,
            Formula::Lt(a, b) => Some(one(a, b, true)),
            Formula::Not(g) => match &**g {
                Formula::Lt(b, a) => Some(one(a, b, false)),
                _ => Some(BTreeSet::new()),
            },
            Formula::And(gs) => {
                let mut out = BTreeSet::new();
                for g in gs {
                    out.extend(go(g, vars)?);
                }
                Some(out)
            }
            Formula::Or(gs) => {
                let mut acc: Option<BTreeSet<_>> = None;
                for g in gs {
                    if let Some(s) = go(g, vars) {
                        acc = Some(match acc {
                            None => s,
                            Some(a) => a
                                .into_iter()
                                .filter_map(|(i, j, st)| {
                                    if s.contains(&(i, j, st)) {
                                        Some((i, j, st))
                                    } else if s.contains(&(i, j, !st)) {
                                        Some((i, j, false))
                                    } else {
                                        None
                                    }
                                })
                                .collect(),
                        });
                    }
                }
                acc
            }
            _ => Some(BTreeSet::new()),
        }
    }
    go(f, vars).unwrap_or_default()
}

/// Make a program that is correct for disciplined sequences (reset only on
/// labeled positions, insertion only on empty ones) correct for all
/// sequences: a reset of an empty position copies every auxiliary symbol,
/// and an insertion on a labeled position evaluates the insertion rule on
/// the state the reset would have produced.
///
/// # Panics
/// If the program is not in word mode or has no reset update.
pub fn normalize_update_discipline(p: &DynamicProgram) -> DynamicProgram {
    assert!(p.is_word_mode(), "normalization needs word updates");
    let reset = p
        .update(&UpdateKind::Reset)
        .expect("normalization needs a reset update")
        .clone();
    let ry = reset.params[0].clone();
    let alphabet = p.input.alphabet();
    let empty_at = |t: Term| and(alphabet.iter().map(|s| not(rel(s, vec![t.clone()]))).collect());
    let guards: BTreeMap<String, Formula> = p
        .schema
        .relations
        .iter()
        .map(|s| (s.name.clone(), invariant_guard(p, &s.name, s.arity)))
        .collect();
    let mut out = p.clone();
    for u in &mut out.updates {
        let y = var(&u.params[0]);
        let empty = empty_at(y.clone());
        if u.kind == UpdateKind::Reset {
            for (name, r) in u.relations.iter_mut() {
                let canon: Vec<String> = (0..r.vars.len()).map(|i| format!("x#{i}")).collect();
                let guard = subst_formula(
                    &guards[name],
                    &binding(&canon, &r.vars.iter().map(|v| var(v)).collect::<Vec<_>>()),
                );
                let copy = and(vec![guard, rel(name, r.vars.iter().map(|v| var(v)).collect())]);
                r.body = ite_f(empty.clone(), copy, r.body.clone());
            }
            for (name, r) in u.functions.iter_mut() {
                let copy = app(name, r.vars.iter().map(|v| var(v)).collect());
                r.body = ite(empty.clone(), copy, r.body.clone());
            }
            continue;
        }
        let rel_rw = |r: &str, args: &[Term]| -> Option<Formula> {
            if let Some(rule) = reset.relations.get(r) {
                let mut map = binding(&rule.vars, args);
                if ry != u.params[0] {
                    map.insert(ry.clone(), y.clone());
                }
                return Some(subst_formula(&rule.body, &map));
            }
            if alphabet.iter().any(|s| s == r) {
                return Some(and(vec![
                    Formula::Rel(r.to_string(), args.to_vec()),
                    neq(args[0].clone(), y.clone()),
                ]));
            }
            None
        };
        let fun_rw = |f: &str, args: &[Term]| -> Option<Term> {
            let rule = reset.functions.get(f)?;
            let mut map = binding(&rule.vars, args);
            if ry != u.params[0] {
                map.insert(ry.clone(), y.clone());
            }
            Some(subst_term(&rule.body, &map))
        };
        let rw = Rewriter {
            rel: &rel_rw,
            fun: &fun_rw,
        };
        for r in u.relations.values_mut() {
            let composed = rw.formula(&r.body);
            r.body = ite_f(empty.clone(), r.body.clone(), composed);
        }
        for r in u.functions.values_mut() {
            let composed = rw.term(&r.body);
            r.body = ite(empty.clone(), r.body.clone(), composed);
        }
    }
    out.tier = check_tier(&out);
    out
}
