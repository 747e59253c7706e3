// SPDX-License-Identifier: Apache-2.0

//! One bracket kind with ringlists of positions per level.
//!
//! The level of a position is the number of opening minus closing brackets
//! up to and including it. For every interval `[i,j]` and level `λ` the
//! program keeps the positions of `[i,j]` with level `λ` as a directed
//! cycle in increasing order (`L`), with emptiness (`F`), minimum (`Min`)
//! and maximum (`Max`). Level `0` uses the `…0` relations; level `+l` and
//! `-l` use the `…p`/`…m` relations with the magnitude `l` as an extra
//! argument (element `l` stands for magnitude `l`). `Fmax(i,λ)` is
//! `F(i,n,λ)`, and `Last(λ)` holds for the level of position `n`.

use crate::formula::ast::*;
use crate::formula::program::{DynamicProgram, ProgramBuilder, UpdateKind, ACCEPT, MIN, PRE, SUCC};
use crate::formula::transform::{eliminate_init, normalize_update_discipline, subst_formula};

use super::BracketAlphabet;

#[derive(Clone, Debug)]
pub enum Level {
    Zero,
    Pos(Term),
    Neg(Term),
    /// No such level (out of range); every atom is false.
    Empty,
}

/// The three relation names of a family: level zero, positive, negative.
pub fn level_names(family: &str) -> [String; 3] {
    [format!("{family}0"), format!("{family}p"), format!("{family}m")]
}

fn atom(family: &str, lev: &Level, prefix: &[Term], suffix: &[Term]) -> Formula {
    let [zero, pos, neg] = level_names(family);
    let (name, l) = match lev {
        Level::Empty => return Formula::False,
        Level::Zero => (zero, None),
        Level::Pos(l) => (pos, Some(l.clone())),
        Level::Neg(l) => (neg, Some(l.clone())),
    };
    let mut args = prefix.to_vec();
    args.extend(l);
    args.extend_from_slice(suffix);
    rel(&name, args)
}

fn succ(t: Term) -> Term {
    app(SUCC, vec![t])
}

fn pre(t: Term) -> Term {
    app(PRE, vec![t])
}

fn one() -> Term {
    constant(MIN)
}

/// `build(λ - delta)` for target level `λ`.
fn source(target: &Level, delta: i32, build: &dyn Fn(&Level) -> Formula) -> Formula {
    // stepping a magnitude up is impossible at the top element
    let up = |l: &Term, mk: fn(Term) -> Level| {
        and(vec![neq(succ(l.clone()), l.clone()), build(&mk(succ(l.clone())))])
    };
    let down = |l: &Term, mk: fn(Term) -> Level| {
        ite_f(eq(l.clone(), one()), build(&Level::Zero), build(&mk(pre(l.clone()))))
    };
    match (target, delta) {
        (Level::Empty, _) => Formula::False,
        (Level::Zero, 1) => build(&Level::Neg(one())),
        (Level::Zero, _) => build(&Level::Pos(one())),
        (Level::Pos(l), 1) => down(l, Level::Pos),
        (Level::Pos(l), _) => up(l, Level::Pos),
        (Level::Neg(l), 1) => up(l, Level::Neg),
        (Level::Neg(l), _) => down(l, Level::Neg),
    }
}

struct Ctx {
    x: Term,
    i: Term,
    j: Term,
}

impl Ctx {
    /// Case split on the update position against `[i,j]`: untouched,
    /// whole interval shifted, or split at `x`.
    fn cases(&self, copy: Formula, shift: Formula, merge: Formula) -> Formula {
        or(vec![
            and(vec![lt(self.j.clone(), self.x.clone()), copy]),
            and(vec![le(self.x.clone(), self.i.clone()), shift]),
            and(vec![lt(self.i.clone(), self.x.clone()), le(self.x.clone(), self.j.clone()), merge]),
        ])
    }

    fn left(&self) -> [Term; 2] {
        [self.i.clone(), pre(self.x.clone())]
    }

    fn right(&self) -> [Term; 2] {
        [self.x.clone(), self.j.clone()]
    }
}

fn l_body(c: &Ctx, t: &Level, d: i32, a: &Term, b: &Term) -> Formula {
    let (i, j, x) = (&c.i, &c.j, &c.x);
    let ab = [a.clone(), b.clone()];
    let copy = atom("L", t, &[i.clone(), j.clone()], &ab);
    let shift = source(t, d, &|s| atom("L", s, &[i.clone(), j.clone()], &ab));
    let fa = atom("F", t, &c.left(), &[]);
    let fb = source(t, d, &|s| atom("F", s, &c.right(), &[]));
    let la = atom("L", t, &c.left(), &ab);
    let lb = source(t, d, &|s| atom("L", s, &c.right(), &ab));
    let both = or(vec![
        and(vec![lt(a.clone(), b.clone()), lt(b.clone(), x.clone()), la.clone()]),
        and(vec![
            lt(a.clone(), x.clone()),
            le(x.clone(), b.clone()),
            atom("Max", t, &c.left(), &[a.clone()]),
            source(t, d, &|s| atom("Min", s, &c.right(), &[b.clone()])),
        ]),
        and(vec![le(x.clone(), a.clone()), lt(a.clone(), b.clone()), lb.clone()]),
        and(vec![
            lt(b.clone(), a.clone()),
            atom("Min", t, &c.left(), &[b.clone()]),
            source(t, d, &|s| atom("Max", s, &c.right(), &[a.clone()])),
        ]),
    ]);
    let merge = ite_f(
        and(vec![fa.clone(), fb.clone()]),
        both,
        or(vec![and(vec![fa, la]), and(vec![fb, lb])]),
    );
    c.cases(copy, shift, merge)
}

fn f_body(c: &Ctx, t: &Level, d: i32) -> Formula {
    let ij = [c.i.clone(), c.j.clone()];
    let copy = atom("F", t, &ij, &[]);
    let shift = source(t, d, &|s| atom("F", s, &ij, &[]));
    let merge = or(vec![atom("F", t, &c.left(), &[]), source(t, d, &|s| atom("F", s, &c.right(), &[]))]);
    c.cases(copy, shift, merge)
}

fn minmax_body(c: &Ctx, t: &Level, d: i32, k: &Term, is_min: bool) -> Formula {
    let fam = if is_min { "Min" } else { "Max" };
    let ij = [c.i.clone(), c.j.clone()];
    let ks = [k.clone()];
    let copy = atom(fam, t, &ij, &ks);
    let shift = source(t, d, &|s| atom(fam, s, &ij, &ks));
    let fa = atom("F", t, &c.left(), &[]);
    let fb = source(t, d, &|s| atom("F", s, &c.right(), &[]));
    let ma = atom(fam, t, &c.left(), &ks);
    let mb = source(t, d, &|s| atom(fam, s, &c.right(), &ks));
    // the minimum comes from the left part if it is non-empty, the maximum
    // from the right part
    let merge = if is_min {
        ite_f(fa, ma, mb)
    } else {
        ite_f(fb, mb, ma)
    };
    c.cases(copy, shift, merge)
}

fn fmax_body(x: &Term, i: &Term, t: &Level, d: i32) -> Formula {
    let shift = source(t, d, &|s| atom("Fmax", s, &[i.clone()], &[]));
    let merge = or(vec![
        atom("F", t, &[i.clone(), pre(x.clone())], &[]),
        source(t, d, &|s| atom("Fmax", s, &[x.clone()], &[])),
    ]);
    or(vec![
        and(vec![le(x.clone(), i.clone()), shift]),
        and(vec![lt(i.clone(), x.clone()), merge]),
    ])
}

fn last_body(t: &Level, d: i32) -> Formula {
    source(t, d, &|s| atom("Last", s, &[], &[]))
}

/// Target levels with the rule variable for the magnitude.
fn targets() -> [(Level, Option<&'static str>); 3] {
    [
        (Level::Zero, None),
        (Level::Pos(var("l")), Some("l")),
        (Level::Neg(var("l")), Some("l")),
    ]
}

fn family_name(fam: &str, t: &Level) -> String {
    let [z, p, m] = level_names(fam);
    match t {
        Level::Zero => z,
        Level::Pos(_) => p,
        _ => m,
    }
}

fn vars<'a>(pre: &[&'a str], l: Option<&'a str>, post: &[&'a str]) -> Vec<&'a str> {
    let mut v = pre.to_vec();
    v.extend(l);
    v.extend_from_slice(post);
    v
}

/// The level of a position is bounded by the position itself.
fn magnitude_guard(l: Option<&str>, bound: &[&Term]) -> Formula {
    match l {
        None => Formula::True,
        Some(l) => and(bound.iter().map(|b| le(var(l), (*b).clone())).collect()),
    }
}

pub fn dyck1_program() -> DynamicProgram {
    eliminate_init(&normalize_update_discipline(&dyck1_program_disciplined()))
}

/// [`dyck1_program`] before normalization and init elimination: correct
/// for sequences that insert only on empty positions and reset only
/// labeled ones.
pub fn dyck1_program_disciplined() -> DynamicProgram {
    let open = BracketAlphabet::open(1);
    let close = BracketAlphabet::close(1);
    let mut b = ProgramBuilder::word("dyck1", &[open.clone(), close.clone()]);
    b.builtins();
    for (fam, arity) in [("L", 4), ("F", 2), ("Min", 3), ("Max", 3), ("Fmax", 1), ("Last", 0)] {
        let [z, p, m] = level_names(fam);
        b.relation(&z, arity).relation(&p, arity + 1).relation(&m, arity + 1);
    }
    let (x, i, j, a, bb, k) = (var("y"), var("i"), var("j"), var("a"), var("b"), var("k"));
    let c = Ctx {
        x: x.clone(),
        i: i.clone(),
        j: j.clone(),
    };
    let ab_guard = and(vec![
        le(i.clone(), a.clone()),
        le(a.clone(), j.clone()),
        le(i.clone(), bb.clone()),
        le(bb.clone(), j.clone()),
    ]);
    let k_guard = and(vec![le(i.clone(), k.clone()), le(k.clone(), j.clone())]);
    for kind in b.kinds() {
        // the body for a level change `d` at the updated position
        let by_delta = |f: &dyn Fn(i32) -> Formula| -> Formula {
            match &kind {
                UpdateKind::Ins(s) if *s == open => f(1),
                UpdateKind::Ins(_) => f(-1),
                _ => ite_f(rel(&open, vec![x.clone()]), f(-1), f(1)),
            }
        };
        let mut accept = Vec::new();
        for (t, l) in targets() {
            b.update_rel(
                &kind,
                &family_name("L", &t),
                &vars(&["i", "j"], l, &["a", "b"]),
                and(vec![
                    ab_guard.clone(),
                    magnitude_guard(l, &[&j, &a, &bb]),
                    by_delta(&|d| l_body(&c, &t, d, &a, &bb)),
                ]),
            );
            b.update_rel(
                &kind,
                &family_name("F", &t),
                &vars(&["i", "j"], l, &[]),
                and(vec![le(i.clone(), j.clone()), magnitude_guard(l, &[&j]), by_delta(&|d| f_body(&c, &t, d))]),
            );
            for (fam, is_min) in [("Min", true), ("Max", false)] {
                b.update_rel(
                    &kind,
                    &family_name(fam, &t),
                    &vars(&["i", "j"], l, &["k"]),
                    and(vec![
                        k_guard.clone(),
                        magnitude_guard(l, &[&j, &k]),
                        by_delta(&|d| minmax_body(&c, &t, d, &k, is_min)),
                    ]),
                );
            }
            b.update_rel(
                &kind,
                &family_name("Fmax", &t),
                &vars(&["i"], l, &[]),
                by_delta(&|d| fmax_body(&x, &i, &t, d)),
            );
            let last = by_delta(&|d| last_body(&t, d));
            b.update_rel(&kind, &family_name("Last", &t), &vars(&[], l, &[]), last.clone());
            match t {
                Level::Zero => accept.push(last),
                Level::Neg(_) => {
                    let fm = by_delta(&|d| fmax_body(&x, &i, &t, d));
                    let mut m = std::collections::HashMap::new();
                    m.insert("i".to_string(), one());
                    m.insert("l".to_string(), one());
                    accept.push(not(subst_formula(&fm, &m)));
                }
                _ => {}
            }
        }
        b.update_rel(&kind, ACCEPT, &[], and(accept));
    }
    // initially every position has level 0
    b.init_rel(
        "L0",
        &["i", "j", "a", "b"],
        and(vec![
            ab_guard.clone(),
            or(vec![
                and(vec![lt(a.clone(), j.clone()), eq(bb.clone(), succ(a.clone()))]),
                and(vec![eq(a.clone(), j.clone()), eq(bb.clone(), i.clone())]),
            ]),
        ]),
    );
    b.init_rel("F0", &["i", "j"], le(i.clone(), j.clone()));
    b.init_rel("Min0", &["i", "j", "k"], and(vec![k_guard.clone(), eq(k.clone(), i.clone())]));
    b.init_rel("Max0", &["i", "j", "k"], and(vec![k_guard, eq(k, j)]));
    b.init_rel("Fmax0", &["i"], Formula::True);
    b.init_rel("Last0", &[], Formula::True);
    b.init_rel(ACCEPT, &[], Formula::True);
    b.build().expect("dyck1 program is well formed")
}
