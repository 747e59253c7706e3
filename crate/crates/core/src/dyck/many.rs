// SPDX-License-Identifier: Apache-2.0

//! Any number of bracket kinds, with auxiliary functions and no built-in
//! arithmetic.
//!
//! Numbers live on the chain of touched positions: the element of rank `r`
//! stands for `r`, and `0` is carried by separate flags. For positions
//! `u < w` let `D(u,w)` be the number of closing minus opening brackets in
//! `(u,w]` and `E(w,u)` the number of opening minus closing brackets in
//! `[w,u)`. The program keeps
//!
//! * `fr(u,m)`: the first `w > u` with `D(u,w) = m`, defined iff `Vfr(u,m)`;
//! * `fl(u,m)`: the last `w < u` with `E(w,u) = m`, defined iff `Vfl(u,m)`;
//! * `gr(u,v)`: the largest `D(u,w)` for `u < w < v`, or `0` (`Zgr(u,v)`);
//! * `gl(u,v)`: the largest `E(w,u)` for `v < w < u`, or `0` (`Zgl(u,v)`);
//! * `B_ab(x1,x2,y1,y2)` for `x1 ≤ y1 ≤ y2 ≤ x2`: the word on `x1..y1`
//!   followed by the word on `y2..x2` is balanced. `y1` and `y2` are always
//!   excluded; `x1` is included iff `a` is `c`, `x2` iff `b` is `c`.
//!
//! Every formula is written once for the left part of a `B` tuple and
//! mirrored (reverse the order, swap opening and closing brackets) for the
//! right part.

use crate::counting::{Chain, SuccBlock};
use crate::formula::ast::*;
use crate::formula::program::{DynamicProgram, ProgramBuilder, UpdateKind, ACCEPT};
use crate::formula::transform::{eliminate_init, normalize_update_discipline};

use super::BracketAlphabet;

/// Symbol names of the program.
#[derive(Clone, Debug)]
pub struct DycknNames {
    pub vfr: String,
    pub vfl: String,
    pub zgr: String,
    pub zgl: String,
    pub fr: String,
    pub fl: String,
    pub gr: String,
    pub gl: String,
    pub first: String,
    pub last: String,
    pub chain: SuccBlock,
}

impl Default for DycknNames {
    fn default() -> Self {
        DycknNames {
            vfr: "Vfr".into(),
            vfl: "Vfl".into(),
            zgr: "Zgr".into(),
            zgl: "Zgl".into(),
            fr: "fr".into(),
            fl: "fl".into(),
            gr: "gr".into(),
            gl: "gl".into(),
            first: "first".into(),
            last: "last".into(),
            chain: SuccBlock::default(),
        }
    }
}

impl DycknNames {
    /// Name of the `B` relation; `true` marks a closed outer end.
    pub fn balance(left_closed: bool, right_closed: bool) -> String {
        let c = |b: bool| if b { 'c' } else { 'o' };
        format!("B{}{}", c(left_closed), c(right_closed))
    }
}

/// A number: `0` when `zero` holds, otherwise the rank of `val`.
#[derive(Clone)]
struct Num {
    zero: Formula,
    val: Term,
}

/// A position that exists iff `ok` holds.
#[derive(Clone)]
struct Opt {
    ok: Formula,
    val: Term,
}

fn sel(c: Formula, a: Opt, b: Opt) -> Opt {
    Opt {
        ok: ite_f(c.clone(), a.ok, b.ok),
        val: ite(c, a.val, b.val),
    }
}

fn sel_num(c: Formula, a: Num, b: Num) -> Num {
    Num {
        zero: ite_f(c.clone(), a.zero, b.zero),
        val: ite(c, a.val, b.val),
    }
}

/// How an update moves `D(u,w)` for `w` at or after the updated position,
/// seen from one direction.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Effect {
    /// An opening bracket appears or a closing one disappears.
    Down,
    /// A closing bracket appears.
    Up,
    /// An opening bracket disappears.
    UpReset,
}

/// Update at the position `z`, relative to a direction.
#[derive(Clone, Copy)]
enum Change {
    Opener(usize),
    Closer(usize),
    Reset,
}

impl Change {
    fn flip(self) -> Change {
        match self {
            Change::Opener(l) => Change::Closer(l),
            Change::Closer(l) => Change::Opener(l),
            Change::Reset => Change::Reset,
        }
    }
}

/// Formula construction in one direction.
#[derive(Clone)]
struct Dir<'a> {
    names: &'a DycknNames,
    kinds: usize,
    z: Term,
    mirror: bool,
}

impl<'a> Dir<'a> {
    fn flip(&self) -> Dir<'a> {
        Dir {
            mirror: !self.mirror,
            ..self.clone()
        }
    }

    fn lt(&self, a: Term, b: Term) -> Formula {
        if self.mirror {
            lt(b, a)
        } else {
            lt(a, b)
        }
    }

    fn le(&self, a: Term, b: Term) -> Formula {
        if self.mirror {
            le(b, a)
        } else {
            le(a, b)
        }
    }

    fn chain(&self) -> impl Chain + 'a {
        self.names.chain.updated()
    }

    fn one(&self) -> Num {
        Num {
            zero: Formula::False,
            val: self.chain().min(),
        }
    }

    /// `m + 1` and whether it is still on the chain.
    fn inc(&self, m: &Num) -> (Formula, Num) {
        let ch = self.chain();
        let ok = or(vec![m.zero.clone(), neq(m.val.clone(), self.names.chain.new_max())]);
        let val = ite(m.zero.clone(), ch.min(), ch.succ(m.val.clone()));
        (ok, Num { zero: Formula::False, val })
    }

    /// `m - 1` for `m ≥ 1`.
    fn dec(&self, m: &Term) -> Num {
        let ch = self.chain();
        Num {
            zero: eq(m.clone(), ch.min()),
            val: ch.pre(m.clone()),
        }
    }

    fn fr_names(&self) -> (&'a str, &'a str) {
        let n = self.names;
        if self.mirror {
            (&n.vfl, &n.fl)
        } else {
            (&n.vfr, &n.fr)
        }
    }

    fn gr_names(&self) -> (&'a str, &'a str) {
        let n = self.names;
        if self.mirror {
            (&n.zgl, &n.gl)
        } else {
            (&n.zgr, &n.gr)
        }
    }

    fn gl_names(&self) -> (&'a str, &'a str) {
        self.flip().gr_names()
    }

    /// Old `fr(u,m)` for `m ≥ 1`.
    fn fr(&self, u: Term, m: Term) -> Opt {
        let (v, f) = self.fr_names();
        Opt {
            ok: rel(v, vec![u.clone(), m.clone()]),
            val: app(f, vec![u, m]),
        }
    }

    fn fl(&self, u: Term, m: Term) -> Opt {
        self.flip().fr(u, m)
    }

    fn gr(&self, u: Term, v: Term) -> Num {
        let (zn, f) = self.gr_names();
        Num {
            zero: rel(zn, vec![u.clone(), v.clone()]),
            val: app(f, vec![u, v]),
        }
    }

    fn gl(&self, u: Term, v: Term) -> Num {
        let (zn, f) = self.gl_names();
        Num {
            zero: rel(zn, vec![u.clone(), v.clone()]),
            val: app(f, vec![u, v]),
        }
    }

    /// `B` with outer ends `x1`, `x2` and hole ends `y1`, `y2` in this
    /// direction's order.
    fn b(&self, c1: bool, c4: bool, x1: Term, x2: Term, y1: Term, y2: Term) -> Formula {
        if self.mirror {
            rel(&DycknNames::balance(c4, c1), vec![x2, x1, y2, y1])
        } else {
            rel(&DycknNames::balance(c1, c4), vec![x1, x2, y1, y2])
        }
    }

    fn bal(&self, a: Term, b: Term) -> Formula {
        self.b(false, false, a, b.clone(), b.clone(), b)
    }

    /// A bracket of kind `l` at `p` that opens in this direction.
    fn opener(&self, l: usize, p: Term) -> Formula {
        let s = if self.mirror { BracketAlphabet::close(l) } else { BracketAlphabet::open(l) };
        rel(&s, vec![p])
    }

    fn closer(&self, l: usize, p: Term) -> Formula {
        self.flip().opener(l, p)
    }

    /// `z` holds a bracket that opens in this direction.
    fn opener_at_z(&self) -> Formula {
        or((1..=self.kinds).map(|l| self.opener(l, self.z.clone())).collect())
    }

    fn effect(&self, change: Change) -> Effect {
        match change {
            Change::Opener(_) => Effect::Down,
            Change::Closer(_) => Effect::Up,
            Change::Reset => unreachable!("resets split on the old symbol"),
        }
    }
}

/// The current `B` tuple as seen from one direction: the left part runs
/// from `x1` to `y1`, the right part from `y2` to `x2`.
struct Tuple {
    c1: bool,
    c4: bool,
    x1: Term,
    x2: Term,
    y1: Term,
    y2: Term,
}

impl Tuple {
    fn mirrored(&self) -> Tuple {
        Tuple {
            c1: self.c4,
            c4: self.c1,
            x1: self.x2.clone(),
            x2: self.x1.clone(),
            y1: self.y2.clone(),
            y2: self.y1.clone(),
        }
    }

    fn in_left(&self, d: &Dir, p: Term) -> Formula {
        let lo = if self.c1 { d.le(self.x1.clone(), p.clone()) } else { d.lt(self.x1.clone(), p.clone()) };
        and(vec![lo, d.lt(p, self.y1.clone())])
    }

    fn in_right(&self, d: &Dir, p: Term) -> Formula {
        let hi = if self.c4 { d.le(p.clone(), self.x2.clone()) } else { d.lt(p.clone(), self.x2.clone()) };
        and(vec![d.lt(self.y2.clone(), p), hi])
    }

    fn outer(&self, d: &Dir, y1: Term, y2: Term) -> Formula {
        d.b(self.c1, self.c4, self.x1.clone(), self.x2.clone(), y1, y2)
    }
}

/// New `B` for the tuple when `z` lies in its left part: the balanced
/// factor from `i0` to `j0` (inclusive) has been removed.
fn remove(d: &Dir, t: &Tuple, i0: Term, j0: Term) -> Formula {
    let m = d.gr(j0.clone(), t.y1.clone());
    let closed = {
        let i1 = d.fl(i0.clone(), m.val.clone());
        let j1 = d.fr(j0.clone(), m.val.clone());
        and(vec![
            i1.ok,
            t.in_left(d, i1.val.clone()),
            d.b(true, true, i1.val.clone(), j1.val.clone(), i0.clone(), j0.clone()),
            remove_rest(d, t, i1.val, j1.val),
        ])
    };
    ite_f(m.zero, remove_rest(d, t, i0, j0), closed)
}

/// The part of the left word after `j1` has no unmatched closing bracket.
fn remove_rest(d: &Dir, t: &Tuple, i1: Term, j1: Term) -> Formula {
    let m = d.gl(t.y1.clone(), j1.clone());
    let none = and(vec![
        d.b(false, true, j1.clone(), t.y2.clone(), t.y1.clone(), t.y2.clone()),
        t.outer(d, i1.clone(), t.y2.clone()),
    ]);
    let j2 = d.fr(t.y2.clone(), m.val);
    let some = and(vec![
        j2.ok,
        t.in_right(d, j2.val.clone()),
        d.b(false, true, j1, j2.val.clone(), t.y1.clone(), t.y2.clone()),
        t.outer(d, i1, j2.val),
    ]);
    ite_f(m.zero, none, some)
}

fn left_case(d: &Dir, t: &Tuple, change: Change) -> Formula {
    let z = d.z.clone();
    match change {
        Change::Reset => remove(d, t, z.clone(), z),
        Change::Closer(l) => {
            let i0 = d.fl(z.clone(), d.one().val);
            and(vec![
                i0.ok,
                t.in_left(d, i0.val.clone()),
                d.opener(l, i0.val.clone()),
                d.bal(i0.val.clone(), z.clone()),
                remove(d, t, i0.val, z),
            ])
        }
        Change::Opener(l) => {
            let j0 = d.fr(z.clone(), d.one().val);
            let inside = and(vec![j0.ok.clone(), d.lt(j0.val.clone(), t.y1.clone())]);
            let matched_left = and(vec![
                d.closer(l, j0.val.clone()),
                d.bal(z.clone(), j0.val.clone()),
                remove(d, t, z.clone(), j0.val),
            ]);
            let m = d.gl(t.y1.clone(), z.clone());
            let (ok, m1) = d.inc(&m);
            let j = d.fr(t.y2.clone(), m1.val);
            let matched_right = and(vec![
                ok,
                j.ok,
                t.in_right(d, j.val.clone()),
                d.closer(l, j.val.clone()),
                d.b(false, false, z.clone(), j.val.clone(), t.y1.clone(), t.y2.clone()),
                t.outer(d, z, j.val),
            ]);
            ite_f(inside, matched_left, matched_right)
        }
    }
}

fn balance_update(d: &Dir, t: &Tuple, change: Change) -> Formula {
    let z = d.z.clone();
    let m = d.flip();
    let mt = t.mirrored();
    let guard = and(vec![
        le(t.x1.clone(), t.y1.clone()),
        le(t.y1.clone(), t.y2.clone()),
        le(t.y2.clone(), t.x2.clone()),
    ]);
    and(vec![
        guard,
        ite_f(
            t.in_left(d, z.clone()),
            left_case(d, t, change),
            ite_f(
                t.in_right(d, z),
                left_case(&m, &mt, change.flip()),
                d.b(t.c1, t.c4, t.x1.clone(), t.x2.clone(), t.y1.clone(), t.y2.clone()),
            ),
        ),
    ])
}

/// New `fr(x,m)` (in direction `d`) after an update with the given effect.
fn fr_update(d: &Dir, x: Term, m: Term, effect: Effect) -> Opt {
    let z = d.z.clone();
    let old = d.fr(x.clone(), m.clone());
    let before_z = and(vec![old.ok.clone(), d.lt(old.val.clone(), z.clone())]);
    let changed = match effect {
        Effect::Down => {
            let (ok, m1) = d.inc(&Num { zero: Formula::False, val: m.clone() });
            let next = d.fr(x.clone(), m1.val);
            sel(before_z, old.clone(), Opt { ok: and(vec![ok, next.ok]), val: next.val })
        }
        Effect::Up | Effect::UpReset => {
            let is_one = eq(m.clone(), d.one().val);
            let prev = d.fr(x.clone(), d.chain().pre(m.clone()));
            let y = sel(is_one.clone(), Opt { ok: Formula::True, val: x.clone() }, prev);
            let gap = d.gl(z.clone(), y.val.clone());
            let from_z = if effect == Effect::Up {
                sel(gap.zero.clone(), Opt { ok: Formula::True, val: z.clone() }, d.fr(z.clone(), gap.val))
            } else {
                let (ok, g1) = d.inc(&gap);
                let f = d.fr(z.clone(), g1.val);
                Opt { ok: and(vec![ok, f.ok]), val: f.val }
            };
            let after = and(vec![not(is_one), y.ok.clone(), d.lt(z.clone(), y.val.clone())]);
            sel(
                after,
                Opt { ok: Formula::True, val: y.val },
                sel(before_z, old.clone(), Opt { ok: and(vec![y.ok, from_z.ok]), val: from_z.val }),
            )
        }
    };
    let r = sel(d.le(z, x), old, changed);
    Opt {
        ok: and(vec![d.names.chain.new_actdom(m), r.ok]),
        val: r.val,
    }
}

/// New `gr(x,y)` (in direction `d`) after an update with the given effect.
fn gr_update(d: &Dir, x: Term, y: Term, effect: Effect) -> Num {
    let z = d.z.clone();
    let m = d.gr(x.clone(), y.clone());
    let v = ite(m.zero.clone(), x.clone(), d.fr(x.clone(), m.val.clone()).val);
    let (_, up) = d.inc(&m);
    let changed = match effect {
        Effect::Down => sel_num(
            or(vec![m.zero.clone(), d.lt(v.clone(), z.clone())]),
            m.clone(),
            d.dec(&m.val),
        ),
        Effect::Up | Effect::UpReset => {
            let late = and(vec![not(m.zero.clone()), d.lt(z.clone(), v.clone())]);
            let gap = d.gl(z.clone(), v);
            let reaches = if effect == Effect::Up {
                let f = d.fr(z.clone(), gap.val.clone());
                or(vec![gap.zero, and(vec![f.ok, d.lt(f.val, y.clone())])])
            } else {
                let (ok, g1) = d.inc(&gap);
                let f = d.fr(z.clone(), g1.val);
                and(vec![ok, f.ok, d.lt(f.val, y.clone())])
            };
            sel_num(or(vec![late, reaches]), up, m.clone())
        }
    };
    let inside = and(vec![d.lt(x, z.clone()), d.lt(z, y)]);
    sel_num(inside, changed, m)
}

/// Program for the Dyck language over `kinds` bracket kinds. Its updates
/// use auxiliary functions but neither quantifiers nor built-in arithmetic.
pub fn dyckn_program(kinds: usize) -> DynamicProgram {
    eliminate_init(&normalize_update_discipline(&dyckn_program_disciplined(kinds)))
}

/// [`dyckn_program`] before normalization and init elimination.
pub fn dyckn_program_disciplined(kinds: usize) -> DynamicProgram {
    let alphabet = BracketAlphabet::new(kinds);
    let names = DycknNames::default();
    let mut b = ProgramBuilder::word(&format!("dyck{kinds}"), &alphabet.symbols());
    names.chain.declare(&mut b);
    for c1 in [true, false] {
        for c4 in [true, false] {
            b.relation(&DycknNames::balance(c1, c4), 4);
        }
    }
    for r in [&names.vfr, &names.vfl, &names.zgr, &names.zgl] {
        b.relation(r, 2);
    }
    for f in [&names.fr, &names.fl, &names.gr, &names.gl] {
        b.function(f, 2);
    }
    b.function(&names.first, 0).function(&names.last, 0);

    let z = names.chain.z.clone();
    let fwd = Dir {
        names: &names,
        kinds,
        z: z.clone(),
        mirror: false,
    };
    let (x1, x2, y1, y2) = (var("x1"), var("x2"), var("y1"), var("y2"));
    let (x, m) = (var("x"), var("m"));
    for kind in b.kinds() {
        let change = match &kind {
            UpdateKind::Ins(s) => match BracketAlphabet::parse(s) {
                Some((l, true)) => Change::Opener(l),
                Some((l, false)) => Change::Closer(l),
                None => unreachable!("bracket alphabet"),
            },
            _ => Change::Reset,
        };
        // effect on fr/gr in direction `d`; resets split on the old symbol
        let by_effect = |d: &Dir, f: &dyn Fn(Effect) -> Formula| -> Formula {
            match change {
                Change::Reset => ite_f(d.opener_at_z(), f(Effect::UpReset), f(Effect::Down)),
                c => f(d.effect(if d.mirror { c.flip() } else { c })),
            }
        };
        let by_effect_t = |d: &Dir, f: &dyn Fn(Effect) -> Term| -> Term {
            match change {
                Change::Reset => ite(d.opener_at_z(), f(Effect::UpReset), f(Effect::Down)),
                c => f(d.effect(if d.mirror { c.flip() } else { c })),
            }
        };

        for c1 in [true, false] {
            for c4 in [true, false] {
                let t = Tuple {
                    c1,
                    c4,
                    x1: x1.clone(),
                    x2: x2.clone(),
                    y1: y1.clone(),
                    y2: y2.clone(),
                };
                b.update_rel(
                    &kind,
                    &DycknNames::balance(c1, c4),
                    &["x1", "x2", "y1", "y2"],
                    balance_update(&fwd, &t, change),
                );
            }
        }
        for d in [fwd.clone(), fwd.flip()] {
            let (vn, fname) = d.fr_names();
            b.update_rel(&kind, vn, &["x", "m"], by_effect(&d, &|e| fr_update(&d, x.clone(), m.clone(), e).ok));
            b.update_fun(&kind, fname, &["x", "m"], by_effect_t(&d, &|e| fr_update(&d, x.clone(), m.clone(), e).val));
            let (zn, gname) = d.gr_names();
            b.update_rel(&kind, zn, &["x", "m"], by_effect(&d, &|e| gr_update(&d, x.clone(), m.clone(), e).zero));
            b.update_fun(&kind, gname, &["x", "m"], by_effect_t(&d, &|e| gr_update(&d, x.clone(), m.clone(), e).val));
        }

        let any = names.chain.old_any();
        let (first, last) = (constant(&names.first), constant(&names.last));
        let lo = ite(any.clone(), ite(lt(z.clone(), first.clone()), z.clone(), first), z.clone());
        let hi = ite(any, ite(lt(last.clone(), z.clone()), z.clone(), last), z.clone());
        b.update_fun(&kind, &names.first, &[], lo.clone());
        b.update_fun(&kind, &names.last, &[], hi.clone());
        let whole = |i: Term, j: Term| fwd.b(true, true, lo.clone(), hi.clone(), i, j);
        let accept = match change {
            Change::Reset => whole(z.clone(), z.clone()),
            Change::Opener(l) => {
                let j0 = fwd.fr(z.clone(), fwd.one().val);
                and(vec![
                    j0.ok,
                    fwd.closer(l, j0.val.clone()),
                    fwd.bal(z.clone(), j0.val.clone()),
                    whole(z.clone(), j0.val),
                ])
            }
            Change::Closer(l) => {
                let i0 = fwd.fl(z.clone(), fwd.one().val);
                and(vec![
                    i0.ok,
                    fwd.opener(l, i0.val.clone()),
                    fwd.bal(i0.val.clone(), z.clone()),
                    whole(i0.val, z.clone()),
                ])
            }
        };
        b.update_rel(&kind, ACCEPT, &[], accept);
        names.chain.add_updates(&mut b, &kind);
    }

    for c1 in [true, false] {
        for c4 in [true, false] {
            b.init_rel(
                &DycknNames::balance(c1, c4),
                &["x1", "x2", "y1", "y2"],
                and(vec![le(x1.clone(), y1.clone()), le(y1.clone(), y2.clone()), le(y2.clone(), x2.clone())]),
            );
        }
    }
    b.init_rel(&names.zgr, &["x", "m"], Formula::True);
    b.init_rel(&names.zgl, &["x", "m"], Formula::True);
    b.init_rel(ACCEPT, &[], Formula::True);
    b.build().expect("Dyck program is well formed")
}
