// SPDX-License-Identifier: Apache-2.0

//! Programs for `Eq_r`, the words over `a1..ar` with equal letter counts,
//! using unary counters; plus the on-the-fly successor block.

use crate::formula::ast::*;
use crate::formula::program::{DynamicProgram, ProgramBuilder, UpdateKind, ACCEPT, MIN, PRE, SUCC};
use crate::formula::engine::ProgramState;
use crate::formula::transform::{eliminate_init, normalize_update_discipline};
use crate::structure::Elem;

pub fn letters(r: usize) -> Vec<String> {
    (1..=r).map(|i| format!("a{i}")).collect()
}

/// Count oracle: all letters occur equally often.
pub fn count_oracle<S: AsRef<str>>(w: &[S], r: usize) -> bool {
    let mut counts = vec![0usize; r];
    for s in w {
        let s = s.as_ref();
        match s.strip_prefix('a').and_then(|i| i.parse::<usize>().ok()) {
            Some(i) if (1..=r).contains(&i) => counts[i - 1] += 1,
            _ => return false,
        }
    }
    counts.windows(2).all(|c| c[0] == c[1])
}

/// A successor structure on the touched positions, in order of first
/// touch: `actdom` holds the touched positions, `cmin`/`cmax` the first and
/// last, `csucc`/`cpre` the chain with fixpoints at the ends. The flag
/// `any` records whether some position was touched.
#[derive(Clone, Debug)]
pub struct SuccBlock {
    pub actdom: String,
    pub any: String,
    pub min: String,
    pub max: String,
    pub succ: String,
    pub pre: String,
    /// The updated position.
    pub z: Term,
}

impl Default for SuccBlock {
    fn default() -> Self {
        SuccBlock {
            actdom: "actdom".into(),
            any: "any".into(),
            min: "cmin".into(),
            max: "cmax".into(),
            succ: "csucc".into(),
            pre: "cpre".into(),
            z: var("y"),
        }
    }
}

/// Arithmetic on a chain, as terms built from some position successor.
pub trait Chain {
    fn min(&self) -> Term;
    fn succ(&self, t: Term) -> Term;
    fn pre(&self, t: Term) -> Term;
}

/// The built-in successor on the universe order.
pub struct Builtin;

impl Chain for Builtin {
    fn min(&self) -> Term {
        constant(MIN)
    }
    fn succ(&self, t: Term) -> Term {
        app(SUCC, vec![t])
    }
    fn pre(&self, t: Term) -> Term {
        app(PRE, vec![t])
    }
}

impl SuccBlock {
    pub fn declare(&self, b: &mut ProgramBuilder) {
        b.relation(&self.actdom, 1).relation(&self.any, 0);
        b.function(&self.min, 0).function(&self.max, 0);
        b.function(&self.succ, 1).function(&self.pre, 1);
    }

    /// `z` was not touched before this update.
    pub fn fresh(&self) -> Formula {
        not(rel(&self.actdom, vec![self.z.clone()]))
    }

    pub fn old_any(&self) -> Formula {
        prop(&self.any)
    }

    pub fn old_actdom(&self, t: Term) -> Formula {
        rel(&self.actdom, vec![t])
    }

    pub fn new_actdom(&self, t: Term) -> Formula {
        or(vec![rel(&self.actdom, vec![t.clone()]), eq(t, self.z.clone())])
    }

    pub fn old_min(&self) -> Term {
        constant(&self.min)
    }

    pub fn old_max(&self) -> Term {
        constant(&self.max)
    }

    pub fn new_min(&self) -> Term {
        ite(prop(&self.any), constant(&self.min), self.z.clone())
    }

    pub fn new_max(&self) -> Term {
        ite(self.fresh(), self.z.clone(), constant(&self.max))
    }

    fn appended(&self) -> Formula {
        and(vec![self.fresh(), prop(&self.any)])
    }

    pub fn new_succ(&self, t: Term) -> Term {
        ite(
            and(vec![self.appended(), eq(t.clone(), constant(&self.max))]),
            self.z.clone(),
            app(&self.succ, vec![t]),
        )
    }

    pub fn new_pre(&self, t: Term) -> Term {
        ite(
            and(vec![self.appended(), eq(t.clone(), self.z.clone())]),
            constant(&self.max),
            app(&self.pre, vec![t]),
        )
    }

    pub fn old_succ(&self, t: Term) -> Term {
        app(&self.succ, vec![t])
    }

    pub fn old_pre(&self, t: Term) -> Term {
        app(&self.pre, vec![t])
    }

    /// The block's own update rules, identical for every kind of update.
    pub fn add_updates(&self, b: &mut ProgramBuilder, kind: &UpdateKind) {
        let x = var("x");
        b.update_rel(kind, &self.actdom, &["x"], self.new_actdom(x.clone()));
        b.update_rel(kind, &self.any, &[], Formula::True);
        b.update_fun(kind, &self.min, &[], self.new_min());
        b.update_fun(kind, &self.max, &[], self.new_max());
        b.update_fun(kind, &self.succ, &["x"], self.new_succ(x.clone()));
        b.update_fun(kind, &self.pre, &["x"], self.new_pre(x));
    }

    /// The chain after the current update.
    pub fn updated(&self) -> NewChain<'_> {
        NewChain(self)
    }
}

pub struct NewChain<'a>(&'a SuccBlock);

impl Chain for NewChain<'_> {
    fn min(&self) -> Term {
        self.0.new_min()
    }
    fn succ(&self, t: Term) -> Term {
        self.0.new_succ(t)
    }
    fn pre(&self, t: Term) -> Term {
        self.0.new_pre(t)
    }
}

/// Standalone program consisting of the successor block only (accept is
/// constantly false).
pub fn succ_builder_block() -> DynamicProgram {
    let block = SuccBlock::default();
    let mut b = ProgramBuilder::word("succ-block", &["a"]);
    block.declare(&mut b);
    for k in b.kinds() {
        block.add_updates(&mut b, &k);
        b.update_rel(&k, ACCEPT, &[], Formula::False);
    }
    b.build().expect("successor block is well formed")
}

pub fn flag_names(i: usize) -> (String, String, String) {
    (format!("A1_{i}"), format!("A2_{i}"), format!("C_{i}"))
}

/// New values of one counter block when the difference moves by `+1`
/// (`up`) or `-1`.
fn step(i: usize, up: bool, chain: &dyn Chain) -> (Formula, Formula, Formula) {
    let (a1, a2, c) = flag_names(i);
    let (grow, shrink) = if up { (prop(&a1), prop(&a2)) } else { (prop(&a2), prop(&a1)) };
    let x = var("x");
    let min = chain.min();
    let c_at = |t: Term| rel(&c, vec![t]);
    let grow_new = not(shrink.clone());
    let shrink_new = and(vec![shrink.clone(), not(c_at(min.clone()))]);
    let c_new = or(vec![
        and(vec![not(or(vec![grow.clone(), shrink.clone()])), eq(x.clone(), min.clone())]),
        and(vec![grow, c_at(chain.pre(x.clone())), neq(x.clone(), min)]),
        // succ is a fixpoint at the top of the chain; without the guard a
        // counter at the top would stay set while shrinking
        and(vec![shrink, c_at(chain.succ(x.clone())), neq(chain.succ(x.clone()), x)]),
    ]);
    if up {
        (grow_new, shrink_new, c_new)
    } else {
        (shrink_new, grow_new, c_new)
    }
}

fn unchanged(i: usize) -> (Formula, Formula, Formula) {
    let (a1, a2, c) = flag_names(i);
    (prop(&a1), prop(&a2), rel(&c, vec![var("x")]))
}

fn choose(c: Formula, a: (Formula, Formula, Formula), b: (Formula, Formula, Formula)) -> (Formula, Formula, Formula) {
    (ite_f(c.clone(), a.0, b.0), ite_f(c.clone(), a.1, b.1), ite_f(c, a.2, b.2))
}

fn counter_program(name: &str, r: usize, chain: &dyn Chain, block: Option<&SuccBlock>) -> DynamicProgram {
    assert!(r >= 2, "Eq_r needs at least two letters");
    let alphabet = letters(r);
    let mut b = ProgramBuilder::word(name, &alphabet);
    if block.is_none() {
        b.builtins();
    }
    if let Some(blk) = block {
        blk.declare(&mut b);
    }
    for i in 2..=r {
        let (a1, a2, c) = flag_names(i);
        b.relation(&a1, 0).relation(&a2, 0).relation(&c, 1);
    }
    let y = var("y");
    for kind in b.kinds() {
        let mut accept = Vec::new();
        for i in 2..=r {
            let (a1, a2, c) = flag_names(i);
            let new = match &kind {
                UpdateKind::Ins(s) if s == "a1" => step(i, true, chain),
                UpdateKind::Ins(s) if *s == alphabet[i - 1] => step(i, false, chain),
                UpdateKind::Reset => choose(
                    rel("a1", vec![y.clone()]),
                    step(i, false, chain),
                    choose(rel(&alphabet[i - 1], vec![y.clone()]), step(i, true, chain), unchanged(i)),
                ),
                _ => unchanged(i),
            };
            accept.push(not(new.0.clone()));
            accept.push(not(new.1.clone()));
            b.update_rel(&kind, &a1, &[], new.0);
            b.update_rel(&kind, &a2, &[], new.1);
            b.update_rel(&kind, &c, &["x"], new.2);
        }
        b.update_rel(&kind, ACCEPT, &[], and(accept));
        if let Some(blk) = block {
            blk.add_updates(&mut b, &kind);
        }
    }
    // a reset of an empty position copies accept, so it must start out
    // reflecting the empty word
    b.init_rel(ACCEPT, &[], Formula::True);
    b.build().expect("counter program is well formed")
}

/// `Eq_r` with `r-1` counters of `#a1 - #ai` over the built-in successor.
pub fn eqr_program_succ(r: usize) -> DynamicProgram {
    eliminate_init(&normalize_update_discipline(&eqr_program_succ_disciplined(r)))
}

/// [`eqr_program_succ`] before normalization and init elimination.
pub fn eqr_program_succ_disciplined(r: usize) -> DynamicProgram {
    counter_program("eqr-succ", r, &Builtin, None)
}

/// `Eq_r` with the counters running on the chain of touched positions. The
/// counter formulas read the chain as it is after the update.
pub fn eqr_program_qf(r: usize) -> DynamicProgram {
    eliminate_init(&normalize_update_discipline(&eqr_program_qf_disciplined(r)))
}

/// [`eqr_program_qf`] before normalization and init elimination.
pub fn eqr_program_qf_disciplined(r: usize) -> DynamicProgram {
    let block = SuccBlock::default();
    counter_program("eqr-qf", r, &block.updated(), Some(&block))
}

/// Counter blocks of a state: `A1_i` and `A2_i` never both hold, `C_i`
/// holds for at most one element, and for none exactly when both flags are
/// off.
pub fn counter_invariants(st: &ProgramState, r: usize) -> Result<(), String> {
    for i in 2..=r {
        let (a1, a2, c) = flag_names(i);
        let (f1, f2) = (st.holds(&a1, &[]), st.holds(&a2, &[]));
        if f1 && f2 {
            return Err(format!("{a1} and {a2} both hold"));
        }
        let cs = st.relation(&c).ok_or_else(|| format!("no relation {c}"))?.count();
        if cs > 1 {
            return Err(format!("{c} holds for {cs} elements"));
        }
        if (cs == 0) != (!f1 && !f2) {
            return Err(format!("{c} is empty iff the flags are off, violated"));
        }
    }
    Ok(())
}

/// The chain of a successor block: starts at `min`, follows `succ` without
/// repetition to `max`, `pre` inverts `succ`, both are fixpoints at the
/// ends, and the chain covers exactly `actdom`.
pub fn chain_invariants(st: &ProgramState, blk: &SuccBlock) -> Result<(), String> {
    let n = st.n() as Elem;
    let active: Vec<Elem> = (1..=n).filter(|&e| st.holds(&blk.actdom, &[e])).collect();
    if active.is_empty() {
        return Ok(());
    }
    let val = |f: &str, t: &[Elem]| st.value(f, t).ok_or_else(|| format!("no function {f}"));
    let (min, max) = (val(&blk.min, &[])?, val(&blk.max, &[])?);
    let mut seen = vec![min];
    let mut cur = min;
    while cur != max {
        let next = val(&blk.succ, &[cur])?;
        if val(&blk.pre, &[next])? != cur {
            return Err(format!("pre({next}) != {cur}"));
        }
        if seen.contains(&next) {
            return Err(format!("cycle at {next}"));
        }
        seen.push(next);
        cur = next;
    }
    if val(&blk.succ, &[max])? != max || val(&blk.pre, &[min])? != min {
        return Err("chain ends are not fixpoints".into());
    }
    seen.sort_unstable();
    if seen != active {
        return Err(format!("chain {seen:?} differs from actdom {active:?}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::engine::{run_program, Engine, ProgramState};
    use crate::formula::program::Tier;
    use crate::structure::{new_empty_structure, word_of, ConcreteUpdate, Elem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seq(rng: &mut ChaCha8Rng, r: usize, n: usize, len: usize) -> Vec<ConcreteUpdate> {
        (0..len)
            .map(|_| {
                let pos = rng.gen_range(1..=n) as Elem;
                if rng.gen_bool(0.3) {
                    ConcreteUpdate::Reset(pos)
                } else {
                    ConcreteUpdate::ins(format!("a{}", rng.gen_range(1..=r)), pos)
                }
            })
            .collect()
    }

    fn oracle(p: &DynamicProgram, r: usize, n: usize, seq: &[ConcreteUpdate]) -> Vec<bool> {
        let mut s = new_empty_structure(&p.input, n).unwrap();
        seq.iter()
            .map(|u| {
                s.apply(u).unwrap();
                count_oracle(word_of(&s).unwrap().symbols(), r)
            })
            .collect()
    }

    #[test]
    fn spec_examples() {
        let p = eqr_program_succ(2);
        let seq = [ConcreteUpdate::ins("a1", 2), ConcreteUpdate::ins("a2", 4)];
        assert_eq!(run_program(&p, 5, &seq).unwrap(), vec![false, true]);
        let seq = [ConcreteUpdate::ins("a1", 2), ConcreteUpdate::Reset(2)];
        assert_eq!(run_program(&p, 5, &seq).unwrap(), vec![false, true]);
        let seq = [ConcreteUpdate::ins("a1", 2), ConcreteUpdate::ins("a2", 2)];
        assert_eq!(run_program(&p, 5, &seq).unwrap(), vec![false, false]);
        let q = eqr_program_qf(3);
        let seq = [
            ConcreteUpdate::ins("a3", 5),
            ConcreteUpdate::ins("a1", 1),
            ConcreteUpdate::ins("a2", 3),
        ];
        assert_eq!(run_program(&q, 6, &seq).unwrap(), vec![false, false, true]);
    }

    #[test]
    fn tiers() {
        assert_eq!(eqr_program_succ(2).tier, Tier::PropSucc);
        assert_eq!(eqr_program_qf(2).tier, Tier::QF);
    }

    fn chain_ok(st: &ProgramState, blk: &SuccBlock) {
        chain_invariants(st, blk).unwrap();
    }

    #[test]
    fn succ_block_examples() {
        let p = succ_builder_block();
        let e = Engine::new(&p).unwrap();
        let blk = SuccBlock::default();
        let mut st = e.initial_state(8).unwrap();
        for pos in [5, 2, 7, 2] {
            e.apply(&mut st, &ConcreteUpdate::ins("a", pos)).unwrap();
            chain_ok(&st, &blk);
        }
        assert_eq!(st.value("cmin", &[]), Some(5));
        assert_eq!(st.value("cmax", &[]), Some(7));
        assert_eq!(st.value("csucc", &[5]), Some(2));
        assert_eq!(st.value("csucc", &[2]), Some(7));
        let mut st = e.initial_state(4).unwrap();
        e.apply(&mut st, &ConcreteUpdate::Reset(3)).unwrap();
        assert_eq!(st.value("cmin", &[]), Some(3));
        assert_eq!(st.value("csucc", &[3]), Some(3));
        assert_eq!(st.value("cpre", &[3]), Some(3));
    }

    /// Counter invariants and the chain shape after every step, and both
    /// programs against the oracle.
    #[test]
    fn random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for r in [2, 3] {
            let p = eqr_program_succ(r);
            let q = eqr_program_qf(r);
            let eq = Engine::new(&q).unwrap();
            for _ in 0..60 {
                let n = rng.gen_range(1..=8);
                let seq = random_seq(&mut rng, r, n, 25);
                let expect = oracle(&p, r, n, &seq);
                assert_eq!(run_program(&p, n, &seq).unwrap(), expect);
                let mut st = eq.initial_state(n).unwrap();
                let blk = SuccBlock::default();
                for (u, &want) in seq.iter().zip(&expect) {
                    eq.apply(&mut st, u).unwrap();
                    assert_eq!(st.accept(), want);
                    chain_ok(&st, &blk);
                    counter_invariants(&st, r).unwrap();
                }
            }
        }
    }
}
