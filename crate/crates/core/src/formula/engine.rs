// SPDX-License-Identifier: Apache-2.0

//! Evaluation of dynamic programs.
//!
//! Formulas are compiled into an index-based tree before evaluation.
//! Variables live in numbered slots, symbols are resolved to table
//! positions. Order constraints implied by a rule body (or by the body of
//! an existential quantifier) narrow the range that is enumerated; tuples
//! outside that range cannot satisfy the body and are left false.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::ast::{Formula, Term};
use super::program::{
    builtin_arity, DynamicProgram, ProgramError, Rule, UpdateKind, ACCEPT, MIN, PRE, SUCC,
};
use crate::structure::{
    new_empty_structure, ConcreteUpdate, Elem, FunTable, RelTable, Structure, StructureError,
};

const MAX_ARITY: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{name}` has arity {expected}, used with {got} arguments")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("program has no definitions for update {0}")]
    NoUpdate(String),
    #[error("no precomputed table for `{0}`")]
    MissingPrecomputed(String),
    #[error("precomputed table for `{0}` has the wrong shape")]
    BadPrecomputed(String),
    #[error("update evaluation exceeded {0} ms")]
    Timeout(u64),
    #[error("arity {0} exceeds the supported maximum")]
    TooWide(usize),
    #[error("state does not belong to this program")]
    ForeignState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RelLoc {
    Input(u16),
    State(u16),
}

/// Symbol layout of a program state.
#[derive(Debug, PartialEq, Eq)]
pub struct Signature {
    rels: HashMap<String, (RelLoc, usize)>,
    funs: HashMap<String, (u16, usize)>,
    state_rels: Vec<(String, usize)>,
    state_funs: Vec<(String, usize)>,
    aux_rels: usize,
    aux_funs: usize,
    accept: u16,
}

impl Signature {
    fn from_program(p: &DynamicProgram) -> Result<Self, EngineError> {
        let mut rels = HashMap::new();
        for (i, s) in p.input.symbols().iter().enumerate() {
            rels.insert(s.name.clone(), (RelLoc::Input(i as u16), s.arity));
        }
        let mut state_rels = Vec::new();
        for s in p.schema.relations.iter().chain(&p.schema.pre_relations) {
            if s.arity > MAX_ARITY {
                return Err(EngineError::TooWide(s.arity));
            }
            rels.insert(
                s.name.clone(),
                (RelLoc::State(state_rels.len() as u16), s.arity),
            );
            state_rels.push((s.name.clone(), s.arity));
        }
        let mut funs = HashMap::new();
        let mut state_funs = Vec::new();
        let builtins: Vec<(String, usize)> = if p.schema.builtins {
            [SUCC, PRE, MIN]
                .iter()
                .map(|b| (b.to_string(), builtin_arity(b).unwrap()))
                .collect()
        } else {
            Vec::new()
        };
        for (name, arity) in p
            .schema
            .functions
            .iter()
            .chain(&p.schema.pre_functions)
            .map(|s| (s.name.clone(), s.arity))
            .chain(builtins)
        {
            if arity > MAX_ARITY {
                return Err(EngineError::TooWide(arity));
            }
            funs.insert(name.clone(), (state_funs.len() as u16, arity));
            state_funs.push((name, arity));
        }
        let accept = match rels.get(ACCEPT) {
            Some((RelLoc::State(i), 0)) => *i,
            _ => return Err(ProgramError::NoAccept.into()),
        };
        Ok(Signature {
            rels,
            funs,
            state_rels,
            state_funs,
            aux_rels: p.schema.relations.len(),
            aux_funs: p.schema.functions.len(),
            accept,
        })
    }
}

/// Input structure plus all auxiliary, precomputed and built-in tables.
#[derive(Clone, Debug)]
pub struct ProgramState {
    n: usize,
    input: Structure,
    sig: Arc<Signature>,
    rels: Vec<RelTable>,
    funs: Vec<FunTable>,
}

impl ProgramState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn input(&self) -> &Structure {
        &self.input
    }

    pub fn accept(&self) -> bool {
        self.rels[self.sig.accept as usize].get_raw(0)
    }

    /// A relation of the state: input, auxiliary or precomputed.
    pub fn relation(&self, name: &str) -> Option<&RelTable> {
        match self.sig.rels.get(name)? {
            (RelLoc::Input(i), _) => Some(self.input.table(*i as usize)),
            (RelLoc::State(i), _) => Some(&self.rels[*i as usize]),
        }
    }

    pub fn function(&self, name: &str) -> Option<&FunTable> {
        self.sig.funs.get(name).map(|(i, _)| &self.funs[*i as usize])
    }

    pub fn holds(&self, name: &str, tuple: &[Elem]) -> bool {
        self.relation(name).is_some_and(|t| t.get(tuple))
    }

    pub fn value(&self, name: &str, tuple: &[Elem]) -> Option<Elem> {
        self.function(name).map(|t| t.get(tuple))
    }

    /// Overwrite an auxiliary or precomputed relation (used by diagnostics).
    pub fn set_relation(&mut self, name: &str, table: RelTable) -> Result<(), EngineError> {
        match self.sig.rels.get(name) {
            Some((RelLoc::State(i), a)) if *a == table.arity() && table.universe() == self.n => {
                self.rels[*i as usize] = table;
                Ok(())
            }
            Some(_) => Err(EngineError::BadPrecomputed(name.to_string())),
            None => Err(EngineError::UnknownSymbol(name.to_string())),
        }
    }

    /// Names and arities of all non-input relations.
    pub fn relation_symbols(&self) -> Vec<(String, usize)> {
        self.sig.state_rels.clone()
    }

    pub fn function_symbols(&self) -> Vec<(String, usize)> {
        self.sig.state_funs.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum CT {
    Var(u16),
    Fun(u16, Box<[CT]>),
    Ite(Box<CF>, Box<CT>, Box<CT>),
    /// Shared node of the rule's arena, with its innermost free slot
    /// (`NO_DEP` if closed).
    Ref(u32, u16),
}

const NO_DEP: u16 = u16::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Bound {
    slot: u16,
    strict: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Quant {
    slot: u16,
    lower: Vec<Bound>,
    upper: Vec<Bound>,
    body: Box<CF>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum CF {
    True,
    False,
    In(u16, Box<[CT]>),
    St(u16, Box<[CT]>),
    Eq(CT, CT),
    Lt(CT, CT),
    Not(Box<CF>),
    And(Box<[CF]>),
    Or(Box<[CF]>),
    Exists(Quant),
    Forall(u16, Box<CF>),
    Ref(u32, u16),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    T(CT),
    F(CF),
}

/// Variable slots plus the cache of shared nodes. A cached value is reused
/// while its innermost free slot has not been reassigned.
struct Frame {
    env: Vec<Elem>,
    stamp: Vec<u64>,
    clock: u64,
    val: Vec<Elem>,
    time: Vec<u64>,
}

impl Frame {
    fn new(slots: usize, nodes: usize, params: &[Elem]) -> Self {
        let slots = slots.max(params.len()).max(1);
        let mut env = vec![0 as Elem; slots];
        env[..params.len()].copy_from_slice(params);
        Frame {
            env,
            stamp: vec![1; slots],
            clock: 1,
            val: vec![0; nodes],
            time: vec![0; nodes],
        }
    }

    #[inline]
    fn set(&mut self, slot: usize, v: Elem) {
        self.env[slot] = v;
        self.clock += 1;
        self.stamp[slot] = self.clock;
    }

    #[inline]
    fn cached(&self, id: usize, dep: u16) -> Option<Elem> {
        let t0 = self.time[id];
        (t0 != 0 && (dep == NO_DEP || self.stamp[dep as usize] <= t0)).then(|| self.val[id])
    }

    #[inline]
    fn store(&mut self, id: usize, v: Elem) {
        self.val[id] = v;
        self.time[id] = self.clock;
    }
}

struct Ctx<'a> {
    n: usize,
    input: &'a Structure,
    rels: &'a [RelTable],
    funs: &'a [FunTable],
    nodes: &'a [Node],
}

impl Ctx<'_> {
    #[inline]
    fn index(&self, args: &[CT], env: &mut Frame) -> usize {
        let mut idx = 0usize;
        for a in args {
            idx = idx * self.n + (self.term(a, env) as usize - 1);
        }
        idx
    }

    fn term(&self, t: &CT, env: &mut Frame) -> Elem {
        match t {
            CT::Var(s) => env.env[*s as usize],
            CT::Fun(f, args) => {
                let idx = self.index(args, env);
                self.funs[*f as usize].get_raw(idx)
            }
            CT::Ite(c, a, b) => {
                if self.formula(c, env) {
                    self.term(a, env)
                } else {
                    self.term(b, env)
                }
            }
            CT::Ref(id, dep) => {
                let id = *id as usize;
                if let Some(v) = env.cached(id, *dep) {
                    return v;
                }
                let Node::T(inner) = &self.nodes[id] else { unreachable!() };
                let v = self.term(inner, env);
                env.store(id, v);
                v
            }
        }
    }

    fn formula(&self, f: &CF, env: &mut Frame) -> bool {
        match f {
            CF::True => true,
            CF::False => false,
            CF::In(r, args) => {
                let idx = self.index(args, env);
                self.input.table(*r as usize).get_raw(idx)
            }
            CF::St(r, args) => {
                let idx = self.index(args, env);
                self.rels[*r as usize].get_raw(idx)
            }
            CF::Eq(a, b) => self.term(a, env) == self.term(b, env),
            CF::Lt(a, b) => self.term(a, env) < self.term(b, env),
            CF::Not(g) => !self.formula(g, env),
            CF::And(gs) => gs.iter().all(|g| self.formula(g, env)),
            CF::Or(gs) => gs.iter().any(|g| self.formula(g, env)),
            CF::Exists(q) => {
                let (lo, hi) = bounds(&q.lower, &q.upper, &env.env, self.n);
                (lo..=hi).any(|v| {
                    env.set(q.slot as usize, v);
                    self.formula(&q.body, env)
                })
            }
            CF::Forall(slot, body) => (1..=self.n as Elem).all(|v| {
                env.set(*slot as usize, v);
                self.formula(body, env)
            }),
            CF::Ref(id, dep) => {
                let id = *id as usize;
                if let Some(v) = env.cached(id, *dep) {
                    return v != 0;
                }
                let Node::F(inner) = &self.nodes[id] else { unreachable!() };
                let v = self.formula(inner, env);
                env.store(id, v as Elem);
                v
            }
        }
    }
}

#[inline]
fn bounds(lower: &[Bound], upper: &[Bound], env: &[Elem], n: usize) -> (Elem, Elem) {
    let mut lo: Elem = 1;
    for b in lower {
        lo = lo.max(env[b.slot as usize] + b.strict as Elem);
    }
    let mut hi: Elem = n as Elem;
    for b in upper {
        let v = env[b.slot as usize];
        let v = if b.strict { v.saturating_sub(1) } else { v };
        hi = hi.min(v);
    }
    (lo, hi)
}

/// Order constraints `a < b` (strict) or `a ≤ b` between variables that
/// every model of a formula satisfies. `None` stands for "any constraint"
/// (the formula is unsatisfiable).
type Implied = Option<BTreeMap<(String, String), bool>>;

fn implied(f: &Formula) -> Implied {
    let single = |a: &Term, b: &Term, strict: bool| -> Implied {
        let mut m = BTreeMap::new();
        if let (Term::Var(a), Term::Var(b)) = (a, b) {
            if a != b {
                m.insert((a.clone(), b.clone()), strict);
            }
        }
        Some(m)
    };
    match f {
        Formula::False => None,
        Formula::Lt(a, b) => single(a, b, true),
        Formula::Eq(a, b) => {
            let mut m = single(a, b, false).unwrap();
            m.extend(single(b, a, false).unwrap());
            Some(m)
        }
        Formula::Not(g) => match &**g {
            Formula::Lt(b, a) => single(a, b, false),
            Formula::True => None,
            _ => Some(BTreeMap::new()),
        },
        Formula::And(gs) => {
            let mut m = BTreeMap::new();
            for g in gs {
                let Some(gm) = implied(g) else { return None };
                for (k, s) in gm {
                    let e = m.entry(k).or_insert(false);
                    *e |= s;
                }
            }
            Some(m)
        }
        Formula::Or(gs) => {
            let mut acc: Implied = None;
            for g in gs {
                let gm = implied(g);
                acc = match (acc, gm) {
                    (None, x) | (x, None) => x,
                    (Some(a), Some(b)) => Some(
                        a.into_iter()
                            .filter_map(|(k, s)| b.get(&k).map(|t| (k, s && *t)))
                            .collect(),
                    ),
                };
                if matches!(&acc, Some(m) if m.is_empty()) {
                    break;
                }
            }
            acc
        }
        Formula::Exists(v, g) | Formula::Forall(v, g) => implied(g).map(|m| {
            m.into_iter()
                .filter(|((a, b), _)| a != v && b != v)
                .collect()
        }),
        _ => Some(BTreeMap::new()),
    }
}

/// Bounds for `var` from implied constraints against the given in-scope
/// variables.
fn bounds_for(
    imp: &Implied,
    var: &str,
    scope: &dyn Fn(&str) -> Option<u16>,
) -> (Vec<Bound>, Vec<Bound>) {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    if let Some(m) = imp {
        for ((a, b), strict) in m {
            if b == var {
                if let Some(slot) = scope(a) {
                    lower.push(Bound {
                        slot,
                        strict: *strict,
                    });
                }
            } else if a == var {
                if let Some(slot) = scope(b) {
                    upper.push(Bound {
                        slot,
                        strict: *strict,
                    });
                }
            }
        }
    }
    (lower, upper)
}

struct Scope {
    names: Vec<(String, u16)>,
    next: u16,
    max: u16,
    /// Identity of each binding, so that compiled shared nodes are reused
    /// only under the same binders.
    ids: Vec<u32>,
    fresh: u32,
}

impl Scope {
    fn new() -> Self {
        Scope {
            names: Vec::new(),
            next: 0,
            max: 0,
            ids: Vec::new(),
            fresh: 0,
        }
    }

    fn push(&mut self, name: &str) -> u16 {
        let s = self.next;
        self.names.push((name.to_string(), s));
        self.next += 1;
        self.max = self.max.max(self.next);
        self.fresh += 1;
        self.ids.push(self.fresh);
        s
    }

    fn id(&self) -> u32 {
        self.ids.last().copied().unwrap_or(0)
    }

    fn pop(&mut self) {
        self.ids.pop();
        self.names.pop();
        self.next -= 1;
    }

    fn lookup(&self, name: &str) -> Option<u16> {
        self.names
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }
}

struct Compiler<'a> {
    sig: &'a Signature,
    /// Compiled form of each shared AST node, per scope.
    seen_terms: RefCell<HashMap<(usize, u32), CT>>,
    seen_formulas: RefCell<HashMap<(usize, u32), CF>>,
    /// Hash-consed arena with, per node, the number of references and
    /// whether some reference can be hoisted out of an inner binder.
    intern: RefCell<HashMap<Node, u32>>,
    nodes: RefCell<Vec<Node>>,
    uses: RefCell<Vec<(u32, bool)>>,
    free: RefCell<Vec<Vec<u16>>>,
}

impl<'a> Compiler<'a> {
    fn new(sig: &'a Signature) -> Self {
        Compiler {
            sig,
            seen_terms: RefCell::new(HashMap::new()),
            seen_formulas: RefCell::new(HashMap::new()),
            intern: RefCell::new(HashMap::new()),
            nodes: RefCell::new(Vec::new()),
            uses: RefCell::new(Vec::new()),
            free: RefCell::new(Vec::new()),
        }
    }

    fn use_ref(&self, id: u32, dep: u16, sc: &Scope) {
        let mut uses = self.uses.borrow_mut();
        uses[id as usize].0 += 1;
        uses[id as usize].1 |= dep == NO_DEP || dep + 1 < sc.next;
    }

    fn share(&self, node: Node, sc: &Scope) -> (u32, u16) {
        let id = {
            let mut intern = self.intern.borrow_mut();
            match intern.get(&node) {
                Some(id) => *id,
                None => {
                    let mut set = BTreeSet::new();
                    {
                        let free = self.free.borrow();
                        match &node {
                            Node::T(t) => free_term(t, &free, &mut set),
                            Node::F(f) => free_formula(f, &free, &mut set),
                        }
                    }
                    self.free.borrow_mut().push(set.into_iter().collect());
                    let mut nodes = self.nodes.borrow_mut();
                    let id = nodes.len() as u32;
                    nodes.push(node.clone());
                    self.uses.borrow_mut().push((0, false));
                    intern.insert(node, id);
                    id
                }
            }
        };
        let dep = self.free.borrow()[id as usize].last().copied().unwrap_or(NO_DEP);
        self.use_ref(id, dep, sc);
        (id, dep)
    }

    fn share_term(&self, t: CT, sc: &Scope) -> CT {
        match &t {
            CT::Var(_) | CT::Ref(..) => t,
            CT::Fun(_, args) if args.iter().all(|a| matches!(a, CT::Var(_))) => t,
            _ => {
                let (id, dep) = self.share(Node::T(t), sc);
                CT::Ref(id, dep)
            }
        }
    }

    fn share_formula(&self, f: CF, sc: &Scope) -> CF {
        match &f {
            CF::True | CF::False | CF::Ref(..) => f,
            CF::In(_, args) | CF::St(_, args) if args.iter().all(|a| matches!(a, CT::Var(_))) => f,
            _ => {
                let (id, dep) = self.share(Node::F(f), sc);
                CF::Ref(id, dep)
            }
        }
    }

    fn term_rc(&self, t: &Arc<Term>, sc: &mut Scope) -> Result<CT, EngineError> {
        let key = (Arc::as_ptr(t) as usize, sc.id());
        if let Some(ct) = self.seen_terms.borrow().get(&key) {
            if let CT::Ref(id, dep) = ct {
                self.use_ref(*id, *dep, sc);
            }
            return Ok(ct.clone());
        }
        let ct = self.term(t, sc)?;
        let ct = self.share_term(ct, sc);
        self.seen_terms.borrow_mut().insert(key, ct.clone());
        Ok(ct)
    }

    fn formula_rc(&self, f: &Arc<Formula>, sc: &mut Scope) -> Result<CF, EngineError> {
        let key = (Arc::as_ptr(f) as usize, sc.id());
        if let Some(cf) = self.seen_formulas.borrow().get(&key) {
            if let CF::Ref(id, dep) = cf {
                self.use_ref(*id, *dep, sc);
            }
            return Ok(cf.clone());
        }
        let cf = self.formula(f, sc)?;
        let cf = self.share_formula(cf, sc);
        self.seen_formulas.borrow_mut().insert(key, cf.clone());
        Ok(cf)
    }

    fn term(&self, t: &Term, sc: &mut Scope) -> Result<CT, EngineError> {
        let ct = match t {
            Term::Var(v) => {
                return Ok(CT::Var(
                    sc.lookup(v).ok_or_else(|| EngineError::Unbound(v.clone()))?,
                ))
            }
            Term::Const(c) => self.apply(c, &[], sc)?,
            Term::Apply(f, args) => self.apply(f, args, sc)?,
            Term::Ite(c, a, b) => CT::Ite(
                Box::new(self.formula_rc(c, sc)?),
                Box::new(self.term_rc(a, sc)?),
                Box::new(self.term_rc(b, sc)?),
            ),
        };
        Ok(self.share_term(ct, sc))
    }

    fn apply(&self, f: &str, args: &[Term], sc: &mut Scope) -> Result<CT, EngineError> {
        let (idx, arity) = *self
            .sig
            .funs
            .get(f)
            .ok_or_else(|| EngineError::UnknownSymbol(f.to_string()))?;
        if arity != args.len() {
            return Err(EngineError::Arity {
                name: f.to_string(),
                expected: arity,
                got: args.len(),
            });
        }
        let args = args
            .iter()
            .map(|a| self.term(a, sc))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CT::Fun(idx, args.into()))
    }

    fn formula(&self, f: &Formula, sc: &mut Scope) -> Result<CF, EngineError> {
        Ok(match f {
            Formula::True => CF::True,
            Formula::False => CF::False,
            Formula::Rel(r, args) => {
                let (loc, arity) = *self
                    .sig
                    .rels
                    .get(r)
                    .ok_or_else(|| EngineError::UnknownSymbol(r.clone()))?;
                if arity != args.len() {
                    return Err(EngineError::Arity {
                        name: r.clone(),
                        expected: arity,
                        got: args.len(),
                    });
                }
                let args: Box<[CT]> = args
                    .iter()
                    .map(|a| self.term(a, sc))
                    .collect::<Result<Vec<_>, _>>()?
                    .into();
                match loc {
                    RelLoc::Input(i) => CF::In(i, args),
                    RelLoc::State(i) => CF::St(i, args),
                }
            }
            Formula::Eq(a, b) => CF::Eq(self.term(a, sc)?, self.term(b, sc)?),
            Formula::Lt(a, b) => CF::Lt(self.term(a, sc)?, self.term(b, sc)?),
            Formula::Not(g) => CF::Not(Box::new(self.formula_rc(g, sc)?)),
            Formula::And(gs) => CF::And(
                gs.iter()
                    .map(|g| self.formula(g, sc))
                    .collect::<Result<Vec<_>, _>>()?
                    .into(),
            ),
            Formula::Or(gs) => CF::Or(
                gs.iter()
                    .map(|g| self.formula(g, sc))
                    .collect::<Result<Vec<_>, _>>()?
                    .into(),
            ),
            Formula::Exists(v, g) => {
                let imp = implied(g);
                let (lower, upper) = bounds_for(&imp, v, &|name| sc.lookup(name));
                let slot = sc.push(v);
                let body = self.formula_rc(g, sc);
                sc.pop();
                CF::Exists(Quant {
                    slot,
                    lower,
                    upper,
                    body: Box::new(body?),
                })
            }
            Formula::Forall(v, g) => {
                let slot = sc.push(v);
                let body = self.formula_rc(g, sc);
                sc.pop();
                CF::Forall(slot, Box::new(body?))
            }
        })
    }

    /// Inline arena nodes that are referenced once and cannot be hoisted;
    /// returns the body and the final arena.
    fn finish(self, body: Body) -> (Body, Vec<Node>) {
        let nodes = self.nodes.into_inner();
        let uses = self.uses.into_inner();
        let keep: Vec<bool> = uses.iter().map(|(n, h)| *n > 1 || *h).collect();
        let mut out: Vec<Option<Node>> = vec![None; nodes.len()];
        let mut f = Finisher {
            nodes: &nodes,
            keep: &keep,
            out: &mut out,
        };
        let body = match body {
            Body::F(cf) => Body::F(f.formula(cf)),
            Body::T(ct) => Body::T(f.term(ct)),
        };
        let arena = out.into_iter().map(|n| n.unwrap_or(Node::F(CF::False))).collect();
        (body, arena)
    }
}

struct Finisher<'a> {
    nodes: &'a [Node],
    keep: &'a [bool],
    out: &'a mut Vec<Option<Node>>,
}

impl Finisher<'_> {
    fn visit(&mut self, id: u32) -> Option<Node> {
        let i = id as usize;
        let done = |n: Node, me: &mut Self| match n {
            Node::T(t) => Node::T(me.term(t)),
            Node::F(f) => Node::F(me.formula(f)),
        };
        if self.keep[i] {
            if self.out[i].is_none() {
                // placeholder against re-entry; nodes form a DAG
                self.out[i] = Some(Node::F(CF::False));
                let n = done(self.nodes[i].clone(), self);
                self.out[i] = Some(n);
            }
            None
        } else {
            Some(done(self.nodes[i].clone(), self))
        }
    }

    fn term(&mut self, t: CT) -> CT {
        match t {
            CT::Var(_) => t,
            CT::Fun(f, args) => CT::Fun(f, args.into_vec().into_iter().map(|a| self.term(a)).collect()),
            CT::Ite(c, a, b) => CT::Ite(
                Box::new(self.formula(*c)),
                Box::new(self.term(*a)),
                Box::new(self.term(*b)),
            ),
            CT::Ref(id, dep) => match self.visit(id) {
                Some(Node::T(inner)) => inner,
                Some(Node::F(_)) => unreachable!(),
                None => CT::Ref(id, dep),
            },
        }
    }

    fn formula(&mut self, f: CF) -> CF {
        match f {
            CF::True | CF::False => f,
            CF::In(r, args) => CF::In(r, args.into_vec().into_iter().map(|a| self.term(a)).collect()),
            CF::St(r, args) => CF::St(r, args.into_vec().into_iter().map(|a| self.term(a)).collect()),
            CF::Eq(a, b) => CF::Eq(self.term(a), self.term(b)),
            CF::Lt(a, b) => CF::Lt(self.term(a), self.term(b)),
            CF::Not(g) => CF::Not(Box::new(self.formula(*g))),
            CF::And(gs) => CF::And(gs.into_vec().into_iter().map(|g| self.formula(g)).collect()),
            CF::Or(gs) => CF::Or(gs.into_vec().into_iter().map(|g| self.formula(g)).collect()),
            CF::Exists(mut q) => {
                q.body = Box::new(self.formula(*q.body));
                CF::Exists(q)
            }
            CF::Forall(s, g) => CF::Forall(s, Box::new(self.formula(*g))),
            CF::Ref(id, dep) => match self.visit(id) {
                Some(Node::F(inner)) => inner,
                Some(Node::T(_)) => unreachable!(),
                None => CF::Ref(id, dep),
            },
        }
    }
}

/// Free slots of a compiled node; `free[id]` lists those of arena node `id`.
fn free_term(t: &CT, free: &[Vec<u16>], out: &mut BTreeSet<u16>) {
    match t {
        CT::Var(s) => {
            out.insert(*s);
        }
        CT::Fun(_, args) => args.iter().for_each(|a| free_term(a, free, out)),
        CT::Ite(c, a, b) => {
            free_formula(c, free, out);
            free_term(a, free, out);
            free_term(b, free, out);
        }
        CT::Ref(id, _) => out.extend(&free[*id as usize]),
    }
}

fn free_formula(f: &CF, free: &[Vec<u16>], out: &mut BTreeSet<u16>) {
    match f {
        CF::True | CF::False => {}
        CF::In(_, args) | CF::St(_, args) => args.iter().for_each(|a| free_term(a, free, out)),
        CF::Eq(a, b) | CF::Lt(a, b) => {
            free_term(a, free, out);
            free_term(b, free, out);
        }
        CF::Not(g) => free_formula(g, free, out),
        CF::And(gs) | CF::Or(gs) => gs.iter().for_each(|g| free_formula(g, free, out)),
        CF::Exists(q) => {
            out.extend(q.lower.iter().chain(&q.upper).map(|b| b.slot));
            let mut inner = BTreeSet::new();
            free_formula(&q.body, free, &mut inner);
            out.extend(inner.range(..q.slot));
        }
        CF::Forall(slot, g) => {
            let mut inner = BTreeSet::new();
            free_formula(g, free, &mut inner);
            out.extend(inner.range(..*slot));
        }
        CF::Ref(id, _) => out.extend(&free[*id as usize]),
    }
}

#[derive(Debug)]
enum Body {
    F(CF),
    T(CT),
}

#[derive(Debug)]
struct CRule {
    /// Position in the state's relation or function vector.
    target: usize,
    arity: usize,
    var_slots: Vec<u16>,
    ranges: Vec<(Vec<Bound>, Vec<Bound>)>,
    body: Body,
    slots: usize,
    nodes: Vec<Node>,
}

fn compile_rule<B>(
    sig: &Signature,
    params: &[String],
    target: usize,
    rule: &Rule<B>,
    body: &dyn Fn(&Compiler, &mut Scope) -> Result<Body, EngineError>,
    imp: Implied,
) -> Result<CRule, EngineError> {
    let mut sc = Scope::new();
    for p in params {
        sc.push(p);
    }
    let mut var_slots = Vec::new();
    let mut ranges = Vec::new();
    for v in &rule.vars {
        let r = bounds_for(&imp, v, &|name| sc.lookup(name));
        ranges.push(r);
        var_slots.push(sc.push(v));
    }
    let c = Compiler::new(sig);
    let body = body(&c, &mut sc)?;
    let (body, nodes) = c.finish(body);
    Ok(CRule {
        target,
        arity: rule.vars.len(),
        var_slots,
        ranges,
        body,
        slots: sc.max as usize,
        nodes,
    })
}

#[derive(Debug)]
struct CUpdate {
    params: usize,
    rels: Vec<CRule>,
    funs: Vec<CRule>,
}

/// A program compiled for evaluation.
pub struct Engine {
    program: DynamicProgram,
    sig: Arc<Signature>,
    updates: HashMap<UpdateKind, CUpdate>,
    rel_init: Vec<CRule>,
    fun_init: Vec<CRule>,
    timeout: Option<Duration>,
}

struct Deadline {
    until: Option<Instant>,
    limit_ms: u64,
    counter: u32,
}

impl Deadline {
    #[inline]
    fn tick(&mut self) -> Result<(), EngineError> {
        if let Some(t) = self.until {
            self.counter += 1;
            if self.counter & 0xf == 0 && Instant::now() > t {
                return Err(EngineError::Timeout(self.limit_ms));
            }
        }
        Ok(())
    }
}

fn update_kind(u: &ConcreteUpdate) -> UpdateKind {
    match u {
        ConcreteUpdate::InsSym(s, _) => UpdateKind::Ins(s.clone()),
        ConcreteUpdate::Reset(_) => UpdateKind::Reset,
        ConcreteUpdate::InsTuple(r, _) => UpdateKind::InsR(r.clone()),
        ConcreteUpdate::DelTuple(r, _) => UpdateKind::DelR(r.clone()),
    }
}

impl Engine {
    pub fn new(p: &DynamicProgram) -> Result<Self, EngineError> {
        let sig = Signature::from_program(p)?;
        let mut updates = HashMap::new();
        for u in &p.updates {
            let mut rels = Vec::new();
            for (name, rule) in &u.relations {
                let Some((RelLoc::State(target), _)) = sig.rels.get(name) else {
                    return Err(EngineError::UnknownSymbol(name.clone()));
                };
                rels.push(compile_rule(
                    &sig,
                    &u.params,
                    *target as usize,
                    rule,
                    &|c, sc| Ok(Body::F(c.formula(&rule.body, sc)?)),
                    implied(&rule.body),
                )?);
            }
            let mut funs = Vec::new();
            for (name, rule) in &u.functions {
                let (target, _) = sig
                    .funs
                    .get(name)
                    .ok_or_else(|| EngineError::UnknownSymbol(name.clone()))?;
                funs.push(compile_rule(
                    &sig,
                    &u.params,
                    *target as usize,
                    rule,
                    &|c, sc| Ok(Body::T(c.term(&rule.body, sc)?)),
                    Some(BTreeMap::new()),
                )?);
            }
            updates.insert(
                u.kind.clone(),
                CUpdate {
                    params: u.params.len(),
                    rels,
                    funs,
                },
            );
        }
        let mut rel_init = Vec::new();
        for (name, rule) in &p.rel_init {
            let Some((RelLoc::State(target), _)) = sig.rels.get(name) else {
                return Err(EngineError::UnknownSymbol(name.clone()));
            };
            rel_init.push(compile_rule(
                &sig,
                &[],
                *target as usize,
                rule,
                &|c, sc| Ok(Body::F(c.formula(&rule.body, sc)?)),
                implied(&rule.body),
            )?);
        }
        let mut fun_init = Vec::new();
        for (name, rule) in &p.fun_init {
            let (target, _) = sig
                .funs
                .get(name)
                .ok_or_else(|| EngineError::UnknownSymbol(name.clone()))?;
            fun_init.push(compile_rule(
                &sig,
                &[],
                *target as usize,
                rule,
                &|c, sc| Ok(Body::T(c.term(&rule.body, sc)?)),
                Some(BTreeMap::new()),
            )?);
        }
        Ok(Engine {
            program: p.clone(),
            sig: Arc::new(sig),
            updates,
            rel_init,
            fun_init,
            timeout: None,
        })
    }

    /// Cap the wall time of a single update.
    pub fn with_timeout(mut self, ms: u64) -> Self {
        self.timeout = Some(Duration::from_millis(ms));
        self
    }

    /// Read the cap from `DYNLANG_TIMEOUT_MS` when set.
    pub fn with_env_timeout(self) -> Self {
        match std::env::var("DYNLANG_TIMEOUT_MS")
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
        {
            Some(ms) => self.with_timeout(ms),
            None => self,
        }
    }

    pub fn program(&self) -> &DynamicProgram {
        &self.program
    }

    fn deadline(&self) -> Deadline {
        Deadline {
            until: self.timeout.map(|d| Instant::now() + d),
            limit_ms: self.timeout.map_or(0, |d| d.as_millis() as u64),
            counter: 0,
        }
    }

    /// The initial state `E'_n`: empty input (or the change-only initial
    /// word), precomputed tables, and auxiliary symbols either empty, set by
    /// initialization rules, or supplied by the precomputation.
    pub fn initial_state(&self, n: usize) -> Result<ProgramState, EngineError> {
        let p = &self.program;
        let mut input = new_empty_structure(&p.input, n)?;
        if let Some(l) = &p.initial_label {
            for i in 1..=n as Elem {
                input.set_label(i, Some(l))?;
            }
        }
        let mut rels: Vec<RelTable> = self
            .sig
            .state_rels
            .iter()
            .map(|(_, a)| RelTable::new(*a, n))
            .collect();
        let mut funs: Vec<FunTable> = self
            .sig
            .state_funs
            .iter()
            .map(|(_, a)| FunTable::first_component(*a, n))
            .collect();
        let pre = p.precompute.as_ref().map(|f| f(n)).unwrap_or_default();
        for (i, (name, arity)) in self.sig.state_rels.iter().enumerate() {
            match pre.relations.get(name) {
                Some(t) if t.arity() == *arity && t.universe() == n => rels[i] = t.clone(),
                Some(_) => return Err(EngineError::BadPrecomputed(name.clone())),
                None if i >= self.sig.aux_rels => {
                    return Err(EngineError::MissingPrecomputed(name.clone()))
                }
                None => {}
            }
        }
        for (i, (name, arity)) in self.sig.state_funs.iter().enumerate() {
            let builtin = p.schema.builtins && builtin_arity(name).is_some();
            if builtin {
                let n32 = n as Elem;
                funs[i] = match name.as_str() {
                    SUCC => FunTable::from_fn(1, n, |t| (t[0] + 1).min(n32)),
                    PRE => FunTable::from_fn(1, n, |t| t[0].saturating_sub(1).max(1)),
                    _ => FunTable::from_fn(0, n, |_| 1),
                };
                continue;
            }
            match pre.functions.get(name) {
                Some(t) if t.arity() == *arity => funs[i] = t.clone(),
                Some(_) => return Err(EngineError::BadPrecomputed(name.clone())),
                None if i >= self.sig.aux_funs => {
                    return Err(EngineError::MissingPrecomputed(name.clone()))
                }
                None => {}
            }
        }
        let mut state = ProgramState {
            n,
            input,
            sig: self.sig.clone(),
            rels,
            funs,
        };
        if !self.rel_init.is_empty() || !self.fun_init.is_empty() {
            let mut dl = self.deadline();
            let (new_rels, new_funs) =
                self.evaluate(&state, &self.rel_init, &self.fun_init, &[], &mut dl)?;
            for (i, t) in new_rels {
                state.rels[i] = t;
            }
            for (i, t) in new_funs {
                state.funs[i] = t;
            }
        }
        Ok(state)
    }

    #[allow(clippy::type_complexity)]
    fn evaluate(
        &self,
        state: &ProgramState,
        rels: &[CRule],
        funs: &[CRule],
        params: &[Elem],
        dl: &mut Deadline,
    ) -> Result<(Vec<(usize, RelTable)>, Vec<(usize, FunTable)>), EngineError> {
        fn ctx<'a>(state: &'a ProgramState, r: &'a CRule) -> Ctx<'a> {
            Ctx {
                n: state.n,
                input: &state.input,
                rels: &state.rels,
                funs: &state.funs,
                nodes: &r.nodes,
            }
        }
        let mut out_rels = Vec::with_capacity(rels.len());
        for r in rels {
            let mut table = RelTable::new(r.arity, state.n);
            let mut env = Frame::new(r.slots, r.nodes.len(), params);
            let Body::F(body) = &r.body else { unreachable!() };
            enumerate(&ctx(state, r), r, &mut env, 0, 0, dl, &mut |ctx, env, idx| {
                if ctx.formula(body, env) {
                    table.set_raw(idx, true);
                }
            })?;
            out_rels.push((r.target, table));
        }
        let mut out_funs = Vec::with_capacity(funs.len());
        for r in funs {
            let mut table = FunTable::first_component(r.arity, state.n);
            let mut env = Frame::new(r.slots, r.nodes.len(), params);
            let Body::T(body) = &r.body else { unreachable!() };
            enumerate(&ctx(state, r), r, &mut env, 0, 0, dl, &mut |ctx, env, idx| {
                table.set_raw(idx, ctx.term(body, env));
            })?;
            out_funs.push((r.target, table));
        }
        Ok((out_rels, out_funs))
    }

    /// Apply one update with snapshot semantics.
    pub fn apply(&self, state: &mut ProgramState, u: &ConcreteUpdate) -> Result<(), EngineError> {
        if !Arc::ptr_eq(&state.sig, &self.sig) && *state.sig != *self.sig {
            return Err(EngineError::ForeignState);
        }
        state.input.check_applicable(u)?;
        let kind = update_kind(u);
        let cu = self
            .updates
            .get(&kind)
            .ok_or_else(|| EngineError::NoUpdate(kind.to_string()))?;
        let params = u.positions();
        if params.len() != cu.params {
            return Err(EngineError::NoUpdate(kind.to_string()));
        }
        let mut dl = self.deadline();
        let (new_rels, new_funs) = self.evaluate(state, &cu.rels, &cu.funs, &params, &mut dl)?;
        for (i, t) in new_rels {
            state.rels[i] = t;
        }
        for (i, t) in new_funs {
            state.funs[i] = t;
        }
        state.input.apply(u)?;
        Ok(())
    }

    /// Run from the initial state and report `accept` after each update.
    pub fn run(&self, n: usize, updates: &[ConcreteUpdate]) -> Result<Vec<bool>, EngineError> {
        let mut s = self.initial_state(n)?;
        let mut trace = Vec::with_capacity(updates.len());
        for u in updates {
            self.apply(&mut s, u)?;
            trace.push(s.accept());
        }
        Ok(trace)
    }
}

fn enumerate(
    ctx: &Ctx,
    r: &CRule,
    env: &mut Frame,
    depth: usize,
    acc: usize,
    dl: &mut Deadline,
    visit: &mut dyn FnMut(&Ctx, &mut Frame, usize),
) -> Result<(), EngineError> {
    if depth == r.arity {
        dl.tick()?;
        visit(ctx, env, acc);
        return Ok(());
    }
    let (lower, upper) = &r.ranges[depth];
    let (lo, hi) = bounds(lower, upper, &env.env, ctx.n);
    let slot = r.var_slots[depth] as usize;
    for v in lo..=hi {
        env.set(slot, v);
        enumerate(ctx, r, env, depth + 1, acc * ctx.n + (v as usize - 1), dl, visit)?;
    }
    Ok(())
}

fn compile_with_env(
    state: &ProgramState,
    env: &HashMap<String, Elem>,
) -> (Scope, Vec<Elem>) {
    let mut sc = Scope::new();
    let mut values = Vec::new();
    let mut names: Vec<_> = env.iter().collect();
    names.sort();
    for (name, v) in names {
        sc.push(name);
        values.push(*v);
    }
    let _ = state;
    (sc, values)
}

/// Evaluate a term in a state under a variable assignment.
pub fn eval_term(
    state: &ProgramState,
    t: &Term,
    env: &HashMap<String, Elem>,
) -> Result<Elem, EngineError> {
    let (mut sc, values) = compile_with_env(state, env);
    let c = Compiler::new(&state.sig);
    let ct = c.term(t, &mut sc)?;
    let slots = sc.max as usize;
    let (body, nodes) = c.finish(Body::T(ct));
    let Body::T(ct) = body else { unreachable!() };
    let mut values = Frame::new(slots, nodes.len(), &values);
    let ctx = Ctx {
        n: state.n,
        input: &state.input,
        rels: &state.rels,
        funs: &state.funs,
        nodes: &nodes,
    };
    Ok(ctx.term(&ct, &mut values))
}

/// Evaluate a formula in a state under a variable assignment.
pub fn eval_formula(
    state: &ProgramState,
    f: &Formula,
    env: &HashMap<String, Elem>,
) -> Result<bool, EngineError> {
    let (mut sc, values) = compile_with_env(state, env);
    let c = Compiler::new(&state.sig);
    let cf = c.formula(f, &mut sc)?;
    let slots = sc.max as usize;
    let (body, nodes) = c.finish(Body::F(cf));
    let Body::F(cf) = body else { unreachable!() };
    let mut values = Frame::new(slots, nodes.len(), &values);
    let ctx = Ctx {
        n: state.n,
        input: &state.input,
        rels: &state.rels,
        funs: &state.funs,
        nodes: &nodes,
    };
    Ok(ctx.formula(&cf, &mut values))
}

/// Apply one update, returning the new state.
pub fn apply_update(
    p: &DynamicProgram,
    s: &ProgramState,
    u: &ConcreteUpdate,
) -> Result<ProgramState, EngineError> {
    let engine = Engine::new(p)?;
    let mut out = s.clone();
    engine.apply(&mut out, u)?;
    Ok(out)
}

/// Accept trace of a program on an update sequence.
pub fn run_program(
    p: &DynamicProgram,
    n: usize,
    updates: &[ConcreteUpdate],
) -> Result<Vec<bool>, EngineError> {
    Engine::new(p)?.run(n, updates)
}

#[cfg(test)]
mod tests {
    use super::super::ast::*;
    use super::super::program::*;
    use super::*;

    fn env(pairs: &[(&str, Elem)]) -> HashMap<String, Elem> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn succ_program() -> DynamicProgram {
        let mut b = ProgramBuilder::word("t", &["a"]);
        b.builtins().function("F", 2);
        for k in b.kinds() {
            b.update_rel(&k, ACCEPT, &[], Formula::True);
            b.update_fun(&k, "F", &["x1", "x2"], app("F", vec![var("x1"), var("x2")]));
        }
        b.build().unwrap()
    }

    #[test]
    fn term_evaluation() {
        let p = succ_program();
        let s = Engine::new(&p).unwrap().initial_state(4).unwrap();
        let t = ite(
            prop("accept"),
            var("x"),
            var("y"),
        );
        assert_eq!(eval_term(&s, &t, &env(&[("x", 3), ("y", 5)])).unwrap(), 5);
        let t = Term::Ite(Arc::new(Formula::True), Arc::new(var("x")), Arc::new(var("y")));
        assert_eq!(eval_term(&s, &t, &env(&[("x", 3), ("y", 5)])).unwrap(), 3);
        let t = app(SUCC, vec![constant(MIN)]);
        assert_eq!(eval_term(&s, &t, &env(&[])).unwrap(), 2);
        let t = app("F", vec![var("x"), var("x")]);
        assert_eq!(eval_term(&s, &t, &env(&[("x", 2)])).unwrap(), 2);
        assert_eq!(eval_term(&s, &app(SUCC, vec![var("x")]), &env(&[("x", 4)])).unwrap(), 4);
        assert_eq!(eval_term(&s, &app(PRE, vec![var("x")]), &env(&[("x", 1)])).unwrap(), 1);
        assert!(matches!(
            eval_term(&s, &var("q"), &env(&[])),
            Err(EngineError::Unbound(_))
        ));
        assert!(matches!(
            eval_term(&s, &app("F", vec![var("x")]), &env(&[("x", 1)])),
            Err(EngineError::Arity { .. })
        ));
    }

    #[test]
    fn formula_evaluation() {
        let p = succ_program();
        let e = Engine::new(&p).unwrap();
        let mut s = e.initial_state(3).unwrap();
        assert!(!eval_formula(&s, &prop(ACCEPT), &env(&[])).unwrap());
        let ex = exists("x", rel("a", vec![var("x")]));
        assert!(!eval_formula(&s, &ex, &env(&[])).unwrap());
        e.apply(&mut s, &ConcreteUpdate::ins("a", 2)).unwrap();
        assert!(eval_formula(&s, &ex, &env(&[])).unwrap());
        e.apply(&mut s, &ConcreteUpdate::Reset(2)).unwrap();
        assert!(!eval_formula(&s, &ex, &env(&[])).unwrap());
    }

    #[test]
    fn range_pruning_matches_full_enumeration() {
        // R(x1,x2) := x1 < x2 ∧ x2 ≤ y ∨ x1 = x2, with and without pruning
        let body = or(vec![
            and(vec![lt(var("x1"), var("x2")), le(var("x2"), var("y"))]),
            eq(var("x1"), var("x2")),
        ]);
        let mut b = ProgramBuilder::word("t", &["a"]);
        b.relation("R", 2);
        for k in b.kinds() {
            b.update_rel(&k, ACCEPT, &[], exists("u", and(vec![lt(var("u"), var("y")), rel("R", vec![var("u"), var("y")])])));
            b.update_rel(&k, "R", &["x1", "x2"], body.clone());
        }
        let p = b.build().unwrap();
        let e = Engine::new(&p).unwrap();
        let mut s = e.initial_state(5).unwrap();
        e.apply(&mut s, &ConcreteUpdate::ins("a", 3)).unwrap();
        for x1 in 1..=5 {
            for x2 in 1..=5 {
                let expect = (x1 < x2 && x2 <= 3) || x1 == x2;
                assert_eq!(s.holds("R", &[x1, x2]), expect, "{x1} {x2}");
            }
        }
        e.apply(&mut s, &ConcreteUpdate::ins("a", 3)).unwrap();
        assert!(s.accept());
        e.apply(&mut s, &ConcreteUpdate::ins("a", 1)).unwrap();
        assert!(!s.accept());
    }

    #[test]
    fn nested_binders_keep_outer_dependencies() {
        // R(x) := ∃u ∃v (a(u) ∧ x < v ∧ a(v) ∧ ¬(u ≤ v)): the inner block
        // depends on u through its body only, not through its bounds
        let (x, u, v) = (var("x"), var("u"), var("v"));
        let a = |t: &Term| rel("a", vec![t.clone()]);
        let body = exists_many(
            &["u", "v"],
            and(vec![
                a(&u),
                lt(x.clone(), v.clone()),
                a(&v),
                Formula::Not(Arc::new(le(u.clone(), v.clone()))),
            ]),
        );
        let mut b = ProgramBuilder::word("t", &["a"]);
        b.relation("R", 1);
        for k in b.kinds() {
            b.update_rel(&k, "R", &["x"], body.clone());
            b.update_rel(&k, ACCEPT, &[], Formula::True);
        }
        let e = Engine::new(&b.build().unwrap()).unwrap();
        let mut s = e.initial_state(4).unwrap();
        e.apply(&mut s, &ConcreteUpdate::ins("a", 2)).unwrap();
        e.apply(&mut s, &ConcreteUpdate::ins("a", 3)).unwrap();
        e.apply(&mut s, &ConcreteUpdate::ins("a", 3)).unwrap();
        assert!(s.holds("R", &[1]));
        assert!(!s.holds("R", &[2]));
    }

    #[test]
    fn snapshot_reads_old_values() {
        // A(x) := B(x), B(x) := ¬A(x): a swap must see the old values.
        let mut b = ProgramBuilder::word("t", &["a"]);
        b.relation("A", 1).relation("B", 1);
        for k in b.kinds() {
            b.update_rel(&k, ACCEPT, &[], Formula::True);
            b.update_rel(&k, "A", &["x"], rel("B", vec![var("x")]));
            b.update_rel(&k, "B", &["x"], not(rel("A", vec![var("x")])));
        }
        let p = b.build().unwrap();
        let e = Engine::new(&p).unwrap();
        let mut s = e.initial_state(2).unwrap();
        e.apply(&mut s, &ConcreteUpdate::ins("a", 1)).unwrap();
        assert!(!s.holds("A", &[1]) && s.holds("B", &[1]));
        e.apply(&mut s, &ConcreteUpdate::ins("a", 1)).unwrap();
        assert!(s.holds("A", &[1]) && s.holds("B", &[1]));
        e.apply(&mut s, &ConcreteUpdate::ins("a", 1)).unwrap();
        assert!(s.holds("A", &[1]) && !s.holds("B", &[1]));
    }

    #[test]
    fn timeout_fires() {
        let mut b = ProgramBuilder::word("t", &["a"]);
        let deep = exists_many(
            &["u1", "u2", "u3", "u4", "u5"],
            and(vec![Formula::False]),
        );
        let deep = or(vec![deep, exists_many(
            &["v1", "v2", "v3", "v4", "v5", "v6"],
            and(vec![lt(var("v6"), var("v1")), rel("R", vec![var("v1"), var("x2")])]),
        )]);
        b.relation("R", 2);
        for k in b.kinds() {
            b.update_rel(&k, ACCEPT, &[], Formula::True);
            b.update_rel(&k, "R", &["x1", "x2"], deep.clone());
        }
        let p = b.build().unwrap();
        let e = Engine::new(&p).unwrap().with_timeout(1);
        let mut s = e.initial_state(14).unwrap();
        assert_eq!(
            e.apply(&mut s, &ConcreteUpdate::ins("a", 1)),
            Err(EngineError::Timeout(1))
        );
    }
}
