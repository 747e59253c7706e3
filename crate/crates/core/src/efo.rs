// SPDX-License-Identifier: Apache-2.0

//! Existential first-order sentences maintained by counting, per disjoint
//! type, the tuples realizing it. Counts are stored as base-`n` digits in
//! quantifier-free updated functions, with precomputed digit arithmetic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::formula::ast::*;
use crate::formula::engine::ProgramState;
use crate::formula::program::{DynamicProgram, PrecomputedTables, ProgramBuilder, UpdateKind, ACCEPT};
use crate::structure::{all_tuples, Elem, FunTable, RelTable, Structure, Vocabulary};

/// Default cap on the number of candidate types.
pub const TYPE_BOUND: usize = 1 << 16;

pub const PLUS: &str = "plus";
pub const MINUS: &str = "minus";
pub const R_PLUS: &str = "Rplus";
pub const R_MINUS: &str = "Rminus";
pub const ZERO: &str = "zero";
pub const ONE: &str = "one";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EfoError {
    #[error("{needed} candidate types exceed the bound {bound}")]
    Capacity { needed: usize, bound: usize },
    #[error("matrix is not quantifier-free")]
    NotQuantifierFree,
    #[error("unsupported in a matrix: {0}")]
    Unsupported(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` has arity {expected}, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("sentence needs at least one variable")]
    NoVariables,
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// `∃x_1 … x_k φ` with `φ` quantifier-free over relation atoms and
/// equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfoSentence {
    pub vars: Vec<String>,
    pub matrix: Formula,
}

impl EfoSentence {
    pub fn new<S: AsRef<str>>(vars: &[S], matrix: Formula) -> Self {
        EfoSentence {
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
            matrix,
        }
    }

    pub fn k(&self) -> usize {
        self.vars.len()
    }

    /// Check the matrix against the vocabulary.
    pub fn check(&self, vocab: &Vocabulary) -> Result<(), EfoError> {
        if self.vars.is_empty() {
            return Err(EfoError::NoVariables);
        }
        check_matrix(&self.matrix, &self.vars, vocab)
    }

    /// Parse `exists x y : E(x,y) & !(x = y) | U(x)`. Connectives: `!`,
    /// `&`, `|`, parentheses, `=`, `!=`, `true`, `false`.
    pub fn parse(text: &str) -> Result<Self, EfoError> {
        let toks = tokenize(text)?;
        let mut p = Parser { toks, pos: 0 };
        p.expect_word("exists")?;
        let mut vars = Vec::new();
        while let Some((_, Tok::Ident(v))) = p.peek() {
            vars.push(v.clone());
            p.pos += 1;
        }
        if vars.is_empty() {
            return Err(EfoError::NoVariables);
        }
        p.expect(&Tok::Colon)?;
        let matrix = p.or()?;
        if let Some((pos, t)) = p.peek() {
            return Err(EfoError::Parse { pos: *pos, msg: format!("unexpected {t}") });
        }
        Ok(EfoSentence { vars, matrix })
    }
}

impl fmt::Display for EfoSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exists {} : ", self.vars.join(" "))?;
        write_matrix(&self.matrix, f)
    }
}

fn write_matrix(m: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let list = |gs: &[Formula], op: &str, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        write!(f, "(")?;
        for (i, g) in gs.iter().enumerate() {
            if i > 0 {
                write!(f, " {op} ")?;
            }
            write_matrix(g, f)?;
        }
        write!(f, ")")
    };
    match m {
        Formula::True => write!(f, "true"),
        Formula::False => write!(f, "false"),
        Formula::Rel(r, args) => {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            write!(f, "{r}({})", args.join(","))
        }
        Formula::Eq(a, b) => write!(f, "{a} = {b}"),
        Formula::Not(g) => {
            write!(f, "!")?;
            match &**g {
                Formula::Eq(..) => {
                    write!(f, "(")?;
                    write_matrix(g, f)?;
                    write!(f, ")")
                }
                g => write_matrix(g, f),
            }
        }
        Formula::And(gs) => list(gs, "&", f),
        Formula::Or(gs) => list(gs, "|", f),
        other => write!(f, "{other}"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    And,
    Or,
    Not,
    Eq,
    Neq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::And => "`&`",
            Tok::Or => "`|`",
            Tok::Not => "`!`",
            Tok::Eq => "`=`",
            Tok::Neq => "`!=`",
        };
        write!(f, "{s}")
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, EfoError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        i += 1;
        let tok = match c {
            c if c.is_whitespace() => continue,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '&' => Tok::And,
            '|' => Tok::Or,
            '=' => Tok::Eq,
            '!' if chars.get(i).map(|c| c.1) == Some('=') => {
                i += 1;
                Tok::Neq
            }
            '!' => Tok::Not,
            c if c.is_alphanumeric() || c == '_' => {
                let mut s = c.to_string();
                while let Some(&(_, d)) = chars.get(i) {
                    if d.is_alphanumeric() || d == '_' {
                        s.push(d);
                        i += 1;
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            c => return Err(EfoError::Parse { pos, msg: format!("unexpected character `{c}`") }),
        };
        out.push((pos, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(usize::MAX, |t| t.0)
    }

    fn expect(&mut self, t: &Tok) -> Result<(), EfoError> {
        match self.peek() {
            Some((_, u)) if u == t => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(EfoError::Parse { pos: self.here(), msg: format!("expected {t}") }),
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), EfoError> {
        self.expect(&Tok::Ident(w.to_string()))
    }

    fn ident(&mut self) -> Result<String, EfoError> {
        match self.peek() {
            Some((_, Tok::Ident(s))) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(EfoError::Parse { pos: self.here(), msg: "expected a name".into() }),
        }
    }

    fn or(&mut self) -> Result<Formula, EfoError> {
        let mut v = vec![self.and()?];
        while self.peek().map(|t| &t.1) == Some(&Tok::Or) {
            self.pos += 1;
            v.push(self.and()?);
        }
        Ok(if v.len() == 1 { v.pop().unwrap() } else { Formula::Or(v) })
    }

    fn and(&mut self) -> Result<Formula, EfoError> {
        let mut v = vec![self.unary()?];
        while self.peek().map(|t| &t.1) == Some(&Tok::And) {
            self.pos += 1;
            v.push(self.unary()?);
        }
        Ok(if v.len() == 1 { v.pop().unwrap() } else { Formula::And(v) })
    }

    fn unary(&mut self) -> Result<Formula, EfoError> {
        match self.peek().map(|t| t.1.clone()) {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.or()?;
                self.expect(&Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.pos += 1;
                Ok(Formula::False)
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident()?;
                match self.peek().map(|t| t.1.clone()) {
                    Some(Tok::LParen) => {
                        self.pos += 1;
                        let mut args = vec![var(&self.ident()?)];
                        while self.peek().map(|t| &t.1) == Some(&Tok::Comma) {
                            self.pos += 1;
                            args.push(var(&self.ident()?));
                        }
                        self.expect(&Tok::RParen)?;
                        Ok(rel(&name, args))
                    }
                    Some(Tok::Eq) => {
                        self.pos += 1;
                        Ok(eq(var(&name), var(&self.ident()?)))
                    }
                    Some(Tok::Neq) => {
                        self.pos += 1;
                        Ok(neq(var(&name), var(&self.ident()?)))
                    }
                    _ => Err(EfoError::Parse { pos: self.here(), msg: "expected `(`, `=` or `!=`".into() }),
                }
            }
            _ => Err(EfoError::Parse { pos: self.here(), msg: "expected a formula".into() }),
        }
    }
}

fn check_var(t: &Term, vars: &[String]) -> Result<usize, EfoError> {
    match t {
        Term::Var(v) => vars
            .iter()
            .position(|w| w == v)
            .ok_or_else(|| EfoError::UnknownVariable(v.clone())),
        other => Err(EfoError::Unsupported(format!("term `{other}`"))),
    }
}

fn check_matrix(m: &Formula, vars: &[String], vocab: &Vocabulary) -> Result<(), EfoError> {
    match m {
        Formula::True | Formula::False => Ok(()),
        Formula::Rel(r, args) => {
            let i = vocab.index_of(r).ok_or_else(|| EfoError::UnknownRelation(r.clone()))?;
            let expected = vocab.symbols()[i].arity;
            if expected != args.len() {
                return Err(EfoError::Arity { name: r.clone(), expected, got: args.len() });
            }
            args.iter().try_for_each(|a| check_var(a, vars).map(|_| ()))
        }
        Formula::Eq(a, b) => {
            check_var(a, vars)?;
            check_var(b, vars).map(|_| ())
        }
        Formula::Lt(..) => Err(EfoError::Unsupported("order atoms".into())),
        Formula::Not(g) => check_matrix(g, vars, vocab),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().try_for_each(|g| check_matrix(g, vars, vocab)),
        Formula::Exists(..) | Formula::Forall(..) => Err(EfoError::NotQuantifierFree),
    }
}

/// Evaluate a checked matrix with `value(var index)` giving the element
/// and `atom(sym, elems)` the truth of a relation atom.
fn eval_matrix<V: Copy + Eq>(
    m: &Formula,
    vars: &[String],
    value: &dyn Fn(usize) -> V,
    atom: &dyn Fn(&str, &[V]) -> bool,
) -> bool {
    let val = |t: &Term| value(check_var(t, vars).expect("checked matrix"));
    match m {
        Formula::True => true,
        Formula::False => false,
        Formula::Rel(r, args) => {
            let vs: Vec<V> = args.iter().map(val).collect();
            atom(r, &vs)
        }
        Formula::Eq(a, b) => val(a) == val(b),
        Formula::Not(g) => !eval_matrix(g, vars, value, atom),
        Formula::And(gs) => gs.iter().all(|g| eval_matrix(g, vars, value, atom)),
        Formula::Or(gs) => gs.iter().any(|g| eval_matrix(g, vars, value, atom)),
        _ => unreachable!("checked matrix"),
    }
}

/// Brute force over all `n^k` assignments (components may coincide).
pub fn efo_oracle(s: &Structure, psi: &EfoSentence) -> bool {
    all_tuples(psi.k(), s.n()).any(|a| {
        eval_matrix(&psi.matrix, &psi.vars, &|i| a[i], &|r, t: &[Elem]| s.holds(r, t))
    })
}

/// Relation atoms over positions `1..=ℓ`, in a fixed order: by symbol,
/// then lexicographically by position tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomSpace {
    pub ell: usize,
    pub atoms: Vec<(String, Vec<usize>)>,
    index: HashMap<(String, Vec<usize>), usize>,
}

impl AtomSpace {
    pub fn new(vocab: &Vocabulary, ell: usize) -> Self {
        let mut atoms = Vec::new();
        for s in vocab.symbols() {
            for t in all_tuples(s.arity, ell) {
                atoms.push((s.name.clone(), t.iter().map(|&e| e as usize).collect()));
            }
        }
        let index = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        AtomSpace { ell, atoms, index }
    }

    pub fn position(&self, sym: &str, positions: &[usize]) -> usize {
        self.index[&(sym.to_string(), positions.to_vec())]
    }

    pub fn num_types(&self) -> usize {
        1usize.checked_shl(self.atoms.len() as u32).unwrap_or(usize::MAX)
    }
}

/// A disjoint `ℓ`-type: bit `i` is the truth of atom `i` of the
/// [`AtomSpace`] for `ℓ`. Positions are unordered; equalities are implied
/// by disjointness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DisjointType {
    pub ell: usize,
    pub bits: u64,
}

impl DisjointType {
    pub fn negative(ell: usize) -> Self {
        DisjointType { ell, bits: 0 }
    }

    pub fn holds(&self, atom: usize) -> bool {
        self.bits >> atom & 1 == 1
    }

    pub fn with(self, atom: usize, value: bool) -> Self {
        let bits = if value { self.bits | 1 << atom } else { self.bits & !(1 << atom) };
        DisjointType { bits, ..self }
    }

    /// Type of a disjoint tuple in a structure.
    pub fn of(space: &AtomSpace, s: &Structure, tuple: &[Elem]) -> Self {
        let mut bits = 0u64;
        for (i, (r, pos)) in space.atoms.iter().enumerate() {
            let t: Vec<Elem> = pos.iter().map(|&p| tuple[p - 1]).collect();
            if s.holds(r, &t) {
                bits |= 1 << i;
            }
        }
        DisjointType { ell: space.ell, bits }
    }
}

/// Atom spaces for `ℓ = 1..=k`, failing if they hold more than `bound`
/// types together.
pub fn atom_spaces(vocab: &Vocabulary, k: usize, bound: usize) -> Result<Vec<AtomSpace>, EfoError> {
    let spaces: Vec<AtomSpace> = (1..=k).map(|l| AtomSpace::new(vocab, l)).collect();
    let needed = spaces.iter().fold(0usize, |acc, s| acc.saturating_add(s.num_types()));
    if needed > bound || spaces.iter().any(|s| s.atoms.len() > 63) {
        return Err(EfoError::Capacity { needed, bound });
    }
    Ok(spaces)
}

/// `θ_ψ`: the disjoint types `τ` such that some surjection
/// `m: {1..k} → {1..ℓ}` makes the matrix true under `τ` with
/// `x_i ↦ m(i)`.
pub fn types_of_sentence(psi: &EfoSentence, vocab: &Vocabulary, bound: usize) -> Result<Vec<DisjointType>, EfoError> {
    psi.check(vocab)?;
    let k = psi.k();
    let spaces = atom_spaces(vocab, k, bound)?;
    let mut out = Vec::new();
    for space in &spaces {
        let ell = space.ell;
        let maps: Vec<Vec<usize>> = all_tuples(k, ell)
            .map(|m| m.iter().map(|&e| e as usize).collect::<Vec<_>>())
            .filter(|m: &Vec<usize>| (1..=ell).all(|p| m.contains(&p)))
            .collect();
        for bits in 0..space.num_types() as u64 {
            let tau = DisjointType { ell, bits };
            let sat = maps.iter().any(|m| {
                eval_matrix(&psi.matrix, &psi.vars, &|i| m[i], &|r, pos: &[usize]| {
                    tau.holds(space.position(r, pos))
                })
            });
            if sat {
                out.push(tau);
            }
        }
    }
    Ok(out)
}

/// Brute-force `f^I_τ(x̄)`: disjoint `ℓ`-tuples of type `τ` with
/// component `I[j]` equal to `x[j]` (`I` sorted, 1-based).
pub fn type_count_oracle(s: &Structure, space: &AtomSpace, tau: DisjointType, set: &[usize], x: &[Elem]) -> u64 {
    assert_eq!(set.len(), x.len());
    all_tuples(tau.ell, s.n())
        .filter(|a| disjoint(a))
        .filter(|a| set.iter().zip(x).all(|(&i, &v)| a[i - 1] == v))
        .filter(|a| DisjointType::of(space, s, a) == tau)
        .count() as u64
}

fn disjoint(a: &[Elem]) -> bool {
    (0..a.len()).all(|i| (i + 1..a.len()).all(|j| a[i] != a[j]))
}

/// Number of base-`n` digits per count: `k`, but at least 2 so that a
/// count of `n` single elements fits.
pub fn digits(k: usize) -> usize {
    k.max(2)
}

/// Little-endian digits of `v`, element `d + 1` standing for digit `d`.
pub fn encode(mut v: u64, n: usize, len: usize) -> Vec<Elem> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((v % n as u64) as Elem + 1);
        v /= n as u64;
    }
    out
}

pub fn decode(ds: &[Elem], n: usize) -> u64 {
    ds.iter().rev().fold(0u64, |acc, &d| acc * n as u64 + (d as u64 - 1))
}

/// Digit-wise sum with carries from `plus` and `Rplus`.
pub fn add_digits(a: &[Term], b: &[Term]) -> Vec<Term> {
    arith(a, b, PLUS, R_PLUS)
}

/// Digit-wise difference with borrows from `minus` and `Rminus`.
pub fn sub_digits(a: &[Term], b: &[Term]) -> Vec<Term> {
    arith(a, b, MINUS, R_MINUS)
}

fn arith(a: &[Term], b: &[Term], f: &str, overflow: &str) -> Vec<Term> {
    let one = constant(ONE);
    let mut carry = Formula::False;
    let mut out = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let s = app(f, vec![x.clone(), y.clone()]);
        let with_carry = app(f, vec![s.clone(), one.clone()]);
        out.push(ite(carry.clone(), with_carry, s.clone()));
        carry = or(vec![
            rel(overflow, vec![x.clone(), y.clone()]),
            and(vec![carry, rel(overflow, vec![s, one.clone()])]),
        ]);
    }
    out
}

/// Name of digit `d` of `f^I_τ`; `set` is the bitmask of `I`.
pub fn count_name(tau: DisjointType, set: u32, d: usize) -> String {
    format!("f{}_{}_{}_{}", tau.ell, tau.bits, set, d)
}

fn members(set: u32) -> Vec<usize> {
    (0..32).filter(|i| set >> i & 1 == 1).map(|i| i as usize + 1).collect()
}

/// A compiled EFO program with the layout of its count functions.
#[derive(Clone, Debug)]
pub struct EfoProgram {
    pub program: DynamicProgram,
    pub sentence: EfoSentence,
    pub spaces: Vec<AtomSpace>,
    pub theta: Vec<DisjointType>,
    pub digits: usize,
}

impl EfoProgram {
    pub fn space(&self, ell: usize) -> &AtomSpace {
        &self.spaces[ell - 1]
    }

    /// Decoded `f^I_τ(x̄)` in a state (`I` sorted, 1-based).
    pub fn count(&self, st: &ProgramState, tau: DisjointType, set: &[usize], x: &[Elem]) -> u64 {
        let mask = set.iter().fold(0u32, |m, &i| m | 1 << (i - 1));
        let ds: Vec<Elem> = (0..self.digits)
            .map(|d| st.value(&count_name(tau, mask, d), x).expect("count function"))
            .collect();
        decode(&ds, st.n())
    }
}

struct Layout<'a> {
    spaces: &'a [AtomSpace],
    digits: usize,
}

impl Layout<'_> {
    fn f(&self, tau: DisjointType, set: u32, args: &[Term]) -> Vec<Term> {
        (0..self.digits).map(|d| app(&count_name(tau, set, d), args.to_vec())).collect()
    }

    /// New value of `f^I_τ(x̄)` after inserting (`insert`) or deleting
    /// `R(ȳ)`: the old count, plus tuples that gain type `τ`, minus those
    /// that lose it, summed over the proper indexings of `x̄ ∪ ȳ`.
    fn update(&self, tau: DisjointType, set: u32, sym: &str, arity: usize, insert: bool) -> Vec<Term> {
        let space = &self.spaces[tau.ell - 1];
        let fixed = members(set);
        let xs: Vec<Term> = (1..=fixed.len()).map(|j| var(&format!("x{j}"))).collect();
        let ys: Vec<Term> = (1..=arity).map(|j| var(&format!("y{j}"))).collect();
        let mut acc = self.f(tau, set, &xs);
        for ind in all_tuples(arity, tau.ell) {
            let ind: Vec<usize> = ind.iter().map(|&e| e as usize).collect();
            let atom = space.position(sym, &ind);
            // the atom flips from ¬ to + on insert, from + to ¬ on delete
            let gains = tau.holds(atom) == insert;
            let source = if gains { tau.with(atom, !insert) } else { tau };
            let mut vars: Vec<(usize, &Term)> = fixed.iter().copied().zip(&xs).collect();
            vars.extend(ind.iter().copied().zip(&ys));
            let mut proper = Vec::new();
            for (i, (p, a)) in vars.iter().enumerate() {
                for (q, b) in &vars[i + 1..] {
                    proper.push(if p == q { eq((*a).clone(), (*b).clone()) } else { neq((*a).clone(), (*b).clone()) });
                }
            }
            let mut by_pos: BTreeMap<usize, &Term> = BTreeMap::new();
            for (p, t) in &vars {
                by_pos.entry(*p).or_insert(t);
            }
            let new_set = by_pos.keys().fold(0u32, |m, p| m | 1 << (p - 1));
            let args: Vec<Term> = by_pos.values().map(|t| (*t).clone()).collect();
            let term = self.f(source, new_set, &args);
            let next = if gains { add_digits(&acc, &term) } else { sub_digits(&acc, &term) };
            let cond = and(proper);
            acc = acc
                .iter()
                .zip(next)
                .map(|(old, new)| ite(cond.clone(), new, old.clone()))
                .collect();
        }
        acc
    }
}

/// Compile `ψ` into a quantifier-free program with precomputed functions
/// maintaining `f^I_τ` for every disjoint `ℓ`-type (`ℓ ≤ k`) and
/// `I ⊆ {1..ℓ}`. The universe must have at least 2 elements for the
/// digit encoding.
pub fn compile_efo(psi: &EfoSentence, vocab: &Vocabulary) -> Result<EfoProgram, EfoError> {
    compile_efo_bounded(psi, vocab, TYPE_BOUND)
}

pub fn compile_efo_bounded(psi: &EfoSentence, vocab: &Vocabulary, bound: usize) -> Result<EfoProgram, EfoError> {
    let theta = types_of_sentence(psi, vocab, bound)?;
    let k = psi.k();
    let spaces = atom_spaces(vocab, k, bound)?;
    let digits = digits(k);
    let layout = Layout { spaces: &spaces, digits };
    let mut b = ProgramBuilder::general("efo", vocab.clone());
    b.pre_function(PLUS, 2)
        .pre_function(MINUS, 2)
        .pre_function(ZERO, 0)
        .pre_function(ONE, 0)
        .pre_relation(R_PLUS, 2)
        .pre_relation(R_MINUS, 2);
    let mut all = Vec::new();
    for space in &spaces {
        for bits in 0..space.num_types() as u64 {
            let tau = DisjointType { ell: space.ell, bits };
            for set in 0..1u32 << space.ell {
                all.push((tau, set));
                for d in 0..digits {
                    b.function(&count_name(tau, set, d), set.count_ones() as usize);
                }
            }
        }
    }
    for kind in b.kinds() {
        let (sym, insert) = match &kind {
            UpdateKind::InsR(r) => (r.clone(), true),
            UpdateKind::DelR(r) => (r.clone(), false),
            _ => unreachable!("general structures"),
        };
        let arity = vocab.symbols()[vocab.index_of(&sym).unwrap()].arity;
        let mut accept = Vec::new();
        for &(tau, set) in &all {
            let ds = layout.update(tau, set, &sym, arity, insert);
            let vars: Vec<String> = (1..=set.count_ones()).map(|j| format!("x{j}")).collect();
            let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
            if set == 0 && theta.contains(&tau) {
                accept.extend(ds.iter().map(|d| neq(d.clone(), constant(ZERO))));
            }
            for (d, t) in ds.into_iter().enumerate() {
                b.update_fun(&kind, &count_name(tau, set, d), &vars, t);
            }
        }
        b.update_rel(&kind, ACCEPT, &[], or(accept));
    }
    let (all_c, theta_c) = (all.clone(), theta.clone());
    b.precompute(move |n| precompute(n, &all_c, &theta_c, digits));
    let program = b.build().expect("efo program is well formed");
    Ok(EfoProgram {
        program,
        sentence: psi.clone(),
        spaces,
        theta,
        digits,
    })
}

/// Disjoint extensions of a disjoint `|I|`-tuple to an `ℓ`-tuple:
/// `(n−|I|)(n−|I|−1)⋯(n−ℓ+1)`.
pub fn extensions(n: usize, fixed: usize, ell: usize) -> u64 {
    (fixed..ell).map(|j| n.saturating_sub(j) as u64).product()
}

fn precompute(n: usize, all: &[(DisjointType, u32)], theta: &[DisjointType], digits: usize) -> PrecomputedTables {
    let mut t = PrecomputedTables::default();
    let d = |e: Elem| e as usize - 1;
    let elem = |v: usize| (v % n) as Elem + 1;
    t.functions.insert(PLUS.into(), FunTable::from_fn(2, n, |a| elem(d(a[0]) + d(a[1]))));
    t.functions.insert(MINUS.into(), FunTable::from_fn(2, n, |a| elem(n + d(a[0]) - d(a[1]))));
    t.functions.insert(ZERO.into(), FunTable::from_fn(0, n, |_| 1));
    t.functions.insert(ONE.into(), FunTable::from_fn(0, n, |_| elem(1)));
    let mut rp = RelTable::new(2, n);
    let mut rm = RelTable::new(2, n);
    for a in all_tuples(2, n) {
        rp.set(&a, d(a[0]) + d(a[1]) >= n);
        rm.set(&a, a[0] < a[1]);
    }
    t.relations.insert(R_PLUS.into(), rp);
    t.relations.insert(R_MINUS.into(), rm);
    for &(tau, set) in all {
        let arity = set.count_ones() as usize;
        let value = |x: &[Elem]| {
            if tau.bits == 0 && disjoint(x) {
                extensions(n, arity, tau.ell)
            } else {
                0
            }
        };
        for dd in 0..digits {
            let table = FunTable::from_fn(arity, n, |x| encode(value(x), n, digits)[dd]);
            t.functions.insert(count_name(tau, set, dd), table);
        }
    }
    let mut acc = RelTable::new(0, n);
    acc.set(&[], theta.iter().any(|tau| tau.bits == 0 && tau.ell <= n));
    t.relations.insert(ACCEPT.into(), acc);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::engine::{eval_term, Engine};
    use crate::formula::program::Tier;
    use crate::structure::{new_empty_structure, ConcreteUpdate, Symbol};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph() -> Vocabulary {
        Vocabulary::general(vec![Symbol::new("E", 2)]).unwrap()
    }

    fn graph_u() -> Vocabulary {
        Vocabulary::general(vec![Symbol::new("E", 2), Symbol::new("U", 1)]).unwrap()
    }

    fn edge() -> EfoSentence {
        EfoSentence::parse("exists x y : E(x,y)").unwrap()
    }

    #[test]
    fn parse_and_print() {
        let s = EfoSentence::parse("exists x y : E(x,y) & !E(y,x) | x = y & !(x != y)").unwrap();
        assert_eq!(s.vars, vec!["x", "y"]);
        assert_eq!(EfoSentence::parse(&s.to_string()).unwrap(), s);
        assert!(matches!(EfoSentence::parse("exists : true"), Err(EfoError::NoVariables)));
        assert!(matches!(EfoSentence::parse("exists x : E(x"), Err(EfoError::Parse { .. })));
        assert!(matches!(
            EfoSentence::parse("exists x : E(x)").unwrap().check(&graph()),
            Err(EfoError::Arity { .. })
        ));
    }

    #[test]
    fn theta_examples() {
        let v = graph();
        let theta = types_of_sentence(&edge(), &v, TYPE_BOUND).unwrap();
        let s1 = AtomSpace::new(&v, 1);
        let s2 = AtomSpace::new(&v, 2);
        let ones: Vec<_> = theta.iter().filter(|t| t.ell == 1).collect();
        assert_eq!(ones, vec![&DisjointType { ell: 1, bits: 1 << s1.position("E", &[1, 1]) }]);
        let (a, b) = (s2.position("E", &[1, 2]), s2.position("E", &[2, 1]));
        for bits in 0..16u64 {
            let tau = DisjointType { ell: 2, bits };
            assert_eq!(theta.contains(&tau), tau.holds(a) || tau.holds(b));
        }
        let all = types_of_sentence(&EfoSentence::parse("exists x : true").unwrap(), &v, TYPE_BOUND).unwrap();
        assert_eq!(all.len(), 2);
        let none = EfoSentence::parse("exists x : E(x,x) & !E(x,x)").unwrap();
        assert!(types_of_sentence(&none, &v, TYPE_BOUND).unwrap().is_empty());
        assert!(matches!(types_of_sentence(&edge(), &v, 10), Err(EfoError::Capacity { .. })));
    }

    #[test]
    fn oracle_examples() {
        let v = graph();
        let mut s = new_empty_structure(&v, 3).unwrap();
        assert!(!efo_oracle(&s, &edge()));
        s.apply(&ConcreteUpdate::InsTuple("E".into(), vec![2, 2])).unwrap();
        assert!(efo_oracle(&s, &edge()));
        let space = AtomSpace::new(&v, 2);
        let e = new_empty_structure(&v, 4).unwrap();
        assert_eq!(type_count_oracle(&e, &space, DisjointType::negative(2), &[], &[]), 12);
        assert_eq!(type_count_oracle(&e, &space, DisjointType { ell: 2, bits: 1 }, &[], &[]), 0);
        assert_eq!(type_count_oracle(&e, &space, DisjointType::negative(2), &[1], &[3]), 3);
    }

    #[test]
    fn edge_program_examples() {
        let v = graph();
        let p = compile_efo(&edge(), &v).unwrap();
        assert_eq!(p.program.tier, Tier::QF);
        let e = Engine::new(&p.program).unwrap();
        let ins = ConcreteUpdate::InsTuple("E".into(), vec![1, 2]);
        let del = ConcreteUpdate::DelTuple("E".into(), vec![1, 2]);
        assert_eq!(e.run(3, &[ins.clone(), del]).unwrap(), vec![true, false]);
        let mut st = e.initial_state(3).unwrap();
        e.apply(&mut st, &ins).unwrap();
        let s2 = p.space(2);
        let tau = DisjointType { ell: 2, bits: 1 << s2.position("E", &[1, 2]) };
        assert_eq!(p.count(&st, tau, &[], &[]), 1);
        let st4 = e.initial_state(4).unwrap();
        assert_eq!(p.count(&st4, DisjointType::negative(2), &[], &[]), 12);
    }

    #[test]
    fn digit_arithmetic_is_exact() {
        let p = compile_efo(&edge(), &graph()).unwrap();
        let e = Engine::new(&p.program).unwrap();
        let a: Vec<Term> = (0..2).map(|i| var(&format!("a{i}"))).collect();
        let b: Vec<Term> = (0..2).map(|i| var(&format!("b{i}"))).collect();
        let (sum, diff) = (add_digits(&a, &b), sub_digits(&a, &b));
        for n in 2..=4usize {
            let st = e.initial_state(n).unwrap();
            let m = (n * n) as u64;
            for x in 0..m {
                for y in 0..m {
                    let (dx, dy) = (encode(x, n, 2), encode(y, n, 2));
                    let env: HashMap<String, Elem> = [("a0", dx[0]), ("a1", dx[1]), ("b0", dy[0]), ("b1", dy[1])]
                        .iter()
                        .map(|(k, v)| (k.to_string(), *v))
                        .collect();
                    let got = |ts: &[Term]| {
                        let ds: Vec<Elem> = ts.iter().map(|t| eval_term(&st, t, &env).unwrap()).collect();
                        decode(&ds, n)
                    };
                    assert_eq!(got(&sum), (x + y) % m);
                    assert_eq!(got(&diff), (x + m - y) % m);
                }
            }
        }
    }

    fn random_matrix(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
        let v = |rng: &mut ChaCha8Rng| var(["x", "y"][rng.gen_range(0..2)]);
        if depth == 0 || rng.gen_bool(0.3) {
            return match rng.gen_range(0..4) {
                0 => eq(v(rng), v(rng)),
                1 => rel("U", vec![v(rng)]),
                _ => rel("E", vec![v(rng), v(rng)]),
            };
        }
        match rng.gen_range(0..3) {
            0 => not(random_matrix(rng, depth - 1)),
            1 => and(vec![random_matrix(rng, depth - 1), random_matrix(rng, depth - 1)]),
            _ => or(vec![random_matrix(rng, depth - 1), random_matrix(rng, depth - 1)]),
        }
    }

    #[test]
    fn counts_match_brute_force() {
        let v = graph_u();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for round in 0..6 {
            let psi = EfoSentence::new(&["x", "y"][..1 + round % 2], random_matrix(&mut rng, 3));
            let psi = if psi.check(&v).is_err() { EfoSentence::new(&["x", "y"], psi.matrix) } else { psi };
            let p = compile_efo(&psi, &v).unwrap();
            let e = Engine::new(&p.program).unwrap();
            let n = rng.gen_range(2..=4usize);
            let mut st = e.initial_state(n).unwrap();
            let mut s = new_empty_structure(&v, n).unwrap();
            for _ in 0..8 {
                let u = if rng.gen_bool(0.5) {
                    let t = vec![rng.gen_range(1..=n as Elem), rng.gen_range(1..=n as Elem)];
                    if rng.gen_bool(0.7) { ConcreteUpdate::InsTuple("E".into(), t) } else { ConcreteUpdate::DelTuple("E".into(), t) }
                } else {
                    let t = vec![rng.gen_range(1..=n as Elem)];
                    if rng.gen_bool(0.7) { ConcreteUpdate::InsTuple("U".into(), t) } else { ConcreteUpdate::DelTuple("U".into(), t) }
                };
                e.apply(&mut st, &u).unwrap();
                s.apply(&u).unwrap();
                assert_eq!(st.accept(), efo_oracle(&s, &psi), "{psi}");
                for space in &p.spaces {
                    let mut total = 0;
                    for bits in 0..space.num_types() as u64 {
                        let tau = DisjointType { ell: space.ell, bits };
                        for set in 0..1u32 << space.ell {
                            let idx = members(set);
                            for x in all_tuples(idx.len(), n) {
                                let expect = type_count_oracle(&s, space, tau, &idx, &x);
                                assert_eq!(p.count(&st, tau, &idx, &x), expect, "{tau:?} {idx:?} {x:?}");
                            }
                        }
                        total += p.count(&st, tau, &[], &[]);
                    }
                    assert_eq!(total, extensions(n, 0, space.ell));
                }
            }
        }
    }
}
