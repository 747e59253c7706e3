// SPDX-License-Identifier: Apache-2.0

//! Dynamic programs: schema, update rules, initialization and tiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::ast::{has_quantifier, visit_symbols_formula, visit_symbols_term, Formula, Term};
use crate::structure::{FunTable, RelTable, Symbol, Vocabulary};

/// Name of the distinguished 0-ary relation.
pub const ACCEPT: &str = "accept";

/// Built-in successor, predecessor and minimum.
pub const SUCC: &str = "succ";
pub const PRE: &str = "pre";
pub const MIN: &str = "min";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Prop,
    PropSucc,
    QF,
    FO,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tier::Prop => "DynProp",
            Tier::PropSucc => "DynProp(SetSucc)",
            Tier::QF => "DynQF",
            Tier::FO => "DynFO",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UpdateKind {
    Ins(String),
    Reset,
    InsR(String),
    DelR(String),
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdateKind::Ins(s) => write!(f, "ins_{s}"),
            UpdateKind::Reset => write!(f, "reset"),
            UpdateKind::InsR(r) => write!(f, "ins_{r}"),
            UpdateKind::DelR(r) => write!(f, "del_{r}"),
        }
    }
}

/// An update rule: the variables name the tuple being (re)computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule<B> {
    pub vars: Vec<String>,
    pub body: B,
}

impl<B> Rule<B> {
    pub fn new(vars: &[&str], body: B) -> Self {
        Rule {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            body,
        }
    }
}

/// Update definitions of one abstract update.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateDef {
    pub kind: UpdateKind,
    /// Names of the update position variables (`y`, or `y1..yk`).
    pub params: Vec<String>,
    pub relations: BTreeMap<String, Rule<Formula>>,
    pub functions: BTreeMap<String, Rule<Term>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    /// Updatable relations, `accept` included.
    pub relations: Vec<Symbol>,
    /// Updatable functions.
    pub functions: Vec<Symbol>,
    pub pre_relations: Vec<Symbol>,
    pub pre_functions: Vec<Symbol>,
    /// Whether `succ`, `pre` and `min` are available.
    pub builtins: bool,
}

impl Schema {
    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations
            .iter()
            .chain(&self.pre_relations)
            .find(|s| s.name == name)
            .map(|s| s.arity)
    }

    pub fn function_arity(&self, name: &str) -> Option<usize> {
        if let Some(s) = self
            .functions
            .iter()
            .chain(&self.pre_functions)
            .find(|s| s.name == name)
        {
            return Some(s.arity);
        }
        if self.builtins {
            return builtin_arity(name);
        }
        None
    }

    pub fn is_updatable(&self, name: &str) -> bool {
        self.relations.iter().any(|s| s.name == name)
            || self.functions.iter().any(|s| s.name == name)
    }

    pub fn all_names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .relations
            .iter()
            .chain(&self.functions)
            .chain(&self.pre_relations)
            .chain(&self.pre_functions)
            .map(|s| s.name.as_str())
            .collect();
        if self.builtins {
            v.extend([SUCC, PRE, MIN]);
        }
        v
    }
}

pub fn builtin_arity(name: &str) -> Option<usize> {
    match name {
        SUCC | PRE => Some(1),
        MIN => Some(0),
        _ => None,
    }
}

/// Tables supplied per universe size. Entries for updatable symbols are
/// taken as their initial contents.
#[derive(Clone, Debug, Default)]
pub struct PrecomputedTables {
    pub relations: BTreeMap<String, RelTable>,
    pub functions: BTreeMap<String, FunTable>,
}

pub type Precompute = Arc<dyn Fn(usize) -> PrecomputedTables + Send + Sync>;

#[derive(Clone)]
pub struct DynamicProgram {
    pub name: String,
    pub input: Vocabulary,
    pub updates: Vec<UpdateDef>,
    pub schema: Schema,
    pub rel_init: BTreeMap<String, Rule<Formula>>,
    pub fun_init: BTreeMap<String, Rule<Term>>,
    pub tier: Tier,
    pub precompute: Option<Precompute>,
    /// Change-only mode: every position starts with this label.
    pub initial_label: Option<String>,
    /// The 0-ary flag added by [`eliminate_init`](super::eliminate_init).
    pub init_flag: Option<String>,
}

impl fmt::Debug for DynamicProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicProgram")
            .field("name", &self.name)
            .field("input", &self.input)
            .field("schema", &self.schema)
            .field("tier", &self.tier)
            .field("updates", &self.updates.len())
            .field("precompute", &self.precompute.is_some())
            .field("initial_label", &self.initial_label)
            .finish()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("program has no 0-ary `accept` relation")]
    NoAccept,
    #[error("symbol `{0}` declared twice")]
    Duplicate(String),
    #[error("update {update} has no definition for `{symbol}`")]
    MissingRule { update: String, symbol: String },
    #[error("update {update} defines unknown symbol `{symbol}`")]
    ExtraRule { update: String, symbol: String },
    #[error("rule for `{symbol}` has {got} variables, arity is {expected}")]
    RuleArity {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{name}` used with {got} arguments, arity is {expected}")]
    UseArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("free variable `{var}` in rule for `{symbol}`")]
    FreeVariable { symbol: String, var: String },
    #[error("initialization of `{0}` reads an updatable symbol")]
    InitReadsAux(String),
    #[error("{0}")]
    Other(String),
}

impl DynamicProgram {
    pub fn update(&self, kind: &UpdateKind) -> Option<&UpdateDef> {
        self.updates.iter().find(|u| &u.kind == kind)
    }

    pub fn is_word_mode(&self) -> bool {
        self.input.is_word()
    }

    pub fn has_init(&self) -> bool {
        !self.rel_init.is_empty() || !self.fun_init.is_empty()
    }

    /// Total syntactic size of all update rules.
    pub fn size(&self) -> usize {
        self.updates
            .iter()
            .map(|u| {
                u.relations.values().map(|r| r.body.size()).sum::<usize>()
                    + u.functions.values().map(|r| r.body.size()).sum::<usize>()
            })
            .sum()
    }

    fn symbol_arity(&self, name: &str, func: bool) -> Option<usize> {
        if func {
            self.schema.function_arity(name)
        } else {
            self.schema
                .relation_arity(name)
                .or_else(|| self.input.index_of(name).map(|i| self.input.symbols()[i].arity))
        }
    }

    fn check_uses_formula(&self, f: &Formula) -> Result<(), ProgramError> {
        let mut err = None;
        visit_symbols_formula(f, &mut |name, arity, func| {
            if err.is_some() {
                return;
            }
            err = self.check_use(name, arity, func).err();
        });
        err.map_or(Ok(()), Err)
    }

    fn check_uses_term(&self, t: &Term) -> Result<(), ProgramError> {
        let mut err = None;
        visit_symbols_term(t, &mut |name, arity, func| {
            if err.is_some() {
                return;
            }
            err = self.check_use(name, arity, func).err();
        });
        err.map_or(Ok(()), Err)
    }

    fn check_use(&self, name: &str, arity: usize, func: bool) -> Result<(), ProgramError> {
        match self.symbol_arity(name, func) {
            None => Err(ProgramError::UnknownSymbol(name.to_string())),
            Some(a) if a != arity => Err(ProgramError::UseArity {
                name: name.to_string(),
                expected: a,
                got: arity,
            }),
            _ => Ok(()),
        }
    }

    /// Check the structural invariants of the program.
    pub fn validate(&self) -> Result<(), ProgramError> {
        match self.schema.relations.iter().find(|s| s.name == ACCEPT) {
            Some(s) if s.arity == 0 => {}
            _ => return Err(ProgramError::NoAccept),
        }
        let mut seen = BTreeSet::new();
        for name in self
            .schema
            .all_names()
            .into_iter()
            .chain(self.input.symbols().iter().map(|s| s.name.as_str()))
        {
            if !seen.insert(name) {
                return Err(ProgramError::Duplicate(name.to_string()));
            }
        }
        for u in &self.updates {
            let params: BTreeSet<&str> = u.params.iter().map(String::as_str).collect();
            for s in &self.schema.relations {
                let rule = u.relations.get(&s.name).ok_or_else(|| ProgramError::MissingRule {
                    update: u.kind.to_string(),
                    symbol: s.name.clone(),
                })?;
                check_rule_vars(&s.name, s.arity, &rule.vars, &params, rule.body.free_var_set())?;
                self.check_uses_formula(&rule.body)?;
            }
            for s in &self.schema.functions {
                let rule = u.functions.get(&s.name).ok_or_else(|| ProgramError::MissingRule {
                    update: u.kind.to_string(),
                    symbol: s.name.clone(),
                })?;
                let mut fv = BTreeSet::new();
                rule.body.free_vars(&mut fv);
                check_rule_vars(&s.name, s.arity, &rule.vars, &params, fv)?;
                self.check_uses_term(&rule.body)?;
            }
            for name in u.relations.keys() {
                if !self.schema.relations.iter().any(|s| &s.name == name) {
                    return Err(ProgramError::ExtraRule {
                        update: u.kind.to_string(),
                        symbol: name.clone(),
                    });
                }
            }
            for name in u.functions.keys() {
                if !self.schema.functions.iter().any(|s| &s.name == name) {
                    return Err(ProgramError::ExtraRule {
                        update: u.kind.to_string(),
                        symbol: name.clone(),
                    });
                }
            }
        }
        let none = BTreeSet::new();
        for (name, rule) in &self.rel_init {
            let arity = self
                .schema
                .relations
                .iter()
                .find(|s| &s.name == name)
                .ok_or_else(|| ProgramError::UnknownSymbol(name.clone()))?
                .arity;
            check_rule_vars(name, arity, &rule.vars, &none, rule.body.free_var_set())?;
            self.check_uses_formula(&rule.body)?;
            self.check_init_reads(name, |v| visit_symbols_formula(&rule.body, v))?;
        }
        for (name, rule) in &self.fun_init {
            let arity = self
                .schema
                .functions
                .iter()
                .find(|s| &s.name == name)
                .ok_or_else(|| ProgramError::UnknownSymbol(name.clone()))?
                .arity;
            let mut fv = BTreeSet::new();
            rule.body.free_vars(&mut fv);
            check_rule_vars(name, arity, &rule.vars, &none, fv)?;
            self.check_uses_term(&rule.body)?;
            self.check_init_reads(name, |v| visit_symbols_term(&rule.body, v))?;
        }
        Ok(())
    }

    fn check_init_reads(
        &self,
        name: &str,
        visit: impl FnOnce(&mut dyn FnMut(&str, usize, bool)),
    ) -> Result<(), ProgramError> {
        let mut bad = false;
        visit(&mut |s, _, _| bad |= self.schema.is_updatable(s));
        if bad {
            Err(ProgramError::InitReadsAux(name.to_string()))
        } else {
            Ok(())
        }
    }

    /// Every formula and term of the program, for structural scans.
    pub fn for_each_body(&self, mut f: impl FnMut(Body<'_>)) {
        for u in &self.updates {
            u.relations.values().for_each(|r| f(Body::Formula(&r.body)));
            u.functions.values().for_each(|r| f(Body::Term(&r.body)));
        }
        self.rel_init.values().for_each(|r| f(Body::Formula(&r.body)));
        self.fun_init.values().for_each(|r| f(Body::Term(&r.body)));
    }
}

pub enum Body<'a> {
    Formula(&'a Formula),
    Term(&'a Term),
}

fn check_rule_vars(
    symbol: &str,
    arity: usize,
    vars: &[String],
    params: &BTreeSet<&str>,
    free: BTreeSet<String>,
) -> Result<(), ProgramError> {
    if vars.len() != arity {
        return Err(ProgramError::RuleArity {
            symbol: symbol.to_string(),
            expected: arity,
            got: vars.len(),
        });
    }
    for v in free {
        if !vars.contains(&v) && !params.contains(v.as_str()) {
            return Err(ProgramError::FreeVariable {
                symbol: symbol.to_string(),
                var: v,
            });
        }
    }
    Ok(())
}

/// The least tier admitting the program, by a structural scan.
pub fn check_tier(p: &DynamicProgram) -> Tier {
    let mut quantifiers = false;
    let mut functions = !p.schema.functions.is_empty();
    let mut succ = false;
    p.for_each_body(|b| {
        let mut visit = |name: &str, _: usize, func: bool| {
            if func {
                if p.schema.builtins && builtin_arity(name).is_some() {
                    succ = true;
                } else {
                    functions = true;
                }
            }
        };
        match b {
            Body::Formula(f) => {
                quantifiers |= has_quantifier(f);
                visit_symbols_formula(f, &mut visit);
            }
            Body::Term(t) => {
                quantifiers |= t.quantifier_depth() > 0;
                visit_symbols_term(t, &mut visit);
            }
        }
    });
    if quantifiers {
        Tier::FO
    } else if functions {
        Tier::QF
    } else if succ {
        Tier::PropSucc
    } else {
        Tier::Prop
    }
}

/// Incremental construction of a [`DynamicProgram`].
pub struct ProgramBuilder {
    p: DynamicProgram,
}

fn word_updates(alphabet: &[String], with_reset: bool) -> Vec<UpdateDef> {
    let mut kinds: Vec<UpdateKind> = alphabet.iter().map(|s| UpdateKind::Ins(s.clone())).collect();
    if with_reset {
        kinds.push(UpdateKind::Reset);
    }
    kinds
        .into_iter()
        .map(|kind| UpdateDef {
            kind,
            params: vec!["y".to_string()],
            relations: BTreeMap::new(),
            functions: BTreeMap::new(),
        })
        .collect()
}

impl ProgramBuilder {
    fn empty(name: &str, input: Vocabulary, updates: Vec<UpdateDef>) -> Self {
        ProgramBuilder {
            p: DynamicProgram {
                name: name.to_string(),
                input,
                updates,
                schema: Schema {
                    relations: vec![Symbol::new(ACCEPT, 0)],
                    ..Schema::default()
                },
                rel_init: BTreeMap::new(),
                fun_init: BTreeMap::new(),
                tier: Tier::Prop,
                precompute: None,
                initial_label: None,
                init_flag: None,
            },
        }
    }

    /// Word mode over an alphabet, with `ins_σ` for each letter and `reset`.
    /// Update formulas use the position variable `y`.
    pub fn word<S: AsRef<str>>(name: &str, alphabet: &[S]) -> Self {
        let input = Vocabulary::word(alphabet).expect("alphabet letters must be distinct");
        let updates = word_updates(&input.alphabet(), true);
        Self::empty(name, input, updates)
    }

    /// Change-only mode: only `ins_σ` updates, every position starts as `initial`.
    pub fn change_only<S: AsRef<str>>(name: &str, alphabet: &[S], initial: &str) -> Self {
        let input = Vocabulary::word(alphabet).expect("alphabet letters must be distinct");
        let updates = word_updates(&input.alphabet(), false);
        let mut b = Self::empty(name, input, updates);
        b.p.initial_label = Some(initial.to_string());
        b
    }

    /// General structures: `ins_R`/`del_R` per relation, with position
    /// variables `y1..yk`.
    pub fn general(name: &str, input: Vocabulary) -> Self {
        let mut updates = Vec::new();
        for s in input.symbols() {
            let params: Vec<String> = (1..=s.arity).map(|i| format!("y{i}")).collect();
            for kind in [UpdateKind::InsR(s.name.clone()), UpdateKind::DelR(s.name.clone())] {
                updates.push(UpdateDef {
                    kind,
                    params: params.clone(),
                    relations: BTreeMap::new(),
                    functions: BTreeMap::new(),
                });
            }
        }
        Self::empty(name, input, updates)
    }

    pub fn kinds(&self) -> Vec<UpdateKind> {
        self.p.updates.iter().map(|u| u.kind.clone()).collect()
    }

    pub fn relation(&mut self, name: &str, arity: usize) -> &mut Self {
        self.p.schema.relations.push(Symbol::new(name, arity));
        self
    }

    pub fn function(&mut self, name: &str, arity: usize) -> &mut Self {
        self.p.schema.functions.push(Symbol::new(name, arity));
        self
    }

    pub fn pre_relation(&mut self, name: &str, arity: usize) -> &mut Self {
        self.p.schema.pre_relations.push(Symbol::new(name, arity));
        self
    }

    pub fn pre_function(&mut self, name: &str, arity: usize) -> &mut Self {
        self.p.schema.pre_functions.push(Symbol::new(name, arity));
        self
    }

    pub fn builtins(&mut self) -> &mut Self {
        self.p.schema.builtins = true;
        self
    }

    pub fn precompute(&mut self, f: impl Fn(usize) -> PrecomputedTables + Send + Sync + 'static) -> &mut Self {
        self.p.precompute = Some(Arc::new(f));
        self
    }

    fn def_mut(&mut self, kind: &UpdateKind) -> &mut UpdateDef {
        self.p
            .updates
            .iter_mut()
            .find(|u| &u.kind == kind)
            .unwrap_or_else(|| panic!("no update {kind}"))
    }

    pub fn update_rel(&mut self, kind: &UpdateKind, sym: &str, vars: &[&str], body: Formula) -> &mut Self {
        self.def_mut(kind)
            .relations
            .insert(sym.to_string(), Rule::new(vars, body));
        self
    }

    pub fn update_fun(&mut self, kind: &UpdateKind, sym: &str, vars: &[&str], body: Term) -> &mut Self {
        self.def_mut(kind)
            .functions
            .insert(sym.to_string(), Rule::new(vars, body));
        self
    }

    pub fn init_rel(&mut self, sym: &str, vars: &[&str], body: Formula) -> &mut Self {
        self.p.rel_init.insert(sym.to_string(), Rule::new(vars, body));
        self
    }

    pub fn init_fun(&mut self, sym: &str, vars: &[&str], body: Term) -> &mut Self {
        self.p.fun_init.insert(sym.to_string(), Rule::new(vars, body));
        self
    }

    /// Validate and tag with the tier found by [`check_tier`].
    pub fn build(self) -> Result<DynamicProgram, ProgramError> {
        let mut p = self.p;
        p.validate()?;
        p.tier = check_tier(&p);
        Ok(p)
    }
}
