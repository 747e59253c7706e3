// SPDX-License-Identifier: Apache-2.0

//! Language families: spec files, compiled programs and oracles.
//!
//! Spec file formats:
//!
//! | family    | format |
//! |-----------|--------|
//! | `regular` | DFA text format, or `alphabet:` plus `regex:` |
//! | `dyck1`   | empty |
//! | `dyckn`   | `kinds: <k>` |
//! | `cfl`     | CNF grammar (`nonterminals:`, `start:`, `terminals:`, `rule:`) |
//! | `eqr`     | `r: <r>` and `variant: succ` or `variant: qf` |
//! | `efo`     | `vocabulary: E/2 U/1` and `sentence: exists x y : …` |
//! | `tree`    | tree automaton (`states:`, `init:`, `delta:`, `accept:`) |

use std::fmt;
use std::str::FromStr;

use dynlang::cfl::{augment_cnf, compile_cfl, cyk_oracle, CnfGrammar};
use dynlang::counting::{count_oracle, eqr_program_qf, eqr_program_succ};
use dynlang::dyck::{bracket_oracle, dyck1_program, dyckn_program, BracketAlphabet};
use dynlang::efo::{compile_efo, efo_oracle, EfoProgram, EfoSentence};
use dynlang::regular::{compile_regular, Dfa};
use dynlang::structure::{word_of, ConcreteUpdate, Structure, Symbol, Vocabulary};
use dynlang::trees::{compile_tree, labels_of, tree_oracle, tree_universe, TreeAutomaton};
use dynlang::DynamicProgram;
use thiserror::Error;

use crate::formats::{parse_dfa, print_dfa, regex_to_dfa};
use crate::script::{ScriptItem, UpdateScript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Regular,
    Dyck1,
    Dyckn,
    Cfl,
    Eqr,
    Efo,
    Tree,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Regular,
        Family::Dyck1,
        Family::Dyckn,
        Family::Cfl,
        Family::Eqr,
        Family::Efo,
        Family::Tree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Regular => "regular",
            Family::Dyck1 => "dyck1",
            Family::Dyckn => "dyckn",
            Family::Cfl => "cfl",
            Family::Eqr => "eqr",
            Family::Efo => "efo",
            Family::Tree => "tree",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| SpecError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("unknown family `{0}` (expected regular, dyck1, dyckn, cfl, eqr, efo or tree)")]
    UnknownFamily(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// A concrete member of a family.
#[derive(Clone, Debug)]
pub enum Spec {
    Regular(Dfa),
    Dyck1,
    Dyckn(usize),
    /// A grammar as written; augmented when compiled.
    Cfl(CnfGrammar),
    Eqr { r: usize, qf: bool },
    Efo { vocab: Vocabulary, sentence: EfoSentence },
    Tree(TreeAutomaton),
}

pub fn augmented(g: &CnfGrammar) -> CnfGrammar {
    if g.is_augmented() {
        g.clone()
    } else {
        augment_cnf(g)
    }
}

/// `key: value` lines; `#` comments and blank lines skipped.
fn key_values(text: &str) -> Result<Vec<(usize, String, String)>, SpecError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        let (k, v) = l
            .split_once(':')
            .ok_or(SpecError::Parse { line: i + 1, msg: "expected `key: value`".into() })?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn lookup<'a>(kv: &'a [(usize, String, String)], key: &str) -> Result<(usize, &'a str), SpecError> {
    kv.iter()
        .find(|(_, k, _)| k == key)
        .map(|(l, _, v)| (*l, v.as_str()))
        .ok_or_else(|| SpecError::Invalid(format!("missing `{key}:` line")))
}

fn only_keys(kv: &[(usize, String, String)], keys: &[&str]) -> Result<(), SpecError> {
    match kv.iter().find(|(_, k, _)| !keys.contains(&k.as_str())) {
        Some((line, k, _)) => Err(SpecError::Parse { line: *line, msg: format!("unknown key `{k}`") }),
        None => Ok(()),
    }
}

fn number(line: usize, v: &str) -> Result<usize, SpecError> {
    v.parse().map_err(|_| SpecError::Parse { line, msg: format!("expected a number, got `{v}`") })
}

impl Spec {
    pub fn parse(family: Family, text: &str) -> Result<Spec, SpecError> {
        let invalid = |e: &dyn fmt::Display| SpecError::Invalid(e.to_string());
        match family {
            Family::Regular => {
                let kv = key_values(text)?;
                if kv.iter().any(|(_, k, _)| k == "regex") {
                    only_keys(&kv, &["alphabet", "regex"])?;
                    let (_, a) = lookup(&kv, "alphabet")?;
                    let (_, re) = lookup(&kv, "regex")?;
                    let alphabet: Vec<&str> = a.split_whitespace().collect();
                    regex_to_dfa(re, &alphabet).map(Spec::Regular).map_err(|e| invalid(&e))
                } else {
                    parse_dfa(text).map(Spec::Regular).map_err(|e| invalid(&e))
                }
            }
            Family::Dyck1 => {
                let kv = key_values(text)?;
                only_keys(&kv, &["kinds"])?;
                match lookup(&kv, "kinds") {
                    Ok((l, v)) if number(l, v)? != 1 => Err(SpecError::Parse { line: l, msg: "dyck1 has one kind".into() }),
                    _ => Ok(Spec::Dyck1),
                }
            }
            Family::Dyckn => {
                let kv = key_values(text)?;
                only_keys(&kv, &["kinds"])?;
                let (l, v) = lookup(&kv, "kinds")?;
                match number(l, v)? {
                    0 => Err(SpecError::Parse { line: l, msg: "need at least one kind".into() }),
                    k => Ok(Spec::Dyckn(k)),
                }
            }
            Family::Cfl => {
                CnfGrammar::parse(text).map(Spec::Cfl).map_err(|e| invalid(&e))
            }
            Family::Eqr => {
                let kv = key_values(text)?;
                only_keys(&kv, &["r", "variant"])?;
                let (l, v) = lookup(&kv, "r")?;
                let r = number(l, v)?;
                if r == 0 {
                    return Err(SpecError::Parse { line: l, msg: "r must be positive".into() });
                }
                let qf = match lookup(&kv, "variant") {
                    Ok((_, "succ")) | Err(_) => false,
                    Ok((_, "qf")) => true,
                    Ok((l, v)) => return Err(SpecError::Parse { line: l, msg: format!("unknown variant `{v}`") }),
                };
                Ok(Spec::Eqr { r, qf })
            }
            Family::Efo => {
                let kv = key_values(text)?;
                only_keys(&kv, &["vocabulary", "sentence"])?;
                let (l, v) = lookup(&kv, "vocabulary")?;
                let mut symbols = Vec::new();
                for w in v.split_whitespace() {
                    let (name, arity) = w
                        .split_once('/')
                        .ok_or(SpecError::Parse { line: l, msg: format!("expected `Name/arity`, got `{w}`") })?;
                    symbols.push(Symbol::new(name, number(l, arity)?));
                }
                let vocab = Vocabulary::general(symbols).map_err(|e| invalid(&e))?;
                let (l, s) = lookup(&kv, "sentence")?;
                let sentence = EfoSentence::parse(s).map_err(|e| SpecError::Parse { line: l, msg: e.to_string() })?;
                sentence.check(&vocab).map_err(|e| invalid(&e))?;
                Ok(Spec::Efo { vocab, sentence })
            }
            Family::Tree => {
                let a = TreeAutomaton::parse(text).map_err(|e| invalid(&e))?;
                Ok(Spec::Tree(a))
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Spec::Regular(_) => Family::Regular,
            Spec::Dyck1 => Family::Dyck1,
            Spec::Dyckn(_) => Family::Dyckn,
            Spec::Cfl(_) => Family::Cfl,
            Spec::Eqr { .. } => Family::Eqr,
            Spec::Efo { .. } => Family::Efo,
            Spec::Tree(_) => Family::Tree,
        }
    }

    /// Compile to a dynamic program. EFO specs also return the count layout.
    pub fn compile(&self) -> Result<(DynamicProgram, Option<EfoProgram>), SpecError> {
        let invalid = |e: &dyn fmt::Display| SpecError::Invalid(e.to_string());
        Ok(match self {
            Spec::Regular(a) => (compile_regular(a), None),
            Spec::Dyck1 => (dyck1_program(), None),
            Spec::Dyckn(k) => (dyckn_program(*k), None),
            Spec::Cfl(g) => (compile_cfl(&augmented(g)).map_err(|e| invalid(&e))?, None),
            Spec::Eqr { r, qf: false } => (eqr_program_succ(*r), None),
            Spec::Eqr { r, qf: true } => (eqr_program_qf(*r), None),
            Spec::Efo { vocab, sentence } => {
                let p = compile_efo(sentence, vocab).map_err(|e| invalid(&e))?;
                (p.program.clone(), Some(p))
            }
            Spec::Tree(a) => (compile_tree(a), None),
        })
    }

    /// Input vocabulary of the compiled program.
    pub fn vocabulary(&self) -> Vocabulary {
        let word = |a: &[String]| Vocabulary::word(a).expect("valid alphabet");
        match self {
            Spec::Regular(a) => word(&a.alphabet),
            Spec::Dyck1 => word(&BracketAlphabet::new(1).symbols()),
            Spec::Dyckn(k) => word(&BracketAlphabet::new(*k).symbols()),
            Spec::Cfl(g) => word(&g.terminals),
            Spec::Eqr { r, .. } => word(&dynlang::counting::letters(*r)),
            Spec::Efo { vocab, .. } => vocab.clone(),
            Spec::Tree(a) => word(&a.alphabet),
        }
    }

    /// Membership of the current input, computed from scratch.
    pub fn oracle(&self, s: &Structure) -> bool {
        let word = || word_of(s).expect("word structure");
        match self {
            Spec::Regular(a) => a.accepts(word().symbols()).expect("symbols of the alphabet"),
            Spec::Dyck1 => bracket_oracle(word().symbols(), 1),
            Spec::Dyckn(k) => bracket_oracle(word().symbols(), *k),
            Spec::Cfl(g) => cyk_oracle(g, word().symbols()),
            Spec::Eqr { r, .. } => count_oracle(word().symbols(), *r),
            Spec::Efo { sentence, .. } => efo_oracle(s, sentence),
            Spec::Tree(a) => tree_oracle(&tree_universe(s.n()), &labels_of(s, a), a),
        }
    }

    /// Smallest supported universe.
    pub fn min_n(&self) -> usize {
        match self {
            Spec::Efo { .. } => 2,
            _ => 1,
        }
    }

    /// Map shorthand symbols to the program's: bare `(` and `)` stand for
    /// the first bracket kind.
    pub fn resolve_symbol(&self, sym: &str) -> String {
        match (self, sym) {
            (Spec::Dyck1 | Spec::Dyckn(_), "(") => BracketAlphabet::open(1),
            (Spec::Dyck1 | Spec::Dyckn(_), ")") => BracketAlphabet::close(1),
            _ => sym.to_string(),
        }
    }

    pub fn resolve_script(&self, script: &UpdateScript) -> UpdateScript {
        let items = script
            .items
            .iter()
            .map(|item| match item {
                ScriptItem::Update(ConcreteUpdate::InsSym(s, p)) => {
                    ScriptItem::Update(ConcreteUpdate::InsSym(self.resolve_symbol(s), *p))
                }
                other => other.clone(),
            })
            .collect();
        UpdateScript { n: script.n, items }
    }
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spec::Regular(a) => f.write_str(&print_dfa(a)),
            Spec::Dyck1 => Ok(()),
            Spec::Dyckn(k) => writeln!(f, "kinds: {k}"),
            Spec::Cfl(g) => write!(f, "{g}"),
            Spec::Eqr { r, qf } => writeln!(f, "r: {r}\nvariant: {}", if *qf { "qf" } else { "succ" }),
            Spec::Efo { vocab, sentence } => {
                let syms: Vec<String> = vocab.symbols().iter().map(|s| format!("{}/{}", s.name, s.arity)).collect();
                writeln!(f, "vocabulary: {}\nsentence: {sentence}", syms.join(" "))
            }
            Spec::Tree(a) => write!(f, "{a}"),
        }
    }
}
