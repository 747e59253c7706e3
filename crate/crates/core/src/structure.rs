// SPDX-License-Identifier: Apache-2.0

//! Finite relational structures over the ordered universe `{1..n}`,
//! concrete single-position updates, and the word view.

use std::fmt;

use thiserror::Error;

/// A universe element. Elements are `1..=n`.
pub type Elem = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("universe must be non-empty")]
    EmptyUniverse,
    #[error("position {pos} is outside the universe 1..{n}")]
    OutOfRange { pos: Elem, n: usize },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("symbol `{name}` has arity {expected}, got {got} arguments")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("update {0} does not fit a {1} vocabulary")]
    WrongMode(String, &'static str),
    #[error("position {0} carries more than one label")]
    MultipleLabels(Elem),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

impl Symbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Symbol {
            name: name.into(),
            arity,
        }
    }
}

/// Input vocabulary. In word mode every symbol is unary and stands for one
/// alphabet letter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<Symbol>,
    word: bool,
}

impl Vocabulary {
    pub fn word<S: AsRef<str>>(alphabet: &[S]) -> Result<Self, StructureError> {
        let symbols = alphabet
            .iter()
            .map(|s| Symbol::new(s.as_ref(), 1))
            .collect();
        Self::build(symbols, true)
    }

    pub fn general(symbols: Vec<Symbol>) -> Result<Self, StructureError> {
        Self::build(symbols, false)
    }

    fn build(symbols: Vec<Symbol>, word: bool) -> Result<Self, StructureError> {
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].iter().any(|t| t.name == s.name) {
                return Err(StructureError::DuplicateSymbol(s.name.clone()));
            }
        }
        Ok(Vocabulary { symbols, word })
    }

    pub fn is_word(&self) -> bool {
        self.word
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn alphabet(&self) -> Vec<String> {
        self.symbols.iter().map(|s| s.name.clone()).collect()
    }
}

/// Dense boolean table over `{1..n}^arity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelTable {
    arity: usize,
    n: usize,
    bits: Vec<bool>,
}

impl RelTable {
    pub fn new(arity: usize, n: usize) -> Self {
        RelTable {
            arity,
            n,
            bits: vec![false; n.pow(arity as u32)],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn index(&self, tuple: &[Elem]) -> usize {
        let mut idx = 0usize;
        for &e in tuple {
            idx = idx * self.n + (e as usize - 1);
        }
        idx
    }

    #[inline]
    pub fn get(&self, tuple: &[Elem]) -> bool {
        self.bits[self.index(tuple)]
    }

    #[inline]
    pub fn set(&mut self, tuple: &[Elem], value: bool) {
        let i = self.index(tuple);
        self.bits[i] = value;
    }

    #[inline]
    pub fn get_raw(&self, index: usize) -> bool {
        self.bits[index]
    }

    #[inline]
    pub fn set_raw(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    pub fn raw(&self) -> &[bool] {
        &self.bits
    }

    pub fn clear(&mut self) {
        self.bits.iter_mut().for_each(|b| *b = false);
    }

    pub fn fill(&mut self, value: bool) {
        self.bits.iter_mut().for_each(|b| *b = value);
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// All tuples in the table, in lexicographic order.
    pub fn tuples(&self) -> Vec<Vec<Elem>> {
        (0..self.bits.len())
            .filter(|&i| self.bits[i])
            .map(|i| decode(i, self.arity, self.n))
            .collect()
    }
}

/// Dense function table over `{1..n}^arity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunTable {
    arity: usize,
    n: usize,
    values: Vec<Elem>,
}

impl FunTable {
    /// The default content: every tuple maps to its first component, and
    /// constants map to 1.
    pub fn first_component(arity: usize, n: usize) -> Self {
        let len = n.pow(arity as u32);
        let values = (0..len)
            .map(|i| {
                if arity == 0 {
                    1
                } else {
                    (i / n.pow(arity as u32 - 1)) as Elem + 1
                }
            })
            .collect();
        FunTable { arity, n, values }
    }

    pub fn from_fn(arity: usize, n: usize, mut f: impl FnMut(&[Elem]) -> Elem) -> Self {
        let len = n.pow(arity as u32);
        let values = (0..len).map(|i| f(&decode(i, arity, n))).collect();
        FunTable { arity, n, values }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    pub fn index(&self, tuple: &[Elem]) -> usize {
        let mut idx = 0usize;
        for &e in tuple {
            idx = idx * self.n + (e as usize - 1);
        }
        idx
    }

    #[inline]
    pub fn get(&self, tuple: &[Elem]) -> Elem {
        self.values[self.index(tuple)]
    }

    #[inline]
    pub fn set(&mut self, tuple: &[Elem], value: Elem) {
        let i = self.index(tuple);
        self.values[i] = value;
    }

    #[inline]
    pub fn get_raw(&self, index: usize) -> Elem {
        self.values[index]
    }

    #[inline]
    pub fn set_raw(&mut self, index: usize, value: Elem) {
        self.values[index] = value;
    }
}

/// Decode a table index back into a tuple.
pub fn decode(mut index: usize, arity: usize, n: usize) -> Vec<Elem> {
    let mut t = vec![0; arity];
    for slot in t.iter_mut().rev() {
        *slot = (index % n) as Elem + 1;
        index /= n;
    }
    t
}

/// Iterate over all tuples of `{1..n}^arity` in lexicographic order.
pub fn all_tuples(arity: usize, n: usize) -> impl Iterator<Item = Vec<Elem>> {
    (0..n.pow(arity as u32)).map(move |i| decode(i, arity, n))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    n: usize,
    vocab: Vocabulary,
    rels: Vec<RelTable>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ConcreteUpdate {
    InsSym(String, Elem),
    Reset(Elem),
    InsTuple(String, Vec<Elem>),
    DelTuple(String, Vec<Elem>),
}

impl ConcreteUpdate {
    pub fn ins(sym: impl Into<String>, pos: Elem) -> Self {
        ConcreteUpdate::InsSym(sym.into(), pos)
    }

    /// Positions (or tuple components) the update refers to.
    pub fn positions(&self) -> Vec<Elem> {
        match self {
            ConcreteUpdate::InsSym(_, i) | ConcreteUpdate::Reset(i) => vec![*i],
            ConcreteUpdate::InsTuple(_, t) | ConcreteUpdate::DelTuple(_, t) => t.clone(),
        }
    }
}

impl fmt::Display for ConcreteUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |t: &[Elem]| {
            t.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            ConcreteUpdate::InsSym(s, i) => write!(f, "ins {s} {i}"),
            ConcreteUpdate::Reset(i) => write!(f, "reset {i}"),
            ConcreteUpdate::InsTuple(r, t) => write!(f, "insr {r} {}", join(t)),
            ConcreteUpdate::DelTuple(r, t) => write!(f, "delr {r} {}", join(t)),
        }
    }
}

/// A word: the labels of the labeled positions in position order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<String>);

impl Word {
    pub fn new<S: AsRef<str>>(symbols: &[S]) -> Self {
        Word(symbols.iter().map(|s| s.as_ref().to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        write!(f, "{}", self.0.join(" "))
    }
}

/// The all-empty structure `E_n`.
pub fn new_empty_structure(vocab: &Vocabulary, n: usize) -> Result<Structure, StructureError> {
    if n == 0 {
        return Err(StructureError::EmptyUniverse);
    }
    let rels = vocab
        .symbols()
        .iter()
        .map(|s| RelTable::new(s.arity, n))
        .collect();
    Ok(Structure {
        n,
        vocab: vocab.clone(),
        rels,
    })
}

impl Structure {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn table(&self, index: usize) -> &RelTable {
        &self.rels[index]
    }

    pub fn relation(&self, name: &str) -> Option<&RelTable> {
        self.vocab.index_of(name).map(|i| &self.rels[i])
    }

    pub fn holds(&self, name: &str, tuple: &[Elem]) -> bool {
        self.relation(name).is_some_and(|t| t.get(tuple))
    }

    /// The label at a position of a word structure, if any.
    pub fn label(&self, pos: Elem) -> Option<&str> {
        self.vocab
            .symbols()
            .iter()
            .zip(&self.rels)
            .find(|(_, t)| t.get(&[pos]))
            .map(|(s, _)| s.name.as_str())
    }

    /// Set the label of a position directly (`None` clears it).
    pub fn set_label(&mut self, pos: Elem, label: Option<&str>) -> Result<(), StructureError> {
        self.check_pos(pos)?;
        let idx = match label {
            Some(l) => Some(
                self.vocab
                    .index_of(l)
                    .ok_or_else(|| StructureError::UnknownSymbol(l.to_string()))?,
            ),
            None => None,
        };
        for (i, t) in self.rels.iter_mut().enumerate() {
            t.set(&[pos], Some(i) == idx);
        }
        Ok(())
    }

    fn check_pos(&self, pos: Elem) -> Result<(), StructureError> {
        if pos == 0 || pos as usize > self.n {
            Err(StructureError::OutOfRange { pos, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Check that an update can be applied to this structure.
    pub fn check_applicable(&self, u: &ConcreteUpdate) -> Result<(), StructureError> {
        match u {
            ConcreteUpdate::InsSym(s, i) => {
                if !self.vocab.is_word() {
                    return Err(StructureError::WrongMode(u.to_string(), "general"));
                }
                if self.vocab.index_of(s).is_none() {
                    return Err(StructureError::UnknownSymbol(s.clone()));
                }
                self.check_pos(*i)
            }
            ConcreteUpdate::Reset(i) => {
                if !self.vocab.is_word() {
                    return Err(StructureError::WrongMode(u.to_string(), "general"));
                }
                self.check_pos(*i)
            }
            ConcreteUpdate::InsTuple(r, t) | ConcreteUpdate::DelTuple(r, t) => {
                if self.vocab.is_word() {
                    return Err(StructureError::WrongMode(u.to_string(), "word"));
                }
                let idx = self
                    .vocab
                    .index_of(r)
                    .ok_or_else(|| StructureError::UnknownSymbol(r.clone()))?;
                let arity = self.vocab.symbols()[idx].arity;
                if arity != t.len() {
                    return Err(StructureError::Arity {
                        name: r.clone(),
                        expected: arity,
                        got: t.len(),
                    });
                }
                t.iter().try_for_each(|&p| self.check_pos(p))
            }
        }
    }

    /// Apply an update in place.
    pub fn apply(&mut self, u: &ConcreteUpdate) -> Result<(), StructureError> {
        self.check_applicable(u)?;
        match u {
            ConcreteUpdate::InsSym(s, i) => self.set_label(*i, Some(s)),
            ConcreteUpdate::Reset(i) => self.set_label(*i, None),
            ConcreteUpdate::InsTuple(r, t) => {
                let idx = self.vocab.index_of(r).unwrap();
                self.rels[idx].set(t, true);
                Ok(())
            }
            ConcreteUpdate::DelTuple(r, t) => {
                let idx = self.vocab.index_of(r).unwrap();
                self.rels[idx].set(t, false);
                Ok(())
            }
        }
    }
}

pub fn apply_input_update(s: &Structure, u: &ConcreteUpdate) -> Result<Structure, StructureError> {
    let mut out = s.clone();
    out.apply(u)?;
    Ok(out)
}

/// Read off the word of a word structure.
pub fn word_of(s: &Structure) -> Result<Word, StructureError> {
    if !s.vocab.is_word() {
        return Err(StructureError::WrongMode("word_of".into(), "general"));
    }
    let mut out = Vec::new();
    for pos in 1..=s.n as Elem {
        let mut labels = s
            .vocab
            .symbols()
            .iter()
            .zip(&s.rels)
            .filter(|(_, t)| t.get(&[pos]));
        if let Some((sym, _)) = labels.next() {
            if labels.next().is_some() {
                return Err(StructureError::MultipleLabels(pos));
            }
            out.push(sym.name.clone());
        }
    }
    Ok(Word(out))
}
