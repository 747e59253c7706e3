// SPDX-License-Identifier: Apache-2.0

//! DFA text format and a small regular-expression compiler.
//!
//! ```text
//! alphabet: a b
//! states: q0 q1
//! start: q0
//! accept: q1
//! delta: q0 a q1
//! delta: q0 b q0
//! delta: q1 a q1
//! delta: q1 b q1
//! ```

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use dynlang::regular::Dfa;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("regex column {col}: {msg}")]
    Regex { col: usize, msg: String },
}

pub fn parse_dfa(text: &str) -> Result<Dfa, FormatError> {
    let mut alphabet: Option<Vec<String>> = None;
    let mut states: Option<Vec<String>> = None;
    let mut start: Option<(usize, String)> = None;
    let mut accept: Vec<(usize, String)> = Vec::new();
    let mut deltas: Vec<(usize, [String; 3])> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        let err = |msg: &str| FormatError::Parse { line, msg: msg.to_string() };
        let (key, rest) = l.split_once(':').ok_or_else(|| err("expected `key: value`"))?;
        let words: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
        match key.trim() {
            "alphabet" => alphabet = Some(words),
            "states" => states = Some(words),
            "start" => match &words[..] {
                [q] => start = Some((line, q.clone())),
                _ => return Err(err("expected one start state")),
            },
            "accept" => accept.extend(words.into_iter().map(|q| (line, q))),
            "delta" => match <[String; 3]>::try_from(words) {
                Ok(t) => deltas.push((line, t)),
                Err(_) => return Err(err("expected `delta: <q> <symbol> <q'>`")),
            },
            other => return Err(err(&format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| FormatError::Parse { line: 0, msg: format!("missing `{k}:` line") };
    let alphabet = alphabet.ok_or_else(|| missing("alphabet"))?;
    let states = states.ok_or_else(|| missing("states"))?;
    let (sline, start) = start.ok_or_else(|| missing("start"))?;
    let state = |line: usize, q: &str| {
        states
            .iter()
            .position(|s| s == q)
            .ok_or(FormatError::Parse { line, msg: format!("unknown state `{q}`") })
    };
    let mut delta = vec![vec![usize::MAX; alphabet.len()]; states.len()];
    for (line, [p, a, q]) in &deltas {
        let ai = alphabet
            .iter()
            .position(|s| s == a)
            .ok_or(FormatError::Parse { line: *line, msg: format!("unknown symbol `{a}`") })?;
        let cell = &mut delta[state(*line, p)?][ai];
        if *cell != usize::MAX {
            return Err(FormatError::Parse { line: *line, msg: format!("duplicate transition on ({p}, {a})") });
        }
        *cell = state(*line, q)?;
    }
    for (p, row) in delta.iter().enumerate() {
        if let Some(a) = row.iter().position(|&q| q == usize::MAX) {
            return Err(FormatError::Invalid(format!(
                "no transition from `{}` on `{}`",
                states[p], alphabet[a]
            )));
        }
    }
    let mut accepting = vec![false; states.len()];
    for (line, q) in &accept {
        accepting[state(*line, q)?] = true;
    }
    let start = state(sline, &start)?;
    Dfa::new(states, alphabet, delta, start, accepting).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn print_dfa(a: &Dfa) -> String {
    let mut s = String::new();
    writeln!(s, "alphabet: {}", a.alphabet.join(" ")).unwrap();
    writeln!(s, "states: {}", a.states.join(" ")).unwrap();
    writeln!(s, "start: {}", a.states[a.start]).unwrap();
    let acc: Vec<&str> = (0..a.states.len())
        .filter(|&q| a.accepting[q])
        .map(|q| a.states[q].as_str())
        .collect();
    writeln!(s, "accept: {}", acc.join(" ")).unwrap();
    for (p, row) in a.delta.iter().enumerate() {
        for (ai, &q) in row.iter().enumerate() {
            writeln!(s, "delta: {} {} {}", a.states[p], a.alphabet[ai], a.states[q]).unwrap();
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Regex {
    Eps,
    Sym(String),
    Cat(Box<Regex>, Box<Regex>),
    Alt(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
}

struct RegexParser {
    chars: Vec<char>,
    pos: usize,
}

impl RegexParser {
    fn err(&self, msg: &str) -> FormatError {
        FormatError::Regex { col: self.pos + 1, msg: msg.to_string() }
    }

    fn peek(&mut self) -> Option<char> {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
        self.chars.get(self.pos).copied()
    }

    fn alt(&mut self) -> Result<Regex, FormatError> {
        let mut r = self.cat()?;
        while matches!(self.peek(), Some('|' | '+')) {
            self.pos += 1;
            r = Regex::Alt(Box::new(r), Box::new(self.cat()?));
        }
        Ok(r)
    }

    fn cat(&mut self) -> Result<Regex, FormatError> {
        let mut r: Option<Regex> = None;
        while let Some(c) = self.peek() {
            if matches!(c, '|' | '+' | ')') {
                break;
            }
            let f = self.star()?;
            r = Some(match r {
                None => f,
                Some(l) => Regex::Cat(Box::new(l), Box::new(f)),
            });
        }
        Ok(r.unwrap_or(Regex::Eps))
    }

    fn star(&mut self) -> Result<Regex, FormatError> {
        let mut r = self.atom()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            r = Regex::Star(Box::new(r));
        }
        Ok(r)
    }

    fn atom(&mut self) -> Result<Regex, FormatError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let r = self.alt()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(r)
            }
            Some('*') => Err(self.err("`*` without operand")),
            Some(c) if c.is_alphanumeric() => {
                self.pos += 1;
                Ok(Regex::Sym(c.to_string()))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end")),
        }
    }
}

/// Thompson automaton: edges labelled `None` are ε-moves.
struct Nfa {
    edges: Vec<Vec<(Option<String>, usize)>>,
}

impl Nfa {
    fn node(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn build(&mut self, r: &Regex) -> (usize, usize) {
        let (s, t) = (self.node(), self.node());
        match r {
            Regex::Eps => self.edges[s].push((None, t)),
            Regex::Sym(a) => self.edges[s].push((Some(a.clone()), t)),
            Regex::Cat(a, b) => {
                let (s1, t1) = self.build(a);
                let (s2, t2) = self.build(b);
                self.edges[s].push((None, s1));
                self.edges[t1].push((None, s2));
                self.edges[t2].push((None, t));
            }
            Regex::Alt(a, b) => {
                for r in [a, b] {
                    let (s1, t1) = self.build(r);
                    self.edges[s].push((None, s1));
                    self.edges[t1].push((None, t));
                }
            }
            Regex::Star(a) => {
                let (s1, t1) = self.build(a);
                self.edges[s].push((None, s1));
                self.edges[s].push((None, t));
                self.edges[t1].push((None, s1));
                self.edges[t1].push((None, t));
            }
        }
        (s, t)
    }

    fn closure(&self, set: &mut BTreeSet<usize>) {
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(u) = stack.pop() {
            for (l, v) in &self.edges[u] {
                if l.is_none() && set.insert(*v) {
                    stack.push(*v);
                }
            }
        }
    }
}

/// Compile a regular expression over single-character symbols: juxtaposition,
/// `|` or `+` for union, `*`, parentheses; `()` is the empty word. The DFA
/// is complete over `alphabet` and minimized.
pub fn regex_to_dfa<S: AsRef<str>>(re: &str, alphabet: &[S]) -> Result<Dfa, FormatError> {
    let mut p = RegexParser { chars: re.chars().collect(), pos: 0 };
    let r = p.alt()?;
    if p.peek().is_some() {
        return Err(p.err("unbalanced `)`"));
    }
    let alphabet: Vec<String> = alphabet.iter().map(|s| s.as_ref().to_string()).collect();
    let mut nfa = Nfa { edges: Vec::new() };
    let (s, t) = nfa.build(&r);
    for es in &nfa.edges {
        for (l, _) in es {
            if let Some(a) = l {
                if !alphabet.contains(a) {
                    return Err(FormatError::Invalid(format!("symbol `{a}` not in the alphabet")));
                }
            }
        }
    }
    let mut init = BTreeSet::from([s]);
    nfa.closure(&mut init);
    let mut ids: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::from([(init.clone(), 0)]);
    let mut sets = vec![init];
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        let mut row = Vec::new();
        for a in &alphabet {
            let mut next: BTreeSet<usize> = sets[i]
                .iter()
                .flat_map(|&u| nfa.edges[u].iter())
                .filter(|(l, _)| l.as_ref() == Some(a))
                .map(|&(_, v)| v)
                .collect();
            nfa.closure(&mut next);
            let id = *ids.entry(next.clone()).or_insert_with(|| {
                sets.push(next);
                queue.push_back(sets.len() - 1);
                sets.len() - 1
            });
            row.push(id);
        }
        if delta.len() <= i {
            delta.resize(i + 1, Vec::new());
        }
        delta[i] = row;
    }
    let accepting: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].contains(&t)).collect();
    let d = Dfa::from_table(&alphabet, delta, 0, &accepting).map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(d.minimize())
}
