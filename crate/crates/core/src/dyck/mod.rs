// SPDX-License-Identifier: Apache-2.0

//! Dyck languages: a ringlist program for one bracket kind over the
//! built-in successor, and a program with auxiliary functions for any
//! number of kinds.

mod many;
mod one;

pub use many::{dyckn_program, dyckn_program_disciplined, DycknNames};
pub use one::{dyck1_program, dyck1_program_disciplined, level_names, Level};

/// Bracket symbols `(1 )1 (2 )2 …`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BracketAlphabet {
    pub kinds: usize,
}

impl BracketAlphabet {
    pub fn new(kinds: usize) -> Self {
        assert!(kinds >= 1, "at least one bracket kind");
        BracketAlphabet { kinds }
    }

    pub fn open(k: usize) -> String {
        format!("({k}")
    }

    pub fn close(k: usize) -> String {
        format!("){k}")
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        for k in 1..=self.kinds {
            out.push(Self::open(k));
            out.push(Self::close(k));
        }
        out
    }

    /// `(kind, is_opening)` of a symbol.
    pub fn parse(sym: &str) -> Option<(usize, bool)> {
        let open = match sym.chars().next()? {
            '(' => true,
            ')' => false,
            _ => return None,
        };
        let k = sym[1..].parse().ok()?;
        Some((k, open))
    }
}

/// Stack-based membership test for the Dyck language over `kinds` kinds.
pub fn bracket_oracle<S: AsRef<str>>(w: &[S], kinds: usize) -> bool {
    let mut stack = Vec::new();
    for s in w {
        match BracketAlphabet::parse(s.as_ref()) {
            Some((k, _)) if k == 0 || k > kinds => return false,
            Some((k, true)) => stack.push(k),
            Some((k, false)) => {
                if stack.pop() != Some(k) {
                    return false;
                }
            }
            None => return false,
        }
    }
    stack.is_empty()
}
