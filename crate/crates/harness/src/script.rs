// SPDX-License-Identifier: Apache-2.0

//! Update scripts: a universe size, then one update or assertion per line.
//!
//! ```text
//! universe 4
//! ins a 2        # label position 2 with `a`
//! expect accept false
//! reset 2
//! insr E 1 2
//! delr E 1 2
//! ```

use std::fmt;
use std::io::Write;

use dynlang::structure::{ConcreteUpdate, Elem};
use dynlang::{Engine, EngineError, ProgramState};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptItem {
    Update(ConcreteUpdate),
    /// `expect accept <bool>`, checked against the state at that point.
    Expect(bool),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateScript {
    pub n: usize,
    pub items: Vec<ScriptItem>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: position {pos} outside universe 1..={n}")]
    OutOfRange { line: usize, col: usize, pos: Elem, n: usize },
}

impl UpdateScript {
    pub fn from_updates(n: usize, updates: &[ConcreteUpdate]) -> Self {
        UpdateScript {
            n,
            items: updates.iter().cloned().map(ScriptItem::Update).collect(),
        }
    }

    pub fn updates(&self) -> Vec<ConcreteUpdate> {
        self.items
            .iter()
            .filter_map(|i| match i {
                ScriptItem::Update(u) => Some(u.clone()),
                ScriptItem::Expect(_) => None,
            })
            .collect()
    }
}

impl fmt::Display for UpdateScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "universe {}", self.n)?;
        for item in &self.items {
            match item {
                ScriptItem::Update(u) => writeln!(f, "{u}")?,
                ScriptItem::Expect(b) => writeln!(f, "expect accept {b}")?,
            }
        }
        Ok(())
    }
}

/// Words of a line with their 1-based starting columns.
fn words(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(s, w)| (line[..s].chars().count() + 1, w))
        .collect()
}

/// Parse a script. `ins`, `reset`, `insr` and `delr` take positions as
/// listed; `ins` and `reset` with several positions expand to one update
/// per position.
pub fn parse_script(text: &str) -> Result<UpdateScript, ScriptError> {
    let mut n: Option<usize> = None;
    let mut items = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap();
        let ws = words(line);
        let Some(&(col0, head)) = ws.first() else { continue };
        let syntax = |col: usize, msg: &str| ScriptError::Syntax { line: line_no, col, msg: msg.to_string() };
        let end = line.chars().count() + 1;
        let universe = match (head, n) {
            ("universe", None) => {
                let (c, v) = ws.get(1).copied().ok_or_else(|| syntax(end, "expected universe size"))?;
                let v: usize = v.parse().map_err(|_| syntax(c, "expected a number"))?;
                if v == 0 {
                    return Err(syntax(c, "universe must be nonempty"));
                }
                if ws.len() > 2 {
                    return Err(syntax(ws[2].0, "unexpected token"));
                }
                n = Some(v);
                continue;
            }
            ("universe", Some(_)) => return Err(syntax(col0, "universe given twice")),
            (_, None) => return Err(syntax(col0, "script must start with `universe <n>`")),
            (_, Some(v)) => v,
        };
        let pos = |k: usize| -> Result<Elem, ScriptError> {
            let (c, w) = ws[k];
            let p: Elem = w.parse().map_err(|_| syntax(c, "expected a position"))?;
            if p == 0 || p as usize > universe {
                return Err(ScriptError::OutOfRange { line: line_no, col: c, pos: p, n: universe });
            }
            Ok(p)
        };
        match head {
            "ins" | "insr" | "delr" => {
                let (_, sym) = ws.get(1).copied().ok_or_else(|| syntax(end, "expected a symbol"))?;
                if ws.len() < 3 {
                    return Err(syntax(end, "expected a position"));
                }
                let ps = (2..ws.len()).map(pos).collect::<Result<Vec<_>, _>>()?;
                match head {
                    "ins" => items.extend(ps.into_iter().map(|p| ScriptItem::Update(ConcreteUpdate::ins(sym, p)))),
                    "insr" => items.push(ScriptItem::Update(ConcreteUpdate::InsTuple(sym.into(), ps))),
                    _ => items.push(ScriptItem::Update(ConcreteUpdate::DelTuple(sym.into(), ps))),
                }
            }
            "reset" => {
                if ws.len() < 2 {
                    return Err(syntax(end, "expected a position"));
                }
                for k in 1..ws.len() {
                    items.push(ScriptItem::Update(ConcreteUpdate::Reset(pos(k)?)));
                }
            }
            "expect" => {
                match ws.get(1) {
                    Some((_, "accept")) => {}
                    Some(&(c, _)) => return Err(syntax(c, "expected `accept`")),
                    None => return Err(syntax(end, "expected `accept`")),
                }
                let (c, v) = ws.get(2).copied().ok_or_else(|| syntax(end, "expected true or false"))?;
                let b = match v {
                    "true" => true,
                    "false" => false,
                    _ => return Err(syntax(c, "expected true or false")),
                };
                if ws.len() > 3 {
                    return Err(syntax(ws[3].0, "unexpected token"));
                }
                items.push(ScriptItem::Expect(b));
            }
            other => return Err(syntax(col0, &format!("unknown command `{other}`"))),
        }
    }
    let n = n.ok_or(ScriptError::Syntax { line: 1, col: 1, msg: "missing `universe <n>`".into() })?;
    Ok(UpdateScript { n, items })
}

/// Outcome of running a script.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOutcome {
    pub trace: Vec<bool>,
    /// `(item index, expected)` of failed assertions.
    pub misses: Vec<(usize, bool)>,
}

/// Run a script, writing `step=<i> update=<text> accept=<bool>` per update
/// when `trace` is set.
pub fn run_script(
    engine: &Engine,
    script: &UpdateScript,
    trace: Option<&mut dyn Write>,
) -> Result<(RunOutcome, ProgramState), EngineError> {
    let mut st = engine.initial_state(script.n)?;
    let mut out = RunOutcome::default();
    let mut sink = trace;
    for (i, item) in script.items.iter().enumerate() {
        match item {
            ScriptItem::Update(u) => {
                engine.apply(&mut st, u)?;
                out.trace.push(st.accept());
                if let Some(w) = sink.as_mut() {
                    let _ = writeln!(w, "step={} update={u} accept={}", out.trace.len(), st.accept());
                }
            }
            ScriptItem::Expect(b) => {
                if st.accept() != *b {
                    out.misses.push((i, *b));
                }
            }
        }
    }
    Ok((out, st))
}
