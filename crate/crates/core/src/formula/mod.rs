// SPDX-License-Identifier: Apache-2.0

//! Dynamic programs: formulas, programs, the evaluation engine and
//! program transformations.

pub mod ast;
pub mod engine;
pub mod program;
pub mod transform;

pub use ast::{Formula, Term};
pub use engine::{apply_update, eval_formula, eval_term, run_program, Engine, EngineError, ProgramState};
pub use program::{
    check_tier, DynamicProgram, ProgramBuilder, ProgramError, Rule, Schema, Tier, UpdateDef, UpdateKind,
};
pub use transform::{eliminate_init, normalize_update_discipline, subst_formula, subst_term};
