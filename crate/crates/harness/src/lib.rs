// SPDX-License-Identifier: Apache-2.0

//! Scripts, spec files, differential tests and benchmarks for `dynlang`.

pub mod bench;
pub mod difftest;
pub mod family;
pub mod formats;
pub mod gen;
pub mod script;

pub use difftest::{difftest, difftest_spec, DiffReport, Limits};
pub use family::{Family, Spec};
pub use script::{parse_script, run_script, UpdateScript};
