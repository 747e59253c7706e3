// SPDX-License-Identifier: Apache-2.0

//! Dynamic descriptive complexity for formal languages: dynamic programs
//! maintaining membership of a changing word, tree or structure.

pub mod cfl;
pub mod counting;
pub mod dyck;
pub mod efo;
pub mod extract;
pub mod formula;
pub mod regular;
pub mod structure;
pub mod trees;

pub use formula::*;
pub use structure::*;
