//! Restricted random k-SAT processes and the structural machinery around
//! them: clause-universe indexing, process generators, an exact
//! solution-space oracle, expanding-set and core extraction, and a
//! majority-vote based polynomial-time solver.

pub mod corebuilder;
pub mod error;
pub mod formula;
pub mod generator;
pub mod harness;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
pub use formula::{Assignment, Clause, Formula, Literal, PartialAssignment, VarSet};
