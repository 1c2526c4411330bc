//! A small logic-programming engine for math tutoring: terms and
//! unification, a reader for clause syntax, depth-first resolution with
//! backtracking, bounded integer constraints, and the bundled lesson packs.

pub mod clp;
pub mod engine;
pub mod lessons;
pub mod reader;
pub mod term;

pub use engine::{
    Answer, Database, EngineError, EngineLimits, Error, EvalError, ResourceKind, SolveOptions,
    Solutions,
};
pub use reader::{format_term, parse_program, read_term, FormatOptions, ReadError, ReadErrors};
pub use term::{BindingStore, Clause, Term, VarId};
