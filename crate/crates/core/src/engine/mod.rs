//! Clause database, resolution engine and builtins.

mod arith;
mod machine;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

pub use arith::{compare, eval_arith, Number};
pub use machine::Solutions;

use crate::reader::{format_term, parse_program, read_term, FormatOptions, ReadError, ReadErrors};
use crate::term::{Clause, Name, Term, VarNames};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    ZeroDivisor,
    #[error("integer overflow")]
    IntOverflow,
    #[error("float overflow")]
    FloatOverflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResourceKind {
    Steps(u64),
    Depth(usize),
    Time,
    Propagation,
}

impl std::fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResourceKind::Steps(n) => write!(f, "inference limit of {n} steps exceeded"),
            ResourceKind::Depth(n) => write!(f, "depth limit of {n} exceeded"),
            ResourceKind::Time => f.write_str("time limit exceeded"),
            ResourceKind::Propagation => f.write_str("constraint propagation limit exceeded"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("instantiation error: {0}")]
    Instantiation(String),
    #[error("type error: expected {expected}, found {culprit}")]
    Type {
        expected: &'static str,
        culprit: String,
    },
    #[error("evaluation error: {0}")]
    Evaluation(EvalError),
    #[error("existence error: unknown procedure {name}/{arity}")]
    Existence { name: String, arity: usize },
    #[error("domain error: expected {domain}, found {culprit}")]
    Domain { domain: String, culprit: String },
    #[error("builtin redefinition: {name}/{arity}")]
    BuiltinRedefinition { name: String, arity: usize },
    #[error("resource error: {0}")]
    Resource(ResourceKind),
    #[error("usage error: {0}")]
    Usage(String),
}

impl EngineError {
    pub(crate) fn type_error(expected: &'static str, culprit: impl Into<String>) -> EngineError {
        EngineError::Type {
            expected,
            culprit: culprit.into(),
        }
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, EngineError::Resource(_))
    }
}

/// Any failure while loading a program or running a goal.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Read(ReadErrors),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl From<ReadErrors> for Error {
    fn from(e: ReadErrors) -> Self {
        Error::Read(e)
    }
}

impl From<ReadError> for Error {
    fn from(e: ReadError) -> Self {
        Error::Read(ReadErrors(vec![e]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineLimits {
    /// Inference-step budget for the whole query.
    pub max_steps: u64,
    /// Maximum call nesting depth.
    pub max_depth: usize,
    /// Stop after this many answers (the stream simply ends).
    pub max_solutions: Option<usize>,
    /// Wall-clock budget, measured from the start of the query.
    pub timeout: Option<Duration>,
}

impl Default for EngineLimits {
    fn default() -> Self {
        EngineLimits {
            max_steps: 1_000_000,
            max_depth: 100_000,
            max_solutions: None,
            timeout: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    pub limits: EngineLimits,
    /// Record `port depth goal` trace lines.
    pub trace: bool,
    pub occurs_check: bool,
}

impl SolveOptions {
    pub fn with_limits(limits: EngineLimits) -> SolveOptions {
        SolveOptions {
            limits,
            ..SolveOptions::default()
        }
    }
}

/// Predicates implemented natively; user clauses for these are rejected.
pub const BUILTINS: &[(&str, usize)] = &[
    (",", 2),
    (";", 2),
    ("true", 0),
    ("fail", 0),
    ("false", 0),
    ("call", 1),
    ("\\+", 1),
    ("once", 1),
    ("=", 2),
    ("\\=", 2),
    ("==", 2),
    ("\\==", 2),
    ("is", 2),
    ("<", 2),
    (">", 2),
    ("=<", 2),
    (">=", 2),
    ("=:=", 2),
    ("=\\=", 2),
    ("write", 1),
    ("nl", 0),
    ("domain_error", 2),
    ("#=", 2),
    ("#<", 2),
    ("#=<", 2),
    ("#>", 2),
    ("#>=", 2),
    ("in", 2),
    ("label", 1),
];

pub fn is_builtin(name: &str, arity: usize) -> bool {
    BUILTINS.iter().any(|&(n, a)| n == name && a == arity)
}

/// Library predicates preloaded into every database. A program that defines
/// the same name/arity replaces the library version.
pub const LIBRARY: &str = "\
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).
append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).
reverse(L, R) :- reverse(L, [], R).
reverse([], A, A).
reverse([H|T], A, R) :- reverse(T, [H|A], R).
";

type Key = (Name, usize);

#[derive(Clone, Debug)]
pub struct Database {
    preds: HashMap<Key, Vec<Clause>>,
    library: HashSet<Key>,
}

impl Default for Database {
    fn default() -> Self {
        Database::new()
    }
}

impl Database {
    /// A database holding only the library predicates.
    pub fn new() -> Database {
        let mut db = Database::empty();
        let clauses = parse_program(LIBRARY).expect("library parses");
        db.consult(clauses).expect("library consults");
        db.library = db.preds.keys().cloned().collect();
        db
    }

    pub fn empty() -> Database {
        Database {
            preds: HashMap::new(),
            library: HashSet::new(),
        }
    }

    /// Appends clauses in order. Fails without changing anything if any
    /// clause would redefine a builtin.
    pub fn consult(&mut self, clauses: impl IntoIterator<Item = Clause>) -> Result<(), EngineError> {
        let clauses: Vec<Clause> = clauses.into_iter().collect();
        for c in &clauses {
            let (name, arity) = c.key().expect("clause heads are callable");
            if is_builtin(name, arity) {
                return Err(EngineError::BuiltinRedefinition {
                    name: name.to_string(),
                    arity,
                });
            }
        }
        for mut c in clauses {
            let (name, arity) = c.key().expect("clause heads are callable");
            let key: Key = (Arc::from(name), arity);
            if self.library.remove(&key) {
                self.preds.remove(&key);
            }
            let list = self.preds.entry(key).or_default();
            c.source_index = list.len();
            list.push(c);
        }
        Ok(())
    }

    pub fn consult_text(&mut self, text: &str) -> Result<(), Error> {
        let clauses = parse_program(text)?;
        self.consult(clauses)?;
        Ok(())
    }

    pub fn clauses(&self, name: &str, arity: usize) -> Option<&[Clause]> {
        self.preds
            .get(&(Arc::from(name), arity))
            .map(|v| v.as_slice())
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&str, usize)> {
        self.preds.keys().map(|(n, a)| (&**n, *a))
    }

    /// Starts a query. `var_names` lists the query variables to report.
    pub fn solve(
        &self,
        goal: Term,
        var_names: Vec<(String, crate::term::VarId)>,
        options: SolveOptions,
    ) -> Solutions<'_> {
        Solutions::new(self, goal, var_names, options)
    }

    /// Parses `text` as a goal and starts a query.
    pub fn solve_text(&self, text: &str, options: SolveOptions) -> Result<Solutions<'_>, Error> {
        let read = read_term(text)?;
        Ok(self.solve(read.term, read.var_names, options))
    }
}

/// One answer: query variables in order of first appearance, mapped to
/// their reified values. Variables left unbound are omitted.
#[derive(Clone, Debug, PartialEq)]
pub struct Answer {
    pub bindings: Vec<(String, Term)>,
    names: Arc<VarNames>,
}

impl Answer {
    pub fn get(&self, name: &str) -> Option<&Term> {
        self.bindings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn format_value(&self, t: &Term) -> String {
        format_term(
            t,
            &FormatOptions::quoted()
                .with_names(&self.names)
                .with_priority(699),
        )
    }

    /// `(name, formatted value)` pairs.
    pub fn formatted(&self) -> Vec<(String, String)> {
        self.bindings
            .iter()
            .map(|(n, t)| (n.clone(), self.format_value(t)))
            .collect()
    }

    /// `X = 1, Y = f(a)`, or `true` when there is nothing to show.
    pub fn to_line(&self) -> String {
        if self.bindings.is_empty() {
            return "true".to_string();
        }
        self.formatted()
            .into_iter()
            .map(|(n, v)| format!("{n} = {v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}
