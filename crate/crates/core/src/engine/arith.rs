//! Arithmetic evaluation for `is/2` and the comparison builtins.

use std::cmp::Ordering;

use super::{EngineError, EvalError};
use crate::term::CYCLE_CHECK_DEPTH;
use crate::term::{BindingStore, Term};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    pub fn to_term(self) -> Term {
        match self {
            Number::Int(n) => Term::Int(n),
            Number::Float(x) => Term::Float(x),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(n) => n as f64,
            Number::Float(x) => x,
        }
    }
}

fn overflow() -> EngineError {
    EngineError::Evaluation(EvalError::IntOverflow)
}

fn float(x: f64) -> Result<Number, EngineError> {
    if x.is_finite() {
        Ok(Number::Float(x))
    } else {
        Err(EngineError::Evaluation(EvalError::FloatOverflow))
    }
}

fn binary(
    a: Number,
    b: Number,
    int_op: fn(i64, i64) -> Option<i64>,
    float_op: fn(f64, f64) -> f64,
) -> Result<Number, EngineError> {
    match (a, b) {
        (Number::Int(x), Number::Int(y)) => int_op(x, y).map(Number::Int).ok_or_else(overflow),
        _ => float(float_op(a.as_f64(), b.as_f64())),
    }
}

fn divide(a: Number, b: Number) -> Result<Number, EngineError> {
    match (a, b) {
        (_, Number::Int(0)) => Err(EngineError::Evaluation(EvalError::ZeroDivisor)),
        (_, Number::Float(y)) if y == 0.0 => Err(EngineError::Evaluation(EvalError::ZeroDivisor)),
        (Number::Int(x), Number::Int(y)) => match x.checked_rem(y) {
            Some(0) => x.checked_div(y).map(Number::Int).ok_or_else(overflow),
            Some(_) => float(x as f64 / y as f64),
            None => Err(overflow()),
        },
        _ => float(a.as_f64() / b.as_f64()),
    }
}

/// Evaluates a ground arithmetic expression over `+ - * /` and unary minus.
pub fn eval_arith(t: &Term, store: &BindingStore) -> Result<Number, EngineError> {
    eval_at(t, store, 0)
}

fn eval_at(t: &Term, store: &BindingStore, depth: usize) -> Result<Number, EngineError> {
    if depth == CYCLE_CHECK_DEPTH && store.is_cyclic(t) {
        return Err(EngineError::type_error("acyclic_term", "cyclic term"));
    }
    match store.walk(t) {
        Term::Int(n) => Ok(Number::Int(*n)),
        Term::Float(x) => Ok(Number::Float(*x)),
        Term::Var(_) => Err(EngineError::Instantiation(
            "arithmetic expression is not sufficiently instantiated".into(),
        )),
        Term::Atom(a) => Err(EngineError::type_error("evaluable", format!("{a}/0"))),
        Term::Struct(f, args) => match (&**f, args.len()) {
            ("+", 2) => binary(
                eval_at(&args[0], store, depth + 1)?,
                eval_at(&args[1], store, depth + 1)?,
                i64::checked_add,
                |x, y| x + y,
            ),
            ("-", 2) => binary(
                eval_at(&args[0], store, depth + 1)?,
                eval_at(&args[1], store, depth + 1)?,
                i64::checked_sub,
                |x, y| x - y,
            ),
            ("*", 2) => binary(
                eval_at(&args[0], store, depth + 1)?,
                eval_at(&args[1], store, depth + 1)?,
                i64::checked_mul,
                |x, y| x * y,
            ),
            ("/", 2) => divide(eval_at(&args[0], store, depth + 1)?, eval_at(&args[1], store, depth + 1)?),
            ("-", 1) => match eval_at(&args[0], store, depth + 1)? {
                Number::Int(n) => n.checked_neg().map(Number::Int).ok_or_else(overflow),
                Number::Float(x) => Ok(Number::Float(-x)),
            },
            (name, arity) => Err(EngineError::type_error("evaluable", format!("{name}/{arity}"))),
        },
    }
}

/// Numeric comparison; mixed int/float compares as floats.
pub fn compare(a: Number, b: Number) -> Ordering {
    match (a, b) {
        (Number::Int(x), Number::Int(y)) => x.cmp(&y),
        _ => a
            .as_f64()
            .partial_cmp(&b.as_f64())
            .unwrap_or(Ordering::Equal),
    }
}
