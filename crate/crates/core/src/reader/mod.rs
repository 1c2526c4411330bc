//! Program text to terms and back.
//!
//! The syntax is the usual Edinburgh notation restricted to a fixed operator
//! table: `%` line comments, quoted atoms, `[H|T]` lists, `(A,B)` tuples and
//! clauses terminated by a `.` followed by layout.

mod format;
mod lexer;
mod ops;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use format::{format_term, FormatOptions};
pub use lexer::{tokenize, Pos, Punct, Token, TokenKind};
pub use ops::{Fixity, OpDef, OperatorTable};

use crate::term::{Clause, Term, VarId, VarNames};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReadErrorKind {
    IllegalChar(char),
    UnterminatedQuoted,
    BadEscape(char),
    BadNumber(String),
    IntegerOverflow,
    Unexpected {
        found: String,
        expected: Vec<&'static str>,
    },
    PriorityClash(String),
    InvalidHead(String),
}

impl fmt::Display for ReadErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadErrorKind::IllegalChar(c) => write!(f, "illegal character {c:?}"),
            ReadErrorKind::UnterminatedQuoted => f.write_str("unterminated quoted atom"),
            ReadErrorKind::BadEscape(c) => write!(f, "unknown escape sequence \\{c}"),
            ReadErrorKind::BadNumber(s) => write!(f, "malformed number {s}"),
            ReadErrorKind::IntegerOverflow => f.write_str("integer literal out of 64-bit range"),
            ReadErrorKind::Unexpected { found, expected } => {
                write!(f, "unexpected {found}, expected {}", expected.join(" or "))
            }
            ReadErrorKind::PriorityClash(op) => write!(f, "operator priority clash at `{op}`"),
            ReadErrorKind::InvalidHead(h) => write!(f, "clause head must be callable, got {h}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {kind}")]
pub struct ReadError {
    pub kind: ReadErrorKind,
    pub pos: Pos,
}

impl ReadError {
    pub fn new(kind: ReadErrorKind, pos: Pos) -> ReadError {
        ReadError { kind, pos }
    }
}

/// Every error found while reading a program, in source order.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ReadErrors(pub Vec<ReadError>);

impl fmt::Display for ReadErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl ReadErrors {
    pub fn first(&self) -> &ReadError {
        &self.0[0]
    }
}

/// A term read on its own, with the names of its variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadTerm {
    pub term: Term,
    /// Named variables in order of first appearance. `_` is never listed.
    pub var_names: Vec<(String, VarId)>,
    pub var_count: u32,
}

impl ReadTerm {
    pub fn names(&self) -> VarNames {
        self.var_names
            .iter()
            .map(|(n, v)| (*v, n.as_str().into()))
            .collect()
    }
}

#[derive(Default)]
struct VarTable {
    named: HashMap<String, VarId>,
    order: Vec<(String, VarId)>,
    next: u32,
}

impl VarTable {
    fn fresh(&mut self) -> VarId {
        let v = VarId(self.next);
        self.next += 1;
        v
    }

    fn lookup(&mut self, name: &str) -> VarId {
        if name == "_" {
            return self.fresh();
        }
        if let Some(v) = self.named.get(name) {
            return *v;
        }
        let v = self.fresh();
        self.named.insert(name.to_string(), v);
        self.order.push((name.to_string(), v));
        v
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    at: usize,
    table: &'a OperatorTable,
    vars: VarTable,
    eof: Pos,
}

type PResult<T> = Result<T, ReadError>;

const TERM_START: &[&str] = &["term"];

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token], table: &'a OperatorTable, eof: Pos) -> Parser<'a> {
        Parser {
            tokens,
            at: 0,
            table,
            vars: VarTable::default(),
            eof,
        }
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.at)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Token> {
        self.tokens.get(self.at + offset)
    }

    fn advance(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.at);
        if tok.is_some() {
            self.at += 1;
        }
        tok
    }

    fn here(&self) -> Pos {
        self.peek().map_or(self.eof, |t| t.pos)
    }

    fn unexpected(&self, expected: &[&'static str]) -> ReadError {
        let found = self
            .peek()
            .map_or_else(|| "end of input".to_string(), Token::describe);
        ReadError::new(
            ReadErrorKind::Unexpected {
                found,
                expected: expected.to_vec(),
            },
            self.here(),
        )
    }

    fn expect_punct(&mut self, p: Punct, expected: &[&'static str]) -> PResult<()> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Punct(q),
                ..
            }) if *q == p => {
                self.advance();
                Ok(())
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn next_is_punct(&self, p: Punct) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Punct(q), .. }) if *q == p)
    }

    fn next_opens_args(&self) -> bool {
        matches!(
            self.peek(),
            Some(Token { kind: TokenKind::Punct(Punct::LParen), layout_before: false, .. })
        )
    }

    /// Whether the upcoming token can begin an operand.
    fn next_starts_term(&self) -> bool {
        let Some(tok) = self.peek() else {
            return false;
        };
        match &tok.kind {
            TokenKind::Int(_)
            | TokenKind::Float(_)
            | TokenKind::Var(_)
            | TokenKind::QuotedAtom(_)
            | TokenKind::Punct(Punct::LParen | Punct::LBracket) => true,
            TokenKind::Atom(name) => {
                let infix_only =
                    self.table.infix(name).is_some() && self.table.prefix(name).is_none();
                let functional = matches!(
                    self.peek_at(1),
                    Some(Token { kind: TokenKind::Punct(Punct::LParen), layout_before: false, .. })
                );
                !infix_only || functional
            }
            _ => false,
        }
    }

    fn int_value(&self, magnitude: u64, negative: bool, pos: Pos) -> PResult<i64> {
        let value = if negative {
            -(magnitude as i128)
        } else {
            magnitude as i128
        };
        i64::try_from(value).map_err(|_| ReadError::new(ReadErrorKind::IntegerOverflow, pos))
    }

    fn parse(&mut self, max: u16) -> PResult<Term> {
        let start = self.here();
        let (mut left, mut left_prec) = self.primary(max)?;
        if left_prec > max {
            return Err(ReadError::new(
                ReadErrorKind::PriorityClash(format!("{left_prec}")),
                start,
            ));
        }
        loop {
            let name = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Atom(name)) => name.as_str(),
                Some(TokenKind::Punct(Punct::Comma)) => ",",
                _ => break,
            };
            let Some(op) = self.table.infix(name) else {
                break;
            };
            let (la, ra) = op.arg_priorities();
            if op.priority > max || left_prec > la {
                break;
            }
            self.advance();
            let right = self.parse(ra)?;
            left = Term::compound(op.name, vec![left, right]);
            left_prec = op.priority;
        }
        Ok(left)
    }

    fn primary(&mut self, max: u16) -> PResult<(Term, u16)> {
        let Some(tok) = self.peek() else {
            return Err(self.unexpected(TERM_START));
        };
        match &tok.kind {
            TokenKind::Int(n) => {
                self.advance();
                Ok((Term::Int(self.int_value(*n, false, tok.pos)?), 0))
            }
            TokenKind::Float(x) => {
                self.advance();
                Ok((Term::Float(*x), 0))
            }
            TokenKind::Var(name) => {
                self.advance();
                Ok((Term::Var(self.vars.lookup(name)), 0))
            }
            TokenKind::Punct(Punct::LParen) => {
                self.advance();
                let inner = self.parse(1200)?;
                self.expect_punct(Punct::RParen, &["`)`", "operator"])?;
                Ok((inner, 0))
            }
            TokenKind::Punct(Punct::LBracket) => {
                self.advance();
                if self.next_is_punct(Punct::RBracket) {
                    self.advance();
                    return Ok((Term::nil(), 0));
                }
                self.list_tail()
            }
            TokenKind::QuotedAtom(name) => {
                self.advance();
                if self.next_opens_args() {
                    return Ok((self.compound_args(name)?, 0));
                }
                Ok((Term::atom(name), 0))
            }
            TokenKind::Atom(name) => {
                self.advance();
                if self.next_opens_args() {
                    return Ok((self.compound_args(name)?, 0));
                }
                if name == "-" {
                    if let Some(Token { kind, layout_before: false, pos }) = self.peek() {
                        match kind {
                            TokenKind::Int(n) => {
                                let (n, pos) = (*n, *pos);
                                self.advance();
                                return Ok((Term::Int(self.int_value(n, true, pos)?), 0));
                            }
                            TokenKind::Float(x) => {
                                let x = *x;
                                self.advance();
                                return Ok((Term::Float(-x), 0));
                            }
                            _ => {}
                        }
                    }
                }
                if let Some(op) = self.table.prefix(name) {
                    if self.next_starts_term() {
                        if op.priority > max {
                            return Err(ReadError::new(
                                ReadErrorKind::PriorityClash(name.clone()),
                                tok.pos,
                            ));
                        }
                        let operand = self.parse(op.arg_priorities().1)?;
                        return Ok((Term::compound(op.name, vec![operand]), op.priority));
                    }
                }
                Ok((Term::atom(name), 0))
            }
            _ => Err(self.unexpected(TERM_START)),
        }
    }

    fn compound_args(&mut self, name: &str) -> PResult<Term> {
        self.advance(); // (
        let mut args = vec![self.parse(999)?];
        while self.next_is_punct(Punct::Comma) {
            self.advance();
            args.push(self.parse(999)?);
        }
        self.expect_punct(Punct::RParen, &["`,`", "`)`"])?;
        Ok(Term::compound(name, args))
    }

    fn list_tail(&mut self) -> PResult<(Term, u16)> {
        let mut items = vec![self.parse(999)?];
        while self.next_is_punct(Punct::Comma) {
            self.advance();
            items.push(self.parse(999)?);
        }
        let tail = if self.next_is_punct(Punct::Bar) {
            self.advance();
            self.parse(999)?
        } else {
            Term::nil()
        };
        self.expect_punct(Punct::RBracket, &["`,`", "`|`", "`]`"])?;
        Ok((Term::list_with_tail(items, tail), 0))
    }

    fn at_end_token(&self) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::End, .. }))
    }

    fn finish(self, term: Term) -> ReadTerm {
        ReadTerm {
            term,
            var_names: self
                .vars
                .order
                .into_iter()
                .filter(|(n, _)| !n.starts_with('_'))
                .collect(),
            var_count: self.vars.next,
        }
    }
}

fn eof_pos(text: &str) -> Pos {
    let line = text.matches('\n').count() + 1;
    let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Pos { line, column }
}

/// Parses one term from `tokens`. A trailing end token is accepted but not
/// required.
pub fn parse_term(tokens: &[Token], table: &OperatorTable) -> Result<ReadTerm, ReadError> {
    let eof = tokens.last().map_or(Pos { line: 1, column: 1 }, |t| t.pos);
    parse_tokens(tokens, table, eof)
}

fn parse_tokens(tokens: &[Token], table: &OperatorTable, eof: Pos) -> Result<ReadTerm, ReadError> {
    let mut p = Parser::new(tokens, table, eof);
    let term = p.parse(1200)?;
    if p.at_end_token() {
        p.advance();
    }
    if p.peek().is_some() {
        return Err(p.unexpected(&["operator", "`.`"]));
    }
    Ok(p.finish(term))
}

/// Reads a single term (a query or a goal) from text.
pub fn read_term(text: &str) -> Result<ReadTerm, ReadError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ReadError::new(
            ReadErrorKind::Unexpected {
                found: "end of input".into(),
                expected: TERM_START.to_vec(),
            },
            eof_pos(text),
        ));
    }
    parse_tokens(&tokens, &OperatorTable::standard(), eof_pos(text))
}

/// Splits a conjunction into its goals.
pub fn conjuncts(body: &Term, out: &mut Vec<Term>) {
    match body {
        Term::Struct(f, args) if &**f == "," && args.len() == 2 => {
            conjuncts(&args[0], out);
            conjuncts(&args[1], out);
        }
        other => out.push(other.clone()),
    }
}

/// Turns a read term into a clause.
pub fn term_to_clause(term: Term, pos: Pos, source_index: usize) -> Result<Clause, ReadError> {
    let (head, body) = match term {
        Term::Struct(f, args) if &*f == ":-" && args.len() == 2 => {
            let mut goals = Vec::new();
            conjuncts(&args[1], &mut goals);
            (args[0].clone(), goals)
        }
        other => (other, Vec::new()),
    };
    if !head.is_callable() {
        return Err(ReadError::new(
            ReadErrorKind::InvalidHead(head.to_string()),
            pos,
        ));
    }
    Ok(Clause::new(head, body, source_index))
}

/// Parses a whole program. All errors are collected; reading resumes after
/// the next end token.
pub fn parse_program(text: &str) -> Result<Vec<Clause>, ReadErrors> {
    let tokens = tokenize(text).map_err(|e| ReadErrors(vec![e]))?;
    let table = OperatorTable::standard();
    let eof = eof_pos(text);
    let mut clauses = Vec::new();
    let mut errors = Vec::new();
    let mut start = 0;
    while start < tokens.len() {
        let end = tokens[start..]
            .iter()
            .position(|t| t.kind == TokenKind::End)
            .map(|i| start + i);
        let Some(end) = end else {
            let last = tokens.last().map_or(eof, |t| t.pos);
            errors.push(ReadError::new(
                ReadErrorKind::Unexpected {
                    found: "end of input".into(),
                    expected: vec!["`.`"],
                },
                if last > eof { last } else { eof },
            ));
            break;
        };
        let pos = tokens[start].pos;
        let mut p = Parser::new(&tokens[start..end], &table, tokens[end].pos);
        let result = p.parse(1200).and_then(|term| {
            if p.peek().is_some() {
                Err(p.unexpected(&["operator", "`.`"]))
            } else {
                term_to_clause(term, pos, clauses.len())
            }
        });
        match result {
            Ok(clause) => clauses.push(clause),
            Err(e) => errors.push(e),
        }
        start = end + 1;
    }
    if errors.is_empty() {
        Ok(clauses)
    } else {
        Err(ReadErrors(errors))
    }
}
