use std::fmt;

use super::{ReadError, ReadErrorKind};

/// 1-based line and column (columns count characters).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Punct {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bar,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Atom(String),
    QuotedAtom(String),
    Var(String),
    /// Magnitude only; a leading minus is folded in by the parser.
    Int(u64),
    Float(f64),
    Punct(Punct),
    End,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
    /// Whitespace or a comment precedes this token.
    pub layout_before: bool,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Atom(a) => format!("atom `{a}`"),
            TokenKind::QuotedAtom(a) => format!("quoted atom '{a}'"),
            TokenKind::Var(v) => format!("variable `{v}`"),
            TokenKind::Int(n) => format!("integer {n}"),
            TokenKind::Float(x) => format!("float {x}"),
            TokenKind::Punct(p) => format!("`{}`", punct_text(*p)),
            TokenKind::End => "end of clause `.`".to_string(),
        }
    }
}

pub(crate) fn punct_text(p: Punct) -> &'static str {
    match p {
        Punct::LParen => "(",
        Punct::RParen => ")",
        Punct::LBracket => "[",
        Punct::RBracket => "]",
        Punct::Comma => ",",
        Punct::Bar => "|",
    }
}

pub(crate) fn is_symbol_char(c: char) -> bool {
    "+-*/\\^<>=~:.?@#&$".contains(c)
}

pub(crate) fn is_alnum(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, mut pred: impl FnMut(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    /// Skips whitespace and `%` comments; reports whether anything was skipped.
    fn skip_layout(&mut self) -> bool {
        let mut skipped = false;
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
            skipped = true;
        }
        skipped
    }

    fn number(&mut self, start: Pos) -> Result<TokenKind, ReadError> {
        let int_part = self.take_while(|c| c.is_ascii_digit());
        let has_fraction =
            self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit());
        if !has_fraction {
            return int_part
                .parse::<u64>()
                .map(TokenKind::Int)
                .map_err(|_| ReadError::new(ReadErrorKind::IntegerOverflow, start));
        }
        let mut text = int_part;
        text.push(self.bump().unwrap());
        text.push_str(&self.take_while(|c| c.is_ascii_digit()));
        if matches!(self.peek(), Some('e' | 'E')) {
            let mut look = self.chars.clone();
            look.next();
            let mut next = look.next().map(|(_, c)| c);
            if matches!(next, Some('+' | '-')) {
                next = look.next().map(|(_, c)| c);
            }
            if next.is_some_and(|c| c.is_ascii_digit()) {
                text.push(self.bump().unwrap());
                if matches!(self.peek(), Some('+' | '-')) {
                    text.push(self.bump().unwrap());
                }
                text.push_str(&self.take_while(|c| c.is_ascii_digit()));
            }
        }
        let value: f64 = text
            .parse()
            .map_err(|_| ReadError::new(ReadErrorKind::BadNumber(text.clone()), start))?;
        if !value.is_finite() {
            return Err(ReadError::new(ReadErrorKind::BadNumber(text), start));
        }
        Ok(TokenKind::Float(value))
    }

    fn quoted(&mut self, start: Pos) -> Result<TokenKind, ReadError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(ReadError::new(ReadErrorKind::UnterminatedQuoted, start)),
                Some('\'') => {
                    if self.peek() == Some('\'') {
                        self.bump();
                        s.push('\'');
                    } else {
                        return Ok(TokenKind::QuotedAtom(s));
                    }
                }
                Some('\\') => {
                    let esc_pos = self.pos();
                    match self.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('\\') => s.push('\\'),
                        Some('\'') => s.push('\''),
                        Some('\n') => {}
                        Some(c) => {
                            return Err(ReadError::new(ReadErrorKind::BadEscape(c), esc_pos))
                        }
                        None => {
                            return Err(ReadError::new(ReadErrorKind::UnterminatedQuoted, start))
                        }
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, ReadError> {
        let layout_before = self.skip_layout();
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let kind = match c {
            '0'..='9' => self.number(pos)?,
            '_' | 'A'..='Z' => TokenKind::Var(self.take_while(is_alnum)),
            'a'..='z' => TokenKind::Atom(self.take_while(is_alnum)),
            '\'' => self.quoted(pos)?,
            '(' | ')' | '[' | ']' | ',' | '|' => {
                self.bump();
                TokenKind::Punct(match c {
                    '(' => Punct::LParen,
                    ')' => Punct::RParen,
                    '[' => Punct::LBracket,
                    ']' => Punct::RBracket,
                    ',' => Punct::Comma,
                    _ => Punct::Bar,
                })
            }
            '!' | ';' => {
                self.bump();
                TokenKind::Atom(c.to_string())
            }
            '.' if self.peek2().is_none_or(|n| n.is_whitespace() || n == '%') => {
                self.bump();
                TokenKind::End
            }
            c if is_symbol_char(c) => TokenKind::Atom(self.take_while(is_symbol_char)),
            other => return Err(ReadError::new(ReadErrorKind::IllegalChar(other), pos)),
        };
        Ok(Some(Token {
            kind,
            pos,
            layout_before,
        }))
    }
}

/// Splits `text` into tokens. Comments and whitespace are dropped, but each
/// token remembers whether layout preceded it.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ReadError> {
    let mut lexer = Lexer {
        chars: text.char_indices().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        tokens.push(tok);
    }
    Ok(tokens)
}
