use super::lexer::{is_alnum, is_symbol_char};
use super::ops::OperatorTable;
use crate::term::{Term, VarNames, CONS, NIL};

#[derive(Clone, Copy, Debug)]
pub struct FormatOptions<'a> {
    /// Quote atoms that would not read back as themselves.
    pub quoted: bool,
    pub var_names: Option<&'a VarNames>,
    /// Priority of the surrounding context; 699 formats a term as the
    /// right-hand side of `=`.
    pub priority: u16,
}

impl<'a> FormatOptions<'a> {
    pub fn quoted() -> FormatOptions<'static> {
        FormatOptions {
            quoted: true,
            var_names: None,
            priority: 1200,
        }
    }

    pub fn plain() -> FormatOptions<'static> {
        FormatOptions {
            quoted: false,
            var_names: None,
            priority: 1200,
        }
    }

    pub fn with_names(mut self, names: &'a VarNames) -> FormatOptions<'a> {
        self.var_names = Some(names);
        self
    }

    pub fn with_priority(mut self, priority: u16) -> FormatOptions<'a> {
        self.priority = priority;
        self
    }
}

/// Formats `t` with the fewest parentheses the operator table allows.
pub fn format_term(t: &Term, opts: &FormatOptions<'_>) -> String {
    let table = OperatorTable::standard();
    let mut w = Writer {
        out: String::new(),
        opts,
        table: &table,
    };
    w.term(t, opts.priority);
    w.out
}

fn atom_needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_lowercase() => !chars.all(is_alnum),
        Some(_) if name == NIL || name == "!" || name == ";" => false,
        Some(_) => !(name.chars().all(is_symbol_char) && !name.contains('.')),
    }
}

fn quote_atom(name: &str) -> String {
    let mut s = String::with_capacity(name.len() + 2);
    s.push('\'');
    for c in name.chars() {
        match c {
            '\'' => s.push_str("\\'"),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            c => s.push(c),
        }
    }
    s.push('\'');
    s
}

fn format_float(x: f64) -> String {
    let s = format!("{x:?}");
    match s.find('e') {
        Some(i) if !s[..i].contains('.') => format!("{}.0{}", &s[..i], &s[i..]),
        _ => s,
    }
}

struct Writer<'a, 'o> {
    out: String,
    opts: &'a FormatOptions<'o>,
    table: &'a OperatorTable,
}

impl Writer<'_, '_> {
    /// Appends `piece`, separating it from the previous output when the two
    /// would otherwise lex as one token.
    fn emit(&mut self, piece: &str) {
        if let (Some(last), Some(first)) = (self.out.chars().last(), piece.chars().next()) {
            let merge = (is_alnum(last) && is_alnum(first))
                || (is_symbol_char(last) && is_symbol_char(first))
                || (last == '\'' && first == '\'');
            if merge {
                self.out.push(' ');
            }
        }
        self.out.push_str(piece);
    }

    fn atom_text(&self, name: &str) -> String {
        if self.opts.quoted && atom_needs_quotes(name) {
            quote_atom(name)
        } else {
            name.to_string()
        }
    }

    fn term(&mut self, t: &Term, max: u16) {
        match t {
            Term::Var(v) => {
                let name = self
                    .opts
                    .var_names
                    .and_then(|names| names.get(v))
                    .map(|n| n.to_string())
                    .unwrap_or_else(|| format!("_G{}", v.0));
                self.emit(&name);
            }
            Term::Int(n) => self.emit(&n.to_string()),
            Term::Float(x) => self.emit(&format_float(*x)),
            Term::Atom(name) => {
                let text = self.atom_text(name);
                if max < 999 && self.table.is_op(name) {
                    self.emit("(");
                    self.out.push_str(&text);
                    self.out.push(')');
                } else {
                    self.emit(&text);
                }
            }
            Term::Struct(name, args) => self.compound(name, args, max),
        }
    }

    /// An operand of an operator. Operator atoms are bracketed so they
    /// cannot be taken for the operator's own prefix form.
    fn operand(&mut self, t: &Term, max: u16) {
        match t {
            Term::Atom(name) if self.table.is_op(name) => {
                let text = self.atom_text(name);
                self.emit("(");
                self.out.push_str(&text);
                self.out.push(')');
            }
            _ => self.term(t, max),
        }
    }

    fn compound(&mut self, name: &str, args: &[Term], max: u16) {
        if name == CONS && args.len() == 2 {
            return self.list(args);
        }
        if args.len() == 2 {
            if let Some(op) = self.table.infix(name) {
                let (la, ra) = op.arg_priorities();
                let wrap = op.priority > max;
                if wrap {
                    self.emit("(");
                }
                self.operand(&args[0], la);
                if name == "," {
                    self.out.push(',');
                } else if name.chars().all(is_alnum) {
                    self.out.push(' ');
                    self.out.push_str(name);
                    self.out.push(' ');
                } else {
                    self.emit(name);
                }
                self.operand(&args[1], ra);
                if wrap {
                    self.out.push(')');
                }
                return;
            }
        }
        if args.len() == 1 {
            if let Some(op) = self.table.prefix(name) {
                let wrap = op.priority > max;
                if wrap {
                    self.emit("(");
                }
                self.emit(name);
                self.out.push(' ');
                self.operand(&args[0], op.arg_priorities().1);
                if wrap {
                    self.out.push(')');
                }
                return;
            }
        }
        let functor = self.atom_text(name);
        self.emit(&functor);
        self.out.push('(');
        for (i, arg) in args.iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            self.term(arg, 999);
        }
        self.out.push(')');
    }

    fn list(&mut self, cell: &[Term]) {
        self.emit("[");
        self.term(&cell[0], 999);
        let mut tail = &cell[1];
        loop {
            match tail {
                Term::Struct(f, args) if &**f == CONS && args.len() == 2 => {
                    self.out.push(',');
                    self.term(&args[0], 999);
                    tail = &args[1];
                }
                Term::Atom(a) if &**a == NIL => break,
                other => {
                    self.out.push('|');
                    self.term(other, 999);
                    break;
                }
            }
        }
        self.out.push(']');
    }
}
