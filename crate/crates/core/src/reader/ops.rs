//! The fixed operator table.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixity {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
}

impl Fixity {
    pub fn is_prefix(self) -> bool {
        matches!(self, Fixity::Fy | Fixity::Fx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpDef {
    pub name: &'static str,
    pub priority: u16,
    pub fixity: Fixity,
}

impl OpDef {
    /// Maximum priorities of the (left, right) arguments. Prefix operators
    /// only use the right one.
    pub fn arg_priorities(&self) -> (u16, u16) {
        let p = self.priority;
        match self.fixity {
            Fixity::Xfx => (p - 1, p - 1),
            Fixity::Xfy => (p - 1, p),
            Fixity::Yfx => (p, p - 1),
            Fixity::Fy => (0, p),
            Fixity::Fx => (0, p - 1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorTable {
    entries: Vec<OpDef>,
}

const fn op(name: &'static str, priority: u16, fixity: Fixity) -> OpDef {
    OpDef {
        name,
        priority,
        fixity,
    }
}

static STANDARD: &[OpDef] = &[
    op(":-", 1200, Fixity::Xfx),
    op(";", 1100, Fixity::Xfy),
    op(",", 1000, Fixity::Xfy),
    op("\\+", 900, Fixity::Fy),
    op("=", 700, Fixity::Xfx),
    op("\\=", 700, Fixity::Xfx),
    op("==", 700, Fixity::Xfx),
    op("\\==", 700, Fixity::Xfx),
    op("is", 700, Fixity::Xfx),
    op("<", 700, Fixity::Xfx),
    op(">", 700, Fixity::Xfx),
    op("=<", 700, Fixity::Xfx),
    op(">=", 700, Fixity::Xfx),
    op("=:=", 700, Fixity::Xfx),
    op("=\\=", 700, Fixity::Xfx),
    op("#=", 700, Fixity::Xfx),
    op("#<", 700, Fixity::Xfx),
    op("#=<", 700, Fixity::Xfx),
    op("#>", 700, Fixity::Xfx),
    op("#>=", 700, Fixity::Xfx),
    op("in", 700, Fixity::Xfx),
    op("..", 550, Fixity::Xfx),
    op("+", 500, Fixity::Yfx),
    op("-", 500, Fixity::Yfx),
    op("*", 400, Fixity::Yfx),
    op("/", 400, Fixity::Yfx),
    op("-", 200, Fixity::Fy),
];

impl OperatorTable {
    pub fn standard() -> OperatorTable {
        OperatorTable {
            entries: STANDARD.to_vec(),
        }
    }

    pub fn entries(&self) -> &[OpDef] {
        &self.entries
    }

    pub fn infix(&self, name: &str) -> Option<OpDef> {
        self.entries
            .iter()
            .find(|d| d.name == name && !d.fixity.is_prefix())
            .copied()
    }

    pub fn prefix(&self, name: &str) -> Option<OpDef> {
        self.entries
            .iter()
            .find(|d| d.name == name && d.fixity.is_prefix())
            .copied()
    }

    pub fn is_op(&self, name: &str) -> bool {
        self.entries.iter().any(|d| d.name == name)
    }
}

impl Default for OperatorTable {
    fn default() -> Self {
        OperatorTable::standard()
    }
}
