use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpType {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
}

impl OpType {
    pub fn is_prefix(self) -> bool {
        matches!(self, OpType::Fy | OpType::Fx)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OpType::Xfx => "xfx",
            OpType::Xfy => "xfy",
            OpType::Yfx => "yfx",
            OpType::Fy => "fy",
            OpType::Fx => "fx",
        }
    }

    /// Maximum precedence of the left and right arguments for an operator of
    /// precedence `prec`.
    pub fn arg_limits(self, prec: u16) -> (u16, u16) {
        let below = prec.saturating_sub(1);
        match self {
            OpType::Xfx => (below, below),
            OpType::Xfy => (below, prec),
            OpType::Yfx => (prec, below),
            OpType::Fy => (0, prec),
            OpType::Fx => (0, below),
        }
    }
}

impl fmt::Display for OpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OpType {
    type Err = String;

    fn from_str(s: &str) -> Result<OpType, String> {
        match s {
            "xfx" => Ok(OpType::Xfx),
            "xfy" => Ok(OpType::Xfy),
            "yfx" => Ok(OpType::Yfx),
            "fy" => Ok(OpType::Fy),
            "fx" => Ok(OpType::Fx),
            other => Err(format!("unknown operator type {other}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpDef {
    pub precedence: u16,
    pub kind: OpType,
    pub name: String,
}

#[derive(Clone, Debug)]
pub struct OpTable {
    ops: Vec<OpDef>,
}

const DEFAULT_OPS: &[(u16, OpType, &str)] = &[
    (1200, OpType::Xfx, ":-"),
    (1200, OpType::Fx, ":-"),
    (1200, OpType::Fx, "?-"),
    (1150, OpType::Fx, "dynamic"),
    (1100, OpType::Xfy, ";"),
    (1050, OpType::Xfy, "->"),
    (1000, OpType::Xfy, ","),
    (900, OpType::Fy, "\\+"),
    (700, OpType::Xfx, "="),
    (700, OpType::Xfx, "\\="),
    (700, OpType::Xfx, "=="),
    (700, OpType::Xfx, "\\=="),
    (700, OpType::Xfx, "@<"),
    (700, OpType::Xfx, "@>"),
    (700, OpType::Xfx, "@=<"),
    (700, OpType::Xfx, "@>="),
    (700, OpType::Xfx, "is"),
    (700, OpType::Xfx, "<"),
    (700, OpType::Xfx, ">"),
    (700, OpType::Xfx, "=<"),
    (700, OpType::Xfx, ">="),
    (700, OpType::Xfx, "=:="),
    (700, OpType::Xfx, "=\\="),
    (700, OpType::Xfx, "=.."),
    (500, OpType::Yfx, "+"),
    (500, OpType::Yfx, "-"),
    (400, OpType::Yfx, "*"),
    (400, OpType::Yfx, "/"),
    (400, OpType::Yfx, "//"),
    (400, OpType::Yfx, "mod"),
    (400, OpType::Yfx, "rem"),
    (200, OpType::Xfx, "**"),
    (200, OpType::Xfy, "^"),
    (200, OpType::Fy, "-"),
    (200, OpType::Fy, "+"),
];

impl Default for OpTable {
    fn default() -> OpTable {
        OpTable {
            ops: DEFAULT_OPS
                .iter()
                .map(|&(precedence, kind, name)| OpDef {
                    precedence,
                    kind,
                    name: name.to_string(),
                })
                .collect(),
        }
    }
}

impl OpTable {
    pub fn iter(&self) -> impl Iterator<Item = &OpDef> {
        self.ops.iter()
    }

    pub fn prefix(&self, name: &str) -> Option<&OpDef> {
        self.ops.iter().find(|o| o.name == name && o.kind.is_prefix())
    }

    pub fn infix(&self, name: &str) -> Option<&OpDef> {
        self.ops.iter().find(|o| o.name == name && !o.kind.is_prefix())
    }

    pub fn is_op(&self, name: &str) -> bool {
        self.ops.iter().any(|o| o.name == name)
    }

    /// Adds or replaces a definition of the same name and class (prefix/infix).
    pub fn add(&mut self, def: OpDef) {
        self.ops
            .retain(|o| !(o.name == def.name && o.kind.is_prefix() == def.kind.is_prefix()));
        if def.precedence > 0 {
            self.ops.push(def);
        }
    }
}
