//! Printing terms back to source syntax.

use std::collections::HashMap;
use std::fmt::{self, Write};

use super::ops::{OpTable, OpType};
use super::term::{Term, VarId};

/// Renders terms so that, with `quoted` set, the output reads back to the
/// same term.
pub struct TermWriter<'a> {
    pub ops: &'a OpTable,
    pub quoted: bool,
    pub var_names: Option<&'a HashMap<VarId, String>>,
}

impl<'a> TermWriter<'a> {
    pub fn new(ops: &'a OpTable) -> TermWriter<'a> {
        TermWriter {
            ops,
            quoted: true,
            var_names: None,
        }
    }

    pub fn to_string(&self, t: &Term) -> String {
        let mut s = String::new();
        self.write(&mut s, t, 1200).expect("writing to a String cannot fail");
        s
    }

    fn atom(&self, out: &mut String, name: &str) -> fmt::Result {
        if self.quoted && needs_quotes(name) {
            out.push('\'');
            for c in name.chars() {
                match c {
                    '\'' => out.push_str("\\'"),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('\'');
            Ok(())
        } else {
            out.write_str(name)
        }
    }

    /// Writes an atom that stands alone as an operand, bracketing operators.
    fn operand_atom(&self, out: &mut String, name: &str, max: u16) -> fmt::Result {
        let prec = self.ops.iter().filter(|o| o.name == name).map(|o| o.precedence).max().unwrap_or(0);
        if prec > max {
            out.push('(');
            self.atom(out, name)?;
            out.push(')');
            Ok(())
        } else {
            self.atom(out, name)
        }
    }

    pub fn write(&self, out: &mut String, t: &Term, max: u16) -> fmt::Result {
        match t {
            Term::Atom(a) => self.operand_atom(out, a, max),
            Term::Var(v) => match self.var_names.and_then(|m| m.get(v)) {
                Some(n) => out.write_str(n),
                None => write!(out, "_G{v}"),
            },
            Term::Int(i) => write!(out, "{i}"),
            Term::Float(f) => out.write_str(&format_float(*f)),
            Term::Str(s) => {
                if self.quoted {
                    out.push('"');
                    for c in s.chars() {
                        match c {
                            '"' => out.push_str("\\\""),
                            '\\' => out.push_str("\\\\"),
                            '\n' => out.push_str("\\n"),
                            c => out.push(c),
                        }
                    }
                    out.push('"');
                    Ok(())
                } else {
                    out.write_str(s)
                }
            }
            Term::Compound(c) => {
                if t.as_cons().is_some() {
                    return self.list(out, t);
                }
                let name = &*c.functor;
                if name == "{}" && c.args.len() == 1 {
                    out.push('{');
                    self.write(out, &c.args[0], 1200)?;
                    out.push('}');
                    return Ok(());
                }
                if c.args.len() == 2 {
                    if let Some(op) = self.ops.infix(name) {
                        let (lmax, rmax) = op.kind.arg_limits(op.precedence);
                        let paren = op.precedence > max;
                        if paren {
                            out.push('(');
                        }
                        self.write(out, &c.args[0], lmax)?;
                        let mut right = String::new();
                        self.write(&mut right, &c.args[1], rmax)?;
                        if name == "," {
                            out.push_str(", ");
                        } else if spaced_op(name, op.precedence) {
                            out.push(' ');
                            self.atom(out, name)?;
                            out.push(' ');
                        } else {
                            if out.ends_with(is_symbol_char) {
                                out.push(' ');
                            }
                            self.atom(out, name)?;
                            if right.starts_with(|ch: char| is_symbol_char(ch) || ch == '(') {
                                out.push(' ');
                            }
                        }
                        out.push_str(&right);
                        if paren {
                            out.push(')');
                        }
                        return Ok(());
                    }
                }
                if c.args.len() == 1 {
                    if let Some(op) = self.ops.prefix(name) {
                        let arg_max = match op.kind {
                            OpType::Fy => op.precedence,
                            _ => op.precedence - 1,
                        };
                        let paren = op.precedence > max;
                        if paren {
                            out.push('(');
                        }
                        self.atom(out, name)?;
                        let mut operand = String::new();
                        self.write(&mut operand, &c.args[0], arg_max)?;
                        let symbolic = name.chars().all(is_symbol_char);
                        if !symbolic || operand.starts_with(|ch: char| is_symbol_char(ch) || ch.is_ascii_digit() || ch == '(') {
                            out.push(' ');
                        }
                        out.push_str(&operand);
                        if paren {
                            out.push(')');
                        }
                        return Ok(());
                    }
                }
                self.atom(out, name)?;
                out.push('(');
                for (i, a) in c.args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.write(out, a, 999)?;
                }
                out.push(')');
                Ok(())
            }
        }
    }

    fn list(&self, out: &mut String, t: &Term) -> fmt::Result {
        out.push('[');
        let mut cur = t;
        let mut first = true;
        loop {
            match cur.as_cons() {
                Some((h, tail)) => {
                    if !first {
                        out.push_str(", ");
                    }
                    first = false;
                    self.write(out, h, 999)?;
                    cur = tail;
                }
                None => {
                    if !cur.is_nil() {
                        out.push('|');
                        self.write(out, cur, 999)?;
                    }
                    break;
                }
            }
        }
        out.push(']');
        Ok(())
    }
}

pub fn format_float(f: f64) -> String {
    if f.is_finite() {
        let s = format!("{f:?}");
        if s.contains(['.', 'e', 'E']) {
            s
        } else {
            format!("{s}.0")
        }
    } else if f.is_nan() {
        "nan".to_string()
    } else if f > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn is_symbol_char(c: char) -> bool {
    "+-*/\\^<>=~:.?@#&$".contains(c)
}

/// Alphanumeric operators and the clause-level connectives print with
/// surrounding spaces; other symbolic operators print compactly.
fn spaced_op(name: &str, precedence: u16) -> bool {
    precedence >= 1000 || !name.chars().all(is_symbol_char)
}

fn needs_quotes(name: &str) -> bool {
    if matches!(name, "[]" | "!" | ";" | "{}") {
        return false;
    }
    let mut chars = name.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_lowercase() => !name.chars().all(|c| c.is_alphanumeric() || c == '_'),
        Some(_) => !name.chars().all(is_symbol_char),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        thread_local! {
            static OPS: OpTable = OpTable::default();
        }
        let text = OPS.with(|ops| TermWriter::new(ops).to_string(self));
        f.write_str(&text)
    }
}
