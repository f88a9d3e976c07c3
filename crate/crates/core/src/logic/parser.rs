//! Tokenizer and operator-precedence parser for program text.

use std::collections::HashMap;
use std::fmt;

use super::ops::{OpTable, OpType};
use super::term::{Term, VarId};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub message: String,
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at offset {} (line {}, column {}): {}",
            self.offset, self.line, self.column, self.message
        )
    }
}

/// A term read from source text together with the names of its variables.
#[derive(Clone, Debug)]
pub struct ReadTerm {
    pub term: Term,
    /// Named variables in order of first appearance; `_` is never listed.
    pub var_names: Vec<(String, VarId)>,
    /// Number of distinct variables, anonymous ones included.
    pub var_count: usize,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    QName(String),
    Var(String),
    Int(i64),
    Float(f64),
    Str(String),
    Open,
    OpenCt,
    Close,
    OpenList,
    CloseList,
    OpenCurly,
    CloseCurly,
    Comma,
    Bar,
    End,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    offset: usize,
    /// True when whitespace or a comment separates this token from the previous one.
    layout_before: bool,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_char_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn error(&self, offset: usize, message: impl Into<String>) -> SyntaxError {
        position_error(self.src, offset, message)
    }

    fn skip_layout(&mut self) -> Result<bool, SyntaxError> {
        let start = self.pos;
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some('/') if self.peek_char_at(1) == Some('*') => {
                    let open = self.pos;
                    self.pos += 2;
                    match self.src[self.pos..].find("*/") {
                        Some(i) => self.pos += i + 2,
                        None => return Err(self.error(open, "unterminated block comment")),
                    }
                }
                _ => break,
            }
        }
        Ok(self.pos > start)
    }

    fn next(&mut self) -> Result<Token, SyntaxError> {
        let layout_before = self.skip_layout()?;
        let offset = self.pos;
        let tok = |tok| {
            Ok(Token {
                tok,
                offset,
                layout_before,
            })
        };
        let Some(c) = self.peek_char() else {
            return tok(Tok::Eof);
        };
        if c.is_ascii_digit() {
            return tok(self.number()?);
        }
        if c == '_' || c.is_uppercase() {
            return tok(Tok::Var(self.ident()));
        }
        if c.is_alphabetic() {
            return tok(Tok::Name(self.ident()));
        }
        match c {
            '(' => {
                self.bump();
                tok(if layout_before { Tok::Open } else { Tok::OpenCt })
            }
            ')' => {
                self.bump();
                tok(Tok::Close)
            }
            '[' => {
                self.bump();
                tok(Tok::OpenList)
            }
            ']' => {
                self.bump();
                tok(Tok::CloseList)
            }
            '{' => {
                self.bump();
                tok(Tok::OpenCurly)
            }
            '}' => {
                self.bump();
                tok(Tok::CloseCurly)
            }
            ',' => {
                self.bump();
                tok(Tok::Comma)
            }
            '|' => {
                self.bump();
                if self.peek_char() == Some('|') {
                    self.bump();
                    return tok(Tok::Name("||".into()));
                }
                tok(Tok::Bar)
            }
            '!' | ';' => {
                self.bump();
                tok(Tok::Name(c.to_string()))
            }
            '\'' => {
                self.bump();
                tok(Tok::QName(self.quoted('\'', offset)?))
            }
            '"' => {
                self.bump();
                tok(Tok::Str(self.quoted('"', offset)?))
            }
            '.' if self.peek_char_at(1).is_none_or(|n| n.is_whitespace() || n == '%') => {
                self.bump();
                tok(Tok::End)
            }
            c if SYMBOL_CHARS.contains(c) => {
                let start = self.pos;
                while self.peek_char().is_some_and(|c| SYMBOL_CHARS.contains(c)) {
                    self.bump();
                }
                tok(Tok::Name(self.src[start..self.pos].to_string()))
            }
            other => Err(self.error(offset, format!("unexpected character {other:?}"))),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.peek_char().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn number(&mut self) -> Result<Tok, SyntaxError> {
        let start = self.pos;
        if self.peek_char() == Some('0') && self.peek_char_at(1) == Some('\'') {
            self.pos += 2;
            let c = match self.bump() {
                Some('\\') => match self.bump() {
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some(c) => c,
                    None => return Err(self.error(start, "unterminated character code")),
                },
                Some('\'') if self.peek_char() == Some('\'') => {
                    self.bump();
                    '\''
                }
                Some(c) => c,
                None => return Err(self.error(start, "unterminated character code")),
            };
            return Ok(Tok::Int(c as i64));
        }
        while self.peek_char().is_some_and(|c| c.is_ascii_digit() || c == '_') {
            self.bump();
        }
        let mut is_float = false;
        if self.peek_char() == Some('.') && self.peek_char_at(1).is_some_and(|c| c.is_ascii_digit()) {
            is_float = true;
            self.bump();
            while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek_char(), Some('e' | 'E')) {
            let save = self.pos;
            self.bump();
            if matches!(self.peek_char(), Some('+' | '-')) {
                self.bump();
            }
            if self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                self.pos = save;
            }
        }
        let text: String = self.src[start..self.pos].chars().filter(|&c| c != '_').collect();
        if is_float {
            text.parse().map(Tok::Float).map_err(|_| self.error(start, "malformed float"))
        } else {
            text.parse().map(Tok::Int).map_err(|_| self.error(start, "integer out of range"))
        }
    }

    fn quoted(&mut self, quote: char, open: usize) -> Result<String, SyntaxError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(open, "unterminated quoted text")),
                Some(c) if c == quote => {
                    if self.peek_char() == Some(quote) {
                        self.bump();
                        out.push(quote);
                    } else {
                        return Ok(out);
                    }
                }
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some('0') => out.push('\0'),
                    Some('\n') => {}
                    Some(c) => out.push(c),
                    None => return Err(self.error(open, "unterminated quoted text")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}

fn position_error(src: &str, offset: usize, message: impl Into<String>) -> SyntaxError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    SyntaxError {
        message: message.into(),
        offset,
        line,
        column,
    }
}

/// Reads clause terms from source text, one per terminating `.`.
pub struct Parser<'a> {
    lexer: Lexer<'a>,
    ops: &'a OpTable,
    peeked: Option<Token>,
    vars: HashMap<String, VarId>,
    var_names: Vec<(String, VarId)>,
    var_count: usize,
}

impl<'a> Parser<'a> {
    pub fn new(src: &'a str, ops: &'a OpTable) -> Parser<'a> {
        Parser {
            lexer: Lexer { src, pos: 0 },
            ops,
            peeked: None,
            vars: HashMap::new(),
            var_names: Vec::new(),
            var_count: 0,
        }
    }

    fn peek(&mut self) -> Result<&Token, SyntaxError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    fn advance(&mut self) -> Result<Token, SyntaxError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next(),
        }
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> SyntaxError {
        self.lexer.error(offset, message)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SyntaxError> {
        let t = self.advance()?;
        if t.tok == want {
            Ok(())
        } else {
            Err(self.error_at(t.offset, format!("expected {what}")))
        }
    }

    /// Reads the next clause; `None` at end of input.
    pub fn next_clause(&mut self) -> Result<Option<ReadTerm>, SyntaxError> {
        if self.peek()?.tok == Tok::Eof {
            return Ok(None);
        }
        self.vars.clear();
        self.var_names.clear();
        self.var_count = 0;
        let start = self.peek()?.offset;
        let term = self.parse(1200)?.0;
        let t = self.advance()?;
        match t.tok {
            Tok::End => {}
            Tok::Eof => return Err(self.error_at(t.offset, "unterminated clause (missing '.')")),
            _ => return Err(self.error_at(t.offset, "operator expected")),
        }
        let line = position_error(self.lexer.src, start, "").line;
        Ok(Some(ReadTerm {
            term,
            var_names: std::mem::take(&mut self.var_names),
            var_count: self.var_count,
            line,
        }))
    }

    fn var(&mut self, name: String) -> Term {
        if name == "_" {
            let id = self.var_count;
            self.var_count += 1;
            return Term::Var(id);
        }
        if let Some(&id) = self.vars.get(&name) {
            return Term::Var(id);
        }
        let id = self.var_count;
        self.var_count += 1;
        self.vars.insert(name.clone(), id);
        self.var_names.push((name, id));
        Term::Var(id)
    }

    /// Whether the token can begin a term (used to decide if a prefix
    /// operator is applied or stands alone as an atom).
    fn starts_term(&self, t: &Token) -> bool {
        match &t.tok {
            Tok::Name(n) => self.ops.infix(n).is_none() || self.ops.prefix(n).is_some(),
            Tok::QName(_)
            | Tok::Var(_)
            | Tok::Int(_)
            | Tok::Float(_)
            | Tok::Str(_)
            | Tok::Open
            | Tok::OpenCt
            | Tok::OpenList
            | Tok::OpenCurly => true,
            _ => false,
        }
    }

    fn parse(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let (mut left, mut left_prec) = self.parse_primary(max)?;
        loop {
            let t = self.peek()?.clone();
            let name = match &t.tok {
                Tok::Name(n) => n.clone(),
                Tok::Comma => ",".to_string(),
                Tok::Bar => ";".to_string(),
                _ => break,
            };
            let Some(op) = self.ops.infix(&name) else {
                break;
            };
            let (prec, kind) = (op.precedence, op.kind);
            let (left_max, right_max) = kind.arg_limits(prec);
            if prec > max || left_prec > left_max {
                break;
            }
            self.advance()?;
            let (right, _) = self.parse(right_max)?;
            left = Term::compound(&name, vec![left, right]);
            left_prec = prec;
        }
        Ok((left, left_prec))
    }

    fn parse_primary(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let t = self.advance()?;
        match t.tok {
            Tok::Int(v) => Ok((Term::Int(v), 0)),
            Tok::Float(v) => Ok((Term::Float(v), 0)),
            Tok::Str(s) => Ok((Term::string(&s), 0)),
            Tok::Var(name) => Ok((self.var(name), 0)),
            Tok::Open | Tok::OpenCt => {
                let (inner, _) = self.parse(1200)?;
                self.expect(Tok::Close, "')'")?;
                Ok((inner, 0))
            }
            Tok::OpenList => {
                if self.peek()?.tok == Tok::CloseList {
                    self.advance()?;
                    return self.after_name("[]".into(), max);
                }
                let mut items = vec![self.parse(999)?.0];
                loop {
                    let t = self.advance()?;
                    match t.tok {
                        Tok::Comma => items.push(self.parse(999)?.0),
                        Tok::Bar => {
                            let tail = self.parse(999)?.0;
                            self.expect(Tok::CloseList, "']'")?;
                            return Ok((Term::list_with_tail(items, tail), 0));
                        }
                        Tok::CloseList => return Ok((Term::list(items), 0)),
                        _ => return Err(self.error_at(t.offset, "expected ',', '|' or ']' in list")),
                    }
                }
            }
            Tok::OpenCurly => {
                if self.peek()?.tok == Tok::CloseCurly {
                    self.advance()?;
                    return self.after_name("{}".into(), max);
                }
                let (inner, _) = self.parse(1200)?;
                self.expect(Tok::CloseCurly, "'}'")?;
                Ok((Term::compound("{}", vec![inner]), 0))
            }
            Tok::QName(name) => {
                if self.peek()?.tok == Tok::OpenCt {
                    self.advance()?;
                    let args = self.arguments()?;
                    return Ok((Term::compound(&name, args), 0));
                }
                Ok((Term::atom(&name), 0))
            }
            Tok::Name(name) => self.after_name(name, max),
            Tok::End => Err(self.error_at(t.offset, "unexpected end of clause")),
            Tok::Eof => Err(self.error_at(t.offset, "unexpected end of input")),
            _ => Err(self.error_at(t.offset, "unexpected token")),
        }
    }

    fn after_name(&mut self, name: String, max: u16) -> Result<(Term, u16), SyntaxError> {
        let next = self.peek()?.clone();
        if next.tok == Tok::OpenCt {
            self.advance()?;
            let args = self.arguments()?;
            return Ok((Term::compound(&name, args), 0));
        }
        if (name == "-" || name == "+") && !next.layout_before {
            match next.tok {
                Tok::Int(v) => {
                    self.advance()?;
                    return Ok((Term::Int(if name == "-" { -v } else { v }), 0));
                }
                Tok::Float(v) => {
                    self.advance()?;
                    return Ok((Term::Float(if name == "-" { -v } else { v }), 0));
                }
                _ => {}
            }
        }
        if let Some(op) = self.ops.prefix(&name) {
            if self.starts_term(&next) {
                let (mut prec, kind) = (op.precedence, op.kind);
                if prec > max {
                    prec = 999;
                }
                let arg_max = match kind {
                    OpType::Fy => prec,
                    _ => prec - 1,
                };
                let (arg, _) = self.parse(arg_max)?;
                return Ok((Term::compound(&name, vec![arg]), prec));
            }
        }
        // Bare operator atoms are accepted as plain operands.
        Ok((Term::atom(&name), 0))
    }

    fn arguments(&mut self) -> Result<Vec<Term>, SyntaxError> {
        let mut args = vec![self.parse(999)?.0];
        loop {
            let t = self.advance()?;
            match t.tok {
                Tok::Comma => args.push(self.parse(999)?.0),
                Tok::Close => return Ok(args),
                Tok::Eof => return Err(self.error_at(t.offset, "unexpected end of input")),
                _ => return Err(self.error_at(t.offset, "expected ',' or ')'")),
            }
        }
    }
}

/// Reads every clause term in `src`.
pub fn read_terms(src: &str, ops: &OpTable) -> Result<Vec<ReadTerm>, SyntaxError> {
    let mut parser = Parser::new(src, ops);
    let mut out = Vec::new();
    while let Some(t) = parser.next_clause()? {
        out.push(t);
    }
    Ok(out)
}

/// Reads a single goal; the trailing `.` is optional.
pub fn read_goal(src: &str, ops: &OpTable) -> Result<ReadTerm, SyntaxError> {
    let trimmed = src.trim_end();
    let owned;
    let text = if trimmed.ends_with('.') && !trimmed.ends_with("..") {
        trimmed
    } else {
        owned = format!("{trimmed} .");
        &owned
    };
    let mut terms = read_terms(text, ops)?;
    match terms.len() {
        1 => Ok(terms.pop().unwrap()),
        0 => Err(position_error(text, 0, "empty goal")),
        _ => Err(position_error(text, 0, "expected a single goal")),
    }
}
