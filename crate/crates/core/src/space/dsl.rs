//! Lexer, parser and evaluator for the pragma design-space language.
//!
//! A design-space file is a sequence of `loop:` attachment lines and
//! `#pragma ACCEL` blocks whose option lists are written as list
//! comprehensions:
//!
//! ```text
//! loop: j
//! #pragma ACCEL PIPELINE mode=auto{ options: P1=[x for x in [off,cg,fg]]; default: off }
//! #pragma ACCEL PARALLEL factor=auto{ options: P2=[x for x in [1,2,4] if P1!=cg]; default: 1 }
//! ```
//!
//! The full grammar is documented in `docs/design-space-grammar.md`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::value::{OptionValue, PipelineMode};

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl std::error::Error for SyntaxError {}

fn syntax<T>(pos: Pos, message: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError {
        pos,
        message: message.into(),
    })
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Quoted(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Quoted(s) => write!(f, "`'{s}'`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

const SYMBOLS: &[&str] = &[
    "==", "!=", "<=", ">=", "//", "[", "]", "{", "}", "(", ")", ",", ";", ":", "=", "<", ">",
    "+", "-", "*", "%", "#",
];

fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    // `//` is integer division inside brackets and a line comment elsewhere.
    let mut bracket_depth = 0usize;

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && bracket_depth == 0 && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(s),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let v = match s.parse::<i64>() {
                Ok(v) => v,
                Err(_) => return syntax(pos, format!("integer literal `{s}` out of range")),
            };
            out.push(Token {
                tok: Tok::Int(v),
                pos,
            });
            continue;
        }
        if c == '\'' || c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != c && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != c {
                return syntax(pos, "unterminated quoted value");
            }
            let s: String = chars[start..j].iter().collect();
            col += j + 1 - i;
            i = j + 1;
            out.push(Token {
                tok: Tok::Quoted(s),
                pos,
            });
            continue;
        }
        let mut matched = None;
        for sym in SYMBOLS {
            let n = sym.chars().count();
            if i + n <= chars.len() && chars[i..i + n].iter().copied().eq(sym.chars()) {
                matched = Some(*sym);
                break;
            }
        }
        match matched {
            Some(sym) => {
                match sym {
                    "[" => bracket_depth += 1,
                    "]" => bracket_depth = bracket_depth.saturating_sub(1),
                    _ => {}
                }
                let n = sym.len();
                i += n;
                col += n;
                out.push(Token {
                    tok: Tok::Sym(sym),
                    pos,
                });
            }
            None => return syntax(pos, format!("unexpected character `{c}`")),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    FloorDiv,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::FloorDiv | BinOp::Mod => 5,
        }
    }

    fn from_token(tok: &Tok) -> Option<BinOp> {
        Some(match tok {
            Tok::Ident(s) if s == "or" => BinOp::Or,
            Tok::Ident(s) if s == "and" => BinOp::And,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("//") => BinOp::FloorDiv,
            Tok::Sym("%") => BinOp::Mod,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Mode(PipelineMode),
    Name(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Every identifier referenced by the expression.
    pub fn names(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Name(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(e) => e.names(out),
            Expr::Binary(_, a, b) => {
                a.names(out);
                b.names(out);
            }
            Expr::Int(_) | Expr::Mode(_) => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => 6,
            _ => 7,
        }
    }

    /// Evaluates the expression, resolving names through `lookup`.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<OptionValue>) -> Result<Val, String> {
        match self {
            Expr::Int(v) => Ok(Val::Int(*v)),
            Expr::Mode(m) => Ok(Val::Mode(*m)),
            Expr::Name(n) => match lookup(n) {
                Some(OptionValue::Factor(v)) => Ok(Val::Int(v)),
                Some(OptionValue::Mode(m)) => Ok(Val::Mode(m)),
                None => Err(format!("`{n}` has no value in this context")),
            },
            Expr::Neg(e) => match e.eval(lookup)? {
                Val::Int(v) => v
                    .checked_neg()
                    .map(Val::Int)
                    .ok_or_else(|| "integer overflow".to_string()),
                other => Err(format!("cannot negate {}", other.sort())),
            },
            Expr::Binary(op, a, b) => {
                let lhs = a.eval(lookup)?;
                // and/or short-circuit like Python
                match (op, lhs) {
                    (BinOp::And, Val::Bool(false)) => return Ok(Val::Bool(false)),
                    (BinOp::Or, Val::Bool(true)) => return Ok(Val::Bool(true)),
                    _ => {}
                }
                let rhs = b.eval(lookup)?;
                apply(*op, lhs, rhs)
            }
        }
    }
}

/// Runtime value of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Val {
    Int(i64),
    Mode(PipelineMode),
    Bool(bool),
}

impl Val {
    fn sort(self) -> &'static str {
        match self {
            Val::Int(_) => "integer",
            Val::Mode(_) => "mode",
            Val::Bool(_) => "boolean",
        }
    }
}

fn apply(op: BinOp, lhs: Val, rhs: Val) -> Result<Val, String> {
    use BinOp::*;
    let mismatch = || {
        Err(format!(
            "operator `{}` cannot combine {} and {}",
            op.symbol(),
            lhs.sort(),
            rhs.sort()
        ))
    };
    match (op, lhs, rhs) {
        (And, Val::Bool(a), Val::Bool(b)) => Ok(Val::Bool(a && b)),
        (Or, Val::Bool(a), Val::Bool(b)) => Ok(Val::Bool(a || b)),
        (Eq, Val::Int(a), Val::Int(b)) => Ok(Val::Bool(a == b)),
        (Ne, Val::Int(a), Val::Int(b)) => Ok(Val::Bool(a != b)),
        (Eq, Val::Mode(a), Val::Mode(b)) => Ok(Val::Bool(a == b)),
        (Ne, Val::Mode(a), Val::Mode(b)) => Ok(Val::Bool(a != b)),
        (Eq, Val::Bool(a), Val::Bool(b)) => Ok(Val::Bool(a == b)),
        (Ne, Val::Bool(a), Val::Bool(b)) => Ok(Val::Bool(a != b)),
        (Lt, Val::Int(a), Val::Int(b)) => Ok(Val::Bool(a < b)),
        (Le, Val::Int(a), Val::Int(b)) => Ok(Val::Bool(a <= b)),
        (Gt, Val::Int(a), Val::Int(b)) => Ok(Val::Bool(a > b)),
        (Ge, Val::Int(a), Val::Int(b)) => Ok(Val::Bool(a >= b)),
        (Add, Val::Int(a), Val::Int(b)) => a.checked_add(b).map(Val::Int).ok_or_else(overflow),
        (Sub, Val::Int(a), Val::Int(b)) => a.checked_sub(b).map(Val::Int).ok_or_else(overflow),
        (Mul, Val::Int(a), Val::Int(b)) => a.checked_mul(b).map(Val::Int).ok_or_else(overflow),
        (FloorDiv, Val::Int(_), Val::Int(0)) | (Mod, Val::Int(_), Val::Int(0)) => {
            Err("integer division by zero".to_string())
        }
        (FloorDiv, Val::Int(a), Val::Int(b)) => a
            .checked_div_euclid(b)
            .map(|q| {
                // Python floors toward negative infinity
                if b < 0 && a.rem_euclid(b) != 0 {
                    Val::Int(q - 1)
                } else {
                    Val::Int(q)
                }
            })
            .ok_or_else(overflow),
        (Mod, Val::Int(a), Val::Int(b)) => {
            let r = a.checked_rem(b).ok_or_else(overflow)?;
            Ok(Val::Int(if r != 0 && (r < 0) != (b < 0) { r + b } else { r }))
        }
        _ => mismatch(),
    }
}

fn overflow() -> String {
    "integer overflow".to_string()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Mode(m) => write!(f, "{m}"),
            Expr::Name(n) => f.write_str(n),
            Expr::Neg(e) => {
                if e.precedence() < 6 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                // comparisons do not chain, so both sides need parens at equal precedence
                let comparison = p == 3;
                if a.precedence() < p || (comparison && a.precedence() == p) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if b.precedence() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

/// `[head for var in [items] if cond]`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comprehension {
    pub head: Expr,
    pub var: String,
    pub items: Vec<OptionValue>,
    pub cond: Option<Expr>,
}

impl fmt::Display for Comprehension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} for {} in [", self.head, self.var)?;
        for (i, v) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")?;
        if let Some(c) = &self.cond {
            write!(f, " if {c}")?;
        }
        f.write_str("]")
    }
}

/// Pragma category a parameter controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PragmaKind {
    Pipeline,
    Parallel,
    Tiling,
}

impl PragmaKind {
    pub fn keyword(self) -> &'static str {
        match self {
            PragmaKind::Pipeline => "PIPELINE",
            PragmaKind::Parallel => "PARALLEL",
            PragmaKind::Tiling => "TILING",
        }
    }

    /// Attribute key the pragma's value is written under.
    pub fn attribute(self) -> &'static str {
        match self {
            PragmaKind::Pipeline => "mode",
            PragmaKind::Parallel | PragmaKind::Tiling => "factor",
        }
    }

    fn from_keyword(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PIPELINE" => Some(PragmaKind::Pipeline),
            "PARALLEL" => Some(PragmaKind::Parallel),
            "TILING" | "TILE" => Some(PragmaKind::Tiling),
            _ => None,
        }
    }
}

impl fmt::Display for PragmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// One parsed pragma block before name resolution.
#[derive(Debug, Clone)]
pub struct RawParam {
    pub scope: String,
    pub kind: PragmaKind,
    pub name: String,
    pub options: Comprehension,
    pub default: OptionValue,
    pub pos: Pos,
    /// Position of each identifier in the head and condition, for error reporting.
    pub name_refs: Vec<(String, Pos)>,
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

const RESERVED: &[&str] = &["for", "in", "if", "and", "or", "off", "cg", "fg"];

struct Parser {
    toks: Vec<Token>,
    at: usize,
    refs: Vec<(String, Pos)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<Pos, SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Sym(x) if x == s => Ok(t.pos),
            other => syntax(t.pos, format!("expected `{s}`, found {other}")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Pos, SyntaxError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(x) if x == kw => Ok(t.pos),
            other => syntax(t.pos, format!("expected `{kw}`, found {other}")),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(x) if !RESERVED.contains(&x.as_str()) => Ok((x, t.pos)),
            other => syntax(t.pos, format!("expected {what}, found {other}")),
        }
    }

    fn value(&mut self) -> Result<OptionValue, SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Ok(OptionValue::Factor(v)),
            Tok::Sym("-") => match self.next() {
                Token { tok: Tok::Int(v), .. } => Ok(OptionValue::Factor(-v)),
                other => syntax(other.pos, format!("expected integer after `-`, found {}", other.tok)),
            },
            Tok::Ident(s) | Tok::Quoted(s) => match PipelineMode::from_token(&s) {
                Some(m) => Ok(OptionValue::Mode(m)),
                None => syntax(t.pos, format!("`{s}` is not a value (expected integer, off, cg or fg)")),
            },
            other => syntax(t.pos, format!("expected a value, found {other}")),
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let Some(op) = BinOp::from_token(&self.peek().tok) else {
                break;
            };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_pos = self.next().pos;
            let rhs = self.expr(prec + 1)?;
            if prec == 3 {
                if let Some(next) = BinOp::from_token(&self.peek().tok) {
                    if next.precedence() == 3 {
                        return syntax(op_pos, "chained comparisons are not supported; use `and`");
                    }
                }
            }
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.is_sym("-") {
            self.next();
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Int(v) => Expr::Int(-v),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Ok(Expr::Int(v)),
            Tok::Quoted(s) => match PipelineMode::from_token(&s) {
                Some(m) => Ok(Expr::Mode(m)),
                None => syntax(t.pos, format!("`'{s}'` is not a pipeline mode")),
            },
            Tok::Sym("(") => {
                let e = self.expr(0)?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) => {
                if let Some(m) = PipelineMode::from_token(&s) {
                    return Ok(Expr::Mode(m));
                }
                if RESERVED.contains(&s.as_str()) {
                    return syntax(t.pos, format!("unexpected keyword `{s}`"));
                }
                self.refs.push((s.clone(), t.pos));
                Ok(Expr::Name(s))
            }
            other => syntax(t.pos, format!("expected an expression, found {other}")),
        }
    }

    fn comprehension(&mut self) -> Result<Comprehension, SyntaxError> {
        self.expect_sym("[")?;
        let head_refs_start = self.refs.len();
        let head = self.expr(0)?;
        let head_refs: Vec<(String, Pos)> = self.refs[head_refs_start..].to_vec();
        self.expect_keyword("for")?;
        let (var, _) = self.expect_ident("a comprehension variable")?;
        for (name, pos) in &head_refs {
            if *name != var {
                return syntax(
                    *pos,
                    format!("the option expression may only reference `{var}`, found `{name}`"),
                );
            }
        }
        self.expect_keyword("in")?;
        let list_pos = self.expect_sym("[")?;
        let mut items = Vec::new();
        if !self.is_sym("]") {
            loop {
                items.push(self.value()?);
                if self.is_sym(",") {
                    self.next();
                    if self.is_sym("]") {
                        break;
                    }
                } else {
                    break;
                }
            }
        }
        self.expect_sym("]")?;
        if items.is_empty() {
            return syntax(list_pos, "option list is empty");
        }
        if items.iter().any(|v| v.is_mode()) != items.iter().all(|v| v.is_mode()) {
            return syntax(list_pos, "option list mixes modes and integers");
        }
        let cond = if self.is_ident("if") {
            self.next();
            Some(self.expr(0)?)
        } else {
            None
        };
        self.expect_sym("]")?;
        Ok(Comprehension {
            head,
            var,
            items,
            cond,
        })
    }

    fn pragma(&mut self, scope: &Option<String>) -> Result<RawParam, SyntaxError> {
        let hash_pos = self.expect_sym("#")?;
        self.expect_keyword("pragma")?;
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s.eq_ignore_ascii_case("ACCEL") => {}
            other => return syntax(t.pos, format!("expected `ACCEL`, found {other}")),
        }
        let kt = self.next();
        let kind = match &kt.tok {
            Tok::Ident(s) => PragmaKind::from_keyword(s),
            _ => None,
        };
        let Some(kind) = kind else {
            return syntax(kt.pos, format!("expected PIPELINE, PARALLEL or TILING, found {}", kt.tok));
        };
        let Some(scope) = scope.clone() else {
            return syntax(hash_pos, "pragma is not attached to a loop (missing `loop:` line)");
        };

        // optional `<attr>=` before `auto{` or a pinned value
        if matches!(&self.peek().tok, Tok::Ident(s) if s != "auto") {
            let (attr, apos) = match self.next() {
                Token { tok: Tok::Ident(s), pos } => (s, pos),
                _ => unreachable!(),
            };
            if attr != kind.attribute() {
                return syntax(apos, format!("{kind} takes `{}=`, found `{attr}=`", kind.attribute()));
            }
            self.expect_sym("=")?;
        }

        if self.is_ident("auto") {
            self.next();
            self.expect_sym("{")?;
            self.expect_keyword("options")?;
            self.expect_sym(":")?;
            let (name, name_pos) = self.expect_ident("a parameter name")?;
            self.expect_sym("=")?;
            self.refs.clear();
            let options = self.comprehension()?;
            let name_refs = std::mem::take(&mut self.refs);
            self.expect_sym(";")?;
            self.expect_keyword("default")?;
            self.expect_sym(":")?;
            let default = self.value()?;
            if self.is_sym(";") {
                self.next();
            }
            self.expect_sym("}")?;
            Ok(RawParam {
                scope,
                kind,
                name,
                options,
                default,
                pos: name_pos,
                name_refs,
            })
        } else {
            // pinned form: `<attr>=<value> name=<id>`
            let default = self.value()?;
            self.expect_keyword("name")?;
            self.expect_sym("=")?;
            let (name, name_pos) = self.expect_ident("a parameter name")?;
            Ok(RawParam {
                scope,
                kind,
                name,
                options: Comprehension {
                    head: Expr::Name("x".into()),
                    var: "x".into(),
                    items: vec![default],
                    cond: None,
                },
                default,
                pos: name_pos,
                name_refs: Vec::new(),
            })
        }
    }
}

/// Parses a design-space file into raw parameter blocks in declaration order.
pub fn parse_blocks(src: &str) -> Result<Vec<RawParam>, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        refs: Vec::new(),
    };
    let mut scope: Option<String> = None;
    let mut out = Vec::new();
    loop {
        let t = p.peek().clone();
        match &t.tok {
            Tok::Eof => break,
            Tok::Ident(s) if s == "loop" => {
                p.next();
                p.expect_sym(":")?;
                let (id, _) = p.expect_ident("a loop identifier")?;
                scope = Some(id);
            }
            Tok::Sym("#") => out.push(p.pragma(&scope)?),
            other => {
                return syntax(t.pos, format!("expected `loop:` or `#pragma`, found {other}"));
            }
        }
    }
    Ok(out)
}

/// Parses a standalone expression; used by tests and tooling.
pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    // wrap in brackets so `//` lexes as an operator
    let toks = lex(&format!("[{src}]"))?;
    let mut p = Parser {
        toks,
        at: 0,
        refs: Vec::new(),
    };
    p.expect_sym("[")?;
    let e = p.expr(0)?;
    p.expect_sym("]")?;
    match &p.peek().tok {
        Tok::Eof => Ok(e),
        other => syntax(p.peek().pos, format!("trailing input {other}")),
    }
}
