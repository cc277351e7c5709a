//! A small expression language for coefficient fields.
//!
//! Grammar (EBNF, whitespace ignored between tokens):
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = primary { "^" exponent } ;
//! exponent = "-" exponent | primary ;
//! primary  = number | variable | call | "(" expr ")" ;
//! call     = func1 "(" expr ")" | func2 "(" expr "," expr ")" ;
//! func1    = "exp" | "sin" | "cos" | "abs" | "sqrt" | "step" ;
//! func2    = "min" | "max" ;
//! variable = "t" | "x1" | "x2" | "x3" ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!          | "." digits [ ... ] ;
//! ```
//!
//! All binary operators, including `^`, associate to the left. A unary
//! minus applied directly to a numeric literal is folded into the literal.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest spatial index accepted by the grammar (`x1..x3`).
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    T,
    X(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Abs,
    Exp,
    Sin,
    Cos,
    Sqrt,
    /// 1 if the argument is ≥ 0, else 0.
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExprNode {
    Num(f64),
    Var(Var),
    Unary(UnaryOp, Box<ExprNode>),
    Binary(BinaryOp, Box<ExprNode>, Box<ExprNode>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("`{name}` at offset {offset} takes {expected} argument(s), got {found}")]
    Arity {
        offset: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("square root of negative value in `{0}`")]
    NegativeSqrt(String),
    #[error("non-finite result in `{0}`")]
    NonFinite(String),
    #[error("variable x{index} not available in dimension {dim}")]
    MissingCoordinate { index: usize, dim: usize },
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let slice = &text[i..j];
                let value: f64 = slice
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| ParseError::Syntax {
                        offset: start,
                        message: format!("malformed number `{slice}`"),
                    })?;
                i = j;
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let name = text[i..j].to_string();
                i = j;
                out.push((Tok::Ident(name), start));
                continue;
            }
            _ => {
                // Report the full (possibly multi-byte) character.
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expr(&mut self, depth: usize) -> Result<ExprNode, ParseError> {
        let depth = self.guard(depth)?;
        let mut lhs = self.term(depth)?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term(depth)?;
            lhs = ExprNode::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self, depth: usize) -> Result<ExprNode, ParseError> {
        let mut lhs = self.unary(depth)?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary(depth)?;
            lhs = ExprNode::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self, depth: usize) -> Result<ExprNode, ParseError> {
        let depth = self.guard(depth)?;
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary(depth)?;
            return Ok(negate(inner));
        }
        self.power(depth)
    }

    fn power(&mut self, depth: usize) -> Result<ExprNode, ParseError> {
        let mut lhs = self.primary(depth)?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let rhs = self.exponent(depth)?;
            lhs = ExprNode::Binary(BinaryOp::Pow, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn exponent(&mut self, depth: usize) -> Result<ExprNode, ParseError> {
        let depth = self.guard(depth)?;
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.exponent(depth)?;
            return Ok(negate(inner));
        }
        self.primary(depth)
    }

    fn primary(&mut self, depth: usize) -> Result<ExprNode, ParseError> {
        let depth = self.guard(depth)?;
        let (tok, offset) = (self.peek().clone(), self.offset());
        match tok {
            Tok::Num(v) => {
                self.bump();
                Ok(ExprNode::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr(depth)?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(var) = variable(&name) {
                    if *self.peek() == Tok::LParen {
                        return Err(ParseError::Syntax {
                            offset: self.offset(),
                            message: format!("`{name}` is a variable, not a function"),
                        });
                    }
                    return Ok(ExprNode::Var(var));
                }
                let arity = match function_arity(&name) {
                    Some(a) => a,
                    None => return Err(ParseError::UnknownIdentifier { offset, name }),
                };
                if *self.peek() != Tok::LParen {
                    return Err(self.unexpected("`(`"));
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr(depth)?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                            continue;
                        }
                        break;
                    }
                }
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`,` or `)`"));
                }
                self.bump();
                if args.len() != arity {
                    return Err(ParseError::Arity {
                        offset,
                        name,
                        expected: arity,
                        found: args.len(),
                    });
                }
                Ok(build_call(&name, args))
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }

    fn guard(&self, depth: usize) -> Result<usize, ParseError> {
        // Bounded recursion keeps adversarial inputs from overflowing the stack.
        const MAX_DEPTH: usize = 256;
        if depth >= MAX_DEPTH {
            return Err(ParseError::Syntax {
                offset: self.offset(),
                message: "expression nested too deeply".into(),
            });
        }
        Ok(depth + 1)
    }
}

fn negate(inner: ExprNode) -> ExprNode {
    match inner {
        ExprNode::Num(v) => ExprNode::Num(-v),
        other => ExprNode::Unary(UnaryOp::Neg, Box::new(other)),
    }
}

fn variable(name: &str) -> Option<Var> {
    match name {
        "t" => Some(Var::T),
        "x1" => Some(Var::X(0)),
        "x2" => Some(Var::X(1)),
        "x3" => Some(Var::X(2)),
        _ => None,
    }
}

fn function_arity(name: &str) -> Option<usize> {
    match name {
        "exp" | "sin" | "cos" | "abs" | "sqrt" | "step" => Some(1),
        "min" | "max" => Some(2),
        _ => None,
    }
}

fn build_call(name: &str, mut args: Vec<ExprNode>) -> ExprNode {
    let op = match name {
        "exp" => UnaryOp::Exp,
        "sin" => UnaryOp::Sin,
        "cos" => UnaryOp::Cos,
        "abs" => UnaryOp::Abs,
        "sqrt" => UnaryOp::Sqrt,
        "step" => UnaryOp::Step,
        "min" | "max" => {
            let rhs = args.pop().expect("arity checked");
            let lhs = args.pop().expect("arity checked");
            let op = if name == "min" { BinaryOp::Min } else { BinaryOp::Max };
            return ExprNode::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        _ => unreachable!("arity checked"),
    };
    ExprNode::Unary(op, Box::new(args.pop().expect("arity checked")))
}

/// Parses `text` into an expression tree.
pub fn parse_expr(text: &str) -> Result<ExprNode, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let node = p.expr(0)?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(node)
}

// ---------------------------------------------------------------------------
// Evaluation

impl ExprNode {
    pub fn num(v: f64) -> Self {
        ExprNode::Num(v)
    }

    pub fn var_t() -> Self {
        ExprNode::Var(Var::T)
    }

    pub fn var_x(i: usize) -> Self {
        ExprNode::Var(Var::X(i))
    }

    pub fn unary(op: UnaryOp, arg: ExprNode) -> Self {
        ExprNode::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: ExprNode, rhs: ExprNode) -> Self {
        ExprNode::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Evaluates at time `t` and point `x`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        self.eval_raw(t, x)
    }

    fn eval_raw(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_node(t, x)?;
        if !v.is_finite() {
            return Err(EvalError::NonFinite(self.to_string()));
        }
        Ok(v)
    }

    fn eval_node(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            ExprNode::Num(v) => *v,
            ExprNode::Var(Var::T) => t,
            ExprNode::Var(Var::X(i)) => *x.get(*i).ok_or(EvalError::MissingCoordinate {
                index: i + 1,
                dim: x.len(),
            })?,
            ExprNode::Unary(op, arg) => {
                let a = arg.eval_raw(t, x)?;
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Abs => a.abs(),
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::NegativeSqrt(self.to_string()));
                        }
                        a.sqrt()
                    }
                    UnaryOp::Step => {
                        if a >= 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                }
            }
            ExprNode::Binary(op, lhs, rhs) => {
                let a = lhs.eval_raw(t, x)?;
                let b = rhs.eval_raw(t, x)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero(self.to_string()));
                        }
                        a / b
                    }
                    BinaryOp::Pow => a.powf(b),
                    BinaryOp::Min => a.min(b),
                    BinaryOp::Max => a.max(b),
                }
            }
        })
    }

    /// Highest spatial index referenced (1-based), 0 if none.
    pub fn max_coordinate(&self) -> usize {
        match self {
            ExprNode::Num(_) | ExprNode::Var(Var::T) => 0,
            ExprNode::Var(Var::X(i)) => i + 1,
            ExprNode::Unary(_, a) => a.max_coordinate(),
            ExprNode::Binary(_, a, b) => a.max_coordinate().max(b.max_coordinate()),
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            ExprNode::Num(_) | ExprNode::Var(Var::X(_)) => false,
            ExprNode::Var(Var::T) => true,
            ExprNode::Unary(_, a) => a.depends_on_t(),
            ExprNode::Binary(_, a, b) => a.depends_on_t() || b.depends_on_t(),
        }
    }

    pub fn depends_on_x(&self) -> bool {
        self.max_coordinate() > 0
    }

    /// Clamps the value into `[-n, n]`, i.e. `max(-n, min(self, n))`.
    pub fn clamped(self, n: f64) -> Self {
        ExprNode::binary(
            BinaryOp::Max,
            ExprNode::Num(-n),
            ExprNode::binary(BinaryOp::Min, self, ExprNode::Num(n)),
        )
    }

    /// Substitutes the time variable by `t + shift`.
    pub fn shift_time(&self, shift: f64) -> Self {
        match self {
            ExprNode::Var(Var::T) => ExprNode::binary(
                BinaryOp::Add,
                ExprNode::var_t(),
                ExprNode::Num(shift),
            ),
            ExprNode::Num(_) | ExprNode::Var(_) => self.clone(),
            ExprNode::Unary(op, a) => ExprNode::unary(*op, a.shift_time(shift)),
            ExprNode::Binary(op, a, b) => {
                ExprNode::binary(*op, a.shift_time(shift), b.shift_time(shift))
            }
        }
    }
}

impl std::ops::Add for ExprNode {
    type Output = ExprNode;
    fn add(self, rhs: ExprNode) -> ExprNode {
        ExprNode::binary(BinaryOp::Add, self, rhs)
    }
}

impl std::ops::Mul for ExprNode {
    type Output = ExprNode;
    fn mul(self, rhs: ExprNode) -> ExprNode {
        ExprNode::binary(BinaryOp::Mul, self, rhs)
    }
}

// ---------------------------------------------------------------------------
// Printing: fully parenthesised binaries, so the output re-parses to the
// same tree.

impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "(-{})", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            ExprNode::Var(Var::T) => write!(f, "t"),
            ExprNode::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            ExprNode::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            ExprNode::Unary(op, a) => {
                let name = match op {
                    UnaryOp::Abs => "abs",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Step => "step",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            ExprNode::Binary(BinaryOp::Min, a, b) => write!(f, "min({a}, {b})"),
            ExprNode::Binary(BinaryOp::Max, a, b) => write!(f, "max({a}, {b})"),
            ExprNode::Binary(op, a, b) => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => "^",
                    _ => unreachable!(),
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}
