//! Scalar expressions over chart coordinates `x1..xm`, with exact
//! second-order evaluation.
//!
//! Chart-backend models describe frame fields and constraints as closed-form
//! expressions. This module parses those strings into small ASTs and evaluates
//! them as 2-jets (value, gradient, Hessian), which is what the bracket
//! machinery needs: first derivatives for Lie brackets, second derivatives
//! held in reserve for anything that differentiates a connection pointwise.

mod jet;

pub use jet::{eval_jet2, Jet2};

use std::fmt;

/// Built-in scalar functions accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
        }
    }
}

/// Expression tree over variables `x1..xm` (stored zero-based).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; the source form `x3` parses to `Var(2)`.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power of a subexpression.
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable x{index} out of range for {vars} coordinates")]
    VariableIndexOutOfRange { index: usize, vars: usize },
    #[error("domain error in `{expr}`: {message}")]
    DomainError { expr: String, message: String },
}

/// Parses `src` as an expression in `vars` coordinates.
///
/// Grammar, loosest to tightest: `+ -`, unary `-`, `* /`, `^` (integer
/// exponent), atoms. A leading minus therefore wraps the whole product:
/// `-2*x4` parses as `Neg(Mul(2, x4))`.
pub fn parse(src: &str, vars: usize) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        vars,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    vars: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ExprError {
        ExprError::SyntaxError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// expr := unary (('+' | '-') unary)*
    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                let rhs = self.unary()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.unary()?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    /// unary := '-' unary | term
    fn unary(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.term()
        }
    }

    /// term := factor (('*' | '/') factor)*
    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    /// factor := atom ('^' integer)?
    fn factor(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.atom()?;
        loop {
            self.skip_ws();
            if self.eat(b'^') {
                let k = self.integer()?;
                e = Expr::Pow(Box::new(e), k);
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(b'-') => {
                // Inner position, e.g. the right operand of `3 * -2`.
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.atom()?)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.err("expected expression")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        // Exponent suffix like 1.5e-3.
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(Expr::Const).map_err(|_| ExprError::SyntaxError {
            offset: start,
            message: format!("invalid number `{text}`"),
        })
    }

    fn integer(&mut self) -> Result<i32, ExprError> {
        self.skip_ws();
        let parenthesized = self.eat(b'(');
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'-')) {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        let k = text.parse::<i32>().map_err(|_| ExprError::SyntaxError {
            offset: start,
            message: "expected integer exponent".to_string(),
        })?;
        if parenthesized {
            self.skip_ws();
            if !self.eat(b')') {
                return Err(ExprError::SyntaxError {
                    offset: self.pos,
                    message: "expected `)` after exponent".to_string(),
                });
            }
        }
        Ok(k)
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|c| c.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| ExprError::SyntaxError {
                    offset: start,
                    message: format!("invalid variable `{name}`"),
                })?;
                if index == 0 || index > self.vars {
                    return Err(ExprError::VariableIndexOutOfRange {
                        index,
                        vars: self.vars,
                    });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        let func = match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            _ => {
                return Err(ExprError::UnknownIdentifier {
                    offset: start,
                    name: name.to_string(),
                })
            }
        };
        self.skip_ws();
        if !self.eat(b'(') {
            return Err(self.err("expected `(` after function name"));
        }
        let arg = self.expr()?;
        self.skip_ws();
        if !self.eat(b')') {
            return Err(self.err("expected `)`"));
        }
        Ok(Expr::Call(func, Box::new(arg)))
    }
}

// Binding strength used by the printer; mirrors the parser levels.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 0,
        Expr::Neg(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Pow(..) => 3,
        Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => 4,
    }
}

impl fmt::Display for Expr {
    /// Prints with the fewest parentheses that still re-parse to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if prec(e) < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Const(v) => {
                if *v < 0.0 || !v.is_finite() {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Add(a, b) => {
                child(f, a, 0)?;
                write!(f, " + ")?;
                // Right operand of +/- re-parses at unary level.
                child(f, b, 1)
            }
            Expr::Sub(a, b) => {
                child(f, a, 0)?;
                write!(f, " - ")?;
                child(f, b, 1)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 2)
            }
            Expr::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, "*")?;
                child(f, b, 3)
            }
            Expr::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, "/")?;
                child(f, b, 3)
            }
            Expr::Pow(a, k) => {
                child(f, a, 4)?;
                if *k < 0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
