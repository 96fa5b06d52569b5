//! A small closed-form expression language for signal pieces.
//!
//! Grammar (one free variable `t`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 't' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func   := log | ln | exp | sqrt | sin | cos | tan | atan | tanh
//! ```
//!
//! Expressions are differentiable symbolically, which the jitter bound needs.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Atan,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "log" | "ln" => Func::Log,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Log => x.ln(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Atan => x.atan(),
            Func::Tanh => x.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Pow(a, b) => {
                let base = a.eval(t);
                match b.as_integer() {
                    Some(n) => base.powi(n),
                    None => base.powf(b.eval(t)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(t)),
        }
    }

    /// True when the expression does not mention `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn as_integer(&self) -> Option<i32> {
        match self {
            Expr::Const(c) if c.fract() == 0.0 && c.abs() <= 64.0 => Some(*c as i32),
            Expr::Neg(a) => a.as_integer().map(|n| -n),
            _ => None,
        }
    }

    /// Symbolic derivative with respect to `t`.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        match self {
            Const(_) => Const(0.0),
            Var => Const(1.0),
            Neg(a) => neg(a.derivative()),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                Pow(b.clone(), Box::new(Const(2.0))),
            ),
            Pow(a, b) if b.is_constant() => mul(
                mul(
                    (**b).clone(),
                    Pow(a.clone(), Box::new(sub((**b).clone(), Const(1.0)))),
                ),
                a.derivative(),
            ),
            Pow(a, b) => {
                // d(a^b) = a^b (b' ln a + b a'/a)
                let inner = add(
                    mul(b.derivative(), Call(Func::Log, a.clone())),
                    div(mul((**b).clone(), a.derivative()), (**a).clone()),
                );
                mul(self.clone(), inner)
            }
            Call(f, a) => {
                let da = a.derivative();
                let outer = match f {
                    Func::Log => div(Const(1.0), (**a).clone()),
                    Func::Exp => self.clone(),
                    Func::Sqrt => div(Const(0.5), self.clone()),
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => neg(Call(Func::Sin, a.clone())),
                    Func::Tan => div(
                        Const(1.0),
                        Pow(Box::new(Call(Func::Cos, a.clone())), Box::new(Const(2.0))),
                    ),
                    Func::Atan => div(
                        Const(1.0),
                        add(Const(1.0), Pow(a.clone(), Box::new(Const(2.0)))),
                    ),
                    Func::Tanh => sub(
                        Const(1.0),
                        Pow(Box::new(self.clone()), Box::new(Const(2.0))),
                    ),
                };
                mul(outer, da)
            }
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::Add(Box::new(a), Box::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        neg(b)
    } else {
        Expr::Sub(Box::new(a), Box::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Const(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        Expr::Const(0.0)
    } else if is_one(&b) {
        a
    } else {
        Expr::Div(Box::new(a), Box::new(b))
    }
}

/// Fully parenthesized, so `parse(e.to_string()) == e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{})", -c)
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-({a}))"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Expression {
            offset: self.pos,
            message: format!("{message} in {:?}", self.src),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let literal = matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.');
            let inner = if literal {
                self.power()?
            } else {
                self.unary()?
            };
            return Ok(match inner {
                Expr::Const(c) if literal => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric()
                        || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                match name {
                    "t" | "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => {
                        let func = Func::from_name(name).ok_or_else(|| {
                            self.pos = start;
                            self.error(&format!("unknown identifier '{name}'"))
                        })?;
                        if !self.eat(b'(') {
                            return Err(self.error(&format!("expected '(' after '{name}'")));
                        }
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let b = self.bytes;
        while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < b.len() && (b[self.pos] == b'+' || b[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < b.len() && b[self.pos].is_ascii_digit() {
                while self.pos < b.len() && b[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // `2e` is not an exponent; leave the `e` for the caller.
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| {
                self.pos = start;
                self.error("malformed number")
            })
    }
}
