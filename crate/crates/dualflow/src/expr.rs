//! Field expressions used in configuration files.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | atom
//! atom    := number | 'x' | 'y' | call | '(' expr ')'
//! call    := ('step' | 'min' | 'max') '(' expr (',' expr)* ')'
//! ```
//!
//! `step(a)` is 1 where `a > 0` and 0 elsewhere; `min`/`max` take one or
//! more arguments. A product needs a constant factor and a quotient a
//! constant nonzero divisor, so expressions stay piecewise affine in `x, y`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Step(Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at character {}", self.message, self.position + 1)
    }
}

impl std::error::Error for ParseError {}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        let mut p = Parser { src: source.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Step(a) => {
                if a.eval(x, y) > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Min(args) => args.iter().map(|a| a.eval(x, y)).fold(f64::INFINITY, f64::min),
            Expr::Max(args) => args.iter().map(|a| a.eval(x, y)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Value when the expression does not depend on the coordinates.
    pub fn constant(&self) -> Option<f64> {
        if self.uses_coordinates() {
            None
        } else {
            Some(self.eval(0.0, 0.0))
        }
    }

    fn uses_coordinates(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::X | Expr::Y => true,
            Expr::Neg(a) | Expr::Step(a) => a.uses_coordinates(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses_coordinates() || b.uses_coordinates()
            }
            Expr::Min(args) | Expr::Max(args) => args.iter().any(Expr::uses_coordinates),
        }
    }

    pub fn uses_y(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::X => false,
            Expr::Y => true,
            Expr::Neg(a) | Expr::Step(a) => a.uses_y(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.uses_y() || b.uses_y(),
            Expr::Min(args) | Expr::Max(args) => args.iter().any(Expr::uses_y),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let start = self.pos;
                    let rhs = self.unary()?;
                    if lhs.constant().is_none() && rhs.constant().is_none() {
                        self.pos = start;
                        return Err(self.error("a product needs a constant factor"));
                    }
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let start = self.pos;
                    let rhs = self.unary()?;
                    match rhs.constant() {
                        Some(c) if c != 0.0 => lhs = Expr::Div(Box::new(lhs), Box::new(rhs)),
                        _ => {
                            self.pos = start;
                            return Err(self.error("divisor must be a nonzero constant"));
                        }
                    }
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match name {
                    "x" => Ok(Expr::X),
                    "y" => Ok(Expr::Y),
                    "step" | "min" | "max" => {
                        self.expect(b'(')?;
                        let mut args = vec![self.expr()?];
                        while self.peek() == Some(b',') {
                            self.pos += 1;
                            args.push(self.expr()?);
                        }
                        self.expect(b')')?;
                        match name {
                            "step" if args.len() == 1 => Ok(Expr::Step(Box::new(args.remove(0)))),
                            "step" => {
                                self.pos = start;
                                Err(self.error("step takes one argument"))
                            }
                            "min" => Ok(Expr::Min(args)),
                            _ => Ok(Expr::Max(args)),
                        }
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(&format!("unknown name '{name}'")))
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            digits(self);
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Expr::Const).map_err(|_| {
            self.pos = start;
            self.error(&format!("malformed number '{text}'"))
        })
    }
}
