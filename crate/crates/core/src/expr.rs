//! Arithmetic expressions for user-defined Hamiltonians and initial data.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | constant | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func   := ln | exp | sqrt | abs | min | max
//! ```
//!
//! Constants are `pi` and `e`. Variables are `<v>` (alias for `<v>1`) and
//! `<v>1 .. <v>n`, where `<v>` is the variable letter of the expression
//! (`p` for Hamiltonians, `x` for initial data). Gradients are computed by
//! forward-mode differentiation of the parsed tree.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Ln,
    Exp,
    Sqrt,
    Abs,
    Min,
    Max,
}

/// A parsed expression in `dim` variables.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    dim: usize,
    source: String,
}

impl Expr {
    pub fn parse(source: &str, var: char, dim: usize) -> Result<Self> {
        let mut p = Parser { src: source.as_bytes(), pos: 0, var, dim };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Self { root, dim, source: source.to_string() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        eval(&self.root, vars)
    }

    pub fn gradient(&self, vars: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|k| dual(&self.root, vars, k).1).collect()
    }
}

fn eval(n: &Node, v: &[f64]) -> f64 {
    match n {
        Node::Num(c) => *c,
        Node::Var(i) => v[*i],
        Node::Neg(a) => -eval(a, v),
        Node::Add(a, b) => eval(a, v) + eval(b, v),
        Node::Sub(a, b) => eval(a, v) - eval(b, v),
        Node::Mul(a, b) => eval(a, v) * eval(b, v),
        Node::Div(a, b) => eval(a, v) / eval(b, v),
        Node::Pow(a, b) => pow(eval(a, v), eval(b, v)),
        Node::Call(f, args) => {
            let a: Vec<f64> = args.iter().map(|x| eval(x, v)).collect();
            match f {
                Func::Ln => a[0].ln(),
                Func::Exp => a[0].exp(),
                Func::Sqrt => a[0].sqrt(),
                Func::Abs => a[0].abs(),
                Func::Min => a.iter().copied().fold(f64::INFINITY, f64::min),
                Func::Max => a.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() < 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Value and partial derivative with respect to variable `k`.
fn dual(n: &Node, v: &[f64], k: usize) -> (f64, f64) {
    match n {
        Node::Num(c) => (*c, 0.0),
        Node::Var(i) => (v[*i], if *i == k { 1.0 } else { 0.0 }),
        Node::Neg(a) => {
            let (x, dx) = dual(a, v, k);
            (-x, -dx)
        }
        Node::Add(a, b) => {
            let ((x, dx), (y, dy)) = (dual(a, v, k), dual(b, v, k));
            (x + y, dx + dy)
        }
        Node::Sub(a, b) => {
            let ((x, dx), (y, dy)) = (dual(a, v, k), dual(b, v, k));
            (x - y, dx - dy)
        }
        Node::Mul(a, b) => {
            let ((x, dx), (y, dy)) = (dual(a, v, k), dual(b, v, k));
            (x * y, dx * y + x * dy)
        }
        Node::Div(a, b) => {
            let ((x, dx), (y, dy)) = (dual(a, v, k), dual(b, v, k));
            (x / y, (dx * y - x * dy) / (y * y))
        }
        Node::Pow(a, b) => {
            let ((x, dx), (y, dy)) = (dual(a, v, k), dual(b, v, k));
            let val = pow(x, y);
            let d = if dy == 0.0 {
                if y == 0.0 { 0.0 } else { y * pow(x, y - 1.0) * dx }
            } else {
                val * (dy * x.ln() + y * dx / x)
            };
            (val, d)
        }
        Node::Call(f, args) => {
            let a: Vec<(f64, f64)> = args.iter().map(|x| dual(x, v, k)).collect();
            let (x, dx) = a[0];
            match f {
                Func::Ln => (x.ln(), dx / x),
                Func::Exp => (x.exp(), x.exp() * dx),
                Func::Sqrt => (x.sqrt(), 0.5 * dx / x.sqrt()),
                Func::Abs => (x.abs(), if x > 0.0 { dx } else if x < 0.0 { -dx } else { 0.0 }),
                Func::Min => a.iter().copied().fold((f64::INFINITY, 0.0), |m, c| if c.0 < m.0 { c } else { m }),
                Func::Max => a.iter().copied().fold((f64::NEG_INFINITY, 0.0), |m, c| if c.0 > m.0 { c } else { m }),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    var: char,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // `2e` followed by something else: leave the `e` for the caller
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| Error::Parse { pos: start, msg: format!("bad number `{text}`") })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let func = match name {
            "ln" => Some(Func::Ln),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            "min" => Some(Func::Min),
            "max" => Some(Func::Max),
            _ => None,
        };
        if let Some(f) = func {
            if !self.eat(b'(') {
                return Err(self.err("expected `(` after function name"));
            }
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.err("expected `)`"));
            }
            let arity_ok = match f {
                Func::Min | Func::Max => args.len() >= 2,
                _ => args.len() == 1,
            };
            if !arity_ok {
                return Err(Error::Parse { pos: start, msg: format!("wrong number of arguments to `{name}`") });
            }
            return Ok(Node::Call(f, args));
        }
        match name {
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            _ => {}
        }
        let mut chars = name.chars();
        if chars.next() == Some(self.var) {
            let rest = chars.as_str();
            let index = if rest.is_empty() { Some(1) } else { rest.parse::<usize>().ok() };
            if let Some(i) = index {
                if i >= 1 && i <= self.dim {
                    return Ok(Node::Var(i - 1));
                }
                return Err(Error::Parse { pos: start, msg: format!("variable `{name}` out of range for dimension {}", self.dim) });
            }
        }
        Err(Error::Parse { pos: start, msg: format!("unknown identifier `{name}`") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_log_hamiltonian() {
        let h = Expr::parse("-ln(1 + p^2)", 'p', 1).unwrap();
        assert!((h.eval(&[1.0]) + 2f64.ln()).abs() < 1e-15);
        assert!((h.gradient(&[2.0])[0] + 4.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("2^3^2 - 8/4/2 + -x", 'x', 1).unwrap();
        assert_eq!(e.eval(&[1.0]), 512.0 - 1.0 - 1.0);
        let e = Expr::parse("-x^2", 'x', 1).unwrap();
        assert_eq!(e.eval(&[3.0]), -9.0);
    }

    #[test]
    fn multivariate_gradient_and_minmax() {
        let e = Expr::parse("sqrt(1 + x1^2 + x2^2) + max(x1, 2*x2) + min(abs(x1), 1)", 'x', 2).unwrap();
        let g = e.gradient(&[0.5, 1.0]);
        let r = (1.0f64 + 0.25 + 1.0).sqrt();
        assert!((g[0] - (0.5 / r + 1.0)).abs() < 1e-14);
        assert!((g[1] - (1.0 / r + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn scientific_literals_and_constants() {
        let e = Expr::parse("1.5e-1 * pi + e", 'x', 1).unwrap();
        assert!((e.eval(&[0.0]) - (0.15 * std::f64::consts::PI + std::f64::consts::E)).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(Expr::parse("1 + ", 'x', 1), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("foo(x)", 'x', 1), Err(Error::Parse { pos: 0, .. })));
        assert!(matches!(Expr::parse("x3", 'x', 2), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("min(x)", 'x', 1), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("(x", 'x', 1), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("p", 'x', 1), Err(Error::Parse { .. })));
    }
}
