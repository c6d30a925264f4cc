//! Small arithmetic expressions in x and t, evaluated in complex arithmetic.
//!
//! Grammar: + − * / ^ (right-associative), unary minus, parentheses,
//! constants pi, e, i, variables x, t, and the functions sin, cos, tan, exp,
//! log, sqrt, abs, min, max.

use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(Complex64),
    X,
    T,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "exp" => (Func::Exp, 1),
            "log" => (Func::Log, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Expr(format!("bad number {text:?} at {start}")))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => return Err(Error::Expr(format!("unexpected character {c:?} at {i}"))),
            };
            out.push((i, t));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }
    fn at(&self) -> usize {
        self.toks.get(self.pos).map_or(usize::MAX, |(p, _)| *p)
    }
    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }
    fn expect(&mut self, want: Tok) -> Result<()> {
        let at = self.at();
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::Expr(format!("expected {want:?} at {at}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let at = self.at();
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Num(Complex64::new(v, 0.0))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    let (f, arity) = Func::lookup(&name).ok_or_else(|| Error::Expr(format!("unknown function {name:?} at {at}")))?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while let Some(Tok::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    if args.len() != arity {
                        return Err(Error::Expr(format!("{name} takes {arity} argument(s), got {}", args.len())));
                    }
                    return Ok(Node::Call(f, args));
                }
                match name.as_str() {
                    "x" => Ok(Node::X),
                    "t" => Ok(Node::T),
                    "pi" => Ok(Node::Num(Complex64::new(std::f64::consts::PI, 0.0))),
                    "e" => Ok(Node::Num(Complex64::new(std::f64::consts::E, 0.0))),
                    "i" => Ok(Node::Num(Complex64::i())),
                    _ => Err(Error::Expr(format!("unknown name {name:?} at {at}"))),
                }
            }
            other => Err(Error::Expr(format!("unexpected {other:?} at {at}"))),
        }
    }
}

/// A parsed expression f(x, t).
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(Error::Expr("empty expression".into()));
        }
        let mut p = Parser { toks, pos: 0 };
        let root = p.expr()?;
        if p.pos < p.toks.len() {
            return Err(Error::Expr(format!("trailing input at {}", p.at())));
        }
        Ok(Self { root, source: src.to_string() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        eval(&self.root, x, t)
    }
}

fn eval(n: &Node, x: f64, t: f64) -> Complex64 {
    match n {
        Node::Num(v) => *v,
        Node::X => Complex64::new(x, 0.0),
        Node::T => Complex64::new(t, 0.0),
        Node::Neg(a) => -eval(a, x, t),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, t), eval(b, x, t));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => {
                    if b.im == 0.0 && b.re.fract() == 0.0 && b.re.abs() <= 64.0 {
                        a.powi(b.re as i32)
                    } else if a.im == 0.0 && b.im == 0.0 && a.re >= 0.0 {
                        Complex64::new(a.re.powf(b.re), 0.0)
                    } else {
                        a.powc(b)
                    }
                }
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], x, t);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => Complex64::new(a.norm(), 0.0),
                Func::Min | Func::Max => {
                    let b = eval(&args[1], x, t);
                    let pick_a = if *f == Func::Min { a.re <= b.re } else { a.re >= b.re };
                    if pick_a {
                        a
                    } else {
                        b
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(s: &str, x: f64, t: f64) -> Complex64 {
        Expr::parse(s).unwrap().eval(x, t)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("1 + 2*3", 0.0, 0.0).re, 7.0);
        assert_eq!(ev("-2^2", 0.0, 0.0).re, -4.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0).re, 512.0);
        assert_eq!(ev("(1+2)*3", 0.0, 0.0).re, 9.0);
        assert_eq!(ev("8/2/2", 0.0, 0.0).re, 2.0);
        assert_eq!(ev("1.5e-3*2E2", 0.0, 0.0).re, 0.3);
        assert_eq!(ev("2^-1", 0.0, 0.0).re, 0.5);
    }

    #[test]
    fn functions_and_variables() {
        let v = ev("exp(-pi^2/4)*sin(pi*x/2)", 1.0, 0.0).re;
        assert!((v - (-PI * PI / 4.0).exp()).abs() < 1e-15);
        assert_eq!(ev("max(1 - abs(x), 0)", 0.25, 0.0).re, 0.75);
        assert_eq!(ev("max(1 - abs(x), 0)", -3.0, 0.0).re, 0.0);
        assert!((ev("exp(-x^2/(1+4*t))/sqrt(1+4*t)", 0.0, 1.0).re - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((ev("log(e)", 0.0, 0.0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_values() {
        let f = ev("-3*pi*(1 - i)*sin(3*pi*(x + t))", 0.1, 0.2);
        let s = (3.0 * PI * 0.3).sin();
        assert!((f - Complex64::new(-3.0 * PI * s, 3.0 * PI * s)).norm() < 1e-13);
    }

    #[test]
    fn errors() {
        for bad in ["", "1 +", "sin(1, 2)", "foo(1)", "y", "(1", "1 2", "3 $ 4"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
    }
}
