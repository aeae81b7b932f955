//! A small arithmetic expression language over the coordinates `x`, `y`:
//! `+ - * / ^`, parentheses, `sin cos exp sqrt abs log`, numeric literals and
//! the constant `pi`.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Log,
}

impl Expr {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Expr::Call(f, a) => {
                let v = a.eval(x, y);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                    Func::Log => v.ln(),
                }
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::Parse(format!(
            "unexpected trailing input at byte {}",
            p.pos
        )));
    }
    Ok(e)
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
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

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.power()?; // right associative
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.atom()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Parse("expected ')'".into()));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            other => Err(Error::Parse(format!("unexpected token: {other:?}"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit()
                || self.src[self.pos] == b'.'
                || self.src[self.pos] == b'e'
                || (self.pos > start
                    && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                    && self.src[self.pos - 1] == b'e'))
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|e| Error::Parse(format!("bad number '{text}': {e}")))
    }

    fn ident(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "x" => Ok(Expr::X),
            "y" => Ok(Expr::Y),
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            "sin" | "cos" | "exp" | "sqrt" | "abs" | "log" => {
                if self.peek() != Some(b'(') {
                    return Err(Error::Parse(format!("{name} expects '('")));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Parse("expected ')'".into()));
                }
                self.pos += 1;
                let f = match name {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    _ => Func::Log,
                };
                Ok(Expr::Call(f, Box::new(arg)))
            }
            _ => Err(Error::Parse(format!("unknown identifier '{name}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let e = parse("x^2 - y^2 + sin(3*x)*cos(2*y) / 2").unwrap();
        let (x, y) = (0.7f64, -0.3f64);
        let want = x * x - y * y + (3.0 * x).sin() * (2.0 * y).cos() / 2.0;
        assert!((e.eval(x, y) - want).abs() < 1e-15);
    }

    #[test]
    fn precedence() {
        let e = parse("2+3*4^2").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 50.0);
    }
}
