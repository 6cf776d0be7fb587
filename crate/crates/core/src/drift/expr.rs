//! A small arithmetic grammar for user-defined field components.
//!
//! ```text
//! expr  := sum (('<' | '<=' | '>' | '>=') sum)?
//! sum   := prod (('+' | '-') prod)*
//! prod  := unary (('*' | '/') unary)*
//! unary := '-' unary | pow
//! pow   := atom ('^' unary)?
//! atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')' | '|' expr '|'
//! ```
//!
//! Names: `t`, `r` (Euclidean norm of `x`), `x` (only in `|x|` or when `d = 1`),
//! `x1 .. xd`. Functions: `abs`, `sign`, `ind`, `exp`, `ln`, `sqrt`, `cos`, `sin`,
//! `min`, `max`. Comparisons evaluate to 1 or 0, so `ind(r < 1)` is an indicator.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Time,
    Norm,
    Coord(usize),
    /// Bare `x`; resolved to `x1` in one dimension.
    X,
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Func {
    Abs,
    Sign,
    Ind,
    Exp,
    Ln,
    Sqrt,
    Cos,
    Sin,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "abs" => (Func::Abs, 1),
            "sign" => (Func::Sign, 1),
            "ind" => (Func::Ind, 1),
            "exp" => (Func::Exp, 1),
            "ln" => (Func::Ln, 1),
            "sqrt" => (Func::Sqrt, 1),
            "cos" => (Func::Cos, 1),
            "sin" => (Func::Sin, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

pub fn parse(src: &str, dim: usize) -> Result<Expr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        dim,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}

impl Parser<'_> {
    fn fail<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Expression {
            pos: self.pos,
            msg: msg.to_string(),
        })
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

    fn expr(&mut self) -> Result<Expr> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Some(b'<') => Op::Lt,
            Some(b'>') => Op::Gt,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let op = if self.src.get(self.pos) == Some(&b'=') {
            self.pos += 1;
            if op == Op::Lt {
                Op::Le
            } else {
                Op::Ge
            }
        } else {
            op
        };
        let rhs = self.sum()?;
        Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.prod()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => Op::Add,
                Some(b'-') => Op::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.prod()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn prod(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => Op::Mul,
                Some(b'/') => Op::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => self.fail("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.fail("expected ')'");
                }
                Ok(e)
            }
            Some(b'|') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b'|') {
                    return self.fail("expected closing '|'");
                }
                Ok(match e {
                    Expr::X => Expr::Norm,
                    other => Expr::Call(Func::Abs, vec![other]),
                })
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            Some(_) => self.fail("unexpected character"),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = (c == b'+' || c == b'-')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Num(v)),
            Err(_) => {
                self.pos = start;
                self.fail("malformed number")
            }
        }
    }

    fn name(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some((func, arity)) = Func::from_name(name) {
            if !self.eat(b'(') {
                return self.fail("expected '(' after function name");
            }
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return self.fail("expected ')'");
            }
            if args.len() != arity {
                return self.fail(&format!("{name} takes {arity} argument(s)"));
            }
            return Ok(Expr::Call(func, args));
        }
        match name {
            "t" => Ok(Expr::Time),
            "r" => Ok(Expr::Norm),
            "x" => {
                if self.dim == 1 || self.peek() == Some(b'|') {
                    Ok(Expr::X)
                } else {
                    self.pos = start;
                    self.fail("bare `x` is only allowed inside |x| or in one dimension")
                }
            }
            _ if name.starts_with('x') => match name[1..].parse::<usize>() {
                Ok(i) if i >= 1 && i <= self.dim => Ok(Expr::Coord(i - 1)),
                _ => {
                    self.pos = start;
                    self.fail(&format!("unknown coordinate `{name}` for dimension {}", self.dim))
                }
            },
            _ => {
                self.pos = start;
                self.fail(&format!("unknown name `{name}`"))
            }
        }
    }
}

impl Expr {
    pub fn eval(&self, t: f64, x: &[f64], norm: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Time => t,
            Expr::Norm => norm,
            Expr::Coord(i) => x[*i],
            Expr::X => x[0],
            Expr::Neg(e) => -e.eval(t, x, norm),
            Expr::Bin(op, a, b) => {
                let a = a.eval(t, x, norm);
                let b = b.eval(t, x, norm);
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => a.powf(b),
                    Op::Lt => (a < b) as u8 as f64,
                    Op::Le => (a <= b) as u8 as f64,
                    Op::Gt => (a > b) as u8 as f64,
                    Op::Ge => (a >= b) as u8 as f64,
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(t, x, norm);
                match f {
                    Func::Abs => a.abs(),
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Ind => (a != 0.0 && !a.is_nan()) as u8 as f64,
                    Func::Exp => a.exp(),
                    Func::Ln => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Cos => a.cos(),
                    Func::Sin => a.sin(),
                    Func::Min => a.min(args[1].eval(t, x, norm)),
                    Func::Max => a.max(args[1].eval(t, x, norm)),
                }
            }
        }
    }
}
