//! A tiny expression language for coefficient and exponent
//! fields: constants, `x`/`y`, `+`, `-`, `*`, `min`, `max`, `clamp` and
//! parentheses. No transcendentals, so extremal values over the domain are
//! reliably found by grid scans.

use crate::error::{Error, Result};

/// A point of the (closed) domain. 1D fields read only the first entry.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Coord(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
    Clamp(Box<Node>, Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, p: Point) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Coord(i) => p[*i],
            Node::Neg(e) => -e.eval(p),
            Node::Add(l, r) => l.eval(p) + r.eval(p),
            Node::Sub(l, r) => l.eval(p) - r.eval(p),
            Node::Mul(l, r) => l.eval(p) * r.eval(p),
            Node::Min(l, r) => l.eval(p).min(r.eval(p)),
            Node::Max(l, r) => l.eval(p).max(r.eval(p)),
            Node::Clamp(v, lo, hi) => {
                let (v, lo, hi) = (v.eval(p), lo.eval(p), hi.eval(p));
                v.max(lo).min(hi)
            }
        }
    }

    fn max_coord(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Coord(i) => Some(*i),
            Node::Neg(e) => e.max_coord(),
            Node::Add(l, r) | Node::Sub(l, r) | Node::Mul(l, r) | Node::Min(l, r) | Node::Max(l, r) => {
                l.max_coord().max(r.max_coord())
            }
            Node::Clamp(v, lo, hi) => v.max_coord().max(lo.max_coord()).max(hi.max_coord()),
        }
    }
}

/// A closed-form scalar field over the domain, evaluable at any point.
#[derive(Debug, Clone)]
pub struct ScalarField {
    node: Node,
    source: String,
}

impl ScalarField {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let node = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(ScalarField { node, source: src.to_string() })
    }

    pub fn constant(v: f64) -> Self {
        ScalarField { node: Node::Const(v), source: format!("{v}") }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.node.eval(p)
    }

    /// Highest coordinate index referenced, if any (0 for `x`, 1 for `y`).
    pub fn max_coord(&self) -> Option<usize> {
        self.node.max_coord()
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::MalformedField {
            field: String::new(),
            message: format!("{msg} at byte {}", self.pos),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
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
        while self.eat(b'*') {
            lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.err("expected expression")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && self.pos > start {
                self.pos += 1;
                if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| self.err(&format!("bad number `{text}`")))
    }

    fn ident(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        match name.as_str() {
            "x" => Ok(Node::Coord(0)),
            "y" => Ok(Node::Coord(1)),
            "min" | "max" => {
                self.expect(b'(')?;
                let mut args = vec![self.expr()?];
                while self.eat(b',') {
                    args.push(self.expr()?);
                }
                self.expect(b')')?;
                if args.len() < 2 {
                    return Err(self.err(&format!("`{name}` needs at least two arguments")));
                }
                let fold = |l: Node, r: Node| {
                    if name == "min" {
                        Node::Min(Box::new(l), Box::new(r))
                    } else {
                        Node::Max(Box::new(l), Box::new(r))
                    }
                };
                let mut it = args.into_iter();
                let first = it.next().unwrap();
                Ok(it.fold(first, fold))
            }
            "clamp" => {
                self.expect(b'(')?;
                let v = self.expr()?;
                self.expect(b',')?;
                let lo = self.expr()?;
                self.expect(b',')?;
                let hi = self.expr()?;
                self.expect(b')')?;
                Ok(Node::Clamp(Box::new(v), Box::new(lo), Box::new(hi)))
            }
            _ => Err(self.err(&format!("unknown identifier `{name}`"))),
        }
    }
}
