//! A small closed-form expression language for coordinate functions.
//!
//! Grammar, loosest to tightest binding: `+ -`, `* /`, unary `-`, `^`
//! (right-associative, integer exponents only), then atoms: decimal literals,
//! identifiers `[A-Za-z][A-Za-z0-9_]*` bound against a declared coordinate
//! list at parse time, calls `exp`, `log`, `sin`, `cos`, and parentheses.
//! Every error carries the byte offset it arose at. Printing is canonical:
//! `parse . print` is a fixpoint on printed output.

use crate::error::{Error, Result};
use crate::jets::Jet;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Node {
    Num(f64),
    /// Coordinate reference: index into the coordinate list the expression
    /// was parsed against.
    Coord(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>, usize),
    /// Integer power; offset kept for singular-evaluation reports.
    Pow(Box<Node>, i64, usize),
    Call(Func, Box<Node>, usize),
}

/// A parsed expression together with the coordinate names it binds.
#[derive(Clone, Debug)]
pub struct Expression {
    root: Node,
    coords: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
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
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mark = i;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    if i < bytes.len() && bytes[i].is_ascii_digit() {
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    } else {
                        // Not an exponent suffix after all (e.g. "2e" before
                        // an identifier); rewind.
                        i = mark;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Parse {
                    offset: start,
                    message: format!("invalid number literal `{text}`"),
                })?;
                toks.push((Tok::Num(value), start));
            }
            b'A'..=b'Z' | b'a'..=b'z' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::Parse {
                    offset: i,
                    message: format!("unexpected character `{}`", &src[i..i + 1]),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [String],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, o)| o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut left = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    left = Node::Add(Box::new(left), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    left = Node::Sub(Box::new(left), Box::new(self.term()?));
                }
                _ => return Ok(left),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut left = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    left = Node::Mul(Box::new(left), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    let off = self.offset();
                    self.bump();
                    left = Node::Div(Box::new(left), Box::new(self.factor()?), off);
                }
                _ => return Ok(left),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            let caret_off = self.offset();
            self.bump();
            let exp_off = self.offset();
            // The exponent binds like a factor, so `x^-2` and `x^2^3`
            // (right-associative) parse; it must fold to an integer.
            let exponent = self.factor()?;
            let folded = const_fold(&exponent).ok_or(Error::NonIntegerExponent {
                offset: exp_off,
            })?;
            if folded.fract() != 0.0 || folded.abs() > 1e9 {
                return Err(Error::NonIntegerExponent { offset: exp_off });
            }
            return Ok(Node::Pow(Box::new(base), folded as i64, caret_off));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let off = self.offset();
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(Node::Num(v)),
            Some((Tok::Ident(name), o)) => {
                let func = match name.as_str() {
                    "exp" => Some(Func::Exp),
                    "log" => Some(Func::Log),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    _ => None,
                };
                if let Some(f) = func {
                    match self.peek() {
                        Some(Tok::LParen) => {
                            self.bump();
                            let arg = self.expr()?;
                            match self.bump() {
                                Some((Tok::RParen, _)) => {
                                    Ok(Node::Call(f, Box::new(arg), o))
                                }
                                other => Err(Error::Parse {
                                    offset: other.map(|(_, p)| p).unwrap_or(self.end),
                                    message: "expected `)` to close call".into(),
                                }),
                            }
                        }
                        _ => Err(Error::Parse {
                            offset: self.offset(),
                            message: format!("expected `(` after function `{name}`"),
                        }),
                    }
                } else {
                    match self.coords.iter().position(|c| c == &name) {
                        Some(idx) => Ok(Node::Coord(idx)),
                        None => Err(Error::UnboundIdentifier { name, offset: o }),
                    }
                }
            }
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    other => Err(Error::Parse {
                        offset: other.map(|(_, p)| p).unwrap_or(self.end),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Some((tok, o)) => Err(Error::Parse {
                offset: o,
                message: format!("unexpected token {tok:?}"),
            }),
            None => Err(Error::Parse {
                offset: off,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

/// Folds a constant subexpression to a number, or None if it mentions a
/// coordinate. Used only to resolve exponents.
fn const_fold(node: &Node) -> Option<f64> {
    match node {
        Node::Num(v) => Some(*v),
        Node::Coord(_) => None,
        Node::Neg(a) => const_fold(a).map(|v| -v),
        Node::Add(a, b) => Some(const_fold(a)? + const_fold(b)?),
        Node::Sub(a, b) => Some(const_fold(a)? - const_fold(b)?),
        Node::Mul(a, b) => Some(const_fold(a)? * const_fold(b)?),
        Node::Div(a, b, _) => Some(const_fold(a)? / const_fold(b)?),
        Node::Pow(a, e, _) => Some(const_fold(a)?.powi(*e as i32)),
        Node::Call(_, _, _) => None,
    }
}

pub fn parse(src: &str, coords: &[String]) -> Result<Expression> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        coords,
        end: src.len(),
    };
    let root = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(Error::Parse {
            offset: p.offset(),
            message: "trailing input after expression".into(),
        });
    }
    Ok(Expression {
        root,
        coords: coords.to_vec(),
    })
}

// Binding strengths for the canonical printer.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn print_node(node: &Node, coords: &[String], out: &mut String, parent: u8) {
    let prec = match node {
        Node::Add(..) | Node::Sub(..) => PREC_ADD,
        Node::Mul(..) | Node::Div(..) => PREC_MUL,
        Node::Neg(..) => PREC_NEG,
        Node::Pow(..) => PREC_POW,
        _ => PREC_ATOM,
    };
    let wrap = prec < parent;
    if wrap {
        out.push('(');
    }
    match node {
        Node::Num(v) => {
            if *v < 0.0 {
                // Canonical form keeps literals non-negative under a Neg node;
                // a raw negative literal still prints unambiguously.
                let _ = write!(out, "({v})");
            } else {
                let _ = write!(out, "{v}");
            }
        }
        Node::Coord(i) => out.push_str(&coords[*i]),
        Node::Neg(a) => {
            out.push('-');
            print_node(a, coords, out, PREC_NEG + 1);
        }
        Node::Add(a, b) => {
            print_node(a, coords, out, PREC_ADD);
            out.push_str(" + ");
            print_node(b, coords, out, PREC_ADD + 1);
        }
        Node::Sub(a, b) => {
            print_node(a, coords, out, PREC_ADD);
            out.push_str(" - ");
            print_node(b, coords, out, PREC_ADD + 1);
        }
        Node::Mul(a, b) => {
            print_node(a, coords, out, PREC_MUL);
            out.push('*');
            print_node(b, coords, out, PREC_MUL + 1);
        }
        Node::Div(a, b, _) => {
            print_node(a, coords, out, PREC_MUL);
            out.push('/');
            print_node(b, coords, out, PREC_MUL + 1);
        }
        Node::Pow(a, e, _) => {
            print_node(a, coords, out, PREC_ATOM);
            if *e < 0 {
                let _ = write!(out, "^({e})");
            } else {
                let _ = write!(out, "^{e}");
            }
        }
        Node::Call(f, a, _) => {
            out.push_str(f.name());
            out.push('(');
            print_node(a, coords, out, 0);
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}

impl Expression {
    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// Canonical text form; reparsing it yields the same canonical text.
    pub fn print(&self) -> String {
        let mut out = String::new();
        print_node(&self.root, &self.coords, &mut out, 0);
        out
    }

    /// Evaluates with an arbitrary jet substituted for each coordinate. The
    /// workhorse for both pointwise evaluation and chain-rule composition.
    pub fn eval_with_jets(&self, values: &[Jet]) -> Result<Jet> {
        if values.len() != self.coords.len() {
            return Err(Error::PointDimension {
                got: values.len(),
                expected: self.coords.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::Invalid(
                "eval_with_jets needs at least one jet to fix the shape; \
                 use eval for coordinate-free expressions"
                    .into(),
            ));
        }
        eval_node(&self.root, values, values[0].vars(), values[0].order())
    }

    /// Evaluates the expression as a jet at a point of the coordinate patch.
    pub fn eval(&self, point: &[f64], order: usize) -> Result<Jet> {
        if point.len() != self.coords.len() {
            return Err(Error::PointDimension {
                got: point.len(),
                expected: self.coords.len(),
            });
        }
        let vars = point.len();
        let seeds: Vec<Jet> = point
            .iter()
            .enumerate()
            .map(|(u, &x)| Jet::seed_variable(u, x, vars, order))
            .collect::<Result<_>>()?;
        eval_node(&self.root, &seeds, vars, order)
    }
}

fn eval_node(node: &Node, values: &[Jet], vars: usize, order: usize) -> Result<Jet> {
    match node {
        Node::Num(v) => Ok(Jet::constant(*v, vars, order)),
        Node::Coord(i) => Ok(values[*i].clone()),
        Node::Neg(a) => Ok(eval_node(a, values, vars, order)?.neg()),
        Node::Add(a, b) => eval_node(a, values, vars, order)?
            .add(&eval_node(b, values, vars, order)?),
        Node::Sub(a, b) => eval_node(a, values, vars, order)?
            .sub(&eval_node(b, values, vars, order)?),
        Node::Mul(a, b) => eval_node(a, values, vars, order)?
            .mul(&eval_node(b, values, vars, order)?),
        Node::Div(a, b, off) => eval_node(a, values, vars, order)?
            .div(&eval_node(b, values, vars, order)?)
            .map_err(|e| e.at_offset(*off)),
        Node::Pow(a, e, off) => eval_node(a, values, vars, order)?
            .powi(*e)
            .map_err(|e| e.at_offset(*off)),
        Node::Call(f, a, off) => {
            let arg = eval_node(a, values, vars, order)?;
            match f {
                Func::Exp => Ok(arg.exp()),
                Func::Log => arg.ln().map_err(|e| e.at_offset(*off)),
                Func::Sin => Ok(arg.sin()),
                Func::Cos => Ok(arg.cos()),
            }
        }
    }
}
