//! Pratt parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right-associative, binds tightest
//! atom   := number | ident | 'sqrt' '(' expr ')' | '(' expr ')'
//! ident  := [a-z][a-z0-9]*
//! number := digits ('.' digits)?
//! ```
//!
//! Exponents must simplify to rational constants.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};

use super::symbol::{CoordinateFrame, Symbol};
use super::{Expr, ExprError};

/// Syntax tree as written, before canonicalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(BigRational),
    Sym(Symbol),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Sqrt(Box<Node>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(pos: usize, expected: &[&str], found: String) -> ExprError {
    ExprError::Syntax {
        pos,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let int_part = &text[start..i];
                let mut value = BigRational::from_integer(int_part.parse::<BigInt>().expect("digits"));
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    let fs = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let frac: BigInt = text[fs..i].parse().expect("digits");
                    let scale = BigInt::from(10).pow((i - fs) as u32);
                    value += BigRational::new(frac, scale);
                }
                out.push((Tok::Num(value), start));
                continue;
            }
            b'a'..=b'z' => {
                while i < bytes.len() && (bytes[i].is_ascii_lowercase() || bytes[i].is_ascii_digit()) {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().expect("in bounds");
                return Err(syntax(
                    i,
                    &["number", "identifier", "operator", "`(`", "`)`"],
                    format!("character `{ch}`"),
                ));
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    frame: &'a CoordinateFrame,
}

const UNARY_BP: u8 = 5;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.pos(), &["`)`", "operator"], self.peek().describe()))
        }
    }

    fn prefix(&mut self) -> Result<Node, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(n) => Ok(Node::Num(n)),
            Tok::Ident(name) => {
                if name == "sqrt" && *self.peek() == Tok::LParen {
                    self.bump();
                    let inner = self.expr(0)?;
                    self.expect_rparen()?;
                    return Ok(Node::Sqrt(Box::new(inner)));
                }
                match self.frame.lookup(&name) {
                    Some(s) => Ok(Node::Sym(s.clone())),
                    None => Err(ExprError::UnknownSymbol(name)),
                }
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Minus => Ok(Node::Neg(Box::new(self.expr(UNARY_BP)?))),
            Tok::Plus => self.expr(UNARY_BP),
            other => Err(syntax(pos, &["number", "identifier", "`(`", "`-`"], other.describe())),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let (l_bp, r_bp) = match self.peek() {
                Tok::Plus | Tok::Minus => (1, 2),
                Tok::Star | Tok::Slash => (3, 4),
                Tok::Caret => (8, 7),
                Tok::RParen | Tok::Eof => break,
                other => {
                    return Err(syntax(
                        self.pos(),
                        &["`+`", "`-`", "`*`", "`/`", "`^`", "`)`", "end of input"],
                        other.describe(),
                    ))
                }
            };
            if l_bp < min_bp {
                break;
            }
            let op = self.bump();
            let rhs = if op == Tok::Caret { self.expr_unary_or(r_bp)? } else { self.expr(r_bp)? };
            let (a, b) = (Box::new(lhs), Box::new(rhs));
            lhs = match op {
                Tok::Plus => Node::Add(a, b),
                Tok::Minus => Node::Sub(a, b),
                Tok::Star => Node::Mul(a, b),
                Tok::Slash => Node::Div(a, b),
                Tok::Caret => Node::Pow(a, b),
                _ => unreachable!("operator token"),
            };
        }
        Ok(lhs)
    }

    // Exponents may carry their own sign: `x^-1`.
    fn expr_unary_or(&mut self, bp: u8) -> Result<Node, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.expr(bp)?)));
        }
        self.expr(bp)
    }
}

/// Parses `text` into a syntax tree whose symbols all belong to `frame`.
pub fn parse_ast(text: &str, frame: &CoordinateFrame) -> Result<Node, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, frame };
    let node = p.expr(0)?;
    match p.peek() {
        Tok::Eof => Ok(node),
        other => Err(syntax(p.pos(), &["operator", "end of input"], other.describe())),
    }
}

/// Canonicalizes a syntax tree.
pub fn simplify(node: &Node) -> Result<Expr, ExprError> {
    Ok(match node {
        Node::Num(n) => Expr::constant(n.clone()),
        Node::Sym(s) => Expr::symbol(s),
        Node::Neg(a) => -simplify(a)?,
        Node::Add(a, b) => simplify(a)? + simplify(b)?,
        Node::Sub(a, b) => simplify(a)? - simplify(b)?,
        Node::Mul(a, b) => simplify(a)? * simplify(b)?,
        Node::Div(a, b) => simplify(a)?.checked_div(&simplify(b)?)?,
        Node::Sqrt(a) => simplify(a)?.sqrt(),
        Node::Pow(a, b) => {
            let base = simplify(a)?;
            let exp = simplify(b)?.as_constant().ok_or(ExprError::NonConstantExponent)?;
            if exp.is_one() {
                base
            } else {
                base.pow_rational(&exp)?
            }
        }
    })
}

/// Parses and canonicalizes in one step.
pub fn parse_expression(text: &str, frame: &CoordinateFrame) -> Result<Expr, ExprError> {
    simplify(&parse_ast(text, frame)?)
}
