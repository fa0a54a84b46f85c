//! Text form of expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          (right associative)
//! primary := number | identifier | func '(' expr ')' | '(' expr ')'
//! func    := 'exp' | 'ln' | 'sqrt'
//! ```
//!
//! `x`, `t` and `z` are variables, `pi` is the constant, any other identifier
//! is a parameter. Exponents must reduce to a rational constant with a
//! denominator of at most 12. Implicit multiplication (`2x`) is rejected.
//!
//! Numeric literals are folded as they are read: a minus sign directly in
//! front of a constant yields a negative constant, and the quotient of two
//! integer constants yields an exact rational constant. The printer relies on
//! this to write such constants back unambiguously, so `parse(print(e)) == e`
//! holds for every tree that contains no `Negate(Constant)` node (other than
//! as the right operand of an addition, which prints as binary minus) and no
//! `Divide` of two integer constants. Trees built by the smart constructors
//! or returned by [`Expr::simplify`] always satisfy this.

use std::fmt::Write as _;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::expr::{Expr, Number, Var, MAX_EXPONENT_DENOMINATOR};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax { offset: usize, expected: Vec<&'static str>, found: String },
    #[error("`{name}` at byte {offset} is reserved and cannot be used as a parameter")]
    ReservedName { name: String, offset: usize },
    #[error("unsupported exponent at byte {offset}: {detail}")]
    UnsupportedExponent { offset: usize, detail: String },
}

impl ParseError {
    /// Byte offset the error refers to.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::ReservedName { offset, .. }
            | ParseError::UnsupportedExponent { offset, .. } => Some(*offset),
        }
    }
}

const FUNCTIONS: [&str; 3] = ["exp", "ln", "sqrt"];
const RESERVED: [&str; 7] = ["x", "t", "z", "pi", "exp", "ln", "sqrt"];

/// Rejects names that cannot be used as parameters.
pub fn check_parameter_name(name: &str) -> Result<(), ParseError> {
    let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid {
        return Err(ParseError::Syntax { offset: 0, expected: vec!["identifier"], found: format!("`{name}`") });
    }
    if RESERVED.contains(&name) {
        return Err(ParseError::ReservedName { name: name.to_string(), offset: 0 });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Float(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("number `{n}`"),
            Tok::Float(f) => format!("number `{f}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'^' => out.push((Tok::Caret, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut is_float = false;
                if i < bytes.len() && bytes[i] == b'.' {
                    is_float = true;
                    i += 1;
                    let digits = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == digits {
                        return Err(ParseError::Syntax {
                            offset: i.min(src.len()),
                            expected: vec!["digit"],
                            found: found_at(src, i),
                        });
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        is_float = true;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let tok = if is_float {
                    Tok::Float(text.parse().expect("validated float literal"))
                } else {
                    match text.parse::<i64>() {
                        Ok(n) => Tok::Int(n),
                        Err(_) => Tok::Float(text.parse().expect("digit string")),
                    }
                };
                out.push((tok, start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["number", "identifier", "operator", "parenthesis"],
                    found: found_at(src, start),
                })
            }
        }
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

fn found_at(src: &str, offset: usize) -> String {
    match src.get(offset..).and_then(|s| s.chars().next()) {
        Some(c) => format!("`{c}`"),
        None => "end of input".into(),
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax { offset: self.offset(), expected, found: self.peek().describe() }
    }

    fn expect(&mut self, tok: Tok, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(vec![name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Arc::new(lhs), Arc::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Arc::new(lhs), Arc::new(Expr::Negate(Arc::new(rhs))));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Multiply(Arc::new(lhs), Arc::new(rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = match (&lhs, &rhs) {
                        (Expr::Constant(Number::Rational(a)), Expr::Constant(Number::Rational(b)))
                            if a.is_integer() && b.is_integer() && *b.numer() != 0 =>
                        {
                            Expr::Constant(Number::Rational(a / b))
                        }
                        _ => Expr::Divide(Arc::new(lhs), Arc::new(rhs)),
                    };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Constant(n) => Expr::Constant(n.neg()),
                other => Expr::Negate(Arc::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let exponent = self.unary()?;
        let q =
            constant_exponent(&exponent).map_err(|detail| ParseError::UnsupportedExponent { offset: at, detail })?;
        Ok(Expr::Power(Arc::new(base), q))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        let tok = self.peek().clone();
        if !matches!(tok, Tok::Int(_) | Tok::Float(_) | Tok::LParen | Tok::Ident(_)) {
            return Err(self.error(vec!["number", "identifier", "`(`"]));
        }
        self.bump();
        match tok {
            Tok::Int(n) => Ok(Expr::int(n)),
            Tok::Float(f) => Ok(Expr::float(f)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Variable(Var::X)),
                "t" => Ok(Expr::Variable(Var::T)),
                "z" => Ok(Expr::Variable(Var::Z)),
                "pi" => Ok(Expr::Pi),
                f if FUNCTIONS.contains(&f) => {
                    if *self.peek() != Tok::LParen {
                        return Err(ParseError::ReservedName { name, offset: at });
                    }
                    self.bump();
                    let arg = Arc::new(self.expr()?);
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(match f {
                        "exp" => Expr::Exponential(arg),
                        "ln" => Expr::Logarithm(arg),
                        _ => Expr::SquareRoot(arg),
                    })
                }
                _ => Ok(Expr::Parameter(Arc::from(name.as_str()))),
            },
            _ => unreachable!("checked above"),
        }
    }
}

fn constant_exponent(e: &Expr) -> Result<Rational64, String> {
    let q = match e.simplify().as_constant() {
        Some(Number::Rational(r)) => r,
        Some(Number::Float(f)) => (1..=MAX_EXPONENT_DENOMINATOR)
            .find_map(|d| {
                let n = f * d as f64;
                (n.fract() == 0.0 && n.abs() < 1e15).then(|| Rational64::new(n as i64, d))
            })
            .ok_or_else(|| format!("{f} is not a rational with denominator <= {MAX_EXPONENT_DENOMINATOR}"))?,
        None => return Err("exponent must be a constant".into()),
    };
    if *q.denom() > MAX_EXPONENT_DENOMINATOR {
        return Err(format!("denominator of {q} exceeds {MAX_EXPONENT_DENOMINATOR}"));
    }
    Ok(q)
}

/// Parses the expression mini-language.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(vec!["operator", "end of input"]));
    }
    Ok(e)
}

/// Fully parenthesized rendering that [`parse`] reads back to the same tree.
pub fn print(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_rational(out: &mut String, r: Rational64) {
    if r.is_integer() && !r.is_negative() {
        let _ = write!(out, "{}", r.numer());
    } else if r.is_integer() {
        let _ = write!(out, "(-{})", r.numer().unsigned_abs());
    } else {
        let sign = if r.is_negative() { "-" } else { "" };
        let _ = write!(out, "({sign}{}/{})", r.numer().unsigned_abs(), r.denom());
    }
}

fn write_float(out: &mut String, f: f64) {
    if f.is_sign_negative() {
        let _ = write!(out, "(-{:?})", -f);
    } else {
        let _ = write!(out, "{f:?}");
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Constant(Number::Rational(r)) => write_rational(out, *r),
        Expr::Constant(Number::Float(f)) => write_float(out, *f),
        Expr::Pi => out.push_str("pi"),
        Expr::Variable(v) => out.push_str(v.name()),
        Expr::Parameter(p) => out.push_str(p),
        Expr::Negate(a) => {
            out.push_str("(-");
            write_expr(out, a);
            out.push(')');
        }
        Expr::Add(a, b) => {
            out.push('(');
            write_expr(out, a);
            if let Expr::Negate(inner) = &**b {
                out.push('-');
                write_expr(out, inner);
            } else {
                out.push('+');
                write_expr(out, b);
            }
            out.push(')');
        }
        Expr::Multiply(a, b) | Expr::Divide(a, b) => {
            out.push('(');
            write_expr(out, a);
            out.push(if matches!(e, Expr::Multiply(..)) { '*' } else { '/' });
            write_expr(out, b);
            out.push(')');
        }
        Expr::Power(a, q) => {
            out.push('(');
            write_expr(out, a);
            out.push('^');
            write_rational(out, *q);
            out.push(')');
        }
        Expr::Exponential(a) | Expr::Logarithm(a) | Expr::SquareRoot(a) => {
            out.push_str(match e {
                Expr::Exponential(_) => "exp(",
                Expr::Logarithm(_) => "ln(",
                _ => "sqrt(",
            });
            write_expr(out, a);
            out.push(')');
        }
    }
}

/// Converts an `f64` exponent to an exact small-denominator rational.
pub fn exponent_from_f64(v: f64) -> Option<Rational64> {
    constant_exponent(&Expr::float(v)).ok()
}

/// Rational to `f64`; saturates to NaN on overflow.
pub fn rational_to_f64(q: Rational64) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
