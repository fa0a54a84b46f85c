//! Random generators and reference evaluators shared by the integration
//! tests.
#![allow(dead_code)]

use std::sync::Arc;

use num_rational::Rational64;
use proptest::test_runner::{Config, RngSeed};
use rand::seq::IndexedRandom;
use rand::Rng;
use susy_cdr::expr::{Bindings, Number};
use susy_cdr::{EvalPoint, Expr, Var};

pub const PARAMS: [(&str, f64); 3] = [("a", 0.3), ("C", 1.0), ("k_2", -0.7)];

/// Proptest settings with the run seed taken from `SUSY_CDR_SEED`.
pub fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(susy_cdr::sampling::seed()),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn bindings() -> Bindings {
    PARAMS.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn point(x: f64, t: f64) -> EvalPoint {
    EvalPoint::new(x, t).with_params(PARAMS)
}

fn arc(e: Expr) -> Arc<Expr> {
    Arc::new(e)
}

fn leaf<R: Rng>(rng: &mut R) -> Expr {
    match rng.random_range(0..7) {
        0 => Expr::Constant(Number::Rational(Rational64::from_integer(rng.random_range(-9..=9)))),
        1 => Expr::Constant(Number::Rational(Rational64::new(rng.random_range(-9..=9), rng.random_range(2..=7)))),
        2 => Expr::Constant(Number::Float(rng.random_range(-1e3..1e3))),
        3 => Expr::Pi,
        4 => Expr::Variable(*[Var::X, Var::T, Var::Z].choose(rng).unwrap()),
        _ => Expr::Parameter(Arc::from(PARAMS.choose(rng).unwrap().0)),
    }
}

fn is_int(e: &Expr) -> bool {
    matches!(e, Expr::Constant(Number::Rational(r)) if r.is_integer())
}

/// A random tree of depth at most `depth`, in the shape the parser
/// produces: no negated literals and no quotient of two integer literals.
pub fn random_tree<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return leaf(rng);
    }
    let sub = |rng: &mut R| random_tree(rng, depth - 1);
    match rng.random_range(0..8) {
        0 => {
            let inner = sub(rng);
            if matches!(inner, Expr::Constant(_)) {
                inner
            } else {
                Expr::Negate(arc(inner))
            }
        }
        1 => Expr::Add(arc(sub(rng)), arc(sub(rng))),
        2 => Expr::Multiply(arc(sub(rng)), arc(sub(rng))),
        3 => {
            let (a, b) = (sub(rng), sub(rng));
            if is_int(&a) && is_int(&b) {
                Expr::Multiply(arc(a), arc(b))
            } else {
                Expr::Divide(arc(a), arc(b))
            }
        }
        4 => {
            let q = Rational64::new(rng.random_range(-7..=7), rng.random_range(1..=12));
            Expr::Power(arc(sub(rng)), q)
        }
        5 => Expr::Exponential(arc(sub(rng))),
        6 => Expr::Logarithm(arc(sub(rng))),
        _ => Expr::SquareRoot(arc(sub(rng))),
    }
}

pub fn depth(e: &Expr) -> usize {
    1 + e.children().into_iter().map(depth).max().unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Token {
    Num(f64),
    Name(&'static str),
    Func(&'static str),
    Op(char),
    Open,
    Close,
}

fn render(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| match t {
            Token::Num(v) if v.fract() == 0.0 => format!("{v:.0}"),
            Token::Num(v) => format!("{v}"),
            Token::Name(n) => n.to_string(),
            Token::Func(f) => format!("{f}("),
            Token::Op(c) => c.to_string(),
            Token::Open => "(".into(),
            Token::Close => ")".into(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A random token string from the expression grammar, rendered with
/// spaces, together with its tokens.
pub fn random_source<R: Rng>(rng: &mut R, depth: usize) -> (String, Vec<Token>) {
    let mut out = Vec::new();
    gen_sum(rng, depth, &mut out);
    (render(&out), out)
}

fn gen_sum<R: Rng>(rng: &mut R, depth: usize, out: &mut Vec<Token>) {
    gen_product(rng, depth, out);
    for _ in 0..rng.random_range(0..3) {
        out.push(Token::Op(if rng.random_bool(0.5) { '+' } else { '-' }));
        gen_product(rng, depth, out);
    }
}

fn gen_product<R: Rng>(rng: &mut R, depth: usize, out: &mut Vec<Token>) {
    gen_unary(rng, depth, out);
    for _ in 0..rng.random_range(0..3) {
        out.push(Token::Op(if rng.random_bool(0.5) { '*' } else { '/' }));
        gen_unary(rng, depth, out);
    }
}

fn gen_unary<R: Rng>(rng: &mut R, depth: usize, out: &mut Vec<Token>) {
    if rng.random_bool(0.2) {
        out.push(Token::Op('-'));
        gen_unary(rng, depth, out);
        return;
    }
    gen_atom(rng, depth, out);
    if rng.random_bool(0.25) {
        out.push(Token::Op('^'));
        gen_exponent(rng, out);
    }
}

fn gen_exponent<R: Rng>(rng: &mut R, out: &mut Vec<Token>) {
    match rng.random_range(0..4) {
        0 => out.push(Token::Num(rng.random_range(0..=4) as f64)),
        1 => {
            out.push(Token::Op('-'));
            out.push(Token::Num(rng.random_range(1..=3) as f64));
        }
        2 => {
            out.extend([Token::Open, Token::Num(rng.random_range(1..=5) as f64), Token::Op('/')]);
            out.extend([Token::Num(rng.random_range(2..=4) as f64), Token::Close]);
        }
        _ => {
            out.push(Token::Num(2.0));
            out.push(Token::Op('^'));
            out.push(Token::Num(rng.random_range(0..=2) as f64));
        }
    }
}

fn gen_atom<R: Rng>(rng: &mut R, depth: usize, out: &mut Vec<Token>) {
    let pick = if depth == 0 { rng.random_range(0..3) } else { rng.random_range(0..6) };
    match pick {
        0 => {
            let v = if rng.random_bool(0.7) {
                rng.random_range(0..=9) as f64
            } else {
                (rng.random_range(1..=999) as f64) / 100.0
            };
            out.push(Token::Num(v));
        }
        1 => out.push(Token::Name(["x", "t", "pi"].choose(rng).unwrap())),
        2 => out.push(Token::Name(PARAMS.choose(rng).unwrap().0)),
        3 | 4 => {
            out.push(Token::Open);
            gen_sum(rng, depth - 1, out);
            out.push(Token::Close);
        }
        _ => {
            out.push(Token::Func(["exp", "ln", "sqrt"].choose(rng).unwrap()));
            gen_sum(rng, depth - 1, out);
            out.push(Token::Close);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum StackOp {
    Bin(char),
    Neg,
    Func(&'static str),
    Open,
}

fn precedence(op: StackOp) -> (u8, bool) {
    match op {
        StackOp::Bin('+') | StackOp::Bin('-') => (1, false),
        StackOp::Bin('*') | StackOp::Bin('/') => (2, false),
        StackOp::Neg => (3, true),
        StackOp::Bin('^') => (4, true),
        _ => (0, false),
    }
}

/// Shunting-yard evaluation of a token string. Returns `None` when any
/// intermediate value is not finite.
pub fn shunting_yard(tokens: &[Token], x: f64, t: f64) -> Option<f64> {
    let lookup = |n: &str| match n {
        "x" => x,
        "t" => t,
        "pi" => std::f64::consts::PI,
        _ => PARAMS.iter().find(|(k, _)| *k == n).unwrap().1,
    };
    let mut output: Vec<f64> = Vec::new();
    let mut ops: Vec<StackOp> = Vec::new();
    let mut finite = true;
    let mut apply = |op: StackOp, output: &mut Vec<f64>| {
        let v = match op {
            StackOp::Neg => -output.pop().unwrap(),
            StackOp::Func(f) => {
                let a = output.pop().unwrap();
                match f {
                    "exp" => a.exp(),
                    "ln" => a.ln(),
                    _ => a.sqrt(),
                }
            }
            StackOp::Bin(c) => {
                let b = output.pop().unwrap();
                let a = output.pop().unwrap();
                match c {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ if b.fract() == 0.0 => a.powi(b as i32),
                    _ => a.powf(b),
                }
            }
            StackOp::Open => unreachable!(),
        };
        finite &= v.is_finite();
        output.push(v);
    };
    // a minus is unary when it does not follow an operand
    let mut after_operand = false;
    for tok in tokens {
        match tok {
            Token::Num(v) => {
                output.push(*v);
                after_operand = true;
            }
            Token::Name(n) => {
                output.push(lookup(n));
                after_operand = true;
            }
            Token::Func(f) => {
                ops.push(StackOp::Func(f));
                after_operand = false;
            }
            Token::Open => {
                ops.push(StackOp::Open);
                after_operand = false;
            }
            Token::Close => {
                while let Some(op) = ops.pop() {
                    match op {
                        StackOp::Open => break,
                        StackOp::Func(_) => {
                            apply(op, &mut output);
                            break;
                        }
                        _ => apply(op, &mut output),
                    }
                }
                after_operand = true;
            }
            Token::Op('-') if !after_operand => ops.push(StackOp::Neg),
            Token::Op(c) => {
                let (p, right) = precedence(StackOp::Bin(*c));
                while let Some(&top) = ops.last() {
                    if matches!(top, StackOp::Open | StackOp::Func(_)) {
                        break;
                    }
                    let (q, _) = precedence(top);
                    if q > p || (q == p && !right) {
                        apply(ops.pop().unwrap(), &mut output);
                    } else {
                        break;
                    }
                }
                ops.push(StackOp::Bin(*c));
                after_operand = false;
            }
        }
    }
    while let Some(op) = ops.pop() {
        apply(op, &mut output);
    }
    (finite && output.len() == 1).then(|| output[0])
}

fn coeff<R: Rng>(rng: &mut R, scale: f64) -> Expr {
    Expr::float((rng.random_range(-1.0..1.0) * scale * 1000.0).round() / 1000.0)
}

/// A smooth prepotential on the default window: quadratic and cubic terms
/// in `x` with time-dependent weights plus a localized bump.
pub fn random_prepotential<R: Rng>(rng: &mut R) -> Expr {
    let t1 = Expr::add(Expr::t(), Expr::float(rng.random_range(0.5..2.0)));
    let terms = [
        Expr::mul(coeff(rng, 0.5), Expr::x()),
        Expr::div(Expr::mul(coeff(rng, 0.3), Expr::powi(Expr::x(), 2)), t1.clone()),
        Expr::mul(Expr::mul(coeff(rng, 0.02), Expr::powi(Expr::x(), 3)), Expr::t()),
        Expr::mul(coeff(rng, 1.0), Expr::ln(t1)),
        Expr::mul(
            coeff(rng, 0.5),
            Expr::exp(Expr::neg(Expr::div(Expr::powi(Expr::x(), 2), Expr::add(Expr::t(), Expr::int(1))))),
        ),
    ];
    terms.into_iter().reduce(Expr::add).unwrap()
}

/// A smooth reaction coefficient.
pub fn random_reaction<R: Rng>(rng: &mut R) -> Expr {
    let a = Expr::div(coeff(rng, 1.0), Expr::add(Expr::t(), Expr::int(1)));
    let b = Expr::mul(coeff(rng, 0.2), Expr::powi(Expr::x(), 2));
    Expr::add(a, b)
}

/// A smooth function that generally solves nothing.
pub fn random_psi<R: Rng>(rng: &mut R) -> Expr {
    let poly = [
        coeff(rng, 1.0),
        Expr::mul(coeff(rng, 1.0), Expr::x()),
        Expr::mul(coeff(rng, 0.3), Expr::mul(Expr::powi(Expr::x(), 2), Expr::t())),
    ]
    .into_iter()
    .reduce(Expr::add)
    .unwrap();
    let width = Expr::mul(Expr::float(rng.random_range(0.5..2.0)), Expr::add(Expr::t(), Expr::int(1)));
    Expr::mul(poly, Expr::exp(Expr::neg(Expr::div(Expr::powi(Expr::x(), 2), width))))
}

/// Second-order central difference of `e` along `v` at `p`.
pub fn central_fd(e: &Expr, v: Var, p: &EvalPoint, h: f64) -> f64 {
    let shifted = |d: f64| {
        let mut q = p.clone();
        match v {
            Var::X => q.x += d,
            Var::T => q.t += d,
            Var::Z => q.z = q.z.map(|z| z + d),
        }
        e.evaluate(&q).unwrap()
    };
    (shifted(h) - shifted(-h)) / (2.0 * h)
}
