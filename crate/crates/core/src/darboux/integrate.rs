use num_rational::Rational64;
use num_traits::One;

use crate::expr::{Expr, Var};

/// Antiderivative in `t` of sums of terms of the form `c`, `c * u^k` and
/// `c / u^k` with `c` free of `t` and `u` affine in `t`.
///
/// Returns `None` outside that class. The constant of integration is zero.
/// `x` is treated like any other constant; callers that need an
/// `x`-independent result must check that themselves.
pub fn integrate_time(e: &Expr) -> Option<Expr> {
    if !e.depends_on(Var::T) {
        return Some(Expr::mul(e.clone(), Expr::t()));
    }
    match e {
        Expr::Add(a, b) => Some(Expr::add(integrate_time(a)?, integrate_time(b)?)),
        Expr::Negate(a) => Some(Expr::neg(integrate_time(a)?)),
        Expr::Multiply(a, b) if !a.depends_on(Var::T) => Some(Expr::mul((**a).clone(), integrate_time(b)?)),
        Expr::Multiply(a, b) if !b.depends_on(Var::T) => Some(Expr::mul(integrate_time(a)?, (**b).clone())),
        Expr::Divide(a, b) if !b.depends_on(Var::T) => Some(Expr::div(integrate_time(a)?, (**b).clone())),
        Expr::Divide(a, b) if !a.depends_on(Var::T) => {
            let (c, inner) = split_constant_factor(b);
            let q = inner.as_power();
            Some(Expr::div(Expr::mul((**a).clone(), power_antiderivative(&q.0, -q.1)?), c))
        }
        _ => {
            let (base, k) = e.as_power();
            power_antiderivative(&base, k)
        }
    }
}

impl Expr {
    fn as_power(&self) -> (Expr, Rational64) {
        match self {
            Expr::Power(b, k) => ((**b).clone(), *k),
            other => (other.clone(), Rational64::one()),
        }
    }
}

/// `d = c * rest` with `c` free of `t`.
fn split_constant_factor(d: &Expr) -> (Expr, Expr) {
    match d {
        Expr::Multiply(a, b) if !a.depends_on(Var::T) => {
            let (c, rest) = split_constant_factor(b);
            (Expr::mul((**a).clone(), c), rest)
        }
        Expr::Multiply(a, b) if !b.depends_on(Var::T) => {
            let (c, rest) = split_constant_factor(a);
            (Expr::mul(c, (**b).clone()), rest)
        }
        other => (Expr::one(), other.clone()),
    }
}

/// `int u^k dt` for `u` affine in `t`.
fn power_antiderivative(u: &Expr, k: Rational64) -> Option<Expr> {
    let slope = u.differentiate(Var::T).simplify();
    if slope.is_zero() || slope.depends_on(Var::T) {
        return None;
    }
    let k1 = k + Rational64::one();
    if k1 == Rational64::from_integer(0) {
        Some(Expr::div(Expr::ln(u.clone()), slope))
    } else {
        let coef = Expr::mul(Expr::Constant(crate::expr::Number::Rational(k1)), slope);
        Some(Expr::div(Expr::pow(u.clone(), k1), coef))
    }
}
