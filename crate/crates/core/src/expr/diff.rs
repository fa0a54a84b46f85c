use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::One;

use super::{Expr, Number, Var};

impl Expr {
    /// Exact symbolic derivative with respect to `v`.
    ///
    /// The result is assembled through the smart constructors, so trivial
    /// zero and unit factors never appear. Shared subtrees are differentiated
    /// once and the result shares them as well.
    pub fn differentiate(&self, v: Var) -> Expr {
        let mut memo = HashMap::new();
        derive(self, v, &mut memo)
    }

    /// Shorthand for repeated differentiation.
    pub fn nth_derivative(&self, v: Var, n: usize) -> Expr {
        (0..n).fold(self.clone(), |acc, _| acc.differentiate(v))
    }
}

fn derive(e: &Expr, v: Var, memo: &mut HashMap<*const Expr, Expr>) -> Expr {
    let key = e as *const Expr;
    if let Some(d) = memo.get(&key) {
        return d.clone();
    }
    let d = match e {
        Expr::Constant(_) | Expr::Pi | Expr::Parameter(_) => Expr::zero(),
        Expr::Variable(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Negate(a) => Expr::neg(derive(a, v, memo)),
        Expr::Add(a, b) => Expr::add(derive(a, v, memo), derive(b, v, memo)),
        Expr::Multiply(a, b) => {
            let da = derive(a, v, memo);
            let db = derive(b, v, memo);
            Expr::add(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db))
        }
        Expr::Divide(a, b) => {
            let da = derive(a, v, memo);
            let db = derive(b, v, memo);
            let first = Expr::div(da, (**b).clone());
            if db.is_zero() {
                first
            } else {
                let second = Expr::div(Expr::mul((**a).clone(), db), Expr::powi((**b).clone(), 2));
                Expr::sub(first, second)
            }
        }
        Expr::Power(a, q) => {
            let da = derive(a, v, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                let reduced = Expr::pow((**a).clone(), q - Rational64::one());
                Expr::mul(Expr::mul(Expr::Constant(Number::Rational(*q)), reduced), da)
            }
        }
        Expr::Exponential(a) => {
            let da = derive(a, v, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                Expr::mul(e.clone(), da)
            }
        }
        Expr::Logarithm(a) => Expr::div(derive(a, v, memo), (**a).clone()),
        Expr::SquareRoot(a) => {
            let da = derive(a, v, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                Expr::div(da, Expr::mul(Expr::int(2), e.clone()))
            }
        }
    };
    memo.insert(key, d.clone());
    d
}
