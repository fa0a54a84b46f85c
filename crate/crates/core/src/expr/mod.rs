//! Immutable symbolic expressions over the variables `x`, `t`, `z` and named
//! parameters.
//!
//! Every coefficient, prepotential, potential and closed-form solution in the
//! crate is an [`Expr`]. Trees are immutable and share subtrees through
//! [`Arc`], so cloning is cheap and values can cross threads freely.
//!
//! Two construction styles exist:
//!
//! * the enum variants themselves, which build exactly the tree you write
//!   (the parser uses these so that structure is preserved), and
//! * the smart constructors ([`Expr::add`], [`Expr::mul`], ...) and the
//!   arithmetic operators, which fold constants and drop 0/1 identities as
//!   they go. Derivatives are built this way to keep trees small.

mod diff;
mod eval;
pub mod precise;
mod simplify;

use std::collections::HashMap;
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, One, Signed, ToPrimitive, Zero};

pub use eval::{is_numerically_zero, Bindings, CompiledExpr, EvalError, EvalPoint};

/// Largest exponent denominator accepted by [`Expr::pow`] and the parser.
pub const MAX_EXPONENT_DENOMINATOR: i64 = 12;

/// Independent variables. `z` is the similarity variable used by ODE-level
/// expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    T,
    Z,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::T => "t",
            Var::Z => "z",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A numeric literal: exact rational, or an IEEE double.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Number {
    Rational(Rational64),
    Float(f64),
}

#[allow(clippy::should_implement_trait)]
impl Number {
    pub fn int(n: i64) -> Self {
        Number::Rational(Rational64::from_integer(n))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Number::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Float(f) => f,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Number::Rational(r) => r.is_zero(),
            Number::Float(f) => f == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Number::Rational(r) => r.is_one(),
            Number::Float(f) => f == 1.0,
        }
    }

    /// True for exact integers (rationals with unit denominator).
    pub fn is_integer(self) -> bool {
        matches!(self, Number::Rational(r) if r.is_integer())
    }

    pub fn is_negative(self) -> bool {
        match self {
            Number::Rational(r) => r.is_negative(),
            Number::Float(f) => f.is_sign_negative() && f != 0.0,
        }
    }

    pub fn neg(self) -> Number {
        match self {
            Number::Rational(r) => Number::Rational(-r),
            Number::Float(f) => Number::Float(-f),
        }
    }

    fn combine(
        self,
        other: Number,
        exact: impl Fn(&Rational64, &Rational64) -> Option<Rational64>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Number {
        if let (Number::Rational(a), Number::Rational(b)) = (self, other) {
            if let Some(r) = exact(&a, &b) {
                return Number::Rational(r);
            }
        }
        Number::Float(float(self.to_f64(), other.to_f64()))
    }

    pub fn add(self, other: Number) -> Number {
        self.combine(other, |a, b| a.checked_add(b), |a, b| a + b)
    }

    pub fn mul(self, other: Number) -> Number {
        self.combine(other, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    /// Division; `None` when dividing by zero.
    pub fn div(self, other: Number) -> Option<Number> {
        if other.is_zero() {
            return None;
        }
        Some(self.combine(other, |a, b| a.checked_div(b), |a, b| a / b))
    }

    /// Integer power of an exact rational, falling back to floats on overflow.
    pub fn powi(self, n: i64) -> Option<Number> {
        if n < 0 && self.is_zero() {
            return None;
        }
        if let Number::Rational(r) = self {
            if n.unsigned_abs() <= 64 {
                let mut acc = Rational64::one();
                let mut ok = true;
                for _ in 0..n.unsigned_abs() {
                    match acc.checked_mul(&r) {
                        Some(v) => acc = v,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    return Some(Number::Rational(if n < 0 { acc.recip() } else { acc }));
                }
            }
        }
        Some(Number::Float(self.to_f64().powi(n as i32)))
    }
}

/// Symbolic expression tree.
///
/// Subtraction is `Add(a, Negate(b))`. `Power` carries an exact rational
/// exponent; anything else (such as `t^x`) must be written through
/// `exp`/`ln`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Constant(Number),
    /// The constant π.
    Pi,
    Variable(Var),
    Parameter(Arc<str>),
    Negate(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Multiply(Arc<Expr>, Arc<Expr>),
    Divide(Arc<Expr>, Arc<Expr>),
    Power(Arc<Expr>, Rational64),
    Exponential(Arc<Expr>),
    Logarithm(Arc<Expr>),
    SquareRoot(Arc<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Constant(Number::int(n))
    }

    /// Exact rational `num/den`. Panics on a zero denominator.
    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Constant(Number::Rational(Rational64::new(num, den)))
    }

    pub fn float(v: f64) -> Expr {
        Expr::Constant(Number::Float(v))
    }

    pub fn var(v: Var) -> Expr {
        Expr::Variable(v)
    }

    pub fn x() -> Expr {
        Expr::Variable(Var::X)
    }

    pub fn t() -> Expr {
        Expr::Variable(Var::T)
    }

    pub fn z() -> Expr {
        Expr::Variable(Var::Z)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Parameter(Arc::from(name))
    }

    pub fn as_constant(&self) -> Option<Number> {
        match self {
            Expr::Constant(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant().is_some_and(Number::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(Number::is_one)
    }

    // Smart constructors. These never change the value of an expression at
    // any point where the original is defined.

    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Constant(n) => Expr::Constant(n.neg()),
            Expr::Negate(inner) => unwrap_arc(inner),
            Expr::Multiply(a, b) if a.as_constant().is_some() => {
                let c = a.as_constant().unwrap().neg();
                Expr::mul(Expr::Constant(c), unwrap_arc(b))
            }
            other => Expr::Negate(Arc::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Expr::Constant(x.add(y)),
            (Some(x), _) if x.is_zero() => b,
            (_, Some(y)) if y.is_zero() => a,
            _ => Expr::Add(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::neg(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Expr::Constant(x.mul(y)),
            (Some(x), _) if x.is_zero() => Expr::zero(),
            (_, Some(y)) if y.is_zero() => Expr::zero(),
            (Some(x), _) if x.is_one() => b,
            (_, Some(y)) if y.is_one() => a,
            (Some(x), _) if x.neg().is_one() => Expr::neg(b),
            (_, Some(y)) if y.neg().is_one() => Expr::neg(a),
            (None, Some(_)) => Expr::mul(b, a),
            (Some(x), None) => match &b {
                // c1 * (c2 * e) -> (c1 c2) * e
                Expr::Multiply(inner_c, rest) if inner_c.as_constant().is_some() => {
                    Expr::mul(Expr::Constant(x.mul(inner_c.as_constant().unwrap())), (**rest).clone())
                }
                Expr::Negate(inner) => Expr::mul(Expr::Constant(x.neg()), (**inner).clone()),
                _ => Expr::Multiply(Arc::new(a), Arc::new(b)),
            },
            _ => Expr::Multiply(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => match x.div(y) {
                Some(q) => Expr::Constant(q),
                None => Expr::Divide(Arc::new(a), Arc::new(b)),
            },
            (Some(x), _) if x.is_zero() => Expr::zero(),
            (_, Some(y)) if y.is_one() => a,
            (_, Some(y)) if y.neg().is_one() => Expr::neg(a),
            _ => Expr::Divide(Arc::new(a), Arc::new(b)),
        }
    }

    /// `base^exponent` for an exact rational exponent.
    pub fn pow(base: Expr, exponent: Rational64) -> Expr {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent.is_one() {
            return base;
        }
        if let Some(n) = base.as_constant() {
            if exponent.is_integer() {
                if let Some(v) = n.powi(exponent.to_integer()) {
                    return Expr::Constant(v);
                }
            }
            if n.is_one() {
                return Expr::one();
            }
        }
        Expr::Power(Arc::new(base), exponent)
    }

    pub fn powi(base: Expr, n: i64) -> Expr {
        Expr::pow(base, Rational64::from_integer(n))
    }

    pub fn exp(e: Expr) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        Expr::Exponential(Arc::new(e))
    }

    pub fn ln(e: Expr) -> Expr {
        if e.is_one() {
            return Expr::zero();
        }
        Expr::Logarithm(Arc::new(e))
    }

    pub fn sqrt(e: Expr) -> Expr {
        if e.is_zero() || e.is_one() {
            return e;
        }
        Expr::SquareRoot(Arc::new(e))
    }

    /// Children of this node, in order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Constant(_) | Expr::Pi | Expr::Variable(_) | Expr::Parameter(_) => vec![],
            Expr::Negate(a) | Expr::Power(a, _) | Expr::Exponential(a) | Expr::Logarithm(a) | Expr::SquareRoot(a) => {
                vec![a]
            }
            Expr::Add(a, b) | Expr::Multiply(a, b) | Expr::Divide(a, b) => vec![a, b],
        }
    }

    /// Calls `f` once per distinct node (shared subtrees are visited once).
    fn for_each_unique<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if !seen.insert(node as *const Expr) {
                continue;
            }
            f(node);
            stack.extend(node.children());
        }
    }

    /// Number of distinct nodes in the expression DAG.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.for_each_unique(&mut |_| n += 1);
        n
    }

    pub fn depends_on(&self, v: Var) -> bool {
        let mut found = false;
        self.for_each_unique(&mut |e| {
            if matches!(e, Expr::Variable(w) if *w == v) {
                found = true;
            }
        });
        found
    }

    /// Sorted, de-duplicated parameter names.
    pub fn parameters(&self) -> Vec<String> {
        let mut names = std::collections::BTreeSet::new();
        self.for_each_unique(&mut |e| {
            if let Expr::Parameter(p) = e {
                names.insert(p.to_string());
            }
        });
        names.into_iter().collect()
    }

    /// Replaces every occurrence of variable `v` by `replacement`.
    pub fn substitute(&self, v: Var, replacement: &Expr) -> Expr {
        self.rebuild(&mut |e| match e {
            Expr::Variable(w) if *w == v => Some(replacement.clone()),
            _ => None,
        })
    }

    /// Replaces every occurrence of parameter `name` by `replacement`.
    pub fn substitute_parameter(&self, name: &str, replacement: &Expr) -> Expr {
        self.rebuild(&mut |e| match e {
            Expr::Parameter(p) if &**p == name => Some(replacement.clone()),
            _ => None,
        })
    }

    /// Bottom-up rebuild through the smart constructors; `leaf` may replace
    /// leaves. Shared subtrees are rebuilt once.
    fn rebuild(&self, leaf: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        fn go(e: &Expr, leaf: &mut impl FnMut(&Expr) -> Option<Expr>, memo: &mut HashMap<*const Expr, Expr>) -> Expr {
            let key = e as *const Expr;
            if let Some(done) = memo.get(&key) {
                return done.clone();
            }
            let out = match e {
                Expr::Constant(_) | Expr::Pi | Expr::Variable(_) | Expr::Parameter(_) => {
                    leaf(e).unwrap_or_else(|| e.clone())
                }
                Expr::Negate(a) => Expr::neg(go(a, leaf, memo)),
                Expr::Add(a, b) => Expr::add(go(a, leaf, memo), go(b, leaf, memo)),
                Expr::Multiply(a, b) => Expr::mul(go(a, leaf, memo), go(b, leaf, memo)),
                Expr::Divide(a, b) => Expr::div(go(a, leaf, memo), go(b, leaf, memo)),
                Expr::Power(a, q) => Expr::pow(go(a, leaf, memo), *q),
                Expr::Exponential(a) => Expr::exp(go(a, leaf, memo)),
                Expr::Logarithm(a) => Expr::ln(go(a, leaf, memo)),
                Expr::SquareRoot(a) => Expr::sqrt(go(a, leaf, memo)),
            };
            memo.insert(key, out.clone());
            out
        }
        go(self, leaf, &mut HashMap::new())
    }
}

fn unwrap_arc(e: Arc<Expr>) -> Expr {
    Arc::try_unwrap(e).unwrap_or_else(|shared| (*shared).clone())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print(self))
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::float(v)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Variable(v)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $ctor:path) => {
        impl<R: Into<Expr>> ops::$trait<R> for Expr {
            type Output = Expr;
            fn $method(self, rhs: R) -> Expr {
                $ctor(self, rhs.into())
            }
        }
        impl<R: Into<Expr>> ops::$trait<R> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: R) -> Expr {
                $ctor(self.clone(), rhs.into())
            }
        }
    };
}

binary_op!(Add, add, Expr::add);
binary_op!(Sub, sub, Expr::sub);
binary_op!(Mul, mul, Expr::mul);
binary_op!(Div, div, Expr::div);

impl From<&Expr> for Expr {
    fn from(e: &Expr) -> Self {
        e.clone()
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}
