//! Fixed-point software evaluation with roughly 120 significant decimal
//! digits near unit magnitude.
//!
//! Only used to produce reference values for tests; everything else runs in
//! `f64`. Precision is absolute (fixed point), so results much smaller than
//! one carry fewer significant digits.

use std::collections::HashMap;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{EvalError, EvalPoint, Expr, Number, Var};

/// Fractional bits carried by [`Precise`].
pub const FRACTION_BITS: u64 = 400;

/// A real number `value / 2^FRACTION_BITS`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Precise(BigInt);

impl Precise {
    pub fn from_int(n: i64) -> Self {
        Precise(BigInt::from(n) << FRACTION_BITS)
    }

    pub fn from_rational(r: Rational64) -> Self {
        let num = BigInt::from(*r.numer()) << FRACTION_BITS;
        Precise(num / BigInt::from(*r.denom()))
    }

    /// Exact conversion of a double.
    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            return Precise(BigInt::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exponent = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mantissa, exp2) =
            if exponent == 0 { (fraction, -1074) } else { (fraction | (1u64 << 52), exponent - 1075) };
        let m = BigInt::from(mantissa) * sign;
        let shift = exp2 + FRACTION_BITS as i64;
        Precise(if shift >= 0 { m << shift as u64 } else { m >> (-shift) as u64 })
    }

    pub fn to_f64(&self) -> f64 {
        let (hi, shift) = {
            let bits = self.0.bits();
            if bits > 1000 {
                (&self.0 >> (bits - 1000), (bits - 1000) as i32)
            } else {
                (self.0.clone(), 0)
            }
        };
        hi.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift) * 2f64.powi(-(FRACTION_BITS as i32))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn neg(&self) -> Self {
        Precise(-&self.0)
    }

    pub fn add(&self, o: &Self) -> Self {
        Precise(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Precise(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Precise((&self.0 * &o.0) >> FRACTION_BITS)
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        if o.is_zero() {
            return None;
        }
        Some(Precise((&self.0 << FRACTION_BITS).div_floor(&o.0)))
    }

    pub fn sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        Some(Precise((&self.0 << FRACTION_BITS).sqrt()))
    }

    fn shr(&self, k: u64) -> Self {
        Precise(&self.0 >> k)
    }

    fn div_small(&self, n: i64) -> Self {
        Precise(&self.0 / BigInt::from(n))
    }

    /// `atanh(s) = s + s^3/3 + s^5/5 + ...` for `|s|` well below one.
    fn atanh_series(s: &Precise) -> Precise {
        let s2 = s.mul(s);
        let mut power = s.clone();
        let mut sum = s.clone();
        let mut k = 1i64;
        loop {
            power = power.mul(&s2);
            k += 2;
            let term = power.div_small(k);
            if term.is_zero() {
                break;
            }
            sum = sum.add(&term);
        }
        sum
    }

    /// `atan(1/n)` for an integer `n > 1`.
    fn atan_inv(n: i64) -> Precise {
        let x = Precise::from_int(1).div_small(n);
        let x2 = x.mul(&x);
        let mut power = x.clone();
        let mut sum = x;
        let mut k = 1i64;
        let mut sign = -1;
        loop {
            power = power.mul(&x2);
            k += 2;
            let term = power.div_small(k);
            if term.is_zero() {
                break;
            }
            sum = if sign < 0 { sum.sub(&term) } else { sum.add(&term) };
            sign = -sign;
        }
        sum
    }

    pub fn pi() -> Precise {
        let a = Precise::atan_inv(5);
        let b = Precise::atan_inv(239);
        Precise(a.0 * 16 - b.0 * 4)
    }

    pub fn ln2() -> Precise {
        let third = Precise::from_int(1).div_small(3);
        let s = Precise::atanh_series(&third);
        Precise(s.0 * 2)
    }

    pub fn exp(&self) -> Precise {
        let ln2 = Precise::ln2();
        // self = n ln2 + r with |r| <= ln2/2
        let n = (&self.0 + (&ln2.0 >> 1u32)).div_floor(&ln2.0);
        let r = Precise(&self.0 - &n * &ln2.0);
        const HALVINGS: u64 = 24;
        let y = r.shr(HALVINGS);
        let one = Precise::from_int(1);
        let mut term = one.clone();
        let mut sum = one;
        let mut k = 1i64;
        loop {
            term = term.mul(&y).div_small(k);
            if term.is_zero() {
                break;
            }
            sum = sum.add(&term);
            k += 1;
        }
        for _ in 0..HALVINGS {
            sum = sum.mul(&sum);
        }
        let n = n.to_i64().unwrap_or(0);
        if n >= 0 {
            Precise(sum.0 << n as u64)
        } else {
            Precise(sum.0 >> (-n) as u64)
        }
    }

    pub fn ln(&self) -> Option<Precise> {
        if self.0.sign() != Sign::Plus {
            return None;
        }
        // self = m * 2^e with m in [1, 2)
        let e = self.0.bits() as i64 - 1 - FRACTION_BITS as i64;
        let m = if e >= 0 { Precise(&self.0 >> e as u64) } else { Precise(&self.0 << (-e) as u64) };
        let one = Precise::from_int(1);
        let s = m.sub(&one).div(&m.add(&one))?;
        let ln_m = Precise(Precise::atanh_series(&s).0 * 2);
        Some(ln_m.add(&Precise(Precise::ln2().0 * e)))
    }

    pub fn powi(&self, n: i64) -> Option<Precise> {
        let mut base = self.clone();
        let mut acc = Precise::from_int(1);
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        if n < 0 {
            Precise::from_int(1).div(&acc)
        } else {
            Some(acc)
        }
    }

    /// Decimal rendering with `digits` digits after the point (truncated).
    pub fn to_decimal(&self, digits: usize) -> String {
        let neg = self.is_negative();
        let mag = self.0.abs();
        let int_part = &mag >> FRACTION_BITS;
        let frac = &mag - (&int_part << FRACTION_BITS);
        let scaled = (frac * BigInt::from(10u32).pow(digits as u32)) >> FRACTION_BITS;
        format!("{}{}.{:0>width$}", if neg { "-" } else { "" }, int_part, scaled, width = digits)
    }
}

fn rational_exponent(base: &Precise, q: Rational64) -> Result<Precise, EvalError> {
    if q.is_integer() {
        if base.is_zero() && q.is_negative() {
            return Err(EvalError::DivisionByZero);
        }
        return base.powi(q.to_integer()).ok_or(EvalError::DivisionByZero);
    }
    if base.is_negative() {
        return Err(EvalError::Domain { function: "fractional power", argument: base.to_f64() });
    }
    if base.is_zero() {
        return if q.is_negative() { Err(EvalError::DivisionByZero) } else { Ok(base.clone()) };
    }
    let ln = base.ln().expect("positive base");
    Ok(ln.mul(&Precise::from_rational(q)).exp())
}

/// Evaluates `e` at `p` in fixed-point arithmetic.
///
/// Coordinates and parameter values are taken as the exact binary value of
/// the supplied doubles.
pub fn evaluate_precise(e: &Expr, p: &EvalPoint) -> Result<Precise, EvalError> {
    fn go(e: &Expr, p: &EvalPoint, memo: &mut HashMap<*const Expr, Precise>) -> Result<Precise, EvalError> {
        let key = e as *const Expr;
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let v = match e {
            Expr::Constant(Number::Rational(r)) => Precise::from_rational(*r),
            Expr::Constant(Number::Float(f)) => Precise::from_f64(*f),
            Expr::Pi => Precise::pi(),
            Expr::Variable(Var::X) => Precise::from_f64(p.x),
            Expr::Variable(Var::T) => Precise::from_f64(p.t),
            Expr::Variable(Var::Z) => Precise::from_f64(p.z.ok_or(EvalError::UnboundVariable(Var::Z))?),
            Expr::Parameter(name) => Precise::from_f64(
                *p.bindings.get(&**name).ok_or_else(|| EvalError::UnboundParameter(name.to_string()))?,
            ),
            Expr::Negate(a) => go(a, p, memo)?.neg(),
            Expr::Add(a, b) => go(a, p, memo)?.add(&go(b, p, memo)?),
            Expr::Multiply(a, b) => go(a, p, memo)?.mul(&go(b, p, memo)?),
            Expr::Divide(a, b) => go(a, p, memo)?.div(&go(b, p, memo)?).ok_or(EvalError::DivisionByZero)?,
            Expr::Power(a, q) => rational_exponent(&go(a, p, memo)?, *q)?,
            Expr::Exponential(a) => go(a, p, memo)?.exp(),
            Expr::Logarithm(a) => {
                let arg = go(a, p, memo)?;
                arg.ln().ok_or(EvalError::Domain { function: "ln", argument: arg.to_f64() })?
            }
            Expr::SquareRoot(a) => {
                let arg = go(a, p, memo)?;
                arg.sqrt().ok_or(EvalError::Domain { function: "sqrt", argument: arg.to_f64() })?
            }
        };
        memo.insert(key, v.clone());
        Ok(v)
    }
    go(e, p, &mut HashMap::new())
}
