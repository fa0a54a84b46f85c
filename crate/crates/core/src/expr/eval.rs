use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;
use thiserror::Error;

use super::{Expr, Var};

/// Parameter name to value.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{function} is undefined for argument {argument}")]
    Domain { function: &'static str, argument: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("parameter `{0}` has no binding")]
    UnboundParameter(String),
    #[error("variable `{0}` has no value at this point")]
    UnboundVariable(Var),
    #[error("non-finite intermediate value {value} produced by {op}")]
    NonFinite { op: &'static str, value: f64 },
    #[error("sample set is empty")]
    EmptySample,
}

/// A point of evaluation: coordinates plus parameter values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalPoint {
    pub x: f64,
    pub t: f64,
    /// Similarity variable; only needed for expressions in `z`.
    pub z: Option<f64>,
    pub bindings: Bindings,
}

impl EvalPoint {
    pub fn new(x: f64, t: f64) -> Self {
        EvalPoint { x, t, z: None, bindings: Bindings::new() }
    }

    pub fn at_z(z: f64) -> Self {
        EvalPoint { z: Some(z), ..Default::default() }
    }

    pub fn with_params<'a>(mut self, params: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        for (k, v) in params {
            self.bindings.insert(k.to_string(), v);
        }
        self
    }

    pub fn with_bindings(mut self, bindings: &Bindings) -> Self {
        self.bindings.extend(bindings.iter().map(|(k, v)| (k.clone(), *v)));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    Const(u64),
    X,
    T,
    Z,
    Neg(u32),
    Add(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    PowI(u32, i32),
    Pow(u32, u64),
    Exp(u32),
    Ln(u32),
    Sqrt(u32),
}

/// An expression flattened into a straight-line program with parameters
/// resolved and common subexpressions merged.
///
/// Use this to evaluate one expression at many points.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    ops: Vec<Op>,
}

impl CompiledExpr {
    pub fn new(expr: &Expr, bindings: &Bindings) -> Result<Self, EvalError> {
        let mut builder = Builder { ops: Vec::new(), dedup: HashMap::new(), memo: HashMap::new() };
        builder.lower(expr, bindings)?;
        Ok(CompiledExpr { ops: builder.ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        self.eval_full(x, t, None)
    }

    pub fn eval_z(&self, z: f64) -> Result<f64, EvalError> {
        self.eval_full(0.0, 0.0, Some(z))
    }

    pub fn eval_full(&self, x: f64, t: f64, z: Option<f64>) -> Result<f64, EvalError> {
        let mut buf = Vec::with_capacity(self.ops.len());
        self.run(&mut buf, x, t, z)
    }

    /// Evaluates with a caller-owned scratch buffer.
    pub fn run(&self, buf: &mut Vec<f64>, x: f64, t: f64, z: Option<f64>) -> Result<f64, EvalError> {
        buf.clear();
        for op in &self.ops {
            let v = match *op {
                Op::Const(bits) => f64::from_bits(bits),
                Op::X => x,
                Op::T => t,
                Op::Z => z.ok_or(EvalError::UnboundVariable(Var::Z))?,
                Op::Neg(a) => -buf[a as usize],
                Op::Add(a, b) => check("addition", buf[a as usize] + buf[b as usize])?,
                Op::Mul(a, b) => check("multiplication", buf[a as usize] * buf[b as usize])?,
                Op::Div(a, b) => {
                    let den = buf[b as usize];
                    if den == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    check("division", buf[a as usize] / den)?
                }
                Op::PowI(a, n) => {
                    let base = buf[a as usize];
                    if base == 0.0 && n < 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    check("power", base.powi(n))?
                }
                Op::Pow(a, bits) => {
                    let base = buf[a as usize];
                    let q = f64::from_bits(bits);
                    if base < 0.0 {
                        return Err(EvalError::Domain { function: "fractional power", argument: base });
                    }
                    if base == 0.0 && q < 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    check("power", base.powf(q))?
                }
                Op::Exp(a) => check("exp", buf[a as usize].exp())?,
                Op::Ln(a) => {
                    let arg = buf[a as usize];
                    if arg <= 0.0 {
                        return Err(EvalError::Domain { function: "ln", argument: arg });
                    }
                    arg.ln()
                }
                Op::Sqrt(a) => {
                    let arg = buf[a as usize];
                    if arg < 0.0 {
                        return Err(EvalError::Domain { function: "sqrt", argument: arg });
                    }
                    arg.sqrt()
                }
            };
            buf.push(v);
        }
        Ok(*buf.last().expect("compiled expression has at least one op"))
    }
}

fn check(op: &'static str, value: f64) -> Result<f64, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite { op, value })
    }
}

struct Builder {
    ops: Vec<Op>,
    dedup: HashMap<Op, u32>,
    memo: HashMap<*const Expr, u32>,
}

impl Builder {
    fn push(&mut self, op: Op) -> u32 {
        if let Some(&i) = self.dedup.get(&op) {
            return i;
        }
        let i = self.ops.len() as u32;
        self.ops.push(op);
        self.dedup.insert(op, i);
        i
    }

    fn lower(&mut self, e: &Expr, bindings: &Bindings) -> Result<u32, EvalError> {
        let key = e as *const Expr;
        if let Some(&i) = self.memo.get(&key) {
            return Ok(i);
        }
        let op = match e {
            Expr::Constant(n) => Op::Const(n.to_f64().to_bits()),
            Expr::Pi => Op::Const(std::f64::consts::PI.to_bits()),
            Expr::Variable(Var::X) => Op::X,
            Expr::Variable(Var::T) => Op::T,
            Expr::Variable(Var::Z) => Op::Z,
            Expr::Parameter(name) => {
                let v = bindings.get(&**name).ok_or_else(|| EvalError::UnboundParameter(name.to_string()))?;
                Op::Const(v.to_bits())
            }
            Expr::Negate(a) => Op::Neg(self.lower(a, bindings)?),
            Expr::Add(a, b) => Op::Add(self.lower(a, bindings)?, self.lower(b, bindings)?),
            Expr::Multiply(a, b) => Op::Mul(self.lower(a, bindings)?, self.lower(b, bindings)?),
            Expr::Divide(a, b) => Op::Div(self.lower(a, bindings)?, self.lower(b, bindings)?),
            Expr::Power(a, q) => {
                let base = self.lower(a, bindings)?;
                match (q.is_integer(), q.to_integer().to_i32()) {
                    (true, Some(n)) => Op::PowI(base, n),
                    _ => Op::Pow(base, q.to_f64().unwrap_or(f64::NAN).to_bits()),
                }
            }
            Expr::Exponential(a) => Op::Exp(self.lower(a, bindings)?),
            Expr::Logarithm(a) => Op::Ln(self.lower(a, bindings)?),
            Expr::SquareRoot(a) => Op::Sqrt(self.lower(a, bindings)?),
        };
        let i = self.push(op);
        self.memo.insert(key, i);
        Ok(i)
    }
}

impl Expr {
    /// Double-precision value at `p`.
    pub fn evaluate(&self, p: &EvalPoint) -> Result<f64, EvalError> {
        CompiledExpr::new(self, &p.bindings)?.eval_full(p.x, p.t, p.z)
    }

    pub fn compile(&self, bindings: &Bindings) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::new(self, bindings)
    }
}

/// True iff `|e(p)| <= tol` for every `p` in `sample`.
pub fn is_numerically_zero(e: &Expr, sample: &[EvalPoint], tol: f64) -> Result<bool, EvalError> {
    if sample.is_empty() {
        return Err(EvalError::EmptySample);
    }
    let mut compiled: Option<(Bindings, CompiledExpr)> = None;
    let mut buf = Vec::new();
    for p in sample {
        let reuse = matches!(&compiled, Some((b, _)) if *b == p.bindings);
        if !reuse {
            compiled = Some((p.bindings.clone(), CompiledExpr::new(e, &p.bindings)?));
        }
        let (_, c) = compiled.as_ref().unwrap();
        if c.run(&mut buf, p.x, p.t, p.z)?.abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn closed_form_value() {
        // sqrt((t+C)/(4 pi t)) exp(-C x^2/(4t(t+C))) at x=t=C=1;
        // high-precision reference 0.35206532676429947777468044159651765...
        let e = parse("sqrt((t+C)/(4*pi*t))*exp(-C*x^2/(4*t*(t+C)))").unwrap();
        let v = e.evaluate(&EvalPoint::new(1.0, 1.0).with_params([("C", 1.0)])).unwrap();
        assert!((v - 0.3520653).abs() < 1e-6);
        assert!((v - 0.352_065_326_764_299_5).abs() < 1e-15);
    }

    #[test]
    fn trivial_values() {
        assert_eq!(parse("exp(0)").unwrap().evaluate(&EvalPoint::new(0.0, 0.0)).unwrap(), 1.0);
        let e = Expr::Multiply(Expr::zero().into(), Expr::x().into());
        assert_eq!(e.evaluate(&EvalPoint::new(123.0, -4.0)).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors_are_reported() {
        let p = EvalPoint::new(-1.0, 0.0);
        assert!(matches!(parse("ln(x)").unwrap().evaluate(&p), Err(EvalError::Domain { function: "ln", .. })));
        assert!(matches!(parse("sqrt(x)").unwrap().evaluate(&p), Err(EvalError::Domain { function: "sqrt", .. })));
        assert_eq!(parse("1/t").unwrap().evaluate(&p), Err(EvalError::DivisionByZero));
        assert_eq!(parse("t^(-1)").unwrap().evaluate(&p), Err(EvalError::DivisionByZero));
        assert!(parse("x^(1/2)").unwrap().evaluate(&p).is_err());
        assert_eq!(parse("a*x").unwrap().evaluate(&p), Err(EvalError::UnboundParameter("a".into())));
        assert_eq!(Expr::z().evaluate(&p), Err(EvalError::UnboundVariable(Var::Z)));
        assert!(matches!(
            parse("exp(x)").unwrap().evaluate(&EvalPoint::new(1000.0, 0.0)),
            Err(EvalError::NonFinite { .. })
        ));
    }

    #[test]
    fn numerical_zero_test() {
        let sample: Vec<_> = (0..9)
            .flat_map(|i| (0..4).map(move |j| (-4.0 + i as f64, 0.5 + 0.5 * j as f64)))
            .map(|(x, t)| EvalPoint::new(x, t).with_params([("C", 1.0)]))
            .collect();
        assert!(is_numerically_zero(&parse("x - x").unwrap(), &sample, 1e-12).unwrap());
        // gamma^2 - gamma_dot vanishes for gamma = -1/(t+C).
        let gamma = parse("-1/(t+C)").unwrap();
        let e = (gamma.clone() * gamma.clone() - gamma.differentiate(Var::T)) * parse("x^2/4").unwrap();
        assert!(is_numerically_zero(&e, &sample, 1e-10).unwrap());
        let small = parse("x*0.001").unwrap();
        assert!(!is_numerically_zero(&small, &[EvalPoint::new(1.0, 1.0)], 1e-10).unwrap());
        assert_eq!(is_numerically_zero(&small, &[], 1.0), Err(EvalError::EmptySample));
    }

    #[test]
    fn compiled_dag_merges_shared_work() {
        let e = parse("exp(x)*exp(x) + exp(x)").unwrap();
        let c = e.compile(&Bindings::new()).unwrap();
        // x, exp(x), product, sum
        assert_eq!(c.len(), 4);
    }
}
