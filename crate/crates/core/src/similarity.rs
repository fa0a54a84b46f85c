//! Similarity forms of CDR equations.
//!
//! Under `x = e^a x'`, `t = e^b t'` a scale-invariant CDR equation has
//! solutions `P = t^mu y(z)` with `z = x / t^alpha`, and coefficients
//!
//! ```text
//! C = t^gamma tau(z),  D = t^delta sigma(z),  R = t^rho rho(z)
//! gamma = alpha - 1,   delta = 2 alpha - 1,   rho = mu - 1
//! ```
//!
//! The PDE reduces to
//! `sigma y'' + (sigma' + alpha z - tau) y' - (tau' + mu) y + rho = 0`.
//! With `sigma = 1`, `tau = alpha z` and `rho = -Phi y` this is the
//! Schrödinger form `-y'' + (V - E) y = 0` with `V - E = Phi + mu + alpha`,
//! to which a time-independent Darboux step applies; the result is lifted
//! back to a partner PDE.

use std::collections::BTreeMap;

use num_rational::Rational64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdr::{Axis, CdrEquation, CdrError, GridDescription, ResidualReport, SampleGrid};
use crate::darboux::VANISHING_THRESHOLD;
use crate::expr::{Bindings, CompiledExpr, EvalError, Expr, Number, Var};
use crate::syntax::{check_parameter_name, exponent_from_f64, parse, rational_to_f64, ParseError};

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Cdr(#[from] CdrError),
    #[error("scaling exponent {0} is not a rational with denominator at most 12")]
    InvalidExponent(f64),
    #[error("auxiliary function vanishes at z = {z} (value {value:e})")]
    AuxiliaryVanishes { z: f64, value: f64 },
    #[error("auxiliary function is not a solution at E = {energy}: residual {max_abs:e} exceeds {tol:e}")]
    AuxiliaryNotSolution { energy: f64, max_abs: f64, tol: f64 },
    #[error("y is not a solution at E = {energy}: residual {max_abs:e} exceeds {tol:e}")]
    NotASolution { energy: f64, max_abs: f64, tol: f64 },
    #[error("lifted solution fails its residual check: max {:e} exceeds {:e}", .0.max_abs, .0.tol)]
    ResidualFail(Box<ResidualReport>),
    #[error("invalid similarity spec: {0}")]
    InvalidSpec(String),
}

/// The independent exponents `alpha` and `mu`; the others are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalingExponents {
    pub alpha: Rational64,
    pub mu: Rational64,
}

impl ScalingExponents {
    pub fn new(alpha: Rational64, mu: Rational64) -> Self {
        ScalingExponents { alpha, mu }
    }

    pub fn from_f64(alpha: f64, mu: f64) -> Result<Self, SimilarityError> {
        let alpha_q = exponent_from_f64(alpha).ok_or(SimilarityError::InvalidExponent(alpha))?;
        let mu_q = exponent_from_f64(mu).ok_or(SimilarityError::InvalidExponent(mu))?;
        Ok(ScalingExponents::new(alpha_q, mu_q))
    }

    pub fn gamma(&self) -> Rational64 {
        self.alpha - 1
    }

    pub fn delta(&self) -> Rational64 {
        self.alpha * 2 - 1
    }

    pub fn rho(&self) -> Rational64 {
        self.mu - 1
    }

    fn alpha_expr(&self) -> Expr {
        Expr::Constant(Number::Rational(self.alpha))
    }

    fn mu_expr(&self) -> Expr {
        Expr::Constant(Number::Rational(self.mu))
    }
}

/// The reaction part of the reduced ODE.
#[derive(Clone, Debug, PartialEq)]
pub enum ReducedReaction {
    /// `rho(z) = -Phi(z) y(z)`.
    Linear { phi: Expr },
    /// A `y`-independent source `rho(z)`.
    Source(Expr),
}

/// `sigma y'' + (sigma' + alpha z - tau) y' - (tau' + mu) y + rho = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityOde {
    pub sigma: Expr,
    pub tau: Expr,
    pub rho_fn: ReducedReaction,
    pub exponents: ScalingExponents,
}

pub fn reduce_to_ode(sigma: Expr, tau: Expr, rho_fn: ReducedReaction, exponents: ScalingExponents) -> SimilarityOde {
    SimilarityOde { sigma, tau, rho_fn, exponents }
}

impl SimilarityOde {
    /// `sigma = 1`, `tau = alpha z`, `rho = -Phi y`.
    pub fn special(phi: Expr, exponents: ScalingExponents) -> Self {
        let tau = Expr::mul(exponents.alpha_expr(), Expr::z());
        reduce_to_ode(Expr::one(), tau, ReducedReaction::Linear { phi }, exponents)
    }

    /// Left-hand side of the ODE evaluated on `y`.
    pub fn residual(&self, y: &Expr) -> Expr {
        let z = Expr::z();
        let y1 = y.differentiate(Var::Z);
        let y2 = y1.differentiate(Var::Z);
        let drift = Expr::sub(
            Expr::add(self.sigma.differentiate(Var::Z), Expr::mul(self.exponents.alpha_expr(), z)),
            self.tau.clone(),
        );
        let decay = Expr::add(self.tau.differentiate(Var::Z), self.exponents.mu_expr());
        let lhs =
            Expr::sub(Expr::add(Expr::mul(self.sigma.clone(), y2), Expr::mul(drift, y1)), Expr::mul(decay, y.clone()));
        let rho = match &self.rho_fn {
            ReducedReaction::Linear { phi } => Expr::neg(Expr::mul(phi.clone(), y.clone())),
            ReducedReaction::Source(s) => s.clone(),
        };
        Expr::add(lhs, rho)
    }

    /// Schrödinger form at energy `e`: `V = Phi + mu + alpha + E`. Only for
    /// the linear reaction.
    pub fn schrodinger(&self, e: f64) -> Option<OdeSchrodinger> {
        match &self.rho_fn {
            ReducedReaction::Linear { phi } => {
                let shift = Expr::add(Expr::add(self.exponents.mu_expr(), self.exponents.alpha_expr()), Expr::float(e));
                Some(OdeSchrodinger { potential: Expr::add(phi.clone(), shift), energy: e })
            }
            ReducedReaction::Source(_) => None,
        }
    }
}

/// `-y'' + (V - E) y = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeSchrodinger {
    pub potential: Expr,
    pub energy: f64,
}

impl OdeSchrodinger {
    /// `-y'' + (V - e) y`.
    pub fn residual_at(&self, y: &Expr, e: f64) -> Expr {
        ode_residual(&self.potential, e, y)
    }

    /// `Phi = V - E - mu - alpha`.
    pub fn phi(&self, exponents: &ScalingExponents) -> Expr {
        phi_from(&self.potential, self.energy, exponents)
    }
}

fn phi_from(v: &Expr, e: f64, exponents: &ScalingExponents) -> Expr {
    let shift = Expr::add(Expr::add(Expr::float(e), exponents.mu_expr()), exponents.alpha_expr());
    Expr::sub(v.clone(), shift)
}

/// `-y'' + (V - E) y`.
pub fn ode_residual(v: &Expr, e: f64, y: &Expr) -> Expr {
    let vy = Expr::mul(Expr::sub(v.clone(), Expr::float(e)), y.clone());
    Expr::sub(vy, y.nth_derivative(Var::Z, 2))
}

/// Default sample interval in `z`: `[-4, 4]`, 81 points.
pub fn default_z_axis() -> Axis {
    Axis::new(-4.0, 4.0, 81)
}

/// Samples an expression in `z`.
pub fn sample_z(e: &Expr, bindings: &Bindings, axis: &Axis) -> Result<Vec<f64>, EvalError> {
    let c = CompiledExpr::new(e, bindings)?;
    let mut buf = Vec::new();
    axis.nodes().map(|z| c.run(&mut buf, 0.0, 0.0, Some(z))).collect()
}

fn z_report(e: &Expr, bindings: &Bindings, axis: &Axis, tol: f64) -> Result<ResidualReport, EvalError> {
    Ok(ResidualReport::new(GridDescription::Line { z: *axis }, sample_z(e, bindings, axis)?, tol))
}

/// Output of [`ode_darboux`].
#[derive(Clone, Debug, PartialEq)]
pub struct OdeDarboux {
    /// `V - 2 (ln y0)''`.
    pub potential: Expr,
    /// `(d/dz - (ln y0)') y`.
    pub y: Expr,
    /// Energy of the input `y`, preserved by the transformation.
    pub energy: f64,
    /// `-y~'' + (V~ - E_y) y~` on the sample interval.
    pub report: ResidualReport,
}

impl OdeDarboux {
    /// Whether the transformed function vanishes identically on the sample
    /// interval (the transformation annihilates its own auxiliary function).
    pub fn annihilated(&self, bindings: &Bindings, axis: &Axis) -> Result<bool, EvalError> {
        Ok(sample_z(&self.y, bindings, axis)?.iter().all(|v| v.abs() <= 1e-12))
    }
}

/// Time-independent Darboux step: `y0` solves `-y'' + (V - e_aux) y = 0`,
/// `y` solves it at `e_y`; the returned pair solves the partner equation at
/// `e_y`.
#[allow(clippy::too_many_arguments)]
pub fn ode_darboux(
    v: &Expr,
    e_aux: f64,
    y0: &Expr,
    y: &Expr,
    e_y: f64,
    bindings: &Bindings,
    axis: &Axis,
    tol: f64,
) -> Result<OdeDarboux, SimilarityError> {
    let values = sample_z(y0, bindings, axis)?;
    if let Some((z, value)) = axis.nodes().zip(values).find(|(_, v)| v.abs() < VANISHING_THRESHOLD) {
        return Err(SimilarityError::AuxiliaryVanishes { z, value });
    }
    let aux = z_report(&ode_residual(v, e_aux, y0), bindings, axis, tol)?;
    if !aux.pass {
        return Err(SimilarityError::AuxiliaryNotSolution { energy: e_aux, max_abs: aux.max_abs, tol });
    }
    let own = z_report(&ode_residual(v, e_y, y), bindings, axis, tol)?;
    if !own.pass {
        return Err(SimilarityError::NotASolution { energy: e_y, max_abs: own.max_abs, tol });
    }
    let ld = z_log_derivative(y0);
    let potential = Expr::sub(v.clone(), Expr::mul(Expr::int(2), ld.differentiate(Var::Z)));
    let y_t = Expr::sub(y.differentiate(Var::Z), Expr::mul(ld, y.clone()));
    let report = z_report(&ode_residual(&potential, e_y, &y_t), bindings, axis, tol)?;
    Ok(OdeDarboux { potential, y: y_t, energy: e_y, report })
}

fn z_log_derivative(y0: &Expr) -> Expr {
    Expr::div(y0.differentiate(Var::Z), y0.clone())
}

/// `z = x / t^alpha` as an expression in `(x, t)`.
fn z_of_xt(exponents: &ScalingExponents) -> Expr {
    Expr::mul(Expr::x(), Expr::pow(Expr::t(), -exponents.alpha))
}

fn t_pow(q: Rational64) -> Expr {
    Expr::pow(Expr::t(), q)
}

/// A PDE obtained by lifting ODE data, with its verified solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Lift {
    pub equation: CdrEquation,
    pub solution: Expr,
    pub phi: Expr,
    pub report: ResidualReport,
}

/// `(x, t)` grid whose `z` values stay inside `z_axis` for `t` in `[t_min,
/// t_max]`.
pub fn lift_grid(z_axis: &Axis, exponents: &ScalingExponents, t_axis: Axis) -> SampleGrid {
    let a = rational_to_f64(exponents.alpha);
    let scale = t_axis.min.powf(a).min(t_axis.max.powf(a));
    SampleGrid::new(Axis::new(z_axis.min * scale, z_axis.max * scale, z_axis.points), t_axis)
}

/// Builds the partner PDE
///
/// ```text
/// P = t^mu y(z),  C = t^gamma alpha z,  D = t^delta,  r = -Phi(z) / t,
/// Phi = V - E - mu - alpha
/// ```
///
/// (`r` is the linear reaction coefficient, so `R = r P = -t^rho Phi y`),
/// and checks `P` against it on `grid`.
pub fn lift_to_pde(
    y: &Expr,
    v: &Expr,
    e: f64,
    exponents: &ScalingExponents,
    bindings: &Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<Lift, SimilarityError> {
    let z = z_of_xt(exponents);
    let phi = phi_from(v, e, exponents);
    let solution = Expr::mul(t_pow(exponents.mu), y.substitute(Var::Z, &z));
    let convection = Expr::mul(t_pow(exponents.gamma()), Expr::mul(exponents.alpha_expr(), z.clone()));
    let diffusion = t_pow(exponents.delta());
    let reaction = Expr::neg(Expr::div(phi.substitute(Var::Z, &z), Expr::t()));
    let equation = CdrEquation::new(convection, diffusion, reaction).with_bindings(bindings);
    let report = equation.verify_symbolic(&solution, grid, tol)?;
    if !report.pass {
        return Err(SimilarityError::ResidualFail(Box::new(report)));
    }
    Ok(Lift { equation, solution, phi, report })
}

/// Reads the ODE data back off a scale-invariant equation at the reference
/// time `t_ref`: `tau(z) = t^-gamma C`, `sigma(z) = t^-delta D` and `Phi(z) =
/// -t r`, each at `x = z t_ref^alpha`.
pub fn reduce_equation(eq: &CdrEquation, exponents: &ScalingExponents, t_ref: f64) -> SimilarityOde {
    let x = Expr::mul(Expr::z(), Expr::float(t_ref.powf(rational_to_f64(exponents.alpha))));
    let at = |e: &Expr, power: Rational64| {
        let e = e.substitute(Var::X, &x).substitute(Var::T, &Expr::float(t_ref));
        Expr::mul(Expr::float(t_ref.powf(-rational_to_f64(power))), e)
    };
    let phi = Expr::neg(at(&eq.reaction, Rational64::from_integer(-1)));
    SimilarityOde {
        sigma: at(&eq.diffusion, exponents.delta()),
        tau: at(&eq.convection, exponents.gamma()),
        rho_fn: ReducedReaction::Linear { phi },
        exponents: *exponents,
    }
}

/// Whether the coefficients of `eq` have the scaling forms of `exponents`:
/// at `n_points` random `(x, t)` and every `eps` in `epsilons`, the point
/// `(eps^alpha x, eps t)` (same `z`) must give `C`, `D` and `r` scaled by
/// `eps^gamma`, `eps^delta` and `eps^-1`.
pub fn scaling_check<R: Rng>(
    eq: &CdrEquation,
    exponents: &ScalingExponents,
    epsilons: &[f64],
    n_points: usize,
    rng: &mut R,
) -> Result<bool, SimilarityError> {
    let a = rational_to_f64(exponents.alpha);
    let coefficients = [
        (CompiledExpr::new(&eq.convection, &eq.parameters)?, rational_to_f64(exponents.gamma())),
        (CompiledExpr::new(&eq.diffusion, &eq.parameters)?, rational_to_f64(exponents.delta())),
        (CompiledExpr::new(&eq.reaction, &eq.parameters)?, -1.0),
    ];
    for _ in 0..n_points {
        let t: f64 = rng.random_range(0.5..2.0);
        let x = rng.random_range(-4.0..4.0) * t.powf(a);
        for &eps in epsilons {
            let (xs, ts) = (eps.powf(a) * x, eps * t);
            for (c, power) in &coefficients {
                let base = c.eval(x, t)?;
                let scaled = c.eval(xs, ts)?;
                let expected = eps.powf(*power) * base;
                if (scaled - expected).abs() > 1e-10 * (1.0 + expected.abs()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The `epsilon` values used by default in [`scaling_check`].
pub const DEFAULT_EPSILONS: [f64; 3] = [0.5, 2.0, 4.0];

/// JSON description of a similarity pairing problem. Expressions are in `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilaritySpec {
    pub alpha: f64,
    pub mu: f64,
    /// Energy at which `y0` solves the reduced equation.
    #[serde(rename = "E")]
    pub energy: f64,
    /// Energy at which `y` solves it; defaults to `E`.
    #[serde(rename = "E_y", default, skip_serializing_if = "Option::is_none")]
    pub energy_y: Option<f64>,
    #[serde(rename = "Phi")]
    pub phi: String,
    pub y0: String,
    pub y: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

/// Parsed form of a [`SimilaritySpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityProblem {
    pub exponents: ScalingExponents,
    pub energy: f64,
    pub energy_y: f64,
    pub phi: Expr,
    pub y0: Expr,
    pub y: Expr,
    pub parameters: Bindings,
}

impl SimilarityProblem {
    pub fn from_spec(spec: &SimilaritySpec) -> Result<Self, SimilarityError> {
        for name in spec.parameters.keys() {
            check_parameter_name(name)?;
        }
        let field = |label: &str, src: &str| -> Result<Expr, SimilarityError> {
            let e = parse(src)?;
            if e.depends_on(Var::X) || e.depends_on(Var::T) {
                return Err(SimilarityError::InvalidSpec(format!("{label} must be a function of z only")));
            }
            if let Some(p) = e.parameters().into_iter().find(|p| !spec.parameters.contains_key(p)) {
                return Err(SimilarityError::InvalidSpec(format!("{label} uses unbound parameter `{p}`")));
            }
            Ok(e)
        };
        Ok(SimilarityProblem {
            exponents: ScalingExponents::from_f64(spec.alpha, spec.mu)?,
            energy: spec.energy,
            energy_y: spec.energy_y.unwrap_or(spec.energy),
            phi: field("Phi", &spec.phi)?,
            y0: field("y0", &spec.y0)?,
            y: field("y", &spec.y)?,
            parameters: spec.parameters.clone(),
        })
    }

    pub fn ode(&self) -> SimilarityOde {
        SimilarityOde::special(self.phi.clone(), self.exponents)
    }

    /// `V = Phi + mu + alpha + E`.
    pub fn potential(&self) -> Expr {
        self.ode().schrodinger(self.energy).expect("special ODE has a linear reaction").potential
    }
}

/// Everything the similarity pipeline produces.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityOutcome {
    pub potential: Expr,
    pub darboux: OdeDarboux,
    pub annihilated: bool,
    pub lift: Lift,
    pub round_trip: ResidualReport,
}

/// Darboux step on the reduced equation followed by the lift, on the default
/// `z` interval and `t` in `[0.5, 2]`.
pub fn run_pipeline(problem: &SimilarityProblem, tol: f64) -> Result<SimilarityOutcome, SimilarityError> {
    let axis = default_z_axis();
    let b = &problem.parameters;
    let v = problem.potential();
    let darboux = ode_darboux(&v, problem.energy, &problem.y0, &problem.y, problem.energy_y, b, &axis, tol)?;
    let annihilated = darboux.annihilated(b, &axis)?;
    let grid = lift_grid(&axis, &problem.exponents, Axis::new(0.5, 2.0, 31));
    let lift = lift_to_pde(&darboux.y, &darboux.potential, darboux.energy, &problem.exponents, b, &grid, tol)?;
    let reduced = reduce_equation(&lift.equation, &problem.exponents, 1.0);
    let expected = SimilarityOde::special(lift.phi.clone(), problem.exponents);
    let round_trip = round_trip_report(&reduced, &expected, b, &axis, 1e-10)?;
    Ok(SimilarityOutcome { potential: v, darboux, annihilated, lift, round_trip })
}

/// Largest coefficient mismatch between two reduced ODEs.
pub fn round_trip_report(
    a: &SimilarityOde,
    b: &SimilarityOde,
    bindings: &Bindings,
    axis: &Axis,
    tol: f64,
) -> Result<ResidualReport, SimilarityError> {
    let phi = |o: &SimilarityOde| match &o.rho_fn {
        ReducedReaction::Linear { phi } => phi.clone(),
        ReducedReaction::Source(s) => s.clone(),
    };
    let parts = [
        Expr::sub(a.sigma.clone(), b.sigma.clone()),
        Expr::sub(a.tau.clone(), b.tau.clone()),
        Expr::sub(phi(a), phi(b)),
    ];
    let mut values = vec![0.0; axis.points];
    for p in &parts {
        for (m, v) in values.iter_mut().zip(sample_z(p, bindings, axis)?) {
            *m = f64::max(*m, v.abs());
        }
    }
    Ok(ResidualReport::new(GridDescription::Line { z: *axis }, values, tol))
}
