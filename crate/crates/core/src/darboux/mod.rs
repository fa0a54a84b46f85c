//! Time-dependent Darboux transformations and the partner constructions
//! built on them.
//!
//! * [`darboux`]: the bare transformation of a Schrödinger-form equation.
//! * [`Case::A`] / [`Case::B`]: reaction `-2W''` / `-2W_t`, with generalized
//!   Riccati verification, solution maps and shape-invariant hierarchies.
//! * [`case_c`]: the correspondence between Fokker–Planck equations and CDR
//!   equations with reaction `2W'S' - S'^2 - S'' - S_t`.
//! * [`phase_reduce_time_reaction`]: stripping an `x`-independent reaction.
//!
//! Every constructor here is verification-gated: it samples its defining
//! identity on a grid and refuses to return if the identity fails.

pub mod case_c;
mod cases;
mod family;
mod integrate;

use thiserror::Error;

use crate::cdr::{CdrEquation, CdrError, ResidualReport, SampleGrid, SchrodingerForm};
use crate::expr::{Bindings, EvalError, Expr, Var};

pub use cases::{hierarchy, hierarchy_solutions, verify_auxiliary, verify_riccati, Case, HierarchyLevel, Partner};
pub use family::{verify_shape_invariance, IndexRange, PrepotentialFamily};
pub use integrate::integrate_time;

/// Auxiliary functions smaller than this in magnitude count as vanishing.
pub const VANISHING_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DarbouxError {
    #[error(transparent)]
    Cdr(#[from] CdrError),
    #[error("auxiliary function vanishes at x = {x}, t = {t} (value {value:e})")]
    AuxiliaryVanishes { x: f64, t: f64, value: f64 },
    #[error("auxiliary function is not a solution: residual {max_abs:e} exceeds {tol:e}")]
    AuxiliaryNotSolution { max_abs: f64, tol: f64 },
    #[error("generalized Riccati equation fails: max deviation {max_abs:e} exceeds {tol:e}")]
    RiccatiViolation { max_abs: f64, tol: f64 },
    #[error("shape invariance fails at index {index}: max deviation {max_abs:e} exceeds {tol:e}")]
    ShapeInvarianceViolation { index: i64, max_abs: f64, tol: f64 },
    #[error("time derivatives of W at indices {a} and {b} differ by up to {max_abs:e}")]
    TimeDerivativeMismatch { a: i64, b: i64, max_abs: f64 },
    #[error("index {index} is outside the family's range {range}")]
    IndexOutOfRange { index: i64, range: IndexRange },
    #[error("shift function `{0}` is not in the symbolically integrable class")]
    NonIntegrableShift(String),
    #[error("reaction coefficient `{0}` is not in the symbolically integrable class")]
    NonIntegrableReaction(String),
    #[error("reaction coefficient depends on x (|r_x| up to {max_abs:e})")]
    ReactionNotTimeOnly { max_abs: f64 },
    #[error("constructed solution fails its residual check: max {:e} exceeds {:e}", .0.max_abs, .0.tol)]
    ResidualFail(Box<ResidualReport>),
}

impl From<EvalError> for DarbouxError {
    fn from(e: EvalError) -> Self {
        DarbouxError::Cdr(CdrError::Eval(e))
    }
}

/// `psi'/psi`.
pub fn log_derivative(psi: &Expr) -> Expr {
    Expr::div(psi.differentiate(Var::X), psi.clone())
}

/// A Schrödinger-form equation, its Darboux partner and the auxiliary
/// function linking them.
#[derive(Clone, Debug, PartialEq)]
pub struct DarbouxPair {
    pub v0: SchrodingerForm,
    pub v1: SchrodingerForm,
    pub psi0: Expr,
}

impl DarbouxPair {
    /// `V1 = V0 - 2 (ln psi0)''`, unchecked.
    pub fn new(v0: SchrodingerForm, psi0: Expr) -> Self {
        let shift = Expr::mul(Expr::int(2), log_derivative(&psi0).differentiate(Var::X));
        let v1 = SchrodingerForm::new(Expr::sub(v0.potential.clone(), shift));
        DarbouxPair { v0, v1, psi0 }
    }

    /// `(d/dx - (ln psi0)') Psi`.
    pub fn intertwine(&self, psi: &Expr) -> Expr {
        Expr::sub(psi.differentiate(Var::X), Expr::mul(log_derivative(&self.psi0), psi.clone()))
    }
}

/// Rejects an auxiliary function with a (near) zero on the grid.
pub(crate) fn check_nonvanishing(psi0: &Expr, bindings: &Bindings, grid: &SampleGrid) -> Result<(), DarbouxError> {
    let values = grid.sample(psi0, bindings)?;
    match grid.points().zip(values).find(|(_, v)| v.abs() < VANISHING_THRESHOLD) {
        Some(((x, t), value)) => Err(DarbouxError::AuxiliaryVanishes { x, t, value }),
        None => Ok(()),
    }
}

pub(crate) fn sample_report(
    e: &Expr,
    bindings: &Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<ResidualReport, DarbouxError> {
    Ok(ResidualReport::new(*grid, grid.sample(e, bindings)?, tol))
}

/// Darboux transformation of `-Psi_t = -Psi'' + V0 Psi` with auxiliary
/// solution `psi0`, applied to `psi`.
///
/// `psi0` must be nonvanishing on `grid` and solve the `V0` equation within
/// `tol`. Returns the pair and the transformed `Psi1`.
pub fn darboux(
    v0: &SchrodingerForm,
    psi0: &Expr,
    psi: &Expr,
    bindings: &Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<(DarbouxPair, Expr), DarbouxError> {
    check_nonvanishing(psi0, bindings, grid)?;
    let aux = sample_report(&v0.residual(psi0), bindings, grid, tol)?;
    if !aux.pass {
        return Err(DarbouxError::AuxiliaryNotSolution { max_abs: aux.max_abs, tol });
    }
    let pair = DarbouxPair::new(v0.clone(), psi0.clone());
    let psi1 = pair.intertwine(psi);
    Ok((pair, psi1))
}

/// Splits `P = e^{int r dt} P_F` for an `x`-independent reaction.
///
/// Returns the reaction-free Fokker–Planck equation and the phase factor.
pub fn phase_reduce_time_reaction(eq: &CdrEquation, grid: &SampleGrid) -> Result<(CdrEquation, Expr), DarbouxError> {
    let rx = grid.sample(&eq.reaction.differentiate(Var::X), &eq.parameters)?;
    let max_abs = rx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs > 1e-12 || eq.reaction.depends_on(Var::Z) {
        return Err(DarbouxError::ReactionNotTimeOnly { max_abs });
    }
    let integral = integrate_time(&eq.reaction)
        .filter(|e| !e.depends_on(Var::X))
        .ok_or_else(|| DarbouxError::NonIntegrableReaction(crate::syntax::print(&eq.reaction)))?;
    let mut fpe = eq.clone();
    fpe.reaction = Expr::zero();
    Ok((fpe, Expr::exp(integral)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdr::{Domain, SYMBOLIC_TOL};
    use crate::expr::is_numerically_zero;
    use crate::syntax::parse;

    fn grid() -> SampleGrid {
        SampleGrid::default_for(Domain::RealLine)
    }

    fn heat() -> SchrodingerForm {
        SchrodingerForm::new(Expr::zero())
    }

    fn zero_on_grid(e: &Expr, tol: f64) -> bool {
        let pts: Vec<_> = grid().points().map(|(x, t)| crate::EvalPoint::new(x, t)).collect();
        is_numerically_zero(e, &pts, tol).unwrap()
    }

    #[test]
    fn constant_auxiliary_is_plain_derivative() {
        let psi = parse("x^2 + 2*t").unwrap();
        let (pair, psi1) = darboux(&heat(), &Expr::int(3), &psi, &Bindings::new(), &grid(), 1e-12).unwrap();
        assert!(zero_on_grid(&pair.v1.potential, 0.0));
        assert!(zero_on_grid(&(psi1 - parse("2*x").unwrap()), 0.0));
    }

    #[test]
    fn exponential_auxiliary_on_heat() {
        let (pair, psi1) =
            darboux(&heat(), &parse("exp(x+t)").unwrap(), &Expr::x(), &Bindings::new(), &grid(), 1e-12).unwrap();
        assert!(zero_on_grid(&pair.v1.potential, 1e-12));
        assert!(zero_on_grid(&(psi1.clone() - parse("1 - x").unwrap()), 1e-12));
        let r = sample_report(&pair.v1.residual(&psi1), &Bindings::new(), &grid(), 1e-12).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn heat_kernel_auxiliary() {
        let psi0 = parse("t^(-1/2)*exp(-x^2/(4*t))").unwrap();
        let (pair, psi1) =
            darboux(&heat(), &psi0, &parse("x^2 + 2*t").unwrap(), &Bindings::new(), &grid(), SYMBOLIC_TOL).unwrap();
        assert!(zero_on_grid(&(pair.v1.potential.clone() - parse("1/t").unwrap()), 1e-12));
        assert!(zero_on_grid(&(psi1.clone() - parse("3*x + x^3/(2*t)").unwrap()), 1e-12));
        let r = sample_report(&pair.v1.residual(&psi1), &Bindings::new(), &grid(), 1e-9).unwrap();
        assert!(r.pass, "{}", r.max_abs);
    }

    #[test]
    fn guards() {
        let err = darboux(&heat(), &Expr::x(), &Expr::x(), &Bindings::new(), &grid(), 1e-10).unwrap_err();
        assert!(matches!(err, DarbouxError::AuxiliaryVanishes { .. }));
        let err =
            darboux(&heat(), &parse("exp(x)").unwrap(), &Expr::x(), &Bindings::new(), &grid(), 1e-10).unwrap_err();
        assert!(matches!(err, DarbouxError::AuxiliaryNotSolution { .. }));
    }

    #[test]
    fn phase_reduction() {
        let eq = CdrEquation::unit_diffusion(Expr::zero(), Expr::param("k")).with_parameters([("k", 0.7)]);
        let (fpe, phase) = phase_reduce_time_reaction(&eq, &grid()).unwrap();
        assert!(fpe.reaction.is_zero());
        let kernel = parse("exp(-x^2/(4*t))/sqrt(4*pi*t)").unwrap();
        let p = Expr::mul(phase, kernel);
        assert!(eq.verify(&p, 1e-10).unwrap().pass);

        let eq = CdrEquation::heat().with_parameters([("C", 1.0)]);
        let eq = CdrEquation { reaction: parse("-1/(2*(t+C))").unwrap(), ..eq };
        let (_, phase) = phase_reduce_time_reaction(&eq, &grid()).unwrap();
        let target = parse("(t+C)^(-1/2)").unwrap();
        let pts: Vec<_> = grid().points().map(|(x, t)| crate::EvalPoint::new(x, t).with_params([("C", 1.0)])).collect();
        assert!(is_numerically_zero(&(phase - target), &pts, 1e-14).unwrap());

        let eq = CdrEquation::unit_diffusion(Expr::zero(), parse("x*t").unwrap());
        assert!(matches!(phase_reduce_time_reaction(&eq, &grid()), Err(DarbouxError::ReactionNotTimeOnly { .. })));
        let eq = CdrEquation::unit_diffusion(Expr::zero(), parse("exp(t)").unwrap());
        assert!(matches!(phase_reduce_time_reaction(&eq, &grid()), Err(DarbouxError::NonIntegrableReaction(_))));
    }
}
