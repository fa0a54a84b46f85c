//! Fokker–Planck ↔ CDR correspondence.
//!
//! A Fokker–Planck equation with drift prepotential `omega`
//!
//! ```text
//! P_F,t = (2 omega' P_F)' + P_F''
//! ```
//!
//! corresponds, for any gauge function `S`, to the CDR equation with
//! `W = omega + S`, `C = -2W'` and reaction `r = 2W'S' - S'^2 - S'' - S_t`;
//! solutions are related by `P = e^{-S} P_F`.

use crate::cdr::{CdrEquation, Domain, ResidualReport, SampleGrid};
use crate::expr::{Bindings, Expr, Var};

use super::{sample_report, DarbouxError};

/// The decomposition `W = omega + S`.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseCData {
    pub omega: Expr,
    pub s: Expr,
    pub w: Expr,
}

impl CaseCData {
    pub fn new(omega: Expr, s: Expr) -> Self {
        let w = Expr::add(omega.clone(), s.clone());
        CaseCData { omega, s, w }
    }

    /// From `W` and `omega`, with `S = W - omega`.
    pub fn from_prepotential(w: Expr, omega: Expr) -> Self {
        let s = Expr::sub(w.clone(), omega.clone());
        CaseCData { omega, s, w }
    }

    /// `2W'S' - S'^2 - S'' - S_t`.
    pub fn reaction(&self) -> Expr {
        let w1 = self.w.differentiate(Var::X);
        let s1 = self.s.differentiate(Var::X);
        let s2 = s1.differentiate(Var::X);
        let cross = Expr::mul(Expr::int(2), Expr::mul(w1, s1.clone()));
        let r = Expr::sub(Expr::sub(cross, Expr::powi(s1, 2)), s2);
        Expr::sub(r, self.s.differentiate(Var::T))
    }

    /// `W - omega - S`; zero by construction.
    pub fn defect(&self) -> Expr {
        Expr::sub(Expr::sub(self.w.clone(), self.omega.clone()), self.s.clone())
    }

    pub fn equation(&self) -> CdrEquation {
        CdrEquation::from_prepotential(&self.w, self.reaction())
    }
}

/// CDR equation corresponding to the Fokker–Planck equation of `omega0`
/// under the gauge `s0`.
pub fn from_fpe(omega0: &Expr, s0: &Expr) -> (CdrEquation, CaseCData) {
    let data = CaseCData::new(omega0.clone(), s0.clone());
    (data.equation(), data)
}

/// The Fokker–Planck equation of `omega`: `C = -2 omega'`, no reaction.
pub fn fpe(omega: &Expr) -> CdrEquation {
    CdrEquation::from_prepotential(omega, Expr::zero())
}

/// `P = e^{-S} P_F`.
pub fn map_solution(p_f: &Expr, s: &Expr) -> Expr {
    Expr::mul(Expr::exp(Expr::neg(s.clone())), p_f.clone())
}

/// `Psi1 = (d/dx - omega1') (e^{W0} P0)`: the Fokker–Planck level Darboux
/// step expressed through a CDR solution `P0` of prepotential `W0`.
pub fn fpe_darboux_psi(omega1: &Expr, w0: &Expr, p0: &Expr) -> Expr {
    let psi0 = Expr::mul(Expr::exp(w0.clone()), p0.clone());
    Expr::sub(psi0.differentiate(Var::X), Expr::mul(omega1.differentiate(Var::X), psi0))
}

/// A verified Case C partner.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseCPartner {
    pub data: CaseCData,
    pub equation: CdrEquation,
    pub p1: Expr,
    pub report: ResidualReport,
}

impl CaseCPartner {
    /// Partner equation for drift prepotential `omega1` and CDR prepotential
    /// `w1`, and its solution `P1 = e^{-W1} Psi1`.
    ///
    /// The reaction is `2W1'S1' - S1'^2 - S1'' - S1_t` with `S1 = W1 -
    /// omega1` unless `stated_reaction` overrides it. `P1` is checked
    /// against the resulting equation on `grid` and returned only if it
    /// passes at `tol`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega1: &Expr,
        w1: &Expr,
        psi1: &Expr,
        stated_reaction: Option<&Expr>,
        bindings: &Bindings,
        domain: Domain,
        grid: &SampleGrid,
        tol: f64,
    ) -> Result<Self, DarbouxError> {
        let data = CaseCData::from_prepotential(w1.clone(), omega1.clone());
        let reaction = stated_reaction.cloned().unwrap_or_else(|| data.reaction());
        let equation = CdrEquation::from_prepotential(w1, reaction).with_bindings(bindings).with_domain(domain);
        let p1 = crate::cdr::solution_from_psi(w1, psi1);
        let report = equation.verify_symbolic(&p1, grid, tol)?;
        if !report.pass {
            return Err(DarbouxError::ResidualFail(Box::new(report)));
        }
        Ok(CaseCPartner { data, equation, p1, report })
    }
}

/// Consistency of a set of quoted intermediates `(omega1, S1)` with a final
/// `(W1, r1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntermediateCheck {
    /// `W1 - omega1 - S1` on the grid.
    pub decomposition: ResidualReport,
    /// Reaction computed from the quoted `S1` minus the stated `r1`.
    pub reaction: ResidualReport,
}

impl IntermediateCheck {
    pub fn consistent(&self) -> bool {
        self.decomposition.pass && self.reaction.pass
    }
}

pub fn check_intermediates(
    omega1: &Expr,
    s1: &Expr,
    w1: &Expr,
    r1: &Expr,
    bindings: &Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<IntermediateCheck, DarbouxError> {
    let data = CaseCData { omega: omega1.clone(), s: s1.clone(), w: w1.clone() };
    let decomposition = sample_report(&data.defect(), bindings, grid, tol)?;
    let reaction = sample_report(&Expr::sub(data.reaction(), r1.clone()), bindings, grid, tol)?;
    Ok(IntermediateCheck { decomposition, reaction })
}
