use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cdr::{to_schrodinger, CdrEquation, Domain, ResidualReport, SampleGrid};
use crate::expr::{Bindings, Expr, Var};
use crate::syntax::print;

use super::{check_nonvanishing, integrate_time, sample_report, DarbouxError, PrepotentialFamily};

/// The two reaction types with a closed-form auxiliary function.
///
/// * `A`: `r = -2 W''`, auxiliary `e^{W}`.
/// * `B`: `r = -2 W_t`, auxiliary `e^{-W}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::A => "A",
            Case::B => "B",
        })
    }
}

impl Case {
    /// +1 for A, -1 for B.
    fn sign(self) -> i64 {
        match self {
            Case::A => 1,
            Case::B => -1,
        }
    }

    pub fn reaction(self, w: &Expr) -> Expr {
        let d = match self {
            Case::A => w.nth_derivative(Var::X, 2),
            Case::B => w.differentiate(Var::T),
        };
        Expr::mul(Expr::int(-2), d)
    }

    /// `C = -2 W'`, `D = 1` and this case's reaction.
    pub fn equation(self, w: &Expr) -> CdrEquation {
        CdrEquation::from_prepotential(w, self.reaction(w))
    }

    /// `e^{W}` for A, `e^{-W}` for B.
    pub fn auxiliary(self, w: &Expr) -> Expr {
        Expr::exp(Expr::mul(Expr::int(self.sign()), w.clone()))
    }

    /// Both sides of the generalized Riccati equation.
    ///
    /// A: `W0'^2 - W0'' - W0_t = W1'^2 + W1'' - W1_t`;
    /// B: `W0'^2 + W0'' + W0_t = W1'^2 - W1'' + W1_t`.
    pub fn riccati_sides(self, w0: &Expr, w1: &Expr) -> (Expr, Expr) {
        let s = Expr::int(self.sign());
        let side = |w: &Expr, curvature: Expr| {
            let d1 = w.differentiate(Var::X);
            let d2 = d1.differentiate(Var::X);
            let lin = Expr::add(Expr::mul(curvature, d2), Expr::mul(Expr::neg(s.clone()), w.differentiate(Var::T)));
            Expr::add(Expr::powi(d1, 2), lin)
        };
        (side(w0, Expr::neg(s.clone())), side(w1, s.clone()))
    }

    /// `P_next = e^{-W_next} (d/dx -+ W_prev') (e^{W_prev} P_prev)`, minus
    /// for A and plus for B.
    pub fn map_solution(self, w_prev: &Expr, w_next: &Expr, p_prev: &Expr) -> Expr {
        let psi = Expr::mul(Expr::exp(w_prev.clone()), p_prev.clone());
        let drift = Expr::mul(Expr::int(self.sign()), w_prev.differentiate(Var::X));
        let psi1 = Expr::sub(psi.differentiate(Var::X), Expr::mul(drift, psi));
        Expr::mul(Expr::exp(Expr::neg(w_next.clone())), psi1)
    }
}

/// Samples the Riccati defect `lhs - rhs`.
pub fn verify_riccati(
    case: Case,
    w0: &Expr,
    w1: &Expr,
    bindings: &Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<ResidualReport, DarbouxError> {
    let (lhs, rhs) = case.riccati_sides(w0, w1);
    sample_report(&Expr::sub(lhs, rhs), bindings, grid, tol)
}

/// Residual of the case's auxiliary function `psi0` under the Schrödinger
/// form of `W0` with the case's reaction, divided by `psi0` so that the
/// check does not depend on the magnitude of `e^{+-W0}`.
pub fn verify_auxiliary(
    case: Case,
    w0: &Expr,
    bindings: &Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<ResidualReport, DarbouxError> {
    let v = to_schrodinger(w0, &case.reaction(w0));
    let psi0 = case.auxiliary(w0);
    sample_report(&Expr::div(v.residual(&psi0), psi0), bindings, grid, tol)
}

/// A verified Case A or B partner pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Partner {
    pub case: Case,
    pub w0: Expr,
    pub w1: Expr,
    pub original: CdrEquation,
    pub partner: CdrEquation,
    pub riccati: ResidualReport,
}

impl Partner {
    /// Builds the partner of the case equation of `w0` with prepotential
    /// `w1`, after checking the Riccati equation and the auxiliary solution
    /// on `grid` within `tol`.
    pub fn new(
        case: Case,
        w0: &Expr,
        w1: &Expr,
        bindings: &Bindings,
        domain: Domain,
        grid: &SampleGrid,
        tol: f64,
    ) -> Result<Self, DarbouxError> {
        let riccati = verify_riccati(case, w0, w1, bindings, grid, tol)?;
        if !riccati.pass {
            return Err(DarbouxError::RiccatiViolation { max_abs: riccati.max_abs, tol });
        }
        check_nonvanishing(&case.auxiliary(w0), bindings, grid)?;
        let aux = verify_auxiliary(case, w0, bindings, grid, tol)?;
        if !aux.pass {
            return Err(DarbouxError::AuxiliaryNotSolution { max_abs: aux.max_abs, tol });
        }
        let build = |w: &Expr| case.equation(w).with_bindings(bindings).with_domain(domain);
        Ok(Partner { case, w0: w0.clone(), w1: w1.clone(), original: build(w0), partner: build(w1), riccati })
    }

    /// Maps a solution of the original equation to one of the partner.
    pub fn map_solution(&self, p0: &Expr) -> Expr {
        self.case.map_solution(&self.w0, &self.w1, p0)
    }
}

/// One level `k` of a hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyLevel {
    pub k: usize,
    /// Family index whose parameter appears in `w`.
    pub index: i64,
    pub w: Expr,
    pub equation: CdrEquation,
}

/// Shape-invariant hierarchy `W_0 .. W_K` starting from family index `n`.
///
/// Case A steps down (`a_{n-k}`, shifts `R(a_s)` for `s = n-k .. n-1`), Case
/// B steps up (`a_{n+k}`, shifts for `s = n .. n+k-1`). Each step is gated on
/// shape invariance, the time-derivative condition and the Riccati equation
/// between consecutive levels, all at `tol` on `grid`.
pub fn hierarchy(
    case: Case,
    fam: &PrepotentialFamily,
    n: i64,
    depth: usize,
    bindings: &Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<Vec<HierarchyLevel>, DarbouxError> {
    fam.check_index(n)?;
    let step = -case.sign();
    let last = n + step * depth as i64;
    fam.check_index(last)?;

    let level = |k: usize, w: Expr| {
        let index = n + step * k as i64;
        let equation = case.equation(&w).with_bindings(bindings).with_domain(fam.domain);
        HierarchyLevel { k, index, w, equation }
    };
    let mut levels = vec![level(0, fam.at(n))];
    let mut shift_sum = Expr::zero();
    for k in 1..=depth {
        let prev = n + step * (k as i64 - 1);
        let index = n + step * k as i64;
        // shape invariance links a_s and a_{s+1}; the shift used is R(a_s)
        let s = prev.min(index);
        let si = fam.verify_shape_invariance(s, bindings, grid, tol)?;
        if !si.pass {
            return Err(DarbouxError::ShapeInvarianceViolation { index: s, max_abs: si.max_abs, tol });
        }
        let dt = fam.verify_time_derivative(index, prev, bindings, grid, tol)?;
        if !dt.pass {
            return Err(DarbouxError::TimeDerivativeMismatch { a: index, b: prev, max_abs: dt.max_abs });
        }
        let shift = fam.shift(s);
        if shift.depends_on(Var::X) {
            return Err(DarbouxError::NonIntegrableShift(print(&shift)));
        }
        shift_sum = Expr::add(shift_sum, shift.clone());
        let integral = integrate_time(&shift_sum).ok_or_else(|| DarbouxError::NonIntegrableShift(print(&shift)))?;
        let w = Expr::add(fam.at(index), integral);

        let prev_w = &levels[k - 1].w;
        let riccati = verify_riccati(case, prev_w, &w, bindings, grid, tol)?;
        if !riccati.pass {
            return Err(DarbouxError::RiccatiViolation { max_abs: riccati.max_abs, tol });
        }
        levels.push(level(k, w));
    }
    Ok(levels)
}

/// Solutions along a hierarchy: `P_0 = p0` and each next one by
/// [`Case::map_solution`].
pub fn hierarchy_solutions(case: Case, levels: &[HierarchyLevel], p0: &Expr) -> Vec<Expr> {
    let mut out = vec![p0.clone()];
    for pair in levels.windows(2) {
        let next = case.map_solution(&pair[0].w, &pair[1].w, out.last().unwrap());
        out.push(next);
    }
    out
}
