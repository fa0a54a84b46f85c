use crate::expr::{CompiledExpr, EvalError, Expr};

use super::{solution_from_psi, to_schrodinger, Axis, CdrEquation, CdrError, ResidualReport, SampleGrid};

/// Finite-difference offsets for [`CdrEquation::residual_numeric`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    pub h: f64,
    pub tau: f64,
}

impl Default for Stencil {
    fn default() -> Self {
        Stencil { h: 1e-3, tau: 1e-3 }
    }
}

impl CdrEquation {
    /// Second-order central-difference residual of a black-box candidate.
    ///
    /// Evaluated on the interior nodes of `grid`; the stencil offsets are
    /// independent of the grid spacing. The report describes the interior
    /// grid.
    pub fn residual_numeric(
        &self,
        p: &dyn Fn(f64, f64) -> Result<f64, EvalError>,
        grid: &SampleGrid,
        stencil: Stencil,
        tol: f64,
    ) -> Result<ResidualReport, CdrError> {
        for (axis, a) in [("x", &grid.x), ("t", &grid.t)] {
            if a.points < 5 {
                return Err(CdrError::GridTooSmall { axis, points: a.points });
            }
        }
        let interior = |a: &Axis| Axis::new(a.node(1), a.node(a.points - 2), a.points - 2);
        let inner = SampleGrid::new(interior(&grid.x), interior(&grid.t));
        self.check_window(&inner)?;

        let c = CompiledExpr::new(&self.convection, &self.parameters)?;
        let d = CompiledExpr::new(&self.diffusion, &self.parameters)?;
        let r = CompiledExpr::new(&self.reaction, &self.parameters)?;
        let Stencil { h, tau } = stencil;

        let mut values = Vec::with_capacity(inner.len());
        for (x, t) in inner.points() {
            let p0 = p(x, t)?;
            let pe = p(x + h, t)?;
            let pw = p(x - h, t)?;
            let pt = (p(x, t + tau)? - p(x, t - tau)?) / (2.0 * tau);
            let flux = (c.eval(x + h, t)? * pe - c.eval(x - h, t)? * pw) / (2.0 * h);
            let diffusive = (d.eval(x + 0.5 * h, t)? * (pe - p0) - d.eval(x - 0.5 * h, t)? * (p0 - pw)) / (h * h);
            values.push(pt + flux - diffusive - r.eval(x, t)? * p0);
        }
        Ok(ResidualReport::new(inner, values, tol))
    }

    /// [`Self::residual_numeric`] with a symbolic candidate treated as a
    /// black box.
    pub fn residual_numeric_expr(
        &self,
        p: &Expr,
        grid: &SampleGrid,
        stencil: Stencil,
        tol: f64,
    ) -> Result<ResidualReport, CdrError> {
        let compiled = CompiledExpr::new(p, &self.parameters)?;
        self.residual_numeric(&|x, t| compiled.eval(x, t), grid, stencil, tol)
    }
}

/// Samples `RES_CDR(e^{-W} Psi) - e^{-W} RES_SCH(Psi)` where the CDR equation
/// is `C = -2W'`, `D = 1`, reaction `r` and `RES_SCH` uses the potential from
/// [`to_schrodinger`]. The difference vanishes for every `Psi`, solution or
/// not.
pub fn gauge_identity_report(
    w: &Expr,
    r: &Expr,
    psi: &Expr,
    bindings: &crate::expr::Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<ResidualReport, CdrError> {
    let eq = CdrEquation::from_prepotential(w, r.clone());
    let cdr = eq.residual(&solution_from_psi(w, psi));
    let sch = to_schrodinger(w, r).residual(psi);
    let diff = Expr::sub(cdr, Expr::mul(Expr::exp(Expr::neg(w.clone())), sch));
    let values = grid.sample(&diff, bindings)?;
    Ok(ResidualReport::new(*grid, values, tol))
}

/// Boolean form of [`gauge_identity_report`].
pub fn gauge_identity_check(
    w: &Expr,
    r: &Expr,
    psi: &Expr,
    bindings: &crate::expr::Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<bool, CdrError> {
    Ok(gauge_identity_report(w, r, psi, bindings, grid, tol)?.pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdr::{Domain, NUMERIC_TOL};
    use crate::expr::{Bindings, Var};
    use crate::syntax::parse;

    fn bindings(pairs: &[(&str, f64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn stencil_converges_at_second_order() {
        let heat = CdrEquation::heat();
        let kernel = parse("exp(-x^2/(4*t))/sqrt(4*pi*t)").unwrap();
        let grid = SampleGrid::default_for(Domain::RealLine).with_points(41, 16);
        let coarse = heat.residual_numeric_expr(&kernel, &grid, Stencil { h: 0.02, tau: 0.02 }, 1.0).unwrap();
        let fine = heat.residual_numeric_expr(&kernel, &grid, Stencil { h: 0.01, tau: 0.01 }, 1.0).unwrap();
        let ratio = coarse.max_abs / fine.max_abs;
        assert!((3.6..4.4).contains(&ratio), "{ratio}");
        let default = heat.residual_numeric_expr(&kernel, &grid, Stencil::default(), NUMERIC_TOL).unwrap();
        assert!(default.pass, "{}", default.max_abs);
    }

    #[test]
    fn zero_candidate_has_zero_residual() {
        let eq = CdrEquation::unit_diffusion(parse("x/(t+1)").unwrap(), parse("1/(t+1)").unwrap());
        let grid = SampleGrid::default_for(Domain::RealLine);
        let r = eq.residual_numeric(&|_, _| Ok(0.0), &grid, Stencil::default(), 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.values.len(), 79 * 29);
    }

    #[test]
    fn small_grid_rejected() {
        let grid = SampleGrid::default_for(Domain::RealLine).with_points(4, 31);
        let err = CdrEquation::heat().residual_numeric(&|_, _| Ok(1.0), &grid, Stencil::default(), 1.0).unwrap_err();
        assert!(matches!(err, CdrError::GridTooSmall { axis: "x", points: 4 }));
    }

    #[test]
    fn gauge_identity_examples() {
        let grid = SampleGrid::default_for(Domain::RealLine).with_points(41, 21);
        let heat_psi = parse("x^3 + t*x").unwrap();
        assert!(gauge_identity_check(&Expr::zero(), &Expr::zero(), &heat_psi, &Bindings::new(), &grid, 1e-12).unwrap());

        let w = parse("-(1/(t+C))*x^2/4").unwrap();
        let r = Expr::mul(Expr::int(-2), w.nth_derivative(Var::X, 2));
        let psi = parse("x + t").unwrap();
        let b = bindings(&[("C", 1.0)]);
        assert!(gauge_identity_check(&w, &r, &psi, &b, &grid, 1e-8).unwrap());
        // psi is not a solution, so the identity is not vacuous here
        let eq = CdrEquation::from_prepotential(&w, r).with_bindings(&b);
        assert!(eq.verify(&solution_from_psi(&w, &psi), 1e-3).unwrap().max_abs > 1e-2);
    }
}
