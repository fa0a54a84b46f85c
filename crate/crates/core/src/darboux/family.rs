use std::fmt;
use std::sync::Arc;

use crate::cdr::{Domain, ResidualReport, SampleGrid};
use crate::expr::{Bindings, Expr, Var};

use super::{sample_report, DarbouxError};

/// Admissible indices of a family; `None` means unbounded on that side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IndexRange {
    pub min: Option<i64>,
    pub max: Option<i64>,
}

impl IndexRange {
    pub fn unbounded() -> Self {
        IndexRange { min: None, max: None }
    }

    pub fn at_least(min: i64) -> Self {
        IndexRange { min: Some(min), max: None }
    }

    pub fn contains(&self, n: i64) -> bool {
        self.min.is_none_or(|m| n >= m) && self.max.is_none_or(|m| n <= m)
    }
}

impl fmt::Display for IndexRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.min {
            Some(m) => write!(f, "[{m}, ")?,
            None => write!(f, "(-inf, ")?,
        }
        match self.max {
            Some(m) => write!(f, "{m}]"),
            None => write!(f, "inf)"),
        }
    }
}

type IndexFn = Arc<dyn Fn(i64) -> Expr + Send + Sync>;

/// An indexed family of prepotentials `W(x, t; a_n)`.
///
/// `template` contains the parameter named `slot`; `sequence(n)` gives
/// `a_n(t)` and `shift(n)` gives the `x`-independent `R(a_n(t))`.
#[derive(Clone)]
pub struct PrepotentialFamily {
    pub name: String,
    pub template: Expr,
    pub slot: String,
    sequence: IndexFn,
    shift: IndexFn,
    pub index_range: IndexRange,
    pub domain: Domain,
}

impl fmt::Debug for PrepotentialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrepotentialFamily")
            .field("name", &self.name)
            .field("template", &self.template)
            .field("slot", &self.slot)
            .field("index_range", &self.index_range)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl PrepotentialFamily {
    pub fn new(
        name: impl Into<String>,
        template: Expr,
        slot: impl Into<String>,
        sequence: impl Fn(i64) -> Expr + Send + Sync + 'static,
        shift: impl Fn(i64) -> Expr + Send + Sync + 'static,
        index_range: IndexRange,
    ) -> Self {
        PrepotentialFamily {
            name: name.into(),
            template,
            slot: slot.into(),
            sequence: Arc::new(sequence),
            shift: Arc::new(shift),
            index_range,
            domain: Domain::RealLine,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// `W = a x^2 / 4` with `a_n = gamma(t) = -1/(t + C)` at every index and
    /// `R = gamma`.
    pub fn oscillator() -> Self {
        let gamma = || Expr::div(Expr::int(-1), Expr::add(Expr::t(), Expr::param("C")));
        let template = Expr::div(Expr::mul(Expr::param("a"), Expr::powi(Expr::x(), 2)), Expr::int(4));
        PrepotentialFamily::new(
            "oscillator",
            template,
            "a",
            move |_| gamma(),
            move |_| gamma(),
            IndexRange::unbounded(),
        )
    }

    /// Time-independent harmonic oscillator `W = a x^2 / 4` with `a = 1` at
    /// every index and `R = 1`.
    pub fn harmonic() -> Self {
        let template = Expr::div(Expr::mul(Expr::param("a"), Expr::powi(Expr::x(), 2)), Expr::int(4));
        PrepotentialFamily::new("harmonic", template, "a", |_| Expr::one(), |_| Expr::one(), IndexRange::unbounded())
    }

    /// Radial (three-dimensional) oscillator on the half line,
    /// `W = x^2/4 - (l + 1) ln x` with `l = n >= 0` and `R = 2`.
    pub fn radial() -> Self {
        let template = Expr::sub(
            Expr::div(Expr::powi(Expr::x(), 2), Expr::int(4)),
            Expr::mul(Expr::add(Expr::param("l"), Expr::one()), Expr::ln(Expr::x())),
        );
        PrepotentialFamily::new("radial", template, "l", Expr::int, |_| Expr::int(2), IndexRange::at_least(0))
            .with_domain(Domain::HalfLine)
    }

    pub fn parameter(&self, n: i64) -> Expr {
        (self.sequence)(n)
    }

    pub fn shift(&self, n: i64) -> Expr {
        (self.shift)(n)
    }

    pub fn check_index(&self, n: i64) -> Result<(), DarbouxError> {
        if self.index_range.contains(n) {
            Ok(())
        } else {
            Err(DarbouxError::IndexOutOfRange { index: n, range: self.index_range })
        }
    }

    /// `W(x, t; a_n)`.
    pub fn at(&self, n: i64) -> Expr {
        self.template.substitute_parameter(&self.slot, &self.parameter(n))
    }

    /// `W'(a_n)^2 + W''(a_n) - W'(a_{n+1})^2 + W''(a_{n+1}) - R(a_n)`.
    pub fn shape_invariance_defect(&self, n: i64) -> Expr {
        let (w, v) = (self.at(n), self.at(n + 1));
        let (w1, v1) = (w.differentiate(Var::X), v.differentiate(Var::X));
        let lhs = Expr::add(Expr::powi(w1.clone(), 2), w1.differentiate(Var::X));
        let rhs = Expr::sub(Expr::powi(v1.clone(), 2), v1.differentiate(Var::X));
        Expr::sub(Expr::sub(lhs, rhs), self.shift(n))
    }

    /// `W_t(a_m) - W_t(a_n)`.
    pub fn time_derivative_defect(&self, m: i64, n: i64) -> Expr {
        Expr::sub(self.at(m).differentiate(Var::T), self.at(n).differentiate(Var::T))
    }
}

/// Samples the shape-invariance defect between indices `n` and `n + 1`.
pub fn verify_shape_invariance(
    fam: &PrepotentialFamily,
    n: i64,
    bindings: &Bindings,
    grid: &SampleGrid,
    tol: f64,
) -> Result<ResidualReport, DarbouxError> {
    fam.check_index(n)?;
    fam.check_index(n + 1)?;
    sample_report(&fam.shape_invariance_defect(n), bindings, grid, tol)
}

impl PrepotentialFamily {
    /// See [`verify_shape_invariance`].
    pub fn verify_shape_invariance(
        &self,
        n: i64,
        bindings: &Bindings,
        grid: &SampleGrid,
        tol: f64,
    ) -> Result<ResidualReport, DarbouxError> {
        verify_shape_invariance(self, n, bindings, grid, tol)
    }

    /// Samples `W_t(a_m) - W_t(a_n)`.
    pub fn verify_time_derivative(
        &self,
        m: i64,
        n: i64,
        bindings: &Bindings,
        grid: &SampleGrid,
        tol: f64,
    ) -> Result<ResidualReport, DarbouxError> {
        sample_report(&self.time_derivative_defect(m, n), bindings, grid, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn c1() -> Bindings {
        [("C".to_string(), 1.0)].into_iter().collect()
    }

    #[test]
    fn oscillator_is_shape_invariant() {
        let fam = PrepotentialFamily::oscillator();
        let g = SampleGrid::default_for(Domain::RealLine);
        let r = fam.verify_shape_invariance(0, &c1(), &g, 1e-12).unwrap();
        assert!(r.pass, "{}", r.max_abs);
        assert!(fam.verify_time_derivative(-1, 0, &c1(), &g, 0.0).unwrap().pass);
    }

    #[test]
    fn constant_coefficient_family() {
        // W = a x^2/4 with a_{n+1} = a_n and R = a
        let fam = PrepotentialFamily::new(
            "scaled",
            parse("a*x^2/4").unwrap(),
            "a",
            |_| Expr::param("b"),
            |_| Expr::param("b"),
            IndexRange::unbounded(),
        );
        let b: Bindings = [("b".to_string(), 0.8)].into_iter().collect();
        let g = SampleGrid::default_for(Domain::RealLine);
        assert!(fam.verify_shape_invariance(3, &b, &g, 1e-12).unwrap().pass);
    }

    #[test]
    fn radial_family() {
        let fam = PrepotentialFamily::radial();
        let g = SampleGrid::default_for(Domain::HalfLine);
        for n in 0..4 {
            assert!(fam.verify_shape_invariance(n, &Bindings::new(), &g, 1e-10).unwrap().pass);
        }
        assert!(matches!(
            fam.verify_shape_invariance(-1, &Bindings::new(), &g, 1e-10),
            Err(DarbouxError::IndexOutOfRange { index: -1, .. })
        ));
    }

    #[test]
    fn quartic_is_rejected() {
        let fam = PrepotentialFamily::new(
            "quartic",
            parse("x^4 + 0*a").unwrap(),
            "a",
            |_| Expr::zero(),
            |_| Expr::one(),
            IndexRange::unbounded(),
        );
        let g = SampleGrid::default_for(Domain::RealLine);
        let r = fam.verify_shape_invariance(0, &Bindings::new(), &g, 1e-10).unwrap();
        assert!(!r.pass);
        assert!(r.max_abs >= 1e-2);
    }

    #[test]
    fn range_display() {
        assert_eq!(IndexRange::at_least(0).to_string(), "[0, inf)");
        assert_eq!(IndexRange::unbounded().to_string(), "(-inf, inf)");
    }
}
