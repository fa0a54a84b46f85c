//! Convection–diffusion–reaction equations
//!
//! ```text
//! P_t = -(C P)_x + (D P_x)_x + r P
//! ```
//!
//! together with the prepotential gauge map to Schrödinger form and the
//! residual operators every construction in the crate is checked against.

mod grid;
mod residual;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Bindings, EvalError, Expr, Var};
use crate::syntax::{check_parameter_name, parse, print, ParseError};

pub use grid::{Axis, GridDescription, ResidualReport, SampleGrid};
pub use residual::{gauge_identity_check, gauge_identity_report, Stencil};

/// Default tolerance for residuals built from exact symbolic derivatives.
pub const SYMBOLIC_TOL: f64 = 1e-10;
/// Default tolerance for finite-difference residuals at `h = tau = 1e-3`.
pub const NUMERIC_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CdrError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("grid axis `{axis}` has {points} points; central stencils need at least 5")]
    GridTooSmall { axis: &'static str, points: usize },
    #[error("sample window t in [{grid_min}, {grid_max}] is outside the validity interval [{t_min}, {t_max}]")]
    OutsideValidity { grid_min: f64, grid_max: f64, t_min: f64, t_max: f64 },
    #[error("invalid equation spec: {0}")]
    InvalidSpec(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    #[default]
    RealLine,
    /// `x` in `[0, inf)`.
    HalfLine,
}

/// Closed time window on which an equation's coefficients are trusted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validity {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for Validity {
    fn default() -> Self {
        Validity { t_min: 0.0, t_max: f64::INFINITY }
    }
}

impl Validity {
    pub fn contains_window(&self, lo: f64, hi: f64) -> bool {
        self.t_min <= lo && hi <= self.t_max
    }
}

/// A linear CDR equation: convection `C`, diffusion `D` and reaction
/// coefficient `r`, each an expression in `x`, `t` and bound parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct CdrEquation {
    pub convection: Expr,
    pub diffusion: Expr,
    pub reaction: Expr,
    pub domain: Domain,
    pub validity: Validity,
    pub parameters: Bindings,
}

impl CdrEquation {
    pub fn new(convection: Expr, diffusion: Expr, reaction: Expr) -> Self {
        CdrEquation {
            convection,
            diffusion,
            reaction,
            domain: Domain::RealLine,
            validity: Validity::default(),
            parameters: Bindings::new(),
        }
    }

    /// `D = 1`.
    pub fn unit_diffusion(convection: Expr, reaction: Expr) -> Self {
        CdrEquation::new(convection, Expr::one(), reaction)
    }

    /// `P_t = P_xx`.
    pub fn heat() -> Self {
        CdrEquation::unit_diffusion(Expr::zero(), Expr::zero())
    }

    /// `C = -2 W'`, `D = 1`, reaction `r`.
    pub fn from_prepotential(w: &Expr, reaction: Expr) -> Self {
        CdrEquation::unit_diffusion(convection_from_prepotential(w), reaction)
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_validity(mut self, t_min: f64, t_max: f64) -> Self {
        self.validity = Validity { t_min, t_max };
        self
    }

    pub fn with_parameters<'a>(mut self, params: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        for (k, v) in params {
            self.parameters.insert(k.to_string(), v);
        }
        self
    }

    pub fn with_bindings(mut self, bindings: &Bindings) -> Self {
        self.parameters.extend(bindings.iter().map(|(k, v)| (k.clone(), *v)));
        self
    }

    /// `P_t + (C P)_x - (D P_x)_x - r P`.
    ///
    /// The diffusion term is differentiated as written, not expanded.
    pub fn residual(&self, p: &Expr) -> Expr {
        let pt = p.differentiate(Var::T);
        let flux = Expr::mul(self.convection.clone(), p.clone()).differentiate(Var::X);
        let diffusive = Expr::mul(self.diffusion.clone(), p.differentiate(Var::X)).differentiate(Var::X);
        let reactive = Expr::mul(self.reaction.clone(), p.clone());
        Expr::sub(Expr::sub(Expr::add(pt, flux), diffusive), reactive)
    }

    /// Default verification grid for this domain, with the time window
    /// clipped to the validity interval.
    pub fn default_grid(&self) -> SampleGrid {
        let mut g = SampleGrid::default_for(self.domain);
        let lo = g.t.min.max(self.validity.t_min);
        let hi = g.t.max.min(self.validity.t_max);
        if lo < hi {
            g.t.min = lo;
            g.t.max = hi;
        } else if self.validity.t_max.is_finite() {
            g.t.min = self.validity.t_min;
            g.t.max = self.validity.t_max;
        }
        g
    }

    fn check_window(&self, grid: &SampleGrid) -> Result<(), CdrError> {
        if self.validity.contains_window(grid.t.min, grid.t.max) {
            Ok(())
        } else {
            Err(CdrError::OutsideValidity {
                grid_min: grid.t.min,
                grid_max: grid.t.max,
                t_min: self.validity.t_min,
                t_max: self.validity.t_max,
            })
        }
    }

    /// Samples the symbolic residual of `p` on `grid`.
    pub fn verify_symbolic(&self, p: &Expr, grid: &SampleGrid, tol: f64) -> Result<ResidualReport, CdrError> {
        self.check_window(grid)?;
        let values = grid.sample(&self.residual(p), &self.parameters)?;
        Ok(ResidualReport::new(*grid, values, tol))
    }

    /// [`Self::verify_symbolic`] on the default grid.
    pub fn verify(&self, p: &Expr, tol: f64) -> Result<ResidualReport, CdrError> {
        self.verify_symbolic(p, &self.default_grid(), tol)
    }

    pub fn to_spec(&self) -> EquationSpec {
        EquationSpec {
            convection: print(&self.convection),
            diffusion: print(&self.diffusion),
            reaction: print(&self.reaction),
            domain: self.domain,
            t_min: Some(self.validity.t_min),
            t_max: self.validity.t_max.is_finite().then_some(self.validity.t_max),
            parameters: self.parameters.clone(),
        }
    }

    pub fn from_spec(spec: &EquationSpec) -> Result<Self, CdrError> {
        for name in spec.parameters.keys() {
            check_parameter_name(name)?;
        }
        let field = |label: &str, src: &str| -> Result<Expr, CdrError> {
            let e = parse(src)?;
            if e.depends_on(Var::Z) {
                return Err(CdrError::InvalidSpec(format!("{label} must not use the similarity variable z")));
            }
            if let Some(p) = e.parameters().into_iter().find(|p| !spec.parameters.contains_key(p)) {
                return Err(CdrError::InvalidSpec(format!("{label} uses unbound parameter `{p}`")));
            }
            Ok(e)
        };
        let t_min = spec.t_min.unwrap_or(0.0);
        let t_max = spec.t_max.unwrap_or(f64::INFINITY);
        if t_min.is_nan() || t_max.is_nan() || t_min >= t_max {
            return Err(CdrError::InvalidSpec(format!("empty validity interval [{t_min}, {t_max}]")));
        }
        Ok(CdrEquation {
            convection: field("convection", &spec.convection)?,
            diffusion: field("diffusion", &spec.diffusion)?,
            reaction: field("reaction", &spec.reaction)?,
            domain: spec.domain,
            validity: Validity { t_min, t_max },
            parameters: spec.parameters.clone(),
        })
    }
}

fn default_diffusion() -> String {
    "1".to_string()
}

fn default_reaction() -> String {
    "0".to_string()
}

/// On-disk form of a [`CdrEquation`]; expression fields use the parser's
/// mini-language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub convection: String,
    #[serde(default = "default_diffusion")]
    pub diffusion: String,
    #[serde(default = "default_reaction")]
    pub reaction: String,
    #[serde(default)]
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

/// `-Psi_t = -Psi'' + V Psi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchrodingerForm {
    pub potential: Expr,
}

impl SchrodingerForm {
    pub fn new(potential: Expr) -> Self {
        SchrodingerForm { potential }
    }

    /// `Psi_t - Psi'' + V Psi`.
    pub fn residual(&self, psi: &Expr) -> Expr {
        let lhs = Expr::sub(psi.differentiate(Var::T), psi.nth_derivative(Var::X, 2));
        Expr::add(lhs, Expr::mul(self.potential.clone(), psi.clone()))
    }
}

/// A prepotential together with a reaction coefficient; determines a
/// unit-diffusion CDR equation through `C = -2 W'`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeData {
    pub prepotential: Expr,
    pub reaction: Expr,
}

impl GaugeData {
    pub fn new(prepotential: Expr, reaction: Expr) -> Self {
        GaugeData { prepotential, reaction }
    }

    pub fn equation(&self) -> CdrEquation {
        CdrEquation::from_prepotential(&self.prepotential, self.reaction.clone())
    }

    pub fn schrodinger(&self) -> SchrodingerForm {
        to_schrodinger(&self.prepotential, &self.reaction)
    }

    /// Whether `-2 W'` reproduces the convection of `eq` on `grid`.
    pub fn matches_convection(&self, eq: &CdrEquation, grid: &SampleGrid, tol: f64) -> Result<bool, CdrError> {
        let diff = Expr::sub(eq.convection.clone(), convection_from_prepotential(&self.prepotential));
        let values = grid.sample(&diff, &eq.parameters)?;
        Ok(values.iter().all(|v| v.abs() <= tol))
    }
}

/// `C = -2 W'`.
pub fn convection_from_prepotential(w: &Expr) -> Expr {
    Expr::mul(Expr::int(-2), w.differentiate(Var::X)).simplify()
}

/// `V = W'^2 - W'' - W_t - r`.
pub fn to_schrodinger(w: &Expr, reaction: &Expr) -> SchrodingerForm {
    let w1 = w.differentiate(Var::X);
    let w2 = w1.differentiate(Var::X);
    let v = Expr::sub(Expr::powi(w1, 2), w2);
    let v = Expr::sub(Expr::sub(v, w.differentiate(Var::T)), reaction.clone());
    SchrodingerForm::new(v.simplify())
}

/// `P = e^{-W} Psi`.
pub fn solution_from_psi(w: &Expr, psi: &Expr) -> Expr {
    Expr::Multiply(Expr::exp(Expr::neg(w.clone())).into(), psi.clone().into())
}

/// Inverse of [`solution_from_psi`]: `Psi = e^{W} P`.
pub fn psi_from_solution(w: &Expr, p: &Expr) -> Expr {
    Expr::mul(Expr::exp(w.clone()), p.clone())
}
