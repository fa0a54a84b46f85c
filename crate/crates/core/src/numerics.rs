//! Finite-difference integration of CDR equations, used as an independent
//! check on closed-form solutions.
//!
//! The spatial operator is written in flux form,
//!
//! ```text
//! L(P)_i = (F_{i+1/2} - F_{i-1/2}) / h + r_i P_i,
//! F_{i+1/2} = -(C P)_{i+1/2} + D_{i+1/2} (P_{i+1} - P_i) / h
//! ```
//!
//! with `(C P)_{i+1/2}` the average of the two nodes (central) or the
//! upstream node (upwind). Zero-flux boundaries close the outer faces, so
//! the trapezoidal integral of `P` changes only through the reaction term.

use std::cmp::Ordering;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdr::CdrEquation;
use crate::expr::{Bindings, CompiledExpr, EvalError, Expr, Var};

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("explicit step dt = {dt:e} exceeds the stability limit {limit:e}")]
    StabilityViolation { dt: f64, limit: f64 },
    #[error("field became non-finite at t = {t}")]
    NonFiniteField { t: f64 },
    #[error("Dirichlet boundary requires a reference solution")]
    MissingReference,
    #[error("fields live on different grids or times")]
    GridMismatch,
    #[error("tridiagonal system is not diagonally dominant at row {row}")]
    NotDiagonallyDominant { row: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Uniform grid on `[x_min, x_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self, NumericsError> {
        if n_points < 5 {
            return Err(NumericsError::InvalidConfig(format!("grid needs at least 5 points, got {n_points}")));
        }
        if x_max.partial_cmp(&x_min) != Some(Ordering::Greater) {
            return Err(NumericsError::InvalidConfig(format!("empty interval [{x_min}, {x_max}]")));
        }
        Ok(Grid1D { x_min, x_max, n_points })
    }

    /// Grid with spacing `h` (rounded to the nearest whole number of cells).
    pub fn with_spacing(x_min: f64, x_max: f64, h: f64) -> Result<Self, NumericsError> {
        let cells = ((x_max - x_min) / h).round() as usize;
        Grid1D::new(x_min, x_max, cells + 1)
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.x(i))
    }
}

/// Values on a grid at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid1D,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, t: f64, values: Vec<f64>) -> Result<Self, NumericsError> {
        if values.len() != grid.n_points {
            return Err(NumericsError::GridMismatch);
        }
        Ok(Field { grid, t, values })
    }

    pub fn sample(e: &Expr, bindings: &Bindings, grid: Grid1D, t: f64) -> Result<Self, NumericsError> {
        let c = CompiledExpr::new(e, bindings)?;
        let mut buf = Vec::new();
        let values = grid.nodes().map(|x| c.run(&mut buf, x, t, None)).collect::<Result<_, _>>()?;
        Ok(Field { grid, t, values })
    }

    /// Trapezoidal integral.
    pub fn integral(&self) -> f64 {
        let n = self.values.len();
        let inner: f64 = self.values[1..n - 1].iter().sum();
        self.grid.h() * (inner + 0.5 * (self.values[0] + self.values[n - 1]))
    }

    /// `x,t,value` rows in ascending `x`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,t,value")?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(out, "{x},{},{v}", self.t)?;
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    CrankNicolson,
    ExplicitRk4,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    DirichletFromReference,
    ZeroFlux,
}

/// Discretization of the convective flux.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convection {
    #[default]
    Central,
    /// First-order upwind; a diagnostic for convergence tests.
    Upwind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
    pub convection: Convection,
    pub t_start: f64,
    pub t_end: f64,
}

impl IntegratorConfig {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Self {
        IntegratorConfig {
            dt,
            scheme: Scheme::default(),
            boundary: Boundary::default(),
            convection: Convection::default(),
            t_start,
            t_end,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_convection(mut self, convection: Convection) -> Self {
        self.convection = convection;
        self
    }

    /// Number of steps; `dt` is shrunk slightly if it does not divide the
    /// interval.
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    fn validate(&self, grid: &Grid1D) -> Result<(), NumericsError> {
        if self.dt.partial_cmp(&0.0) != Some(Ordering::Greater) {
            return Err(NumericsError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_end.partial_cmp(&self.t_start) != Some(Ordering::Greater) {
            return Err(NumericsError::InvalidConfig(format!(
                "t_end {} must exceed t_start {}",
                self.t_end, self.t_start
            )));
        }
        if self.scheme == Scheme::ExplicitRk4 {
            let h = grid.h();
            let limit = 0.4 * h * h;
            if self.dt > limit {
                return Err(NumericsError::StabilityViolation { dt: self.dt, limit });
            }
        }
        Ok(())
    }
}

/// Compiled coefficients and the tridiagonal form of `L` at one time.
struct Operator {
    c: CompiledExpr,
    d: CompiledExpr,
    r: CompiledExpr,
    convection: Convection,
    boundary: Boundary,
    grid: Grid1D,
    buf: Vec<f64>,
}

/// Row `i` of `L`: `lower * P_{i-1} + diag * P_i + upper * P_{i+1}`.
#[derive(Clone, Copy, Default)]
struct Row {
    lower: f64,
    diag: f64,
    upper: f64,
}

impl Operator {
    fn new(eq: &CdrEquation, grid: Grid1D, convection: Convection, boundary: Boundary) -> Result<Self, EvalError> {
        Ok(Operator {
            c: CompiledExpr::new(&eq.convection, &eq.parameters)?,
            d: CompiledExpr::new(&eq.diffusion, &eq.parameters)?,
            r: CompiledExpr::new(&eq.reaction, &eq.parameters)?,
            convection,
            boundary,
            grid,
            buf: Vec::new(),
        })
    }

    /// Coefficients of `F_{i+1/2} = left * P_i + right * P_{i+1}` for each
    /// interior face.
    fn faces(&mut self, t: f64) -> Result<Vec<(f64, f64)>, EvalError> {
        let g = self.grid;
        let h = g.h();
        let n = g.n_points;
        let cs: Vec<f64> = g.nodes().map(|x| self.c.run(&mut self.buf, x, t, None)).collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let xm = 0.5 * (g.x(i) + g.x(i + 1));
            let dm = self.d.run(&mut self.buf, xm, t, None)?;
            let (cl, cr) = match self.convection {
                Convection::Central => (0.5 * cs[i], 0.5 * cs[i + 1]),
                Convection::Upwind => {
                    if cs[i] + cs[i + 1] >= 0.0 {
                        (cs[i], 0.0)
                    } else {
                        (0.0, cs[i + 1])
                    }
                }
            };
            out.push((-cl - dm / h, -cr + dm / h));
        }
        Ok(out)
    }

    fn rows(&mut self, t: f64) -> Result<Vec<Row>, EvalError> {
        let g = self.grid;
        let n = g.n_points;
        let h = g.h();
        let faces = self.faces(t)?;
        let mut rows = vec![Row::default(); n];
        for (i, row) in rows.iter_mut().enumerate().take(n - 1).skip(1) {
            let (el, er) = faces[i];
            let (wl, wr) = faces[i - 1];
            row.lower = -wl / h;
            row.diag = (el - wr) / h + self.r.run(&mut self.buf, g.x(i), t, None)?;
            row.upper = er / h;
        }
        if self.boundary == Boundary::ZeroFlux {
            // half cells at the ends
            let (el, er) = faces[0];
            rows[0] = Row {
                lower: 0.0,
                diag: 2.0 * el / h + self.r.run(&mut self.buf, g.x_min, t, None)?,
                upper: 2.0 * er / h,
            };
            let (wl, wr) = faces[n - 2];
            rows[n - 1] = Row {
                lower: -2.0 * wl / h,
                diag: -2.0 * wr / h + self.r.run(&mut self.buf, g.x_max, t, None)?,
                upper: 0.0,
            };
        }
        Ok(rows)
    }

    fn apply(rows: &[Row], p: &[f64]) -> Vec<f64> {
        let n = p.len();
        (0..n)
            .map(|i| {
                let mut v = rows[i].diag * p[i];
                if i > 0 {
                    v += rows[i].lower * p[i - 1];
                }
                if i + 1 < n {
                    v += rows[i].upper * p[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Solves a tridiagonal system by forward elimination and back
/// substitution, after checking (weak) diagonal dominance.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let n = diag.len();
    for i in 0..n {
        let off = if i > 0 { lower[i].abs() } else { 0.0 } + if i + 1 < n { upper[i].abs() } else { 0.0 };
        if diag[i].abs() < off * (1.0 - 1e-12) || diag[i] == 0.0 {
            return Err(NumericsError::NotDiagonallyDominant { row: i });
        }
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

struct Reference {
    value: CompiledExpr,
    rate: CompiledExpr,
}

/// Integrates `eq` from `initial` over `[cfg.t_start, cfg.t_end]`.
///
/// `reference` supplies boundary values when `cfg.boundary` is
/// [`Boundary::DirichletFromReference`].
pub fn integrate_cdr(
    eq: &CdrEquation,
    initial: &Field,
    cfg: &IntegratorConfig,
    reference: Option<&Expr>,
) -> Result<Field, NumericsError> {
    let grid = initial.grid;
    cfg.validate(&grid)?;
    if !initial.is_finite() {
        return Err(NumericsError::NonFiniteField { t: initial.t });
    }
    if (initial.t - cfg.t_start).abs() > 1e-12 * (1.0 + cfg.t_start.abs()) {
        return Err(NumericsError::GridMismatch);
    }
    let reference = match cfg.boundary {
        Boundary::DirichletFromReference => {
            let e = reference.ok_or(NumericsError::MissingReference)?;
            Some(Reference {
                value: CompiledExpr::new(e, &eq.parameters)?,
                rate: CompiledExpr::new(&e.differentiate(Var::T), &eq.parameters)?,
            })
        }
        Boundary::ZeroFlux => None,
    };
    let mut op = Operator::new(eq, grid, cfg.convection, cfg.boundary)?;
    let steps = cfg.steps();
    let dt = (cfg.t_end - cfg.t_start) / steps as f64;
    let mut p = initial.values.clone();
    let n = grid.n_points;
    for k in 0..steps {
        let t = cfg.t_start + k as f64 * dt;
        let t_next = if k + 1 == steps { cfg.t_end } else { t + dt };
        p = match cfg.scheme {
            Scheme::CrankNicolson => {
                let rows = op.rows(t + 0.5 * dt)?;
                let explicit = Operator::apply(&rows, &p);
                let mut rhs: Vec<f64> = p.iter().zip(&explicit).map(|(v, l)| v + 0.5 * dt * l).collect();
                let mut lower: Vec<f64> = rows.iter().map(|r| -0.5 * dt * r.lower).collect();
                let mut diag: Vec<f64> = rows.iter().map(|r| 1.0 - 0.5 * dt * r.diag).collect();
                let mut upper: Vec<f64> = rows.iter().map(|r| -0.5 * dt * r.upper).collect();
                if let Some(reference) = &reference {
                    for i in [0, n - 1] {
                        lower[i] = 0.0;
                        diag[i] = 1.0;
                        upper[i] = 0.0;
                        rhs[i] = reference.value.eval(grid.x(i), t_next)?;
                    }
                }
                solve_tridiagonal(&lower, &diag, &upper, &rhs)?
            }
            Scheme::ExplicitRk4 => {
                let mut rate = |s: f64, q: &[f64]| -> Result<Vec<f64>, NumericsError> {
                    let rows = op.rows(s)?;
                    let mut k = Operator::apply(&rows, q);
                    if let Some(reference) = &reference {
                        for i in [0, n - 1] {
                            k[i] = reference.rate.eval(grid.x(i), s)?;
                        }
                    }
                    Ok(k)
                };
                let axpy = |a: f64, k: &[f64]| -> Vec<f64> { p.iter().zip(k).map(|(v, k)| v + a * k).collect() };
                let k1 = rate(t, &p)?;
                let k2 = rate(t + 0.5 * dt, &axpy(0.5 * dt, &k1))?;
                let k3 = rate(t + 0.5 * dt, &axpy(0.5 * dt, &k2))?;
                let k4 = rate(t + dt, &axpy(dt, &k3))?;
                let mut next: Vec<f64> =
                    (0..n).map(|i| p[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
                if let Some(reference) = &reference {
                    for i in [0, n - 1] {
                        next[i] = reference.value.eval(grid.x(i), t_next)?;
                    }
                }
                next
            }
        };
        if p.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFiniteField { t: t_next });
        }
    }
    Ok(Field { grid, t: cfg.t_end, values: p })
}

/// Relative discrete norms of `a - b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub l2_rel: f64,
    pub linf_rel: f64,
}

/// Grid-weighted `L2` and max-norm errors of `a` relative to `b`.
pub fn error_norms(a: &Field, b: &Field) -> Result<ErrorNorms, NumericsError> {
    if a.grid != b.grid || (a.t - b.t).abs() > 1e-12 * (1.0 + b.t.abs()) {
        return Err(NumericsError::GridMismatch);
    }
    let h = b.grid.h();
    let l2 = |v: &mut dyn Iterator<Item = f64>| (v.map(|x| x * x).sum::<f64>() * h).sqrt();
    let linf = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = || a.values.iter().zip(&b.values).map(|(x, y)| x - y);
    Ok(ErrorNorms {
        l2_rel: l2(&mut diff()) / l2(&mut b.values.iter().copied()).max(1e-300),
        linf_rel: linf(&mut diff()) / linf(&mut b.values.iter().copied()).max(1e-300),
    })
}

/// One run of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub h: f64,
    pub dt: f64,
}

impl Resolution {
    /// `levels` resolutions starting at `(h, dt)`, each halving both.
    pub fn halving(h: f64, dt: f64, levels: usize) -> Vec<Resolution> {
        (0..levels).map(|k| Resolution { h: h / f64::powi(2.0, k as i32), dt: dt / f64::powi(2.0, k as i32) }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub resolutions: Vec<Resolution>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub order: f64,
    /// Errors are at roundoff level, so `order` carries no information.
    pub saturated: bool,
}

/// Errors below this count as roundoff in [`convergence_order`].
pub const SATURATION_LEVEL: f64 = 1e-11;

/// Integrates `eq` from `closed_form` at each resolution on `[x_min,
/// x_max]` and fits the observed order of the relative `L2` error at
/// `cfg.t_end`.
pub fn convergence_order(
    eq: &CdrEquation,
    closed_form: &Expr,
    x_range: (f64, f64),
    cfg: &IntegratorConfig,
    resolutions: &[Resolution],
) -> Result<ConvergenceReport, NumericsError> {
    if resolutions.len() < 3 {
        return Err(NumericsError::InvalidConfig("convergence study needs at least 3 resolutions".into()));
    }
    let mut errors = Vec::with_capacity(resolutions.len());
    for res in resolutions {
        let grid = Grid1D::with_spacing(x_range.0, x_range.1, res.h)?;
        let start = Field::sample(closed_form, &eq.parameters, grid, cfg.t_start)?;
        let run = IntegratorConfig { dt: res.dt, ..*cfg };
        let end = integrate_cdr(eq, &start, &run, Some(closed_form))?;
        let exact = Field::sample(closed_form, &eq.parameters, grid, cfg.t_end)?;
        errors.push(error_norms(&end, &exact)?.l2_rel);
    }
    let saturated = errors.iter().all(|e| *e < SATURATION_LEVEL);
    let hs: Vec<f64> = resolutions.iter().map(|r| r.h.ln()).collect();
    let es: Vec<f64> = errors.iter().map(|e| e.max(1e-300).ln()).collect();
    Ok(ConvergenceReport { resolutions: resolutions.to_vec(), order: slope(&hs, &es), errors, saturated })
}

/// Observed order from three runs without a closed form: `log2` of the
/// ratio of successive differences, compared on the coarsest grid. Each
/// resolution must halve `h` and `dt`.
pub fn self_convergence_order(
    eq: &CdrEquation,
    initial: &Expr,
    x_range: (f64, f64),
    cfg: &IntegratorConfig,
    coarse: Resolution,
) -> Result<f64, NumericsError> {
    let mut runs = Vec::new();
    for (k, res) in Resolution::halving(coarse.h, coarse.dt, 3).into_iter().enumerate() {
        let grid = Grid1D::with_spacing(x_range.0, x_range.1, res.h)?;
        let start = Field::sample(initial, &eq.parameters, grid, cfg.t_start)?;
        let end = integrate_cdr(eq, &start, &IntegratorConfig { dt: res.dt, ..*cfg }, Some(initial))?;
        let stride = 1 << k;
        runs.push(end.values.iter().step_by(stride).copied().collect::<Vec<_>>());
    }
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok((diff(&runs[0], &runs[1]) / diff(&runs[1], &runs[2])).log2())
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
