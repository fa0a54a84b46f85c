use serde::{Deserialize, Serialize};

use crate::expr::{Bindings, CompiledExpr, EvalError, Expr};

use super::Domain;

/// Uniformly spaced sample nodes on a closed interval, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Axis { min, max, points }
    }

    pub fn spacing(&self) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.points - 1) as f64
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |i| self.node(i))
    }
}

/// A tensor grid in `(x, t)` used for residual sampling.
///
/// Values sampled on the grid are stored time-major: index `it * nx + ix`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub x: Axis,
    pub t: Axis,
}

impl SampleGrid {
    pub fn new(x: Axis, t: Axis) -> Self {
        SampleGrid { x, t }
    }

    /// x in [-4, 4] (81 points), t in [0.5, 2] (31 points); the half line
    /// uses x in [0.1, 6] instead.
    pub fn default_for(domain: Domain) -> Self {
        let x = match domain {
            Domain::RealLine => Axis::new(-4.0, 4.0, 81),
            Domain::HalfLine => Axis::new(0.1, 6.0, 81),
        };
        SampleGrid { x, t: Axis::new(0.5, 2.0, 31) }
    }

    /// Same extent with a different number of points per axis.
    pub fn with_points(mut self, nx: usize, nt: usize) -> Self {
        self.x.points = nx;
        self.t.points = nt;
        self
    }

    pub fn len(&self) -> usize {
        self.x.points * self.t.points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(x, t)` nodes in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.nodes().flat_map(move |t| self.x.nodes().map(move |x| (x, t)))
    }

    /// Evaluates `e` at every node.
    pub fn sample(&self, e: &Expr, bindings: &Bindings) -> Result<Vec<f64>, EvalError> {
        let compiled = CompiledExpr::new(e, bindings)?;
        let mut buf = Vec::with_capacity(compiled.len());
        self.points().map(|(x, t)| compiled.run(&mut buf, x, t, None)).collect()
    }

    fn cell_weight(&self) -> f64 {
        let w = |a: &Axis| if a.points < 2 { 1.0 } else { a.spacing() };
        w(&self.x) * w(&self.t)
    }
}

/// Where a residual field was sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridDescription {
    Plane {
        x: Axis,
        t: Axis,
    },
    /// A one-dimensional sample in the similarity variable `z`.
    Line {
        z: Axis,
    },
}

impl GridDescription {
    fn cell_weight(&self) -> f64 {
        match self {
            GridDescription::Plane { x, t } => SampleGrid::new(*x, *t).cell_weight(),
            GridDescription::Line { z } => {
                if z.points < 2 {
                    1.0
                } else {
                    z.spacing()
                }
            }
        }
    }
}

impl From<SampleGrid> for GridDescription {
    fn from(g: SampleGrid) -> Self {
        GridDescription::Plane { x: g.x, t: g.t }
    }
}

/// A sampled residual field with its summary and verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub grid: GridDescription,
    pub values: Vec<f64>,
    pub max_abs: f64,
    /// `sqrt(sum v^2 * cell)` with the cell size of the grid.
    pub l2: f64,
    pub tol: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(grid: impl Into<GridDescription>, values: Vec<f64>, tol: f64) -> Self {
        let grid = grid.into();
        let max_abs = values.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) });
        let l2 = (values.iter().map(|v| v * v).sum::<f64>() * grid.cell_weight()).sqrt();
        ResidualReport { grid, values, max_abs, l2, tol, pass: max_abs <= tol }
    }

    /// The same field judged against a different tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self.pass = self.max_abs <= tol;
        self
    }
}
