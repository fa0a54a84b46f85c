//! Named, verified example equations and solutions.
//!
//! Every entry is a CDR equation together with one solution of it. Entries
//! are built on demand by [`get`]; hierarchy and similarity entries run the
//! corresponding (verification-gated) construction.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdr::{CdrEquation, CdrError, Domain, EquationSpec, ResidualReport, SampleGrid, SYMBOLIC_TOL};
use crate::darboux::case_c::{fpe_darboux_psi, CaseCPartner};
use crate::darboux::{hierarchy, hierarchy_solutions, Case, DarbouxError, DarbouxPair, PrepotentialFamily};
use crate::expr::{Bindings, Expr};
use crate::similarity::{run_pipeline, SimilarityError, SimilarityProblem, SimilaritySpec};
use crate::syntax::parse;

/// Tolerance every entry must meet.
pub const CATALOG_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error(transparent)]
    Cdr(#[from] CdrError),
    #[error(transparent)]
    Darboux(#[from] DarbouxError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryKind {
    #[serde(rename = "caseA")]
    CaseA,
    #[serde(rename = "caseB")]
    CaseB,
    #[serde(rename = "caseC")]
    CaseC,
    #[serde(rename = "similarity")]
    Similarity,
    #[serde(rename = "auxiliary")]
    Auxiliary,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryKind::CaseA => "caseA",
            EntryKind::CaseB => "caseB",
            EntryKind::CaseC => "caseC",
            EntryKind::Similarity => "similarity",
            EntryKind::Auxiliary => "auxiliary",
        })
    }
}

/// Where an entry sits in a shape-invariant hierarchy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchySeat {
    pub case: Case,
    /// Name accepted by [`family`].
    pub family: String,
    /// Family index of the seed prepotential.
    pub index: i64,
    /// Level within the hierarchy started at `index`.
    pub level: usize,
}

/// A Schrödinger-form Darboux triple: potential, auxiliary function and
/// transformed function.
#[derive(Clone, Debug, PartialEq)]
pub struct DarbouxTriple {
    pub potential: Expr,
    pub auxiliary: Expr,
    pub psi: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: EntryKind,
    pub note: &'static str,
    pub equation: CdrEquation,
    pub solution: Expr,
    /// `W` with `C = -2W'`, when the equation comes from one.
    pub prepotential: Option<Expr>,
    /// Closed form as usually quoted, which may differ from `solution` by a
    /// constant factor.
    pub quoted: Option<Expr>,
    pub hierarchy: Option<HierarchySeat>,
    pub similarity: Option<SimilaritySpec>,
    pub darboux: Option<DarbouxTriple>,
}

impl CatalogEntry {
    fn new(name: &'static str, kind: EntryKind, note: &'static str, equation: CdrEquation, solution: Expr) -> Self {
        CatalogEntry {
            name,
            kind,
            note,
            equation,
            solution,
            prepotential: None,
            quoted: None,
            hierarchy: None,
            similarity: None,
            darboux: None,
        }
    }

    pub fn parameters(&self) -> &Bindings {
        &self.equation.parameters
    }

    pub fn default_grid(&self) -> SampleGrid {
        self.equation.default_grid()
    }

    /// Residual of [`Self::solution`] on the default grid at
    /// [`CATALOG_TOL`].
    pub fn verify(&self) -> Result<ResidualReport, CatalogError> {
        self.verify_candidate(&self.solution, CATALOG_TOL)
    }

    /// Residual of an arbitrary candidate under this entry's equation.
    pub fn verify_candidate(&self, candidate: &Expr, tol: f64) -> Result<ResidualReport, CatalogError> {
        Ok(self.equation.verify(candidate, tol)?)
    }

    pub fn to_spec(&self) -> EquationSpec {
        self.equation.to_spec()
    }
}

/// `P (1 + eps x)`, the standard falsification probe.
pub fn perturb(p: &Expr, eps: f64) -> Expr {
    Expr::mul(p.clone(), Expr::add(Expr::one(), Expr::mul(Expr::float(eps), Expr::x())))
}

const NAMES: [&str; 12] = [
    "auxiliary.heat.triple",
    "caseA.oscillator.P0",
    "caseA.oscillator.P1",
    "caseA.oscillator.P2",
    "caseA.radial.P0",
    "caseB.seed",
    "caseB.sho.P0",
    "caseB.sho.P1",
    "caseC.example.P0",
    "caseC.example.P1",
    "heat.kernel",
    "similarity.harmonic.pair",
];

/// All entry names, sorted.
pub fn list() -> Vec<&'static str> {
    let mut names = NAMES.to_vec();
    names.sort_unstable();
    names
}

/// Looks up a hierarchy family by name.
pub fn family(name: &str) -> Option<PrepotentialFamily> {
    match name {
        "oscillator" => Some(PrepotentialFamily::oscillator()),
        "harmonic" => Some(PrepotentialFamily::harmonic()),
        "radial" => Some(PrepotentialFamily::radial()),
        _ => None,
    }
}

fn expr(src: &str) -> Expr {
    parse(src).expect("catalog expressions parse")
}

fn bindings(pairs: &[(&str, f64)]) -> Bindings {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn c1() -> Bindings {
    bindings(&[("C", 1.0)])
}

fn case_c_params() -> Bindings {
    bindings(&[("C", 1.0), ("a", 0.3)])
}

pub fn get(name: &str) -> Result<CatalogEntry, CatalogError> {
    let name: &'static str =
        NAMES.iter().find(|n| **n == name).ok_or_else(|| CatalogError::UnknownEntry(name.to_string()))?;
    match name {
        "heat.kernel" => Ok(CatalogEntry::new(
            "heat.kernel",
            EntryKind::Auxiliary,
            "fundamental solution of the heat equation",
            CdrEquation::heat(),
            expr("exp(-x^2/(4*t))/sqrt(4*pi*t)"),
        )),
        "auxiliary.heat.triple" => auxiliary_triple(),
        "caseA.oscillator.P0" | "caseA.oscillator.P1" | "caseA.oscillator.P2" => oscillator(name),
        "caseA.radial.P0" => radial(),
        "caseB.seed" => {
            let w0 = PrepotentialFamily::oscillator().at(0);
            let mut e = CatalogEntry::new(
                "caseB.seed",
                EntryKind::CaseB,
                "e^{-2W} solves the reaction -2W_t equation for any W; oscillator prepotential",
                Case::B.equation(&w0).with_bindings(&c1()),
                Expr::exp(Expr::mul(Expr::int(-2), w0.clone())),
            );
            e.prepotential = Some(w0);
            e.hierarchy = Some(HierarchySeat { case: Case::B, family: "oscillator".into(), index: 0, level: 0 });
            Ok(e)
        }
        "caseB.sho.P0" | "caseB.sho.P1" => case_b_sho(name),
        "caseC.example.P0" => {
            let w0 = Expr::zero();
            let mut e = CatalogEntry::new(
                "caseC.example.P0",
                EntryKind::CaseC,
                "Fokker-Planck kernel of omega = -x^2/(4(t+C)) in the gauge S = -omega",
                CdrEquation::from_prepotential(&w0, expr("-1/(2*(t+C))")).with_bindings(&case_c_params()),
                case_c_p0(),
            );
            e.prepotential = Some(w0);
            Ok(e)
        }
        "caseC.example.P1" => case_c_p1(),
        "similarity.harmonic.pair" => similarity_pair(),
        _ => unreachable!("every listed name has a constructor"),
    }
}

fn auxiliary_triple() -> Result<CatalogEntry, CatalogError> {
    let aux = expr("t^(-1/2)*exp(-x^2/(4*t))");
    let psi0 = expr("x^2 + 2*t");
    let pair = DarbouxPair::new(crate::cdr::SchrodingerForm::new(Expr::zero()), aux.clone());
    let psi1 = pair.intertwine(&psi0);
    // -Psi_t = -Psi'' + V Psi is the CDR equation with C = 0, D = 1, r = -V
    let eq = CdrEquation::unit_diffusion(Expr::zero(), Expr::neg(pair.v1.potential.clone()));
    let mut e = CatalogEntry::new(
        "auxiliary.heat.triple",
        EntryKind::Auxiliary,
        "Darboux step on the heat equation with the heat kernel as auxiliary function",
        eq,
        psi1,
    );
    e.quoted = Some(expr("3*x + x^3/(2*t)"));
    e.darboux = Some(DarbouxTriple { potential: Expr::zero(), auxiliary: aux, psi: psi0 });
    Ok(e)
}

fn oscillator_p0() -> Expr {
    expr("sqrt((t+C)/(4*pi*t))*exp(-C*x^2/(4*t*(t+C)))")
}

fn oscillator(name: &'static str) -> Result<CatalogEntry, CatalogError> {
    let level: usize = name[name.len() - 1..].parse().expect("level digit");
    let fam = PrepotentialFamily::oscillator();
    let grid = SampleGrid::default_for(Domain::RealLine);
    let levels = hierarchy(Case::A, &fam, 0, level, &c1(), &grid, SYMBOLIC_TOL)?;
    let sols = hierarchy_solutions(Case::A, &levels, &oscillator_p0());
    let top = &levels[level];
    let quoted = [
        "sqrt((t+C)/(4*pi*t))*exp(-C*x^2/(4*t*(t+C)))",
        "(C*x/t)*sqrt((t+C)/(4*pi*t))*exp(-C*x^2/(4*t*(t+C)))",
        "(C*(2*C*t + 2*t^2 - C*x^2)/t^2)*sqrt((t+C)/(4*pi*t))*exp(-C*x^2/(4*t*(t+C)))",
    ][level];
    let note = [
        "oscillator seed, W = gamma x^2/4 with gamma = -1/(t+C)",
        "first partner in the oscillator hierarchy",
        "second partner in the oscillator hierarchy",
    ][level];
    let mut e = CatalogEntry::new(name, EntryKind::CaseA, note, top.equation.clone(), sols[level].clone());
    e.prepotential = Some(top.w.clone());
    e.quoted = Some(expr(quoted));
    if level == 0 {
        e.hierarchy = Some(HierarchySeat { case: Case::A, family: "oscillator".into(), index: 0, level: 0 });
    }
    Ok(e)
}

fn radial() -> Result<CatalogEntry, CatalogError> {
    let fam = PrepotentialFamily::radial();
    let w = fam.at(2);
    let mut e = CatalogEntry::new(
        "caseA.radial.P0",
        EntryKind::CaseA,
        "radial oscillator on the half line, l = 2",
        Case::A.equation(&w).with_domain(Domain::HalfLine),
        expr("x^7*exp(-x^2/2 - 2*t)"),
    );
    e.prepotential = Some(w);
    e.hierarchy = Some(HierarchySeat { case: Case::A, family: "radial".into(), index: 2, level: 0 });
    Ok(e)
}

fn case_b_sho(name: &'static str) -> Result<CatalogEntry, CatalogError> {
    let w0 = expr("x^2/4");
    let w1 = expr("x^2/4 + t");
    let p0 = expr("x*exp(-x^2/2 - t)");
    let (w, p, note) = if name.ends_with("P0") {
        (w0, p0, "harmonic prepotential with reaction -2W_t = 0")
    } else {
        let p1 = Case::B.map_solution(&w0, &w1, &p0);
        (w1, p1, "partner of the harmonic prepotential, W = x^2/4 + t")
    };
    let mut e = CatalogEntry::new(name, EntryKind::CaseB, note, Case::B.equation(&w), p);
    e.prepotential = Some(w);
    if name.ends_with("P0") {
        e.hierarchy = Some(HierarchySeat { case: Case::B, family: "harmonic".into(), index: 0, level: 0 });
    } else {
        e.quoted = Some(expr("exp(-x^2/2 - 2*t)"));
    }
    Ok(e)
}

fn case_c_p0() -> Expr {
    expr("exp(-x^2/(4*t))/sqrt(4*pi*t*(t+C))")
}

/// Drift prepotential of the partner Fokker-Planck equation.
pub fn case_c_omega1() -> Expr {
    expr("a*x + a^2*t - ln(t+C)/2")
}

/// `(omega1, S1)` as commonly quoted for the Case C example. They do not
/// sum to `W1 = a x` and are kept only so the mismatch can be reported.
pub fn case_c_quoted_intermediates() -> (Expr, Expr) {
    (expr("a*x + a*x^2 - ln(t+C)/2"), expr("ln(t+C)/2 - a*t^2"))
}

/// `S1 = W1 - omega1` for [`case_c_omega1`].
pub fn case_c_s1() -> Expr {
    expr("ln(t+C)/2 - a^2*t")
}

fn case_c_p1() -> Result<CatalogEntry, CatalogError> {
    let w1 = expr("a*x");
    let omega1 = case_c_omega1();
    let psi1 = fpe_darboux_psi(&omega1, &Expr::zero(), &case_c_p0());
    let grid = SampleGrid::default_for(Domain::RealLine);
    let partner = CaseCPartner::new(&omega1, &w1, &psi1, None, &case_c_params(), Domain::RealLine, &grid, CATALOG_TOL)?;
    let mut e = CatalogEntry::new(
        "caseC.example.P1",
        EntryKind::CaseC,
        "partner of the Fokker-Planck example with W1 = a x",
        partner.equation,
        partner.p1,
    );
    e.prepotential = Some(w1);
    e.quoted = Some(expr("(x+2*a*t)/(4*sqrt(pi*(t+C))*t^(3/2))*exp(-(x^2+4*a*x*t)/(4*t))"));
    Ok(e)
}

/// Spec of the harmonic similarity example.
pub fn harmonic_similarity_spec() -> SimilaritySpec {
    SimilaritySpec {
        alpha: 0.5,
        mu: -0.5,
        energy: 0.5,
        energy_y: Some(1.5),
        phi: "z^2/4 - 1/2".into(),
        y0: "exp(-z^2/4)".into(),
        y: "z*exp(-z^2/4)".into(),
        parameters: Bindings::new(),
    }
}

fn similarity_pair() -> Result<CatalogEntry, CatalogError> {
    let spec = harmonic_similarity_spec();
    let problem = SimilarityProblem::from_spec(&spec)?;
    let outcome = run_pipeline(&problem, CATALOG_TOL)?;
    let mut e = CatalogEntry::new(
        "similarity.harmonic.pair",
        EntryKind::Similarity,
        "harmonic similarity reduction with z = x/sqrt(t); lifted partner of z e^{-z^2/4}",
        outcome.lift.equation,
        outcome.lift.solution,
    );
    e.quoted = Some(expr("t^(-1/2)*exp(-x^2/(4*t))"));
    e.similarity = Some(spec);
    Ok(e)
}

/// Range `(min, max)` of `a / b` over the grid points where `|b|` exceeds
/// `1e-6` of its maximum.
pub fn ratio_range(a: &Expr, b: &Expr, bindings: &Bindings, grid: &SampleGrid) -> Result<(f64, f64), CatalogError> {
    let va = grid.sample(a, bindings).map_err(CdrError::from)?;
    let vb = grid.sample(b, bindings).map_err(CdrError::from)?;
    let floor = 1e-6 * vb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(va
        .iter()
        .zip(&vb)
        .filter(|(_, b)| b.abs() > floor)
        .map(|(a, b)| a / b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q), hi.max(q))))
}
