use std::io::Write;

use serde_json::{json, Value};
use susy_cdr::catalog::CatalogError;
use susy_cdr::cdr::{CdrError, GridDescription};
use susy_cdr::darboux::DarbouxError;
use susy_cdr::numerics::NumericsError;
use susy_cdr::similarity::SimilarityError;
use susy_cdr::{EvalError, ParseError, ResidualReport};

/// A completed command: its JSON report and overall verdict.
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn new(report: Value, pass: bool) -> Self {
        Outcome { report, pass, warnings: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    /// A check ran and failed.
    Verification,
    /// Bad flags, files or expressions.
    Usage,
}

/// A command that stopped early.
#[derive(Debug)]
pub struct Failure {
    pub class: Class,
    pub kind: &'static str,
    pub message: String,
    pub details: Value,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { class: Class::Usage, kind: "Usage", message: message.into(), details: Value::Null }
    }

    fn new(class: Class, kind: &'static str, message: String) -> Self {
        Failure { class, kind, message, details: Value::Null }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn exit_code(&self) -> u8 {
        match self.class {
            Class::Verification => 1,
            Class::Usage => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({ "pass": false, "error": self.kind, "message": self.message });
        if !self.details.is_null() {
            v["details"] = self.details.clone();
        }
        v
    }
}

pub fn emit(v: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = serde_json::to_writer_pretty(&mut out, v);
    let _ = writeln!(out);
}

/// Report without the raw residual field, plus the location of the
/// largest residual.
pub fn summary(r: &ResidualReport) -> Value {
    let worst = r.values.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(i, v)| match r.grid {
        GridDescription::Plane { x, t } => {
            json!({ "x": x.node(i % x.points), "t": t.node(i / x.points), "value": v })
        }
        GridDescription::Line { z } => json!({ "z": z.node(i), "value": v }),
    });
    json!({
        "grid": r.grid,
        "points": r.values.len(),
        "max_abs": finite_or_string(r.max_abs),
        "l2": finite_or_string(r.l2),
        "tol": r.tol,
        "pass": r.pass,
        "worst": worst,
    })
}

pub fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        let offset = e.offset();
        Failure::new(Class::Usage, "ParseError", e.to_string()).with_details(json!({ "offset": offset }))
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let class = match e {
            EvalError::UnboundParameter(_) | EvalError::UnboundVariable(_) => Class::Usage,
            _ => Class::Verification,
        };
        Failure::new(class, "EvalError", e.to_string())
    }
}

impl From<CdrError> for Failure {
    fn from(e: CdrError) -> Self {
        match e {
            CdrError::Eval(e) => e.into(),
            CdrError::Parse(e) => e.into(),
            CdrError::GridTooSmall { .. } => Failure::new(Class::Usage, "GridTooSmall", e.to_string()),
            CdrError::OutsideValidity { .. } => Failure::new(Class::Usage, "OutsideValidity", e.to_string()),
            CdrError::InvalidSpec(_) => Failure::new(Class::Usage, "InvalidSpec", e.to_string()),
        }
    }
}

impl From<DarbouxError> for Failure {
    fn from(e: DarbouxError) -> Self {
        let message = e.to_string();
        let fail = |kind| Failure::new(Class::Verification, kind, message.clone());
        match e {
            DarbouxError::Cdr(e) => e.into(),
            DarbouxError::AuxiliaryVanishes { x, t, value } => {
                fail("AuxiliaryVanishes").with_details(json!({ "x": x, "t": t, "value": value }))
            }
            DarbouxError::AuxiliaryNotSolution { max_abs, tol } => {
                fail("AuxiliaryNotSolution").with_details(json!({ "max_abs": max_abs, "tol": tol }))
            }
            DarbouxError::RiccatiViolation { max_abs, tol } => {
                fail("RiccatiViolation").with_details(json!({ "max_abs": max_abs, "tol": tol }))
            }
            DarbouxError::ShapeInvarianceViolation { index, max_abs, tol } => {
                fail("ShapeInvarianceViolation").with_details(json!({ "index": index, "max_abs": max_abs, "tol": tol }))
            }
            DarbouxError::TimeDerivativeMismatch { a, b, max_abs } => {
                fail("TimeDerivativeMismatch").with_details(json!({ "a": a, "b": b, "max_abs": max_abs }))
            }
            DarbouxError::ReactionNotTimeOnly { max_abs } => {
                fail("ReactionNotTimeOnly").with_details(json!({ "max_abs": max_abs }))
            }
            DarbouxError::ResidualFail(r) => fail("ResidualFail").with_details(summary(&r)),
            DarbouxError::IndexOutOfRange { index, range } => Failure::new(Class::Usage, "IndexOutOfRange", message)
                .with_details(json!({ "index": index, "range": range.to_string() })),
            DarbouxError::NonIntegrableShift(_) => Failure::new(Class::Usage, "NonIntegrableShift", message),
            DarbouxError::NonIntegrableReaction(_) => Failure::new(Class::Usage, "NonIntegrableReaction", message),
        }
    }
}

impl From<SimilarityError> for Failure {
    fn from(e: SimilarityError) -> Self {
        let message = e.to_string();
        let fail = |kind| Failure::new(Class::Verification, kind, message.clone());
        match e {
            SimilarityError::Eval(e) => e.into(),
            SimilarityError::Parse(e) => e.into(),
            SimilarityError::Cdr(e) => e.into(),
            SimilarityError::InvalidExponent(_) => Failure::new(Class::Usage, "InvalidExponent", message),
            SimilarityError::InvalidSpec(_) => Failure::new(Class::Usage, "InvalidSpec", message),
            SimilarityError::AuxiliaryVanishes { z, value } => {
                fail("AuxiliaryVanishes").with_details(json!({ "z": z, "value": value }))
            }
            SimilarityError::AuxiliaryNotSolution { energy, max_abs, tol } => {
                fail("AuxiliaryNotSolution").with_details(json!({ "energy": energy, "max_abs": max_abs, "tol": tol }))
            }
            SimilarityError::NotASolution { energy, max_abs, tol } => {
                fail("NotASolution").with_details(json!({ "energy": energy, "max_abs": max_abs, "tol": tol }))
            }
            SimilarityError::ResidualFail(r) => fail("ResidualFail").with_details(summary(&r)),
        }
    }
}

impl From<NumericsError> for Failure {
    fn from(e: NumericsError) -> Self {
        let message = e.to_string();
        match e {
            NumericsError::Eval(e) => e.into(),
            NumericsError::NonFiniteField { t } => {
                Failure::new(Class::Verification, "NonFiniteField", message).with_details(json!({ "t": t }))
            }
            NumericsError::StabilityViolation { dt, limit } => {
                Failure::new(Class::Usage, "StabilityViolation", message)
                    .with_details(json!({ "dt": dt, "limit": limit }))
            }
            NumericsError::MissingReference => Failure::new(Class::Usage, "MissingReference", message),
            NumericsError::GridMismatch => Failure::new(Class::Usage, "GridMismatch", message),
            NumericsError::NotDiagonallyDominant { row } => {
                Failure::new(Class::Usage, "NotDiagonallyDominant", message).with_details(json!({ "row": row }))
            }
            NumericsError::InvalidConfig(_) => Failure::new(Class::Usage, "InvalidConfig", message),
        }
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::UnknownEntry(_) => Failure::new(Class::Usage, "UnknownEntry", e.to_string()),
            CatalogError::Cdr(e) => e.into(),
            CatalogError::Darboux(e) => e.into(),
            CatalogError::Similarity(e) => e.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(Class::Usage, "Io", e.to_string())
    }
}
