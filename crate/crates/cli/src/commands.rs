use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use susy_cdr::catalog::{self, CatalogEntry, CATALOG_TOL};
use susy_cdr::cdr::{
    CdrEquation, Domain, EquationSpec, GridDescription, SampleGrid, Stencil, NUMERIC_TOL, SYMBOLIC_TOL,
};
use susy_cdr::darboux::case_c::{check_intermediates, fpe_darboux_psi, CaseCPartner};
use susy_cdr::darboux::{hierarchy as build_hierarchy, hierarchy_solutions, Case, Partner};
use susy_cdr::expr::Bindings;
use susy_cdr::numerics::{
    convergence_order, error_norms, integrate_cdr, Boundary, Convection, Field, Grid1D, IntegratorConfig, Resolution,
    Scheme,
};
use susy_cdr::similarity::{run_pipeline, SimilarityProblem, SimilaritySpec};
use susy_cdr::syntax::check_parameter_name;
use susy_cdr::{parse, print, Expr};

use crate::output::{finite_or_string, summary, Failure, Outcome};
use crate::{
    BoundaryArg, CaseArg, CmdResult, ConvectionArg, GridArgs, HierarchyArgs, PartnerArgs, SchemeArg, SimilarityArgs,
    SimulateArgs, VerifyArgs,
};

fn grid_for(eq: &CdrEquation, args: &GridArgs) -> SampleGrid {
    let g = eq.default_grid();
    g.with_points(args.nx.unwrap_or(g.x.points), args.nt.unwrap_or(g.t.points))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("invalid JSON in {}: {e}", path.display())))
}

fn parse_expr(label: &str, src: &str) -> Result<Expr, Failure> {
    parse(src).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{label}: {}", f.message);
        f
    })
}

fn parse_params(raw: &[String], mut base: Bindings) -> Result<Bindings, Failure> {
    for item in raw {
        let (name, value) =
            item.split_once('=').ok_or_else(|| Failure::usage(format!("expected NAME=VALUE, got `{item}`")))?;
        check_parameter_name(name.trim())?;
        let v: f64 = value.trim().parse().map_err(|_| Failure::usage(format!("`{value}` is not a number")))?;
        base.insert(name.trim().to_string(), v);
    }
    Ok(base)
}

/// Simplified rendering for reports.
fn show(e: &Expr) -> String {
    print(&e.simplify())
}

fn equation_json(eq: &CdrEquation) -> Value {
    let simplified = CdrEquation {
        convection: eq.convection.simplify(),
        diffusion: eq.diffusion.simplify(),
        reaction: eq.reaction.simplify(),
        ..eq.clone()
    };
    serde_json::to_value(simplified.to_spec()).expect("equation specs serialize")
}

/// Writes `x,t,value` rows for `e` on `grid`, ascending in `x` and then
/// `t`.
fn write_plane_csv(path: &Path, e: &Expr, bindings: &Bindings, grid: &SampleGrid) -> Result<(), Failure> {
    let values = grid.sample(e, bindings)?;
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "x,t,value")?;
    for ix in 0..grid.x.points {
        for it in 0..grid.t.points {
            let v = values[it * grid.x.points + ix];
            writeln!(out, "{},{},{}", grid.x.node(ix), grid.t.node(it), v)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn list() -> CmdResult {
    let mut entries = Vec::new();
    for name in catalog::list() {
        let e = catalog::get(name)?;
        entries.push(json!({ "name": name, "kind": e.kind, "note": e.note, "parameters": e.parameters() }));
    }
    Ok(Outcome::new(json!({ "command": "list", "entries": entries }), true))
}

pub fn verify(a: VerifyArgs) -> CmdResult {
    let (eq, candidate, source) = match (&a.entry, &a.equation, &a.solution) {
        (Some(name), _, _) => {
            let e = catalog::get(name)?;
            (e.equation, e.solution, json!({ "entry": name }))
        }
        (None, Some(path), Some(sol)) => {
            let spec: EquationSpec = read_json(path)?;
            let eq = CdrEquation::from_spec(&spec)?;
            (eq, parse_expr("solution", sol)?, json!({ "equation_file": path }))
        }
        _ => return Err(Failure::usage("give --entry NAME or --equation FILE --solution EXPR")),
    };
    let candidate = match a.perturb {
        Some(eps) => catalog::perturb(&candidate, eps),
        None => candidate,
    };
    let grid = grid_for(&eq, &a.grid);
    let (method, report) = if a.numeric {
        let tol = a.tol.unwrap_or(NUMERIC_TOL);
        ("finite-difference", eq.residual_numeric_expr(&candidate, &grid, Stencil::default(), tol)?)
    } else {
        let tol = a.tol.unwrap_or(SYMBOLIC_TOL);
        ("symbolic", eq.verify_symbolic(&candidate, &grid, tol)?)
    };
    let pass = report.pass;
    let out = json!({
        "command": "verify",
        "source": source,
        "equation": equation_json(&eq),
        "solution": show(&candidate),
        "perturb": a.perturb,
        "method": method,
        "report": summary(&report),
        "pass": pass,
    });
    Ok(Outcome::new(out, pass))
}

fn case_of(c: CaseArg) -> Option<Case> {
    match c {
        CaseArg::A => Some(Case::A),
        CaseArg::B => Some(Case::B),
        CaseArg::C => None,
    }
}

pub fn partner(a: PartnerArgs) -> CmdResult {
    match case_of(a.case) {
        Some(case) => match &a.entry {
            Some(name) => partner_from_entry(case, name, &a),
            None => partner_from_prepotentials(case, &a),
        },
        None => partner_case_c(&a),
    }
}

fn partner_from_entry(case: Case, name: &str, a: &PartnerArgs) -> CmdResult {
    let entry = catalog::get(name)?;
    let seat = entry
        .hierarchy
        .clone()
        .ok_or_else(|| Failure::usage(format!("entry `{name}` is not the seed of a hierarchy")))?;
    if seat.case != case {
        return Err(Failure::usage(format!("entry `{name}` seeds a Case {} hierarchy, not Case {case}", seat.case)));
    }
    let fam = catalog::family(&seat.family).expect("catalog families resolve");
    let tol = a.tol.unwrap_or(SYMBOLIC_TOL);
    let bindings = parse_params(&a.params, entry.parameters().clone())?;
    let grid = grid_for(&entry.equation, &a.grid);
    let levels = build_hierarchy(case, &fam, seat.index, a.k, &bindings, &grid, tol)?;
    let sols = hierarchy_solutions(case, &levels, &entry.solution);
    let top = levels.last().expect("hierarchy has a seed level");
    let p = sols.last().expect("one solution per level");
    let report = top.equation.verify_symbolic(p, &grid, tol.max(CATALOG_TOL))?;
    let pass = report.pass;
    let out = json!({
        "command": "partner",
        "case": case,
        "entry": name,
        "k": a.k,
        "family": seat.family,
        "index": top.index,
        "W0": show(&levels[0].w),
        "W": show(&top.w),
        "equation": equation_json(&top.equation),
        "solution": show(p),
        "report": summary(&report),
        "pass": pass,
    });
    Ok(Outcome::new(out, pass))
}

fn required<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str, Failure> {
    v.as_deref().ok_or_else(|| Failure::usage(format!("{flag} is required here")))
}

fn partner_from_prepotentials(case: Case, a: &PartnerArgs) -> CmdResult {
    let w0 = parse_expr("w0", required(&a.w0, "--w0")?)?;
    let w1 = parse_expr("w1", required(&a.w1, "--w1")?)?;
    let bindings = parse_params(&a.params, Bindings::new())?;
    let tol = a.tol.unwrap_or(SYMBOLIC_TOL);
    let probe = CdrEquation::heat();
    let grid = grid_for(&probe, &a.grid);
    let partner = Partner::new(case, &w0, &w1, &bindings, Domain::RealLine, &grid, tol)?;
    let mut out = json!({
        "command": "partner",
        "case": case,
        "W0": show(&w0),
        "W1": show(&w1),
        "original": equation_json(&partner.original),
        "partner": equation_json(&partner.partner),
        "riccati": summary(&partner.riccati),
    });
    let mut pass = partner.riccati.pass;
    if let Some(src) = &a.p0 {
        let p0 = parse_expr("p0", src)?;
        let r0 = partner.original.verify_symbolic(&p0, &grid, tol.max(CATALOG_TOL))?;
        let p1 = partner.map_solution(&p0);
        let r1 = partner.partner.verify_symbolic(&p1, &grid, tol.max(CATALOG_TOL))?;
        pass &= r0.pass && r1.pass;
        out["P0"] = json!(show(&p0));
        out["P0_report"] = summary(&r0);
        out["P1"] = json!(show(&p1));
        out["P1_report"] = summary(&r1);
    }
    out["pass"] = json!(pass);
    Ok(Outcome::new(out, pass))
}

fn partner_case_c(a: &PartnerArgs) -> CmdResult {
    let tol = a.tol.unwrap_or(CATALOG_TOL);
    let grid = grid_for(&CdrEquation::heat(), &a.grid);
    let example = match a.entry.as_deref() {
        Some(name) if name.starts_with("caseC.example") => true,
        Some(name) => return Err(Failure::usage(format!("entry `{name}` is not a Case C example"))),
        None => false,
    };
    let (w0, p0, omega1, w1, base) = if example {
        let seed: CatalogEntry = catalog::get("caseC.example.P0")?;
        let omega1 = match &a.omega1 {
            Some(s) => parse_expr("omega1", s)?,
            None => catalog::case_c_omega1(),
        };
        let w1 = parse_expr("w1", a.w1.as_deref().unwrap_or("a*x"))?;
        let w0 = seed.prepotential.clone().unwrap_or_else(Expr::zero);
        (w0, seed.solution.clone(), omega1, w1, seed.parameters().clone())
    } else {
        (
            parse_expr("w0", required(&a.w0, "--w0")?)?,
            parse_expr("p0", required(&a.p0, "--p0")?)?,
            parse_expr("omega1", required(&a.omega1, "--omega1")?)?,
            parse_expr("w1", required(&a.w1, "--w1")?)?,
            Bindings::new(),
        )
    };
    let bindings = parse_params(&a.params, base)?;
    let psi1 = fpe_darboux_psi(&omega1, &w0, &p0);
    let partner = CaseCPartner::new(&omega1, &w1, &psi1, None, &bindings, Domain::RealLine, &grid, tol)?;
    let mut out = json!({
        "command": "partner",
        "case": "C",
        "W0": show(&w0),
        "P0": show(&p0),
        "omega1": show(&omega1),
        "S1": show(&partner.data.s),
        "W1": show(&w1),
        "equation": equation_json(&partner.equation),
        "solution": show(&partner.p1),
        "report": summary(&partner.report),
    });
    if example {
        let entry = catalog::get("caseC.example.P1")?;
        if let Some(q) = &entry.quoted {
            let (lo, hi) = catalog::ratio_range(&partner.p1, q, &bindings, &grid)?;
            out["quoted_solution"] = json!({ "expression": show(q), "ratio_min": lo, "ratio_max": hi });
        }
        let (qo, qs) = catalog::case_c_quoted_intermediates();
        let check = check_intermediates(&qo, &qs, &w1, &partner.equation.reaction, &bindings, &grid, tol)?;
        out["quoted_intermediates"] = json!({
            "omega1": show(&qo),
            "S1": show(&qs),
            "consistent": check.consistent(),
            "decomposition_max_abs": finite_or_string(check.decomposition.max_abs),
            "reaction_max_abs": finite_or_string(check.reaction.max_abs),
        });
    }
    out["pass"] = json!(partner.report.pass);
    let mut outcome = Outcome::new(out, partner.report.pass);
    if example {
        outcome
            .warnings
            .push("the quoted intermediates omega1, S1 do not decompose W1; the consistent pair is used".into());
    }
    Ok(outcome)
}

pub fn hierarchy(a: HierarchyArgs) -> CmdResult {
    let entry = catalog::get(&a.entry)?;
    let seat = entry
        .hierarchy
        .clone()
        .ok_or_else(|| Failure::usage(format!("entry `{}` is not the seed of a hierarchy", a.entry)))?;
    let fam = catalog::family(&seat.family).expect("catalog families resolve");
    let tol = a.tol.unwrap_or(SYMBOLIC_TOL);
    let grid = grid_for(&entry.equation, &a.grid);
    let levels = build_hierarchy(seat.case, &fam, seat.index, a.depth, entry.parameters(), &grid, tol)?;
    let sols = hierarchy_solutions(seat.case, &levels, &entry.solution);
    if let Some(dir) = &a.grid_out {
        fs::create_dir_all(dir)?;
    }
    let mut pass = true;
    let mut rows = Vec::new();
    for (level, p) in levels.iter().zip(&sols) {
        let report = level.equation.verify_symbolic(p, &grid, tol.max(CATALOG_TOL))?;
        pass &= report.pass;
        let file = format!("P{}.csv", level.k);
        if let Some(dir) = &a.grid_out {
            write_plane_csv(&dir.join(&file), p, entry.parameters(), &grid)?;
        }
        rows.push(json!({
            "k": level.k,
            "index": level.index,
            "W": show(&level.w),
            "equation": equation_json(&level.equation),
            "solution": show(p),
            "file": a.grid_out.as_ref().map(|_| file),
            "report": summary(&report),
            "pass": report.pass,
        }));
    }
    let out = json!({
        "command": "hierarchy",
        "entry": a.entry,
        "case": seat.case,
        "family": seat.family,
        "depth": a.depth,
        "grid": GridDescription::from(grid),
        "levels": rows,
        "pass": pass,
    });
    if let Some(dir) = &a.grid_out {
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&out).expect("manifest serializes") + "\n")?;
    }
    Ok(Outcome::new(out, pass))
}

pub fn simulate(a: SimulateArgs) -> CmdResult {
    let entry = catalog::get(&a.entry)?;
    let eq = &entry.equation;
    let (lo, hi) = match eq.domain {
        Domain::RealLine => (-8.0, 8.0),
        Domain::HalfLine => (0.1, 8.0),
    };
    let x_range = (a.x_min.unwrap_or(lo), a.x_max.unwrap_or(hi));
    if !eq.validity.contains_window(a.t0, a.t1) {
        return Err(Failure::usage(format!(
            "time window [{}, {}] is outside the validity interval of `{}`",
            a.t0, a.t1, a.entry
        )));
    }
    let cfg = IntegratorConfig::new(a.t0, a.t1, a.dt)
        .with_scheme(match a.scheme {
            SchemeArg::Cn => Scheme::CrankNicolson,
            SchemeArg::Rk4 => Scheme::ExplicitRk4,
        })
        .with_boundary(match a.boundary {
            BoundaryArg::Dirichlet => Boundary::DirichletFromReference,
            BoundaryArg::ZeroFlux => Boundary::ZeroFlux,
        })
        .with_convection(match a.convection {
            ConvectionArg::Central => Convection::Central,
            ConvectionArg::Upwind => Convection::Upwind,
        });
    let grid = Grid1D::with_spacing(x_range.0, x_range.1, a.h)?;
    let start = Field::sample(&entry.solution, entry.parameters(), grid, a.t0)?;
    let end = integrate_cdr(eq, &start, &cfg, Some(&entry.solution))?;
    let exact = Field::sample(&entry.solution, entry.parameters(), grid, a.t1)?;
    let norms = error_norms(&end, &exact)?;
    let mut pass = norms.l2_rel <= a.tol;
    let mut out = json!({
        "command": "simulate",
        "entry": a.entry,
        "settings": { "grid": grid, "config": cfg, "tol": a.tol },
        "errors": norms,
    });
    if a.convergence {
        let res = Resolution::halving(4.0 * a.h, 4.0 * a.dt, 3);
        let conv = convergence_order(eq, &entry.solution, x_range, &cfg, &res)?;
        out["convergence"] = serde_json::to_value(&conv).expect("reports serialize");
    }
    if let Some(path) = &a.csv {
        let mut f = BufWriter::new(fs::File::create(path)?);
        end.write_csv(&mut f)?;
        f.flush()?;
    }
    pass &= norms.l2_rel.is_finite();
    out["pass"] = json!(pass);
    Ok(Outcome::new(out, pass))
}

pub fn similarity(a: SimilarityArgs) -> CmdResult {
    let spec: SimilaritySpec = read_json(&a.spec)?;
    let problem = SimilarityProblem::from_spec(&spec)?;
    let tol = a.tol.unwrap_or(1e-9);
    let outcome = run_pipeline(&problem, tol)?;
    let d = &outcome.darboux;
    let lift = &outcome.lift;
    let pass = d.report.pass && lift.report.pass && outcome.round_trip.pass;
    if let Some(path) = &a.csv {
        let GridDescription::Plane { x, t } = lift.report.grid else {
            unreachable!("lift reports are sampled in the plane")
        };
        write_plane_csv(path, &lift.solution, &problem.parameters, &SampleGrid::new(x, t))?;
    }
    let out = json!({
        "command": "similarity",
        "exponents": {
            "alpha": spec.alpha,
            "mu": spec.mu,
            "gamma": spec.alpha - 1.0,
            "delta": 2.0 * spec.alpha - 1.0,
            "rho": spec.mu - 1.0,
        },
        "V": show(&outcome.potential),
        "E": problem.energy,
        "E_y": problem.energy_y,
        "V_partner": show(&d.potential),
        "y_partner": show(&d.y),
        "energy_report": summary(&d.report),
        "annihilated": outcome.annihilated,
        "lift": {
            "equation": equation_json(&lift.equation),
            "solution": show(&lift.solution),
            "Phi": show(&lift.phi),
            "report": summary(&lift.report),
        },
        "round_trip": summary(&outcome.round_trip),
        "pass": pass,
    });
    let mut result = Outcome::new(out, pass);
    if outcome.annihilated {
        result.warnings.push("the transformed function vanishes identically: y coincides with the auxiliary y0".into());
    }
    Ok(result)
}
