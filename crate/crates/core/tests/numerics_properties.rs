mod common;

use common::{config, random_prepotential};
use proptest::prelude::*;
use susy_cdr::expr::Bindings;
use susy_cdr::numerics::{integrate_cdr, Boundary, Convection, Field, Grid1D, IntegratorConfig, Scheme};
use susy_cdr::sampling::rng_from;
use susy_cdr::syntax::parse;
use susy_cdr::{CdrEquation, Expr};

fn grid() -> Grid1D {
    Grid1D::with_spacing(-8.0, 8.0, 0.1).unwrap()
}

fn bump(center: f64, width: f64) -> Expr {
    parse(&format!("exp(-(x - ({center}))^2/{width})")).unwrap()
}

fn zero_flux(t0: f64, t1: f64) -> IntegratorConfig {
    IntegratorConfig::new(t0, t1, 1e-3).with_boundary(Boundary::ZeroFlux)
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn drift_diffusion_conserves_mass(seed in any::<u64>(), center in -1.0f64..1.0, upwind in any::<bool>()) {
        let mut rng = rng_from(seed);
        let w = random_prepotential(&mut rng);
        let eq = CdrEquation::from_prepotential(&w, Expr::zero());
        let start = Field::sample(&bump(center, 1.0), &Bindings::new(), grid(), 0.5).unwrap();
        let convection = if upwind { Convection::Upwind } else { Convection::Central };
        let cfg = zero_flux(0.5, 0.7).with_convection(convection);
        let end = integrate_cdr(&eq, &start, &cfg, None).unwrap();
        let (m0, m1) = (start.integral(), end.integral());
        let rate = (m1 - m0).abs() / m0 / (cfg.t_end - cfg.t_start);
        prop_assert!(rate <= 1e-8, "relative change per unit time {rate}");
    }

    #[test]
    fn reaction_changes_mass_by_its_integral(seed in any::<u64>(), kappa in -1.0f64..1.0) {
        let mut rng = rng_from(seed);
        let w = random_prepotential(&mut rng);
        let eq = CdrEquation::from_prepotential(&w, Expr::float(kappa));
        let start = Field::sample(&bump(0.0, 1.5), &Bindings::new(), grid(), 1.0).unwrap();
        let cfg = zero_flux(1.0, 1.01);
        let end = integrate_cdr(&eq, &start, &cfg, None).unwrap();
        let (m0, m1) = (start.integral(), end.integral());
        // d/dt int P = int r P; trapezoid in time is second order
        let predicted = 0.01 * kappa * 0.5 * (m0 + m1);
        prop_assert!((m1 - m0 - predicted).abs() <= 1e-6 * m0, "{} vs {predicted}", m1 - m0);
    }

    #[test]
    fn integration_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = rng_from(seed);
        let eq = CdrEquation::from_prepotential(&random_prepotential(&mut rng), parse("0.3/(t+1) - x^2/50").unwrap());
        let cfg = zero_flux(0.5, 0.6);
        let p = Field::sample(&bump(-0.5, 1.0), &Bindings::new(), grid(), 0.5).unwrap();
        let q = Field::sample(&parse("x*exp(-x^2/2)").unwrap(), &Bindings::new(), grid(), 0.5).unwrap();
        let mix = Field::new(grid(), 0.5, p.values.iter().zip(&q.values).map(|(u, v)| a * u + b * v).collect()).unwrap();
        let (ep, eq_, em) = (
            integrate_cdr(&eq, &p, &cfg, None).unwrap(),
            integrate_cdr(&eq, &q, &cfg, None).unwrap(),
            integrate_cdr(&eq, &mix, &cfg, None).unwrap(),
        );
        let scale = em.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for i in 0..em.values.len() {
            let combined = a * ep.values[i] + b * eq_.values[i];
            prop_assert!((em.values[i] - combined).abs() <= 1e-10 * scale, "node {i}");
        }
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let eq = CdrEquation::from_prepotential(&parse("-x^2/(4*(t+1))").unwrap(), parse("1/(t+1)").unwrap())
        .with_parameters([("C", 1.0)]);
    let reference = parse("sqrt((t+C)/(4*pi*t))*exp(-C*x^2/(4*t*(t+C)))").unwrap();
    let start = Field::sample(&reference, &eq.parameters, grid(), 0.5).unwrap();
    for scheme in [Scheme::CrankNicolson, Scheme::ExplicitRk4] {
        let dt = if scheme == Scheme::ExplicitRk4 { 2e-3 } else { 1e-3 };
        let cfg = IntegratorConfig::new(0.5, 0.6, dt).with_scheme(scheme);
        let a = integrate_cdr(&eq, &start, &cfg, Some(&reference)).unwrap();
        let b = integrate_cdr(&eq, &start, &cfg, Some(&reference)).unwrap();
        let bits = |f: &Field| f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b), "{scheme:?}");
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        a.write_csv(&mut csv_a).unwrap();
        b.write_csv(&mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }
}
