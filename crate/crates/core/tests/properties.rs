use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use pseudo_abelian::asymptotics::{annihilate, var_lambda, var_t, Expansion, LambdaFunction, Term};
use pseudo_abelian::blowup::{exceptional_g, pullback_h_w1, transition, Chart, ChartPoint, NormalExponents};
use pseudo_abelian::cli::compare_csv;
use pseudo_abelian::config::ScenarioConfig;
use pseudo_abelian::darboux::{build_normal_form, Perturbation};
use pseudo_abelian::integrator::pseudo_abelian;
use pseudo_abelian::oval::{find_center, trace_oval_with, TraceOptions};
use pseudo_abelian::poly::Polynomial2;
use pseudo_abelian::zeros::delta_arg;

fn exponent() -> impl Strategy<Value = f64> {
    0.3f64..3.0
}

fn expansion() -> impl Strategy<Value = Expansion> {
    prop::collection::vec((-2.0f64..1.5, 0u32..3, 0u32..2, -2.0f64..2.0, -2.0f64..2.0), 1..5).prop_map(|terms| {
        let mut e = Expansion::zero();
        for (beta, l, m, re, im) in terms {
            e.add_term(Term::new(beta, l, m), Complex64::new(re, im));
        }
        e
    })
}

// Polynomial with the given roots, sampled on the unit circle.
fn circle_values(roots: &[(f64, f64)], samples: usize) -> Vec<Complex64> {
    (0..=samples)
        .map(|k| {
            let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / samples as f64);
            roots.iter().map(|&(r, a)| z - Complex64::from_polar(r, a)).product()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_transitions_round_trip(u in 0.01f64..2.0, v in 0.05f64..3.0, w in 0.05f64..3.0, sv in any::<bool>(), sw in any::<bool>()) {
        let v = if sv { v } else { -v };
        let w = if sw { w } else { -w };
        let start = ChartPoint::new(Chart::W1, [u, v, w]);
        for target in [Chart::W2, Chart::W3] {
            let back = transition(&transition(&start, target).unwrap(), Chart::W1).unwrap();
            for k in 0..3 {
                prop_assert!((back.coords[k] - start.coords[k]).abs() <= 1e-12 * (1.0 + start.coords[k].abs()));
            }
        }
    }

    #[test]
    fn divisor_integral_identity(e in exponent(), ep in exponent(), em in exponent(), u in 1e-3f64..1.0, v in -0.99f64..0.99, w in 1e-3f64..0.999) {
        let exps = NormalExponents::new(e, ep, em).unwrap();
        let lhs = exceptional_g(&exps, v, w).unwrap() * pullback_h_w1(&exps, u, v, w);
        let rhs = (u * w).powf(exps.a());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn delta_arg_counts_roots_inside(roots in prop::collection::vec((0.0f64..2.5, 0.0f64..(2.0 * PI)), 0..5)) {
        prop_assume!(roots.iter().all(|r| (r.0 - 1.0).abs() > 0.05));
        let values = circle_values(&roots, 4096);
        let total = delta_arg(&values).unwrap();
        let inside = roots.iter().filter(|r| r.0 < 1.0).count() as f64;
        prop_assert!((total / (2.0 * PI) - inside).abs() < 1e-9);
        let mut reversed = values.clone();
        reversed.reverse();
        prop_assert_eq!(delta_arg(&reversed).unwrap(), -total);
    }

    #[test]
    fn lambda_variation_is_nilpotent(f in expansion(), beta in 0.1f64..2.0) {
        let once = var_lambda(&LambdaFunction::Model(f), beta).unwrap();
        let twice = var_lambda(&LambdaFunction::Model(once.clone()), beta).unwrap();
        prop_assert!(once.terms().all(|(t, _)| t.log_lambda == 0));
        prop_assert!(twice.is_zero());
    }

    #[test]
    fn variations_commute(f in expansion(), alpha in 0.1f64..2.0, beta in 0.1f64..2.0) {
        let a = var_lambda(&LambdaFunction::Model(var_t(&f, alpha)), beta).unwrap();
        let b = var_t(&var_lambda(&LambdaFunction::Model(f.clone()), beta).unwrap(), alpha);
        let scale = f.terms().map(|(_, c)| c.norm()).fold(1.0, f64::max);
        prop_assert!(a.distance(&b) <= 1e-15 * scale * 64.0, "{}", a.distance(&b));
    }

    #[test]
    fn annihilation_is_exact(f in expansion()) {
        prop_assert!(annihilate(&f).is_zero());
    }

    #[test]
    fn config_round_trip(e in exponent(), ep in exponent(), em in exponent(), lambda in 0.01f64..2.0, c in -5.0f64..5.0) {
        let text = format!(
            "name = \"p\"\n[darboux]\nlambda = {lambda:?}\n[darboux.normal_form]\neps = {e:?}\neps_plus = {ep:?}\neps_minus = {em:?}\n\
             [degrees]\nn0 = 1\nfactors = [1, 1]\nform = 2\n[perturbation]\nr = [[0, 2, {c:?}]]\n\
             [grids]\nh = {{ spacing = \"geometric\", min = 1e-3, max = 0.5, points = 7 }}\n"
        );
        let cfg = ScenarioConfig::parse(&text).unwrap();
        prop_assert_eq!(ScenarioConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn golden_compare_flags_a_perturbed_cell(values in prop::collection::vec(0.1f64..10.0, 1..6), pick in any::<prop::sample::Index>()) {
        let csv = |v: &[f64]| v.iter().fold(String::from("h,I\n"), |s, x| s + &format!("1.0,{x:.17e}\n"));
        let k = pick.index(values.len());
        let mut bumped = values.clone();
        bumped[k] *= 1.0 + 1e-5;
        prop_assert!(compare_csv(&csv(&values), &csv(&values), 1e-6).unwrap().is_empty());
        let v = compare_csv(&csv(&bumped), &csv(&values), 1e-6).unwrap();
        prop_assert_eq!(v.len(), 1);
        prop_assert_eq!(v[0].row, k + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn integral_is_odd_under_reversal_and_linear(f in 0.05f64..0.95, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
        let sys = build_normal_form(1.0, 2f64.sqrt(), 0.5, 1.0, None).unwrap();
        let range = find_center(&sys).unwrap();
        let oval = trace_oval_with(&sys, &range, f * range.h_max, &TraceOptions::default()).unwrap();
        let a = Perturbation::x_dy();
        let b = Perturbation::new(Polynomial2::from_terms(&[(0, 2, 1.0)]), Polynomial2::from_terms(&[(1, 1, 1.0)]));
        let ia = pseudo_abelian(&sys, &a, &oval).unwrap().value;
        let ib = pseudo_abelian(&sys, &b, &oval).unwrap().value;
        let back = pseudo_abelian(&sys, &a, &oval.reversed()).unwrap().value;
        prop_assert_eq!(back, -ia);
        let mix = pseudo_abelian(&sys, &a.scale(c1).add(&b.scale(c2)), &oval).unwrap().value;
        prop_assert!((mix - (c1 * ia + c2 * ib)).abs() <= 1e-10 * (1.0 + c1.abs() * ia.abs() + c2.abs() * ib.abs()));
    }
}
