//! Manufactured cases against hand-differentiated closed forms.

use proptest::prelude::*;
use std::f64::consts::PI;
use timedd::discretize::{assemble_system, Field};
use timedd::problems::{error_norms, example1, example2, sample_exact, ManufacturedCase};

/// −∂t y + Δy − p/γ − f and ∂t p + Δp + y − g with derivatives written out by hand.
fn continuous_residual(case: &ManufacturedCase, x: &[f64], t: f64) -> (f64, f64) {
    let dim = case.spec.dim;
    let s: f64 = x[..dim].iter().map(|v| (PI * v).sin()).product();
    let lap = -(dim as f64) * PI * PI;
    let (y, p) = ((PI * t).cos() * s, (PI * t).sin() * s);
    let (yt, pt) = (-PI * (PI * t).sin() * s, PI * (PI * t).cos() * s);
    let gamma = case.spec.gamma;
    let rf = -yt + lap * y - p / gamma - (case.spec.f)(x, t);
    let rg = pt + lap * p + y - (case.spec.g)(x, t);
    (rf, rg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn example1_data_solve_the_optimality_system(x in 0.0f64..1.0, t in 0.0f64..4.0) {
        let case = example1();
        let (rf, rg) = continuous_residual(&case, &[x], t);
        prop_assert!(rf.abs() <= 1e-12 && rg.abs() <= 1e-12, "{rf} {rg}");
        prop_assert!((case.exact_y(&[x], t) - (PI * t).cos() * (PI * x).sin()).abs() <= 1e-15);
    }

    #[test]
    fn example2_data_solve_the_optimality_system(x1 in 0.0f64..1.0, x2 in 0.0f64..1.0, t in 0.0f64..4.0) {
        let case = example2();
        let (rf, rg) = continuous_residual(&case, &[x1, x2], t);
        prop_assert!(rf.abs() <= 1e-12 && rg.abs() <= 1e-12, "{rf} {rg}");
    }

    #[test]
    fn gamma_override_rederives_the_source(gexp in -6i32..0, x in 0.0f64..1.0, t in 0.0f64..4.0) {
        let case = example1().with_gamma(10f64.powi(gexp));
        let (rf, rg) = continuous_residual(&case, &[x], t);
        prop_assert!(rf.abs() <= 1e-12 * 10f64.powi(-gexp).max(1.0) && rg.abs() <= 1e-12);
    }
}

#[test]
fn fixed_values() {
    let e1 = example1();
    assert_eq!(e1.spec.t_final, 4.0);
    assert_eq!(e1.spec.gamma, 1e-2);
    assert!((e1.spec.y0)(&[0.5]) == 1.0);
    for x in [0.1, 0.37, 0.9] {
        assert!(e1.exact_p(&[x], 4.0).abs() < 1e-14);
    }
    let e2 = example2();
    assert!((e2.exact_p(&[0.5, 0.5], 0.5) - 1.0).abs() < 1e-15);
    for (a, b) in [(0.2, 0.7), (0.5, 0.5)] {
        assert_eq!(e2.exact_y(&[a, b], 0.0), (e2.spec.y0)(&[a, b]));
    }
}

#[test]
fn exact_solutions_vanish_on_the_boundary() {
    for case in [example1(), example2()] {
        for i in 0..=16 {
            let t = 0.25 * i as f64;
            for j in 0..=8 {
                let s = j as f64 / 8.0;
                let pts: Vec<Vec<f64>> = if case.spec.dim == 1 {
                    vec![vec![0.0], vec![1.0]]
                } else {
                    vec![vec![0.0, s], vec![1.0, s], vec![s, 0.0], vec![s, 1.0]]
                };
                for p in pts {
                    assert!(case.exact_y(&p, t).abs() <= 1e-14);
                    assert!(case.exact_p(&p, t).abs() <= 1e-14);
                }
            }
        }
    }
}

#[test]
fn error_norms_of_sampled_and_perturbed_solutions() {
    let case = example2();
    let sys = assemble_system(&case.spec, &case.grid(6, 9).unwrap()).unwrap();
    let mut w = sample_exact(&case, &sys.grid);
    assert_eq!(error_norms(&case, &sys, &w).unwrap(), (0.0, 0.0));
    for n in 1..=sys.layout.nt {
        for k in 0..sys.layout.s {
            w[sys.index(Field::State, n, k)] += 1e-3;
        }
    }
    let (ey, ep) = error_norms(&case, &sys, &w).unwrap();
    assert!((ey - 1e-3).abs() < 1e-15 && ep == 0.0);
    assert!(error_norms(&case, &sys, &w[1..]).is_err());
}
