use proptest::prelude::*;
use timedd::discretize::{assemble_system, BlockSystem, Field};
use timedd::linalg::{lu_factor, norm2};
use timedd::problems::example1;
use timedd::schwarz::*;

fn system(m: usize, n: usize) -> BlockSystem {
    let case = example1();
    assemble_system(&case.spec, &case.grid(m, n).unwrap()).unwrap()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b).max(1e-300)
}

fn config(variant: Variant, levels: usize, k: usize, form: LocalForm) -> SchwarzConfig {
    let mut cfg = SchwarzConfig::new(variant, levels, k);
    cfg.form = form;
    cfg
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        let pivot = a[k].clone();
        for i in k + 1..n {
            let f = a[i][k] / pivot[k];
            for (x, p) in a[i][k..].iter_mut().zip(&pivot[k..]) {
                *x -= f * p;
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k][k];
    }
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_solution_is_a_fixed_point_of_every_sweep(
        vi in 0usize..4, levels in 1usize..=2, kexp in 0u32..4, m in 3usize..9,
    ) {
        let variant = Variant::ALL[vi];
        let k = 1usize << kexp;
        let n = 16 + 1;
        prop_assume!(!variant.is_overlapping() || k == 1 || 16 / k > 2);
        let sys = system(m, n);
        let exact = lu_factor(&sys.l).unwrap().solve(&sys.b);
        let s = Schwarz::new(&sys, config(variant, levels, k, LocalForm::Restricted)).unwrap();
        let mut w = exact.clone();
        s.iterate(&sys.b, &mut w).unwrap();
        prop_assert!(rel_diff(&w, &exact) <= 1e-10);
    }

    #[test]
    fn closure_iterations_fix_their_hybrid_solution(vi in 0usize..2, kexp in 0u32..4, m in 3usize..9) {
        let variant = [Variant::Msn, Variant::Asn][vi];
        let sys = system(m, 17);
        let s = Schwarz::new(&sys, config(variant, 1, 1 << kexp, LocalForm::Closure)).unwrap();
        let fixed = lu_factor(&hybrid_operator(&s.subdomains, sys.dim()).unwrap()).unwrap().solve(&sys.b);
        let mut w = fixed.clone();
        s.iterate(&sys.b, &mut w).unwrap();
        prop_assert!(rel_diff(&w, &fixed) <= 1e-10);
    }

    #[test]
    fn restricted_pieces_reassemble_the_global_operator(kexp in 0u32..5, m in 3usize..9) {
        let sys = system(m, 17);
        let s = Schwarz::new(&sys, config(Variant::Asn, 1, 1 << kexp, LocalForm::Restricted)).unwrap();
        prop_assert_eq!(hybrid_operator(&s.subdomains, sys.dim()).unwrap(), sys.l.clone());
    }

    #[test]
    fn additive_sweep_ignores_solve_order(kexp in 1u32..4, seed in 0u64..100, ov in 0usize..2) {
        let sys = system(5, 17);
        let variant = if ov == 0 { Variant::Asn } else { Variant::Aso };
        prop_assume!(ov == 0 || 16 >> kexp > 2);
        let s = Schwarz::new(&sys, config(variant, 1, 1 << kexp, LocalForm::Closure)).unwrap();
        let w = random_guess(sys.dim(), seed);
        let forward = sweep_additive(&s.subdomains, &sys.b, &w, false).unwrap();
        let mut reversed: Vec<SubdomainSystem> = s.subdomains.clone();
        reversed.reverse();
        let backward = sweep_additive(&reversed, &sys.b, &w, true).unwrap();
        prop_assert!(rel_diff(&backward, &forward) <= 1e-12);
    }

    #[test]
    fn preconditioner_is_linear_and_deterministic(vi in 0usize..4, levels in 1usize..=2, alpha in -5.0f64..5.0, seed in 0u64..100) {
        let sys = system(6, 17);
        let s = Schwarz::new(&sys, SchwarzConfig::new(Variant::ALL[vi], levels, 4)).unwrap();
        let r = random_guess(sys.dim(), seed);
        let z = apply_preconditioner(&s, &r);
        prop_assert_eq!(&z, &apply_preconditioner(&s, &r));
        let ar: Vec<f64> = r.iter().map(|v| alpha * v).collect();
        let az: Vec<f64> = z.iter().map(|v| alpha * v).collect();
        let za = apply_preconditioner(&s, &ar);
        prop_assert!(norm2(&za.iter().zip(&az).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-12 * norm2(&az).max(1e-300));
        prop_assert!(apply_preconditioner(&s, &vec![0.0; sys.dim()]).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn couplings_touch_only_the_virtual_levels() {
    let sys = system(6, 17);
    for form in [LocalForm::Closure, LocalForm::Restricted] {
        let s = Schwarz::new(&sys, config(Variant::Asn, 1, 4, form)).unwrap();
        let sub = &s.subdomains[1];
        assert_eq!((sub.lo, sub.hi), (5, 8));
        let mut levels: Vec<usize> = sub.couplings.iter().map(|&(_, c, _)| sys.layout.locate(c).1).collect();
        levels.sort_unstable();
        levels.dedup();
        assert_eq!(levels, vec![4, 9], "{form:?}");
    }
}

/// Splits unknowns into the two strips' index sets and iterates the dense
/// block Jacobi / Gauss–Seidel recurrences alongside the library sweeps.
#[test]
fn two_strip_sweeps_match_dense_block_iterations() {
    let sys = system(5, 17);
    let l = sys.l.to_dense();
    let first: Vec<usize> = sys
        .range(Field::State, 1, 8)
        .chain(sys.range(Field::Adjoint, 1, 8))
        .collect();
    let second: Vec<usize> = sys
        .range(Field::State, 9, 16)
        .chain(sys.range(Field::Adjoint, 9, 16))
        .collect();
    let local_solve = |rows: &[usize], other: &[usize], w: &[f64]| -> Vec<f64> {
        let a: Vec<Vec<f64>> = rows.iter().map(|&i| rows.iter().map(|&j| l[i][j]).collect()).collect();
        let rhs: Vec<f64> = rows
            .iter()
            .map(|&i| sys.b[i] - other.iter().map(|&j| l[i][j] * w[j]).sum::<f64>())
            .collect();
        dense_solve(a, rhs)
    };
    for variant in [Variant::Asn, Variant::Msn] {
        let s = Schwarz::new(&sys, config(variant, 1, 2, LocalForm::Restricted)).unwrap();
        let mut w = random_guess(sys.dim(), 7);
        let mut oracle = w.clone();
        for _ in 0..4 {
            s.sweep(&sys.b, &mut w).unwrap();
            let x1 = local_solve(&first, &second, &oracle);
            let mut next = oracle.clone();
            for (&i, v) in first.iter().zip(&x1) {
                next[i] = *v;
            }
            let source = if variant.is_additive() { &oracle } else { &next };
            let x2 = local_solve(&second, &first, source);
            for (&i, v) in second.iter().zip(&x2) {
                next[i] = *v;
            }
            oracle = next;
            assert!(rel_diff(&w, &oracle) <= 1e-12, "{variant}");
        }
    }
}

#[test]
fn single_strip_is_a_direct_solve() {
    let sys = system(8, 17);
    let exact = lu_factor(&sys.l).unwrap().solve(&sys.b);
    for variant in Variant::ALL {
        for form in [LocalForm::Closure, LocalForm::Restricted] {
            let (w, rep) = solve_stationary(&sys, &config(variant, 1, 1, form)).unwrap();
            assert_eq!(rep.iterations, 1);
            assert!(rel_diff(&w, &exact) <= 1e-10);
        }
    }
}

#[test]
fn converged_iterates_match_the_direct_solve() {
    let sys = system(17, 33);
    let exact = lu_factor(&sys.l).unwrap().solve(&sys.b);
    for variant in Variant::ALL {
        for levels in 1..=2 {
            let mut cfg = config(variant, levels, 4, LocalForm::Restricted);
            cfg.rel_tol = 1e-10;
            let (w, rep) = solve_stationary(&sys, &cfg).unwrap();
            assert!(rep.converged());
            assert_eq!(rep.history[0], 1.0);
            assert!(*rep.history.last().unwrap() < 1e-10);
            assert!(rel_diff(&w, &exact) <= 1e-6, "{variant} {levels}");
        }
    }
}

#[test]
fn two_color_and_parallel_schedules() {
    let sys = system(8, 33);
    let exact = lu_factor(&sys.l).unwrap().solve(&sys.b);
    let mut cfg = config(Variant::Msn, 1, 8, LocalForm::Restricted);
    cfg.two_color = true;
    cfg.rel_tol = 1e-10;
    let (w, rep) = solve_stationary(&sys, &cfg).unwrap();
    assert!(rep.converged());
    assert!(rel_diff(&w, &exact) <= 1e-6);

    for variant in Variant::ALL {
        let mut seq = config(variant, 2, 4, LocalForm::Restricted);
        seq.parallel = false;
        let par = SchwarzConfig {
            parallel: true,
            ..seq.clone()
        };
        let (a, ra) = solve_stationary(&sys, &seq).unwrap();
        let (b, rb) = solve_stationary(&sys, &par).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.history, rb.history);
    }
}

#[test]
fn interface_energies_decay_monotonically() {
    let sys = system(33, 65);
    for form in [LocalForm::Closure, LocalForm::Restricted] {
        for variant in [Variant::Asn, Variant::Msn] {
            let recs = monotonicity_probe(&sys, &config(variant, 1, 2, form), 30).unwrap();
            let m: Vec<f64> = recs
                .iter()
                .map(|r| if variant == Variant::Asn { r.m_asn } else { r.m_msn })
                .collect();
            for w in m.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * m[0], "{form:?} {variant}: {m:?}");
            }
            assert!(*m.last().unwrap() < 1e-12 * m[0]);
        }
    }
}

#[test]
fn probe_rejects_other_layouts() {
    let sys = system(5, 17);
    for cfg in [
        SchwarzConfig::new(Variant::Asn, 1, 4),
        SchwarzConfig::new(Variant::Aso, 1, 2),
    ] {
        assert!(matches!(
            monotonicity_probe(&sys, &cfg, 3),
            Err(timedd::Error::RequiresTwoSubdomains)
        ));
    }
}

#[test]
fn multiplicative_needs_no_more_sweeps_than_additive() {
    let sys = system(32, 129);
    for k in [2, 4, 8, 16, 32] {
        let msn = solve_stationary(&sys, &config(Variant::Msn, 1, k, LocalForm::Restricted))
            .unwrap()
            .1
            .iterations;
        let asn = solve_stationary(&sys, &config(Variant::Asn, 1, k, LocalForm::Restricted))
            .unwrap()
            .1
            .iterations;
        assert!(msn <= asn, "K={k}: {msn} > {asn}");
    }
}

#[test]
fn schwarz_preconditioned_gmres_converges() {
    let sys = system(16, 65);
    let s = Schwarz::new(&sys, SchwarzConfig::new(Variant::Asn, 2, 8)).unwrap();
    let cfg = timedd::linalg::KrylovConfig::default();
    let (_, rep) = gmres_solve(&sys, Some(&s), &cfg, 3).unwrap();
    assert!(rep.converged() && rep.seed == Some(3));
    let (_, plain) = gmres_solve(&sys, None, &cfg, 3).unwrap();
    assert!(rep.iterations < plain.iterations);
}

#[test]
fn config_validation() {
    let sys = system(5, 17);
    let mut bad = SchwarzConfig::new(Variant::Mso, 1, 2);
    bad.overlap = 0;
    assert!(Schwarz::new(&sys, bad).is_err());
    let mut bad = SchwarzConfig::new(Variant::Asn, 1, 2);
    bad.overlap = 1;
    assert!(Schwarz::new(&sys, bad).is_err());
    assert!(Schwarz::new(&sys, SchwarzConfig::new(Variant::Asn, 3, 2)).is_err());
    assert!(matches!(
        Schwarz::new(&sys, SchwarzConfig::new(Variant::Asn, 1, 3)),
        Err(timedd::Error::IndivisibleGrid { .. })
    ));
    let mut capped = SchwarzConfig::new(Variant::Asn, 1, 8);
    capped.max_iters = 2;
    assert!(matches!(solve_stationary(&sys, &capped), Err(timedd::Error::MaxItersExceeded(r)) if r.iterations == 2));
    assert_eq!("mso".parse::<Variant>().unwrap(), Variant::Mso);
}
