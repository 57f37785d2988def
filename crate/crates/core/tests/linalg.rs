use proptest::prelude::*;
use timedd::discretize::{assemble_system, laplacian};
use timedd::linalg::*;
use timedd::partition::{build_coarse_space, partition_time, CoarseSolver};
use timedd::problems::example1;
use timedd::schwarz::{Schwarz, SchwarzConfig, Variant};

fn residual_norm(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    norm2(&ax.iter().zip(b).map(|(u, v)| v - u).collect::<Vec<_>>())
}

/// Random sparse matrix with a dominant diagonal, so it is well conditioned.
fn dominant_matrix() -> impl Strategy<Value = SparseMatrix> {
    (3usize..40).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n, -1.0f64..1.0), 0..4 * n).prop_map(move |offdiag| {
            let mut t = Triplets::new(n, n);
            let mut rowsum = vec![0.0; n];
            for &(i, j, v) in &offdiag {
                if i != j {
                    t.push(i, j, v);
                    rowsum[i] += v.abs();
                }
            }
            for (i, s) in rowsum.iter().enumerate() {
                let sign = if i % 3 == 0 { -1.0 } else { 1.0 };
                t.push(i, i, sign * (1.5 * s + 1.0));
            }
            t.build().unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lu_solve_inverts_matvec(a in dominant_matrix(), seed in 0u64..1000) {
        let n = a.nrows();
        let x: Vec<f64> = (0..n).map(|i| ((i as u64 * 2654435761 + seed) % 997) as f64 / 997.0 - 0.5).collect();
        let b = a.mul_vec(&x);
        let y = lu_factor(&a).unwrap().solve(&b);
        let err = norm2(&y.iter().zip(&x).map(|(u, v)| u - v).collect::<Vec<_>>());
        prop_assert!(err <= 1e-10 * norm2(&x).max(1e-300));
        // backward error bound from the factorization contract
        let xn = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r = a.mul_vec(&y).iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        prop_assert!(r <= 1e-12 * (a.norm_inf() * xn + bn));
    }

    #[test]
    fn gmres_history_is_monotone_and_honest(a in dominant_matrix()) {
        let n = a.nrows();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let cfg = KrylovConfig::new(1e-10, 200);
        let (x, rep) = gmres(&a, &Identity, &b, &vec![0.0; n], &cfg).unwrap();
        prop_assert!(rep.converged());
        for w in rep.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let recomputed = residual_norm(&a, &x, &b) / rep.initial_residual;
        prop_assert!((recomputed - rep.final_relative()).abs() <= 1e-10 * recomputed.max(1e-300));
        prop_assert!(rep.final_relative() < 1e-10);
    }

    #[test]
    fn bicgstab_final_residual_is_recomputed(a in dominant_matrix()) {
        let n = a.nrows();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 5) as f64).collect();
        let ilu = ilu0(&a).unwrap();
        let (x, rep) = bicgstab(&a, &ilu, &b, None, &KrylovConfig::new(1e-10, 500)).unwrap();
        prop_assert!(rep.converged());
        let recomputed = residual_norm(&a, &x, &b) / rep.initial_residual;
        prop_assert!((recomputed - rep.final_relative()).abs() <= 1e-10 * recomputed.max(1e-300));
    }
}

#[test]
fn bicgstab_matches_direct_on_spd_tridiagonal() {
    let a = laplacian(1, 50).scaled(-1.0);
    let b: Vec<f64> = (0..a.nrows()).map(|i| (0.1 * i as f64).cos()).collect();
    let x = lu_factor(&a).unwrap().solve(&b);
    let (y, rep) = bicgstab(&a, &ilu0(&a).unwrap(), &b, None, &KrylovConfig::new(1e-10, 100)).unwrap();
    assert!(rep.converged());
    let err = y.iter().zip(&x).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-8, "{err}");
}

#[test]
fn coarse_matrix_admits_ilu0_and_short_bicgstab() {
    let case = example1();
    let sys = assemble_system(&case.spec, &case.grid(16, 17).unwrap()).unwrap();
    let part = partition_time(17, 4, 0).unwrap();
    let cs = build_coarse_space(&part, &sys, CoarseSolver::IluBicgstab).unwrap();
    let ilu = ilu0(&cs.lc).unwrap();
    let rc = cs.r.mul_vec(&sys.b);
    let (_, rep) = bicgstab(&cs.lc, &ilu, &rc, None, &KrylovConfig::coarse()).unwrap();
    assert!(rep.converged() && rep.iterations <= 200);

    // same bound on the h = 1/64 coarse systems used by the two-level runs
    let sys = assemble_system(&case.spec, &case.grid(64, 257).unwrap()).unwrap();
    for k in [4, 16, 64] {
        let cs = build_coarse_space(&partition_time(257, k, 0).unwrap(), &sys, CoarseSolver::IluBicgstab).unwrap();
        let ilu = ilu0(&cs.lc).unwrap();
        let rc = cs.r.mul_vec(&sys.b);
        let (_, rep) = bicgstab(&cs.lc, &ilu, &rc, None, &KrylovConfig::coarse()).unwrap();
        assert!(rep.iterations <= 200);
    }
}

#[test]
fn schwarz_preconditioned_gmres_agrees_with_direct_solve() {
    let case = example1();
    let sys = assemble_system(&case.spec, &case.grid(16, 65).unwrap()).unwrap();
    let schwarz = Schwarz::new(&sys, SchwarzConfig::new(Variant::Asn, 1, 4)).unwrap();
    let cfg = KrylovConfig::new(1e-10, 200);
    let (x, rep) = gmres(&sys.l, &schwarz.preconditioner(), &sys.b, &vec![0.0; sys.dim()], &cfg).unwrap();
    assert!(rep.converged());
    for w in rep.history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    let xd = lu_factor(&sys.l).unwrap().solve(&sys.b);
    let diff: Vec<f64> = x.iter().zip(&xd).map(|(u, v)| u - v).collect();
    assert!(norm2(&diff) <= 1e-8 * norm2(&xd));
}

#[test]
fn global_system_factorization_is_accurate() {
    let case = example1();
    let sys = assemble_system(&case.spec, &case.grid(32, 129).unwrap()).unwrap();
    let x = lu_factor(&sys.l).unwrap().solve(&sys.b);
    assert!(residual_norm(&sys.l, &x, &sys.b) <= 1e-12 * norm2(&sys.b));
    // natural ordering fills in heavily; compare on a smaller system
    let sys = assemble_system(&case.spec, &case.grid(12, 33).unwrap()).unwrap();
    let x = lu_factor(&sys.l).unwrap().solve(&sys.b);
    let natural = lu_factor_with(
        &sys.l,
        LuOptions {
            reorder: false,
            ..Default::default()
        },
    )
    .unwrap();
    let y = natural.solve(&sys.b);
    let diff: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u - v).collect();
    assert!(norm2(&diff) <= 1e-10 * norm2(&x));
}
