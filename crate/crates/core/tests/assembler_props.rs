use kernelseries::assembler::{
    assemble, recursion_oracle_series, solve_problem, SolveOptions,
};
use kernelseries::examples::{example1, example4, example5, lambda_convergent, lambda_sqrt};
use kernelseries::expr::CoeffExpr;
use kernelseries::problem::{localize_to, RegionId};
use kernelseries::taylor::expand;
use kernelseries::triseries::indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(v: f64) -> CoeffExpr {
    CoeffExpr::constant(v)
}

#[test]
fn matrix_path_matches_recursion_oracle_for_random_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..25 {
        let (a, b, w) = (rng.random_range(-3.0..5.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..4.0));
        let (eps, cc) = (rng.random_range(0.5..2.0), rng.random_range(0.0..5.0));
        let lam = c(a) + c(b) * CoeffExpr::var().powi(2) * (c(w) * CoeffExpr::var()).sin();
        let p = example1(lam.clone(), eps, cc, 1.0);
        let r = solve_problem(&p, &SolveOptions::with_order(20).grid(0)).unwrap();
        let oracle = recursion_oracle_series(&expand(&((lam + cc) / eps), 0.0, 20).unwrap(), 20).unwrap();
        let scale = oracle.max_abs().max(1.0);
        for (i, j) in indices(20) {
            let (u, v) = (r.kernel(0).coeff(i, j), oracle.coeff(i, j));
            assert!((u - v).abs() <= 1e-9 * v.abs().max(1e-3 * scale), "K{i}{j}: {u} vs {v}");
        }
    }
}

#[test]
fn localized_solution_agrees_with_origin_solution_for_entire_lambda() {
    let p = example1(lambda_convergent(), 1.0, 3.0, 1.0);
    let r0 = solve_problem(&p, &SolveOptions::with_order(40).grid(0)).unwrap();
    let q = localize_to(&p, 0.4, 0.3).unwrap();
    let r1 = solve_problem(&q, &SolveOptions::with_order(40).grid(0)).unwrap();
    for k in 0..=20 {
        let xi = k as f64 / 20.0;
        let (a, b) = (r0.kernel(0).eval(1.0, xi), r1.kernel(0).eval(1.0, xi));
        assert!((a - b).abs() < 1e-8, "xi={xi}: {a} vs {b}");
    }
}

#[test]
fn localization_tames_the_sqrt_singularity() {
    let origin = example1(lambda_sqrt(), 1.0, 3.0, 1.0);
    let r = solve_problem(&origin, &SolveOptions::with_order(50).grid(0)).unwrap();
    assert!(r.divergence_flag);
    let local = example5(lambda_sqrt(), 1.0, 3.0, 1.0, 0.5, 0.7).unwrap();
    let r = solve_problem(&local, &SolveOptions::with_order(50).grid(0)).unwrap();
    assert!(!r.divergence_flag);
    assert!((assemble(&local, 25).unwrap().system.sparsity() - 0.945).abs() < 0.01);
}

#[test]
fn enforced_band_residuals_vanish_and_full_residual_shrinks_with_order() {
    let p = example1(lambda_convergent(), 1.0, 3.0, 1.0);
    let full = |n: usize| {
        let r = solve_problem(&p, &SolveOptions::with_order(n).grid(41)).unwrap();
        for c in &r.residual_grid {
            assert!(c.enforced_band <= 1e-9 * c.scale, "{c:?}");
        }
        r.max_full_residual_ratio()
    };
    assert!(full(50) < 1e-3 * full(10));
}

#[test]
fn example4_traces_and_split_continuity() {
    let p = example4(1.0, 0.2, c(5.0), c(2.0), 1.0).unwrap();
    let r = solve_problem(&p, &SolveOptions::default().grid(41)).unwrap();
    assert_eq!(r.orders, vec![8, 40]);
    let l11a = r.series(0, RegionId::A).unwrap();
    let l11b = r.series(0, RegionId::B).unwrap();
    let l12b = r.series(1, RegionId::B).unwrap();
    for k in 0..=20 {
        let x = k as f64 / 20.0;
        assert!((l12b.eval(x, x) + 6.25).abs() < 1e-10);
        assert!((l11a.eval(x, 0.2 * x) - l11b.eval(x, 0.2 * x)).abs() < 1e-10);
    }
    for c in &r.residual_grid {
        assert!(c.enforced_band <= 1e-9 * c.scale, "{c:?}");
    }
}

#[test]
fn sparsity_follows_the_reference_table() {
    let p = example1(lambda_convergent(), 1.0, 3.0, 1.0);
    for (n, s) in [(25, 0.982), (50, 0.992)] {
        assert!((assemble(&p, n).unwrap().system.sparsity() - s).abs() < 0.003);
    }
}
