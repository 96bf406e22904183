use kernelseries::expr::CoeffExpr;
use kernelseries::taylor::{expand, UniSeries};
use kernelseries::triseries::{
    build_derivative, build_mul_x, build_mul_xi, build_trace, build_truncate, indices, TriSeries,
};
use proptest::prelude::*;

fn c(v: f64) -> CoeffExpr {
    CoeffExpr::constant(v)
}

fn x() -> CoeffExpr {
    CoeffExpr::var()
}

/// Small family of analytic expressions indexed by `kind`.
fn family(kind: usize, a: f64, b: f64) -> CoeffExpr {
    match kind {
        0 => c(a) + x().powi(2) * (c(b) * x()).sin(),
        1 => (c(a.abs() + 0.5) + x().powi(2)).sqrt(),
        2 => c(1.0) / (c(a.abs() + 2.0) + c(b) * x().powi(3)),
        3 => (c(b) * x()).exp() * (c(a) * x()).cos(),
        _ => c(a) * x().powi(3) + c(b),
    }
}

/// `∂x^p ∂xi^q K` summed monomial by monomial.
fn monomial_derivative(k: &TriSeries, p: usize, q: usize, x: f64, xi: f64) -> f64 {
    let (u, v) = (x - k.center().0, xi - k.center().1);
    let term = |b: f64, n: usize, d: usize| -> f64 {
        if d > n {
            return 0.0;
        }
        let fall: f64 = (0..d).map(|t| (n - t) as f64).product();
        fall * b.powi((n - d) as i32)
    };
    indices(k.order())
        .map(|(i, j)| k.coeff(i, j) * term(u, i - j, p) * term(v, j, q))
        .sum()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, rng_seed: proptest::test_runner::RngSeed::Fixed(7), failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn derivative_of_expansion_is_expansion_of_derivative(
        kind in 0usize..5, a in -2.0f64..2.0, b in -2.0f64..2.0, center in -0.5f64..0.9,
    ) {
        let e = family(kind, a, b);
        let d = expand(&e, center, 16).unwrap().derivative().unwrap();
        let de = expand(&e.derivative(), center, 15).unwrap();
        for k in 0..=15 {
            prop_assert!(close(d.coeff(k), de.coeff(k), 1e-9), "k={} {} vs {}", k, d.coeff(k), de.coeff(k));
        }
    }

    #[test]
    fn expansion_matches_function_near_center(
        kind in 0usize..5, a in -2.0f64..2.0, b in -2.0f64..2.0, center in -0.5f64..0.9, h in -0.05f64..0.05,
    ) {
        let e = family(kind, a, b);
        let s = expand(&e, center, 20).unwrap();
        prop_assert!(close(s.eval(center + h), e.eval(center + h), 1e-10));
    }

    #[test]
    fn shifted_polynomial_is_the_same_polynomial(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..8), c0 in -1.0f64..1.0, c1 in -1.0f64..1.0, t in -1.0f64..1.0,
    ) {
        let p = UniSeries::new(c0, coeffs).unwrap();
        let q = p.shift_to(c1);
        prop_assert_eq!(q.center(), c1);
        prop_assert!(close(p.eval(t), q.eval(t), 1e-12));
    }

    #[test]
    fn operators_are_exact_on_polynomials(
        vals in prop::collection::vec(-1.0f64..1.0, 91),
        a in prop::collection::vec(-1.0f64..1.0, 4),
        lam in prop::collection::vec(-1.0f64..1.0, 4),
        x0 in 0.0f64..0.6, xi0 in 0.0f64..0.6,
        alpha in -1.0f64..1.5, gamma in -0.7f64..0.7,
    ) {
        let n = 12;
        let center = (x0, xi0);
        let k = TriSeries::new(n, center, vals).unwrap();
        // input of degree n - 3 so degree-3 products stay inside order n
        let mut low = k.clone();
        for (i, j) in indices(n).filter(|&(i, _)| i > n - 3) {
            low.set(i, j, 0.0);
        }
        let a = UniSeries::new(x0, a).unwrap();
        let lam = UniSeries::new(xi0, lam).unwrap();
        let mx = TriSeries::new(n, center, low.apply(&build_mul_x(&a, x0, n, n).unwrap())).unwrap();
        let mxi = TriSeries::new(n, center, low.apply(&build_mul_xi(&lam, xi0, n, n).unwrap())).unwrap();
        let dxx = TriSeries::new(n - 2, center, k.apply(&build_derivative(n, 2, 0).unwrap())).unwrap();
        let dxxi = TriSeries::new(n - 2, center, k.apply(&build_derivative(n, 1, 1).unwrap())).unwrap();
        let tr = UniSeries::new(x0, k.apply(&build_trace(alpha, gamma, n))).unwrap();
        let tk = TriSeries::new(n - 3, center, low.apply(&build_truncate(n, n - 3).unwrap())).unwrap();
        for s in 0..17 {
            for t in 0..17 {
                let (px, pxi) = (s as f64 / 16.0, t as f64 / 16.0);
                let base = low.eval(px, pxi);
                prop_assert!(close(mx.eval(px, pxi), a.eval(px) * base, 1e-12));
                prop_assert!(close(mxi.eval(px, pxi), lam.eval(pxi) * base, 1e-12));
                prop_assert!(close(tk.eval(px, pxi), base, 1e-12));
                prop_assert!(close(dxx.eval(px, pxi), k.partial(2, 0).eval(px, pxi), 1e-12));
                prop_assert!(close(dxxi.eval(px, pxi), k.partial(1, 1).eval(px, pxi), 1e-12));
                prop_assert!(close(k.partial(1, 0).eval(px, pxi), monomial_derivative(&k, 1, 0, px, pxi), 1e-12));
                prop_assert!(close(dxx.eval(px, pxi), monomial_derivative(&k, 2, 0, px, pxi), 1e-12));
                prop_assert!(close(dxxi.eval(px, pxi), monomial_derivative(&k, 1, 1, px, pxi), 1e-12));
            }
            let px = s as f64 / 16.0;
            prop_assert!(close(tr.eval(px), k.eval(px, xi0 + alpha * (px - x0) + gamma), 1e-12));
        }
    }
}
