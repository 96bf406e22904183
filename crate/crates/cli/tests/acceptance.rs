//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p kernelseries-cli --test acceptance`.
//!
//! Failing criteria are reported but do not fail the test run unless
//! `ACCEPTANCE_STRICT=1` is set.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use kernelseries::assembler::{
    assemble, recursion_oracle_series, solve_problem, SolveOptions, SolveReport,
};
use kernelseries::examples::{
    self, eps_example2, example1, example2, example3, example4, example5, lambda_convergent,
    lambda_example2, lambda_sqrt, Example3Params,
};
use kernelseries::expr::CoeffExpr;
use kernelseries::problem::{validate_problem, KernelProblem, Orders, RegionId};
use kernelseries::taylor::{expand, UniSeries};
use kernelseries::triseries::{
    build_derivative, build_mul_x, build_mul_xi, build_trace, indices, TriSeries,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn linspace(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| k as f64 / (n - 1) as f64)
}

fn solve(p: &KernelProblem, order: usize, grid: usize) -> SolveReport {
    solve_problem(p, &SolveOptions::with_order(order).grid(grid)).expect("solve")
}

/// sup over `xi` in [0, L] of the gain difference of kernel 0.
fn sup_gain_diff(p: &KernelProblem, a: &SolveReport, b: &SolveReport) -> f64 {
    let l = p.domain_length;
    linspace(1001)
        .map(|t| (a.eval(p, 0, l, t * l) - b.eval(p, 0, l, t * l)).abs())
        .fold(0.0, f64::max)
}

fn c1_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let p = example1(lambda_convergent(), 1.0, 3.0, 1.0);
    let k = solve(&p, 25, 0);
    let lam = expand(&(lambda_convergent() + 3.0), 0.0, 25).unwrap();
    let oracle = recursion_oracle_series(&lam, 25).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let scale = oracle.max_abs();
    let mut worst: f64 = 0.0;
    for (i, j) in indices(25) {
        let (a, b) = (k.kernel(0).coeff(i, j), oracle.coeff(i, j));
        // exact zeros of the oracle are compared against the coefficient scale
        let rel = if b == 0.0 { a.abs() / scale } else { (a - b).abs() / b.abs() };
        worst = worst.max(rel);
    }
    outcome(
        worst <= 1e-9 && secs < 1.0,
        format!("max relative coefficient error {worst:.2e} (<= 1e-9), {secs:.3} s (< 1 s)"),
    )
}

fn c2_constant_coefficients() -> Outcome {
    let p = example1(CoeffExpr::constant(3.0), 1.0, 3.0, 1.0);
    let r = solve(&p, 30, 0);
    let k = r.kernel(0);
    let expected = [((1, 1), -3.0), ((3, 1), -2.25), ((3, 3), 2.25)];
    let coeff_err = expected
        .iter()
        .map(|&((i, j), v)| (k.coeff(i, j) - v).abs())
        .fold(0.0, f64::max);
    let lam = UniSeries::constant(6.0, 0.0, 0);
    let reference = recursion_oracle_series(&lam, 80).unwrap();
    let gain_err = linspace(101)
        .map(|xi| (k.eval(1.0, xi) - reference.eval(1.0, xi)).abs())
        .fold(0.0, f64::max);
    outcome(
        coeff_err <= 1e-12 && gain_err <= 1e-8,
        format!("K11, K31, K33 error {coeff_err:.1e} (<= 1e-12); N=30 gain vs order-80 oracle {gain_err:.2e} (<= 1e-8)"),
    )
}

fn c3_convergence() -> Outcome {
    let start = Instant::now();
    let p = example1(lambda_convergent(), 1.0, 3.0, 1.0);
    let r25 = solve(&p, 25, 0);
    let r50 = solve(&p, 50, 0);
    let secs = start.elapsed().as_secs_f64();
    let sup = sup_gain_diff(&p, &r25, &r50);
    outcome(
        sup <= 1e-6 && secs < 2.0,
        format!("sup |K50(1,xi) - K25(1,xi)| = {sup:.4e} (<= 1e-6), {secs:.3} s (< 2 s)"),
    )
}

fn c4_sparsity() -> Outcome {
    let p = example1(lambda_convergent(), 1.0, 3.0, 1.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, target, tol) in [(25, 0.982, 0.005), (50, 0.992, 0.003), (100, 0.996, 0.002)] {
        let s = assemble(&p, n).unwrap().system.sparsity();
        pass &= (s - target).abs() <= tol;
        parts.push(format!("N={n} {s:.4}"));
    }
    let start = Instant::now();
    let r = solve(&p, 100, 0);
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 5.0 && r.residual_linear < 1e-10;
    outcome(
        pass,
        format!("sparsity {}; N=100 assemble + solve {secs:.3} s (< 5 s)", parts.join(", ")),
    )
}

fn c5_localization() -> Outcome {
    let origin = example1(lambda_sqrt(), 1.0, 3.0, 1.0);
    let o25 = solve(&origin, 25, 0);
    let o50 = solve(&origin, 50, 0);
    let o_sup = sup_gain_diff(&origin, &o25, &o50);
    let local = example5(lambda_sqrt(), 1.0, 3.0, 1.0, 0.5, 0.7).unwrap();
    let l25 = solve(&local, 25, 0);
    let l50 = solve(&local, 50, 0);
    let l_sup = sup_gain_diff(&local, &l25, &l50);
    let sparsity = assemble(&local, 25).unwrap().system.sparsity();
    let pass = o50.divergence_flag
        && o_sup > 1.0
        && !l50.divergence_flag
        && l_sup <= 1e-4
        && (sparsity - 0.945).abs() <= 0.01;
    outcome(
        pass,
        format!(
            "origin: flag {} sup diff {o_sup:.3e} (> 1); localized (0.5, 0.7): flag {} sup diff {l_sup:.3e} (<= 1e-4), sparsity {sparsity:.4} (0.945 +- 0.01)",
            o50.divergence_flag, l50.divergence_flag
        ),
    )
}

/// (max enforced/scale, max full/scale) over the residuals of `r`.
fn residual_ratios(r: &SolveReport) -> (f64, f64) {
    r.residual_grid.iter().fold((0.0f64, 0.0f64), |(e, f), c| {
        (e.max(c.enforced_band / c.scale), f.max(c.full / c.scale))
    })
}

fn c6_example2() -> Outcome {
    let p = example2(lambda_example2(), eps_example2(), 3.0, 1.0).unwrap();
    let r = solve(&p, 40, 201);
    let (band, full) = residual_ratios(&r);
    let worst = r
        .residual_grid
        .iter()
        .max_by(|a, b| (a.full / a.scale).total_cmp(&(b.full / b.scale)))
        .map_or(String::new(), |c| c.id.clone());
    let e2 = example2(lambda_example2(), CoeffExpr::constant(1.0), 3.0, 1.0).unwrap();
    let e1 = example1(lambda_example2(), 1.0, 3.0, 1.0);
    let (k2, k1) = (solve(&e2, 40, 0), solve(&e1, 40, 0));
    let reduction = indices(40)
        .map(|(i, j)| (k2.kernel(0).coeff(i, j) - k1.kernel(0).coeff(i, j)).abs())
        .fold(0.0, f64::max);
    outcome(
        band <= 1e-9 && full <= 1e-5 && reduction <= 1e-10,
        format!(
            "enforced band/scale {band:.2e} (<= 1e-9); full/scale {full:.3e} at {worst} (<= 1e-5); constant-eps vs example 1 {reduction:.1e} (<= 1e-10)"
        ),
    )
}

fn c7_example3() -> Outcome {
    let params = Example3Params::default();
    let p = example3(&params).unwrap();
    let r = solve(&p, 40, 201);
    let (band, full) = residual_ratios(&r);
    let kvu = r.kernel(1);
    let trace = linspace(101)
        .map(|x| ((params.eps.eval(x) + params.mu.eval(x)) * kvu.eval(x, x) + params.c3.eval(x)).abs())
        .fold(0.0, f64::max);
    let per: Vec<String> = r
        .residual_grid
        .iter()
        .map(|c| format!("{} {:.1e}", c.id, c.full / c.scale))
        .collect();
    outcome(
        full <= 1e-5 && band <= 1e-9 && trace <= 1e-8,
        format!(
            "full/scale {} (<= 1e-5); trace identity {trace:.2e} (<= 1e-8)",
            per.join(", ")
        ),
    )
}

fn c8_example4() -> Outcome {
    let start = Instant::now();
    let p = example4(1.0, 0.2, CoeffExpr::constant(5.0), CoeffExpr::constant(2.0), 1.0).unwrap();
    let r = solve_problem(&p, &SolveOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let l12 = r.series(1, RegionId::B).unwrap();
    let l21 = r.series(2, RegionId::Whole).unwrap();
    let e12 = linspace(101).map(|x| (l12.eval(x, x) + 6.25).abs()).fold(0.0, f64::max);
    let e21 = linspace(101).map(|x| (l21.eval(x, x) - 2.5).abs()).fold(0.0, f64::max);
    let band = r.residual_grid.iter().map(|c| c.enforced_band).fold(0.0, f64::max);
    let band_scaled = r
        .residual_grid
        .iter()
        .map(|c| c.enforced_band / c.scale)
        .fold(0.0, f64::max);
    let scales: Vec<String> = r.groups.iter().map(|g| format!("{:.1e}", g.coefficient_scale)).collect();
    outcome(
        r.orders == [8, 40] && e12 <= 1e-10 && e21 <= 1e-10 && band <= 1e-8 && secs < 1.0,
        format!(
            "orders {:?}; L12(x,x)+6.25 {e12:.1e}, L21(x,x)-2.5 {e21:.1e} (<= 1e-10); enforced band {band:.1e} (<= 1e-8; {band_scaled:.1e} of coefficient scales {}); {secs:.3} s (< 1 s)",
            r.orders,
            scales.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// property suites

fn random_poly(rng: &mut ChaCha8Rng, order: usize, degree: usize, center: (f64, f64)) -> TriSeries {
    let mut s = TriSeries::zeros(order, center);
    for (i, j) in indices(degree) {
        s.set(i, j, rng.random_range(-1.0..1.0));
    }
    s
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn prop_taylor(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let x = CoeffExpr::var();
    let c = CoeffExpr::constant;
    let exprs = [
        lambda_convergent(),
        lambda_sqrt(),
        lambda_example2(),
        c(1.0) / (c(3.0) + c(1.5) * x.clone().powi(3)),
        (c(3.0) * x.clone()).exp() * (c(2.0) * x).cos(),
    ];
    for e in &exprs {
        for _ in 0..5 {
            let center = rng.random_range(-0.5..1.0);
            let d = expand(e, center, 20).map_err(|e| e.to_string())?.derivative().unwrap();
            let de = expand(&e.derivative(), center, 19).map_err(|e| e.to_string())?;
            for k in 0..=19 {
                if !rel_close(d.coeff(k), de.coeff(k), 1e-9) {
                    return Err(format!("{e:?} at {center}: coefficient {k}: {} vs {}", d.coeff(k), de.coeff(k)));
                }
            }
        }
    }
    Ok(())
}

fn derivative_at(s: &TriSeries, p: usize, q: usize, x: f64, xi: f64) -> f64 {
    let (u, v) = (x - s.center().0, xi - s.center().1);
    let fall = |n: usize, k: usize| -> f64 { (0..k).map(|t| n as f64 - t as f64).product() };
    let pow = |b: f64, n: usize, k: usize| if n >= k { b.powi((n - k) as i32) } else { 0.0 };
    indices(s.order())
        .map(|(i, j)| {
            let a = i - j;
            s.coeff(i, j) * fall(a, p) * pow(u, a, p) * fall(j, q) * pow(v, j, q)
        })
        .sum()
}

fn prop_operators(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = 12;
    let grid: Vec<f64> = linspace(17).collect();
    for _ in 0..6 {
        let center = (rng.random_range(0.0..0.6), rng.random_range(0.0..0.6));
        let k = random_poly(rng, n, n, center);
        for (p, q) in [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1)] {
            let d = TriSeries::new(n - p - q, center, k.apply(&build_derivative(n, p, q).unwrap())).unwrap();
            for &x in &grid {
                for &xi in &grid {
                    let (a, b) = (d.eval(x, xi), derivative_at(&k, p, q, x, xi));
                    if !rel_close(a, b, 1e-12) {
                        return Err(format!("derivative ({p},{q}) at ({x},{xi}): {a} vs {b}"));
                    }
                }
            }
        }
        // products with polynomials of degree 3, input degree n - 3
        let low = random_poly(rng, n, n - 3, center);
        let a = UniSeries::new(center.0, (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let lam = UniSeries::new(center.1, (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let mx = TriSeries::new(n, center, low.apply(&build_mul_x(&a, center.0, n, n).unwrap())).unwrap();
        let mxi = TriSeries::new(n, center, low.apply(&build_mul_xi(&lam, center.1, n, n).unwrap())).unwrap();
        for &x in &grid {
            for &xi in &grid {
                let base = low.eval(x, xi);
                if !rel_close(mx.eval(x, xi), a.eval(x) * base, 1e-12)
                    || !rel_close(mxi.eval(x, xi), lam.eval(xi) * base, 1e-12)
                {
                    return Err(format!("product mismatch at ({x},{xi})"));
                }
            }
        }
        let (alpha, gamma) = (rng.random_range(-1.0..1.5), rng.random_range(-0.7..0.7));
        let tr = UniSeries::new(center.0, k.apply(&build_trace(alpha, gamma, n))).unwrap();
        for &x in &grid {
            let xi = center.1 + alpha * (x - center.0) + gamma;
            if !rel_close(tr.eval(x), k.eval(x, xi), 1e-12) {
                return Err(format!("trace mismatch at x = {x}"));
            }
        }
    }
    Ok(())
}

fn prop_order_stability() -> Result<(), String> {
    let p = example1(lambda_convergent(), 1.0, 3.0, 1.0);
    for n in [10, 20] {
        let (a, b) = (solve(&p, n, 0), solve(&p, n + 4, 0));
        // structurally zero coefficients carry roundoff; they are measured
        // against the coefficient scale
        let floor = 1e-12 * a.kernel(0).max_abs();
        for (i, j) in indices(n - 2) {
            let (u, v) = (a.kernel(0).coeff(i, j), b.kernel(0).coeff(i, j));
            if (u - v).abs() > (1e-10 * u.abs().max(v.abs())).max(floor) {
                return Err(format!("K{i}{j} at N={n}: {u} vs {v}"));
            }
        }
    }
    Ok(())
}

fn prop_parity() -> Result<(), String> {
    for lam in [1.0, 3.0, -2.0] {
        let p = example1(CoeffExpr::constant(lam), 1.0, 3.0, 1.0);
        let r = solve(&p, 20, 0);
        for (i, j) in indices(20).filter(|&(i, _)| i % 2 == 0) {
            let v = r.kernel(0).coeff(i, j);
            if v.abs() > 1e-12 {
                return Err(format!("lambda {lam}: K{i}{j} = {v}"));
            }
        }
    }
    Ok(())
}

fn prop_dedup_counting() -> Result<(), String> {
    for n in [4, 10, 25] {
        let rep = validate_problem(&examples::reference("example1").unwrap(), Some(&Orders::Uniform(n)));
        let g = &rep.groups[0];
        if !(rep.is_ok() && g.is_square() && g.duplicates_removed == 1 && g.rows_after == g.unknowns) {
            return Err(format!("N={n}: {}", rep.render()));
        }
    }
    let rep = validate_problem(&examples::reference("example5").unwrap(), Some(&Orders::Uniform(25)));
    let g = &rep.groups[0];
    if !(g.is_square() && g.corner_rows_removed == 1) {
        return Err(format!("localized: {}", rep.render()));
    }
    Ok(())
}

fn run(bin: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("kseries {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> Result<(), String> {
    for n in names {
        let (x, y) = (std::fs::read(a.join(n)), std::fs::read(b.join(n)));
        match (x, y) {
            (Ok(x), Ok(y)) if x == y => {}
            _ => return Err(format!("{n} differs between reruns")),
        }
    }
    Ok(())
}

fn prop_cli_determinism() -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_kseries");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |s: &str| dir.path().join(s);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    run(bin, &["example", "example1", "--out", &s(&d("ex"))])?;
    let input = s(&d("ex").join("example1.json"));
    for out in ["a", "b"] {
        run(bin, &["solve", &input, "--order", "25", "--grid", "51", "--out", &s(&d(out))])?;
    }
    same_files(&d("a"), &d("b"), &["report.json", "coeffs.csv", "gain.csv"])?;
    let spec = r#"{"base": {"example": "example1"},
        "parameters": [{"name": "c", "target": "c", "range": [0, 9]}],
        "mode": "random", "samples": 8, "seed": 11, "order": 15}"#;
    std::fs::write(d("spec.json"), spec).map_err(|e| e.to_string())?;
    for out in ["s1", "s2"] {
        run(bin, &["sweep", &s(&d("spec.json")), "--out", &s(&d(out))])?;
    }
    let mut names = vec!["dataset.jsonl".to_string()];
    names.extend((0..8).map(|k| format!("sample_{k:05}.csv")));
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    same_files(&d("s1"), &d("s2"), &names)
}

fn c9_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let suites: Vec<(&str, Result<(), String>)> = vec![
        ("taylor derivative-vs-expansion", prop_taylor(&mut rng)),
        ("operator exactness", prop_operators(&mut rng)),
        ("order stability", prop_order_stability()),
        ("parity", prop_parity()),
        ("dedup counting", prop_dedup_counting()),
        ("cli determinism", prop_cli_determinism()),
    ];
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<String> = suites
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}")))
        .collect();
    let detail = if failed.is_empty() {
        format!("{} suites green, {secs:.2} s (< 60 s)", suites.len())
    } else {
        failed.join("; ")
    };
    outcome(failed.is_empty() && secs < 60.0, detail)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", c1_oracle_equivalence),
        ("constant-coefficient closed form", c2_constant_coefficients),
        ("convergence surrogate", c3_convergence),
        ("sparsity", c4_sparsity),
        ("localization", c5_localization),
        ("example 2 residuals", c6_example2),
        ("example 3 residuals", c7_example3),
        ("example 4 traces", c8_example4),
        ("property suites", c9_properties),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failures += 1;
        }
        println!(
            "[{}] {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
