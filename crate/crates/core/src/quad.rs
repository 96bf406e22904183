//! Composite Gauss–Legendre quadrature for residual checks.

use std::sync::OnceLock;

const NODES: usize = 12;

/// Nodes and weights on [-1, 1], from Newton iteration on `P_n`.
fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

/// `∫_a^b f`, split into panels no longer than `max_panel`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, max_panel: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = ((b - a).abs() / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in rule() {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_exp() {
        assert!((integrate(|x| x * x, 0.0, 1.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((integrate(f64::exp, 0.0, 1.0, 0.1) - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert!((integrate(|x| x, 1.0, 0.0, 0.1) + 0.5).abs() < 1e-15);
        let w: f64 = rule().iter().map(|&(_, w)| w).sum();
        assert!((w - 2.0).abs() < 1e-14);
    }
}
