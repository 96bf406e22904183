//! Root-test style divergence heuristic for a solved series.
//!
//! The growth rate `r` is `exp` of the least-squares slope of
//! `ln max_j |K_ij|` against `i` over the upper half of the degrees. Terms of
//! degree `i` are bounded by `max_j |K_ij| R^i` on the domain, where `R` is
//! the largest max-norm distance from the center to a vertex of the triangle,
//! so `r R > 1` signals geometric growth of the terms on the domain.
//! Advisory only.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::triseries::TriSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Divergence {
    pub growth_rate: f64,
    pub reach: f64,
    pub flag: bool,
}

/// Largest max-norm distance from `center` to the vertices of the triangle
/// `0 <= xi <= x <= l`.
pub fn reach(center: (f64, f64), l: f64) -> f64 {
    [(0.0, 0.0), (l, 0.0), (l, l)]
        .iter()
        .map(|&(x, xi)| (x - center.0).abs().max((xi - center.1).abs()))
        .fold(0.0, f64::max)
}

pub fn divergence_diagnostic(s: &TriSeries, l: f64) -> Result<Divergence> {
    let n = s.order();
    if n < 10 {
        return Err(Error::Order(format!(
            "divergence diagnostic needs order >= 10, got {n}"
        )));
    }
    let pts: Vec<(f64, f64)> = (n / 2..=n)
        .filter_map(|i| {
            let m = (0..=i).map(|j| s.coeff(i, j).abs()).fold(0.0, f64::max);
            (m > 0.0).then(|| (i as f64, m.ln()))
        })
        .collect();
    let reach = reach(s.center(), l);
    if pts.len() < 2 {
        // finitely many nonzero degrees: a polynomial
        return Ok(Divergence {
            growth_rate: 0.0,
            reach,
            flag: false,
        });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let growth_rate = (sxy / sxx).exp();
    Ok(Divergence {
        growth_rate,
        reach,
        flag: growth_rate * reach > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triseries::indices;

    #[test]
    fn geometric_series_rate() {
        // K_ij = 2^i on the origin triangle with L = 1: flagged
        let n = 20;
        let mut s = TriSeries::zeros(n, (0.0, 0.0));
        for (i, j) in indices(n) {
            s.set(i, j, 2f64.powi(i as i32));
        }
        let d = divergence_diagnostic(&s, 1.0).unwrap();
        assert!((d.growth_rate - 2.0).abs() < 1e-12);
        assert!(d.flag);
        let mut t = s.clone();
        for (i, j) in indices(n) {
            t.set(i, j, 0.5f64.powi(i as i32));
        }
        assert!(!divergence_diagnostic(&t, 1.0).unwrap().flag);
    }

    #[test]
    fn reach_of_shifted_center() {
        assert_eq!(reach((0.0, 0.0), 1.0), 1.0);
        assert!((reach((0.5, 0.7), 1.0) - 0.7).abs() < 1e-15);
        assert!(divergence_diagnostic(&TriSeries::zeros(9, (0.0, 0.0)), 1.0).is_err());
    }
}
