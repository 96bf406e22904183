//! Degree-by-degree recursion for the origin-centered reaction-diffusion
//! kernel `K_xx - K_xi_xi = lam(xi) K`, `K(x, x) = -1/2 ∫_0^x lam`,
//! `K(x, 0) = 0`. Shares no code with the matrix path.
//!
//! At degree `i`: `K_i0 = 0`; for `j = 0..=i-2`
//! `(j+2)(j+1) K_i(j+2) = (i-j)(i-j-1) K_ij - B_(i-2)j` with
//! `B_ij = Σ_q lam_q K_(i-q)(j-q)`; the even-`j` chain starts from `K_i0`,
//! the odd chain is linear in `K_i1`, which is fixed by
//! `Σ_j K_ij = -lam_(i-1) / (2i)`.

use crate::error::{Error, Result};
use crate::taylor::UniSeries;
use crate::triseries::TriSeries;

/// Coefficient vector (storage order) of the kernel of order `n`. `lam` is
/// the full reaction coefficient, i.e. `(lambda + c) / eps` for the
/// parameterized problem, expanded about 0.
pub fn recursion_oracle_ex1(lam: &UniSeries, n: usize) -> Result<Vec<f64>> {
    recursion_oracle_series(lam, n).map(|s| s.coeffs().to_vec())
}

pub fn recursion_oracle_series(lam: &UniSeries, n: usize) -> Result<TriSeries> {
    if lam.center() != 0.0 {
        return Err(Error::CenterMismatch {
            left: lam.center(),
            right: 0.0,
        });
    }
    let mut k = TriSeries::zeros(n, (0.0, 0.0));
    for i in 1..=n {
        // B_(i-2)j for j = 0..=i-2, from lower degrees only
        let b = |k: &TriSeries, j: usize| -> f64 {
            (0..=j).map(|q| lam.coeff(q) * k.coeff(i - 2 - q, j - q)).sum()
        };
        // K_ij = p[j] + s[j] * K_i1
        let mut p = vec![0.0; i + 1];
        let mut s = vec![0.0; i + 1];
        if i >= 1 {
            s[1] = 1.0;
        }
        for j in 0..i.saturating_sub(1) {
            let f = ((i - j) * (i - j - 1)) as f64;
            let d = ((j + 2) * (j + 1)) as f64;
            let bij = b(&k, j);
            p[j + 2] = (f * p[j] - bij) / d;
            s[j + 2] = f * s[j] / d;
        }
        let target = -lam.coeff(i - 1) / (2.0 * i as f64);
        let ps: f64 = p.iter().sum();
        let ss: f64 = s.iter().sum();
        let k1 = (target - ps) / ss;
        for j in 0..=i {
            k.set(i, j, p[j] + s[j] * k1);
        }
    }
    Ok(k)
}
