//! Truncated bivariate power series on the triangular index set and the
//! sparse transformation matrices acting on their coefficient vectors.
//!
//! A series of order `N` stores `K_ij` for `0 <= j <= i <= N`, the
//! coefficient of `(x - x0)^(i-j) (xi - xi0)^j`, in graded order
//! `K_00, K_10, K_11, K_20, ...`. The 1-based position of `K_ij` is
//! [`idx_m`]`(i, j)` and a series of order `N` has [`idx_l`]`(N)` entries.
//!
//! Operators are stored as `target x source` matrices so that applying one is
//! an ordinary matrix-vector product. [`OpMatrix::paper_triplets`] reports the
//! transposed (row-vector, `κ R`) orientation with 1-based indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMat;
use crate::taylor::UniSeries;

/// Number of coefficients of a series of order `i`: `(i+1)(i+2)/2`.
/// `idx_l(-1) = 0`.
pub fn idx_l(i: i64) -> usize {
    assert!(i >= -1, "idx_l is defined for i >= -1");
    ((i + 1) * (i + 2) / 2) as usize
}

/// 1-based position of `K_ij` in the coefficient vector.
pub fn idx_m(i: i64, j: i64) -> Result<usize> {
    if j < 0 || j > i {
        return Err(Error::Index { i, j });
    }
    Ok(idx_l(i - 1) + j as usize + 1)
}

/// 0-based position of `K_ij`.
#[inline]
pub(crate) fn pos(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

#[inline]
pub(crate) fn len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Iterates `(i, j)` in storage order for a series of the given order.
pub fn indices(order: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=order).flat_map(|i| (0..=i).map(move |j| (i, j)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriSeries {
    order: usize,
    center: (f64, f64),
    coeffs: Vec<f64>,
}

impl TriSeries {
    pub fn new(order: usize, center: (f64, f64), coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != len(order) {
            return Err(Error::DimensionMismatch(format!(
                "order {order} needs {} coefficients, got {}",
                len(order),
                coeffs.len()
            )));
        }
        Ok(TriSeries {
            order,
            center,
            coeffs,
        })
    }

    pub fn zeros(order: usize, center: (f64, f64)) -> Self {
        TriSeries {
            order,
            center,
            coeffs: vec![0.0; len(order)],
        }
    }

    /// Builds a series from `(i, j, K_ij)` entries; unspecified entries are 0.
    pub fn from_terms(order: usize, center: (f64, f64), terms: &[(usize, usize, f64)]) -> Self {
        let mut s = Self::zeros(order, center);
        for &(i, j, v) in terms {
            s.set(i, j, v);
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if j > i || i > self.order {
            0.0
        } else {
            self.coeffs[pos(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j <= i && i <= self.order, "K_{i}{j} outside order {}", self.order);
        self.coeffs[pos(i, j)] = v;
    }

    /// Largest coefficient magnitude, or 0 for the zero series.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn truncate(&self, r: usize) -> Result<TriSeries> {
        if r > self.order {
            return Err(Error::Order(format!(
                "cannot truncate order {} to {r}",
                self.order
            )));
        }
        Ok(TriSeries {
            order: r,
            center: self.center,
            coeffs: self.coeffs[..len(r)].to_vec(),
        })
    }

    /// Evaluates at global coordinates `(x, xi)`.
    ///
    /// Horner in `x - x0` along each `j` column, then Horner in `xi - xi0`
    /// across columns.
    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        let dx = x - self.center.0;
        let dxi = xi - self.center.1;
        let mut acc = 0.0;
        for j in (0..=self.order).rev() {
            let mut col = 0.0;
            for i in (j..=self.order).rev() {
                col = col * dx + self.coeffs[pos(i, j)];
            }
            acc = acc * dxi + col;
        }
        acc
    }

    /// Exact partial derivative `∂x^p ∂xi^q`, as a series of order
    /// `N - p - q` (the zero series of order 0 when `p + q > N`).
    pub fn partial(&self, p: usize, q: usize) -> TriSeries {
        if p + q > self.order {
            return TriSeries::zeros(0, self.center);
        }
        let order = self.order - p - q;
        let mut out = TriSeries::zeros(order, self.center);
        for (i, j) in indices(order) {
            // target x^(i-j) xi^j comes from x^(i-j+p) xi^(j+q)
            let src = self.coeff(i + p + q, j + q);
            let fx: f64 = ((i - j + 1)..=(i - j + p)).map(|k| k as f64).product();
            let fxi: f64 = ((j + 1)..=(j + q)).map(|k| k as f64).product();
            out.coeffs[pos(i, j)] = src * fx * fxi;
        }
        out
    }

    pub fn apply(&self, op: &OpMatrix) -> Vec<f64> {
        op.apply(&self.coeffs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    DerivativeX,
    DerivativeXi,
    DerivativeXx,
    DerivativeXiXi,
    DerivativeXXi,
    MulXi,
    MulX,
    Trace,
    Truncate,
    UniDerivative,
    UniMul,
    Composite,
}

/// Which second-order derivative [`build_second_order`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondOrder {
    Xx,
    XiXi,
    XXi,
}

/// Sparse linear operator on coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OpMatrix {
    kind: OpKind,
    mat: SparseMat,
}

impl OpMatrix {
    pub(crate) fn new(kind: OpKind, mat: SparseMat) -> Self {
        OpMatrix { kind, mat }
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    /// Length of the coefficient vectors this operator accepts.
    pub fn source_len(&self) -> usize {
        self.mat.ncols()
    }

    /// Length of the coefficient vectors it produces.
    pub fn target_len(&self) -> usize {
        self.mat.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn matrix(&self) -> &SparseMat {
        &self.mat
    }

    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        self.mat.apply(coeffs)
    }

    /// Operator that applies `self` first and then `next`.
    pub fn then(&self, next: &OpMatrix) -> Result<OpMatrix> {
        if next.source_len() != self.target_len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot chain {:?} (out {}) into {:?} (in {})",
                self.kind,
                self.target_len(),
                next.kind,
                next.source_len()
            )));
        }
        Ok(OpMatrix::new(OpKind::Composite, next.mat.matmul(&self.mat)))
    }

    /// Entries in row-vector orientation (`κ R`): row = source position,
    /// column = target position, both 1-based.
    pub fn paper_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t: Vec<_> = self
            .mat
            .triplets()
            .map(|(target, source, v)| (source + 1, target + 1, v))
            .collect();
        t.sort_by_key(|&(r, c, _)| (c, r));
        t
    }
}

fn need_order(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        Err(Error::Order(format!("{what} needs order >= {min}, got {n}")))
    } else {
        Ok(())
    }
}

/// `∂/∂x` on series of order `n`; `l(n) x l(n)` with the top degree mapped to 0.
pub fn build_dx(n: usize) -> Result<OpMatrix> {
    need_order(n, 1, "build_dx")?;
    let t = indices(n - 1).map(|(i, j)| (pos(i, j), pos(i + 1, j), (i - j + 1) as f64));
    Ok(OpMatrix::new(
        OpKind::DerivativeX,
        SparseMat::from_triplets(len(n), len(n), t),
    ))
}

/// `∂/∂xi` on series of order `n`.
pub fn build_dxi(n: usize) -> Result<OpMatrix> {
    need_order(n, 1, "build_dxi")?;
    let t = indices(n - 1).map(|(i, j)| (pos(i, j), pos(i + 1, j + 1), (j + 1) as f64));
    Ok(OpMatrix::new(
        OpKind::DerivativeXi,
        SparseMat::from_triplets(len(n), len(n), t),
    ))
}

/// Second-order derivative mapping order `n` to order `n - 2`: the
/// composition of two first-order matrices restricted to the first
/// `l(n - 2)` targets.
pub fn build_second_order(n: usize, which: SecondOrder) -> Result<OpMatrix> {
    need_order(n, 2, "build_second_order")?;
    let dx = build_dx(n)?;
    let dxi = build_dxi(n)?;
    let (first, second, kind) = match which {
        SecondOrder::Xx => (&dx, &dx, OpKind::DerivativeXx),
        SecondOrder::XiXi => (&dxi, &dxi, OpKind::DerivativeXiXi),
        SecondOrder::XXi => (&dx, &dxi, OpKind::DerivativeXXi),
    };
    let full = second.mat.matmul(&first.mat);
    Ok(OpMatrix::new(kind, full.top_rows(len(n - 2))))
}

/// First- or second-order derivative `∂x^p ∂xi^q` from order `n` to order
/// `n - p - q`; the identity when `p = q = 0`.
pub fn build_derivative(n: usize, p: usize, q: usize) -> Result<OpMatrix> {
    match (p, q) {
        (0, 0) => Ok(OpMatrix::new(OpKind::Truncate, SparseMat::identity(len(n)))),
        (1, 0) => Ok(OpMatrix::new(
            OpKind::DerivativeX,
            build_dx(n)?.mat.top_rows(len(n - 1)),
        )),
        (0, 1) => Ok(OpMatrix::new(
            OpKind::DerivativeXi,
            build_dxi(n)?.mat.top_rows(len(n - 1)),
        )),
        (2, 0) => build_second_order(n, SecondOrder::Xx),
        (0, 2) => build_second_order(n, SecondOrder::XiXi),
        (1, 1) => build_second_order(n, SecondOrder::XXi),
        _ => Err(Error::Order(format!(
            "derivative order ({p}, {q}) exceeds 2"
        ))),
    }
}

/// Keeps the first `l(r)` coefficients of an order-`n` series.
pub fn build_truncate(n: usize, r: usize) -> Result<OpMatrix> {
    if r > n {
        return Err(Error::Order(format!("cannot truncate order {n} to {r}")));
    }
    Ok(OpMatrix::new(
        OpKind::Truncate,
        SparseMat::from_triplets(len(r), len(n), (0..len(r)).map(|k| (k, k, 1.0))),
    ))
}

fn check_series_center(s: &UniSeries, expected: f64) -> Result<()> {
    if s.center() != expected {
        return Err(Error::CenterMismatch {
            left: s.center(),
            right: expected,
        });
    }
    Ok(())
}

/// Multiplication by `lam(xi)` (expanded about `xi_center`), from order `n`
/// to order `out_order`: target `(i, j)` collects `lam_q K_(i-q)(j-q)`.
/// Coefficients of `lam` beyond its order are taken as zero.
pub fn build_mul_xi(
    lam: &UniSeries,
    xi_center: f64,
    n: usize,
    out_order: usize,
) -> Result<OpMatrix> {
    check_series_center(lam, xi_center)?;
    if out_order > n {
        return Err(Error::Order(format!(
            "output order {out_order} exceeds input order {n}"
        )));
    }
    let mut t = Vec::new();
    for (i, j) in indices(out_order) {
        for q in 0..=j.min(lam.order()) {
            t.push((pos(i, j), pos(i - q, j - q), lam.coeff(q)));
        }
    }
    Ok(OpMatrix::new(
        OpKind::MulXi,
        SparseMat::from_triplets(len(out_order), len(n), t),
    ))
}

/// Multiplication by `a(x)` (expanded about `x_center`): target `(i, j)`
/// collects `a_q K_(i-q)j` for `q <= i - j`.
pub fn build_mul_x(a: &UniSeries, x_center: f64, n: usize, out_order: usize) -> Result<OpMatrix> {
    check_series_center(a, x_center)?;
    if out_order > n {
        return Err(Error::Order(format!(
            "output order {out_order} exceeds input order {n}"
        )));
    }
    let mut t = Vec::new();
    for (i, j) in indices(out_order) {
        for q in 0..=(i - j).min(a.order()) {
            t.push((pos(i, j), pos(i - q, j), a.coeff(q)));
        }
    }
    Ok(OpMatrix::new(
        OpKind::MulX,
        SparseMat::from_triplets(len(out_order), len(n), t),
    ))
}

fn binomial_row(j: usize) -> Vec<f64> {
    // C(j, r) built multiplicatively
    let mut row = Vec::with_capacity(j + 1);
    let mut c = 1.0;
    for r in 0..=j {
        row.push(c);
        c = c * (j - r) as f64 / (r + 1) as f64;
    }
    row
}

/// Trace on the line `xi = alpha x + gamma` (local coordinates): maps an
/// order-`n` series to the `n + 1` coefficients of `K(x, alpha x + gamma)`
/// in powers of `x`, truncated to degree `n`.
pub fn build_trace(alpha: f64, gamma: f64, n: usize) -> OpMatrix {
    let mut t = Vec::new();
    for (i, j) in indices(n) {
        let binom = binomial_row(j);
        // x^(i-j) (alpha x + gamma)^j = Σ_r C(j,r) alpha^r gamma^(j-r) x^(i-j+r)
        for (r, c) in binom.iter().enumerate() {
            let v = c * alpha.powi(r as i32) * gamma.powi((j - r) as i32);
            t.push((i - j + r, pos(i, j), v));
        }
    }
    OpMatrix::new(OpKind::Trace, SparseMat::from_triplets(n + 1, len(n), t))
}

/// `d/dx` on univariate coefficient vectors of length `n + 1`; the top degree
/// maps to zero.
pub fn build_uni_derivative(n: usize) -> Result<OpMatrix> {
    need_order(n, 1, "build_uni_derivative")?;
    let t = (1..=n).map(|i| (i - 1, i, i as f64));
    Ok(OpMatrix::new(
        OpKind::UniDerivative,
        SparseMat::from_triplets(n + 1, n + 1, t),
    ))
}

/// Product with `c(x)` on univariate coefficient vectors, from degree `n` to
/// degree `out_order`.
pub fn build_uni_mul(c: &UniSeries, x_center: f64, n: usize, out_order: usize) -> Result<OpMatrix> {
    check_series_center(c, x_center)?;
    let mut t = Vec::new();
    for d in 0..=out_order {
        for q in 0..=d.min(c.order()) {
            if d - q <= n {
                t.push((d, d - q, c.coeff(q)));
            }
        }
    }
    Ok(OpMatrix::new(
        OpKind::UniMul,
        SparseMat::from_triplets(out_order + 1, n + 1, t),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(c: &[f64]) -> UniSeries {
        UniSeries::new(0.0, c.to_vec()).unwrap()
    }

    fn series(order: usize, terms: &[(usize, usize, f64)]) -> TriSeries {
        TriSeries::from_terms(order, (0.0, 0.0), terms)
    }

    fn as_series(order: usize, coeffs: Vec<f64>) -> TriSeries {
        TriSeries::new(order, (0.0, 0.0), coeffs).unwrap()
    }

    #[test]
    fn index_maps() {
        assert_eq!(idx_l(-1), 0);
        assert_eq!(idx_l(3), 10);
        assert_eq!(idx_l(100), 5151);
        assert_eq!(idx_m(0, 0).unwrap(), 1);
        assert_eq!(idx_m(2, 1).unwrap(), 5);
        assert_eq!(idx_m(7, 7).unwrap(), idx_l(7));
        assert!(matches!(idx_m(1, 2), Err(Error::Index { .. })));
        assert!(matches!(idx_m(1, -1), Err(Error::Index { .. })));
        for (i, j) in indices(9) {
            assert_eq!(idx_m(i as i64, j as i64).unwrap(), pos(i, j) + 1);
        }
    }

    #[test]
    fn truncation() {
        let s = series(3, &[(0, 0, 2.0), (2, 1, 1.0), (3, 1, 5.0)]);
        assert_eq!(s.truncate(3).unwrap(), s);
        let c = s.truncate(0).unwrap();
        assert_eq!(c.coeffs(), &[2.0]);
        // x^2 xi has total degree 3
        let t = series(3, &[(3, 1, 1.0)]).truncate(2).unwrap();
        assert!(t.coeffs().iter().all(|&v| v == 0.0));
        assert!(s.truncate(4).is_err());
    }

    #[test]
    fn evaluation() {
        let xy = series(2, &[(2, 1, 1.0)]);
        assert_eq!(xy.eval(2.0, 3.0), 6.0);
        let shifted = TriSeries::from_terms(2, (1.0, -1.0), &[(0, 0, 4.0), (2, 1, 1.0)]);
        assert_eq!(shifted.eval(1.0, -1.0), 4.0);
        assert_eq!(shifted.eval(3.0, 2.0), 4.0 + 2.0 * 3.0);
        // constant-lambda example, order 3
        let k = series(3, &[(1, 1, -3.0), (3, 1, -2.25), (3, 3, 2.25)]);
        assert!((k.eval(1.0, 0.5) - (-2.34375)).abs() < 1e-15);
    }

    #[test]
    fn dx_examples() {
        let d = build_dx(3).unwrap();
        // x^2 xi -> 2 x xi
        let out = as_series(3, series(3, &[(3, 1, 1.0)]).apply(&d));
        assert_eq!(out, series(3, &[(2, 1, 2.0)]));
        let pure_xi = series(3, &[(1, 1, 1.0), (3, 3, 2.0)]);
        assert!(pure_xi.apply(&d).iter().all(|&v| v == 0.0));
        for n in 1..12 {
            assert_eq!(build_dx(n).unwrap().nnz(), idx_l(n as i64 - 1));
            assert_eq!(build_dxi(n).unwrap().nnz(), idx_l(n as i64 - 1));
        }
        assert!(build_dx(0).is_err());
    }

    #[test]
    fn dxi_examples() {
        let d = build_dxi(3).unwrap();
        // x xi^2 -> 2 x xi
        let out = as_series(3, series(3, &[(3, 2, 1.0)]).apply(&d));
        assert_eq!(out, series(3, &[(2, 1, 2.0)]));
        let pure_x = series(3, &[(1, 0, 1.0), (3, 0, 2.0)]);
        assert!(pure_x.apply(&d).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mixed_partials_commute() {
        let n = 8;
        let dx = build_dx(n).unwrap();
        let dxi = build_dxi(n).unwrap();
        let a = dx.then(&dxi).unwrap();
        let b = dxi.then(&dx).unwrap();
        let keep = idx_l(n as i64 - 2);
        for r in 0..keep {
            for c in 0..len(n) {
                assert_eq!(a.matrix().get(r, c), b.matrix().get(r, c));
            }
        }
    }

    #[test]
    fn second_order_examples() {
        let n = 4;
        let xx = build_second_order(n, SecondOrder::Xx).unwrap();
        let xixi = build_second_order(n, SecondOrder::XiXi).unwrap();
        assert_eq!(xx.source_len(), idx_l(4));
        assert_eq!(xx.target_len(), idx_l(2));
        // x^2 -> 2
        let x2 = series(n, &[(2, 0, 1.0)]);
        assert_eq!(as_series(2, x2.apply(&xx)), series(2, &[(0, 0, 2.0)]));
        // d_xixi(x^2 xi) = 0
        assert!(series(n, &[(3, 1, 1.0)]).apply(&xixi).iter().all(|&v| v == 0.0));
        // wave operator kills x^2 + xi^2
        let w = series(n, &[(2, 0, 1.0), (2, 2, 1.0)]);
        let lhs: Vec<f64> = w
            .apply(&xx)
            .iter()
            .zip(w.apply(&xixi))
            .map(|(a, b)| a - b)
            .collect();
        assert!(lhs.iter().all(|&v| v == 0.0));
        // mixed: d_x d_xi (x^2 xi) = 2x
        let xxi = build_second_order(n, SecondOrder::XXi).unwrap();
        assert_eq!(
            as_series(2, series(n, &[(3, 1, 1.0)]).apply(&xxi)),
            series(2, &[(1, 0, 2.0)])
        );
        assert!(build_second_order(1, SecondOrder::Xx).is_err());
    }

    #[test]
    fn mul_xi_examples() {
        let lam_xi = uni(&[0.0, 1.0]);
        let h = build_mul_xi(&lam_xi, 0.0, 2, 2).unwrap();
        assert_eq!(
            as_series(2, series(2, &[(0, 0, 1.0)]).apply(&h)),
            series(2, &[(1, 1, 1.0)])
        );
        let c = build_mul_xi(&uni(&[2.5]), 0.0, 3, 1).unwrap();
        let t = build_truncate(3, 1).unwrap();
        assert_eq!(c.matrix(), &t.matrix().scaled(2.5));
        let six = build_mul_xi(&uni(&[6.0]), 0.0, 1, 1).unwrap();
        assert_eq!(
            as_series(1, series(1, &[(1, 1, 1.0)]).apply(&six)),
            series(1, &[(1, 1, 6.0)])
        );
        assert!(matches!(
            build_mul_xi(&uni(&[1.0]), 0.5, 2, 2),
            Err(Error::CenterMismatch { .. })
        ));
        assert!(build_mul_xi(&uni(&[1.0]), 0.0, 2, 3).is_err());
    }

    #[test]
    fn mul_x_examples() {
        let h = build_mul_x(&uni(&[0.0, 1.0]), 0.0, 2, 2).unwrap();
        assert_eq!(
            as_series(2, series(2, &[(1, 1, 1.0)]).apply(&h)),
            series(2, &[(2, 1, 1.0)])
        );
        let one = build_mul_x(&uni(&[1.0]), 0.0, 3, 2).unwrap();
        assert_eq!(one.matrix(), build_truncate(3, 2).unwrap().matrix());
        let x2 = build_mul_x(&uni(&[0.0, 0.0, 1.0]), 0.0, 3, 3).unwrap();
        assert_eq!(
            as_series(3, series(3, &[(1, 0, 1.0)]).apply(&x2)),
            series(3, &[(3, 0, 1.0)])
        );
    }

    #[test]
    fn trace_examples() {
        let diag = build_trace(1.0, 0.0, 2);
        assert_eq!(series(2, &[(2, 1, 1.0)]).apply(&diag), vec![0.0, 0.0, 1.0]);
        let s = series(3, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 3.0), (3, 0, 4.0), (3, 2, 5.0)]);
        assert_eq!(s.apply(&build_trace(0.0, 0.0, 3)), vec![1.0, 2.0, 0.0, 4.0]);
        let xi2 = series(2, &[(2, 2, 1.0)]);
        let v = xi2.apply(&build_trace(0.0, -0.7, 2));
        assert!((v[0] - 0.49).abs() < 1e-15 && v[1] == 0.0 && v[2] == 0.0);
        for n in 0..10 {
            assert_eq!(build_trace(0.6, 0.0, n).nnz(), len(n));
        }
    }

    #[test]
    fn trace_gamma_zero_reduces_to_power_pattern() {
        let n = 5;
        let alpha: f64 = 0.8;
        let p = build_trace(alpha, 0.0, n);
        for (i, j) in indices(n) {
            assert_eq!(p.matrix().get(i, pos(i, j)), alpha.powi(j as i32));
        }
    }

    #[test]
    fn uni_derivative_examples() {
        let d = build_uni_derivative(2).unwrap();
        assert_eq!(d.apply(&[0.0, 0.0, 1.0]), vec![0.0, 2.0, 0.0]);
        assert_eq!(d.apply(&[3.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        assert!(build_uni_derivative(0).is_err());
    }

    #[test]
    fn uni_mul_is_cauchy_product() {
        let m = build_uni_mul(&uni(&[1.0, 2.0]), 0.0, 2, 2).unwrap();
        // (1 + 2x)(1 + x + x^2) = 1 + 3x + 3x^2 + ...
        assert_eq!(m.apply(&[1.0, 1.0, 1.0]), vec![1.0, 3.0, 3.0]);
    }

    #[test]
    fn partial_derivatives_of_series() {
        let s = series(4, &[(3, 1, 1.0), (4, 2, 2.0)]);
        // d_x (x^2 xi + 2 x^2 xi^2) = 2 x xi + 4 x xi^2
        assert_eq!(s.partial(1, 0), series(3, &[(2, 1, 2.0), (3, 2, 4.0)]));
        // d_xi d_xi = 4 x^2
        assert_eq!(s.partial(0, 2), series(2, &[(2, 0, 4.0)]));
        assert_eq!(s.partial(3, 2), TriSeries::zeros(0, (0.0, 0.0)));
    }
}
