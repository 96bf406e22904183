//! Sparse linear system container and solver.
//!
//! Rows are appended block by block with a provenance tag. Square systems are
//! solved with a sparse LU factorization (faer, partial pivoting with a
//! fill-reducing column ordering) plus a few refinement steps. The LU answer
//! is kept when its residual is below max(tol, sqrt(tol)). Otherwise, and for
//! non-square systems, a minimum-norm least-squares solve through a dense thin
//! SVD runs and the smaller residual wins.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use faer::prelude::*;
use faer::sparse::Triplet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMat;

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Iterative refinement steps after the LU solve.
const REFINEMENT_STEPS: usize = 3;

/// Largest unknown count handled by the dense least-squares fallback.
pub const DENSE_FALLBACK_LIMIT: usize = 4000;

/// Where a row came from: the constraint block and the row index inside it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowTag {
    pub block: String,
    pub index: usize,
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.block, self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    cols: Vec<usize>,
    vals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    n_unknowns: usize,
    rows: Vec<Row>,
    rhs: Vec<f64>,
    tags: Vec<RowTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovedRow {
    pub tag: RowTag,
    /// Tag of the earlier row it duplicated, when removed as a duplicate.
    pub duplicate_of: Option<RowTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    SparseLu,
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub coeffs: Vec<f64>,
    /// `‖A x - b‖ / max(‖b‖, 1)`.
    pub residual: f64,
    pub rank_deficient: bool,
    pub method: SolveMethod,
}

impl SparseSystem {
    pub fn new(n_unknowns: usize) -> Self {
        SparseSystem {
            n_unknowns,
            rows: Vec::new(),
            rhs: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_unknowns
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn tags(&self) -> &[RowTag] {
        &self.tags
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.vals.len()).sum()
    }

    pub fn row(&self, k: usize) -> (&[usize], &[f64]) {
        (&self.rows[k].cols, &self.rows[k].vals)
    }

    /// Appends every row of `block` (which must have `n_unknowns` columns).
    /// Row `k` of the block is tagged `(tag, k)`.
    pub fn append_block(&mut self, block: &SparseMat, rhs: &[f64], tag: &str) -> Result<()> {
        if block.ncols() != self.n_unknowns {
            return Err(Error::DimensionMismatch(format!(
                "block \"{tag}\" has {} columns, system has {} unknowns",
                block.ncols(),
                self.n_unknowns
            )));
        }
        if rhs.len() != block.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "block \"{tag}\" has {} rows but {} right-hand-side entries",
                block.nrows(),
                rhs.len()
            )));
        }
        for k in 0..block.nrows() {
            let (cols, vals) = block.row(k);
            self.rows.push(Row {
                cols: cols.to_vec(),
                vals: vals.to_vec(),
            });
            self.tags.push(RowTag {
                block: tag.to_string(),
                index: k,
            });
        }
        self.rhs.extend_from_slice(rhs);
        Ok(())
    }

    /// Removes rows that are bit-identical (pattern, values and rhs) to an
    /// earlier row. Returns what was removed, in row order.
    pub fn dedup_rows(&mut self) -> Vec<RemovedRow> {
        type Key = (Vec<usize>, Vec<u64>, u64);
        let mut seen: HashMap<Key, usize> = HashMap::new();
        let mut keep = Vec::with_capacity(self.rows.len());
        let mut removed = Vec::new();
        for k in 0..self.rows.len() {
            let row = &self.rows[k];
            let key: Key = (
                row.cols.clone(),
                row.vals.iter().map(|v| v.to_bits()).collect(),
                self.rhs[k].to_bits(),
            );
            match seen.get(&key) {
                Some(&first) => {
                    keep.push(false);
                    removed.push(RemovedRow {
                        tag: self.tags[k].clone(),
                        duplicate_of: Some(self.tags[first].clone()),
                    });
                }
                None => {
                    seen.insert(key, k);
                    keep.push(true);
                }
            }
        }
        self.retain(&keep);
        removed
    }

    /// Removes the rows carrying the given tags; returns how many were found.
    pub fn remove_tagged(&mut self, tags: &[RowTag]) -> usize {
        let keep: Vec<bool> = self.tags.iter().map(|t| !tags.contains(t)).collect();
        let before = self.rows.len();
        self.retain(&keep);
        before - self.rows.len()
    }

    fn retain(&mut self, keep: &[bool]) {
        let mut k = 0;
        self.rows.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        k = 0;
        self.rhs.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        k = 0;
        self.tags.retain(|_| {
            k += 1;
            keep[k - 1]
        });
    }

    /// Fraction of zero entries of the system matrix.
    pub fn sparsity(&self) -> f64 {
        let total = self.rows.len() * self.n_unknowns;
        if total == 0 {
            return 1.0;
        }
        1.0 - self.nnz() as f64 / total as f64
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.cols.iter().zip(&r.vals).map(|(&c, &v)| v * x[c]).sum())
            .collect()
    }

    /// Per-row residuals `A x - b`.
    pub fn row_residuals(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x)
            .into_iter()
            .zip(&self.rhs)
            .map(|(ax, b)| ax - b)
            .collect()
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let r = norm(&self.row_residuals(x));
        r / norm(&self.rhs).max(1.0)
    }

    pub fn solve(&self, tol: f64) -> Result<Solution> {
        let m = self.rows.len();
        let n = self.n_unknowns;
        if n == 0 {
            return Ok(Solution {
                coeffs: Vec::new(),
                residual: norm(&self.rhs) / norm(&self.rhs).max(1.0),
                rank_deficient: false,
                method: SolveMethod::SparseLu,
            });
        }
        // A successful factorization is kept as is when its residual is within
        // `sqrt(tol)` (regular but ill-conditioned systems); beyond that the
        // least-squares solve is tried and the smaller residual wins.
        let mut lu = None;
        if m == n {
            if let Some(x) = self.sparse_lu(&self.rhs) {
                let residual = self.relative_residual(&x);
                if residual.is_finite() {
                    if residual <= tol.max(tol.sqrt()) {
                        return Ok(Solution {
                            coeffs: x,
                            residual,
                            rank_deficient: false,
                            method: SolveMethod::SparseLu,
                        });
                    }
                    lu = Some((x, residual));
                }
            }
        }
        let lu_solution = |(coeffs, residual): (Vec<f64>, f64)| Solution {
            coeffs,
            residual,
            rank_deficient: false,
            method: SolveMethod::SparseLu,
        };
        if n > DENSE_FALLBACK_LIMIT || m > 4 * DENSE_FALLBACK_LIMIT {
            return lu.map(lu_solution).ok_or_else(|| self.singular(None));
        }
        let (x, rank) = self.min_norm_lstsq()?;
        let residual = self.relative_residual(&x);
        if let Some(lu) = lu {
            if !(residual < lu.1) {
                return Ok(lu_solution(lu));
            }
        } else if m == n && !(residual <= tol) {
            return Err(self.singular(Some(&x)));
        }
        Ok(Solution {
            coeffs: x,
            residual,
            rank_deficient: rank < n,
            method: SolveMethod::LeastSquares,
        })
    }

    fn singular(&self, x: Option<&[f64]>) -> Error {
        let Some(x) = x else {
            return Error::SingularSystem {
                residual: f64::INFINITY,
                worst_rows: Vec::new(),
            };
        };
        let res = self.row_residuals(x);
        let mut order: Vec<usize> = (0..res.len()).collect();
        order.sort_by(|&a, &b| res[b].abs().total_cmp(&res[a].abs()));
        Error::SingularSystem {
            residual: self.relative_residual(x),
            worst_rows: order
                .iter()
                .take(5)
                .map(|&k| self.tags[k].to_string())
                .collect(),
        }
    }

    fn faer_triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for (r, row) in self.rows.iter().enumerate() {
            for (&c, &v) in row.cols.iter().zip(&row.vals) {
                t.push(Triplet::new(r, c, v));
            }
        }
        t
    }

    /// LU solve followed by a few steps of iterative refinement.
    fn sparse_lu(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n_unknowns;
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &self.faer_triplets()).ok()?;
        let lu = a.sp_lu().ok()?;
        let solve = |r: &[f64]| -> Vec<f64> {
            let rhs = Mat::from_fn(n, 1, |i, _| r[i]);
            let x = lu.solve(&rhs);
            (0..n).map(|i| x[(i, 0)]).collect()
        };
        let mut x = solve(b);
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut best = norm(&self.row_residuals(&x));
        for _ in 0..REFINEMENT_STEPS {
            let r = self.row_residuals(&x);
            let dx = solve(&r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - d).collect();
            let res = norm(&self.row_residuals(&cand));
            if !(res < best) {
                break;
            }
            best = res;
            x = cand;
        }
        Some(x)
    }

    /// Minimum-norm least squares; returns the solution and the numerical rank.
    fn min_norm_lstsq(&self) -> Result<(Vec<f64>, usize)> {
        let m = self.rows.len();
        let n = self.n_unknowns;
        let mut a = Mat::<f64>::zeros(m, n);
        for (r, row) in self.rows.iter().enumerate() {
            for (&c, &v) in row.cols.iter().zip(&row.vals) {
                a[(r, c)] = v;
            }
        }
        let svd = a
            .thin_svd()
            .map_err(|e| Error::SingularSystem {
                residual: f64::INFINITY,
                worst_rows: vec![format!("svd failed: {e:?}")],
            })?;
        let u = svd.U();
        let v = svd.V();
        let s = svd.S().column_vector();
        let k = s.nrows();
        let smax = (0..k).map(|i| s[i].abs()).fold(0.0, f64::max);
        let cutoff = smax * (m.max(n) as f64) * f64::EPSILON;
        let mut x = vec![0.0; n];
        let mut rank = 0;
        for i in 0..k {
            if s[i] <= cutoff || s[i] == 0.0 {
                continue;
            }
            rank += 1;
            let coef: f64 = (0..m).map(|r| u[(r, i)] * self.rhs[r]).sum::<f64>() / s[i];
            for (c, xc) in x.iter_mut().enumerate() {
                *xc += coef * v[(c, i)];
            }
        }
        Ok((x, rank))
    }

    /// Writes `A` in Matrix Market coordinate format and `b` in array format.
    pub fn write_matrix_market<W1: Write, W2: Write>(&self, mut a: W1, mut b: W2) -> Result<()> {
        writeln!(a, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(a, "{} {} {}", self.rows.len(), self.n_unknowns, self.nnz())?;
        for (r, row) in self.rows.iter().enumerate() {
            for (&c, &v) in row.cols.iter().zip(&row.vals) {
                writeln!(a, "{} {} {}", r + 1, c + 1, v)?;
            }
        }
        writeln!(b, "%%MatrixMarket matrix array real general")?;
        writeln!(b, "{} 1", self.rhs.len())?;
        for v in &self.rhs {
            writeln!(b, "{v}")?;
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
