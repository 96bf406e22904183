//! Minimal compressed-sparse-row matrix used for the operator algebra.
//!
//! Entries that are exactly zero are never stored, so `nnz` counts
//! structurally meaningful coefficients only.

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMat {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Assembles from `(row, col, value)` triplets, summing repeated
    /// positions and dropping exact zeros.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            rows[r].push((c, v));
        }
        Self::from_row_lists(nrows, ncols, rows)
    }

    fn from_row_lists(nrows: usize, ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseMat {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`, columns ascending.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// `A · v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ncols, "vector length does not match column count");
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &a)| a * v[c]).sum()
            })
            .collect()
    }

    /// `self · other`.
    pub fn matmul(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut rows = Vec::with_capacity(self.nrows);
        for r in 0..self.nrows {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                acc.extend(ocols.iter().zip(ovals).map(|(&c, &b)| (c, a * b)));
            }
            rows.push(acc);
        }
        Self::from_row_lists(self.nrows, other.ncols, rows)
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, other: &SparseMat, s: f64) -> SparseMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|r| {
                let (c1, v1) = self.row(r);
                let (c2, v2) = other.row(r);
                c1.iter()
                    .zip(v1)
                    .map(|(&c, &v)| (c, v))
                    .chain(c2.iter().zip(v2).map(|(&c, &v)| (c, s * v)))
                    .collect()
            })
            .collect();
        Self::from_row_lists(self.nrows, self.ncols, rows)
    }

    pub fn scaled(&self, s: f64) -> SparseMat {
        SparseMat::zeros(self.nrows, self.ncols).add_scaled(self, s)
    }

    /// Keeps the first `n` rows.
    pub fn top_rows(&self, n: usize) -> SparseMat {
        assert!(n <= self.nrows);
        SparseMat {
            nrows: n,
            ncols: self.ncols,
            indptr: self.indptr[..=n].to_vec(),
            indices: self.indices[..self.indptr[n]].to_vec(),
            values: self.values[..self.indptr[n]].to_vec(),
        }
    }

    /// Moves every column by `offset` inside a matrix of `ncols` columns.
    pub fn embed_columns(&self, offset: usize, ncols: usize) -> SparseMat {
        assert!(offset + self.ncols <= ncols);
        SparseMat {
            nrows: self.nrows,
            ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.iter().map(|c| c + offset).collect(),
            values: self.values.clone(),
        }
    }

    pub fn transpose(&self) -> SparseMat {
        SparseMat::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(r, c, v)| (c, r, v)),
        )
    }

    pub fn identity(n: usize) -> SparseMat {
        SparseMat::from_triplets(n, n, (0..n).map(|k| (k, k, 1.0)))
    }
}
