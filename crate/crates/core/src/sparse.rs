//! Compressed sparse row storage for complex operators.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds a square matrix from `(row, col, value)` triplets. Duplicate
    /// entries are summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of bounds for dimension {n}");
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                if v != Complex64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { n, indptr, indices, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (row, out) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[row], self.indptr[row + 1]);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&c, &v) in self.indices[lo..hi].iter().zip(&self.values[lo..hi]) {
                acc += v * x[c];
            }
            *out = acc;
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let (lo, hi) = (self.indptr[row], self.indptr[row + 1]);
        match self.indices[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.n, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.n, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// `alpha * self + beta * other`
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_triplets(
            self.n,
            self.iter()
                .map(|(r, c, v)| (r, c, alpha * v))
                .chain(other.iter().map(|(r, c, v)| (r, c, beta * v))),
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut cols = vec![0.0; self.n];
        for (_, c, v) in self.iter() {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }
}
