//! Small dense complex linear algebra: Hermitian Cholesky factorization and
//! the Tikhonov-regularized pseudo-inverse built on it. Kept in-crate so the
//! solve path is deterministic down to the summation order.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Row-major complex matrix.
#[derive(Debug, Clone)]
pub struct CMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CMatrix {
            n_rows,
            n_cols,
            data: vec![C64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n_cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        &mut self.data[i * self.n_cols + j]
    }

    /// AᴴA for a square row-major matrix.
    pub fn gram(a: &[C64], n: usize) -> CMatrix {
        let mut g = CMatrix::zeros(n, n);
        g.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, rj) in row.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += a[k * n + i].conj() * a[k * n + j];
                }
                *rj = acc;
            }
        });
        g
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
pub struct Cholesky {
    n: usize,
    l: Vec<C64>,
}

impl Cholesky {
    /// Factor A = L Lᴴ. Returns None if a pivot is not strictly positive.
    pub fn new(a: &CMatrix) -> Option<Self> {
        assert_eq!(a.n_rows, a.n_cols);
        let n = a.n_rows;
        let mut l = a.data.clone();
        for j in 0..n {
            let mut d = l[j * n + j].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let dj = d.sqrt();
            l[j * n + j] = C64::new(dj, 0.0);
            let (head, tail) = l.split_at_mut((j + 1) * n);
            let lj = &head[j * n..(j + 1) * n];
            tail.par_chunks_mut(n).for_each(|row| {
                let mut s = row[j];
                for k in 0..j {
                    s -= row[k] * lj[k].conj();
                }
                row[j] = s / dj;
            });
        }
        // zero strict upper triangle
        for i in 0..n {
            for j in i + 1..n {
                l[i * n + j] = C64::new(0.0, 0.0);
            }
        }
        Some(Cholesky { n, l })
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.l[i * self.n + i].re).collect()
    }

    /// Solve A x = b in place.
    pub fn solve_vec(&self, b: &mut [C64]) {
        let n = self.n;
        // L y = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i].re;
        }
        // Lᴴ x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i].conj() * b[k];
            }
            b[i] = s / self.l[i * n + i].re;
        }
    }

    /// Solve A X = B column-by-column for a row-major B (n x m), in parallel.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        let n = self.n;
        assert_eq!(b.n_rows, n);
        let m = b.n_cols;
        let cols: Vec<Vec<C64>> = (0..m)
            .into_par_iter()
            .map(|j| {
                let mut col: Vec<C64> = (0..n).map(|i| b.at(i, j)).collect();
                self.solve_vec(&mut col);
                col
            })
            .collect();
        let mut out = CMatrix::zeros(n, m);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                *out.at_mut(i, j) = col[i];
            }
        }
        out
    }
}
