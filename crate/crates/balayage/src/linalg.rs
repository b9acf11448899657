//! Dense symmetric linear algebra: Cholesky factorization, triangular
//! solves, and a smallest-eigenvalue estimate by inverse power iteration.
//! Row-major flat storage with contiguous-prefix dot products keeps the
//! factorization cache-friendly without an external LAPACK binding.

use ndarray::Array2;

use crate::{Error, Result};

/// Lower-triangular Cholesky factor, row-major.
#[derive(Clone, Debug)]
pub(crate) struct Cholesky {
    l: Vec<f64>,
    m: usize,
}

pub(crate) fn cholesky(a: &Array2<f64>) -> Result<Cholesky> {
    let m = a.nrows();
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..i {
            let (head, tail) = l.split_at(i * m);
            let row_j = &head[j * m..j * m + j];
            let row_i = &tail[..j];
            let s = a[(i, j)] - dot(row_i, row_j);
            l[i * m + j] = s / l[j * m + j];
        }
        let row_i = &l[i * m..i * m + i];
        let d = a[(i, i)] - dot(row_i, row_i);
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::IllConditioned { size: m, pivot: i });
        }
        l[i * m + i] = d.sqrt();
    }
    Ok(Cholesky { l, m })
}

impl Cholesky {
    /// Solve L Lᵀ x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// Forward substitution L y = b, in place.
    pub fn forward(&self, x: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            let row = &self.l[i * m..i * m + i];
            let s = x[i] - dot(row, &x[..i]);
            x[i] = s / self.l[i * m + i];
        }
    }

    /// Backward substitution Lᵀ x = y, in place.
    pub fn backward(&self, x: &mut [f64]) {
        let m = self.m;
        for i in (0..m).rev() {
            let mut s = x[i];
            for k in i + 1..m {
                s -= self.l[k * m + i] * x[k];
            }
            x[i] = s / self.l[i * m + i];
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // 4-way unrolled accumulation; fixed order keeps results reproducible.
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let chunks = a.len() / 4 * 4;
    let mut i = 0;
    while i < chunks {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut s = (s0 + s1) + (s2 + s3);
    while i < a.len() {
        s += a[i] * b[i];
        i += 1;
    }
    s
}

pub(crate) fn matvec(a: &Array2<f64>, x: &[f64]) -> Vec<f64> {
    let m = a.nrows();
    let data = a.as_slice().expect("row-major matrix");
    (0..m).map(|i| dot(&data[i * m..(i + 1) * m], x)).collect()
}

/// Smallest eigenvalue of an SPD matrix by inverse power iteration on a
/// precomputed factor. Accurate to a few percent, which is all the
/// positive-definiteness check needs.
pub(crate) fn min_eigenvalue(a: &Array2<f64>, chol: &Cholesky, iters: usize) -> f64 {
    let m = a.nrows();
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = chol.solve(&v);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        let av = matvec(a, &v);
        lambda = dot(&v, &av);
    }
    lambda
}
