//! Minimal dense complex linear algebra: LU with partial pivoting (plain,
//! transpose and adjoint solves), Hermitian Cholesky, and iterative
//! largest/smallest singular value estimates. Problem sizes in this crate
//! stay at or below a few thousand unknowns.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar, C};
use crate::util::SplitMix64;

#[derive(Clone, Debug)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = Complex::new(T::zero(), T::zero());
            for (a, b) in row.iter().zip(v) {
                acc = acc + *a * *b;
            }
            out[i] = acc;
        }
        out
    }

    /// A^H v (conjugate transpose times vector).
    pub fn matvec_adjoint(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let vi = v[i];
            for (j, a) in row.iter().enumerate() {
                out[j] = out[j] + a.conj() * vi;
            }
        }
        out
    }

    /// Max-magnitude entry, a cheap scale for thresholds.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }
}

/// LU factorization with partial pivoting of a square matrix.
pub struct Lu<T> {
    n: usize,
    lu: Vec<C<T>>,
    ipiv: Vec<usize>,
}

pub fn lu_factor<T: Scalar>(a: &CMat<T>) -> Result<Lu<T>> {
    if a.rows != a.cols {
        return Err(Error::LinearSolve("LU requires a square matrix".into()));
    }
    let n = a.rows;
    let mut lu = a.data.clone();
    let mut ipiv = vec![0usize; n];
    for k in 0..n {
        // Pivot search.
        let mut p = k;
        let mut best = lu[k * n + k].norm();
        for i in (k + 1)..n {
            let mag = lu[i * n + k].norm();
            if mag > best {
                best = mag;
                p = i;
            }
        }
        if best == T::zero() || !best.is_finite() {
            return Err(Error::LinearSolve(format!("singular pivot at column {k}")));
        }
        ipiv[k] = p;
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
        }
        let inv = Complex::new(T::one(), T::zero()) / lu[k * n + k];
        for i in (k + 1)..n {
            let factor = lu[i * n + k] * inv;
            lu[i * n + k] = factor;
            for j in (k + 1)..n {
                let delta = factor * lu[k * n + j];
                lu[i * n + j] = lu[i * n + j] - delta;
            }
        }
    }
    Ok(Lu { n, lu, ipiv })
}

impl<T: Scalar> Lu<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.ipiv[k]);
        }
        // Forward substitution with unit lower factor.
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        // Backward substitution with U.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc = acc - self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    /// Solves A^T y = c through the same factorization.
    pub fn solve_transpose(&self, c: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(c.len(), self.n);
        let n = self.n;
        let mut y = c.to_vec();
        // U^T w = c: forward substitution (U^T is lower triangular).
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc = acc - self.lu[j * n + i] * y[j];
            }
            y[i] = acc / self.lu[i * n + i];
        }
        // L^T v = w: backward substitution (unit diagonal).
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc = acc - self.lu[j * n + i] * y[j];
            }
            y[i] = acc;
        }
        // Undo the pivot sequence.
        for k in (0..n).rev() {
            y.swap(k, self.ipiv[k]);
        }
        y
    }

    /// Solves A^H x = b.
    pub fn solve_adjoint(&self, b: &[C<T>]) -> Vec<C<T>> {
        let conj_b: Vec<C<T>> = b.iter().map(|v| v.conj()).collect();
        self.solve_transpose(&conj_b).into_iter().map(|v| v.conj()).collect()
    }
}

/// Cholesky factor L (A = L L^H) of a Hermitian positive-definite matrix.
pub fn cholesky_factor<T: Scalar>(a: &CMat<T>) -> Result<CMat<T>> {
    if a.rows != a.cols {
        return Err(Error::LinearSolve("Cholesky requires a square matrix".into()));
    }
    let n = a.rows;
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j).re;
        for k in 0..j {
            diag = diag - l.get(j, k).norm_sqr();
        }
        if !(diag > T::zero()) {
            return Err(Error::LinearSolve(format!(
                "matrix not positive definite at column {j} (pivot {diag})"
            )));
        }
        let dsqrt = diag.sqrt();
        l.set(j, j, Complex::new(dsqrt, T::zero()));
        for i in (j + 1)..n {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc = acc - l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, acc / dsqrt);
        }
    }
    Ok(l)
}

/// Solves A x = b given the Cholesky factor L of A.
pub fn cholesky_solve<T: Scalar>(l: &CMat<T>, b: &[C<T>]) -> Vec<C<T>> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc = acc - l.get(i, j) * x[j];
        }
        x[i] = acc / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc = acc - l.get(j, i).conj() * x[j];
        }
        x[i] = acc / l.get(i, i);
    }
    x
}

fn random_unit<T: Scalar>(n: usize, seed: u64) -> Vec<C<T>> {
    let mut rng = SplitMix64::new(seed);
    let mut v: Vec<C<T>> = (0..n)
        .map(|_| Complex::new(lit::<T>(rng.uniform(-1.0, 1.0)), lit::<T>(rng.uniform(-1.0, 1.0))))
        .collect();
    let norm = vec_norm(&v);
    for e in &mut v {
        *e = *e / norm;
    }
    v
}

pub fn vec_norm<T: Scalar>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |a, x| a + x.norm_sqr()).sqrt()
}

/// Largest singular value estimate by power iteration on A^H A.
pub fn op_norm_estimate<T: Scalar>(a: &CMat<T>, iters: usize) -> T {
    let mut v = random_unit(a.cols(), 0x5eed);
    let mut sigma = T::zero();
    for _ in 0..iters {
        let w = a.matvec_adjoint(&a.matvec(&v));
        let norm = vec_norm(&w);
        if norm == T::zero() {
            return T::zero();
        }
        sigma = norm.sqrt();
        for (e, x) in v.iter_mut().zip(w) {
            *e = x / norm;
        }
    }
    sigma
}

/// Smallest singular value estimate by inverse iteration on (A^H A)^{-1}.
pub fn sigma_min_estimate<T: Scalar>(lu: &Lu<T>, iters: usize) -> T {
    let mut v = random_unit(lu.n(), 0xfeed);
    let mut growth = T::one();
    for _ in 0..iters {
        let w = lu.solve(&lu.solve_adjoint(&v));
        let norm = vec_norm(&w);
        if norm == T::zero() || !norm.is_finite() {
            return T::zero();
        }
        growth = norm;
        for (e, x) in v.iter_mut().zip(w) {
            *e = x / norm;
        }
    }
    // growth -> 1 / sigma_min^2
    (T::one() / growth).sqrt()
}
