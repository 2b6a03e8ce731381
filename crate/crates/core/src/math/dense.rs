//! Small dense symmetric solver for Gauss-Newton / Levenberg-Marquardt
//! normal equations (pose graph, ICP).

use crate::scalar::Real;

/// Dense column-agnostic square matrix stored row-major.
#[derive(Clone, Debug)]
pub struct SquareMat<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> SquareMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.n + j]
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] += v;
    }

    pub fn max_diag(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            m = m.max(self.at(i, i).abs());
        }
        m
    }
}

/// Solves `a x = b` for symmetric positive definite `a` via Cholesky.
///
/// Returns `None` when the factorization encounters a non-positive pivot
/// (callers add damping and retry).
pub fn cholesky_solve<T: Real>(a: &SquareMat<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.n;
    debug_assert_eq!(b.len(), n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.at(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= T::zero() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // Forward substitution L y = b.
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // Back substitution L^T x = y.
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// Solves `(a + damping I) x = b`, raising the damping until Cholesky succeeds.
pub fn damped_solve<T: Real>(a: &SquareMat<T>, b: &[T], mut damping: T) -> Option<Vec<T>> {
    let scale = a.max_diag().max(T::one());
    for _ in 0..16 {
        let mut d = a.clone();
        for i in 0..d.n {
            let add = damping * scale;
            *d.at_mut(i, i) += add;
        }
        if let Some(x) = cholesky_solve(&d, b) {
            return Some(x);
        }
        damping = damping * T::of(10.0) + T::of(1e-12);
    }
    None
}
