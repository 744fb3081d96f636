//! Linear maps on `M_n(ℂ)` as explicit `n² × n²` matrices.
//!
//! Column `i·n + j` holds the row-major vectorization of the image of the
//! matrix unit `E_ij`.

use crate::linalg::{self, vectorize, unvectorize, ComplexMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    n: usize,
    mat: ComplexMatrix,
}

impl Superoperator {
    pub fn from_fn(n: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let n2 = n * n;
        let mut mat = ComplexMatrix::zeros(n2, n2);
        let mut e = linalg::zeros(n);
        for k in 0..n2 {
            let (i, j) = (k / n, k % n);
            e[(i, j)] = linalg::c64(1.0, 0.0);
            mat.set_column(k, &vectorize(&f(&e)));
            e[(i, j)] = linalg::c64(0.0, 0.0);
        }
        Self { n, mat }
    }

    pub fn from_matrix(n: usize, mat: ComplexMatrix) -> Self {
        assert_eq!(mat.nrows(), n * n);
        Self { n, mat }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            mat: linalg::identity(n * n),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        unvectorize(&(&self.mat * vectorize(x)), self.n)
    }

    /// Hilbert–Schmidt adjoint. Row-major vectorization is unitary, so this is
    /// the conjugate transpose of the matrix.
    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            mat: self.mat.adjoint(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Self {
        Self {
            n: self.n,
            mat: &self.mat * &other.mat,
        }
    }

    /// Choi matrix Σ_ij E_ij ⊗ L(E_ij).
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.n;
        ComplexMatrix::from_fn(n * n, n * n, |r, c| {
            let (i, k) = (r / n, r % n);
            let (j, l) = (c / n, c % n);
            self.mat[(k * n + l, i * n + j)]
        })
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        linalg::max_abs(&(&self.mat - &other.mat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_parts, identity, max_abs};

    fn sample() -> (ComplexMatrix, ComplexMatrix) {
        let a = from_parts(&[vec![1.0, 2.0], vec![0.5, -1.0]], Some(&[vec![0.0, 1.0], vec![-0.3, 0.2]])).unwrap();
        let x = from_parts(&[vec![0.2, -0.7], vec![1.5, 0.4]], Some(&[vec![0.9, 0.0], vec![0.1, -0.6]])).unwrap();
        (a, x)
    }

    #[test]
    fn vec_identity_for_left_right_multiplication() {
        let (a, x) = sample();
        let b = a.adjoint() + identity(2);
        let s = Superoperator::from_fn(2, |y| &a * y * &b);
        let kron = a.kronecker(&b.transpose());
        assert!(max_abs(&(s.matrix() - kron)) < 1e-14);
        assert!(max_abs(&(s.apply(&x) - &a * &x * &b)) < 1e-14);
    }

    #[test]
    fn adjoint_is_hs_adjoint() {
        let (a, x) = sample();
        let s = Superoperator::from_fn(2, |y| &a * y);
        let y = x.adjoint() + identity(2);
        let lhs = linalg::hs_inner(&s.apply(&x), &y);
        let rhs = linalg::hs_inner(&x, &s.adjoint().apply(&y));
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn choi_of_identity_is_unnormalized_bell_projector() {
        let c = Superoperator::identity(2).choi();
        for &(r, col) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_eq!(c[(r, col)], c64(1.0, 0.0));
        }
        assert_eq!(c.iter().filter(|z| z.norm() > 0.0).count(), 4);
    }
}
