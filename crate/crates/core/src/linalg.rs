//! Dense complex linear algebra kernel.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Vectorization is row-major:
//! entry `X[i][j]` sits at index `i·n + j`, so `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.
//! Tensor products use the index map `(i₁, i₂) ↦ i₁·d₂ + i₂`.

use std::ops::Range;

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

const EIG_MAX_ITER: usize = 10_000;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(n, n)
}

/// Builds a square matrix from real and imaginary row-major parts.
pub fn from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<ComplexMatrix> {
    let n = re.len();
    if n == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    let mut m = zeros(n);
    for (i, row) in re.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)].re = v;
        }
    }
    if let Some(im) = im {
        if im.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: im.len(),
            });
        }
        for (i, row) in im.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)].im = v;
            }
        }
    }
    Ok(m)
}

pub fn from_real_diagonal(d: &[f64]) -> ComplexMatrix {
    let v = DVector::from_iterator(d.len(), d.iter().map(|&x| c64(x, 0.0)));
    ComplexMatrix::from_diagonal(&v)
}

pub fn trace(x: &ComplexMatrix) -> Complex64 {
    x.diagonal().sum()
}

/// Hilbert-Schmidt inner product Tr[A* B].
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Self-adjoint matrix, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates with the default hermiticity tolerance.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::DEFAULT.hermiticity_rel)
    }

    /// Accepts `m` when max |M_ij − conj(M_ji)| ≤ rel_tol·‖M‖_op, then stores the exact Hermitian part.
    pub fn with_tolerance(m: ComplexMatrix, rel_tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let asym = max_abs(&(&m - m.adjoint()));
        let h = Self::hermitian_part(&m);
        if asym > 0.0 {
            let scale = op_norm_hermitian(&h);
            if asym > rel_tol * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::NotHermitian { asymmetry: asym });
            }
        }
        Ok(Self(h))
    }

    /// Takes (M + M*)/2 without any check.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Self {
        Self(Self::hermitian_part(m))
    }

    fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
        (m + m.adjoint()).scale(0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

impl AsRef<ComplexMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

fn op_norm_hermitian(h: &ComplexMatrix) -> f64 {
    match SymmetricEigen::try_new(h.clone(), f64::EPSILON, EIG_MAX_ITER) {
        Some(e) => e.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        None => hs_norm(h),
    }
}

/// Eigenvalues in ascending order with the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eig(h: &HermitianMatrix) -> Result<EigenSystem> {
    hermitian_eig_with(h, Tolerances::DEFAULT.eig_residual)
}

/// Householder tridiagonalization followed by implicit QR (nalgebra), sorted
/// ascending and checked against the reconstruction and unitarity contract.
pub fn hermitian_eig_with(h: &HermitianMatrix, eig_tol: f64) -> Result<EigenSystem> {
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.as_matrix().clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or_else(|| Error::ConvergenceFailure(format!("symmetric QR stalled on a {n}x{n} matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let sys = EigenSystem { values, vectors };

    let scale = sys
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let recon = max_abs(&(sys.map(|x| x) - h.as_matrix()));
    let unit = max_abs(&(sys.vectors.adjoint() * &sys.vectors - identity(n)));
    if recon > eig_tol * scale * n as f64 || unit > eig_tol * n as f64 {
        return Err(Error::ConvergenceFailure(format!(
            "eigen residuals too large (reconstruction {recon:.3e}, unitarity {unit:.3e})"
        )));
    }
    Ok(sys)
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// V diag(f(λ)) V*.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Functional calculus with the pseudo-inverse rule for functions singular at zero.
    pub fn function(&self, f: SpectralFn, pinv_rel: f64) -> Result<FunctionValue> {
        let lam_max = self.max().max(0.0);
        let threshold = pinv_rel * lam_max;
        if f.singular_at_zero() && pinv_rel == 0.0 && self.min() <= 0.0 {
            return Err(Error::SingularInput {
                min_eigenvalue: self.min(),
            });
        }
        let mut truncated = 0;
        let vals: Vec<f64> = self
            .values
            .iter()
            .map(|&l| {
                if f.singular_at_zero() && l <= threshold {
                    truncated += 1;
                    0.0
                } else {
                    f.eval(if f.needs_nonnegative() { l.max(0.0) } else { l })
                }
            })
            .collect();
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, fl) in vals.iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= *fl;
            }
        }
        Ok(FunctionValue {
            matrix: HermitianMatrix::from_hermitian_part(&(scaled * self.vectors.adjoint())),
            truncated,
        })
    }

    /// Index ranges of eigenvalue clusters, see [`group_sorted`].
    pub fn clusters(&self, rel: f64) -> Vec<Range<usize>> {
        group_sorted(&self.values, rel)
    }
}

/// Groups an ascending list into runs whose consecutive gaps are at most
/// `rel · max(spread, max |λ|)`.
pub fn group_sorted(values: &[f64], rel: f64) -> Vec<Range<usize>> {
    if values.is_empty() {
        return Vec::new();
    }
    let spread = values[values.len() - 1] - values[0];
    let scale = values.iter().fold(spread, |m, v| m.max(v.abs()));
    let cut = rel * scale;
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i] - values[i - 1] > cut {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..values.len());
    out
}

/// Spectral functions used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFn {
    Log,
    Exp,
    Sqrt,
    /// x^p for real p; negative p is singular at zero.
    Power(f64),
    Inverse,
    /// x^(-p).
    NegativePower(f64),
    /// (t + x)^(-1).
    Resolvent(f64),
}

impl SpectralFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            SpectralFn::Log => x.ln(),
            SpectralFn::Exp => x.exp(),
            SpectralFn::Sqrt => x.sqrt(),
            SpectralFn::Power(p) => x.powf(p),
            SpectralFn::Inverse => 1.0 / x,
            SpectralFn::NegativePower(p) => x.powf(-p),
            SpectralFn::Resolvent(t) => 1.0 / (t + x),
        }
    }

    pub fn singular_at_zero(self) -> bool {
        match self {
            SpectralFn::Log | SpectralFn::Inverse => true,
            SpectralFn::Power(p) => p < 0.0,
            SpectralFn::NegativePower(p) => p > 0.0,
            SpectralFn::Exp | SpectralFn::Sqrt | SpectralFn::Resolvent(_) => false,
        }
    }

    fn needs_nonnegative(self) -> bool {
        !matches!(self, SpectralFn::Exp | SpectralFn::Resolvent(_))
    }
}

#[derive(Debug, Clone)]
pub struct FunctionValue {
    pub matrix: HermitianMatrix,
    /// Eigenvalues sent to zero by the pseudo-inverse rule.
    pub truncated: usize,
}

pub fn matrix_function(h: &HermitianMatrix, f: SpectralFn, pinv_rel: f64) -> Result<FunctionValue> {
    hermitian_eig(h)?.function(f, pinv_rel)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub op: f64,
    pub hs: f64,
    pub trace: f64,
}

/// Thin singular value decomposition `X = U diag(s) V*`, singular values nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd<T: ComplexField<RealField = f64>> {
    pub u: DMatrix<T>,
    pub singular_values: Vec<f64>,
    pub v_t: DMatrix<T>,
}

/// Scalars handed to faer for singular value decompositions.
pub trait SvdScalar: ComplexField<RealField = f64> + faer::traits::ComplexField<Real = f64> {}
impl SvdScalar for f64 {}
impl SvdScalar for Complex64 {}

/// SVD computed by faer, with the factors checked to reproduce `x` to
/// `1e-12·‖x‖_F·√max(m, n)`.
///
/// faer's iteration occasionally fails to converge on inputs with many exactly
/// repeated singular values. In that case the decomposition is retried on
/// `x·Q` for a fixed orthogonal `Q` and the right factor is rotated back.
pub fn checked_svd<T: SvdScalar>(x: &DMatrix<T>) -> Result<Svd<T>> {
    let (m, n) = x.shape();
    let svd = match faer_svd(x) {
        Ok(svd) => svd,
        Err(err) => {
            log::debug!("{err}; retrying on a rotated input");
            rotated_svd(x)?
        }
    };
    let k = svd.singular_values.len();
    let sigma = DMatrix::from_diagonal(&DVector::from_iterator(k, svd.singular_values.iter().map(|&v| T::from_real(v))));
    let error = (&svd.u * sigma * &svd.v_t - x).norm();
    let limit = 1e-12 * x.norm() * (m.max(n) as f64).sqrt().max(1.0);
    if error > limit {
        return Err(Error::ConvergenceFailure(format!(
            "singular value decomposition reproduces its input only to {error:.3e}"
        )));
    }
    Ok(svd)
}

fn faer_svd<T: SvdScalar>(x: &DMatrix<T>) -> Result<Svd<T>> {
    let (m, n) = x.shape();
    let k = m.min(n);
    let a = faer::Mat::<T>::from_fn(m, n, |i, j| x[(i, j)].clone());
    let svd = a
        .thin_svd()
        .map_err(|e| Error::ConvergenceFailure(format!("singular value decomposition: {e:?}")))?;
    let (fu, fv, fs) = (svd.U(), svd.V(), svd.S().column_vector());
    Ok(Svd {
        u: DMatrix::from_fn(m, k, |i, j| fu[(i, j)].clone()),
        singular_values: (0..k).map(|i| fs[i].clone().real()).collect(),
        v_t: DMatrix::from_fn(k, n, |i, j| fv[(j, i)].clone().conjugate()),
    })
}

fn rotated_svd<T: SvdScalar>(x: &DMatrix<T>) -> Result<Svd<T>> {
    let q = fixed_rotation(x.ncols()).map(T::from_real);
    let svd = faer_svd(&(x * &q))?;
    Ok(Svd {
        v_t: svd.v_t * q.transpose(),
        ..svd
    })
}

/// Orthogonal factor of a Gaussian matrix drawn from a fixed stream.
fn fixed_rotation(n: usize) -> DMatrix<f64> {
    let mut rng = crate::rng::CounterRng::new(0x5EED_0F5D);
    let g = DMatrix::from_fn(n, n, |_, _| rng.normal());
    g.qr().q()
}

pub fn singular_values(x: &ComplexMatrix) -> Vec<f64> {
    match checked_svd(x) {
        Ok(svd) => svd.singular_values,
        // Square roots of the eigenvalues of X*X: exact in the large values,
        // absolute accuracy about sqrt(eps)·‖X‖ in the small ones.
        Err(err) => {
            log::warn!("{err}; falling back to the eigenvalues of X*X");
            let gram = HermitianMatrix::from_hermitian_part(&(x.adjoint() * x));
            let eig = SymmetricEigen::new(gram.into_inner());
            eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect()
        }
    }
}

pub fn norms(x: &ComplexMatrix) -> Norms {
    let sv = singular_values(x);
    Norms {
        op: sv.iter().fold(0.0f64, |m, &s| m.max(s)),
        hs: hs_norm(x),
        trace: sv.iter().sum(),
    }
}

pub fn op_norm(x: &ComplexMatrix) -> f64 {
    norms(x).op
}

pub fn trace_norm(x: &ComplexMatrix) -> f64 {
    norms(x).trace
}

/// Kronecker product with `(i₁, i₂) ↦ i₁·d₂ + i₂`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Traces out `which` of a bipartite operator on ℂ^{d₁} ⊗ ℂ^{d₂}.
pub fn partial_trace(x: &ComplexMatrix, dims: (usize, usize), which: Subsystem) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    if d1 * d2 != x.nrows() || !x.is_square() {
        return Err(Error::DimensionMismatch {
            expected: d1 * d2,
            found: x.nrows(),
        });
    }
    Ok(match which {
        Subsystem::First => ComplexMatrix::from_fn(d2, d2, |a, b| {
            (0..d1).map(|k| x[(k * d2 + a, k * d2 + b)]).sum()
        }),
        Subsystem::Second => ComplexMatrix::from_fn(d1, d1, |a, b| {
            (0..d2).map(|k| x[(a * d2 + k, b * d2 + k)]).sum()
        }),
    })
}

/// Reduced operator on the subsystems listed in `keep` (ascending order) of a
/// multipartite operator with local dimensions `dims`.
pub fn reduce(x: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if total != x.nrows() || !x.is_square() {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: x.nrows(),
        });
    }
    let k = dims.len();
    let kept_dim: usize = keep.iter().map(|&s| dims[s]).product();
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0; k];
        for s in (0..k).rev() {
            d[s] = idx % dims[s];
            idx /= dims[s];
        }
        d
    };
    let kept_index = |d: &[usize]| keep.iter().fold(0, |acc, &s| acc * dims[s] + d[s]);
    let traced: Vec<usize> = (0..k).filter(|s| !keep.contains(s)).collect();
    let all: Vec<Vec<usize>> = (0..total).map(digits).collect();
    let mut out = zeros(kept_dim);
    for i in 0..total {
        for j in 0..total {
            if traced.iter().all(|&s| all[i][s] == all[j][s]) {
                out[(kept_index(&all[i]), kept_index(&all[j]))] += x[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Returns ((X + X*)/2, ‖X − X*‖_op / 2).
pub fn hermitize(x: &ComplexMatrix) -> (HermitianMatrix, f64) {
    let h = HermitianMatrix::from_hermitian_part(x);
    // i(X − X*) is Hermitian, so its operator norm is the largest |eigenvalue|.
    let ih = (x - x.adjoint()).map(|z| z * c64(0.0, 1.0));
    let asym = op_norm_hermitian(&ih) / 2.0;
    (h, asym)
}

/// Row-major vectorization.
pub fn vectorize(x: &ComplexMatrix) -> DVector<Complex64> {
    let m = x.ncols();
    DVector::from_fn(x.nrows() * m, |k, _| x[(k / m, k % m)])
}

pub fn unvectorize(v: &DVector<Complex64>, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Real coordinates of a Hermitian matrix in an orthonormal (HS) basis: diagonal
/// entries, then √2·Re and √2·Im of each strictly upper entry.
pub fn herm_coords(x: &ComplexMatrix) -> DVector<f64> {
    let n = x.nrows();
    let mut v = DVector::zeros(n * n);
    let s2 = std::f64::consts::SQRT_2;
    let mut k = 0;
    for i in 0..n {
        v[k] = x[(i, i)].re;
        k += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let z = (x[(i, j)] + x[(j, i)].conj()) * 0.5;
            v[k] = s2 * z.re;
            v[k + 1] = s2 * z.im;
            k += 2;
        }
    }
    v
}

pub fn from_herm_coords(v: &[f64], n: usize) -> ComplexMatrix {
    let mut m = zeros(n);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = c64(v[k], 0.0);
        k += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let z = c64(v[k] * r2, v[k + 1] * r2);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Hermitian and anti-Hermitian parts, (X + X*)/2 and (X − X*)/(2i).
pub fn hermitian_components(x: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let adj = x.adjoint();
    let h = (x + &adj).scale(0.5);
    let k = (x - &adj).map(|z| z * c64(0.0, -0.5));
    (h, k)
}

/// Real null space of a real matrix: right singular vectors with singular value ≤ `abs_tol`.
pub fn real_null_space(a: &DMatrix<f64>, abs_tol: f64) -> Result<Vec<DVector<f64>>> {
    let cols = a.ncols();
    let padded;
    let a = if a.nrows() < cols {
        padded = a.clone().resize_vertically(cols, 0.0);
        &padded
    } else {
        a
    };
    let svd = checked_svd(a)?;
    Ok((0..cols)
        .filter(|&k| svd.singular_values[k] <= abs_tol)
        .map(|k| svd.v_t.row(k).transpose())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn qubit_rho() -> ComplexMatrix {
        from_parts(&[vec![0.5, 0.25], vec![0.25, 0.5]], None).unwrap()
    }

    fn sigma_x() -> ComplexMatrix {
        from_parts(&[vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap()
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = hermitian_eig(&HermitianMatrix::new(identity(2)).unwrap()).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let e = hermitian_eig(&HermitianMatrix::new(from_real_diagonal(&[0.75, 0.25])).unwrap()).unwrap();
        assert_abs_diff_eq!(e.values[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values[1], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn eig_closed_form_2x2() {
        // a ± b for [[a, b], [b, a]]
        let e = hermitian_eig(&HermitianMatrix::new(qubit_rho()).unwrap()).unwrap();
        assert_abs_diff_eq!(e.values[0], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 0.75, epsilon = 1e-14);
        let u = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs(&(u - identity(2))) < 1e-14);
    }

    #[test]
    fn not_hermitian_rejected() {
        let m = from_parts(&[vec![0.0, 1.0], vec![0.0, 0.0]], None).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn functions_basic() {
        let d = HermitianMatrix::new(from_real_diagonal(&[4.0, 9.0])).unwrap();
        let s = matrix_function(&d, SpectralFn::Sqrt, 0.0).unwrap();
        assert!(max_abs(&(s.matrix.as_matrix() - from_real_diagonal(&[2.0, 3.0]))) < 1e-14);
        let l = matrix_function(&HermitianMatrix::new(identity(3)).unwrap(), SpectralFn::Log, 0.0).unwrap();
        assert!(max_abs(l.matrix.as_matrix()) < 1e-15);
    }

    #[test]
    fn inverse_sqrt_closed_form() {
        // eigenvalues (0.25, 0.75) → (2, 2/√3) along (1,−1)/√2 and (1,1)/√2
        let h = HermitianMatrix::new(qubit_rho()).unwrap();
        let r = matrix_function(&h, SpectralFn::Power(-0.5), 0.0).unwrap().matrix.into_inner();
        let a = 2.0;
        let b = 2.0 / 3f64.sqrt();
        let expected = from_parts(&[vec![(a + b) / 2.0, (b - a) / 2.0], vec![(b - a) / 2.0, (a + b) / 2.0]], None).unwrap();
        assert!(max_abs(&(r - expected)) < 1e-14);
    }

    #[test]
    fn pseudo_inverse_rule() {
        let h = HermitianMatrix::new(from_real_diagonal(&[0.0, 0.5])).unwrap();
        let r = matrix_function(&h, SpectralFn::Inverse, 1e-12).unwrap();
        assert_eq!(r.truncated, 1);
        assert!(max_abs(&(r.matrix.as_matrix() - from_real_diagonal(&[0.0, 2.0]))) < 1e-14);
        assert!(matches!(
            matrix_function(&h, SpectralFn::Log, 0.0),
            Err(Error::SingularInput { .. })
        ));
    }

    #[test]
    fn norms_examples() {
        let n = norms(&identity(3));
        assert_abs_diff_eq!(n.op, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(n.hs, 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(n.trace, 3.0, epsilon = 1e-14);
        let diff = from_real_diagonal(&[0.75, 0.25]) - from_real_diagonal(&[0.5, 0.5]);
        assert_abs_diff_eq!(trace_norm(&diff), 0.5, epsilon = 1e-14);
        let p = from_real_diagonal(&[0.0, 1.0, 0.0]);
        let n = norms(&p);
        assert_abs_diff_eq!(n.op + n.hs + n.trace, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn tensor_examples() {
        assert_eq!(tensor_product(&identity(2), &identity(2)), identity(4));
        let d = tensor_product(&from_real_diagonal(&[2.0, 3.0]), &identity(2));
        assert_eq!(d, from_real_diagonal(&[2.0, 2.0, 3.0, 3.0]));
        let xx = tensor_product(&sigma_x(), &sigma_x());
        // e₀⊗e₀ = index 0 maps to e₁⊗e₁ = index 3
        assert_eq!(xx[(3, 0)], c64(1.0, 0.0));
        assert_eq!(xx.column(0).iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn partial_trace_examples() {
        let r1 = qubit_rho();
        let r2 = from_real_diagonal(&[0.9, 0.1]);
        let prod = tensor_product(&r1, &r2);
        assert!(max_abs(&(partial_trace(&prod, (2, 2), Subsystem::First).unwrap() - &r2)) < 1e-15);
        let t = partial_trace(&identity(4), (2, 2), Subsystem::Second).unwrap();
        assert_eq!(t, identity(2).scale(2.0));
        // maximally entangled projector |Φ⟩⟨Φ|, Φ = (|00⟩ + |11⟩)/√2
        let mut phi = zeros(4);
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            phi[(i, j)] = c64(0.5, 0.0);
        }
        let r = partial_trace(&phi, (2, 2), Subsystem::First).unwrap();
        assert!(max_abs(&(r - identity(2).scale(0.5))) < 1e-15);
        assert!(partial_trace(&identity(3), (2, 2), Subsystem::First).is_err());
    }

    #[test]
    fn reduce_matches_partial_trace() {
        let a = qubit_rho();
        let b = from_real_diagonal(&[0.2, 0.3, 0.5]);
        let c = from_real_diagonal(&[0.6, 0.4]);
        let abc = tensor_product(&tensor_product(&a, &b), &c);
        let ac = reduce(&abc, &[2, 3, 2], &[0, 2]).unwrap();
        assert!(max_abs(&(ac - tensor_product(&a, &c))) < 1e-15);
        let bb = reduce(&abc, &[2, 3, 2], &[1]).unwrap();
        assert!(max_abs(&(bb - b)) < 1e-15);
    }

    #[test]
    fn hermitize_examples() {
        let (h, a) = hermitize(&qubit_rho());
        assert_eq!(h.as_matrix(), &qubit_rho());
        assert_eq!(a, 0.0);
        let (h, a) = hermitize(&from_parts(&[vec![0.0, 1.0], vec![0.0, 0.0]], None).unwrap());
        assert!(max_abs(&(h.into_inner() - sigma_x().scale(0.5))) < 1e-15);
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-14);
        let (h, a) = hermitize(&identity(2).map(|z| z * c64(0.0, 1.0)));
        assert!(max_abs(h.as_matrix()) < 1e-15);
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn herm_coords_roundtrip_is_isometric() {
        let m = from_parts(&[vec![1.0, 0.5], vec![0.5, -2.0]], Some(&[vec![0.0, 0.3], vec![-0.3, 0.0]])).unwrap();
        let v = herm_coords(&m);
        assert_abs_diff_eq!(v.norm(), hs_norm(&m), epsilon = 1e-14);
        assert!(max_abs(&(from_herm_coords(v.as_slice(), 2) - m)) < 1e-15);
    }

    #[test]
    fn rotated_svd_agrees_with_direct() {
        let mut rng = crate::rng::CounterRng::new(11);
        for (m, n) in [(7, 3), (3, 7), (5, 5)] {
            let x = ComplexMatrix::from_fn(m, n, |_, _| c64(rng.normal(), rng.normal()));
            let direct = faer_svd(&x).unwrap();
            let rotated = rotated_svd(&x).unwrap();
            for (a, b) in direct.singular_values.iter().zip(&rotated.singular_values) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            let k = m.min(n);
            let s = DMatrix::from_diagonal(&DVector::from_iterator(k, rotated.singular_values.iter().map(|&v| c64(v, 0.0))));
            assert!(max_abs(&(&rotated.u * s * &rotated.v_t - &x)) < 1e-12);
            let vv = &rotated.v_t * rotated.v_t.adjoint();
            assert!(max_abs(&(vv - identity(k))) < 1e-12);
        }
    }
}
