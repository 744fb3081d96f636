//! Unital *-subalgebras of `M_n(ℂ)`.
//!
//! A [`Subalgebra`] stores a basis of Hermitian matrices that is orthonormal in
//! the Hilbert–Schmidt inner product. Because the basis is Hermitian, each
//! element has real coordinates for its Hermitian and anti-Hermitian parts,
//! and all rank decisions reduce to real orthogonalization on the coordinates
//! produced by [`linalg::herm_coords`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, from_herm_coords, herm_coords, hermitian_components, hermitian_eig_with, hs_norm,
    identity, tensor_product, ComplexMatrix, HermitianMatrix,
};
use crate::rng::CounterRng;

#[derive(Debug, Clone)]
pub struct Subalgebra {
    n: usize,
    basis: Vec<ComplexMatrix>,
    /// Column k holds the real coordinates of `basis[k]`.
    coords: DMatrix<f64>,
}

/// Real orthonormal frame built by Gram–Schmidt with one re-orthogonalization pass.
#[derive(Debug, Clone)]
struct Frame {
    vectors: Vec<DVector<f64>>,
}

impl Frame {
    fn new() -> Self {
        Self {
            vectors: Vec::new(),
        }
    }

    fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.vectors {
                let d = q.dot(&r);
                r.axpy(-d, q, 1.0);
            }
        }
        r
    }

    /// Adds `v` if its component outside the frame exceeds `rel·scale`.
    fn push(&mut self, v: &DVector<f64>, rel: f64, scale: f64) -> bool {
        if scale == 0.0 {
            return false;
        }
        let r = self.residual(v);
        let rn = r.norm();
        if rn > rel * scale {
            self.vectors.push(r / rn);
            true
        } else {
            false
        }
    }
}

/// Coordinates of the Hermitian and anti-Hermitian parts, plus ‖X‖_HS as the rank scale.
fn hermitian_parts_coords(x: &ComplexMatrix) -> ([DVector<f64>; 2], f64) {
    let (h, k) = hermitian_components(x);
    ([herm_coords(&h), herm_coords(&k)], hs_norm(x))
}

impl Subalgebra {
    fn from_frame(n: usize, frame: Frame) -> Self {
        let dim = frame.vectors.len();
        let mut coords = DMatrix::zeros(n * n, dim);
        for (k, v) in frame.vectors.iter().enumerate() {
            coords.set_column(k, v);
        }
        let basis = frame
            .vectors
            .iter()
            .map(|v| from_herm_coords(v.as_slice(), n))
            .collect();
        Self { n, basis, coords }
    }

    /// Hermitian orthonormal basis for the complex span of `mats` and their adjoints.
    /// No closure check is made.
    pub fn from_spanning_set(n: usize, mats: &[ComplexMatrix], span_rel: f64) -> Result<Self> {
        let mut frame = Frame::new();
        for m in mats {
            check_dim(n, m)?;
            let (parts, scale) = hermitian_parts_coords(m);
            for v in parts {
                frame.push(&v, span_rel, scale);
            }
        }
        Ok(Self::from_frame(n, frame))
    }

    /// Smallest unital *-subalgebra containing `generators`.
    pub fn close_generators(n: usize, generators: &[ComplexMatrix]) -> Result<Self> {
        Self::close_generators_with(n, generators, Tolerances::DEFAULT.span_rel)
    }

    pub fn close_generators_with(n: usize, generators: &[ComplexMatrix], span_rel: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let mut mats = vec![identity(n)];
        for g in generators {
            check_dim(n, g)?;
            mats.push(g.clone());
        }
        // The generated *-algebra is the double commutant of {1, g, g*}. Each
        // commutant is one null-space problem, so near-degenerate generators do
        // not compound roundoff the way repeated products do.
        let tol = Tolerances {
            span_rel,
            ..Tolerances::DEFAULT
        };
        let span = Self::from_spanning_set(n, &mats, span_rel)?;
        span.commutant_with(&tol)?.commutant_with(&tol)
    }

    /// `span{1}`.
    pub fn scalars(n: usize) -> Self {
        Self::close_generators(n, &[]).expect("n ≥ 1")
    }

    pub fn full(n: usize) -> Self {
        let mut frame = Frame::new();
        for k in 0..n * n {
            let mut e = DVector::zeros(n * n);
            e[k] = 1.0;
            frame.vectors.push(e);
        }
        Self::from_frame(n, frame)
    }

    /// Diagonal matrices.
    pub fn diagonal(n: usize) -> Self {
        Self::partition(n, &(0..n).map(|i| vec![i]).collect::<Vec<_>>()).expect("singletons")
    }

    /// Commutative algebra spanned by the coordinate projections of the cells of a partition.
    pub fn partition(n: usize, cells: &[Vec<usize>]) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut frame = Frame::new();
        for cell in cells {
            if cell.is_empty() {
                return Err(Error::InvalidModel("empty cell".into()));
            }
            let mut p = linalg::zeros(n);
            for &i in cell {
                if i >= n || seen[i] {
                    return Err(Error::InvalidModel(format!("index {i} repeated or out of range")));
                }
                seen[i] = true;
                p[(i, i)] = c64(1.0, 0.0);
            }
            frame.push(&herm_coords(&p), 1e-12, 1.0);
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidModel("cells do not cover the index set".into()));
        }
        Ok(Self::from_frame(n, frame))
    }

    /// `1_{d1} ⊗ M_{d2}` (`which = Second`) or `M_{d1} ⊗ 1_{d2}` (`which = First`).
    pub fn tensor_factor(d1: usize, d2: usize, which: linalg::Subsystem) -> Self {
        let small = match which {
            linalg::Subsystem::Second => d2,
            linalg::Subsystem::First => d1,
        };
        let mats: Vec<ComplexMatrix> = Self::full(small)
            .basis
            .iter()
            .map(|b| match which {
                linalg::Subsystem::Second => tensor_product(&identity(d1), b),
                linalg::Subsystem::First => tensor_product(b, &identity(d2)),
            })
            .collect();
        Self::from_spanning_set(d1 * d2, &mats, Tolerances::DEFAULT.span_rel).expect("dimensions agree")
    }

    /// `W (⊕_j 1_{ℓ_j} ⊗ M_{r_j}) W*` for the block pattern `[(ℓ_j, r_j)]`.
    pub fn block_pattern(pattern: &[(usize, usize)], w: &ComplexMatrix) -> Result<Self> {
        let n: usize = pattern.iter().map(|(l, r)| l * r).sum();
        check_dim(n, w)?;
        let mut mats = Vec::new();
        let mut offset = 0;
        for &(l, r) in pattern {
            for b in Self::full(r).basis() {
                let local = tensor_product(&identity(l), b);
                let mut m = linalg::zeros(n);
                m.view_mut((offset, offset), (l * r, l * r)).copy_from(&local);
                mats.push(w * m * w.adjoint());
            }
            offset += l * r;
        }
        Self::from_spanning_set(n, &mats, Tolerances::DEFAULT.span_rel)
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    fn project_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.coords * (self.coords.transpose() * v)
    }

    /// HS-orthogonal projection onto the algebra (the trace-preserving conditional expectation).
    pub fn conditional_expectation_tau(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dim(self.n, x)?;
        Ok(self.project(x))
    }

    pub(crate) fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (h, k) = hermitian_components(x);
        let hp = from_herm_coords(self.project_coords(&herm_coords(&h)).as_slice(), self.n);
        let kp = from_herm_coords(self.project_coords(&herm_coords(&k)).as_slice(), self.n);
        hp + kp.map(|z| z * c64(0.0, 1.0))
    }

    /// ‖X − 𝓔_τ(X)‖_HS.
    pub fn residual(&self, x: &ComplexMatrix) -> f64 {
        hs_norm(&(x - self.project(x)))
    }

    /// Membership with the relative span rule `residual ≤ rel·‖X‖_HS`.
    pub fn contains(&self, x: &ComplexMatrix, rel: f64) -> bool {
        self.residual(x) <= rel * hs_norm(x).max(f64::MIN_POSITIVE)
    }

    /// Largest residual of another algebra's basis against this one.
    pub fn containment_residual(&self, other: &Subalgebra) -> f64 {
        other.basis.iter().map(|b| self.residual(b)).fold(0.0, f64::max)
    }

    /// Same span, up to `tol` in both directions.
    pub fn same_span(&self, other: &Subalgebra, tol: f64) -> bool {
        self.n == other.n
            && self.dim() == other.dim()
            && self.containment_residual(other) <= tol
            && other.containment_residual(self) <= tol
    }

    /// Coordinates ⟨B_k, X⟩_HS.
    pub fn coefficients(&self, x: &ComplexMatrix) -> Vec<Complex64> {
        self.basis.iter().map(|b| linalg::hs_inner(b, x)).collect()
    }

    /// Solves `Z B_k = B_k Z` for all basis elements.
    pub fn commutant(&self) -> Result<Subalgebra> {
        self.commutant_with(&Tolerances::DEFAULT)
    }

    pub fn commutant_with(&self, tol: &Tolerances) -> Result<Subalgebra> {
        let n = self.n;
        let n2 = n * n;
        let rows = n2 * self.dim();
        let mut a = DMatrix::<f64>::zeros(rows, n2);
        let mut e = vec![0.0; n2];
        let i = c64(0.0, 1.0);
        for m in 0..n2 {
            e[m] = 1.0;
            let z = from_herm_coords(&e, n);
            e[m] = 0.0;
            for (k, b) in self.basis.iter().enumerate() {
                let comm = (&z * b - b * &z).map(|v| v * i);
                a.view_mut((k * n2, m), (n2, 1)).copy_from(&herm_coords(&comm));
            }
        }
        let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
        let null = linalg::real_null_space(&a, tol.span_rel.sqrt() * scale)?;
        let mut frame = Frame::new();
        for v in &null {
            frame.push(v, tol.span_rel, 1.0);
        }
        Ok(Self::from_frame(n, frame))
    }

    /// Intersection of the two spans.
    pub fn intersection(&self, other: &Subalgebra, tol: &Tolerances) -> Result<Subalgebra> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let (d1, d2) = (self.dim(), other.dim());
        let mut stacked = DMatrix::<f64>::zeros(self.n * self.n, d1 + d2);
        stacked.view_mut((0, 0), (self.n * self.n, d1)).copy_from(&self.coords);
        stacked
            .view_mut((0, d1), (self.n * self.n, d2))
            .copy_from(&(-&other.coords));
        let null = linalg::real_null_space(&stacked, tol.span_rel.sqrt())?;
        let mut frame = Frame::new();
        for v in &null {
            let x = &self.coords * v.rows(0, d1);
            frame.push(&x, tol.span_rel, x.norm());
        }
        Ok(Self::from_frame(self.n, frame))
    }

    pub fn center(&self) -> Result<Subalgebra> {
        self.intersection(&self.commutant()?, &Tolerances::DEFAULT)
    }

    pub fn is_commutative(&self, tol: f64) -> bool {
        self.basis.iter().enumerate().all(|(k, a)| {
            self.basis[k..]
                .iter()
                .all(|b| linalg::max_abs(&(a * b - b * a)) <= tol)
        })
    }

    pub fn verify(&self) -> AlgebraDiagnostics {
        verify_basis(&self.basis)
    }

    /// Random Hermitian element with independent standard normal coefficients.
    pub fn random_hermitian(&self, rng: &mut CounterRng) -> ComplexMatrix {
        let mut m = linalg::zeros(self.n);
        for b in &self.basis {
            m += b.scale(rng.normal());
        }
        m
    }

    /// Decomposes the algebra as `⊕_j V_j (1_{d_ℓ} ⊗ M_{d_r}) V_j*`.
    pub fn factor_decomposition(&self, rng: &mut CounterRng, tol: &Tolerances) -> Result<FactorDecomposition> {
        let center = self.center()?;
        for _ in 0..tol.factor_max_attempts.max(1) {
            match self.try_factor_decomposition(&center, rng, tol) {
                Err(Error::DegenerateRandomElement { .. }) => continue,
                other => return other,
            }
        }
        Err(Error::DegenerateRandomElement {
            attempts: tol.factor_max_attempts.max(1),
        })
    }

    fn try_factor_decomposition(
        &self,
        center: &Subalgebra,
        rng: &mut CounterRng,
        tol: &Tolerances,
    ) -> Result<FactorDecomposition> {
        let n = self.n;
        let degenerate = || Error::DegenerateRandomElement { attempts: 1 };
        let z = HermitianMatrix::from_hermitian_part(&center.random_hermitian(rng));
        let ez = hermitian_eig_with(&z, tol.eig_residual)?;
        let groups = ez.clusters(tol.eig_group_rel);
        if groups.len() != center.dim() {
            return Err(degenerate());
        }
        let mut blocks = Vec::with_capacity(groups.len());
        for g in groups {
            // Orthonormal basis of the block's range.
            let w = ez.vectors.columns(g.start, g.len()).into_owned();
            let m = g.len();
            let restricted: Vec<ComplexMatrix> = self
                .basis
                .iter()
                .map(|b| w.adjoint() * b * &w)
                .filter(|r| hs_norm(r) > tol.span_rel)
                .collect();
            let local = Subalgebra::from_spanning_set(m, &restricted, tol.span_rel)?;
            let dr = (local.dim() as f64).sqrt().round() as usize;
            if dr * dr != local.dim() || m % dr != 0 {
                return Err(Error::StructureInconsistency(format!(
                    "block of size {m} carries an algebra of dimension {}",
                    local.dim()
                )));
            }
            let dl = m / dr;
            let v_local = local.matrix_units(dl, dr, rng, tol)?;
            let isometry = &w * v_local;
            let projection = &isometry * isometry.adjoint();
            blocks.push(FactorBlock {
                projection,
                isometry,
                d_left: dl,
                d_right: dr,
            });
        }
        let dec = FactorDecomposition { n, blocks };
        let err = dec.block_form_residual(self);
        if err > 1e-8 {
            return Err(Error::StructureInconsistency(format!(
                "block form residual {err:.3e}"
            )));
        }
        Ok(dec)
    }

    /// For a factor `≅ 1_{dl} ⊗ M_{dr}` on ℂ^{dl·dr}, returns a unitary `V`
    /// with `V*AV = 1 ⊗ a` for every element.
    fn matrix_units(&self, dl: usize, dr: usize, rng: &mut CounterRng, tol: &Tolerances) -> Result<ComplexMatrix> {
        let m = self.n;
        if dr == 1 {
            return Ok(identity(m));
        }
        let degenerate = || Error::DegenerateRandomElement { attempts: 1 };
        let h = HermitianMatrix::from_hermitian_part(&self.random_hermitian(rng));
        let eh = hermitian_eig_with(&h, tol.eig_residual)?;
        let groups = eh.clusters(tol.eig_group_rel);
        if groups.len() != dr || groups.iter().any(|g| g.len() != dl) {
            return Err(degenerate());
        }
        let e: Vec<ComplexMatrix> = groups
            .iter()
            .map(|g| {
                let cols = eh.vectors.columns(g.start, g.len());
                cols * cols.adjoint()
            })
            .collect();
        let x = self.random_hermitian(rng) + self.random_hermitian(rng).map(|v| v * c64(0.0, 1.0));
        let f1 = eh.vectors.columns(groups[0].start, dl).into_owned();
        let mut v = linalg::zeros(m);
        for (a, ea) in e.iter().enumerate() {
            let unit = if a == 0 {
                e[0].clone()
            } else {
                let f = ea * &x * &e[0];
                let scale = (linalg::hs_inner(&f, &f).re / dl as f64).sqrt();
                if scale < 1e-6 * linalg::hs_norm(&x) {
                    return Err(degenerate());
                }
                f.unscale(scale)
            };
            let image = unit * &f1;
            for i in 0..dl {
                v.set_column(i * dr + a, &image.column(i));
            }
        }
        Ok(v)
    }
}

fn check_dim(n: usize, m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if m.nrows() != n { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

/// Random unitary from the QR factorization of a complex Ginibre matrix,
/// with the phases of R's diagonal absorbed so the distribution is Haar.
pub fn random_unitary(n: usize, rng: &mut CounterRng) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = ComplexMatrix::from_fn(n, n, |_, _| c64(rng.normal() * s, rng.normal() * s));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Block pattern `[(ℓ_j, r_j)]` used for randomly generated algebras of dimension `n`.
pub fn random_pattern(n: usize) -> Vec<(usize, usize)> {
    match n {
        1 => vec![(1, 1)],
        2 => vec![(1, 1), (1, 1)],
        3 => vec![(1, 2), (1, 1)],
        4 => vec![(1, 2), (1, 1), (1, 1)],
        6 => vec![(2, 2), (1, 2)],
        8 => vec![(2, 2), (1, 2), (1, 2)],
        _ => {
            let mut p = vec![(1, 2); n / 2];
            if n % 2 == 1 {
                p.push((1, 1));
            }
            p
        }
    }
}

/// Algebra generated by two random Hermitian elements of `W (⊕ 1_ℓ ⊗ M_r) W*`
/// for a random unitary `W` and the pattern from [`random_pattern`].
pub fn random_two_generator(n: usize, rng: &mut CounterRng) -> Result<Subalgebra> {
    let pattern = random_pattern(n);
    let w = random_unitary(n, rng);
    let host = Subalgebra::block_pattern(&pattern, &w)?;
    let g1 = host.random_hermitian(rng);
    let g2 = host.random_hermitian(rng);
    let alg = Subalgebra::close_generators(n, &[g1, g2])?;
    if alg.dim() != host.dim() || host.containment_residual(&alg) > 1e-8 {
        return Err(Error::StructureInconsistency(format!(
            "generated algebra has dimension {} instead of {}",
            alg.dim(),
            host.dim()
        )));
    }
    Ok(alg)
}

#[derive(Debug, Clone)]
pub struct FactorBlock {
    /// Central projection P_j.
    pub projection: ComplexMatrix,
    /// Isometry ℂ^{d_ℓ} ⊗ ℂ^{d_r} → range(P_j); columns indexed by `i·d_r + a`.
    pub isometry: ComplexMatrix,
    pub d_left: usize,
    pub d_right: usize,
}

#[derive(Debug, Clone)]
pub struct FactorDecomposition {
    pub n: usize,
    pub blocks: Vec<FactorBlock>,
}

impl FactorDecomposition {
    /// Largest deviation of `V_j* B V_j` from the form `1 ⊗ A` over the algebra's basis.
    pub fn block_form_residual(&self, alg: &Subalgebra) -> f64 {
        let mut worst = 0.0f64;
        for blk in &self.blocks {
            for b in alg.basis() {
                let local = blk.isometry.adjoint() * b * &blk.isometry;
                let reduced = linalg::partial_trace(&local, (blk.d_left, blk.d_right), linalg::Subsystem::First)
                    .expect("block dimensions")
                    .unscale(blk.d_left as f64);
                let rebuilt = tensor_product(&identity(blk.d_left), &reduced);
                worst = worst.max(linalg::max_abs(&(local - rebuilt)));
            }
        }
        worst
    }

    /// Invariant residuals: (orthogonality/completeness of P_j, isometry defects).
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let mut sum = linalg::zeros(self.n);
        let mut orth = 0.0f64;
        let mut iso = 0.0f64;
        for (j, a) in self.blocks.iter().enumerate() {
            sum += &a.projection;
            for b in &self.blocks[j + 1..] {
                orth = orth.max(linalg::max_abs(&(&a.projection * &b.projection)));
            }
            let k = a.d_left * a.d_right;
            iso = iso.max(linalg::max_abs(&(a.isometry.adjoint() * &a.isometry - identity(k))));
            iso = iso.max(linalg::max_abs(&(&a.isometry * a.isometry.adjoint() - &a.projection)));
        }
        orth = orth.max(linalg::max_abs(&(sum - identity(self.n))));
        (orth, iso)
    }

    /// Σ_j dim(M_{d_r,j}) = dimension of the decomposed algebra.
    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.d_right * b.d_right).sum()
    }
}

/// Residuals of the subalgebra invariants for an arbitrary list of basis matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgebraDiagnostics {
    pub orthonormality: f64,
    pub unital: f64,
    pub adjoint_closure: f64,
    pub product_closure: f64,
}

impl AlgebraDiagnostics {
    pub fn max(&self) -> f64 {
        self.orthonormality
            .max(self.unital)
            .max(self.adjoint_closure)
            .max(self.product_closure)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

pub fn verify_basis(basis: &[ComplexMatrix]) -> AlgebraDiagnostics {
    let Some(first) = basis.first() else {
        return AlgebraDiagnostics {
            orthonormality: 0.0,
            unital: 1.0,
            adjoint_closure: 0.0,
            product_closure: 0.0,
        };
    };
    let n = first.nrows();
    let mut orthonormality = 0.0f64;
    for (k, a) in basis.iter().enumerate() {
        for (l, b) in basis.iter().enumerate() {
            let target = if k == l { 1.0 } else { 0.0 };
            orthonormality = orthonormality.max((linalg::hs_inner(a, b) - c64(target, 0.0)).norm());
        }
    }
    // Orthonormalize the span (complex Gram–Schmidt) so residuals are meaningful
    // even when the given list is not orthonormal.
    let mut q: Vec<DVector<Complex64>> = Vec::new();
    for b in basis {
        let mut v = linalg::vectorize(b);
        for _ in 0..2 {
            for u in &q {
                let d = u.dotc(&v);
                v -= u * d;
            }
        }
        let nv = v.norm();
        if nv > 1e-14 {
            q.push(v.unscale(nv));
        }
    }
    let residual = |x: &ComplexMatrix| {
        let mut v = linalg::vectorize(x);
        for u in &q {
            let d = u.dotc(&v);
            v -= u * d;
        }
        v.norm()
    };
    let unital = residual(&identity(n).unscale((n as f64).sqrt()));
    let adjoint_closure = basis.iter().map(|b| residual(&b.adjoint())).fold(0.0, f64::max);
    let mut product_closure = 0.0f64;
    for a in basis {
        for b in basis {
            product_closure = product_closure.max(residual(&(a * b)));
        }
    }
    AlgebraDiagnostics {
        orthonormality,
        unital,
        adjoint_closure,
        product_closure,
    }
}
