//! Density matrices, entropy functionals and modular operators.
//!
//! Entropies are in nats. Functionals of a pair (ρ, σ) are evaluated in the
//! double eigenbasis: with σ = Σ s_i |φ_i⟩⟨φ_i| and ρ = Σ r_j |ψ_j⟩⟨ψ_j|, the
//! relative modular operator Δ_{σ,ρ}(X) = σXρ⁻¹ acts on Φ*XΨ entrywise by
//! s_i/r_j. [`PairSpectra`] holds the overlaps |⟨φ_i|ψ_j⟩|² for one pair.

use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, hermitian_eig_with, trace, trace_norm, ComplexMatrix, EigenSystem, HermitianMatrix, SpectralFn,
};
use crate::quadrature::{integrate_unit_interval, QuadratureEstimate};
use crate::rng::CounterRng;

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    eig: EigenSystem,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let matrix = HermitianMatrix::with_tolerance(m, tol.hermiticity_rel)?;
        Self::from_hermitian(matrix, tol)
    }

    pub fn from_hermitian(matrix: HermitianMatrix, tol: &Tolerances) -> Result<Self> {
        let eig = hermitian_eig_with(&matrix, tol.eig_residual)?;
        let tr = trace(matrix.as_matrix()).re;
        if (tr - 1.0).abs() > tol.state_trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        if eig.min() < -tol.state_psd {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                eig.min()
            )));
        }
        Ok(Self { matrix, eig })
    }

    /// Hermitizes and divides by the trace before validating.
    pub fn normalized(m: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let h = HermitianMatrix::from_hermitian_part(m);
        let tr = trace(h.as_matrix()).re;
        if tr.is_nan() || tr <= 0.0 {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        Self::from_hermitian(HermitianMatrix::from_hermitian_part(&h.into_inner().unscale(tr)), tol)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0 / n as f64; n]).expect("uniform")
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(linalg::from_real_diagonal(p), &Tolerances::DEFAULT)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.matrix.as_matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eig.max()
    }

    pub fn is_faithful(&self, tol: &Tolerances) -> bool {
        self.min_eigenvalue() > tol.faithful_threshold
    }

    pub fn require_faithful(&self, tol: &Tolerances) -> Result<()> {
        if self.is_faithful(tol) {
            Ok(())
        } else {
            Err(Error::NonFaithful {
                min_eigenvalue: self.min_eigenvalue(),
            })
        }
    }

    /// f(ρ) with the pseudo-inverse rule.
    pub fn function(&self, f: SpectralFn, tol: &Tolerances) -> Result<ComplexMatrix> {
        Ok(self.eig.function(f, tol.pinv_rel)?.matrix.into_inner())
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        self.eig.map(|x| x.max(0.0).sqrt())
    }

    pub fn entropy(&self) -> f64 {
        von_neumann(&self.eig.values)
    }
}

fn von_neumann(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

/// `G G* / Tr[G G*]` for an `n × rank` complex Ginibre matrix `G`.
pub fn random_density(n: usize, rank: usize, rng: &mut CounterRng) -> Result<DensityMatrix> {
    if rank == 0 || rank > n {
        return Err(Error::BadRank { rank, dim: n });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = ComplexMatrix::from_fn(n, rank, |_, _| c64(rng.normal() * s, rng.normal() * s));
    let m = &g * g.adjoint();
    DensityMatrix::normalized(&m, &Tolerances::DEFAULT)
}

/// Relative entropy, with +∞ as a tagged value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entropy {
    Finite(f64),
    Infinite { leaked_weight: f64 },
}

impl Entropy {
    pub fn finite(self) -> Option<f64> {
        match self {
            Entropy::Finite(v) => Some(v),
            Entropy::Infinite { .. } => None,
        }
    }

    pub fn require_finite(self) -> Result<f64> {
        match self {
            Entropy::Finite(v) => Ok(v),
            Entropy::Infinite { leaked_weight } => Err(Error::SupportViolation { weight: leaked_weight }),
        }
    }
}

impl fmt::Display for Entropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entropy::Finite(v) => write!(f, "{v}"),
            Entropy::Infinite { .. } => f.write_str("inf"),
        }
    }
}

impl Serialize for Entropy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Entropy::Finite(v) => s.serialize_f64(*v),
            Entropy::Infinite { .. } => s.serialize_str("inf"),
        }
    }
}

/// Spectral data shared by every functional of a pair (ρ, σ).
#[derive(Debug, Clone)]
pub struct PairSpectra {
    /// Eigenvalues of σ, ascending.
    pub s: Vec<f64>,
    /// Eigenvalues of ρ, ascending.
    pub r: Vec<f64>,
    /// Eigenvectors of σ (columns φ_i).
    pub phi: ComplexMatrix,
    /// Eigenvectors of ρ (columns ψ_j).
    pub psi: ComplexMatrix,
    /// overlap[(i, j)] = |⟨φ_i|ψ_j⟩|².
    pub overlap: nalgebra::DMatrix<f64>,
}

impl PairSpectra {
    pub fn new(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: sigma.dim(),
            });
        }
        let phi = sigma.eig.vectors.clone();
        let psi = rho.eig.vectors.clone();
        let o = phi.adjoint() * &psi;
        Ok(Self {
            s: sigma.eig.values.clone(),
            r: rho.eig.values.clone(),
            overlap: o.map(|z| z.norm_sqr()),
            phi,
            psi,
        })
    }

    fn require_faithful_rho(&self, tol: &Tolerances) -> Result<()> {
        if self.r[0] > tol.faithful_threshold {
            Ok(())
        } else {
            Err(Error::NonFaithful { min_eigenvalue: self.r[0] })
        }
    }

    pub fn relative_entropy(&self, tol: &Tolerances) -> Entropy {
        let n = self.r.len();
        let r_cut = tol.pinv_rel * self.r[n - 1];
        let s_cut = tol.pinv_rel * self.s[n - 1].max(0.0);
        let mut leaked = 0.0;
        let mut cross = 0.0;
        for i in 0..n {
            for j in 0..n {
                if self.r[j] <= r_cut {
                    continue;
                }
                let w = self.overlap[(i, j)] * self.r[j];
                if self.s[i] <= s_cut {
                    leaked += w;
                } else {
                    cross += w * self.s[i].ln();
                }
            }
        }
        if leaked > tol.support_leak {
            return Entropy::Infinite { leaked_weight: leaked };
        }
        let neg: f64 = self
            .r
            .iter()
            .filter(|&&l| l > r_cut)
            .map(|&l| l * l.ln())
            .sum();
        Entropy::Finite(neg - cross)
    }

    /// Σ_ij f(s_i/r_j)·|⟨φ_i|ψ_j⟩|²·r_j.
    pub fn quasi_entropy(&self, f: impl Fn(f64) -> f64, tol: &Tolerances) -> Result<f64> {
        self.require_faithful_rho(tol)?;
        let n = self.r.len();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += f(self.s[i] / self.r[j]) * self.overlap[(i, j)] * self.r[j];
            }
        }
        Ok(acc)
    }

    /// S_(t)(ρ‖σ) = Tr[(t + Δ_{σ,ρ})⁻¹ ρ] = ⟨ρ^{1/2}, (t + Δ)⁻¹ ρ^{1/2}⟩.
    pub fn quasi_entropy_t(&self, t: f64, tol: &Tolerances) -> Result<f64> {
        self.quasi_entropy(|x| 1.0 / (t + x), tol)
    }

    /// ∫₀^∞ (S_(t) − 1/(1+t)) dt by t = u/(1−u). Each (i, j) term contributes
    /// w·(1−x)/(u + x(1−u)) with x = s_i/r_j and w = |⟨φ_i|ψ_j⟩|² r_j.
    pub fn integral_log(&self, tol: &Tolerances) -> Result<QuadratureEstimate> {
        self.require_faithful_rho(tol)?;
        if self.s[0] <= tol.faithful_threshold {
            return Err(Error::NonFaithful { min_eigenvalue: self.s[0] });
        }
        let n = self.r.len();
        let mut terms = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                terms.push((self.s[i] / self.r[j], self.overlap[(i, j)] * self.r[j]));
            }
        }
        Ok(integrate_unit_interval(tol.quad_panels, tol.quad_nodes, tol.quad_log_span, |u| {
            terms
                .iter()
                .map(|&(x, w)| w * (1.0 - x) / (u + x * (1.0 - u)))
                .sum()
        }))
    }
}

pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix, tol: &Tolerances) -> Result<Entropy> {
    Ok(PairSpectra::new(rho, sigma)?.relative_entropy(tol))
}

pub fn quasi_entropy_t(rho: &DensityMatrix, sigma: &DensityMatrix, t: f64, tol: &Tolerances) -> Result<f64> {
    PairSpectra::new(rho, sigma)?.quasi_entropy_t(t, tol)
}

pub fn quasi_entropy_f(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    f: impl Fn(f64) -> f64,
    tol: &Tolerances,
) -> Result<f64> {
    PairSpectra::new(rho, sigma)?.quasi_entropy(f, tol)
}

pub fn integral_log_check(rho: &DensityMatrix, sigma: &DensityMatrix, tol: &Tolerances) -> Result<QuadratureEstimate> {
    PairSpectra::new(rho, sigma)?.integral_log(tol)
}

/// F(ρ, σ) = ‖√ρ √σ‖₁².
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let t = trace_norm(&(rho.sqrt() * sigma.sqrt()));
    t * t
}

/// ‖ρ − σ‖₁.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    trace_norm(&(rho.matrix() - sigma.matrix()))
}

/// ρ(X*Y) = Tr[ρ X* Y].
pub fn gns_inner(rho: &ComplexMatrix, x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    trace(&(rho * x.adjoint() * y))
}

/// Tr[ρ^{1/2} X* ρ^{1/2} Y].
pub fn kms_inner(rho: &DensityMatrix, x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    let r = rho.sqrt();
    trace(&(&r * x.adjoint() * &r * y))
}

/// Relative modular operator Δ_{σ,ρ}: X ↦ σXρ⁻¹.
#[derive(Debug, Clone)]
pub struct RelModular {
    pub sigma: DensityMatrix,
    pub rho: DensityMatrix,
}

impl RelModular {
    pub fn new(sigma: DensityMatrix, rho: DensityMatrix, tol: &Tolerances) -> Result<Self> {
        rho.require_faithful(tol)?;
        if sigma.dim() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: sigma.dim(),
            });
        }
        Ok(Self { sigma, rho })
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let rinv = self.rho.eig.map(|l| 1.0 / l);
        self.sigma.matrix() * x * rinv
    }

    /// f(Δ)(X) = Φ [f(s_i/r_j) ∘ (Φ* X Ψ)] Ψ*.
    pub fn apply_fn(&self, x: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        apply_modular_fn(&self.sigma.eig, &self.rho.eig, x, f)
    }

    /// ‖Δ_{σ,ρ}‖ = λ_max(σ)/λ_min(ρ).
    pub fn norm(&self) -> f64 {
        self.sigma.max_eigenvalue() / self.rho.min_eigenvalue()
    }
}

/// f(Δ_{σ,ρ})(X) from the eigensystems of σ (left) and ρ (right).
pub fn apply_modular_fn(
    sigma: &EigenSystem,
    rho: &EigenSystem,
    x: &ComplexMatrix,
    f: impl Fn(f64) -> f64,
) -> ComplexMatrix {
    let mut y = sigma.vectors.adjoint() * x * &rho.vectors;
    for j in 0..y.ncols() {
        for i in 0..y.nrows() {
            y[(i, j)] *= f(sigma.values[i] / rho.values[j]);
        }
    }
    &sigma.vectors * y * rho.vectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_parts, identity};
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::DEFAULT
    }

    fn qubit_rho() -> DensityMatrix {
        DensityMatrix::new(from_parts(&[vec![0.5, 0.25], vec![0.25, 0.5]], None).unwrap(), &tol()).unwrap()
    }

    fn binary_entropy_qubit() -> f64 {
        -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln())
    }

    #[test]
    fn density_validation() {
        let bad = from_parts(&[vec![0.6, 0.0], vec![0.0, 0.6]], None).unwrap();
        assert!(matches!(DensityMatrix::new(bad, &tol()), Err(Error::InvalidState(_))));
        let neg = from_parts(&[vec![1.1, 0.0], vec![0.0, -0.1]], None).unwrap();
        assert!(matches!(DensityMatrix::new(neg, &tol()), Err(Error::InvalidState(_))));
        assert!(qubit_rho().is_faithful(&tol()));
    }

    #[test]
    fn random_density_examples() {
        let d = random_density(1, 1, &mut CounterRng::new(1)).unwrap();
        assert_abs_diff_eq!(d.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        let p = random_density(2, 1, &mut CounterRng::new(2)).unwrap();
        assert_abs_diff_eq!(p.min_eigenvalue(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.max_eigenvalue(), 1.0, epsilon = 1e-12);
        let a = random_density(4, 4, &mut CounterRng::new(3)).unwrap();
        let b = random_density(4, 4, &mut CounterRng::new(3)).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert!(matches!(random_density(2, 3, &mut CounterRng::new(0)), Err(Error::BadRank { .. })));
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = qubit_rho();
        let half = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(relative_entropy(&rho, &rho, &tol()).unwrap().finite().unwrap(), 0.0, epsilon = 1e-14);
        let v = relative_entropy(&rho, &half, &tol()).unwrap().finite().unwrap();
        assert_abs_diff_eq!(v, 2f64.ln() - binary_entropy_qubit(), epsilon = 1e-14);
        assert_abs_diff_eq!(v, 0.1308, epsilon = 1e-4);
        let pure = DensityMatrix::from_diagonal(&[0.0, 0.0, 1.0]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(3);
        let v = relative_entropy(&pure, &mixed, &tol()).unwrap().finite().unwrap();
        assert_abs_diff_eq!(v, 3f64.ln(), epsilon = 1e-14);
        let inf = relative_entropy(&mixed, &pure, &tol()).unwrap();
        assert!(matches!(inf, Entropy::Infinite { .. }));
        assert_eq!(serde_json::to_string(&inf).unwrap(), "\"inf\"");
        assert_eq!(inf.to_string(), "inf");
    }

    #[test]
    fn quasi_entropy_examples() {
        let m = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(quasi_entropy_t(&m, &m, 0.7, &tol()).unwrap(), 1.0 / 1.7, epsilon = 1e-15);
        let rho = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let sigma = DensityMatrix::from_diagonal(&[0.6, 0.1, 0.3]).unwrap();
        let t = 0.4;
        let expected: f64 = [(0.2, 0.6), (0.3, 0.1), (0.5, 0.3)]
            .iter()
            .map(|&(r, s)| r / (t + s / r))
            .sum();
        assert_abs_diff_eq!(quasi_entropy_t(&rho, &sigma, t, &tol()).unwrap(), expected, epsilon = 1e-15);
        let mut prev = f64::INFINITY;
        for t in [1.0, 10.0, 100.0, 1e4] {
            let v = quasi_entropy_t(&rho, &sigma, t, &tol()).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(prev < 1e-3);
        let one = quasi_entropy_f(&rho, &sigma, |_| 1.0, &tol()).unwrap();
        assert_abs_diff_eq!(one, 1.0, epsilon = 1e-14);
        let s = relative_entropy(&rho, &sigma, &tol()).unwrap().finite().unwrap();
        assert_abs_diff_eq!(quasi_entropy_f(&rho, &sigma, |x| -x.ln(), &tol()).unwrap(), s, epsilon = 1e-12);
    }

    #[test]
    fn integral_log_examples() {
        let rho = qubit_rho();
        let q = integral_log_check(&rho, &rho, &tol()).unwrap();
        assert!(q.value.abs() < 1e-8);
        let half = DensityMatrix::maximally_mixed(2);
        let q = integral_log_check(&rho, &half, &tol()).unwrap();
        assert_abs_diff_eq!(q.value, 2f64.ln() - binary_entropy_qubit(), epsilon = 1e-10);
        let p = DensityMatrix::from_diagonal(&[0.1, 0.2, 0.7]).unwrap();
        let r = DensityMatrix::from_diagonal(&[0.5, 0.25, 0.25]).unwrap();
        let classical: f64 = [(0.1, 0.5), (0.2, 0.25), (0.7, 0.25)].iter().map(|&(a, b): &(f64, f64)| a * (a / b).ln()).sum();
        assert_abs_diff_eq!(integral_log_check(&p, &r, &tol()).unwrap().value, classical, epsilon = 1e-10);
    }

    #[test]
    fn fidelity_examples() {
        let rho = qubit_rho();
        assert_abs_diff_eq!(fidelity(&rho, &rho), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&rho, &rho), 0.0, epsilon = 1e-14);
        let a = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(fidelity(&a, &b), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&a, &b), 2.0, epsilon = 1e-14);
        let p = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        let f = fidelity(&p, &DensityMatrix::maximally_mixed(2));
        assert_abs_diff_eq!(f, (0.375f64.sqrt() + 0.125f64.sqrt()).powi(2), epsilon = 1e-14);
        assert_abs_diff_eq!(f, 0.933, epsilon = 1e-3);
    }

    #[test]
    fn modular_examples() {
        let m = DensityMatrix::maximally_mixed(2);
        let d = RelModular::new(m.clone(), m.clone(), &tol()).unwrap();
        assert_abs_diff_eq!(d.norm(), 1.0, epsilon = 1e-15);
        let d = RelModular::new(m, qubit_rho(), &tol()).unwrap();
        assert_abs_diff_eq!(d.norm(), 2.0, epsilon = 1e-12);
        let x = from_parts(&[vec![0.3, -1.0], vec![2.0, 0.1]], Some(&[vec![0.0, 0.5], vec![0.2, 0.0]])).unwrap();
        let via_fn = d.apply_fn(&x, |v| v);
        assert!(linalg::max_abs(&(via_fn - d.apply(&x))) < 1e-13);
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            RelModular::new(qubit_rho(), pure, &tol()),
            Err(Error::NonFaithful { .. })
        ));
    }

    #[test]
    fn inner_product_examples() {
        let rho = qubit_rho();
        let x = from_parts(&[vec![0.3, -1.0], vec![2.0, 0.1]], None).unwrap();
        let one = identity(2);
        assert_abs_diff_eq!(gns_inner(rho.matrix(), &one, &one).re, 1.0, epsilon = 1e-15);
        let k = kms_inner(&rho, &one, &x);
        let g = gns_inner(rho.matrix(), &one, &x);
        assert!((k - g).norm() < 1e-14);
        let m = DensityMatrix::maximally_mixed(2);
        let y = x.adjoint() * c64(0.0, 1.0);
        let tr = trace(&(x.adjoint() * &y)) / 2.0;
        assert!((kms_inner(&m, &x, &y) - tr).norm() < 1e-14);
        assert!((gns_inner(m.matrix(), &x, &y) - tr).norm() < 1e-14);
    }
}
