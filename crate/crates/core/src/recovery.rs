//! Coarse graining and recovery for a faithful state ρ and a subalgebra 𝒩.
//!
//! With ρ_𝒩 = 𝓔_τ(ρ):
//!
//! ```text
//! 𝓐_ρ(X) = ρ_𝒩^{-1/2} 𝓔_τ(ρ^{1/2} X ρ^{1/2}) ρ_𝒩^{-1/2}
//! 𝓡_ρ(γ) = ρ^{1/2} ρ_𝒩^{-1/2} γ ρ_𝒩^{-1/2} ρ^{1/2}
//! U(X)   = 𝓔_τ(X) ρ_𝒩^{-1/2} ρ^{1/2},    U*(Y) = 𝓔_τ(Y ρ^{1/2}) ρ_𝒩^{-1/2}
//! ```
//!
//! 𝓡_ρ is the Hilbert–Schmidt adjoint of 𝓐_ρ, and U restricted to 𝒩 is an
//! isometry with U(ρ_𝒩^{1/2}) = ρ^{1/2}.

use log::debug;

use crate::algebra::Subalgebra;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, hs_inner, hs_norm, trace, trace_norm, ComplexMatrix, HermitianMatrix};
use crate::quadrature::{GradedRule, QuadratureEstimate};
use crate::states::{apply_modular_fn, DensityMatrix, PairSpectra};
use crate::superop::Superoperator;

#[derive(Debug, Clone)]
pub struct RecoveryContext {
    rho: DensityMatrix,
    alg: Subalgebra,
    rho_n: DensityMatrix,
    rho_half: ComplexMatrix,
    rho_n_half: ComplexMatrix,
    rho_n_inv_half: ComplexMatrix,
    tol: Tolerances,
}

/// Hermitizes `m` and rescales it to unit trace. The trace of a trace-preserving
/// image can only drift by roundoff, so anything beyond `recovery_renorm` is an error.
fn renormalize(m: &ComplexMatrix, what: &str, tol: &Tolerances) -> Result<DensityMatrix> {
    let raw = HermitianMatrix::from_hermitian_part(m);
    let tr = trace(raw.as_matrix()).re;
    let drift = (tr - 1.0).abs();
    if drift.is_nan() || drift > tol.recovery_renorm {
        return Err(Error::InvalidState(format!(
            "{what} trace {tr} drifted beyond the renormalization window"
        )));
    }
    if drift > 0.0 {
        debug!("renormalizing {what} state (trace drift {drift:.3e})");
    }
    let m = raw.into_inner().unscale(tr);
    DensityMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&m), tol)
}

impl RecoveryContext {
    pub fn new(rho: DensityMatrix, alg: &Subalgebra, tol: &Tolerances) -> Result<Self> {
        if rho.dim() != alg.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: alg.ambient_dim(),
                found: rho.dim(),
            });
        }
        rho.require_faithful(tol)?;
        let rho_n = renormalize(&alg.project(rho.matrix()), "reduced", tol)?;
        rho_n.require_faithful(tol)?;
        let rho_half = rho.sqrt();
        let rho_n_half = rho_n.sqrt();
        let rho_n_inv_half = rho_n.eigen().map(|l| 1.0 / l.sqrt());
        Ok(Self {
            rho,
            alg: alg.clone(),
            rho_n,
            rho_half,
            rho_n_half,
            rho_n_inv_half,
            tol: *tol,
        })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn rho_n(&self) -> &DensityMatrix {
        &self.rho_n
    }

    pub fn algebra(&self) -> &Subalgebra {
        &self.alg
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn rho_half(&self) -> &ComplexMatrix {
        &self.rho_half
    }

    pub fn rho_n_half(&self) -> &ComplexMatrix {
        &self.rho_n_half
    }

    pub fn rho_n_inv_half(&self) -> &ComplexMatrix {
        &self.rho_n_inv_half
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// 𝓔_τ(X). This and the other linear maps on the context expect n × n
    /// input and panic on any other shape, as matrix arithmetic does.
    pub fn conditional_expectation(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.alg.project(x)
    }

    pub fn accardi_cecchini(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let inner = self.alg.project(&(&self.rho_half * x * &self.rho_half));
        &self.rho_n_inv_half * inner * &self.rho_n_inv_half
    }

    /// The linear map γ ↦ ρ^{1/2} ρ_𝒩^{-1/2} γ ρ_𝒩^{-1/2} ρ^{1/2} without any checks.
    pub fn petz_map(&self, gamma: &ComplexMatrix) -> ComplexMatrix {
        let a = &self.rho_half * &self.rho_n_inv_half;
        &a * gamma * a.adjoint()
    }

    /// 𝓡_ρ(γ) for a state γ in the algebra, hermitized and renormalized.
    pub fn petz_recovery(&self, gamma: &DensityMatrix) -> Result<DensityMatrix> {
        if gamma.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: gamma.dim(),
            });
        }
        let residual = self.alg.residual(gamma.matrix());
        if residual > 1e-9 {
            return Err(Error::NotInAlgebra { residual });
        }
        self.recover_state(gamma.matrix())
    }

    pub(crate) fn recover_state(&self, gamma: &ComplexMatrix) -> Result<DensityMatrix> {
        renormalize(&self.petz_map(gamma), "recovered", &self.tol)
    }

    pub fn embedding_u(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.alg.project(x) * &self.rho_n_inv_half * &self.rho_half
    }

    pub fn embedding_u_adjoint(&self, y: &ComplexMatrix) -> ComplexMatrix {
        self.alg.project(&(y * &self.rho_half)) * &self.rho_n_inv_half
    }

    /// Φ = 𝓡_ρ ∘ 𝓔_τ.
    pub fn phi_map(&self) -> Superoperator {
        Superoperator::from_fn(self.dim(), |x| self.petz_map(&self.alg.project(x)))
    }

    /// Ψ = ι ∘ 𝓐_ρ.
    pub fn psi_map(&self) -> Superoperator {
        Superoperator::from_fn(self.dim(), |x| self.accardi_cecchini(x))
    }
}

/// Residuals of the Petz equation and of its square-root form, in both directions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PetzResiduals {
    /// ‖𝓡_ρ(σ_𝒩) − σ‖₁
    pub petz_trace_residual: f64,
    /// ‖𝓡_σ(ρ_𝒩) − ρ‖₁
    pub symm_trace_residual: f64,
    /// ‖σ_𝒩^{1/2} ρ_𝒩^{-1/2} ρ^{1/2} − σ^{1/2}‖₂
    pub eqcase_hs_residual: f64,
    /// ‖ρ_𝒩^{1/2} σ_𝒩^{-1/2} σ^{1/2} − ρ^{1/2}‖₂
    pub eqcase_symm_hs_residual: f64,
}

impl PetzResiduals {
    pub fn max(&self) -> f64 {
        self.petz_trace_residual
            .max(self.symm_trace_residual)
            .max(self.eqcase_hs_residual)
            .max(self.eqcase_symm_hs_residual)
    }
}

/// Recovery contexts for both states of a pair over the same algebra.
#[derive(Debug, Clone)]
pub struct PairContext {
    pub rho: RecoveryContext,
    pub sigma: RecoveryContext,
    full: PairSpectra,
    reduced: PairSpectra,
}

impl PairContext {
    pub fn new(rho: DensityMatrix, sigma: DensityMatrix, alg: &Subalgebra, tol: &Tolerances) -> Result<Self> {
        let rho = RecoveryContext::new(rho, alg, tol)?;
        let sigma = RecoveryContext::new(sigma, alg, tol)?;
        let full = PairSpectra::new(rho.rho(), sigma.rho())?;
        let reduced = PairSpectra::new(rho.rho_n(), sigma.rho_n())?;
        Ok(Self {
            rho,
            sigma,
            full,
            reduced,
        })
    }

    pub fn from_context(rho: RecoveryContext, sigma: DensityMatrix) -> Result<Self> {
        let tol = *rho.tolerances();
        let alg = rho.algebra().clone();
        let sigma = RecoveryContext::new(sigma, &alg, &tol)?;
        let full = PairSpectra::new(rho.rho(), sigma.rho())?;
        let reduced = PairSpectra::new(rho.rho_n(), sigma.rho_n())?;
        Ok(Self {
            rho,
            sigma,
            full,
            reduced,
        })
    }

    pub fn tolerances(&self) -> &Tolerances {
        self.rho.tolerances()
    }

    /// Spectral data of (ρ, σ).
    pub fn full_spectra(&self) -> &PairSpectra {
        &self.full
    }

    /// Spectral data of (ρ_𝒩, σ_𝒩).
    pub fn reduced_spectra(&self) -> &PairSpectra {
        &self.reduced
    }

    /// Δ_{σ,ρ}(X).
    pub fn delta(&self, x: &ComplexMatrix) -> ComplexMatrix {
        apply_modular_fn(self.sigma.rho().eigen(), self.rho.rho().eigen(), x, |v| v)
    }

    /// Δ_{σ_𝒩,ρ_𝒩}(X).
    pub fn delta_n(&self, x: &ComplexMatrix) -> ComplexMatrix {
        apply_modular_fn(self.sigma.rho_n().eigen(), self.rho.rho_n().eigen(), x, |v| v)
    }

    /// (t + Δ_{σ,ρ})⁻¹ X.
    pub fn resolvent(&self, t: f64, x: &ComplexMatrix) -> ComplexMatrix {
        apply_modular_fn(self.sigma.rho().eigen(), self.rho.rho().eigen(), x, |v| 1.0 / (t + v))
    }

    /// (t + Δ_{σ_𝒩,ρ_𝒩})⁻¹ X.
    pub fn resolvent_n(&self, t: f64, x: &ComplexMatrix) -> ComplexMatrix {
        apply_modular_fn(self.sigma.rho_n().eigen(), self.rho.rho_n().eigen(), x, |v| 1.0 / (t + v))
    }

    /// w_t = U (t + Δ_{σ_𝒩,ρ_𝒩})⁻¹ ρ_𝒩^{1/2} − (t + Δ_{σ,ρ})⁻¹ ρ^{1/2}.
    ///
    /// For t > 1 the equivalent form (1/t)[Δ(t + Δ)⁻¹ ρ^{1/2} − U Δ_𝒩(t + Δ_𝒩)⁻¹ ρ_𝒩^{1/2}]
    /// is used, which avoids cancelling two terms of size 1/t.
    pub fn w_vector(&self, t: f64) -> ComplexMatrix {
        let (s, r) = (self.sigma.rho().eigen(), self.rho.rho().eigen());
        let (sn, rn) = (self.sigma.rho_n().eigen(), self.rho.rho_n().eigen());
        if t <= 1.0 {
            let reduced = apply_modular_fn(sn, rn, self.rho.rho_n_half(), |v| 1.0 / (t + v));
            self.rho.embedding_u(&reduced) - apply_modular_fn(s, r, self.rho.rho_half(), |v| 1.0 / (t + v))
        } else {
            let full = apply_modular_fn(s, r, self.rho.rho_half(), |v| v / (t + v));
            let reduced = apply_modular_fn(sn, rn, self.rho.rho_n_half(), |v| v / (t + v));
            (full - self.rho.embedding_u(&reduced)).unscale(t)
        }
    }

    /// (S_(t)(ρ‖σ) − S_(t)(ρ_𝒩‖σ_𝒩), ⟨w_t, (t + Δ) w_t⟩).
    pub fn gap_identity(&self, t: f64) -> Result<(f64, f64)> {
        let tol = self.tolerances();
        let lhs = self.full.quasi_entropy_t(t, tol)? - self.reduced.quasi_entropy_t(t, tol)?;
        let w = self.w_vector(t);
        let aw = w.scale(t) + self.delta(&w);
        Ok((lhs, hs_inner(&w, &aw).re))
    }

    /// With A = t + Δ_{σ,ρ}, B = t + Δ_{σ_𝒩,ρ_𝒩}, v = ρ_𝒩^{1/2}:
    /// (⟨v, U*A⁻¹U v⟩, ⟨v, B⁻¹v⟩ + ⟨w_t, A w_t⟩).
    pub fn resolvent_identity(&self, t: f64) -> (f64, f64) {
        let v = self.rho.rho_n_half();
        let uv = self.rho.embedding_u(v);
        let lhs = hs_inner(v, &self.rho.embedding_u_adjoint(&self.resolvent(t, &uv))).re;
        let w = self.w_vector(t);
        let aw = w.scale(t) + self.delta(&w);
        let rhs = hs_inner(v, &self.resolvent_n(t, v)).re + hs_inner(&w, &aw).re;
        (lhs, rhs)
    }

    /// σ_𝒩^{1/2} ρ_𝒩^{-1/2} ρ^{1/2}.
    pub fn transported_root(&self) -> ComplexMatrix {
        self.sigma.rho_n_half() * self.rho.rho_n_inv_half() * self.rho.rho_half()
    }

    /// (1/π) ∫₀^∞ t^{1/2} w_t dt by the graded rule on t = u/(1−u); the exact
    /// value is σ^{1/2} − σ_𝒩^{1/2} ρ_𝒩^{-1/2} ρ^{1/2}. Returns the quadrature
    /// result, its HS distance to the exact value, and the panel-doubling estimate.
    pub fn integral_reconstruction(&self) -> (ComplexMatrix, QuadratureEstimate) {
        let tol = self.tolerances();
        let integrate = |panels: usize| {
            let rule = GradedRule::new(panels, tol.quad_nodes, tol.quad_log_span);
            let mut acc = linalg::zeros(self.rho.dim());
            for ((&u, &cu), &wgt) in rule.nodes.iter().zip(&rule.complements).zip(&rule.weights) {
                let t = u / cu;
                let jac = 1.0 / (cu * cu);
                acc += self.w_vector(t).scale(wgt * t.sqrt() * jac);
            }
            acc.unscale(std::f64::consts::PI)
        };
        let coarse = integrate(tol.quad_panels);
        let fine = integrate(2 * tol.quad_panels);
        let exact = self.sigma.rho_half() - self.transported_root();
        let est = QuadratureEstimate {
            value: hs_norm(&(&fine - exact)),
            abs_error_estimate: hs_norm(&(&fine - coarse)),
        };
        (fine, est)
    }

    pub fn petz_residuals(&self) -> Result<PetzResiduals> {
        let rec_sigma = self.rho.recover_state(self.sigma.rho_n().matrix())?;
        let rec_rho = self.sigma.recover_state(self.rho.rho_n().matrix())?;
        let symm_root = self.rho.rho_n_half() * self.sigma.rho_n_inv_half() * self.sigma.rho_half();
        Ok(PetzResiduals {
            petz_trace_residual: trace_norm(&(rec_sigma.matrix() - self.sigma.rho().matrix())),
            symm_trace_residual: trace_norm(&(rec_rho.matrix() - self.rho.rho().matrix())),
            eqcase_hs_residual: hs_norm(&(self.transported_root() - self.sigma.rho_half())),
            eqcase_symm_hs_residual: hs_norm(&(symm_root - self.rho.rho_half())),
        })
    }
}
