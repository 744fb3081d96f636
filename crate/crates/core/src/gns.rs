//! The projection onto 𝒩 that is orthogonal for ⟨X, Y⟩ = Tr(ρ X* Y).
//!
//! It preserves adjoints exactly when ρ𝒩ρ⁻¹ = 𝒩, and in that case it is the
//! unique ρ-preserving conditional expectation onto 𝒩 and coincides with 𝓐_ρ.

use log::warn;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::Subalgebra;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::algebra::random_unitary;
use crate::linalg::{c64, from_real_diagonal, hermitian_eig_with, hs_norm, ComplexMatrix, HermitianMatrix, SpectralFn};
use crate::recovery::RecoveryContext;
use crate::rng::CounterRng;
use crate::states::DensityMatrix;
use crate::structure::modular_invariance_residual;
use crate::superop::Superoperator;

const GRAM_CONDITION_WARN: f64 = 1e12;
const RANDOM_TRIALS: usize = 4;

#[derive(Debug, Clone)]
pub struct GnsProjection {
    rho: DensityMatrix,
    alg: Subalgebra,
    gram_inverse: ComplexMatrix,
    condition: f64,
    tol: Tolerances,
}

impl GnsProjection {
    pub fn new(rho: DensityMatrix, alg: &Subalgebra, tol: &Tolerances) -> Result<Self> {
        if rho.dim() != alg.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: alg.ambient_dim(),
                found: rho.dim(),
            });
        }
        rho.require_faithful(tol)?;
        let basis = alg.basis();
        let k = basis.len();
        let gram = ComplexMatrix::from_fn(k, k, |a, b| (rho.matrix() * &basis[a] * &basis[b]).trace());
        let eig = hermitian_eig_with(&HermitianMatrix::from_hermitian_part(&gram), tol.eig_residual)?;
        let (lo, hi) = (eig.min(), eig.max());
        if lo <= 0.0 {
            return Err(Error::NonFaithful { min_eigenvalue: lo });
        }
        let condition = hi / lo;
        if condition > GRAM_CONDITION_WARN {
            warn!("GNS Gram matrix is ill-conditioned (condition number {condition:.3e})");
        }
        Ok(Self {
            gram_inverse: eig.map(|l| 1.0 / l),
            rho,
            alg: alg.clone(),
            condition,
            tol: *tol,
        })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn algebra(&self) -> &Subalgebra {
        &self.alg
    }

    pub fn gram_condition(&self) -> f64 {
        self.condition
    }

    /// 𝓟_ρ(X) = Σ_{k,l} B_k (G⁻¹)_{kl} ρ(B_l* X).
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let basis = self.alg.basis();
        let n = self.rho.dim();
        let xr = x * self.rho.matrix();
        let c: Vec<_> = basis.iter().map(|b| (b * &xr).trace()).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, bk) in basis.iter().enumerate() {
            let coef: Complex64 = c.iter().enumerate().map(|(l, cl)| self.gram_inverse[(k, l)] * cl).sum();
            out += bk * coef;
        }
        out
    }

    pub fn as_superoperator(&self) -> Superoperator {
        Superoperator::from_fn(self.rho.dim(), |x| self.project(x))
    }

    /// max ‖𝓟_ρ(E*) − 𝓟_ρ(E)*‖_HS over the matrix units E_ij.
    pub fn is_real(&self) -> FlagResidual {
        let n = self.rho.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut e = ComplexMatrix::zeros(n, n);
                e[(i, j)] = 1.0.into();
                let lhs = self.project(&e.adjoint());
                worst = worst.max(hs_norm(&(lhs - self.project(&e).adjoint())));
            }
        }
        FlagResidual::new(worst, self.tol.real_flag)
    }

    pub fn is_conditional_expectation(&self, rng: &mut CounterRng) -> Result<ConditionalExpectationDiagnostics> {
        let n = self.rho.dim();
        let unit = |m: ComplexMatrix| {
            let s = hs_norm(&m);
            m.unscale(s)
        };
        let mut module = 0.0f64;
        let mut schwarz = 0.0f64;
        for _ in 0..RANDOM_TRIALS {
            let a = unit(self.alg.random_hermitian(rng) + self.alg.random_hermitian(rng) * c64(0.0, 1.0));
            let b = unit(self.alg.random_hermitian(rng) + self.alg.random_hermitian(rng) * c64(0.0, 1.0));
            let spectrum: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let x = unit(random_unitary(n, rng) * from_real_diagonal(&spectrum));
            let px = self.project(&x);
            module = module.max(hs_norm(&(self.project(&(&a * &x * &b)) - &a * &px * &b)));
            let gap = self.project(&(x.adjoint() * &x)) - px.adjoint() * &px;
            let eig = hermitian_eig_with(&HermitianMatrix::from_hermitian_part(&gap), self.tol.eig_residual)?;
            schwarz = schwarz.max(-eig.min());
        }
        let choi = self.as_superoperator().choi();
        let eig = hermitian_eig_with(&HermitianMatrix::from_hermitian_part(&choi), self.tol.eig_residual)?;
        let flag = self.tol.real_flag;
        Ok(ConditionalExpectationDiagnostics {
            module: FlagResidual::new(module, flag),
            schwarz: FlagResidual::new(schwarz.max(0.0), flag),
            complete_positivity: FlagResidual::new((-eig.min()).max(0.0), flag),
        })
    }
}

/// A residual with the verdict `residual < threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlagResidual {
    pub flag: bool,
    pub residual: f64,
}

impl FlagResidual {
    pub fn new(residual: f64, threshold: f64) -> Self {
        Self {
            flag: residual < threshold,
            residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalExpectationDiagnostics {
    /// ‖𝓟(AXB) − A𝓟(X)B‖_HS with unit-norm random A, B ∈ 𝒩 and X.
    pub module: FlagResidual,
    /// Largest negative eigenvalue of 𝓟(X*X) − 𝓟(X)*𝓟(X).
    pub schwarz: FlagResidual,
    /// Largest negative eigenvalue of the Choi matrix.
    pub complete_positivity: FlagResidual,
}

impl ConditionalExpectationDiagnostics {
    pub fn flag(&self) -> bool {
        self.module.flag && self.schwarz.flag && self.complete_positivity.flag
    }
}

pub fn gns_project(gp: &GnsProjection, x: &ComplexMatrix) -> ComplexMatrix {
    gp.project(x)
}

/// Whether ρ𝒩ρ⁻¹ ⊆ 𝒩, by the relative residual of each basis image.
pub fn delta_invariance(rho: &DensityMatrix, alg: &Subalgebra, tol: &Tolerances) -> Result<FlagResidual> {
    rho.require_faithful(tol)?;
    Ok(FlagResidual::new(modular_invariance_residual(rho, alg, tol)?, tol.real_flag))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModularAgreement {
    /// max ‖ρAρ⁻¹ − ρ_𝒩Aρ_𝒩⁻¹‖_HS
    pub delta: f64,
    /// max ‖ρ^{1/2}Aρ^{-1/2} − ρ_𝒩^{1/2}Aρ_𝒩^{-1/2}‖_HS
    pub half_power: f64,
    /// max ‖𝓐_ρ(A) − A‖_HS
    pub accardi_cecchini: f64,
}

impl ModularAgreement {
    pub fn max(&self) -> f64 {
        self.delta.max(self.half_power).max(self.accardi_cecchini)
    }
}

pub fn modular_agreement(ctx: &RecoveryContext) -> Result<ModularAgreement> {
    let tol = ctx.tolerances();
    let alg = ctx.algebra();
    let residual = modular_invariance_residual(ctx.rho(), alg, tol)?;
    if residual >= tol.real_flag {
        return Err(Error::NotInvariant { residual });
    }
    let pow = |rho: &DensityMatrix, p: f64| rho.function(SpectralFn::Power(p), tol);
    let (r, ri, rh, rih) = (
        ctx.rho().matrix().clone(),
        pow(ctx.rho(), -1.0)?,
        ctx.rho_half().clone(),
        pow(ctx.rho(), -0.5)?,
    );
    let (n, ni, nh, nih) = (
        ctx.rho_n().matrix().clone(),
        pow(ctx.rho_n(), -1.0)?,
        ctx.rho_n_half().clone(),
        ctx.rho_n_inv_half().clone(),
    );
    let mut out = ModularAgreement {
        delta: 0.0,
        half_power: 0.0,
        accardi_cecchini: 0.0,
    };
    for a in alg.basis() {
        out.delta = out.delta.max(hs_norm(&(&r * a * &ri - &n * a * &ni)));
        out.half_power = out.half_power.max(hs_norm(&(&rh * a * &rih - &nh * a * &nih)));
        out.accardi_cecchini = out.accardi_cecchini.max(hs_norm(&(ctx.accardi_cecchini(a) - a)));
    }
    Ok(out)
}

/// The three characterizations of a ρ-preserving conditional expectation onto 𝒩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TakesakiReport {
    pub is_real: FlagResidual,
    pub delta_invariance: FlagResidual,
    pub conditional_expectation: ConditionalExpectationDiagnostics,
    pub gram_condition: f64,
    /// ‖𝓟_ρ − 𝓐_ρ‖ as superoperators (entrywise), when 𝒩 is Δ_ρ-invariant.
    pub accardi_cecchini_distance: Option<f64>,
}

impl TakesakiReport {
    pub fn flags_agree(&self) -> bool {
        let c = self.conditional_expectation.flag();
        self.is_real.flag == self.delta_invariance.flag && self.delta_invariance.flag == c
    }
}

pub fn takesaki_check(
    rho: &DensityMatrix,
    alg: &Subalgebra,
    rng: &mut CounterRng,
    tol: &Tolerances,
) -> Result<TakesakiReport> {
    let gp = GnsProjection::new(rho.clone(), alg, tol)?;
    let delta = delta_invariance(rho, alg, tol)?;
    let accardi_cecchini_distance = if delta.flag {
        let ctx = RecoveryContext::new(rho.clone(), alg, tol)?;
        Some(gp.as_superoperator().max_abs_diff(&ctx.psi_map()))
    } else {
        None
    };
    Ok(TakesakiReport {
        is_real: gp.is_real(),
        delta_invariance: delta,
        conditional_expectation: gp.is_conditional_expectation(rng)?,
        gram_condition: gp.gram_condition(),
        accardi_cecchini_distance,
    })
}
