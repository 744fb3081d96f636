//! The fixed-point algebra 𝒞 of Ψ = ι ∘ 𝓐_ρ and the block structure it induces.
//!
//! 𝒞 decomposes as ⊕_j V_j (1_{ℓ} ⊗ M_{r}) V_j* and ρ splits accordingly:
//! ρ = Σ_j V_j (γ_j ⊗ ω_j) V_j* with γ_j a density matrix on the left factor.
//! The left-factor convention is used throughout. Every density σ solving the
//! Petz equation 𝓡_ρ(σ_𝒩) = σ has the form Σ_j w_j V_j (γ_j ⊗ s_j) V_j*.

use nalgebra::DVector;
use serde::Serialize;

use crate::algebra::{FactorBlock, FactorDecomposition, Subalgebra};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{
    checked_svd, hs_norm, identity, max_abs, op_norm, partial_trace, tensor_product, trace, unvectorize, ComplexMatrix,
    HermitianMatrix, SpectralFn, Subsystem,
};
use crate::recovery::RecoveryContext;
use crate::rng::CounterRng;
use crate::states::{random_density, DensityMatrix};

#[derive(Debug, Clone)]
pub struct FixedPointAlgebra {
    pub algebra: Subalgebra,
    /// ‖Q_eig Q_eig* − Q_ces Q_ces*‖ between the eigenspace and the range of the ergodic average.
    pub cesaro_distance: f64,
    /// Largest entry of (plain Cesàro mean of Ψ) − (ergodic projection); decays like 1/N.
    pub plain_cesaro_deviation: f64,
}

/// (1/N) Σ_{k=1}^{N} T^k with N rounded up to a power of two, summed by doubling.
fn ergodic_average(t: &ComplexMatrix, terms: usize) -> ComplexMatrix {
    let total = terms.max(1).next_power_of_two();
    let mut sum = identity(t.nrows());
    let mut pow = t.clone();
    let mut m = 1;
    while m < total {
        sum = &sum + &pow * &sum;
        pow = &pow * &pow;
        m *= 2;
    }
    (t * sum).unscale(total as f64)
}

/// Columns of `u` (orthonormal) whose singular values pass `keep`.
fn range_basis(x: &ComplexMatrix, rel: f64) -> Result<ComplexMatrix> {
    let svd = checked_svd(x)?;
    let u = &svd.u;
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<DVector<_>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel * top)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    Ok(ComplexMatrix::from_columns(&cols).resize_horizontally(cols.len(), Default::default()))
}

fn subspace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    op_norm(&(a * a.adjoint() - b * b.adjoint()))
}

/// Eigenvalue-1 eigenspace of Ψ, checked to be a subalgebra of 𝒩 and
/// compared with the range of the ergodic average over Ψ^(2^k).
pub fn fixed_point_algebra(ctx: &RecoveryContext) -> Result<FixedPointAlgebra> {
    let tol = ctx.tolerances();
    ctx.rho().require_faithful(tol)?;
    let n = ctx.dim();
    let psi = ctx.psi_map();
    let m = psi.matrix();
    let dim = n * n;

    let svd = checked_svd(&(m - identity(dim)))?;
    let v_t = &svd.v_t;
    let threshold = tol.fixed_point_sv_rel * op_norm(m);
    let null: Vec<DVector<_>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < threshold)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect();
    let q_eig = ComplexMatrix::from_columns(&null).resize_horizontally(null.len(), Default::default());

    let mats: Vec<ComplexMatrix> = null
        .iter()
        .map(|v| ctx.algebra().project(&unvectorize(v, n)))
        .collect();
    let algebra = Subalgebra::from_spanning_set(n, &mats, tol.span_rel)?;
    if algebra.dim() != null.len() {
        return Err(Error::StructureInconsistency(format!(
            "fixed-point eigenspace has dimension {} but only {} directions lie in the algebra",
            null.len(),
            algebra.dim()
        )));
    }
    let diag = algebra.verify();
    if !diag.is_valid(tol.algebra_check) {
        return Err(Error::StructureInconsistency(format!(
            "fixed points do not close as an algebra (residual {:.3e})",
            diag.max()
        )));
    }

    let mut t = m.clone();
    for _ in 0..tol.cesaro_squarings {
        t = &t * &t;
    }
    let avg = ergodic_average(&t, tol.cesaro_terms);
    let q_ces = range_basis(&avg, tol.cesaro_rank_rel)?;
    let cesaro_distance = subspace_distance(&q_eig, &q_ces);
    if cesaro_distance > tol.cesaro_agreement {
        return Err(Error::StructureInconsistency(format!(
            "eigenspace (dim {}) and ergodic average (rank {}) disagree by {cesaro_distance:.3e}",
            q_eig.ncols(),
            q_ces.ncols()
        )));
    }
    let plain_cesaro_deviation = if tol.cesaro_squarings == 0 {
        0.0
    } else {
        max_abs(&(ergodic_average(m, tol.cesaro_terms) - &avg))
    };
    Ok(FixedPointAlgebra {
        algebra,
        cesaro_distance,
        plain_cesaro_deviation,
    })
}

/// Relative HS residual of ρAρ⁻¹ against span(alg), maximized over the basis.
pub fn modular_invariance_residual(rho: &DensityMatrix, alg: &Subalgebra, tol: &Tolerances) -> Result<f64> {
    let inv = rho.function(SpectralFn::Inverse, tol)?;
    Ok(alg
        .basis()
        .iter()
        .map(|a| {
            let image = rho.matrix() * a * &inv;
            alg.residual(&image) / hs_norm(&image)
        })
        .fold(0.0, f64::max))
}

/// max_A ‖ρAρ⁻¹ − ρ_𝒩Aρ_𝒩⁻¹‖_HS over a basis of `alg`.
pub fn modular_agreement_residual(ctx: &RecoveryContext, alg: &Subalgebra) -> Result<f64> {
    let tol = ctx.tolerances();
    let inv = ctx.rho().function(SpectralFn::Inverse, tol)?;
    let inv_n = ctx.rho_n().function(SpectralFn::Inverse, tol)?;
    Ok(alg
        .basis()
        .iter()
        .map(|a| hs_norm(&(ctx.rho().matrix() * a * &inv - ctx.rho_n().matrix() * a * &inv_n)))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureDiagnostics {
    /// Largest HS residual of a basis element of 𝒞 against 𝒩.
    pub containment: f64,
    pub modular_invariance: f64,
    pub modular_agreement: f64,
    pub reconstruction: f64,
    pub reduced_reconstruction: f64,
    /// ‖𝓔_τ(γ_j ⊗ 1) − γ̃_j ⊗ 1‖ maximized over blocks.
    pub gamma_transport: f64,
    pub cesaro_distance: f64,
    pub plain_cesaro_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct FixedPointStructure {
    pub algebra: Subalgebra,
    pub decomposition: FactorDecomposition,
    /// Tr(P_j ρ).
    pub weights: Vec<f64>,
    pub gammas: Vec<DensityMatrix>,
    /// Tr_ℓ(V_j* ρ V_j), unnormalized.
    pub rho_blocks: Vec<ComplexMatrix>,
    pub reduced_gammas: Vec<DensityMatrix>,
    pub diagnostics: StructureDiagnostics,
}

fn local(blk: &FactorBlock, x: &ComplexMatrix) -> ComplexMatrix {
    blk.isometry.adjoint() * x * &blk.isometry
}

fn embed(blk: &FactorBlock, x: &ComplexMatrix) -> ComplexMatrix {
    &blk.isometry * x * blk.isometry.adjoint()
}

fn dims(blk: &FactorBlock) -> (usize, usize) {
    (blk.d_left, blk.d_right)
}

/// Left marginal Tr_r(V* x V) / Tr(P x), as a density matrix.
fn left_state(blk: &FactorBlock, x: &ComplexMatrix, tol: &Tolerances) -> Result<(DensityMatrix, f64)> {
    let l = local(blk, x);
    let weight = trace(&l).re;
    if weight < 1e-12 {
        return Err(Error::StructureInconsistency(format!("block carries weight {weight:.3e}")));
    }
    let g = partial_trace(&l, dims(blk), Subsystem::Second)?.unscale(weight);
    Ok((DensityMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&g), tol)?, weight))
}

fn reassemble(blocks: &[FactorBlock], left: &[DensityMatrix], right: &[ComplexMatrix], n: usize) -> ComplexMatrix {
    blocks
        .iter()
        .zip(left)
        .zip(right)
        .fold(ComplexMatrix::zeros(n, n), |acc, ((blk, g), r)| {
            acc + embed(blk, &tensor_product(g.matrix(), r))
        })
}

pub fn build_structure(ctx: &RecoveryContext, rng: &mut CounterRng) -> Result<FixedPointStructure> {
    let tol = ctx.tolerances();
    let fixed = fixed_point_algebra(ctx)?;
    let decomposition = fixed.algebra.factor_decomposition(rng, tol)?;
    let n = ctx.dim();
    let rho = ctx.rho().matrix();
    let rho_n = ctx.rho_n().matrix();

    let mut weights = Vec::new();
    let mut gammas = Vec::new();
    let mut rho_blocks = Vec::new();
    let mut reduced_gammas = Vec::new();
    let mut reduced_blocks = Vec::new();
    let mut gamma_transport = 0.0f64;
    for blk in &decomposition.blocks {
        let (g, w) = left_state(blk, rho, tol)?;
        let (gn, _) = left_state(blk, rho_n, tol)?;
        rho_blocks.push(partial_trace(&local(blk, rho), dims(blk), Subsystem::First)?);
        reduced_blocks.push(partial_trace(&local(blk, rho_n), dims(blk), Subsystem::First)?);
        let one = identity(blk.d_right);
        let lifted = ctx.algebra().project(&embed(blk, &tensor_product(g.matrix(), &one)));
        gamma_transport = gamma_transport.max(max_abs(&(lifted - embed(blk, &tensor_product(gn.matrix(), &one)))));
        weights.push(w);
        gammas.push(g);
        reduced_gammas.push(gn);
    }

    let reconstruction = max_abs(&(rho - reassemble(&decomposition.blocks, &gammas, &rho_blocks, n)));
    let reduced_reconstruction =
        max_abs(&(rho_n - reassemble(&decomposition.blocks, &reduced_gammas, &reduced_blocks, n)));
    if reconstruction > 1e-8 {
        return Err(Error::StructureInconsistency(format!(
            "block reconstruction of ρ off by {reconstruction:.3e}"
        )));
    }
    let diagnostics = StructureDiagnostics {
        containment: ctx.algebra().containment_residual(&fixed.algebra),
        modular_invariance: modular_invariance_residual(ctx.rho(), &fixed.algebra, tol)?,
        modular_agreement: modular_agreement_residual(ctx, &fixed.algebra)?,
        reconstruction,
        reduced_reconstruction,
        gamma_transport,
        cesaro_distance: fixed.cesaro_distance,
        plain_cesaro_deviation: fixed.plain_cesaro_deviation,
    };
    Ok(FixedPointStructure {
        algebra: fixed.algebra,
        decomposition,
        weights,
        gammas,
        rho_blocks,
        reduced_gammas,
        diagnostics,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockProfile {
    pub d_left: usize,
    pub d_right: usize,
    pub weight: f64,
}

impl FixedPointStructure {
    pub fn dim(&self) -> usize {
        self.decomposition.n
    }

    pub fn profile(&self) -> Vec<BlockProfile> {
        self.decomposition
            .blocks
            .iter()
            .zip(&self.weights)
            .map(|(b, &w)| BlockProfile {
                d_left: b.d_left,
                d_right: b.d_right,
                weight: w,
            })
            .collect()
    }

    /// 𝓔_𝒞(Y) = Σ_j V_j (1 ⊗ Tr_ℓ[(γ_j ⊗ 1) V_j* Y V_j]) V_j*.
    pub fn conditional_expectation(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim();
        self.decomposition
            .blocks
            .iter()
            .zip(&self.gammas)
            .fold(ComplexMatrix::zeros(n, n), |acc, (blk, g)| {
                let weighted = tensor_product(g.matrix(), &identity(blk.d_right)) * local(blk, y);
                let right = partial_trace(&weighted, dims(blk), Subsystem::First).expect("block dimensions");
                acc + embed(blk, &tensor_product(&identity(blk.d_left), &right))
            })
    }

    /// 𝓔_𝒞†(τ) = Σ_j V_j (γ_j ⊗ Tr_ℓ(V_j* τ V_j)) V_j*, without state checks.
    pub fn dual_map(&self, tau: &ComplexMatrix) -> ComplexMatrix {
        let right: Vec<ComplexMatrix> = self
            .decomposition
            .blocks
            .iter()
            .map(|blk| partial_trace(&local(blk, tau), dims(blk), Subsystem::First).expect("block dimensions"))
            .collect();
        reassemble(&self.decomposition.blocks, &self.gammas, &right, self.dim())
    }

    pub fn dual_expectation_state(&self, tau: &DensityMatrix, tol: &Tolerances) -> Result<DensityMatrix> {
        if tau.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: tau.dim(),
            });
        }
        DensityMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&self.dual_map(tau.matrix())), tol)
    }

    /// σ = Σ_j w_j V_j (γ_j ⊗ s_j) V_j*.
    pub fn build_equality_state(
        &self,
        block_states: &[DensityMatrix],
        weights: &[f64],
        tol: &Tolerances,
    ) -> Result<DensityMatrix> {
        let blocks = &self.decomposition.blocks;
        if weights.len() != blocks.len() {
            return Err(Error::BadWeights(format!(
                "expected {} weights, got {}",
                blocks.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::BadWeights("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadWeights(format!("weights sum to {total}")));
        }
        if block_states.len() != blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: blocks.len(),
                found: block_states.len(),
            });
        }
        for (blk, s) in blocks.iter().zip(block_states) {
            if s.dim() != blk.d_right {
                return Err(Error::DimensionMismatch {
                    expected: blk.d_right,
                    found: s.dim(),
                });
            }
        }
        let right: Vec<ComplexMatrix> = block_states
            .iter()
            .zip(weights)
            .map(|(s, &w)| s.matrix().scale(w))
            .collect();
        let sigma = reassemble(blocks, &self.gammas, &right, self.dim());
        DensityMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&sigma), tol)
    }

    /// A random equality state: full-rank Wishart block states and
    /// uniformly distributed weights on the simplex.
    pub fn sample_equality_state(&self, rng: &mut CounterRng, tol: &Tolerances) -> Result<DensityMatrix> {
        let blocks = &self.decomposition.blocks;
        let states = blocks
            .iter()
            .map(|b| random_density(b.d_right, b.d_right, rng))
            .collect::<Result<Vec<_>>>()?;
        let raw: Vec<f64> = blocks.iter().map(|_| -(1.0 - rng.uniform()).ln()).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let head: f64 = weights[..weights.len() - 1].iter().sum();
        *weights.last_mut().expect("at least one block") = 1.0 - head;
        self.build_equality_state(&states, &weights, tol)
    }

    /// Block states Tr_ℓ(V_j* σ V_j)/Tr(P_j σ) and weights Tr(P_j σ) of σ.
    /// Blocks with no weight get the maximally mixed state.
    pub fn equality_parameters(&self, sigma: &DensityMatrix, tol: &Tolerances) -> Result<(Vec<DensityMatrix>, Vec<f64>)> {
        let mut states = Vec::new();
        let mut weights = Vec::new();
        for blk in &self.decomposition.blocks {
            let l = local(blk, sigma.matrix());
            let w = trace(&l).re.max(0.0);
            let s = if w > 1e-14 {
                let r = partial_trace(&l, dims(blk), Subsystem::First)?.unscale(w);
                DensityMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&r), tol)?
            } else {
                DensityMatrix::maximally_mixed(blk.d_right)
            };
            states.push(s);
            weights.push(w);
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok((states, weights))
    }
}

pub fn conditional_expectation_c(fps: &FixedPointStructure, y: &ComplexMatrix) -> ComplexMatrix {
    fps.conditional_expectation(y)
}

pub fn dual_expectation_state(fps: &FixedPointStructure, tau: &DensityMatrix, tol: &Tolerances) -> Result<DensityMatrix> {
    fps.dual_expectation_state(tau, tol)
}

pub fn build_equality_state(
    fps: &FixedPointStructure,
    block_states: &[DensityMatrix],
    weights: &[f64],
    tol: &Tolerances,
) -> Result<DensityMatrix> {
    fps.build_equality_state(block_states, weights, tol)
}

/// Whether a Δ_ρ-invariant subalgebra of 𝒩 lies inside 𝒞.
pub fn largest_invariant_check(ctx: &RecoveryContext, b: &Subalgebra) -> Result<bool> {
    let tol = ctx.tolerances();
    let residual = ctx.algebra().containment_residual(b);
    if residual > 1e-8 {
        return Err(Error::NotInAlgebra { residual });
    }
    let residual = modular_invariance_residual(ctx.rho(), b, tol)?;
    if residual > 1e-8 {
        return Err(Error::NotInvariant { residual });
    }
    let fixed = fixed_point_algebra(ctx)?;
    Ok(fixed.algebra.containment_residual(b) <= 1e-8)
}
