//! Finite probability spaces with a partition, their recovery map, and
//! tripartite entropy inequalities.
//!
//! For a partition 𝓕 of Ω with cell map X, the conditional densities are
//! f(ω|x) = ρ(ω)/ρ(x) and g(ω|x) = σ(ω)/σ(x). The classical recovery map built
//! from a reference density p sends a distribution γ on cells to
//! γ(X(ω)) p(ω|X(ω)).
//!
//! Tripartite operators live on ℂ^{d₁} ⊗ ℂ^{d₂} ⊗ ℂ^{d₃} with flat index
//! i₁·d₂d₃ + i₂·d₃ + i₃; reductions are taken with [`crate::linalg::reduce`].

use serde::Serialize;

use crate::algebra::Subalgebra;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{from_real_diagonal, hermitian_eig, reduce, tensor_product, ComplexMatrix, HermitianMatrix};
use crate::recovery::PairContext;
use crate::rng::CounterRng;
use crate::states::{relative_entropy, DensityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ClassicalModel {
    pub omega_size: usize,
    pub partition: Vec<Vec<usize>>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

fn check_distribution(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(Error::InvalidModel(format!("{what} has {} entries, expected {len}", p.len())));
    }
    if p.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidModel(format!("{what} must be strictly positive")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidModel(format!("{what} sums to {total}")));
    }
    Ok(())
}

impl ClassicalModel {
    pub fn new(partition: Vec<Vec<usize>>, rho: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let model = Self {
            omega_size: rho.len(),
            partition,
            rho,
            sigma,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.omega_size;
        if n == 0 {
            return Err(Error::InvalidModel("empty sample space".into()));
        }
        let mut seen = vec![false; n];
        for cell in &self.partition {
            if cell.is_empty() {
                return Err(Error::InvalidModel("empty cell".into()));
            }
            for &w in cell {
                if w >= n || seen[w] {
                    return Err(Error::InvalidModel(format!("point {w} is out of range or repeated")));
                }
                seen[w] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidModel("partition does not cover the sample space".into()));
        }
        check_distribution(&self.rho, n, "rho")?;
        check_distribution(&self.sigma, n, "sigma")
    }

    /// Random model with Dirichlet(1) densities and a random partition into `cells` cells.
    pub fn random(omega_size: usize, cells: usize, rng: &mut CounterRng) -> Result<Self> {
        if cells == 0 || cells > omega_size {
            return Err(Error::InvalidModel(format!("cannot split {omega_size} points into {cells} cells")));
        }
        let mut order: Vec<usize> = (0..omega_size).collect();
        for i in (1..omega_size).rev() {
            order.swap(i, rng.below(i + 1));
        }
        // Every cell gets one point, the rest land uniformly.
        let mut partition: Vec<Vec<usize>> = order[..cells].iter().map(|&w| vec![w]).collect();
        for &w in &order[cells..] {
            partition[rng.below(cells)].push(w);
        }
        for cell in &mut partition {
            cell.sort_unstable();
        }
        let mut dirichlet = || {
            let raw: Vec<f64> = (0..omega_size).map(|_| -(1.0 - rng.uniform()).ln()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect::<Vec<_>>()
        };
        let rho = dirichlet();
        let sigma = dirichlet();
        Self::new(partition, rho, sigma)
    }

    pub fn cells(&self) -> usize {
        self.partition.len()
    }

    pub fn cell_of(&self) -> Vec<usize> {
        let mut map = vec![0; self.omega_size];
        for (x, cell) in self.partition.iter().enumerate() {
            for &w in cell {
                map[w] = x;
            }
        }
        map
    }

    /// Cell sums p(x).
    pub fn marginal(&self, p: &[f64]) -> Vec<f64> {
        self.partition.iter().map(|c| c.iter().map(|&w| p[w]).sum()).collect()
    }

    /// γ(X(ω)) p(ω)/p(X(ω)).
    pub fn recover_with(&self, reference: &[f64], gamma: &[f64]) -> Result<Vec<f64>> {
        if gamma.len() != self.cells() {
            return Err(Error::BadCellDistribution(format!(
                "{} entries for {} cells",
                gamma.len(),
                self.cells()
            )));
        }
        if gamma.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::BadCellDistribution("entries must be nonnegative".into()));
        }
        let total: f64 = gamma.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadCellDistribution(format!("entries sum to {total}")));
        }
        let m = self.marginal(reference);
        let cell = self.cell_of();
        Ok((0..self.omega_size)
            .map(|w| gamma[cell[w]] * reference[w] / m[cell[w]])
            .collect())
    }

    /// (𝓔_p Y)(x) = Σ_{ω∈x} p(ω|x) Y(ω).
    pub fn expectation_with(&self, reference: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.marginal(reference);
        self.partition
            .iter()
            .zip(&m)
            .map(|(c, mx)| c.iter().map(|&w| reference[w] / mx * y[w]).sum())
            .collect()
    }

    pub fn quantum_pair(&self, tol: &Tolerances) -> Result<(DensityMatrix, DensityMatrix, Subalgebra)> {
        let rho = DensityMatrix::new(from_real_diagonal(&self.rho), tol)?;
        let sigma = DensityMatrix::new(from_real_diagonal(&self.sigma), tol)?;
        Ok((rho, sigma, Subalgebra::partition(self.omega_size, &self.partition)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainReport {
    pub s_full: f64,
    pub s_coarse: f64,
    /// S_full − S_coarse.
    pub conditional_term: f64,
    /// Σ_x ρ(x) KL(f(·|x) ‖ g(·|x)).
    pub conditional_direct: f64,
}

impl ChainReport {
    pub fn chain_residual(&self) -> f64 {
        (self.conditional_term - self.conditional_direct).abs()
    }
}

pub fn classical_chain(model: &ClassicalModel) -> ChainReport {
    let s_full = kl(&model.rho, &model.sigma);
    let rm = model.marginal(&model.rho);
    let sm = model.marginal(&model.sigma);
    let s_coarse = kl(&rm, &sm);
    let conditional_direct = model
        .partition
        .iter()
        .enumerate()
        .map(|(x, c)| {
            let f: Vec<f64> = c.iter().map(|&w| model.rho[w] / rm[x]).collect();
            let g: Vec<f64> = c.iter().map(|&w| model.sigma[w] / sm[x]).collect();
            rm[x] * kl(&f, &g)
        })
        .sum();
    ChainReport {
        s_full,
        s_coarse,
        conditional_term: s_full - s_coarse,
        conditional_direct,
    }
}

/// 𝓡_ρ γ(ω) = γ(X(ω)) f(ω|X(ω)).
pub fn classical_recovery(model: &ClassicalModel, gamma: &[f64]) -> Result<Vec<f64>> {
    model.recover_with(&model.rho, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinskerReport {
    pub gap: f64,
    /// S(ρ ‖ 𝓡_σ(ρ on cells)).
    pub recovery_divergence: f64,
    /// ½ (Σ|ρ − 𝓡_σρ|)².
    pub pinsker_rhs: f64,
    pub recovery_l1: f64,
}

pub fn classical_pinsker_gap(model: &ClassicalModel) -> PinskerReport {
    let chain = classical_chain(model);
    let recovered = model
        .recover_with(&model.sigma, &model.marginal(&model.rho))
        .expect("cell marginals form a distribution");
    let l1: f64 = model.rho.iter().zip(&recovered).map(|(a, b)| (a - b).abs()).sum();
    PinskerReport {
        gap: chain.conditional_term,
        recovery_divergence: kl(&model.rho, &recovered),
        pinsker_rhs: 0.5 * l1 * l1,
        recovery_l1: l1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    pub max_discrepancy: f64,
    pub quantum_gap: f64,
    pub classical_gap: f64,
    pub quantum_petz_residual: f64,
    pub classical_recovery_l1: f64,
}

/// Runs the matrix pipeline on the diagonal embedding and compares every
/// quantity with its classical formula.
pub fn diagonal_oracle_check(model: &ClassicalModel, tol: &Tolerances) -> Result<OracleReport> {
    model.validate()?;
    let (rho, sigma, alg) = model.quantum_pair(tol)?;
    let pair = PairContext::new(rho, sigma, &alg, tol)?;
    let chain = classical_chain(model);
    let n = model.omega_size;
    let cell = model.cell_of();
    let sizes: Vec<f64> = model.partition.iter().map(|c| c.len() as f64).collect();
    let rm = model.marginal(&model.rho);
    let sm = model.marginal(&model.sigma);
    let mut worst = 0.0f64;
    let mut track = |a: f64, b: f64| worst = worst.max((a - b).abs());

    // 𝓔_τ averages each cell uniformly.
    for w in 0..n {
        for v in 0..n {
            let expect = if w == v { rm[cell[w]] / sizes[cell[w]] } else { 0.0 };
            track(pair.rho.rho_n().matrix()[(w, v)].re, expect);
            track(pair.rho.rho_n().matrix()[(w, v)].im, 0.0);
        }
    }
    // 𝓐_ρ on a diagonal observable is the ρ-conditional expectation.
    let y: Vec<f64> = (0..n).map(|w| ((w + 1) as f64).cos()).collect();
    let ay = pair.rho.accardi_cecchini(&from_real_diagonal(&y));
    let ey = model.expectation_with(&model.rho, &y);
    for w in 0..n {
        track(ay[(w, w)].re, ey[cell[w]]);
    }
    let full = relative_entropy(pair.rho.rho(), pair.sigma.rho(), tol)?.require_finite()?;
    let reduced = relative_entropy(pair.rho.rho_n(), pair.sigma.rho_n(), tol)?.require_finite()?;
    track(full, chain.s_full);
    track(reduced, chain.s_coarse);
    let quantum_gap = full - reduced;
    track(quantum_gap, chain.conditional_direct);

    let residuals = pair.petz_residuals()?;
    let petz = model.recover_with(&model.rho, &sm)?;
    let petz_l1: f64 = petz.iter().zip(&model.sigma).map(|(a, b)| (a - b).abs()).sum();
    track(residuals.petz_trace_residual, petz_l1);
    let pinsker = classical_pinsker_gap(model);
    track(residuals.symm_trace_residual, pinsker.recovery_l1);
    let recovered = pair.rho.petz_recovery(pair.sigma.rho_n())?;
    for (w, &p) in petz.iter().enumerate() {
        track(recovered.matrix()[(w, w)].re, p);
    }
    Ok(OracleReport {
        max_discrepancy: worst,
        quantum_gap,
        classical_gap: chain.conditional_direct,
        quantum_petz_residual: residuals.petz_trace_residual,
        classical_recovery_l1: petz_l1,
    })
}

#[derive(Debug, Clone)]
pub struct TripartiteState {
    dims: [usize; 3],
    rho: DensityMatrix,
}

impl TripartiteState {
    pub fn new(dims: [usize; 3], rho: DensityMatrix) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: rho.dim(),
            });
        }
        Ok(Self { dims, rho })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    /// Reduced state on the listed subsystems (0-based, ascending).
    pub fn marginal(&self, keep: &[usize], tol: &Tolerances) -> Result<DensityMatrix> {
        let m = reduce(self.rho.matrix(), &self.dims, keep)?;
        DensityMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&m), tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SsaReport {
    /// S₁₂ + S₂₃ − S₁₂₃ − S₂.
    pub ssa_gap: f64,
    /// S(ρ₁₂₃ ‖ ρ₁⊗ρ₂₃) − S(ρ₁₂ ‖ ρ₁⊗ρ₂).
    pub mono_form_gap: f64,
    /// 2 max{S₁ − S₁₃, S₃ − S₁₃}.
    pub improved_rhs: f64,
}

impl SsaReport {
    pub fn rewrite_residual(&self) -> f64 {
        (self.ssa_gap - self.mono_form_gap).abs()
    }

    pub fn improved_slack(&self) -> f64 {
        self.ssa_gap - self.improved_rhs
    }
}

pub fn ssa_suite(ts: &TripartiteState, tol: &Tolerances) -> Result<SsaReport> {
    let m = |keep: &[usize]| ts.marginal(keep, tol);
    let (r1, r2, r3) = (m(&[0])?, m(&[1])?, m(&[2])?);
    let (r12, r23, r13) = (m(&[0, 1])?, m(&[1, 2])?, m(&[0, 2])?);
    let r123 = &ts.rho;
    let s = |r: &DensityMatrix| r.entropy();
    let ssa_gap = s(&r12) + s(&r23) - s(r123) - s(&r2);

    let product = |a: &DensityMatrix, b: &DensityMatrix| {
        DensityMatrix::from_hermitian(
            HermitianMatrix::from_hermitian_part(&tensor_product(a.matrix(), b.matrix())),
            tol,
        )
    };
    let big = relative_entropy(r123, &product(&r1, &r23)?, tol)?.require_finite()?;
    let small = relative_entropy(&r12, &product(&r1, &r2)?, tol)?.require_finite()?;
    let s13 = s(&r13);
    Ok(SsaReport {
        ssa_gap,
        mono_form_gap: big - small,
        improved_rhs: 2.0 * (s(&r1) - s13).max(s(&r3) - s13),
    })
}

/// λ ρ'₁₂ ⊗ |0⟩⟨0| + (1−λ) ρ''₁₂ ⊗ |1⟩⟨1| on ℂ^{d₁}⊗ℂ^{d₂}⊗ℂ^{d₃}.
pub fn state_linear(
    first: &DensityMatrix,
    second: &DensityMatrix,
    lambda: f64,
    dims: [usize; 3],
    tol: &Tolerances,
) -> Result<TripartiteState> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadWeights(format!("mixing weight {lambda} outside [0, 1]")));
    }
    if dims[2] < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: dims[2],
        });
    }
    for r in [first, second] {
        if r.dim() != dims[0] * dims[1] {
            return Err(Error::DimensionMismatch {
                expected: dims[0] * dims[1],
                found: r.dim(),
            });
        }
    }
    let proj = |k: usize| {
        let mut d = vec![0.0; dims[2]];
        d[k] = 1.0;
        from_real_diagonal(&d)
    };
    let m = tensor_product(first.matrix(), &proj(0)).scale(lambda)
        + tensor_product(second.matrix(), &proj(1)).scale(1.0 - lambda);
    TripartiteState::new(dims, DensityMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&m), tol)?)
}

/// −Tr γ log γ for a positive semidefinite γ of any trace.
pub fn unnormalized_entropy(gamma: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig(&HermitianMatrix::from_hermitian_part(gamma))?;
    Ok(eig.values.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum())
}

/// S(γ₁₂) − S(γ₂), the conditional entropy of the first factor given the second.
pub fn conditional_entropy(gamma: &ComplexMatrix, dims: (usize, usize)) -> Result<f64> {
    let reduced = reduce(gamma, &[dims.0, dims.1], &[1])?;
    Ok(unnormalized_entropy(gamma)? - unnormalized_entropy(&reduced)?)
}

/// λH(ρ') + (1−λ)H(ρ'') ≤ H(λρ' + (1−λ)ρ''); returns the right side minus the left.
pub fn concavity_deficit(
    first: &DensityMatrix,
    second: &DensityMatrix,
    lambda: f64,
    dims: (usize, usize),
) -> Result<f64> {
    let mix = first.matrix().scale(lambda) + second.matrix().scale(1.0 - lambda);
    Ok(conditional_entropy(&mix, dims)?
        - lambda * conditional_entropy(first.matrix(), dims)?
        - (1.0 - lambda) * conditional_entropy(second.matrix(), dims)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    /// d/dt H(A + tB) at t = 0, by Richardson-extrapolated central differences.
    pub derivative: f64,
    /// H(B).
    pub value: f64,
}

impl DerivativeCheck {
    pub fn margin(&self) -> f64 {
        self.derivative - self.value
    }
}

const DERIVATIVE_STEPS: (f64, f64) = (1e-4, 1e-5);

/// Compares the directional derivative of the conditional entropy at A along B with its value at B.
pub fn homogeneity_derivative_check(a: &ComplexMatrix, b: &ComplexMatrix, dims: (usize, usize)) -> Result<DerivativeCheck> {
    let f = |t: f64| conditional_entropy(&(a + b.scale(t)), dims);
    let central = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let (h1, h2) = DERIVATIVE_STEPS;
    let ratio = (h1 / h2).powi(2);
    let derivative = (ratio * central(h2)? - central(h1)?) / (ratio - 1.0);
    Ok(DerivativeCheck {
        derivative,
        value: conditional_entropy(b, dims)?,
    })
}
