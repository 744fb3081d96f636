//! Lower bounds on the relative entropy gap S(ρ‖σ) − S(ρ_𝒩‖σ_𝒩).
//!
//! With c₄ = (π/4)⁴, c₈ = (π/8)⁴ and the residuals of [`PetzResiduals`]:
//!
//! | id       | bound                                                           |
//! |----------|-----------------------------------------------------------------|
//! | rem5a    | c₄ ‖Δ_{σ,ρ}‖⁻² · eqcase_hs⁴                                      |
//! | rem5b    | c₈ ‖Δ_{σ,ρ}‖⁻² · petz_trace⁴                                     |
//! | rem5c    | c₈ ‖ρ⁻¹‖⁻² · petz_trace⁴                                         |
//! | rem5a2   | c₄ ‖Δ_{σ,ρ}‖⁻² ‖ρ_𝒩‖⁻² ‖σ_𝒩⁻¹‖⁻² · eqcase_symm_hs⁴              |
//! | rem5b2   | c₈ ‖Δ_{σ,ρ}‖⁻² ‖ρ_𝒩‖⁻² ‖σ_𝒩⁻¹‖⁻² · symm_trace⁴                   |
//! | rem5c2   | c₈ ‖ρ⁻¹‖⁻² ‖σ_𝒩⁻¹‖⁻² · symm_trace⁴                               |
//! | fidelity | c₄ ‖Δ_{σ,ρ}‖⁻² (1 − √F(σ, 𝓡_ρ(σ_𝒩)))⁴                           |

use serde::Serialize;

use crate::algebra::Subalgebra;
use crate::config::{Tolerances, C4, C8};
use crate::error::{Error, Result};
use crate::linalg::{hs_inner, hs_norm, trace_norm, ComplexMatrix, HermitianMatrix};
use crate::recovery::{PairContext, PetzResiduals};
use crate::states::{fidelity, relative_entropy, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundId {
    Rem5a,
    Rem5b,
    Rem5c,
    Rem5a2,
    Rem5b2,
    Rem5c2,
    Fidelity,
}

impl BoundId {
    pub const ALL: [BoundId; 7] = [
        BoundId::Rem5a,
        BoundId::Rem5b,
        BoundId::Rem5c,
        BoundId::Rem5a2,
        BoundId::Rem5b2,
        BoundId::Rem5c2,
        BoundId::Fidelity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::Rem5a => "rem5a",
            BoundId::Rem5b => "rem5b",
            BoundId::Rem5c => "rem5c",
            BoundId::Rem5a2 => "rem5a2",
            BoundId::Rem5b2 => "rem5b2",
            BoundId::Rem5c2 => "rem5c2",
            BoundId::Fidelity => "fidelity",
        }
    }
}

/// Every norm and residual the bounds are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    /// ‖Δ_{σ,ρ}‖ = λ_max(σ)/λ_min(ρ)
    pub delta_norm: f64,
    /// ‖ρ⁻¹‖
    pub rho_inv_norm: f64,
    /// ‖ρ_𝒩‖
    pub rho_n_norm: f64,
    /// ‖σ_𝒩⁻¹‖
    pub sigma_n_inv_norm: f64,
    /// F(σ, 𝓡_ρ(σ_𝒩))
    pub recovery_fidelity: f64,
    pub residuals: PetzResiduals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub id: BoundId,
    pub value: f64,
    /// gap − value
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub gap: f64,
    pub inputs: BoundInputs,
    pub bounds: Vec<BoundValue>,
}

impl BoundReport {
    pub fn get(&self, id: BoundId) -> &BoundValue {
        self.bounds.iter().find(|b| b.id == id).expect("all bounds present")
    }

    pub fn min_slack(&self) -> f64 {
        self.bounds.iter().map(|b| b.slack).fold(f64::INFINITY, f64::min)
    }

    pub fn violations(&self, floor: f64) -> Vec<BoundId> {
        self.bounds.iter().filter(|b| b.slack < floor).map(|b| b.id).collect()
    }
}

/// The multiplier of residual⁴ in each bound.
fn prefactor(id: BoundId, i: &BoundInputs) -> f64 {
    let d = i.delta_norm.powi(-2);
    let r = i.rho_inv_norm.powi(-2);
    let sym = i.rho_n_norm.powi(-2) * i.sigma_n_inv_norm.powi(-2);
    match id {
        BoundId::Rem5a | BoundId::Fidelity => C4 * d,
        BoundId::Rem5b => C8 * d,
        BoundId::Rem5c => C8 * r,
        BoundId::Rem5a2 => C4 * d * sym,
        BoundId::Rem5b2 => C8 * d * sym,
        BoundId::Rem5c2 => C8 * r * i.sigma_n_inv_norm.powi(-2),
    }
}

fn residual_for(id: BoundId, i: &BoundInputs) -> f64 {
    let r = &i.residuals;
    match id {
        BoundId::Rem5a => r.eqcase_hs_residual,
        BoundId::Rem5b | BoundId::Rem5c => r.petz_trace_residual,
        BoundId::Rem5a2 => r.eqcase_symm_hs_residual,
        BoundId::Rem5b2 | BoundId::Rem5c2 => r.symm_trace_residual,
        BoundId::Fidelity => 1.0 - i.recovery_fidelity.clamp(0.0, 1.0).sqrt(),
    }
}

/// S(ρ‖σ) − S(ρ_𝒩‖σ_𝒩).
pub fn dpi_gap(rho: &DensityMatrix, sigma: &DensityMatrix, alg: &Subalgebra, tol: &Tolerances) -> Result<f64> {
    let full = relative_entropy(rho, sigma, tol)?.require_finite()?;
    let reduce = |x: &DensityMatrix| {
        let projected = alg.conditional_expectation_tau(x.matrix())?;
        DensityMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&projected), tol)
    };
    let (rn, sn) = (reduce(rho)?, reduce(sigma)?);
    let reduced = relative_entropy(&rn, &sn, tol)?.require_finite()?;
    Ok(full - reduced)
}

impl PairContext {
    /// S(ρ‖σ) − S(ρ_𝒩‖σ_𝒩) from the cached spectra.
    pub fn gap(&self) -> Result<f64> {
        let tol = self.tolerances();
        let full = self.full_spectra().relative_entropy(tol).require_finite()?;
        let reduced = self.reduced_spectra().relative_entropy(tol).require_finite()?;
        Ok(full - reduced)
    }

    /// The same gap with the roles of ρ and σ exchanged.
    pub fn reverse_gap(&self) -> Result<f64> {
        let tol = self.tolerances();
        let full = relative_entropy(self.sigma.rho(), self.rho.rho(), tol)?.require_finite()?;
        let reduced = relative_entropy(self.sigma.rho_n(), self.rho.rho_n(), tol)?.require_finite()?;
        Ok(full - reduced)
    }

    pub fn bound_inputs(&self) -> Result<BoundInputs> {
        let residuals = self.petz_residuals()?;
        let recovered = self.rho.recover_state(self.sigma.rho_n().matrix())?;
        Ok(BoundInputs {
            delta_norm: self.sigma.rho().max_eigenvalue() / self.rho.rho().min_eigenvalue(),
            rho_inv_norm: 1.0 / self.rho.rho().min_eigenvalue(),
            rho_n_norm: self.rho.rho_n().max_eigenvalue(),
            sigma_n_inv_norm: 1.0 / self.sigma.rho_n().min_eigenvalue(),
            recovery_fidelity: fidelity(self.sigma.rho(), &recovered),
            residuals,
        })
    }

    pub fn evaluate_bounds(&self) -> Result<BoundReport> {
        let gap = self.gap()?;
        let inputs = self.bound_inputs()?;
        let bounds = BoundId::ALL
            .iter()
            .map(|&id| {
                let value = prefactor(id, &inputs) * residual_for(id, &inputs).powi(4);
                BoundValue {
                    id,
                    value,
                    slack: gap - value,
                }
            })
            .collect();
        Ok(BoundReport { gap, inputs, bounds })
    }

    pub fn equality_diagnostics(&self, equality_tol: f64) -> Result<EqualityDiagnostics> {
        self.equality_from_report(&self.evaluate_bounds()?, equality_tol)
    }

    /// Equality diagnostics reusing the gap and residuals of an existing report.
    pub fn equality_from_report(&self, report: &BoundReport, equality_tol: f64) -> Result<EqualityDiagnostics> {
        let reverse_gap = self.reverse_gap()?;
        let i = &report.inputs;
        // If gap < tol, each bound forces residual < (tol / prefactor)^{1/4}.
        let ceiling = |id: BoundId| (equality_tol / prefactor(id, i)).powf(0.25);
        let ceilings = PetzResiduals {
            petz_trace_residual: ceiling(BoundId::Rem5b),
            symm_trace_residual: ceiling(BoundId::Rem5b2),
            eqcase_hs_residual: ceiling(BoundId::Rem5a),
            eqcase_symm_hs_residual: ceiling(BoundId::Rem5a2),
        };
        let r = &i.residuals;
        let within = r.petz_trace_residual < ceilings.petz_trace_residual
            && r.symm_trace_residual < ceilings.symm_trace_residual
            && r.eqcase_hs_residual < ceilings.eqcase_hs_residual
            && r.eqcase_symm_hs_residual < ceilings.eqcase_symm_hs_residual;
        let is_equality_case = report.gap < equality_tol;
        Ok(EqualityDiagnostics {
            gap: report.gap,
            reverse_gap,
            residuals: *r,
            residual_ceilings: ceilings,
            is_equality_case,
            residuals_within_ceilings: within,
            reverse_is_equality_case: reverse_gap < equality_tol,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EqualityDiagnostics {
    pub gap: f64,
    /// Gap with ρ and σ exchanged.
    pub reverse_gap: f64,
    pub residuals: PetzResiduals,
    /// Largest residuals compatible with gap < tol according to the bounds.
    pub residual_ceilings: PetzResiduals,
    pub is_equality_case: bool,
    pub residuals_within_ceilings: bool,
    pub reverse_is_equality_case: bool,
}

impl EqualityDiagnostics {
    /// An equality case must have every residual under its ceiling.
    pub fn is_consistent(&self) -> bool {
        !self.is_equality_case || self.residuals_within_ceilings
    }
}

pub fn evaluate_bounds(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    alg: &Subalgebra,
    tol: &Tolerances,
) -> Result<BoundReport> {
    PairContext::new(rho.clone(), sigma.clone(), alg, tol)?.evaluate_bounds()
}

pub fn equality_diagnostics(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    alg: &Subalgebra,
    tol: &Tolerances,
) -> Result<EqualityDiagnostics> {
    PairContext::new(rho.clone(), sigma.clone(), alg, tol)?.equality_diagnostics(tol.equality_gap)
}

/// (‖X*X − Y*Y‖₁, 2‖X − Y‖₂) for HS-normalized X, Y.
pub fn hs_to_trace_check(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<(f64, f64)> {
    let xn = hs_inner(x, x).re;
    let yn = hs_inner(y, y).re;
    if (xn - 1.0).abs() > 1e-10 || (yn - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { x_norm: xn, y_norm: yn });
    }
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    let lhs = trace_norm(&(x.adjoint() * x - y.adjoint() * y));
    Ok((lhs, 2.0 * hs_norm(&(x - y))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_parts, tensor_product, Subsystem};
    use crate::rng::CounterRng;
    use crate::states::random_density;

    fn tol() -> Tolerances {
        Tolerances::DEFAULT
    }

    fn qubit_pair() -> PairContext {
        let rho = DensityMatrix::new(from_parts(&[vec![0.5, 0.25], vec![0.25, 0.5]], None).unwrap(), &tol()).unwrap();
        PairContext::new(rho, DensityMatrix::maximally_mixed(2), &Subalgebra::diagonal(2), &tol()).unwrap()
    }

    #[test]
    fn constants() {
        assert!((C4 - 0.380_504_261_851_571_9).abs() < 1e-15);
        assert!((C8 - 0.023_781_516_365_723_2).abs() < 1e-15);
        assert!((C4 / C8 - 16.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_example() {
        let p = qubit_pair();
        let r = p.evaluate_bounds().unwrap();
        let s = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((r.gap - (2f64.ln() - s)).abs() < 1e-12);
        assert!((r.inputs.delta_norm - 2.0).abs() < 1e-12);
        assert!((r.inputs.residuals.petz_trace_residual - 0.5).abs() < 1e-10);
        assert!((r.get(BoundId::Rem5b).value - C8 / 64.0).abs() < 1e-12);
        assert!(r.min_slack() > 0.0);
        let d = p.equality_diagnostics(1e-9).unwrap();
        assert!(!d.is_equality_case);
    }

    #[test]
    fn identical_states_give_zero_everything() {
        let mut rng = CounterRng::new(3);
        let rho = random_density(3, 3, &mut rng).unwrap();
        let alg = crate::algebra::random_two_generator(3, &mut rng).unwrap();
        let r = evaluate_bounds(&rho, &rho, &alg, &tol()).unwrap();
        assert!(r.gap.abs() < 1e-12);
        for b in &r.bounds {
            assert!(b.value.abs() < 1e-20 && b.slack.abs() < 1e-12, "{b:?}");
        }
        assert!(equality_diagnostics(&rho, &rho, &alg, &tol()).unwrap().is_equality_case);
        assert!(dpi_gap(&rho, &random_density(3, 3, &mut rng).unwrap(), &Subalgebra::full(3), &tol()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn product_equality_case() {
        let mut rng = CounterRng::new(8);
        let r1 = random_density(2, 2, &mut rng).unwrap();
        let r2 = random_density(2, 2, &mut rng).unwrap();
        let s2 = random_density(2, 2, &mut rng).unwrap();
        let rho = DensityMatrix::new(tensor_product(r1.matrix(), r2.matrix()), &tol()).unwrap();
        let sigma = DensityMatrix::new(tensor_product(r1.matrix(), s2.matrix()), &tol()).unwrap();
        let alg = Subalgebra::tensor_factor(2, 2, Subsystem::Second);
        let d = equality_diagnostics(&rho, &sigma, &alg, &tol()).unwrap();
        assert!(d.gap.abs() < 1e-10);
        assert!(d.residuals.max() < 1e-8);
        assert!(d.is_equality_case && d.is_consistent() && d.reverse_is_equality_case);
    }

    #[test]
    fn random_instances_respect_every_bound() {
        let mut rng = CounterRng::new(21);
        for n in [2, 3, 4] {
            let alg = crate::algebra::random_two_generator(n, &mut rng).unwrap();
            for _ in 0..20 {
                let rho = random_density(n, n, &mut rng).unwrap();
                let sigma = random_density(n, n, &mut rng).unwrap();
                let r = evaluate_bounds(&rho, &sigma, &alg, &tol()).unwrap();
                assert!(r.violations(-1e-8).is_empty(), "{r:?}");
                assert!(r.get(BoundId::Rem5c).value <= r.get(BoundId::Rem5b).value + 1e-12);
            }
        }
    }

    #[test]
    fn dpi_gap_checks_dimensions() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            dpi_gap(&rho, &rho, &Subalgebra::diagonal(3), &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            dpi_gap(&rho, &DensityMatrix::maximally_mixed(3), &Subalgebra::diagonal(2), &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hs_to_trace_examples() {
        let mut rng = CounterRng::new(4);
        let a = random_density(3, 3, &mut rng).unwrap();
        let x = a.sqrt();
        let (l, r) = hs_to_trace_check(&x, &x).unwrap();
        assert!(l.abs() < 1e-14 && r.abs() < 1e-14);
        let p = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let q = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        let (l, r) = hs_to_trace_check(&p.sqrt(), &q.sqrt()).unwrap();
        assert!((l - 2.0).abs() < 1e-14 && (r - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            hs_to_trace_check(&p.sqrt().scale(2.0), &q.sqrt()),
            Err(Error::NotNormalized { .. })
        ));
        // Transported root against σ^{1/2}: half the trace residual is at most the HS residual.
        let alg = crate::algebra::random_two_generator(3, &mut rng).unwrap();
        let pair = PairContext::new(a, random_density(3, 3, &mut rng).unwrap(), &alg, &tol()).unwrap();
        let x = pair.transported_root();
        let (l, r) = hs_to_trace_check(&x, pair.sigma.rho_half()).unwrap();
        assert!(l <= r + 1e-10);
        let res = pair.petz_residuals().unwrap();
        assert!(res.eqcase_hs_residual >= 0.5 * res.petz_trace_residual - 1e-10);
    }
}
