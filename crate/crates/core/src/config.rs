//! Numerical tolerances and defaults.
//!
//! Every threshold used by the library lives in [`Tolerances`]. The CLI can
//! override any subset of fields with a JSON file (`--tol-overrides`); missing
//! fields keep their defaults.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max entry asymmetry |M_ij - conj(M_ji)| accepted for Hermitian input, relative to ‖M‖_op.
    pub hermiticity_rel: f64,
    /// Eigen-decomposition reconstruction and unitarity residual, relative to ‖H‖_op.
    pub eig_residual: f64,
    /// Eigenvalues at or below `pinv_rel * λ_max` are treated as zero by singular spectral functions.
    pub pinv_rel: f64,
    /// A state is faithful when its min eigenvalue exceeds this value.
    pub faithful_threshold: f64,
    /// Density matrices may have eigenvalues down to `-state_psd`.
    pub state_psd: f64,
    /// Allowed |Tr ρ - 1| for a density matrix.
    pub state_trace: f64,
    /// Relative residual below which a matrix counts as lying in a span.
    pub span_rel: f64,
    /// Residual accepted by algebra invariant checks.
    pub algebra_check: f64,
    /// Eigenvalue gaps below `eig_group_rel * (spectral diameter)` are merged when grouping.
    pub eig_group_rel: f64,
    /// Singular values of (Ψ - id) below `fixed_point_sv_rel * ‖Ψ‖` span the fixed-point space.
    pub fixed_point_sv_rel: f64,
    /// Rank threshold used to read a subspace off the ergodic average.
    pub cesaro_rank_rel: f64,
    /// Allowed distance between the eigenspace and ergodic-average projectors.
    pub cesaro_agreement: f64,
    /// Number of Cesàro terms.
    pub cesaro_terms: usize,
    /// The ergodic average is taken over Ψ^(2^cesaro_squarings); 0 gives the plain average.
    pub cesaro_squarings: u32,
    /// Maximum number of random draws in the factor decomposition.
    pub factor_max_attempts: usize,
    /// DPI gap below which an instance is an equality case (nats).
    pub equality_gap: f64,
    /// Shared cliff for realness and modular-invariance flags.
    pub real_flag: f64,
    /// Recovered and reduced states with |Tr - 1| up to this value are renormalized; larger drift is an error.
    pub recovery_renorm: f64,
    /// A stability bound is violated when gap - bound falls below this value.
    pub slack_floor: f64,
    /// A DPI gap below this value is a violation.
    pub dpi_floor: f64,
    /// Support leakage (in trace weight) tolerated before relative entropy is +∞.
    pub support_leak: f64,
    /// Gauss-Legendre panels for the logarithm integral.
    pub quad_panels: usize,
    /// Gauss-Legendre nodes per panel.
    pub quad_nodes: usize,
    /// Half-width, in ln t, of the graded panel region.
    pub quad_log_span: f64,
    /// Log-spaced t-grid for resolvent diagnostics: lower end.
    pub t_grid_min: f64,
    /// Upper end of the t-grid.
    pub t_grid_max: f64,
    /// Number of t-grid points.
    pub t_grid_points: usize,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermiticity_rel: 1e-12,
        eig_residual: 1e-10,
        pinv_rel: 1e-12,
        faithful_threshold: 1e-10,
        state_psd: 1e-12,
        state_trace: 1e-12,
        span_rel: 1e-10,
        algebra_check: 1e-10,
        eig_group_rel: 1e-8,
        fixed_point_sv_rel: 1e-9,
        cesaro_rank_rel: 1e-6,
        cesaro_agreement: 1e-6,
        cesaro_terms: 1 << 10,
        cesaro_squarings: 20,
        factor_max_attempts: 8,
        equality_gap: 1e-9,
        real_flag: 1e-9,
        recovery_renorm: 1e-8,
        slack_floor: -1e-8,
        dpi_floor: -1e-9,
        support_leak: 1e-12,
        quad_panels: 64,
        quad_nodes: 16,
        quad_log_span: 36.0,
        t_grid_min: 1e-3,
        t_grid_max: 1e3,
        t_grid_points: 25,
    };

    /// Logarithmic t-grid for resolvent diagnostics.
    pub fn t_grid(&self) -> Vec<f64> {
        let k = self.t_grid_points.max(1);
        if k == 1 {
            return vec![self.t_grid_min];
        }
        let (a, b) = (self.t_grid_min.ln(), self.t_grid_max.ln());
        (0..k)
            .map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())
            .collect()
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Bound constant (π/4)⁴.
pub const C4: f64 = {
    let q = std::f64::consts::FRAC_PI_4;
    q * q * q * q
};

/// Bound constant (π/8)⁴.
pub const C8: f64 = {
    let q = std::f64::consts::FRAC_PI_8;
    q * q * q * q
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override_keeps_defaults() {
        let t: Tolerances = serde_json::from_str(r#"{"equality_gap": 1e-6}"#).unwrap();
        assert_eq!(t.equality_gap, 1e-6);
        assert_eq!(t.span_rel, Tolerances::DEFAULT.span_rel);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<Tolerances>(r#"{"nope": 1}"#).is_err());
    }

    #[test]
    fn t_grid_endpoints() {
        let g = Tolerances::DEFAULT.t_grid();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[24] - 1e3).abs() < 1e-9);
    }
}
