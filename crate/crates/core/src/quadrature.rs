//! Composite Gauss–Legendre quadrature on (0, 1) with logistically graded panels.
//!
//! Integrals over t ∈ (0, ∞) are mapped to u ∈ (0, 1) by t = u/(1−u). Panel
//! boundaries are `0`, `logistic(v_k)` for `v_k` equally spaced on
//! `[−span, span]`, and `1`, so panels shrink geometrically towards both ends
//! where the integrands have nearby poles.

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_m.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

#[derive(Debug, Clone)]
pub struct GradedRule {
    pub nodes: Vec<f64>,
    /// `1 − node`, computed without cancellation near u = 1.
    pub complements: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GradedRule {
    pub fn new(panels: usize, nodes_per_panel: usize, span: f64) -> Self {
        let panels = panels.max(2);
        // Each edge is stored as (u, 1 − u).
        let mut edges = Vec::with_capacity(panels + 1);
        edges.push((0.0, 1.0));
        for k in 1..panels {
            let v = -span + 2.0 * span * (k - 1) as f64 / (panels - 2).max(1) as f64;
            edges.push((logistic(v), logistic(-v)));
        }
        edges.push((1.0, 0.0));
        let (gx, gw) = gauss_legendre(nodes_per_panel);
        let cap = panels * nodes_per_panel;
        let mut rule = Self {
            nodes: Vec::with_capacity(cap),
            complements: Vec::with_capacity(cap),
            weights: Vec::with_capacity(cap),
        };
        for win in edges.windows(2) {
            let ((a, ca), (b, cb)) = (win[0], win[1]);
            let half = if a < 0.5 { 0.5 * (b - a) } else { 0.5 * (ca - cb) };
            if half <= 0.0 {
                continue;
            }
            for (x, w) in gx.iter().zip(&gw) {
                let step = half * (x + 1.0);
                rule.nodes.push(a + step);
                rule.complements.push(ca - step);
                rule.weights.push(half * w);
            }
        }
        rule
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&u, &w)| w * f(u)).sum()
    }
}

/// Value with the difference between `panels` and `2·panels` as the error estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub abs_error_estimate: f64,
}

pub fn integrate_unit_interval(
    panels: usize,
    nodes: usize,
    span: f64,
    f: impl Fn(f64) -> f64,
) -> QuadratureEstimate {
    let coarse = GradedRule::new(panels, nodes, span).integrate(&f);
    let fine = GradedRule::new(2 * panels, nodes, span).integrate(&f);
    QuadratureEstimate {
        value: fine,
        abs_error_estimate: (fine - coarse).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_on_polynomials() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn graded_rule_handles_endpoint_singularities() {
        // ∫₀¹ (1−x)/(u + x(1−u)) du = −ln x
        for x in [1e-8, 0.3, 1.0, 7.0, 1e6] {
            let q = integrate_unit_interval(64, 16, 36.0, |u| (1.0 - x) / (u + x * (1.0 - u)));
            assert!((q.value + f64::ln(x)).abs() < 1e-10 * (1.0 + f64::ln(x).abs()), "x={x}: {}", q.value);
        }
        let q = integrate_unit_interval(64, 16, 36.0, |u| 1.0 / u.sqrt());
        assert!((q.value - 2.0).abs() < 1e-6);
    }
}
