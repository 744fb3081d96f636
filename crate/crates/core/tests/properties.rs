//! Property tests. Instances are drawn from proptest-chosen seeds through the
//! crate's counter RNG, so failures shrink to a single reproducible seed.

use num_complex::Complex64;
use proptest::prelude::*;

use petzstab::algebra::{random_two_generator, Subalgebra};
use petzstab::classical::{
    classical_chain, diagonal_oracle_check, ssa_suite, ClassicalModel, TripartiteState,
};
use petzstab::gns::takesaki_check;
use petzstab::linalg::{
    c64, hermitian_eig, hs_inner, hs_norm, identity, matrix_function, max_abs, op_norm, partial_trace, tensor_product,
    trace, trace_norm, ComplexMatrix, HermitianMatrix, SpectralFn, Subsystem,
};
use petzstab::recovery::{PairContext, RecoveryContext};
use petzstab::rng::CounterRng;
use petzstab::states::{
    gns_inner, quasi_entropy_t, random_density, relative_entropy, trace_distance, DensityMatrix, RelModular,
};
use petzstab::stability::BoundId;
use petzstab::structure::build_structure;
use petzstab::superop::Superoperator;
use petzstab::Tolerances;

const T: Tolerances = Tolerances::DEFAULT;

fn random_matrix(n: usize, rng: &mut CounterRng) -> ComplexMatrix {
    let m = ComplexMatrix::from_fn(n, n, |_, _| c64(rng.normal(), rng.normal()));
    m.unscale(hs_norm(&m))
}

fn density(n: usize, rng: &mut CounterRng) -> DensityMatrix {
    random_density(n, n, rng).unwrap()
}

fn algebra_element(alg: &Subalgebra, rng: &mut CounterRng) -> ComplexMatrix {
    alg.random_hermitian(rng) + alg.random_hermitian(rng).map(|z| z * c64(0.0, 1.0))
}

/// Algebras of several shapes on M_n.
fn algebra(kind: usize, n: usize, rng: &mut CounterRng) -> Subalgebra {
    match kind % 4 {
        0 => Subalgebra::diagonal(n),
        1 if n.is_multiple_of(2) => Subalgebra::tensor_factor(2, n / 2, Subsystem::Second),
        1 => Subalgebra::full(n),
        2 => Subalgebra::partition(n, &[(0..n / 2).collect(), (n / 2..n).collect()]).unwrap(),
        _ => random_two_generator(n, rng).unwrap(),
    }
}

/// Pairs (ρ, 𝒩) whose fixed-point algebra is nontrivial, plus a generic one.
fn structured(kind: usize, rng: &mut CounterRng) -> (DensityMatrix, Subalgebra) {
    match kind % 4 {
        0 => {
            let a = density(2, rng);
            let b = density(2, rng);
            let rho = DensityMatrix::new(tensor_product(a.matrix(), b.matrix()), &T).unwrap();
            (rho, Subalgebra::tensor_factor(2, 2, Subsystem::Second))
        }
        1 => {
            let a = density(2, rng);
            let b = density(2, rng);
            let p = 0.2 + 0.6 * rng.uniform();
            let mut m = ComplexMatrix::zeros(4, 4);
            m.view_mut((0, 0), (2, 2)).copy_from(&a.matrix().scale(p));
            m.view_mut((2, 2), (2, 2)).copy_from(&b.matrix().scale(1.0 - p));
            let alg = Subalgebra::partition(4, &[vec![0, 1], vec![2, 3]]).unwrap();
            (DensityMatrix::new(m, &T).unwrap(), alg)
        }
        2 => (DensityMatrix::maximally_mixed(4), random_two_generator(4, rng).unwrap()),
        _ => (density(3, rng), Subalgebra::diagonal(3)),
    }
}

fn reduced(alg: &Subalgebra, rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_hermitian(
        HermitianMatrix::from_hermitian_part(&alg.conditional_expectation_tau(rho.matrix()).unwrap()),
        &T,
    )
    .unwrap()
}

fn gap_for(rho: &DensityMatrix, sigma: &DensityMatrix, alg: &Subalgebra) -> f64 {
    PairContext::new(rho.clone(), sigma.clone(), alg, &T).unwrap().gap().unwrap()
}

fn min_eig(m: &ComplexMatrix) -> f64 {
    assert!(max_abs(&(m - m.adjoint())) < 1e-10 * (1.0 + max_abs(m)));
    hermitian_eig(&HermitianMatrix::from_hermitian_part(m)).unwrap().min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn power_law(seed in any::<u64>(), n in 2usize..6, p in -1.5f64..1.5, q in -1.5f64..1.5) {
        let mut rng = CounterRng::new(seed);
        // Spectrum inside [1, 1 + n].
        let h = HermitianMatrix::new(density(n, &mut rng).matrix().scale(n as f64) + identity(n)).unwrap();
        let f = |e: f64| matrix_function(&h, SpectralFn::Power(e), 0.0).unwrap().matrix.into_inner();
        let norm = op_norm(h.as_matrix());
        let err = max_abs(&(f(p) * f(q) - f(p + q)));
        prop_assert!(err <= 1e-10 * norm.powf(p + q), "err {err:e}");
    }

    #[test]
    fn exp_inverts_log(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = CounterRng::new(seed);
        let h = HermitianMatrix::new(density(n, &mut rng).matrix().clone()).unwrap();
        let log = matrix_function(&h, SpectralFn::Log, 0.0).unwrap().matrix;
        let back = matrix_function(&log, SpectralFn::Exp, 0.0).unwrap().matrix.into_inner();
        prop_assert!(max_abs(&(back - h.as_matrix())) <= 1e-10 * op_norm(h.as_matrix()));
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), d1 in 1usize..5, d2 in 1usize..5) {
        let mut rng = CounterRng::new(seed);
        let a = random_matrix(d1, &mut rng);
        let b = random_matrix(d2, &mut rng);
        let ab = tensor_product(&a, &b);
        let first = partial_trace(&ab, (d1, d2), Subsystem::Second).unwrap();
        let second = partial_trace(&ab, (d1, d2), Subsystem::First).unwrap();
        prop_assert!(max_abs(&(first - a.scale(1.0) * trace(&b))) < 1e-13);
        prop_assert!(max_abs(&(second - b * trace(&a))) < 1e-13);
    }

    #[test]
    fn norm_ordering(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = CounterRng::new(seed);
        let x = random_matrix(n, &mut rng).scale(1.0 + 10.0 * rng.uniform());
        let (t, h, o) = (trace_norm(&x), hs_norm(&x), op_norm(&x));
        prop_assert!(t >= h * (1.0 - 1e-12) && h >= o * (1.0 - 1e-12), "{t} {h} {o}");
    }

    #[test]
    fn tau_expectation_is_tomiyama(seed in any::<u64>(), kind in 0usize..4, n in 2usize..6) {
        let mut rng = CounterRng::new(seed);
        let alg = algebra(kind, n, &mut rng);
        let e = |x: &ComplexMatrix| alg.conditional_expectation_tau(x).unwrap();
        let x = random_matrix(n, &mut rng);
        let a = algebra_element(&alg, &mut rng);
        let b = algebra_element(&alg, &mut rng);
        prop_assert!(hs_norm(&(e(&(&a * &x * &b)) - &a * e(&x) * &b)) <= 1e-9);
        prop_assert!((trace(&e(&x)) - trace(&x)).norm() <= 1e-12);
        let ex = e(&x);
        prop_assert!(min_eig(&(e(&(x.adjoint() * &x)) - ex.adjoint() * &ex)) >= -1e-9);
        let choi = Superoperator::from_fn(n, |m| alg.conditional_expectation_tau(m).unwrap()).choi();
        prop_assert!(min_eig(&choi) >= -1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn double_commutant_and_reassembly(seed in any::<u64>(), kind in 0usize..4, n in 2usize..6) {
        let mut rng = CounterRng::new(seed);
        let alg = algebra(kind, n, &mut rng);
        let dc = alg.commutant().unwrap().commutant().unwrap();
        prop_assert!(dc.same_span(&alg, 1e-9));

        let dec = alg.factor_decomposition(&mut rng, &T).unwrap();
        let mut units = Vec::new();
        for blk in &dec.blocks {
            for (i, j) in (0..blk.d_right).flat_map(|i| (0..blk.d_right).map(move |j| (i, j))) {
                let mut e = ComplexMatrix::zeros(blk.d_right, blk.d_right);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                let local = tensor_product(&identity(blk.d_left), &e);
                units.push(&blk.isometry * local * blk.isometry.adjoint());
            }
        }
        let rebuilt = Subalgebra::from_spanning_set(n, &units, T.span_rel).unwrap();
        prop_assert!(rebuilt.same_span(&alg, 1e-8));
    }

    #[test]
    fn entropy_monotonicity(seed in any::<u64>(), kind in 0usize..4, n in 2usize..6, t in 1e-2f64..1e2) {
        let mut rng = CounterRng::new(seed);
        let alg = algebra(kind, n, &mut rng);
        let rho = density(n, &mut rng);
        let sigma = density(n, &mut rng);
        let (rn, sn) = (reduced(&alg, &rho), reduced(&alg, &sigma));
        let full = relative_entropy(&rho, &sigma, &T).unwrap().require_finite().unwrap();
        let coarse = relative_entropy(&rn, &sn, &T).unwrap().require_finite().unwrap();
        prop_assert!(full - coarse >= -1e-9);
        prop_assert!(
            quasi_entropy_t(&rho, &sigma, t, &T).unwrap() >= quasi_entropy_t(&rn, &sn, t, &T).unwrap() - 1e-9
        );
        let d = RelModular::new(sigma.clone(), rho.clone(), &T).unwrap().norm();
        let dn = RelModular::new(sn, rn, &T).unwrap().norm();
        // Both norms are ratios s_i/r_j of computed eigenvalues, so the
        // comparison is only meaningful relative to their size.
        prop_assert!(dn <= d + 1e-10 * d.max(1.0), "{dn} > {d}");
    }

    #[test]
    fn joint_convexity(seed in any::<u64>(), n in 2usize..5, lambda in 0.0f64..1.0) {
        let mut rng = CounterRng::new(seed);
        let (r1, r2, s1, s2) = (density(n, &mut rng), density(n, &mut rng), density(n, &mut rng), density(n, &mut rng));
        let mix = |a: &DensityMatrix, b: &DensityMatrix| {
            DensityMatrix::new(a.matrix().scale(lambda) + b.matrix().scale(1.0 - lambda), &T).unwrap()
        };
        let s = |a: &DensityMatrix, b: &DensityMatrix| relative_entropy(a, b, &T).unwrap().require_finite().unwrap();
        let lhs = s(&mix(&r1, &r2), &mix(&s1, &s2));
        let rhs = lambda * s(&r1, &s1) + (1.0 - lambda) * s(&r2, &s2);
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn pinsker_on_diagonal_pairs(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = CounterRng::new(seed);
        let mut draw = || {
            let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.uniform()).ln() + 1e-9).collect();
            let total: f64 = w.iter().sum();
            DensityMatrix::from_diagonal(&w.iter().map(|x| x / total).collect::<Vec<_>>()).unwrap()
        };
        let (p, q) = (draw(), draw());
        let s = relative_entropy(&p, &q, &T).unwrap().require_finite().unwrap();
        let d = trace_distance(&p, &q);
        prop_assert!(s >= d * d / 2.0 - 1e-9);
    }

    #[test]
    fn recovery_identities(seed in any::<u64>(), kind in 0usize..4, n in 2usize..6) {
        let mut rng = CounterRng::new(seed);
        let alg = algebra(kind, n, &mut rng);
        let rho = density(n, &mut rng);
        let pair = PairContext::new(rho.clone(), density(n, &mut rng), &alg, &T).unwrap();
        let ctx = &pair.rho;
        let x = alg.conditional_expectation_tau(&random_matrix(n, &mut rng)).unwrap();
        let y = alg.conditional_expectation_tau(&random_matrix(n, &mut rng)).unwrap();
        let lhs = hs_inner(&ctx.embedding_u(&x), &pair.delta(&ctx.embedding_u(&y)));
        let rhs = hs_inner(&x, &pair.delta_n(&y));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0), "lhs {lhs} rhs {rhs}");
        for t in [0.1, 1.0, 10.0] {
            let (a, b) = pair.resolvent_identity(t);
            prop_assert!((a - b).abs() <= 1e-9);
        }

        // Ψ is a contraction for the GNS norm of ρ.
        let m = random_matrix(n, &mut rng);
        let image = ctx.accardi_cecchini(&m);
        let before = gns_inner(rho.matrix(), &m, &m).re.sqrt();
        let after = gns_inner(rho.matrix(), &image, &image).re.sqrt();
        prop_assert!(after <= before + 1e-10);
    }

    #[test]
    fn square_root_integral(seed in any::<u64>(), kind in 0usize..4, n in 2usize..5) {
        let mut rng = CounterRng::new(seed);
        let alg = algebra(kind, n, &mut rng);
        let pair = PairContext::new(density(n, &mut rng), density(n, &mut rng), &alg, &T).unwrap();
        let (value, estimate) = pair.integral_reconstruction();
        let exact = pair.sigma.rho_half() - pair.transported_root();
        let err = max_abs(&(value - exact));
        prop_assert!(err <= 1e-6f64.max(estimate.abs_error_estimate), "err {err:e}");
    }

    #[test]
    fn bounds_hold(seed in any::<u64>(), kind in 0usize..4, n in 2usize..6) {
        let mut rng = CounterRng::new(seed);
        let alg = algebra(kind, n, &mut rng);
        let report = PairContext::new(density(n, &mut rng), density(n, &mut rng), &alg, &T)
            .unwrap()
            .evaluate_bounds()
            .unwrap();
        prop_assert!(report.gap >= -1e-9);
        prop_assert!(report.min_slack() >= -1e-8);
        prop_assert!(report.get(BoundId::Rem5c).value <= report.get(BoundId::Rem5b).value + 1e-12);
    }

    #[test]
    fn equality_cases(seed in any::<u64>(), kind in 0usize..4) {
        let mut rng = CounterRng::new(seed);
        let (rho, alg) = structured(kind, &mut rng);
        let ctx = RecoveryContext::new(rho.clone(), &alg, &T).unwrap();
        let s = build_structure(&ctx, &mut rng).unwrap();
        // ρAρ⁻¹ has entries up to κ(ρ), so the roundoff in the residual scales with it.
        let kappa = op_norm(rho.matrix()) * op_norm(&rho.function(SpectralFn::Inverse, &T).unwrap());
        prop_assert!(s.diagnostics.modular_agreement <= 1e-8 * kappa.max(1.0));

        let sigma = s.sample_equality_state(&mut rng, &T).unwrap();
        let pair = PairContext::from_context(ctx.clone(), sigma.clone()).unwrap();
        let gap = pair.gap().unwrap();
        let r = pair.petz_residuals().unwrap();
        prop_assert!(gap < 1e-10);
        prop_assert!(r.petz_trace_residual < 1e-6 && r.symm_trace_residual < 1e-6, "{r:?}");
        if r.petz_trace_residual < 1e-12 {
            prop_assert!(gap < 1e-8);
        }
        let (states, weights) = s.equality_parameters(&sigma, &T).unwrap();
        let back = s.build_equality_state(&states, &weights, &T).unwrap();
        prop_assert!(trace_distance(&back, &sigma) < 1e-7);
        prop_assert!(gap_for(&rho, &sigma, &s.algebra) < 1e-9);

        // A generic σ is strictly above equality for both 𝒩 and 𝒞, unless 𝒞 = 𝒩 makes them coincide.
        let generic = density(rho.dim(), &mut rng);
        let gn = gap_for(&rho, &generic, &alg);
        let gc = gap_for(&rho, &generic, &s.algebra);
        prop_assert_eq!(gn < T.equality_gap, gc < T.equality_gap);

        // Lemma: τ is Φ-fixed exactly when it is fixed by the dual expectation onto 𝒞.
        let phi = ctx.phi_map();
        let tau0 = density(rho.dim(), &mut rng);
        let tau1 = s.dual_expectation_state(&tau0, &T).unwrap();
        for tau in [&tau0, &tau1] {
            let phi_fixed = trace_norm(&(phi.apply(tau.matrix()) - tau.matrix())) < 1e-10;
            let dual_fixed = trace_norm(&(s.dual_map(tau.matrix()) - tau.matrix())) < 1e-8;
            prop_assert_eq!(phi_fixed, dual_fixed);
        }
        prop_assert!(trace_norm(&(phi.apply(tau1.matrix()) - tau1.matrix())) < 1e-10);
    }

    #[test]
    fn equivalence_triangle(seed in any::<u64>(), kind in 0usize..4) {
        let mut rng = CounterRng::new(seed);
        let (rho, alg) = structured(kind, &mut rng);
        let report = takesaki_check(&rho, &alg, &mut rng, &T).unwrap();
        prop_assert!(report.flags_agree(), "{report:?}");
        if report.delta_invariance.flag {
            prop_assert!(report.accardi_cecchini_distance.unwrap() <= 1e-9);
        }
        if kind % 4 == 2 {
            prop_assert!(report.conditional_expectation.flag());
        }
    }

    #[test]
    fn classical_identities(seed in any::<u64>(), omega in 2usize..17, cells_frac in 0.0f64..1.0) {
        let mut rng = CounterRng::new(seed);
        let cells = 1 + ((omega - 1) as f64 * cells_frac) as usize;
        let model = ClassicalModel::random(omega, cells, &mut rng).unwrap();
        prop_assert!(classical_chain(&model).chain_residual() <= 1e-12);
        prop_assert!(diagonal_oracle_check(&model, &T).unwrap().max_discrepancy < 1e-9);

        // 𝓡_σ is the adjoint of 𝓔_σ for the pairing Σ_ω p(ω) y(ω).
        let raw: Vec<f64> = (0..model.cells()).map(|_| rng.uniform() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let gamma: Vec<f64> = raw.iter().map(|g| g / total).collect();
        let y: Vec<f64> = (0..omega).map(|_| rng.normal()).collect();
        let recovered = model.recover_with(&model.sigma, &gamma).unwrap();
        let lhs: f64 = recovered.iter().zip(&y).map(|(r, v)| r * v).sum();
        let rhs: f64 = gamma.iter().zip(model.expectation_with(&model.sigma, &y)).map(|(g, e)| g * e).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn ssa_rewrite(seed in any::<u64>(), middle in 2usize..4) {
        let mut rng = CounterRng::new(seed);
        let dims = [2, middle, 2];
        let ts = TripartiteState::new(dims, density(dims.iter().product(), &mut rng)).unwrap();
        let r = ssa_suite(&ts, &T).unwrap();
        prop_assert!(r.ssa_gap >= -1e-9);
        prop_assert!(r.rewrite_residual() <= 1e-9);
        prop_assert!(r.improved_slack() >= -1e-8);
    }
}
