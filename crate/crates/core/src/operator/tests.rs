use super::*;
use crate::fields::analytic::{fourier_mode, killing_rotation, random_bandlimited, FourierMode};
use crate::manifold::{build_manifold, ManifoldKind, ManifoldSpec};
use proptest::prelude::*;

fn t2(n: usize) -> Manifold {
    build_manifold(&ManifoldSpec::new(ManifoldKind::FlatTorusT2, &[n, n])).unwrap()
}

fn s2(n: usize) -> Manifold {
    build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS2, &[n, 2 * n])).unwrap()
}

fn rel_residual(op: &FlowOperator, x: &VectorField, lambda: f64) -> f64 {
    let mut lx = op.apply_field(x);
    lx.axpy(-lambda, x);
    (op.norm_sq(lx.as_slice()) / op.norm_sq(x.as_slice())).sqrt()
}

#[test]
fn translations_are_exact_kernel_on_flat_torus() {
    let m = t2(16);
    let op = assemble(&m).unwrap();
    for axis in ["x", "y"] {
        let k = killing_rotation(&m, axis).unwrap();
        assert!(op.frak_l(k.as_slice()) < 1e-24);
        assert!(op.apply_field(&k).max_abs() < 1e-12);
    }
}

#[test]
fn gradient_mode_eigenvalue_converges_at_second_order() {
    // sin x ∂x: Δ gives −1, ∇div gives −1, Ric = 0
    let r: Vec<f64> = [16, 32]
        .iter()
        .map(|&n| {
            let m = t2(n);
            let x = fourier_mode(&m, FourierMode::sin_x(0, 1.0)).unwrap();
            rel_residual(&assemble(&m).unwrap(), &x, -2.0)
        })
        .collect();
    assert!(r[1] < 1e-2 && r[0] / r[1] > 3.5, "{r:?}");
}

#[test]
fn sphere_rotations_are_near_kernel() {
    let e: Vec<f64> = [16, 32]
        .iter()
        .map(|&n| {
            let m = s2(n);
            let op = assemble(&m).unwrap();
            let k = killing_rotation(&m, "x").unwrap();
            op.frak_l(k.as_slice()) / op.norm_sq(k.as_slice())
        })
        .collect();
    assert!(e[1] < e[0] && e[1] < 1e-3, "{e:?}");
}

#[test]
fn stiffness_is_symmetric() {
    for m in [t2(8), s2(8), build_manifold(&ManifoldSpec::perturbed_torus(8, 0.3)).unwrap()] {
        assert!(assemble(&m).unwrap().asymmetry() < 1e-13);
    }
}

#[test]
fn torus_spectrum_has_two_dimensional_kernel() {
    let m = t2(8);
    let op = assemble(&m).unwrap();
    let spec = eigendecompose(&op, None).unwrap();
    assert!(spec.complete && spec.len() == op.dofs());
    assert!(spec.values.iter().all(|&v| v < 1e-10));
    assert!(spec.values.windows(2).all(|w| w[0] >= w[1]));
    let tol = default_kernel_tol(&spec, &m);
    assert_eq!(tol.gap_index, 2);
    // smallest nonzero mode: divergence-free |k| = 1, −1 in the continuum and
    // −(2 sin(h/2)/h)² for the centered difference
    let h = std::f64::consts::PI / 4.0;
    let want = -(2.0 * (h / 2.0).sin() / h).powi(2);
    assert!((tol.first_nonzero - want).abs() < 1e-10, "{tol:?}");
    let basis = killing_kernel(&spec, tol.tol, &m);
    assert_eq!(basis.dim(), 2);
    let max_res = spec.residuals.iter().cloned().fold(0.0, f64::max);
    assert!(max_res < 1e-9, "{max_res}");
}

#[test]
fn lanczos_bound_matches_dense_extreme() {
    let m = t2(8);
    let op = assemble(&m).unwrap();
    let spec = eigendecompose(&op, None).unwrap();
    let dense = -spec.values.last().unwrap();
    let est = lambda_max_estimate(&op).unwrap();
    assert!(est >= dense * (1.0 - 1e-3) && est <= dense * 1.01, "est {est} dense {dense}");
}

#[test]
fn projection_fixes_kernel_members() {
    let m = t2(8);
    let op = assemble(&m).unwrap();
    let spec = eigendecompose(&op, None).unwrap();
    let tol = default_kernel_tol(&spec, &m);
    let basis = killing_kernel(&spec, tol.tol, &m);
    let k = killing_rotation(&m, "y").unwrap();
    let p = project_killing(&k, &basis, &op.mass);
    assert!(p.diff(&k).max_abs() < 1e-10);
}

#[test]
fn incomplete_spectrum_refuses_evolution() {
    let m = t2(8);
    let op = assemble(&m).unwrap();
    let mut spec = eigendecompose(&op, None).unwrap();
    spec.complete = false;
    let x = random_bandlimited(&m, 1);
    assert!(matches!(evolve_spectral(&x, 1.0, &spec), Err(KvError::IncompleteDecomposition { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_identity_holds(seed in 0u64..10_000, n in 4usize..10) {
        for m in [t2(2 * n), s2(2 * n)] {
            let op = assemble(&m).unwrap();
            let x = random_bandlimited(&m, seed);
            let lx = op.apply_field(&x);
            let q = op.inner(x.as_slice(), lx.as_slice());
            let f = op.frak_l(x.as_slice());
            prop_assert!(q <= 1e-12 * f.max(1e-300));
            prop_assert!((q + 2.0 * f).abs() <= 1e-11 * f.max(1e-12));
        }
    }

    #[test]
    fn mass_solve_inverts_apply(seed in 0u64..10_000) {
        let m = build_manifold(&ManifoldSpec::perturbed_torus(8, 0.4)).unwrap();
        let mass = MassMatrix::new(&m).unwrap();
        let x = random_bandlimited(&m, seed);
        let mut mx = vec![0.0; mass.dofs()];
        let mut back = vec![0.0; mass.dofs()];
        mass.apply(x.as_slice(), &mut mx);
        mass.solve(&mx, &mut back);
        for (a, b) in back.iter().zip(x.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_evolution_at_zero_is_identity(seed in 0u64..1000) {
        let m = t2(8);
        let op = assemble(&m).unwrap();
        let spec = eigendecompose(&op, None).unwrap();
        let x = random_bandlimited(&m, seed);
        let y = evolve_spectral(&x, 0.0, &spec).unwrap();
        prop_assert!(y.diff(&x).max_abs() < 1e-10);
    }
}
