use super::*;
use crate::fields::analytic::random_bandlimited;
use proptest::prelude::*;
use std::f64::consts::PI;

fn s2(n: usize) -> Manifold {
    build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS2, &[n, 2 * n])).unwrap()
}

fn t2(n: usize) -> Manifold {
    build_manifold(&ManifoldSpec::new(ManifoldKind::FlatTorusT2, &[n, n])).unwrap()
}

/// Max |Γ_closed − Γ_fd|, weighted by sin θ on spheres when `weighted`:
/// Γ^φ_θφ = cot θ would otherwise make the pole rows first order.
fn max_christoffel_gap(m: &Manifold, weighted: bool) -> f64 {
    let fd = christoffel_fd(&m.metric, &m.grid);
    let d = m.dim();
    let mut worst = 0.0f64;
    for (node, (a, b)) in m.connection.gamma.iter().zip(&fd.gamma).enumerate() {
        let w = if weighted { m.coord(node)[0].sin() } else { 1.0 };
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    worst = worst.max(w * (a[k][i][j] - b[k][i][j]).abs());
                }
            }
        }
    }
    worst
}

#[test]
fn volumes_match_closed_forms() {
    assert!((t2(16).volume() - 4.0 * PI * PI).abs() < 1e-12);
    // midpoint rule in θ: second order
    let e16 = (s2(16).volume() - 4.0 * PI).abs();
    let e32 = (s2(32).volume() - 4.0 * PI).abs();
    assert!(e32 < 2e-2 && e16 / e32 > 3.5, "e16 {e16} e32 {e32}");
    let s3 = build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS3, &[8, 8, 16])).unwrap();
    assert!((s3.volume() - 2.0 * PI * PI).abs() / (2.0 * PI * PI) < 0.05);
}

#[test]
fn sphere_curvature_is_constant() {
    let m = s2(16);
    for r in &m.curvature.scalar {
        assert!((r - 2.0).abs() < 1e-9, "R = {r}");
    }
    assert_eq!(m.sectional_curvature_range().map(|(a, b)| (a.round(), b.round())), Some((1.0, 1.0)));
    let s3 = build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS3, &[8, 8, 16])).unwrap();
    for rm in &s3.curvature.ricci_mixed {
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((rm[i][j] - want).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn flat_torus_has_no_curvature() {
    let m = t2(8);
    assert!(m.curvature.scalar.iter().all(|r| r.abs() < 1e-14));
    assert!(max_christoffel_gap(&m, false) < 1e-14);
}

#[test]
fn finite_difference_connection_converges_at_second_order() {
    let e1 = max_christoffel_gap(&s2(16), true);
    let e2 = max_christoffel_gap(&s2(32), true);
    assert!(e2 < e1 && e1 / e2 > 3.5, "e16 {e1} e32 {e2}");
}

#[test]
fn perturbed_torus_curvature_integrates_to_zero() {
    // Gauss-Bonnet: χ(T²) = 0
    let m = build_manifold(&ManifoldSpec::perturbed_torus(32, 0.3)).unwrap();
    let total = integrate_scalar(&m.curvature.scalar, &m);
    let scale = integrate_scalar(&m.curvature.scalar.iter().map(|r| r.abs()).collect::<Vec<_>>(), &m);
    assert!(total.abs() < 1e-3 * scale, "total {total} scale {scale}");
}

#[test]
fn sphere_curvature_integrates_to_euler_characteristic() {
    // ∫K dA = 2πχ with K = R/2, χ(S²) = 2
    let m = s2(32);
    let total = integrate_scalar(&m.curvature.scalar, &m) / 2.0;
    assert!((total - 4.0 * PI).abs() < 2e-2);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(matches!(
        build_manifold(&ManifoldSpec::new(ManifoldKind::FlatTorusT2, &[8])),
        Err(KvError::InvalidResolution { .. })
    ));
    assert!(matches!(
        build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS2, &[8, 15])),
        Err(KvError::OddPeriodicResolution { .. })
    ));
    assert!(matches!(
        build_manifold(&ManifoldSpec::perturbed_torus(8, 0.7)),
        Err(KvError::PerturbationOutOfRange(_))
    ));
    assert!(matches!("klein_bottle".parse::<ManifoldKind>(), Err(KvError::UnknownManifoldKind(_))));
}

#[test]
fn refined_doubles_every_direction() {
    let spec = ManifoldSpec::new(ManifoldKind::UnitSphereS2, &[8, 16]).refined(2);
    assert_eq!(spec.resolution, vec![16, 32]);
}

#[test]
fn l2_inner_rejects_mismatched_fields() {
    let m = t2(8);
    let x = VectorField::zeros_with(2, 10);
    assert!(matches!(l2_inner(&x, &x, &m), Err(KvError::DimensionMismatch { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn metric_is_positive_definite(a in 0.0f64..0.5, n in 4usize..12) {
        let m = build_manifold(&ManifoldSpec::perturbed_torus(2 * n, a)).unwrap();
        for (g, gi) in m.metric.g.iter().zip(&m.metric.g_inv) {
            prop_assert!(g[0][0] > 0.0 && g[0][0] * g[1][1] - g[0][1] * g[1][0] > 0.0);
            let id = g[0][0] * gi[0][0] + g[0][1] * gi[1][0];
            prop_assert!((id - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_inner_is_symmetric_and_bilinear(s1 in 0u64..1000, s2_ in 0u64..1000, c in -3.0f64..3.0) {
        let m = s2(8);
        let x = random_bandlimited(&m, s1);
        let y = random_bandlimited(&m, s2_);
        let xy = l2_inner(&x, &y, &m).unwrap();
        let yx = l2_inner(&y, &x, &m).unwrap();
        prop_assert!((xy - yx).abs() < 1e-12);
        let lhs = l2_inner(&x.sum(&y.scaled(c)), &x, &m).unwrap();
        let rhs = l2_inner(&x, &x, &m).unwrap() + c * yx;
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn constants_integrate_to_volume(c in -10.0f64..10.0) {
        let m = s2(8);
        let f = vec![c; m.node_count()];
        prop_assert!((integrate_scalar(&f, &m) - c * m.volume()).abs() < 1e-10 * (1.0 + c.abs()));
    }
}
