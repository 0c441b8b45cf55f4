use super::analytic::{gradient_of, killing_rotation, random_bandlimited, sample_scalar, ScalarFn};
use super::*;
use crate::manifold::{build_manifold, integrate_scalar, l2_inner, ManifoldKind, ManifoldSpec};
use proptest::prelude::*;

fn s2(n: usize) -> Manifold {
    build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS2, &[n, 2 * n])).unwrap()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |s, (x, y)| s.max((x - y).abs())) / scale
}

/// Error at n = 16 and 32; asserts roughly second-order decay (pole rows
/// cost a little).
fn second_order(f: impl Fn(usize) -> f64) -> f64 {
    let (e1, e2) = (f(16), f(32));
    assert!(e1 / e2 > 3.2, "e16 {e1} e32 {e2}");
    e2
}

#[test]
fn discrete_gradient_converges_to_exact() {
    let e = second_order(|n| {
        let m = s2(n);
        let f = sample_scalar(&m, ScalarFn::EmbedX).unwrap();
        max_rel(gradient(&f, &m).as_slice(), gradient_of(&m, ScalarFn::EmbedX).unwrap().as_slice())
    });
    assert!(e < 1e-2);
}

#[test]
fn sphere_harmonics_are_laplacian_eigenfunctions() {
    // Δz = −2z on S²
    let e = second_order(|n| {
        let m = s2(n);
        let z = sample_scalar(&m, ScalarFn::CosTheta).unwrap();
        let want: Vec<f64> = z.iter().map(|v| -2.0 * v).collect();
        max_rel(&laplace_beltrami(&z, &m), &want)
    });
    assert!(e < 1e-2);
    // Δ cos χ = −3 cos χ on S³
    let m = build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS3, &[16, 16, 32])).unwrap();
    let c = sample_scalar(&m, ScalarFn::CosTheta).unwrap();
    let want: Vec<f64> = c.iter().map(|v| -3.0 * v).collect();
    assert!(max_rel(&laplace_beltrami(&c, &m), &want) < 2e-2);
}

#[test]
fn killing_fields_have_no_divergence_or_deformation() {
    for axis in ["x", "y", "z"] {
        let div_l2 = second_order_or_zero(|n| {
            let m = s2(n);
            let k = killing_rotation(&m, axis).unwrap();
            let div = divergence(&k, &m);
            let d2 = integrate_scalar(&div.iter().map(|d| d * d).collect::<Vec<_>>(), &m);
            (d2 / l2_inner(&k, &k, &m).unwrap()).sqrt()
        });
        assert!(div_l2 < 5e-3, "{axis}");
        let m = s2(32);
        let k = killing_rotation(&m, axis).unwrap();
        let n2 = l2_inner(&k, &k, &m).unwrap();
        assert!(energy_report(&k, &m).frak_l < 1e-4 * n2, "{axis}");
        // the nodal operator is first order next to the poles
        let rhs = |m: &Manifold| {
            let k = killing_rotation(m, axis).unwrap();
            let r = flow_rhs(&k, m);
            (l2_inner(&r, &r, m).unwrap() / l2_inner(&k, &k, m).unwrap()).sqrt()
        };
        let (r1, r2) = (rhs(&m), rhs(&s2(64)));
        assert!(r2 < 0.6 * r1 && r1 < 6e-2, "{axis}: {r1} {r2}");
    }
}

fn second_order_or_zero(f: impl Fn(usize) -> f64) -> f64 {
    let e = f(16);
    if e == 0.0 {
        0.0
    } else {
        second_order(|n| if n == 16 { e } else { f(n) })
    }
}

#[test]
fn bochner_yano_identity_converges() {
    let e = second_order(|n| {
        let m = s2(n);
        let x = random_bandlimited(&m, 9);
        energy_report(&x, &m).relative_yano_residual(1.0)
    });
    assert!(e < 1e-2);
}

#[test]
fn dagger_source_is_a_gradient() {
    let dagger = |n| {
        let m = s2(n);
        let h = sample_scalar(&m, ScalarFn::CosTheta).unwrap();
        let k = killing_rotation(&m, "z").unwrap();
        (dagger_source(&h, &k, &m).unwrap(), h)
    };
    assert!(second_order(|n| dagger(n).0.residual) < 3e-2);
    let (d, h) = dagger(32);
    // 2Δz + (2R/m) z = −4z + 2z = −2z
    let want: Vec<f64> = h.iter().map(|v| -2.0 * v).collect();
    assert!(max_rel(&d.potential, &want) < 1e-2);
}

#[test]
fn field_constructors_check_shapes() {
    assert!(matches!(VectorField::from_data(2, vec![0.0; 5]), Err(KvError::DimensionMismatch { .. })));
    let m = s2(8);
    let x = VectorField::zeros_with(3, m.node_count());
    assert!(x.check_compatible(&m).is_err());
    let flat = build_manifold(&ManifoldSpec::new(ManifoldKind::FlatTorusT2, &[8, 8])).unwrap();
    assert!(sample_scalar(&flat, ScalarFn::CosTheta).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_fields_are_reproducible_unit_vectors(seed in any::<u64>()) {
        let m = s2(8);
        let a = random_bandlimited(&m, seed);
        let b = random_bandlimited(&m, seed);
        prop_assert_eq!(a.as_slice(), b.as_slice());
        prop_assert!((l2_inner(&a, &a, &m).unwrap() - 1.0).abs() < 1e-12);
        let c = random_bandlimited(&m, seed.wrapping_add(1));
        prop_assert!(a.diff(&c).max_abs() > 1e-6);
    }

    #[test]
    fn divergence_is_linear(s1 in 0u64..1000, s2_ in 0u64..1000, c in -2.0f64..2.0) {
        let m = s2(8);
        let x = random_bandlimited(&m, s1);
        let y = random_bandlimited(&m, s2_);
        let lhs = divergence(&x.sum(&y.scaled(c)), &m);
        let dx = divergence(&x, &m);
        let dy = divergence(&y, &m);
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - dx[i] - c * dy[i]).abs() < 1e-10);
        }
    }
}
