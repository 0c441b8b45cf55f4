use super::*;
use crate::fields::analytic::{sample_scalar, ScalarFn};
use crate::manifold::{build_manifold, ManifoldKind, ManifoldSpec};
use proptest::prelude::*;

fn s2(n: usize) -> Manifold {
    build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS2, &[n, 2 * n])).unwrap()
}

fn t2(n: usize) -> Manifold {
    build_manifold(&ManifoldSpec::new(ManifoldKind::FlatTorusT2, &[n, n])).unwrap()
}

#[test]
fn model_geometries_classify_correctly() {
    let r = verify_einstein(&s2(16));
    assert!(r.is_einstein && r.closed_form && (r.r_const - 2.0).abs() < 1e-12);
    assert!(r.require_positive().is_ok());

    let s3 = build_manifold(&ManifoldSpec::new(ManifoldKind::UnitSphereS3, &[8, 8, 16])).unwrap();
    let r = verify_einstein(&s3);
    assert!(r.is_einstein && (r.r_const - 6.0).abs() < 1e-12 && r.m == 3);

    let flat = verify_einstein(&t2(8));
    assert!(flat.is_einstein && flat.r_const.abs() < 1e-14);
    assert!(matches!(flat.require_positive(), Err(KvError::NonPositiveScalarCurvature(_))));

    let bumpy = verify_einstein(&build_manifold(&ManifoldSpec::perturbed_torus(16, 0.3)).unwrap());
    assert!(!bumpy.is_einstein);
    assert!(matches!(bumpy.require_positive(), Err(KvError::NotEinstein { .. })));
}

#[test]
fn lambda1_on_flat_torus_is_one() {
    // −Δ on [0, 2π)²: cos x, sin x, cos y, sin y at 1; discrete (2 sin(h/2)/h)²
    let n = 16;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let want = (2.0 * (h / 2.0).sin() / h).powi(2);
    let est = lambda1(&t2(n)).unwrap();
    assert!((est.lambda1 - want).abs() < 1e-8, "{} vs {want}", est.lambda1);
    assert!(est.lichnerowicz.is_none());
}

#[test]
fn lambda1_on_sphere_converges_to_two() {
    let e: Vec<f64> = [16, 32].iter().map(|&n| (lambda1(&s2(n)).unwrap().lambda1 - 2.0).abs()).collect();
    assert!(e[1] < 1e-2 && e[0] / e[1] > 3.0, "{e:?}");
    // Obata: equality in the Lichnerowicz bound
    let est = lambda1(&s2(32)).unwrap();
    let l = est.lichnerowicz.unwrap();
    assert!(l.satisfied && (l.bound - 2.0).abs() < 1e-12);
    assert!(est.residual < 1e-6);
    let mass_mean: f64 = ScalarLaplacian::new(&s2(32)).integrate(&est.eigenfunction);
    assert!(mass_mean.abs() < 1e-10);
}

#[test]
fn heat_mean_grows_at_the_curvature_rate() {
    let m = s2(16);
    let cfg = ScalarHeatConfig { t_end: 0.5, dt: Some(1e-2), sample_stride: 5, ..ScalarHeatConfig::default() };
    let phi = vec![0.0; m.node_count()];
    let run = scalar_heat_run(&phi, 1.0, &cfg, &m).unwrap();
    for s in &run.samples {
        let want = mean_closed_form(s.t, 1.0, 0.0, 2.0, 2, m.volume());
        // time error only: the mass-weighted mean of Δf vanishes exactly
        assert!((s.a - want).abs() < 1e-4 * want, "t {} a {} want {want}", s.t, s.a);
    }
}

#[test]
fn scalar_heat_needs_positive_einstein() {
    let m = t2(8);
    let phi = vec![0.0; m.node_count()];
    assert!(scalar_heat_run(&phi, 1.0, &ScalarHeatConfig::default(), &m).is_err());
    let bad = vec![0.0; 3];
    assert!(matches!(
        scalar_heat_run(&bad, 1.0, &ScalarHeatConfig::default(), &s2(8)),
        Err(KvError::DimensionMismatch { .. })
    ));
}

#[test]
fn csv_has_one_row_per_sample() {
    let m = s2(8);
    let cfg = ScalarHeatConfig { t_end: 0.1, dt: Some(1e-2), sample_stride: 1, ..ScalarHeatConfig::default() };
    let phi = sample_scalar(&m, ScalarFn::CosTheta).unwrap();
    let run = scalar_heat_run(&phi, 0.0, &cfg, &m).unwrap();
    let text = heat_csv(&run, Some(2.0));
    assert_eq!(text.lines().count(), run.samples.len() + 1);
}

proptest! {
    #[test]
    fn mean_is_stationary_at_c_x(phi_int in -10.0f64..10.0, r in 0.5f64..6.0, m in 2usize..4, vol in 1.0f64..50.0, t in 0.0f64..3.0) {
        let c = c_x(phi_int, r, m, vol);
        let a = mean_closed_form(t, c, phi_int, r, m, vol);
        // the cancelling coefficient is only zero to rounding, amplified by e^{2Rt/m}
        let growth = (2.0 * r / m as f64 * t).exp();
        prop_assert!((a - c * vol).abs() < 1e-13 * (1.0 + (c * vol).abs()) * growth);
    }

    #[test]
    fn l2_bound_interpolates(c0 in 0.0f64..5.0, norm in 0.0f64..5.0, gap in 0.1f64..4.0, t in 0.0f64..5.0) {
        prop_assert!((l2_bound(0.0, c0, norm, gap) - c0).abs() < 1e-12);
        let s = norm / (2.0 * gap);
        let b = l2_bound(t, c0, norm, gap);
        prop_assert!(b >= c0.min(s) - 1e-12 && b <= c0.max(s) + 1e-12);
        prop_assert!((l2_bound(1e3, c0, norm, gap) - s).abs() < 1e-9);
    }
}
