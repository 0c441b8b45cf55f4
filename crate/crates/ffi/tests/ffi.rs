use std::ffi::{c_char, CString};
use std::ptr;

use kvflow_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe {
        let n = kv_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; n + 1];
        kv_last_error_message(buf.as_mut_ptr(), buf.len());
        std::ffi::CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

unsafe fn torus(n: usize) -> *mut KvManifold {
    let mut m = ptr::null_mut();
    let kind = cstr("flat_torus_t2");
    let res = [n, n];
    assert_eq!(kv_manifold_new(kind.as_ptr(), res.as_ptr(), 2, 0.0, &mut m), KvStatus::Ok);
    m
}

#[test]
fn manifold_and_operator_lifecycle() {
    unsafe {
        let m = torus(8);
        assert_eq!(kv_manifold_dim(m), 2);
        assert_eq!(kv_manifold_node_count(m), 64);
        assert!((kv_manifold_volume(m) - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        let mut op = ptr::null_mut();
        assert_eq!(kv_operator_new(m, &mut op), KvStatus::Ok);
        assert_eq!(kv_operator_dofs(op), 128);

        // a translation is in the kernel
        let x: Vec<f64> = (0..64).flat_map(|_| [1.0, 0.0]).collect();
        let mut y = vec![1.0; 128];
        assert_eq!(kv_operator_apply(op, x.as_ptr(), y.as_mut_ptr(), 128), KvStatus::Ok);
        assert!(y.iter().all(|v| v.abs() < 1e-12));
        let mut f = f64::NAN;
        assert_eq!(kv_operator_frak_l(op, x.as_ptr(), 128, &mut f), KvStatus::Ok);
        assert!(f.abs() < 1e-24);

        kv_operator_free(op);
        kv_manifold_free(m);
        kv_manifold_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut m = ptr::null_mut();
        let kind = cstr("mobius");
        let res = [8usize, 8];
        assert_eq!(kv_manifold_new(kind.as_ptr(), res.as_ptr(), 2, 0.0, &mut m), KvStatus::InvalidArgument);
        assert!(m.is_null());
        assert!(last_error().contains("mobius"));

        assert_eq!(kv_manifold_new(ptr::null(), res.as_ptr(), 2, 0.0, &mut m), KvStatus::NullPointer);

        let m = torus(8);
        let mut op = ptr::null_mut();
        kv_operator_new(m, &mut op);
        let x = [0.0; 10];
        let mut y = vec![0.0; 10];
        assert_eq!(kv_operator_apply(op, x.as_ptr(), y.as_mut_ptr(), 10), KvStatus::DimensionMismatch);
        assert!(last_error().contains("expected 128"));

        let mut small = [0 as c_char; 4];
        let n = kv_last_error_message(small.as_mut_ptr(), 4);
        assert!(n > 3 && small[3] == 0);
        kv_operator_free(op);
        kv_manifold_free(m);
    }
}

#[test]
fn flow_run_reaches_the_kernel_projection() {
    unsafe {
        let m = torus(16);
        let mut op = ptr::null_mut();
        kv_operator_new(m, &mut op);
        // ∂x + sin x ∂x; nodes are row-major in (x, y) with x_i = 2π i/16
        let mut data = Vec::with_capacity(512);
        for i in 0..16 {
            let x = 2.0 * std::f64::consts::PI * i as f64 / 16.0;
            for _j in 0..16 {
                data.extend([1.0 + x.sin(), 0.0]);
            }
        }
        let mut x0 = ptr::null_mut();
        assert_eq!(kv_field_from_data(m, data.as_ptr(), data.len(), &mut x0), KvStatus::Ok);
        assert_eq!(kv_field_len(x0), 512);

        let (variant, integrator) = (cstr("main"), cstr("rk4"));
        let mut xf = ptr::null_mut();
        let mut summary = KvRunSummary::default();
        let s = kv_flow_run(m, op, x0, variant.as_ptr(), integrator.as_ptr(), 10.0, 0.5, &mut xf, &mut summary);
        assert_eq!(s, KvStatus::Ok, "{}", last_error());
        assert_eq!(summary.exit_code, 0);
        assert!((summary.t_final - 10.0).abs() < 1e-12 && summary.steps > 0);
        assert!(summary.frak_l_final < 1e-6 * summary.frak_l_initial);

        let mut out = vec![0.0; 512];
        assert_eq!(kv_field_copy(xf, out.as_mut_ptr(), 512), KvStatus::Ok);
        for node in out.chunks(2) {
            assert!((node[0] - 1.0).abs() < 1e-6 && node[1].abs() < 1e-6);
        }
        assert_eq!(kv_field_copy(xf, out.as_mut_ptr(), 3), KvStatus::DimensionMismatch);

        let bad = cstr("leapfrog");
        let mut xf2 = ptr::null_mut();
        let s = kv_flow_run(m, op, x0, variant.as_ptr(), bad.as_ptr(), 1.0, 0.5, &mut xf2, ptr::null_mut());
        assert_eq!(s, KvStatus::InvalidArgument);
        assert!(xf2.is_null());

        kv_field_free(xf);
        kv_field_free(x0);
        kv_operator_free(op);
        kv_manifold_free(m);
    }
}

#[test]
fn random_fields_are_seeded() {
    unsafe {
        let m = torus(8);
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        kv_field_random(m, 5, &mut a);
        kv_field_random(m, 5, &mut b);
        let mut va = vec![0.0; 128];
        let mut vb = vec![0.0; 128];
        kv_field_copy(a, va.as_mut_ptr(), 128);
        kv_field_copy(b, vb.as_mut_ptr(), 128);
        assert_eq!(va, vb);
        assert!(va.iter().any(|v| *v != 0.0));
        kv_field_free(a);
        kv_field_free(b);
        kv_manifold_free(m);
    }
}
