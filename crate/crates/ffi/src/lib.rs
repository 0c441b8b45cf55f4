//! C ABI over the kvflow library.
//!
//! Handles are opaque and owned by the caller: every `*_new` has a matching
//! `*_free`, and freeing NULL is a no-op. Fallible calls return a
//! [`KvStatus`]; the message of the most recent failure on the calling thread
//! is available through [`kv_last_error_message`]. Panics never cross the
//! boundary; they surface as `KV_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kvflow::fields::analytic::random_bandlimited;
use kvflow::fields::VectorField;
use kvflow::flow::{self, FlowConfig, Integrator, RunStatus, Variant};
use kvflow::manifold::{build_manifold, Manifold, ManifoldKind, ManifoldSpec};
use kvflow::operator::{assemble, FlowOperator};
use kvflow::KvError;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidGeometry = 4,
    NonConvergence = 5,
    Instability = 6,
    Io = 7,
    Panic = 8,
}

impl From<&KvError> for KvStatus {
    fn from(e: &KvError) -> Self {
        match e {
            KvError::DimensionMismatch { .. } => KvStatus::DimensionMismatch,
            KvError::NonPositiveDefinite { .. }
            | KvError::NotEinstein { .. }
            | KvError::NonPositiveScalarCurvature(_) => KvStatus::InvalidGeometry,
            KvError::NonConvergence { .. } | KvError::IncompleteDecomposition { .. } | KvError::NotConverged { .. } => {
                KvStatus::NonConvergence
            }
            KvError::Instability { .. } | KvError::CflViolation { .. } | KvError::VanishingNorm(_) => {
                KvStatus::Instability
            }
            KvError::Io { .. } | KvError::Snapshot(_) => KvStatus::Io,
            _ => KvStatus::InvalidArgument,
        }
    }
}

/// A discretized closed manifold.
pub struct KvManifold {
    inner: Manifold,
}

/// The assembled flow operator of one manifold.
pub struct KvOperator {
    inner: FlowOperator,
    dofs: usize,
}

/// A vector field: nodal components, node-major.
pub struct KvField {
    inner: VectorField,
}

/// Result of [`kv_flow_run`] besides the final field.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct KvRunSummary {
    /// 0 converged, 2 instability, 3 not converged at t_end.
    pub exit_code: i32,
    pub t_final: f64,
    pub steps: usize,
    pub frak_l_initial: f64,
    pub frak_l_final: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Fail(KvStatus, String);

impl From<KvError> for Fail {
    fn from(e: KvError) -> Self {
        Fail(KvStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(KvStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KvStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            KvStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(KvStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, so a
/// call with `len == 0` sizes the buffer.
///
/// # Safety
/// `buf` must be NULL or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn kv_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Build a manifold. `kind` is one of `unit_sphere_s2`, `flat_torus_t2`,
/// `perturbed_torus`, `unit_sphere_s3`; `perturbation` is ignored except for
/// the perturbed torus.
///
/// # Safety
/// `kind` must be a NUL-terminated string, `resolution` valid for `len`
/// values, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kv_manifold_new(
    kind: *const c_char,
    resolution: *const usize,
    len: usize,
    perturbation: f64,
    out: *mut *mut KvManifold,
) -> KvStatus {
    guard(|| {
        let kind: ManifoldKind = c_str(kind, "kind")?.parse()?;
        let res = slice(resolution, len, "resolution")?;
        let mut spec = ManifoldSpec::new(kind, res);
        if kind == ManifoldKind::PerturbedTorus {
            spec.perturbation_amplitude = perturbation;
        }
        let m = build_manifold(&spec)?;
        store(out, KvManifold { inner: m })
    })
}

/// # Safety
/// `m` must be NULL or a handle from [`kv_manifold_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kv_manifold_free(m: *mut KvManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Chart dimension, 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kv_manifold_dim(m: *const KvManifold) -> usize {
    m.as_ref().map_or(0, |m| m.inner.dim())
}

/// Grid node count, 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kv_manifold_node_count(m: *const KvManifold) -> usize {
    m.as_ref().map_or(0, |m| m.inner.node_count())
}

/// Riemannian volume, NaN for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kv_manifold_volume(m: *const KvManifold) -> f64 {
    m.as_ref().map_or(f64::NAN, |m| m.inner.volume())
}

/// Assemble the flow operator. The operator does not borrow the manifold.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kv_operator_new(m: *const KvManifold, out: *mut *mut KvOperator) -> KvStatus {
    guard(|| {
        let m = handle(m, "manifold")?;
        let op = assemble(&m.inner)?;
        let dofs = op.dofs();
        store(out, KvOperator { inner: op, dofs })
    })
}

/// # Safety
/// `op` must be NULL or a handle from [`kv_operator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kv_operator_free(op: *mut KvOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Degrees of freedom (dim × nodes), 0 for NULL.
///
/// # Safety
/// `op` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kv_operator_dofs(op: *const KvOperator) -> usize {
    op.as_ref().map_or(0, |op| op.dofs)
}

fn check_len(op: &KvOperator, len: usize) -> Result<(), Fail> {
    if len != op.dofs {
        return Err(KvError::DimensionMismatch { expected: op.dofs, got: len }.into());
    }
    Ok(())
}

/// y = L_h x. `x` and `y` must not overlap.
///
/// # Safety
/// `x` and `y` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kv_operator_apply(op: *const KvOperator, x: *const f64, y: *mut f64, len: usize) -> KvStatus {
    guard(|| {
        let op = handle(op, "operator")?;
        check_len(op, len)?;
        let x = slice(x, len, "x")?;
        if y.is_null() {
            return Err(null("y"));
        }
        let y = std::slice::from_raw_parts_mut(y, len);
        op.inner.apply(x, y);
        Ok(())
    })
}

/// The discrete deformation energy of `x`.
///
/// # Safety
/// `x` must be valid for `len` doubles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kv_operator_frak_l(op: *const KvOperator, x: *const f64, len: usize, out: *mut f64) -> KvStatus {
    guard(|| {
        let op = handle(op, "operator")?;
        check_len(op, len)?;
        let x = slice(x, len, "x")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = op.inner.frak_l(x);
        Ok(())
    })
}

/// Copy `len = dim × nodes` node-major values into a new field.
///
/// # Safety
/// `data` must be valid for `len` doubles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kv_field_from_data(
    m: *const KvManifold,
    data: *const f64,
    len: usize,
    out: *mut *mut KvField,
) -> KvStatus {
    guard(|| {
        let m = handle(m, "manifold")?;
        let data = slice(data, len, "data")?;
        let x = VectorField::from_data(m.inner.dim(), data.to_vec())?;
        x.check_compatible(&m.inner)?;
        store(out, KvField { inner: x })
    })
}

/// Seeded band-limited random field of unit L² norm.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kv_field_random(m: *const KvManifold, seed: u64, out: *mut *mut KvField) -> KvStatus {
    guard(|| {
        let m = handle(m, "manifold")?;
        store(out, KvField { inner: random_bandlimited(&m.inner, seed) })
    })
}

/// # Safety
/// `x` must be NULL or a field handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kv_field_free(x: *mut KvField) {
    if !x.is_null() {
        drop(Box::from_raw(x));
    }
}

/// Number of values in the field, 0 for NULL.
///
/// # Safety
/// `x` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kv_field_len(x: *const KvField) -> usize {
    x.as_ref().map_or(0, |x| x.inner.as_slice().len())
}

/// Copy the field values into `buf`; `len` must equal [`kv_field_len`].
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kv_field_copy(x: *const KvField, buf: *mut f64, len: usize) -> KvStatus {
    guard(|| {
        let x = handle(x, "field")?;
        let src = x.inner.as_slice();
        if len != src.len() {
            return Err(KvError::DimensionMismatch { expected: src.len(), got: len }.into());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
        Ok(())
    })
}

/// Integrate `x0` to `t_end` (≤ 0 selects the spectral-gap default).
/// `variant` is `main`, `normalized`, `bochner_yano` or `navier_stokes`;
/// `integrator` is `euler`, `rk4` or `rkl2`. An instability or a run that
/// has not converged still returns `KV_STATUS_OK` with the last valid field;
/// inspect `summary->exit_code`.
///
/// # Safety
/// All handles must be live, strings NUL-terminated, `out` and `summary`
/// valid pointers (`summary` may be NULL).
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn kv_flow_run(
    m: *const KvManifold,
    op: *const KvOperator,
    x0: *const KvField,
    variant: *const c_char,
    integrator: *const c_char,
    t_end: f64,
    dt_safety: f64,
    out: *mut *mut KvField,
    summary: *mut KvRunSummary,
) -> KvStatus {
    guard(|| {
        let m = handle(m, "manifold")?;
        let op = handle(op, "operator")?;
        let x0 = handle(x0, "initial field")?;
        check_len(op, x0.inner.as_slice().len())?;
        let config = FlowConfig {
            variant: c_str(variant, "variant")?.parse::<Variant>()?,
            integrator: c_str(integrator, "integrator")?.parse::<Integrator>()?,
            dt_safety,
            t_end: (t_end > 0.0).then_some(t_end),
            checkpoint_stride: 0,
            ..FlowConfig::default()
        };
        let result = flow::run(&x0.inner, &config, &m.inner, &op.inner, None)?;
        if let Some(s) = summary.as_mut() {
            *s = KvRunSummary {
                exit_code: result.status.exit_code(),
                t_final: result.final_state.t,
                steps: result.final_state.step,
                frak_l_initial: result.frak_l_history.first().copied().unwrap_or(f64::NAN),
                frak_l_final: result.frak_l_history.last().copied().unwrap_or(f64::NAN),
            };
        }
        if let RunStatus::Instability { reason, .. } = &result.status {
            set_error(reason.clone());
        }
        store(out, KvField { inner: result.final_state.x })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_covers_geometry_errors() {
        assert_eq!(KvStatus::from(&KvError::NonPositiveDefinite { node: 3 }), KvStatus::InvalidGeometry);
        assert_eq!(KvStatus::from(&KvError::UnknownManifoldKind("x".into())), KvStatus::InvalidArgument);
        assert_eq!(KvStatus::from(&KvError::Instability { t: 1.0, step: 2 }), KvStatus::Instability);
    }

    #[test]
    fn panic_is_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, KvStatus::Panic);
        let n = unsafe { kv_last_error_message(ptr::null_mut(), 0) };
        assert!(n > 0);
    }
}
