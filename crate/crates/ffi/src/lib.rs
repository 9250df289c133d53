//! C interface to the conewalk library.
//!
//! Cones and models are opaque heap handles created by `cw_*_new*` functions and released with
//! the matching `*_free`. Every fallible call returns a [`CwStatus`]; on failure the message is
//! retrievable with [`cw_last_error`] from the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use conewalk::chain::{ChainModel, ModelSpec};
use conewalk::cone::{Cone, ConeSpec};
use conewalk::error::Error;
use conewalk::mc::{estimate_survival, NGrid};
use conewalk::oracle::{bm_halfspace_survival, dp_rows, DEFAULT_MEMORY_CAP_BYTES};

/// Result of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidCone = 3,
    InvalidModel = 4,
    DimensionMismatch = 5,
    NonLatticeModel = 6,
    BudgetExceeded = 7,
    SolverFailure = 8,
    Unsupported = 9,
    Panic = 10,
    Other = 11,
}

/// Opaque cone handle.
pub struct CwCone(Cone);

/// Opaque chain-model handle.
pub struct CwModel(ChainModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CwStatus {
    match e {
        Error::InvalidArgument(_) | Error::InvalidConfig(_) => CwStatus::InvalidArgument,
        Error::InvalidCone(_) => CwStatus::InvalidCone,
        Error::InvalidModel(_) => CwStatus::InvalidModel,
        Error::DimensionMismatch { .. } => CwStatus::DimensionMismatch,
        Error::NonLatticeModel => CwStatus::NonLatticeModel,
        Error::BudgetExceeded { .. } => CwStatus::BudgetExceeded,
        Error::SolverFailure(_) => CwStatus::SolverFailure,
        Error::Unsupported(_) => CwStatus::Unsupported,
        _ => CwStatus::Other,
    }
}

struct Fail(CwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CwStatus::NullPointer, format!("{what} is null"))
}

fn guard<F>(f: F) -> CwStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CwStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {message}"));
            CwStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn cone_ref<'a>(c: *const CwCone) -> Result<&'a Cone, Fail> {
    c.as_ref().map(|c| &c.0).ok_or_else(|| null("cone"))
}

unsafe fn model_ref<'a>(m: *const CwModel) -> Result<&'a ChainModel, Fail> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

unsafe fn json_arg(s: *const c_char) -> Result<String, Fail> {
    if s.is_null() {
        return Err(null("json"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map(str::to_owned)
        .map_err(|e| Fail(CwStatus::InvalidArgument, format!("json is not UTF-8: {e}")))
}

fn new_cone(spec: ConeSpec, out: *mut *mut CwCone) -> CwStatus {
    guard(|| {
        let cone = Cone::new(spec)?;
        unsafe { write(out, Box::into_raw(Box::new(CwCone(cone))), "out") }
    })
}

fn new_model(spec: ModelSpec, out: *mut *mut CwModel) -> CwStatus {
    guard(|| {
        let model = ChainModel::new(spec)?;
        unsafe { write(out, Box::into_raw(Box::new(CwModel(model))), "out") }
    })
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn cw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn cw_cone_new_half_line(out: *mut *mut CwCone) -> CwStatus {
    new_cone(ConeSpec::HalfLine, out)
}

#[no_mangle]
pub extern "C" fn cw_cone_new_half_space(d: usize, out: *mut *mut CwCone) -> CwStatus {
    new_cone(ConeSpec::HalfSpace { d }, out)
}

#[no_mangle]
pub extern "C" fn cw_cone_new_wedge(omega_radians: f64, out: *mut *mut CwCone) -> CwStatus {
    new_cone(ConeSpec::Wedge2D { omega_radians }, out)
}

#[no_mangle]
pub extern "C" fn cw_cone_new_orthant(d: usize, out: *mut *mut CwCone) -> CwStatus {
    new_cone(ConeSpec::Orthant { d }, out)
}

#[no_mangle]
pub extern "C" fn cw_cone_new_circular(theta0_radians: f64, out: *mut *mut CwCone) -> CwStatus {
    new_cone(ConeSpec::CircularCone3D { theta0_radians }, out)
}

/// Cone from its JSON description, e.g. `{"variant":"wedge2d","omega_radians":2.0}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cw_cone_from_json(json: *const c_char, out: *mut *mut CwCone) -> CwStatus {
    let spec = match json_arg(json).and_then(|s| {
        serde_json::from_str::<ConeSpec>(&s).map_err(|e| Fail(CwStatus::InvalidCone, e.to_string()))
    }) {
        Ok(spec) => spec,
        Err(Fail(status, message)) => {
            set_error(message);
            return status;
        }
    };
    new_cone(spec, out)
}

/// # Safety
/// `cone` must be null or a handle from a `cw_cone_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_cone_free(cone: *mut CwCone) {
    if !cone.is_null() {
        drop(Box::from_raw(cone));
    }
}

/// Ambient dimension, or 0 for a null handle.
///
/// # Safety
/// `cone` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_cone_dim(cone: *const CwCone) -> usize {
    cone.as_ref().map_or(0, |c| c.0.dim())
}

/// Homogeneity exponent `p` of the cone's harmonic function.
///
/// # Safety
/// `cone` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_cone_exponent(cone: *const CwCone, out: *mut f64) -> CwStatus {
    guard(|| write(out, cone_ref(cone)?.exponent(), "out"))
}

unsafe fn point_query<T>(
    cone: *const CwCone,
    x: *const f64,
    len: usize,
    out: *mut T,
    f: impl FnOnce(&Cone, &[f64]) -> T,
) -> CwStatus {
    guard(|| {
        let cone = cone_ref(cone)?;
        let x = slice(x, len, "x")?;
        if len != cone.dim() {
            return Err(Error::DimensionMismatch { expected: cone.dim(), got: len }.into());
        }
        write(out, f(cone, x), "out")
    })
}

/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_cone_contains(
    cone: *const CwCone,
    x: *const f64,
    len: usize,
    out: *mut bool,
) -> CwStatus {
    point_query(cone, x, len, out, |c, x| c.contains(x))
}

/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_cone_boundary_distance(
    cone: *const CwCone,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> CwStatus {
    point_query(cone, x, len, out, |c, x| c.boundary_distance(x))
}

/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_cone_harmonic_u(
    cone: *const CwCone,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> CwStatus {
    point_query(cone, x, len, out, |c, x| c.harmonic_u(x))
}

#[no_mangle]
pub extern "C" fn cw_model_new_lattice(dim: usize, out: *mut *mut CwModel) -> CwStatus {
    new_model(ModelSpec::IidLattice { dim }, out)
}

#[no_mangle]
pub extern "C" fn cw_model_new_gaussian(dim: usize, out: *mut *mut CwModel) -> CwStatus {
    new_model(ModelSpec::IidGaussian { dim }, out)
}

#[no_mangle]
pub extern "C" fn cw_model_new_heavy_tail(dim: usize, a: f64, out: *mut *mut CwModel) -> CwStatus {
    new_model(ModelSpec::IidHeavyTail { dim, a }, out)
}

/// Model from its JSON description, e.g. `{"variant":"iid_lattice","dim":2}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cw_model_from_json(json: *const c_char, out: *mut *mut CwModel) -> CwStatus {
    let spec = match json_arg(json).and_then(|s| {
        serde_json::from_str::<ModelSpec>(&s).map_err(|e| Fail(CwStatus::InvalidModel, e.to_string()))
    }) {
        Ok(spec) => spec,
        Err(Fail(status, message)) => {
            set_error(message);
            return status;
        }
    };
    new_model(spec, out)
}

/// # Safety
/// `model` must be null or a handle from a `cw_model_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_model_free(model: *mut CwModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// State dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_model_dim(model: *const CwModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// Monte Carlo survival `P̂_x(τ > n)` and its standard error at each of the `n_len` times in `n`
/// (strictly increasing). `p_hat` and `se` must hold `n_len` doubles. Output is independent of
/// `threads` (0 = all cores).
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn cw_estimate_survival(
    model: *const CwModel,
    cone: *const CwCone,
    x0: *const f64,
    x0_len: usize,
    n: *const u64,
    n_len: usize,
    paths: u64,
    seed: u64,
    threads: usize,
    p_hat: *mut f64,
    se: *mut f64,
) -> CwStatus {
    guard(|| {
        let model = model_ref(model)?;
        let cone = cone_ref(cone)?;
        let x0 = slice(x0, x0_len, "x0")?;
        let grid = NGrid::new(slice(n, n_len, "n")?.to_vec())?;
        let p_out = slice_mut(p_hat, n_len, "p_hat")?;
        let se_out = slice_mut(se, n_len, "se")?;
        let curve = estimate_survival(model, cone, x0, &grid, paths, seed, threads)?;
        p_out.copy_from_slice(&curve.p_hat);
        se_out.copy_from_slice(&curve.se);
        Ok(())
    })
}

/// Exact survival `P_x(τ > n)` for `n = 0..=n_max` of the product simple random walk started at
/// the lattice point `x0`. `survival` must hold `n_max + 1` doubles; `killed_u` may be null,
/// otherwise it receives `E_x[u(X(n)); τ > n]` for the same `n`. A `memory_cap_bytes` of 0 selects
/// the default cap.
///
/// # Safety
/// All non-null pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn cw_dp_survival(
    model: *const CwModel,
    cone: *const CwCone,
    x0: *const i64,
    x0_len: usize,
    n_max: usize,
    memory_cap_bytes: u64,
    survival: *mut f64,
    killed_u: *mut f64,
) -> CwStatus {
    guard(|| {
        let model = model_ref(model)?;
        let cone = cone_ref(cone)?;
        let x0 = slice(x0, x0_len, "x0")?;
        let len = n_max
            .checked_add(1)
            .ok_or_else(|| Fail(CwStatus::InvalidArgument, "n_max overflows".into()))?;
        let s_out = slice_mut(survival, len, "survival")?;
        let cap = if memory_cap_bytes == 0 { DEFAULT_MEMORY_CAP_BYTES } else { memory_cap_bytes as u128 };
        let rows = dp_rows(model, cone, x0, n_max, cap)?;
        for (o, r) in s_out.iter_mut().zip(&rows) {
            *o = r.survival;
        }
        if !killed_u.is_null() {
            let u_out = std::slice::from_raw_parts_mut(killed_u, len);
            for (o, r) in u_out.iter_mut().zip(&rows) {
                *o = r.killed_u_expectation;
            }
        }
        Ok(())
    })
}

/// Survival of Brownian motion started at height `x > 0` above a hyperplane, up to time `t > 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_bm_halfspace_survival(x: f64, t: f64, out: *mut f64) -> CwStatus {
    guard(|| write(out, bm_halfspace_survival(x, t)?, "out"))
}
