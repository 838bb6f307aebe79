//! C ABI for squeezekit.
//!
//! Handles are opaque pointers created by `sk_*_new`/constructor functions and
//! released with the matching `*_free`. Every fallible function returns an
//! [`SkStatus`]; on failure the message is kept per thread and can be copied
//! out with [`sk_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use squeezekit::dicke::{oat_optimal_xi2, trial_state};
use squeezekit::lattice::{build_chain, build_square, interaction_matrix, InteractionMatrix};
use squeezekit::statevec::{IsingSpectrum, ParamVector, StateVector};
use squeezekit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Numerical = 4,
    DegenerateBlochVector = 5,
    Panic = 6,
    Other = 7,
}

/// Interaction matrix of a filled geometry, with its Ising spectrum.
pub struct SkLattice {
    v: InteractionMatrix,
    ising: IsingSpectrum,
}

/// `2^N` state vector.
pub struct SkState {
    s: StateVector,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> SkStatus {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) | Error::DimensionMismatch { .. } => SkStatus::InvalidArgument,
        Error::Capacity { .. } => SkStatus::Capacity,
        Error::Numerical(_) | Error::UnstableEstimate { .. } => SkStatus::Numerical,
        Error::DegenerateBlochVector(_) => SkStatus::DegenerateBlochVector,
        _ => SkStatus::Other,
    }
}

fn guard<F>(f: F) -> SkStatus
where
    F: FnOnce() -> Result<(), SkStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SkStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside squeezekit".into());
            SkStatus::Panic
        }
    }
}

fn fail(err: Error) -> SkStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> SkStatus {
    set_error(format!("{what} is null"));
    SkStatus::NullPointer
}

fn lattice_from(v: Result<InteractionMatrix, Error>, out: *mut *mut SkLattice) -> Result<(), SkStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    let v = v.map_err(fail)?;
    let ising = IsingSpectrum::new(&v).map_err(fail)?;
    // SAFETY: `out` checked non-null; the caller owns the returned handle.
    unsafe { *out = Box::into_raw(Box::new(SkLattice { v, ising })) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: caller guarantees `len` writable bytes at `buf`.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// `rows × cols` square lattice with unit spacing.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_lattice_square(
    rows: usize,
    cols: usize,
    r_c_over_a: f64,
    v0: f64,
    out: *mut *mut SkLattice,
) -> SkStatus {
    guard(|| lattice_from(build_square(rows, cols, 1.0).and_then(|g| interaction_matrix(&g, r_c_over_a, v0)), out))
}

/// Open chain of `n` sites with unit spacing.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_lattice_chain(n: usize, r_c_over_a: f64, v0: f64, out: *mut *mut SkLattice) -> SkStatus {
    guard(|| lattice_from(build_chain(n, 1.0).and_then(|g| interaction_matrix(&g, r_c_over_a, v0)), out))
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `lattice` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_lattice_n_atoms(lattice: *const SkLattice) -> usize {
    // SAFETY: caller guarantees a live handle or null.
    unsafe { lattice.as_ref() }.map_or(0, |l| l.v.n())
}

/// Coupling `V_ij`; NaN for a null handle or out-of-range indices.
///
/// # Safety
/// `lattice` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sk_lattice_coupling(lattice: *const SkLattice, i: usize, j: usize) -> f64 {
    // SAFETY: caller guarantees a live handle or null.
    match unsafe { lattice.as_ref() } {
        Some(l) if i < l.v.n() && j < l.v.n() => l.v.get(i, j),
        _ => f64::NAN,
    }
}

/// # Safety
/// `lattice` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sk_lattice_free(lattice: *mut SkLattice) {
    if !lattice.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(lattice) });
    }
}

/// `|↑_x⟩^⊗n`.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_state_coherent_x(n: usize, out: *mut *mut SkState) -> SkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = StateVector::coherent_x(n).map_err(fail)?;
        // SAFETY: `out` checked non-null.
        unsafe { *out = Box::into_raw(Box::new(SkState { s })) };
        Ok(())
    })
}

/// Apply the layered circuit with `len = 3n` parameters `(τ, ϑ, τ′)` per layer.
///
/// # Safety
/// Handles must be live; `params` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sk_state_apply_circuit(
    state: *mut SkState,
    lattice: *const SkLattice,
    params: *const f64,
    len: usize,
) -> SkStatus {
    guard(|| {
        // SAFETY: caller guarantees live handles or null.
        let (Some(st), Some(lat)) = (unsafe { state.as_mut() }, unsafe { lattice.as_ref() }) else {
            return Err(null("state or lattice"));
        };
        if params.is_null() && len > 0 {
            return Err(null("params"));
        }
        let values = if len == 0 {
            Vec::new()
        } else {
            // SAFETY: non-null and `len` doubles per the contract.
            unsafe { std::slice::from_raw_parts(params, len) }.to_vec()
        };
        let p = ParamVector::new(values).map_err(fail)?;
        st.s.apply_circuit(&lat.ising, &p).map_err(fail)
    })
}

/// Rotation-invariant squeezing parameter `ξ²`.
///
/// # Safety
/// `state` must be live; `out` valid for one double.
#[no_mangle]
pub unsafe extern "C" fn sk_state_xi2(state: *const SkState, out: *mut f64) -> SkStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let Some(st) = (unsafe { state.as_ref() }) else {
            return Err(null("state"));
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let x = st.s.xi2_exact().map_err(fail)?;
        // SAFETY: checked non-null.
        unsafe { *out = x };
        Ok(())
    })
}

/// `⟨J_x⟩, ⟨J_y⟩, ⟨J_z⟩` into `out[0..3]`.
///
/// # Safety
/// `state` must be live; `out` valid for three doubles.
#[no_mangle]
pub unsafe extern "C" fn sk_state_mean_spin(state: *const SkState, out: *mut f64) -> SkStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let Some(st) = (unsafe { state.as_ref() }) else {
            return Err(null("state"));
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let m = st.s.collective_expectations();
        // SAFETY: caller guarantees three writable doubles.
        unsafe { ptr::copy_nonoverlapping(m.mean.as_ptr(), out, 3) };
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sk_state_free(state: *mut SkState) {
    if !state.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Optimal one-axis-twisting `ξ²` for `n` atoms.
///
/// # Safety
/// `out` must be null or valid for one double.
#[no_mangle]
pub unsafe extern "C" fn sk_oat_optimal_xi2(n: usize, out: *mut f64) -> SkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = oat_optimal_xi2(n).map_err(fail)?;
        // SAFETY: checked non-null.
        unsafe { *out = r.xi2 };
        Ok(())
    })
}

/// `ξ²` of the analytic trial state for even `n`.
///
/// # Safety
/// `out` must be null or valid for one double.
#[no_mangle]
pub unsafe extern "C" fn sk_trial_state_xi2(n: usize, out: *mut f64) -> SkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = trial_state(n).and_then(|s| s.xi2()).map_err(fail)?;
        // SAFETY: checked non-null.
        unsafe { *out = x };
        Ok(())
    })
}

/// Status name as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sk_status_name(status: SkStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SkStatus::Ok => c"ok",
        SkStatus::NullPointer => c"null pointer",
        SkStatus::InvalidArgument => c"invalid argument",
        SkStatus::Capacity => c"capacity exceeded",
        SkStatus::Numerical => c"numerical instability",
        SkStatus::DegenerateBlochVector => c"degenerate Bloch vector",
        SkStatus::Panic => c"panic",
        SkStatus::Other => c"other error",
    };
    s.as_ptr()
}
