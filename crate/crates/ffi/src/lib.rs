//! C ABI for `scattergate`.
//!
//! Objects cross the boundary as opaque handles created by `*_from_json`
//! (or a computation) and released by the matching `*_free`. Every fallible
//! call returns an [`SgStatus`]; on failure the message is available from
//! [`sg_last_error`] on the same thread. Matrices are written row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use scattergate::algebra::{tau, Su11Element, Verdict};
use scattergate::direct1d::{solve_scattering, PotentialSpec};
use scattergate::dispersion::{build_scattering_data, reconstruct_transmission, GateTarget, ReflectionData};
use scattergate::fuchsian::{monodromy, FuchsianSystem, Loop};
use scattergate::glm::invert_reflection_data;
use scattergate::twolevel::{entanglement, scattering_matrix, DipoleParams, PulseSpec};
use scattergate::Error;

/// Result of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numeric = 3,
    Infeasible = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for SgComplex {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<SgComplex> for Complex64 {
    fn from(c: SgComplex) -> Self {
        Complex64::new(c.re, c.im)
    }
}

/// Line potential.
pub struct SgPotential(PotentialSpec);

/// Reflection data on the real momentum axis.
pub struct SgReflectionData(ReflectionData);

/// Two-level pulse.
pub struct SgPulse(PulseSpec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn guard(f: impl FnOnce() -> Res<()>) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SgStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            let status = match e {
                Error::Infeasible(_) => SgStatus::Infeasible,
                Error::Integration { .. } | Error::Singular(_) => SgStatus::Numeric,
                _ => SgStatus::InvalidInput,
            };
            set_error(e.to_string());
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Parse(format!("{what} is not valid UTF-8"))))
}

unsafe fn json_arg<T: serde::de::DeserializeOwned>(p: *const c_char, what: &'static str) -> Res<T> {
    let s = str_arg(p, what)?;
    serde_json::from_str(s).map_err(|e| Failure::Lib(Error::Parse(format!("{what}: {e}"))))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Res<&'a T> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Res<&'a mut T> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn write_matrix(m: &nalgebra::DMatrix<Complex64>, dst: *mut SgComplex) -> Res<()> {
    if dst.is_null() {
        return Err(Failure::Null("output matrix"));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            *dst.add(i * n + j) = m[(i, j)].into();
        }
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses a potential from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string; the output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_potential_from_json(json: *const c_char, out_pot: *mut *mut SgPotential) -> SgStatus {
    guard(|| {
        let dst = out(out_pot, "out")?;
        let p: PotentialSpec = json_arg(json, "json")?;
        *dst = Box::into_raw(Box::new(SgPotential(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sg_potential_free(p: *mut SgPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Monodromy data `a(k)`, `b(k)` of a potential.
///
/// # Safety
/// Pointers must be valid; `a` and `b` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_solve_scattering(pot: *const SgPotential, k: f64, a: *mut SgComplex, b: *mut SgComplex) -> SgStatus {
    guard(|| {
        let p = handle(pot, "potential")?;
        let (a, b) = (out(a, "a")?, out(b, "b")?);
        let c = solve_scattering(&p.0, k)?;
        *a = c.m.a().into();
        *b = c.m.b().into();
        Ok(())
    })
}

/// Parses reflection data (`k`, `re_R`, `im_R`, `bound_states`).
///
/// # Safety
/// `json` must be a NUL-terminated string; the output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_reflection_from_json(json: *const c_char, out_data: *mut *mut SgReflectionData) -> SgStatus {
    guard(|| {
        let dst = out(out_data, "out")?;
        let d: ReflectionData = json_arg(json, "json")?;
        *dst = Box::into_raw(Box::new(SgReflectionData(d)));
        Ok(())
    })
}

/// Reflection data realizing a JSON list of `{k, t, r}` gate targets.
///
/// # Safety
/// `targets_json` must be a NUL-terminated string; the output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_build_scattering_data(targets_json: *const c_char, out_data: *mut *mut SgReflectionData) -> SgStatus {
    guard(|| {
        let dst = out(out_data, "out")?;
        let targets: Vec<GateTarget> = json_arg(targets_json, "targets_json")?;
        *dst = Box::into_raw(Box::new(SgReflectionData(build_scattering_data(&targets)?)));
        Ok(())
    })
}

/// # Safety
/// `d` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sg_reflection_free(d: *mut SgReflectionData) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Transmission amplitude rebuilt from the reflection data.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sg_reconstruct_transmission(data: *const SgReflectionData, k: f64, t: *mut SgComplex) -> SgStatus {
    guard(|| {
        let d = handle(data, "data")?;
        let t = out(t, "t")?;
        *t = reconstruct_transmission(&d.0, k)?.into();
        Ok(())
    })
}

/// Potential recovered from reflection data on `[−x_max, x_max]`; a
/// non-positive `x_max` picks the window from the kernel decay.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sg_invert(data: *const SgReflectionData, x_max: f64, step: f64, out_pot: *mut *mut SgPotential) -> SgStatus {
    guard(|| {
        let d = handle(data, "data")?;
        let dst = out(out_pot, "out")?;
        let rec = invert_reflection_data(&d.0, (x_max > 0.0).then_some(x_max), step)?;
        *dst = Box::into_raw(Box::new(SgPotential(rec.to_potential()?)));
        Ok(())
    })
}

/// Scattering matrix `τ(a, b)` (4 entries, row-major).
///
/// # Safety
/// `s` must have room for 4 values.
#[no_mangle]
pub unsafe extern "C" fn sg_tau(a: SgComplex, b: SgComplex, s: *mut SgComplex) -> SgStatus {
    guard(|| {
        let m = Su11Element::new(a.into(), b.into())?;
        write_matrix(tau(&m).matrix(), s)
    })
}

/// Parses a pulse (`envelope`, `detuning`, optional `window`).
///
/// # Safety
/// `json` must be a NUL-terminated string; the output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_pulse_from_json(json: *const c_char, out_pulse: *mut *mut SgPulse) -> SgStatus {
    guard(|| {
        let dst = out(out_pulse, "out")?;
        let p: PulseSpec = json_arg(json, "json")?;
        *dst = Box::into_raw(Box::new(SgPulse(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sg_pulse_free(p: *mut SgPulse) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Two-level scattering matrix at spectral parameter `zeta` (4 entries).
///
/// # Safety
/// Pointers must be valid; `s` must have room for 4 values.
#[no_mangle]
pub unsafe extern "C" fn sg_scattering_matrix(pulse: *const SgPulse, zeta: f64, s: *mut SgComplex) -> SgStatus {
    guard(|| {
        let p = handle(pulse, "pulse")?;
        write_matrix(scattering_matrix(&p.0, zeta)?.matrix(), s)
    })
}

/// Operator-Schmidt values of the two-dipole evolution. `params_json` may be
/// null for the default parameters. `verdict` receives 0 (product),
/// 1 (indeterminate) or 2 (entangling).
///
/// # Safety
/// `schmidt` must have room for 4 values; `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_entanglement(params_json: *const c_char, schmidt: *mut f64, verdict: *mut i32) -> SgStatus {
    guard(|| {
        let p: DipoleParams = if params_json.is_null() { DipoleParams::default() } else { json_arg(params_json, "params_json")? };
        p.validate()?;
        if schmidt.is_null() {
            return Err(Failure::Null("schmidt"));
        }
        let v = out(verdict, "verdict")?;
        let dec = entanglement(&p)?;
        for (i, s) in dec.singular_values.iter().enumerate() {
            *schmidt.add(i) = *s;
        }
        *v = match dec.verdict() {
            Verdict::Product => 0,
            Verdict::Indeterminate => 1,
            Verdict::Entangling => 2,
        };
        Ok(())
    })
}

/// Monodromy of a Fuchsian system (`poles`, `residues`) around a loop, both
/// given as JSON (4 entries, row-major).
///
/// # Safety
/// Strings must be NUL-terminated; `m` must have room for 4 values.
#[no_mangle]
pub unsafe extern "C" fn sg_monodromy(system_json: *const c_char, loop_json: *const c_char, m: *mut SgComplex) -> SgStatus {
    guard(|| {
        let sys: FuchsianSystem = json_arg(system_json, "system_json")?;
        let lp: Loop = json_arg(loop_json, "loop_json")?;
        write_matrix(monodromy(&sys, &lp)?.matrix(), m)
    })
}
