//! C interface to `tbfid`.
//!
//! Every call returns a `TbfidStatus`; results go through out-pointers. After
//! a non-zero status, `tbfid_last_error` returns a message that stays valid
//! until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tbfid::branching::branching_fidelity;
use tbfid::excitation::{excitation_report, PulseSpec};
use tbfid::kernel::{kernel_fidelity, kernel_phonon};
use tbfid::model::{derive_detection_probs, ParamFile};
use tbfid::sweep::combined_fidelity;
use tbfid::{BranchingParams, CollectionParams, EmitterParams, Error, TargetKind, TargetState};

/// Status codes returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbfidStatus {
    Ok = 0,
    Validation = 1,
    Numerical = 2,
    Postselection = 3,
    Capacity = 4,
    Mapping = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbfidTarget {
    Ghz = 0,
    Cluster = 1,
}

impl From<TbfidTarget> for TargetKind {
    fn from(t: TbfidTarget) -> Self {
        match t {
            TbfidTarget::Ghz => TargetKind::Ghz,
            TbfidTarget::Cluster => TargetKind::Cluster,
        }
    }
}

/// Unconditional fidelity, success probability and their ratio.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TbfidFidelity {
    pub unconditional: f64,
    pub success: f64,
    pub conditional: f64,
}

/// Combined fidelity and its channel factors.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TbfidCombined {
    pub phonon: f64,
    pub excitation: f64,
    pub branching: f64,
    pub product: f64,
}

/// Opaque parameter set built from a JSON parameter object.
pub struct TbfidParams {
    file: ParamFile,
    branching: BranchingParams,
    collection: CollectionParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TbfidStatus {
    match e {
        Error::Validation { .. } => TbfidStatus::Validation,
        Error::Numerical { .. } => TbfidStatus::Numerical,
        Error::Postselection(_) => TbfidStatus::Postselection,
        Error::Capacity { .. } => TbfidStatus::Capacity,
        Error::Mapping(_) => TbfidStatus::Mapping,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TbfidStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TbfidStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            TbfidStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            TbfidStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn params<'a>(p: *const TbfidParams) -> Result<&'a TbfidParams, Fail> {
    p.as_ref().ok_or(Fail::Null("params"))
}

fn emitter(p: &TbfidParams) -> Result<EmitterParams, Fail> {
    Ok(p.file.emitter()?)
}

/// Message for the last failing call on this thread, or null.
#[no_mangle]
pub extern "C" fn tbfid_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a JSON parameter object. Free the result with `tbfid_params_free`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out_params` writable.
#[no_mangle]
pub unsafe extern "C" fn tbfid_params_from_json(
    json: *const c_char,
    out_params: *mut *mut TbfidParams,
) -> TbfidStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        *slot = ptr::null_mut();
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::validation("json", e.to_string()))?;
        let file = ParamFile::from_json(text)?;
        let branching = file.branching()?;
        let collection = file.collection()?;
        *slot = Box::into_raw(Box::new(TbfidParams {
            file,
            branching,
            collection,
        }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from `tbfid_params_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tbfid_params_free(p: *mut TbfidParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Exact pure-dephasing fidelity for rates in 1/ns.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tbfid_phonon_fidelity(
    gamma: f64,
    gamma_d: f64,
    target: TbfidTarget,
    n: usize,
    out_value: *mut f64,
) -> TbfidStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        let t = TargetState::new(target.into(), n)?;
        *o = kernel_fidelity(&kernel_phonon(gamma, gamma_d)?, t);
        Ok(())
    })
}

/// Exact branching fidelity of the parameter set.
///
/// # Safety
/// `p` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn tbfid_branching_fidelity(
    p: *const TbfidParams,
    target: TbfidTarget,
    n: usize,
    out_value: *mut TbfidFidelity,
) -> TbfidStatus {
    guard(|| {
        let p = params(p)?;
        let o = out(out_value, "out_value")?;
        let probs = derive_detection_probs(&p.branching, &p.collection);
        let r = branching_fidelity(&probs, TargetState::new(target.into(), n)?)?.exact;
        *o = TbfidFidelity {
            unconditional: r.unconditional,
            success: r.success,
            conditional: r.conditional,
        };
        Ok(())
    })
}

/// Conditional excitation fidelity for a Gaussian pulse of width `t_fwhm` ns.
/// `grid` is the number of solver steps; 0 selects the default.
///
/// # Safety
/// `p` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn tbfid_excitation_fidelity(
    p: *const TbfidParams,
    t_fwhm: f64,
    target: TbfidTarget,
    n: usize,
    grid: usize,
    out_value: *mut f64,
) -> TbfidStatus {
    guard(|| {
        let p = params(p)?;
        let o = out(out_value, "out_value")?;
        TargetState::new(target.into(), n)?;
        let r = excitation_report(
            &PulseSpec::gaussian(t_fwhm)?,
            &emitter(p)?,
            &p.collection,
            n,
            grid_or_default(grid),
        )?;
        *o = match target {
            TbfidTarget::Ghz => r.ghz,
            TbfidTarget::Cluster => r.cluster,
        };
        Ok(())
    })
}

/// Product of phonon, excitation and branching fidelities.
///
/// # Safety
/// `p` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn tbfid_combined_fidelity(
    p: *const TbfidParams,
    t_fwhm: f64,
    target: TbfidTarget,
    n: usize,
    grid: usize,
    out_value: *mut TbfidCombined,
) -> TbfidStatus {
    guard(|| {
        let p = params(p)?;
        let o = out(out_value, "out_value")?;
        let r = combined_fidelity(
            n,
            &emitter(p)?,
            &p.branching,
            &p.collection,
            &PulseSpec::gaussian(t_fwhm)?,
            target.into(),
            grid_or_default(grid),
        )?;
        *o = TbfidCombined {
            phonon: r.phonon,
            excitation: r.excitation,
            branching: r.branching,
            product: r.product,
        };
        Ok(())
    })
}

fn grid_or_default(g: usize) -> usize {
    if g == 0 {
        tbfid::excitation::DEFAULT_GRID
    } else {
        g
    }
}
