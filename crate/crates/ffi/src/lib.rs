//! C ABI for the boost-converter analysis library.
//!
//! Conventions: fallible calls return an [`FbStatus`] code and write their
//! result through out-pointers; heap objects are returned as opaque handles
//! with paired `_free` functions; nothing is thrown across the boundary.
//! The generated header lives in `include/filippov_boost.h`.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use filippov_boost::bifurcation::{
    find_limit_cycle, homoclinic_k_auto, hopf_report, region_label, Criticality,
};
use filippov_boost::error::Error;
use filippov_boost::filippov::SigmaPoint;
use filippov_boost::integrator::{simulate, Mode, SimConfig, TerminalEvent};
use filippov_boost::model::{Params, State};
use filippov_boost::singularities::{
    pseudo_equilibrium, stability_quantities, two_fold_point, EquilibriumKind, SigmaRegion,
    TwoFoldKind,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A parameter lies outside its admissible range.
    InvalidParameter = 2,
    /// The requested quantity is undefined at this parameter point.
    Degenerate = 3,
    /// The searched object (cycle, connection, sample) does not exist.
    NotFound = 4,
    /// The computation failed numerically.
    Numeric = 5,
    /// An index was out of range.
    OutOfRange = 6,
}

fn status_of(e: &Error) -> FbStatus {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidConfig(_) => FbStatus::InvalidParameter,
        Error::Degenerate(_) | Error::SlidingFieldUndefined { .. } | Error::InvalidLieOrder(_) => {
            FbStatus::Degenerate
        }
        Error::CycleNotFound(_) | Error::NoBracket { .. } => FbStatus::NotFound,
        _ => FbStatus::Numeric,
    }
}

/// Runs a closure, converting panics into a numeric-failure status.
fn guard<F: FnOnce() -> FbStatus + UnwindSafe>(f: F) -> FbStatus {
    catch_unwind(f).unwrap_or(FbStatus::Numeric)
}

/// Static description of a status code. Never free the returned pointer.
#[no_mangle]
pub extern "C" fn fb_status_message(status: FbStatus) -> *const c_char {
    let s: &'static CStr = match status {
        FbStatus::Ok => c"ok",
        FbStatus::NullArgument => c"null pointer argument",
        FbStatus::InvalidParameter => c"parameter outside its admissible range",
        FbStatus::Degenerate => c"quantity undefined at this parameter point",
        FbStatus::NotFound => c"requested object not found",
        FbStatus::Numeric => c"numeric failure",
        FbStatus::OutOfRange => c"index out of range",
    };
    s.as_ptr()
}

/// Library version as a static NUL-terminated string. Never free it.
#[no_mangle]
pub extern "C" fn fb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque validated parameter set.
pub struct FbParams {
    inner: Params,
}

/// Creates a parameter handle after range validation. On success writes a
/// heap pointer into `out`; release it with [`fb_params_free`].
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fb_params_new(
    a: f64,
    k: f64,
    omega: f64,
    y_r: f64,
    out: *mut *mut FbParams,
) -> FbStatus {
    if out.is_null() {
        return FbStatus::NullArgument;
    }
    match Params::new(a, k, omega, y_r) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(FbParams { inner }));
            FbStatus::Ok
        }
        Err(e) => {
            *out = ptr::null_mut();
            status_of(&e)
        }
    }
}

/// Releases a handle from [`fb_params_new`]. Null is a no-op.
///
/// # Safety
/// `p` must be null or a pointer previously returned by `fb_params_new` that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn fb_params_free(p: *mut FbParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Determinant, trace and discriminant of the sliding-flow Jacobian at the
/// operating point, with the organizing gains and loads. Quantities whose
/// existence condition fails are NaN with the matching flag cleared.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbStabilityQuantities {
    pub det: f64,
    pub tr: f64,
    pub delta: f64,
    pub k_h: f64,
    pub k_minus: f64,
    pub k_plus: f64,
    pub a_minus: f64,
    pub a_plus: f64,
    /// k_minus/k_plus exist (requires a <= omega / 2).
    pub has_node_focus_gains: bool,
    /// a_minus/a_plus exist (requires y_r >= 2 sqrt(2) / omega).
    pub has_bt_loads: bool,
}

/// # Safety
/// `p` must be a live handle from `fb_params_new`; `out` must point to
/// writable memory for one `FbStabilityQuantities`.
#[no_mangle]
pub unsafe extern "C" fn fb_stability_quantities(
    p: *const FbParams,
    out: *mut FbStabilityQuantities,
) -> FbStatus {
    if p.is_null() || out.is_null() {
        return FbStatus::NullArgument;
    }
    let params = &(*p).inner;
    let sq = stability_quantities(params);
    *out = FbStabilityQuantities {
        det: sq.det,
        tr: sq.tr,
        delta: sq.delta,
        k_h: sq.k_h,
        k_minus: sq.k_minus.unwrap_or(f64::NAN),
        k_plus: sq.k_plus.unwrap_or(f64::NAN),
        a_minus: sq.a_minus.unwrap_or(f64::NAN),
        a_plus: sq.a_plus.unwrap_or(f64::NAN),
        has_node_focus_gains: sq.k_minus.is_some(),
        has_bt_loads: sq.a_minus.is_some(),
    };
    FbStatus::Ok
}

/// Position of the operating point relative to the sliding region.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbSigmaRegion {
    Sliding = 0,
    Escaping = 1,
    OnTangency = 2,
}

/// Local type of the operating point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbEquilibriumKind {
    PseudoSaddle = 0,
    StablePseudoNode = 1,
    UnstablePseudoNode = 2,
    StablePseudoFocus = 3,
    UnstablePseudoFocus = 4,
    Boundary = 5,
}

/// The operating point with its region and classification.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbPseudoEquilibrium {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub region: FbSigmaRegion,
    pub kind: FbEquilibriumKind,
}

/// # Safety
/// `p` must be a live handle; `out` must point to writable memory for one
/// `FbPseudoEquilibrium`.
#[no_mangle]
pub unsafe extern "C" fn fb_pseudo_equilibrium(
    p: *const FbParams,
    out: *mut FbPseudoEquilibrium,
) -> FbStatus {
    if p.is_null() || out.is_null() {
        return FbStatus::NullArgument;
    }
    let q = pseudo_equilibrium(&(*p).inner);
    *out = FbPseudoEquilibrium {
        x: q.location.x,
        y: q.location.y,
        z: q.location.z,
        region: match q.region {
            SigmaRegion::Sliding => FbSigmaRegion::Sliding,
            SigmaRegion::Escaping => FbSigmaRegion::Escaping,
            SigmaRegion::OnTangency => FbSigmaRegion::OnTangency,
        },
        kind: match q.kind {
            EquilibriumKind::PseudoSaddle => FbEquilibriumKind::PseudoSaddle,
            EquilibriumKind::StablePseudoNode => FbEquilibriumKind::StablePseudoNode,
            EquilibriumKind::UnstablePseudoNode => FbEquilibriumKind::UnstablePseudoNode,
            EquilibriumKind::StablePseudoFocus => FbEquilibriumKind::StablePseudoFocus,
            EquilibriumKind::UnstablePseudoFocus => FbEquilibriumKind::UnstablePseudoFocus,
            EquilibriumKind::Boundary => FbEquilibriumKind::Boundary,
        },
    };
    FbStatus::Ok
}

/// Double-tangency classification (lower-field fold first, upper second).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbTwoFoldKind {
    VisibleVisible = 0,
    VisibleInvisible = 1,
    InvisibleInvisible = 2,
    InvisibleVisible = 3,
    VisibleFoldCusp = 4,
    InvisibleFoldCusp = 5,
}

/// The double tangency point of the two tangency lines.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbTwoFold {
    pub x: f64,
    pub y: f64,
    pub kind: FbTwoFoldKind,
    /// x > 0, the physically meaningful half-plane.
    pub physical: bool,
}

/// # Safety
/// `p` must be a live handle; `out` must point to writable memory for one
/// `FbTwoFold`.
#[no_mangle]
pub unsafe extern "C" fn fb_two_fold_point(
    p: *const FbParams,
    out: *mut FbTwoFold,
) -> FbStatus {
    if p.is_null() || out.is_null() {
        return FbStatus::NullArgument;
    }
    match two_fold_point(&(*p).inner) {
        Ok(tf) => {
            *out = FbTwoFold {
                x: tf.x,
                y: tf.y,
                kind: match tf.kind {
                    TwoFoldKind::VisibleVisible => FbTwoFoldKind::VisibleVisible,
                    TwoFoldKind::VisibleInvisible => FbTwoFoldKind::VisibleInvisible,
                    TwoFoldKind::InvisibleInvisible => FbTwoFoldKind::InvisibleInvisible,
                    TwoFoldKind::InvisibleVisible => FbTwoFoldKind::InvisibleVisible,
                    TwoFoldKind::VisibleFoldCusp => FbTwoFoldKind::VisibleFoldCusp,
                    TwoFoldKind::InvisibleFoldCusp => FbTwoFoldKind::InvisibleFoldCusp,
                },
                physical: tf.physical,
            };
            FbStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Hopf threshold data at a given load.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbHopf {
    pub k_h: f64,
    pub det_at_kh: f64,
    pub transversality: f64,
    pub sigma: f64,
    /// True when sigma > 0 (the bifurcating cycle is unstable).
    pub subcritical: bool,
}

/// # Safety
/// `out` must point to writable memory for one `FbHopf`.
#[no_mangle]
pub unsafe extern "C" fn fb_hopf_report(
    a: f64,
    omega: f64,
    y_r: f64,
    out: *mut FbHopf,
) -> FbStatus {
    if out.is_null() {
        return FbStatus::NullArgument;
    }
    match hopf_report(a, omega, y_r) {
        Ok(r) => {
            *out = FbHopf {
                k_h: r.k_h,
                det_at_kh: r.det_at_kh,
                transversality: r.transversality,
                sigma: r.sigma,
                subcritical: r.criticality == Criticality::Subcritical,
            };
            FbStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Locates the gain at which the unstable cycle collides with the two-fold
/// saddle, with an automatically scanned bracket.
///
/// # Safety
/// `out` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn fb_homoclinic_gain(
    a: f64,
    omega: f64,
    y_r: f64,
    tol: f64,
    out: *mut f64,
) -> FbStatus {
    if out.is_null() {
        return FbStatus::NullArgument;
    }
    let out_addr = out as usize;
    guard(move || {
        let out = out_addr as *mut f64;
        match homoclinic_k_auto(a, omega, y_r, tol) {
            Ok(k) => {
                unsafe { *out = k };
                FbStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// The unstable limit cycle of the sliding flow.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbLimitCycle {
    pub k: f64,
    /// Section anchor abscissa on {y = y_r}.
    pub anchor_x: f64,
    pub period: f64,
    pub amplitude_x: f64,
    pub amplitude_y: f64,
}

/// Searches for the unstable cycle from a section guess x = `guess_x`.
///
/// # Safety
/// `p` must be a live handle; `out` must point to writable memory for one
/// `FbLimitCycle`.
#[no_mangle]
pub unsafe extern "C" fn fb_find_limit_cycle(
    p: *const FbParams,
    guess_x: f64,
    out: *mut FbLimitCycle,
) -> FbStatus {
    if p.is_null() || out.is_null() {
        return FbStatus::NullArgument;
    }
    let params = (*p).inner;
    let out_addr = out as usize;
    guard(move || {
        let out = out_addr as *mut FbLimitCycle;
        match find_limit_cycle(&params, &SigmaPoint::new(guess_x, params.y_r())) {
            Ok(c) => {
                unsafe {
                    *out = FbLimitCycle {
                        k: c.k,
                        anchor_x: c.anchor.x,
                        period: c.period,
                        amplitude_x: c.amplitude_x,
                        amplitude_y: c.amplitude_y,
                    };
                }
                FbStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Region label 1..6 of the parameter plane. Pass NaN for `k_homoclinic`
/// when the homoclinic gain at this load is unknown; the cycle region 5 is
/// then reported as 6.
///
/// # Safety
/// `p` must be a live handle; `out` must point to writable memory for one
/// byte.
#[no_mangle]
pub unsafe extern "C" fn fb_region_label(
    p: *const FbParams,
    k_homoclinic: f64,
    out: *mut u8,
) -> FbStatus {
    if p.is_null() || out.is_null() {
        return FbStatus::NullArgument;
    }
    let k_hc = if k_homoclinic.is_nan() {
        None
    } else {
        Some(k_homoclinic)
    };
    *out = region_label(&(*p).inner, k_hc);
    FbStatus::Ok
}

/// Why the simulation ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbTerminalEvent {
    HitSigma = 0,
    ExitSlidingAtSPlus = 1,
    ExitSlidingAtSMinus = 2,
    ReachedTmax = 3,
    ConvergedToEquilibrium = 4,
    ReachedDoubleTangency = 5,
}

/// One trajectory sample: time, state and the mode tag 'P', 'M' or 'S'.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub mode: u8,
}

/// Opaque simulated trajectory.
pub struct FbTrajectory {
    samples: Vec<FbSample>,
    terminal: FbTerminalEvent,
}

/// Runs the event-driven simulation from (x0, y0, z0) over `t_max` time
/// units with the default tolerances. On success writes a heap handle into
/// `out`; release it with [`fb_trajectory_free`].
///
/// # Safety
/// `p` must be a live handle; `out` must point to writable memory for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn fb_simulate(
    p: *const FbParams,
    x0: f64,
    y0: f64,
    z0: f64,
    t_max: f64,
    out: *mut *mut FbTrajectory,
) -> FbStatus {
    if p.is_null() || out.is_null() {
        return FbStatus::NullArgument;
    }
    let params = (*p).inner;
    let out_addr = out as usize;
    guard(move || {
        let out = out_addr as *mut *mut FbTrajectory;
        let cfg = SimConfig {
            t_max,
            ..SimConfig::default()
        };
        match simulate(&State::new(x0, y0, z0), &params, &cfg) {
            Ok(segments) => {
                let mut samples = Vec::new();
                for seg in &segments {
                    let mode = match seg.mode {
                        Mode::FlowPlus => b'P',
                        Mode::FlowMinus => b'M',
                        Mode::Sliding => b'S',
                    };
                    for (t, s) in &seg.samples {
                        samples.push(FbSample {
                            t: *t,
                            x: s.x,
                            y: s.y,
                            z: s.z,
                            mode,
                        });
                    }
                }
                let terminal = match segments.last().map(|s| s.terminal) {
                    Some(TerminalEvent::HitSigma) => FbTerminalEvent::HitSigma,
                    Some(TerminalEvent::ExitSlidingAtSPlus) => FbTerminalEvent::ExitSlidingAtSPlus,
                    Some(TerminalEvent::ExitSlidingAtSMinus) => {
                        FbTerminalEvent::ExitSlidingAtSMinus
                    }
                    Some(TerminalEvent::ConvergedToEquilibrium) => {
                        FbTerminalEvent::ConvergedToEquilibrium
                    }
                    Some(TerminalEvent::ReachedDoubleTangency) => {
                        FbTerminalEvent::ReachedDoubleTangency
                    }
                    _ => FbTerminalEvent::ReachedTmax,
                };
                unsafe {
                    *out = Box::into_raw(Box::new(FbTrajectory { samples, terminal }));
                }
                FbStatus::Ok
            }
            Err(e) => {
                unsafe { *out = ptr::null_mut() };
                status_of(&e)
            }
        }
    })
}

/// Number of samples in a trajectory handle (0 for null).
///
/// # Safety
/// `tr` must be null or a live handle from `fb_simulate`.
#[no_mangle]
pub unsafe extern "C" fn fb_trajectory_len(tr: *const FbTrajectory) -> usize {
    if tr.is_null() {
        0
    } else {
        (*tr).samples.len()
    }
}

/// Copies sample `index` into `out`.
///
/// # Safety
/// `tr` must be a live handle; `out` must point to writable memory for one
/// `FbSample`.
#[no_mangle]
pub unsafe extern "C" fn fb_trajectory_sample(
    tr: *const FbTrajectory,
    index: usize,
    out: *mut FbSample,
) -> FbStatus {
    if tr.is_null() || out.is_null() {
        return FbStatus::NullArgument;
    }
    match (*tr).samples.get(index) {
        Some(s) => {
            *out = *s;
            FbStatus::Ok
        }
        None => FbStatus::OutOfRange,
    }
}

/// Terminal event of the simulation represented by the handle.
///
/// # Safety
/// `tr` must be a live handle from `fb_simulate`.
#[no_mangle]
pub unsafe extern "C" fn fb_trajectory_terminal(tr: *const FbTrajectory) -> FbTerminalEvent {
    if tr.is_null() {
        return FbTerminalEvent::ReachedTmax;
    }
    (*tr).terminal
}

/// Releases a handle from [`fb_simulate`]. Null is a no-op.
///
/// # Safety
/// `tr` must be null or a live handle that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn fb_trajectory_free(tr: *mut FbTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}
