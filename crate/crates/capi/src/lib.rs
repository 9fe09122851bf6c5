//! C ABI for the r3eval toolkit.
//!
//! Conventions:
//!
//! * Every fallible function returns an [`R3Status`]; results go to
//!   `out` pointers that are written only on `R3_STATUS_OK`.
//! * On failure, a UTF-8 message is available from
//!   [`r3_last_error_message`] until the next failing call on the same
//!   thread.
//! * [`R3Report`] is an opaque handle; release it with
//!   [`r3_report_free`]. Strings returned through `char**` are owned by
//!   the caller and released with [`r3_string_free`].
//! * Panics never unwind across the boundary; they surface as
//!   `R3_STATUS_INTERNAL_ERROR`.
//!
//! The generated header lives at `include/r3eval.h`.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use r3eval::geometry::{self, Vec2};
use r3eval::ingest::{self, IngestError};
use r3eval::matching;
use r3eval::metrics::{self, EvalError, EvalThresholds};
use r3eval::risk;

/// Result code of every fallible C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R3Status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    InvalidUtf8 = 5,
    InternalError = 6,
}

/// Collision-risk rank; numeric values match the metric indices.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R3RiskRank {
    Imminent = 1,
    Potential = 2,
    Other = 3,
}

impl From<risk::RiskRank> for R3RiskRank {
    fn from(rank: risk::RiskRank) -> Self {
        match rank {
            risk::RiskRank::Imminent => R3RiskRank::Imminent,
            risk::RiskRank::Potential => R3RiskRank::Potential,
            risk::RiskRank::Other => R3RiskRank::Other,
        }
    }
}

/// 2D vector (meters or m/s).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct R3Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<R3Vec2> for Vec2 {
    fn from(v: R3Vec2) -> Self {
        Vec2::new(v.x, v.y)
    }
}

/// Ground-plane pose, kinematics and footprint of one actor.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct R3WorldState {
    pub position: R3Vec2,
    pub velocity: R3Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl From<R3WorldState> for risk::WorldState {
    fn from(s: R3WorldState) -> Self {
        risk::WorldState::new(
            s.position.into(),
            s.velocity.into(),
            s.heading,
            s.length,
            s.width,
        )
    }
}

/// Risk-model parameters; obtain defaults from
/// [`r3_risk_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct R3RiskParams {
    pub a_max: f64,
    pub l_comp: f64,
    pub dt: f64,
}

impl From<R3RiskParams> for risk::RiskParams {
    fn from(p: R3RiskParams) -> Self {
        risk::RiskParams {
            a_max: p.a_max,
            l_comp: p.l_comp,
            dt: p.dt,
        }
    }
}

/// Oriented ground-plane rectangle.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct R3OrientedBox {
    pub center: R3Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl From<R3OrientedBox> for geometry::OrientedBox {
    fn from(b: R3OrientedBox) -> Self {
        geometry::OrientedBox::new(b.center.into(), b.heading, b.length, b.width)
    }
}

/// Axis-aligned image-plane rectangle in pixels.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct R3ImageBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<R3ImageBox> for matching::ImageBox {
    fn from(b: R3ImageBox) -> Self {
        matching::ImageBox::new(b.x_min, b.y_min, b.x_max, b.y_max)
    }
}

/// Options for [`r3_evaluate_files`]. A null `sweep` selects the
/// default 0.5..0.95 sweep in 0.05 steps.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct R3EvalOptions {
    pub params: R3RiskParams,
    pub tau_iog: f64,
    pub tau_iou: f64,
    pub sweep: *const f64,
    pub sweep_len: usize,
    /// Keep only Pedestrian, Cycle, Vehicle and Road Sign ground truth.
    pub use_class_preset: bool,
}

/// Opaque evaluation report handle.
pub struct R3Report {
    inner: metrics::EvalReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: R3Status, message: impl Into<String>) -> R3Status {
    set_last_error(message.into());
    status
}

fn ingest_status(e: &IngestError) -> R3Status {
    match e {
        IngestError::Io { .. } => R3Status::IoError,
        _ => R3Status::ParseError,
    }
}

fn eval_status(e: &EvalError) -> R3Status {
    match e {
        EvalError::Ingest(inner) => ingest_status(inner),
        EvalError::DuplicateFrame { .. } => R3Status::ParseError,
        _ => R3Status::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> R3Status) -> R3Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(R3Status::InternalError, "internal panic"),
    }
}

/// # Safety
/// `ptr` must be null or point to a valid NUL-terminated string.
unsafe fn read_path(ptr: *const c_char) -> Result<String, R3Status> {
    if ptr.is_null() {
        set_last_error("null path".into());
        return Err(R3Status::NullPointer);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s.to_string()),
        Err(_) => {
            set_last_error("path is not valid UTF-8".into());
            Err(R3Status::InvalidUtf8)
        }
    }
}

/// Message of the last failing call on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn r3_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Default risk parameters: a_max 7.5 m/s^2, l_comp 0.1 s, dt 0.1 s.
#[no_mangle]
pub extern "C" fn r3_risk_params_default() -> R3RiskParams {
    let p = risk::RiskParams::default();
    R3RiskParams {
        a_max: p.a_max,
        l_comp: p.l_comp,
        dt: p.dt,
    }
}

/// Default evaluation options: default risk params, IoG/IoU thresholds
/// 0.8, default sweep, no class filter.
#[no_mangle]
pub extern "C" fn r3_evaluate_options_default() -> R3EvalOptions {
    R3EvalOptions {
        params: r3_risk_params_default(),
        tau_iog: 0.8,
        tau_iou: 0.8,
        sweep: std::ptr::null(),
        sweep_len: 0,
        use_class_preset: false,
    }
}

/// Time to stop of the ego vehicle for the given velocity.
#[no_mangle]
pub extern "C" fn r3_time_to_stop(
    velocity: R3Vec2,
    params: R3RiskParams,
    out: *mut f64,
) -> R3Status {
    guarded(|| {
        if out.is_null() {
            return fail(R3Status::NullPointer, "null out pointer");
        }
        let p: risk::RiskParams = params.into();
        if let Err(e) = p.validate() {
            return fail(R3Status::InvalidArgument, e.to_string());
        }
        unsafe { *out = risk::time_to_stop(velocity.into(), &p) };
        R3Status::Ok
    })
}

/// Worst-case contact distance between two rectangular footprints.
#[no_mangle]
pub extern "C" fn r3_d_crit(
    length_a: f64,
    width_a: f64,
    length_b: f64,
    width_b: f64,
    out: *mut f64,
) -> R3Status {
    guarded(|| {
        if out.is_null() {
            return fail(R3Status::NullPointer, "null out pointer");
        }
        let a = geometry::OrientedBox::new(Vec2::ZERO, 0.0, length_a, width_a);
        let b = geometry::OrientedBox::new(Vec2::ZERO, 0.0, length_b, width_b);
        match geometry::d_crit(&a, &b) {
            Ok(d) => {
                unsafe { *out = d };
                R3Status::Ok
            }
            Err(e) => fail(R3Status::InvalidArgument, e.to_string()),
        }
    })
}

/// Separating-axis overlap test; touching counts as overlap.
#[no_mangle]
pub extern "C" fn r3_obb_overlap(a: R3OrientedBox, b: R3OrientedBox, out: *mut bool) -> R3Status {
    guarded(|| {
        if out.is_null() {
            return fail(R3Status::NullPointer, "null out pointer");
        }
        match geometry::obb_overlap(&a.into(), &b.into()) {
            Ok(v) => {
                unsafe { *out = v };
                R3Status::Ok
            }
            Err(e) => fail(R3Status::InvalidArgument, e.to_string()),
        }
    })
}

/// Reachable set at time `t` under acceleration bound `a_max`.
#[no_mangle]
pub extern "C" fn r3_existence_region(
    x0: R3Vec2,
    v0: R3Vec2,
    t: f64,
    a_max: f64,
    out_center: *mut R3Vec2,
    out_radius: *mut f64,
) -> R3Status {
    guarded(|| {
        if out_center.is_null() || out_radius.is_null() {
            return fail(R3Status::NullPointer, "null out pointer");
        }
        match geometry::existence_region(x0.into(), v0.into(), t, a_max) {
            Ok(circle) => {
                unsafe {
                    *out_center = R3Vec2 {
                        x: circle.center.x,
                        y: circle.center.y,
                    };
                    *out_radius = circle.radius;
                }
                R3Status::Ok
            }
            Err(e) => fail(R3Status::InvalidArgument, e.to_string()),
        }
    })
}

/// Collision-risk rank of one object relative to the ego vehicle.
#[no_mangle]
pub extern "C" fn r3_rank_object(
    ego: R3WorldState,
    object: R3WorldState,
    params: R3RiskParams,
    out: *mut R3RiskRank,
) -> R3Status {
    guarded(|| {
        if out.is_null() {
            return fail(R3Status::NullPointer, "null out pointer");
        }
        match risk::rank_object(&ego.into(), &object.into(), &params.into()) {
            Ok(rank) => {
                unsafe { *out = rank.into() };
                R3Status::Ok
            }
            Err(e) => fail(R3Status::InvalidArgument, e.to_string()),
        }
    })
}

/// Intersection over ground truth (asymmetric).
#[no_mangle]
pub extern "C" fn r3_iog(gt: R3ImageBox, pred: R3ImageBox, out: *mut f64) -> R3Status {
    guarded(|| {
        if out.is_null() {
            return fail(R3Status::NullPointer, "null out pointer");
        }
        match matching::iog(&gt.into(), &pred.into()) {
            Ok(v) => {
                unsafe { *out = v };
                R3Status::Ok
            }
            Err(e) => fail(R3Status::InvalidArgument, e.to_string()),
        }
    })
}

/// Intersection over union (symmetric).
#[no_mangle]
pub extern "C" fn r3_iou(a: R3ImageBox, b: R3ImageBox, out: *mut f64) -> R3Status {
    guarded(|| {
        if out.is_null() {
            return fail(R3Status::NullPointer, "null out pointer");
        }
        match matching::iou(&a.into(), &b.into()) {
            Ok(v) => {
                unsafe { *out = v };
                R3Status::Ok
            }
            Err(e) => fail(R3Status::InvalidArgument, e.to_string()),
        }
    })
}

/// Ranks every object of a frames file and writes rank records to
/// `out_path`.
///
/// # Safety
/// Both paths must be null-terminated strings (or null, which fails
/// with `R3_STATUS_NULL_POINTER`).
#[no_mangle]
pub unsafe extern "C" fn r3_rank_frames_file(
    frames_path: *const c_char,
    params: R3RiskParams,
    out_path: *const c_char,
) -> R3Status {
    guarded(|| {
        let frames_path = match read_path(frames_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let out_path = match read_path(out_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let p: risk::RiskParams = params.into();
        if let Err(e) = p.validate() {
            return fail(R3Status::InvalidArgument, e.to_string());
        }
        let stream = match ingest::read_frames(&frames_path) {
            Ok(s) => s,
            Err(e) => return fail(ingest_status(&e), e.to_string()),
        };
        let mut records = Vec::new();
        for item in stream {
            let loaded = match item {
                Ok(l) => l,
                Err(e) => return fail(ingest_status(&e), e.to_string()),
            };
            let ranks = match risk::rank_frame(&loaded.frame, &p) {
                Ok(r) => r,
                Err(e) => return fail(R3Status::InvalidArgument, e.to_string()),
            };
            records.extend(ranks.into_iter().map(|(object_id, rank)| ingest::RankRecord {
                frame_id: loaded.frame.frame_id.clone(),
                object_id,
                rank,
            }));
        }
        let file = match std::fs::File::create(&out_path) {
            Ok(f) => f,
            Err(e) => return fail(R3Status::IoError, format!("{out_path}: {e}")),
        };
        match ingest::write_rank_records(std::io::BufWriter::new(file), &records) {
            Ok(()) => R3Status::Ok,
            Err(e) => fail(R3Status::IoError, e.to_string()),
        }
    })
}

/// Runs the full evaluation over a frames file and a predictions file.
/// On success `*out` owns a report handle.
///
/// # Safety
/// Paths must be null-terminated strings; `options.sweep`, when not
/// null, must point to `options.sweep_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn r3_evaluate_files(
    frames_path: *const c_char,
    predictions_path: *const c_char,
    options: R3EvalOptions,
    out: *mut *mut R3Report,
) -> R3Status {
    guarded(|| {
        if out.is_null() {
            return fail(R3Status::NullPointer, "null out pointer");
        }
        let frames_path = match read_path(frames_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let predictions_path = match read_path(predictions_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let sweep = if options.sweep.is_null() {
            metrics::DEFAULT_SWEEP.to_vec()
        } else {
            std::slice::from_raw_parts(options.sweep, options.sweep_len).to_vec()
        };
        let thresholds = EvalThresholds {
            tau_iog: options.tau_iog,
            tau_iou: options.tau_iou,
            sweep,
        };
        let class_filter: Option<BTreeSet<String>> = options.use_class_preset.then(|| {
            metrics::CLASS_FILTER_PRESET
                .iter()
                .map(|s| s.to_string())
                .collect()
        });
        let predictions = match ingest::load_predictions(&predictions_path) {
            Ok(p) => p,
            Err(e) => return fail(ingest_status(&e), e.to_string()),
        };
        let frames = match ingest::read_frames(&frames_path) {
            Ok(f) => f,
            Err(e) => return fail(ingest_status(&e), e.to_string()),
        };
        match metrics::evaluate(
            frames,
            predictions,
            &options.params.into(),
            &thresholds,
            class_filter.as_ref(),
        ) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(R3Report { inner: report }));
                R3Status::Ok
            }
            Err(e) => fail(eval_status(&e), e.to_string()),
        }
    })
}

fn report_string(
    report: *const R3Report,
    out: *mut *mut c_char,
    render: impl Fn(&metrics::EvalReport) -> String,
) -> R3Status {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(R3Status::NullPointer, "null pointer");
        }
        let text = render(unsafe { &(*report).inner });
        match CString::new(text) {
            Ok(c) => {
                unsafe { *out = c.into_raw() };
                R3Status::Ok
            }
            Err(_) => fail(R3Status::InternalError, "report contained NUL"),
        }
    })
}

/// Serializes a report as pretty JSON. Free the string with
/// [`r3_string_free`].
#[no_mangle]
pub extern "C" fn r3_report_to_json(report: *const R3Report, out: *mut *mut c_char) -> R3Status {
    report_string(report, out, |r| r.to_json())
}

/// Serializes the sweep table as CSV. Free the string with
/// [`r3_string_free`].
#[no_mangle]
pub extern "C" fn r3_report_to_csv(report: *const R3Report, out: *mut *mut c_char) -> R3Status {
    report_string(report, out, |r| r.to_csv())
}

/// Releases a report handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn r3_report_free(report: *mut R3Report) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Releases a string returned by this library. Null is a no-op.
#[no_mangle]
pub extern "C" fn r3_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
