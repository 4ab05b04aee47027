//! C ABI over the archdelta library.
//!
//! IR values cross the boundary as opaque handles. Every fallible call
//! returns an [`ArchdeltaStatus`]; on failure a message is available from
//! [`archdelta_last_error`] on the same thread until the next call.
//! Strings returned through `out` parameters are owned by the caller and
//! released with [`archdelta_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use archdelta::delta::compute_delta;
use archdelta::extract::{scan_repository, MarkerProfile};
use archdelta::history::{self, ArtifactWriter, ReplayConfig};
use archdelta::impact::{impact_set, ImpactOptions};
use archdelta::ir::{
    deserialize_delta, deserialize_ir, deserialize_service_ir, serialize_delta, serialize_ir,
    serialize_service_ir, Delta, MicroserviceIR, SystemIR,
};
use archdelta::link::build_system_ir;
use archdelta::merge::apply_delta;
use archdelta::rules::{builtin_rules, evaluate_many, load_rules, ViolationReport};
use archdelta::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchdeltaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A document failed to parse or validate.
    Document = 3,
    Extract = 4,
    Link = 5,
    /// Delta computation or merge failed.
    Delta = 6,
    Rule = 7,
    History = 8,
    /// An internal error; the library state is unaffected.
    Internal = 9,
}

/// A linked system IR.
pub struct ArchdeltaSystem(SystemIR);

/// One microservice IR.
pub struct ArchdeltaService(MicroserviceIR);

/// A per-service delta.
pub struct ArchdeltaDelta(Delta);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(ArchdeltaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Ir(_) => ArchdeltaStatus::Document,
            Error::Extract(_) => ArchdeltaStatus::Extract,
            Error::Link(_) => ArchdeltaStatus::Link,
            Error::Delta(_) | Error::Merge(_) => ArchdeltaStatus::Delta,
            Error::Rule(_) => ArchdeltaStatus::Rule,
            Error::History(_) => ArchdeltaStatus::History,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! from_stage {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

from_stage!(
    archdelta::ir::IrError,
    archdelta::extract::ExtractError,
    archdelta::link::LinkError,
    archdelta::delta::DeltaError,
    archdelta::merge::MergeError,
    archdelta::rules::RuleError,
    archdelta::history::HistoryError
);

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ArchdeltaStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArchdeltaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("panic");
            set_error(&format!("internal error: {msg}"));
            ArchdeltaStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ArchdeltaStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(ArchdeltaStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn handles<'a, T>(p: *const *const T, n: usize, what: &str) -> Result<Vec<&'a T>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(null(what));
    }
    std::slice::from_raw_parts(p, n)
        .iter()
        .enumerate()
        .map(|(i, h)| handle(*h, &format!("{what}[{i}]")))
        .collect()
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn put_string(out: *mut *mut c_char, bytes: Vec<u8>) -> Result<(), Failure> {
    let s = CString::new(bytes).map_err(|_| Failure(ArchdeltaStatus::Internal, "output contains NUL".into()))?;
    *out = s.into_raw();
    Ok(())
}

fn check_out<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { *out = ptr::null_mut() };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn archdelta_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty after a success.
/// The pointer stays valid until the next archdelta call on this thread.
#[no_mangle]
pub extern "C" fn archdelta_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn archdelta_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scans a service tree. `service` defaults to the directory name and
/// `profile_json` to the built-in marker profile when null.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_service_extract(
    tree: *const c_char,
    service: *const c_char,
    version: *const c_char,
    profile_json: *const c_char,
    out: *mut *mut ArchdeltaService,
) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let tree = PathBuf::from(text(tree, "tree")?);
        let version = text(version, "version")?;
        let name = match opt_text(service, "service")? {
            Some(s) => s.to_string(),
            None => dir_name(&tree),
        };
        let profile = match opt_text(profile_json, "profile_json")? {
            Some(p) => MarkerProfile::from_json(p.as_bytes())?,
            None => MarkerProfile::default(),
        };
        let ir = scan_repository(&tree, &profile, &name, version)?;
        put(out, ArchdeltaService(ir));
        Ok(())
    })
}

fn dir_name(p: &Path) -> String {
    p.canonicalize()
        .ok()
        .as_deref()
        .unwrap_or(p)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "service".into())
}

/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_service_from_json(json: *const c_char, out: *mut *mut ArchdeltaService) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let ir = deserialize_service_ir(text(json, "json")?.as_bytes())?;
        put(out, ArchdeltaService(ir));
        Ok(())
    })
}

/// # Safety
/// `svc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_service_to_json(svc: *const ArchdeltaService, out: *mut *mut c_char) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        put_string(out, serialize_service_ir(&handle(svc, "svc")?.0))
    })
}

/// # Safety
/// `svc` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn archdelta_service_free(svc: *mut ArchdeltaService) {
    if !svc.is_null() {
        drop(Box::from_raw(svc));
    }
}

/// Links `n` services into a system IR.
///
/// # Safety
/// `services` must point to `n` live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_system_link(
    services: *const *const ArchdeltaService,
    n: usize,
    overlap_threshold: f64,
    out: *mut *mut ArchdeltaSystem,
) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let svcs = handles(services, n, "services")?;
        let ir = build_system_ir(svcs.into_iter().map(|s| s.0.clone()).collect(), overlap_threshold, "")?;
        put(out, ArchdeltaSystem(ir));
        Ok(())
    })
}

/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_system_from_json(json: *const c_char, out: *mut *mut ArchdeltaSystem) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let ir = deserialize_ir(text(json, "json")?.as_bytes())?;
        put(out, ArchdeltaSystem(ir));
        Ok(())
    })
}

/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_system_to_json(sys: *const ArchdeltaSystem, out: *mut *mut c_char) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        put_string(out, serialize_ir(&handle(sys, "sys")?.0))
    })
}

/// Number of services in the system.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn archdelta_system_service_count(sys: *const ArchdeltaSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.services.len())
}

/// # Safety
/// `sys` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn archdelta_system_free(sys: *mut ArchdeltaSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Diffs two versions of one service.
///
/// # Safety
/// `old` and `new` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_delta_compute(
    old: *const ArchdeltaService,
    new: *const ArchdeltaService,
    out: *mut *mut ArchdeltaDelta,
) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let d = compute_delta(&handle(old, "old")?.0, &handle(new, "new")?.0)?;
        put(out, ArchdeltaDelta(d));
        Ok(())
    })
}

/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_delta_from_json(json: *const c_char, out: *mut *mut ArchdeltaDelta) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let d = deserialize_delta(text(json, "json")?.as_bytes())?;
        put(out, ArchdeltaDelta(d));
        Ok(())
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_delta_to_json(d: *const ArchdeltaDelta, out: *mut *mut c_char) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        put_string(out, serialize_delta(&handle(d, "d")?.0))
    })
}

/// Number of component changes in the delta.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn archdelta_delta_change_count(d: *const ArchdeltaDelta) -> usize {
    d.as_ref().map_or(0, |d| d.0.changes.len())
}

/// # Safety
/// `d` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn archdelta_delta_free(d: *mut ArchdeltaDelta) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Applies `d` to `baseline`, producing a new system handle.
///
/// # Safety
/// `baseline` and `d` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_system_apply_delta(
    baseline: *const ArchdeltaSystem,
    d: *const ArchdeltaDelta,
    overlap_threshold: f64,
    out: *mut *mut ArchdeltaSystem,
) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let ir = apply_delta(&handle(baseline, "baseline")?.0, &handle(d, "d")?.0, overlap_threshold)?;
        put(out, ArchdeltaSystem(ir));
        Ok(())
    })
}

/// Evaluates rules over (baseline, deltas, increment) and returns a
/// violations document. `rules_json` null selects the built-in rules.
///
/// # Safety
/// Handles must be live; `deltas` must point to `n` handles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_evaluate(
    baseline: *const ArchdeltaSystem,
    deltas: *const *const ArchdeltaDelta,
    n: usize,
    increment: *const ArchdeltaSystem,
    rules_json: *const c_char,
    out: *mut *mut c_char,
) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let base = &handle(baseline, "baseline")?.0;
        let inc = &handle(increment, "increment")?.0;
        let ds: Vec<&Delta> = handles(deltas, n, "deltas")?.into_iter().map(|d| &d.0).collect();
        let rules = match opt_text(rules_json, "rules_json")? {
            Some(doc) => load_rules(doc.as_bytes())?,
            None => builtin_rules(),
        };
        let violations = evaluate_many(base, &ds, inc, &rules)?;
        put_string(out, ViolationReport::new(&inc.version_label, violations).to_json())
    })
}

/// Impact report of `d` over `baseline`. Negative hop bounds mean
/// unlimited.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_impact(
    baseline: *const ArchdeltaSystem,
    d: *const ArchdeltaDelta,
    max_hops: i64,
    max_cross_service_hops: i64,
    include_data_overlap: bool,
    out: *mut *mut c_char,
) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let bound = |v: i64| usize::try_from(v).ok();
        let opts = ImpactOptions {
            max_hops: bound(max_hops),
            max_cross_service_hops: bound(max_cross_service_hops),
            include_data_overlap,
            include_entity_usage: false,
        };
        let report = impact_set(&handle(baseline, "baseline")?.0, &handle(d, "d")?.0, &opts);
        put_string(out, report.to_json())
    })
}

/// Replays the history described by a TOML config, writing artifacts to
/// `out_dir` (or the config's `out` when null), and returns the summary
/// document.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn archdelta_replay(
    config_path: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut c_char,
) -> ArchdeltaStatus {
    guard(|| {
        check_out(out)?;
        let cfg = ReplayConfig::load(Path::new(text(config_path, "config_path")?))?;
        let settings = cfg.settings()?;
        let versions = cfg.versions()?;
        let dir = match opt_text(out_dir, "out_dir")? {
            Some(d) => PathBuf::from(d),
            None => cfg.out_dir(),
        };
        let writer = ArtifactWriter::new(&dir)?;
        let record = history::replay(&versions, &settings, |s| writer.observe(s))?;
        let summary = writer.finish(&record, &cfg.project_name())?;
        put_string(out, summary.to_json())
    })
}
