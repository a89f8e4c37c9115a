//! C ABI over `csi-core`. Objects cross the boundary as opaque handles that
//! the caller releases with the matching `*_free` function. Every fallible
//! call returns a [`CsiStatus`]; the message of the last failure on the
//! calling thread is available from [`csi_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use csi_core::analysis::{pair_stability_correlation, self_stability};
use csi_core::cli::{cmd_analyze, cmd_generate, cmd_simulate, load_trace, simulate_rows, RunConfig};
use csi_core::profile::{compute_profile, similarity, AssociationMatrix, BehavioralProfile};
use csi_core::sim::ResultRow;
use csi_core::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Usage = 3,
    Input = 4,
    InvalidConfig = 5,
    InvalidArgument = 6,
    InsufficientData = 7,
    Degenerate = 8,
    OutOfRange = 9,
    Panic = 10,
}

impl From<&Error> for CsiStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Usage(_) => CsiStatus::Usage,
            Error::Io(_) | Error::Input(_) | Error::SchemaMismatch { .. } | Error::EmptyReport(_) => CsiStatus::Input,
            Error::InvalidConfig(_) => CsiStatus::InvalidConfig,
            Error::InvalidArgument(_) | Error::InvalidTarget(_) | Error::EmptyHistory => CsiStatus::InvalidArgument,
            Error::InsufficientData(_) => CsiStatus::InsufficientData,
            Error::DegenerateProfile | Error::UndefinedCorrelation(_) => CsiStatus::Degenerate,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CsiStatus, msg: impl Into<String>) -> CsiStatus {
    set_last_error(msg.into());
    status
}

fn from_core(e: Error) -> CsiStatus {
    let status = CsiStatus::from(&e);
    fail(status, e.to_string())
}

/// Runs `f`, clearing the thread's last error first and turning panics into
/// [`CsiStatus::Panic`].
fn guard(f: impl FnOnce() -> CsiStatus) -> CsiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        fail(CsiStatus::Panic, format!("internal error: {msg}"))
    })
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, CsiStatus> {
    if p.is_null() {
        return Err(fail(CsiStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CsiStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, CsiStatus> {
    p.as_ref()
        .ok_or_else(|| fail(CsiStatus::NullPointer, format!("{name} is null")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<(), CsiStatus> {
    if p.is_null() {
        Err(fail(CsiStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn status_of(r: Result<(), CsiStatus>) -> CsiStatus {
    r.err().unwrap_or(CsiStatus::Ok)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn csi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn csi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Run configuration: the same keys as the command-line configuration file.
pub struct CsiConfig(RunConfig);

/// A configuration with default values.
#[no_mangle]
pub extern "C" fn csi_config_new() -> *mut CsiConfig {
    Box::into_raw(Box::new(CsiConfig(RunConfig::default())))
}

/// # Safety
/// `cfg` must come from [`csi_config_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn csi_config_free(cfg: *mut CsiConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets one configuration key, e.g. `("th_sim", "0.8")`.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn csi_config_set(cfg: *mut CsiConfig, key: *const c_char, value: *const c_char) -> CsiStatus {
    guard(|| {
        status_of((|| {
            let cfg = cfg
                .as_mut()
                .ok_or_else(|| fail(CsiStatus::NullPointer, "cfg is null"))?;
            let key = str_arg(key, "key")?;
            let value = str_arg(value, "value")?;
            cfg.0.set(key, value).map_err(from_core)
        })())
    })
}

/// Applies a `key = value` configuration file.
///
/// # Safety
/// `cfg` must be a live handle; `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn csi_config_load(cfg: *mut CsiConfig, path: *const c_char) -> CsiStatus {
    guard(|| {
        status_of((|| {
            let cfg = cfg
                .as_mut()
                .ok_or_else(|| fail(CsiStatus::NullPointer, "cfg is null"))?;
            let path = PathBuf::from(str_arg(path, "path")?);
            let file = std::fs::File::open(&path)
                .map_err(|e| fail(CsiStatus::Input, format!("cannot read {}: {e}", path.display())))?;
            cfg.0.apply_file(std::io::BufReader::new(file)).map_err(from_core)
        })())
    })
}

/// Writes `trace.csv` to the configured output directory.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn csi_generate(cfg: *const CsiConfig) -> CsiStatus {
    guard(|| status_of(handle(cfg, "cfg").and_then(|c| cmd_generate(&c.0).map(drop).map_err(from_core))))
}

/// Writes `stability.csv` and `encounter_stats.csv` to the configured output
/// directory.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn csi_analyze(cfg: *const CsiConfig) -> CsiStatus {
    guard(|| status_of(handle(cfg, "cfg").and_then(|c| cmd_analyze(&c.0).map_err(from_core))))
}

/// Writes `results.csv` to the configured output directory.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn csi_simulate(cfg: *const CsiConfig) -> CsiStatus {
    guard(|| status_of(handle(cfg, "cfg").and_then(|c| cmd_simulate(&c.0).map(drop).map_err(from_core))))
}

/// Self-similarity (`pair_correlation == false`) or pair-correlation
/// stability of the configured trace for history `d` and gap `t_gap` days.
///
/// # Safety
/// `cfg` must be a live handle; `out` a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn csi_stability(
    cfg: *const CsiConfig,
    d: u32,
    t_gap: u32,
    pair_correlation: bool,
    out: *mut f64,
) -> CsiStatus {
    guard(|| {
        status_of((|| {
            let cfg = handle(cfg, "cfg")?;
            out_ptr(out, "out")?;
            let trace = load_trace(&cfg.0).map_err(from_core)?;
            let point = if pair_correlation {
                pair_stability_correlation(&trace, d, t_gap)
            } else {
                self_stability(&trace, d, t_gap)
            }
            .map_err(from_core)?;
            *out = point.value;
            Ok(())
        })())
    })
}

/// Per-run metrics. Undefined values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiResultRow {
    pub scenario_id: u64,
    pub sender_similarity: f64,
    pub delivery_ratio: f64,
    pub avg_delay_s: f64,
    pub tx_overhead: u64,
    pub storage_overhead: u64,
    pub profile_exchanges: u64,
    pub delivered: u64,
    pub intended: u64,
    pub norm_delivery_ratio: f64,
    pub norm_avg_delay: f64,
    pub norm_tx_overhead: f64,
    pub norm_storage_overhead: f64,
}

/// In-memory simulation results.
pub struct CsiResults {
    rows: Vec<ResultRow>,
    protocols: Vec<CString>,
    kinds: Vec<CString>,
}

fn nan(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

impl From<&ResultRow> for CsiResultRow {
    fn from(r: &ResultRow) -> Self {
        let m = &r.metrics;
        let n = &r.normalized;
        Self {
            scenario_id: r.scenario_id as u64,
            sender_similarity: nan(r.sender_sim),
            delivery_ratio: m.delivery_ratio,
            avg_delay_s: nan(m.avg_delay),
            tx_overhead: m.transmission_overhead,
            storage_overhead: m.storage_overhead,
            profile_exchanges: m.profile_exchange_count,
            delivered: m.delivered,
            intended: m.intended,
            norm_delivery_ratio: nan(n.delivery_ratio),
            norm_avg_delay: nan(n.avg_delay),
            norm_tx_overhead: nan(n.transmission_overhead),
            norm_storage_overhead: nan(n.storage_overhead),
        }
    }
}

fn cstring(s: &str) -> CString {
    CString::new(s).expect("labels hold no nul")
}

/// Runs the configured simulation without writing files.
///
/// # Safety
/// `cfg` must be a live handle; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn csi_simulate_results(cfg: *const CsiConfig, out: *mut *mut CsiResults) -> CsiStatus {
    guard(|| {
        status_of((|| {
            let cfg = handle(cfg, "cfg")?;
            out_ptr(out, "out")?;
            let rows = simulate_rows(&cfg.0).map_err(from_core)?;
            let protocols = rows.iter().map(|r| cstring(&r.protocol)).collect();
            let kinds = rows.iter().map(|r| cstring(&r.kind)).collect();
            *out = Box::into_raw(Box::new(CsiResults { rows, protocols, kinds }));
            Ok(())
        })())
    })
}

/// # Safety
/// `results` must come from [`csi_simulate_results`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn csi_results_free(results: *mut CsiResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csi_results_len(results: *const CsiResults) -> usize {
    results.as_ref().map_or(0, |r| r.rows.len())
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `results` must be a live handle; `out` a writable row.
#[no_mangle]
pub unsafe extern "C" fn csi_results_get(
    results: *const CsiResults,
    index: usize,
    out: *mut CsiResultRow,
) -> CsiStatus {
    guard(|| {
        status_of((|| {
            let results = handle(results, "results")?;
            out_ptr(out, "out")?;
            let row = results
                .rows
                .get(index)
                .ok_or_else(|| fail(CsiStatus::OutOfRange, format!("row {index} of {}", results.rows.len())))?;
            *out = CsiResultRow::from(row);
            Ok(())
        })())
    })
}

/// Protocol label of row `index`, owned by the handle; null when out of
/// range.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csi_results_protocol(results: *const CsiResults, index: usize) -> *const c_char {
    results
        .as_ref()
        .and_then(|r| r.protocols.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Scenario kind (`csit` or `csid`) of row `index`, owned by the handle;
/// null when out of range.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csi_results_kind(results: *const CsiResults, index: usize) -> *const c_char {
    results
        .as_ref()
        .and_then(|r| r.kinds.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Behavioral profile of one user.
pub struct CsiProfile(BehavioralProfile);

/// Profile of a row-major `rows × cols` association matrix whose rows are
/// daily location fractions. Profiles built with the same column count share
/// a location space and can be compared.
///
/// # Safety
/// `data` must point to `rows * cols` doubles; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn csi_profile_compute(
    data: *const f64,
    rows: usize,
    cols: usize,
    power_threshold: f64,
    out: *mut *mut CsiProfile,
) -> CsiStatus {
    guard(|| {
        status_of((|| {
            if data.is_null() {
                return Err(fail(CsiStatus::NullPointer, "data is null"));
            }
            out_ptr(out, "out")?;
            if rows == 0 || cols == 0 {
                return Err(fail(CsiStatus::InvalidArgument, "matrix has no entries"));
            }
            let flat = std::slice::from_raw_parts(data, rows * cols);
            let matrix_rows = flat.chunks(cols).map(<[f64]>::to_vec).collect();
            let keys = (0..cols).map(|c| format!("c{c}")).collect();
            let days = (0..rows as i64).collect();
            let m = AssociationMatrix::new(matrix_rows, keys, days).map_err(from_core)?;
            let p = compute_profile(&m, power_threshold).map_err(from_core)?;
            *out = Box::into_raw(Box::new(CsiProfile(p)));
            Ok(())
        })())
    })
}

/// # Safety
/// `profile` must come from [`csi_profile_compute`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn csi_profile_free(profile: *mut CsiProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Number of eigen-behavior vectors kept; 0 for a null handle.
///
/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csi_profile_rank(profile: *const CsiProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.0.rank())
}

/// Copies up to `len` weights into `out` and returns how many were copied.
///
/// # Safety
/// `profile` must be null or a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn csi_profile_weights(profile: *const CsiProfile, out: *mut f64, len: usize) -> usize {
    match (profile.as_ref(), out.is_null()) {
        (Some(p), false) => {
            let w = p.0.weights();
            let n = w.len().min(len);
            ptr::copy_nonoverlapping(w.as_ptr(), out, n);
            n
        }
        _ => 0,
    }
}

/// Similarity of two profiles in `[0, 1]`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn csi_profile_similarity(
    a: *const CsiProfile,
    b: *const CsiProfile,
    out: *mut f64,
) -> CsiStatus {
    guard(|| {
        status_of((|| {
            let (a, b) = (handle(a, "a")?, handle(b, "b")?);
            out_ptr(out, "out")?;
            *out = similarity(&a.0, &b.0);
            Ok(())
        })())
    })
}
