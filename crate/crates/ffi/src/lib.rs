//! C ABI over the simulator core.
//!
//! Conventions: every fallible function returns a [`PrnnStatus`] and writes
//! results through out-pointers; handles are allocated and freed only by
//! this library; panics are caught at the boundary and reported as
//! [`PrnnStatus::Panic`]. The most recent failure message of the calling
//! thread is available via [`prnn_last_error`].

// Callers consume the generated C header, where the pointer contract above
// (plus per-function doc comments) is the safety documentation; Rust-side
// `# Safety` sections would only duplicate it into the header verbatim.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use photonic_rnn::experiment::{run_training, write_train_artifacts, ExperimentConfig, RunSeeds};
use photonic_rnn::io::{read_coupling_matrix, write_coupling_matrix};
use photonic_rnn::mackey_glass::{downsample, integrate_mg, standardize, MgParams, TimeSeries};
use photonic_rnn::topology::{
    normalize_matrix, synth_kernel_matrix, CouplingMatrix, NormalizeMode,
};
use photonic_rnn::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrnnStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments or configuration were rejected before running.
    InvalidArgument = 2,
    /// The computation or an artifact write failed.
    Runtime = 3,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 4,
    /// An internal invariant failed; the handle state is unspecified.
    Panic = 5,
}

/// Opaque sampled scalar series.
pub struct PrnnSeries(TimeSeries);

/// Opaque sparse coupling matrix.
pub struct PrnnCoupling(CouplingMatrix);

/// Headline numbers of one training run.
#[repr(C)]
pub struct PrnnRunSummary {
    pub n_nodes: usize,
    /// Detector gain after calibration (or the configured fixed value).
    pub alpha: f64,
    /// Error of the random initial readout weights.
    pub epsilon_initial: f64,
    /// Final training error.
    pub epsilon_train: f64,
    /// Error on the held-out window under training-frozen transforms.
    pub epsilon_test: f64,
    pub iterations: usize,
    pub accepted_flips: usize,
    /// NUL-terminated hash of the effective configuration (16 hex digits).
    pub config_hash: [c_char; 17],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
}

fn fail(e: &Error) -> PrnnStatus {
    set_error(&e.to_string());
    if e.exit_code() == 1 {
        PrnnStatus::InvalidArgument
    } else {
        PrnnStatus::Runtime
    }
}

fn guard<F: FnOnce() -> PrnnStatus>(f: F) -> PrnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            PrnnStatus::Panic
        }
    }
}

macro_rules! require {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!(stringify!($ptr), " must not be null"));
            return PrnnStatus::NullArgument;
        }
    };
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, PrnnStatus> {
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        PrnnStatus::InvalidUtf8
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn prnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the calling thread's most recent failure. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn prnn_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Integrate the chaotic delay-differential benchmark series and return a
/// new series handle holding `n_samples` values after `burn_in` discarded
/// steps.
#[no_mangle]
pub unsafe extern "C" fn prnn_mg_generate(
    a: f64,
    b: f64,
    p: f64,
    tau: f64,
    dt: f64,
    x0: f64,
    n_samples: usize,
    burn_in: usize,
    out: *mut *mut PrnnSeries,
) -> PrnnStatus {
    guard(|| {
        require!(out);
        let params = MgParams { a, b, p, tau, dt, x0 };
        match integrate_mg(&params, n_samples, burn_in) {
            Ok(series) => {
                *out = Box::into_raw(Box::new(PrnnSeries(series)));
                PrnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of samples in a series.
#[no_mangle]
pub unsafe extern "C" fn prnn_series_len(series: *const PrnnSeries, out: *mut usize) -> PrnnStatus {
    guard(|| {
        require!(series);
        require!(out);
        *out = (*series).0.len();
        PrnnStatus::Ok
    })
}

/// Sample spacing of a series (after any downsampling).
#[no_mangle]
pub unsafe extern "C" fn prnn_series_dt(series: *const PrnnSeries, out: *mut f64) -> PrnnStatus {
    guard(|| {
        require!(series);
        require!(out);
        *out = (*series).0.dt_effective();
        PrnnStatus::Ok
    })
}

/// Copy all samples into `buffer`, which must hold at least `capacity`
/// doubles; fails unless `capacity` covers the whole series.
#[no_mangle]
pub unsafe extern "C" fn prnn_series_copy(
    series: *const PrnnSeries,
    buffer: *mut f64,
    capacity: usize,
) -> PrnnStatus {
    guard(|| {
        require!(series);
        require!(buffer);
        let values = (*series).0.values();
        if capacity < values.len() {
            set_error("buffer capacity is smaller than the series");
            return PrnnStatus::InvalidArgument;
        }
        std::ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len());
        PrnnStatus::Ok
    })
}

/// Keep every `factor`-th sample, returning a new series handle.
#[no_mangle]
pub unsafe extern "C" fn prnn_series_downsample(
    series: *const PrnnSeries,
    factor: usize,
    out: *mut *mut PrnnSeries,
) -> PrnnStatus {
    guard(|| {
        require!(series);
        require!(out);
        match downsample(&(*series).0, factor) {
            Ok(thinned) => {
                *out = Box::into_raw(Box::new(PrnnSeries(thinned)));
                PrnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Standardize to mean 0 and standard deviation 1, returning a new handle
/// and the applied transform parameters.
#[no_mangle]
pub unsafe extern "C" fn prnn_series_standardize(
    series: *const PrnnSeries,
    out: *mut *mut PrnnSeries,
    mean: *mut f64,
    std: *mut f64,
) -> PrnnStatus {
    guard(|| {
        require!(series);
        require!(out);
        require!(mean);
        require!(std);
        match standardize(&(*series).0) {
            Ok((standardized, m, s)) => {
                *out = Box::into_raw(Box::new(PrnnSeries(standardized)));
                *mean = m;
                *std = s;
                PrnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a series handle; a null handle is ignored.
#[no_mangle]
pub unsafe extern "C" fn prnn_series_free(series: *mut PrnnSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Build a max-row-sum normalized synthetic coupling matrix on a
/// `grid_side` x `grid_side` node grid with the given kernel radius and
/// per-entry heterogeneity in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn prnn_coupling_synthetic(
    grid_side: usize,
    kernel_radius: usize,
    heterogeneity: f64,
    seed: u64,
    out: *mut *mut PrnnCoupling,
) -> PrnnStatus {
    guard(|| {
        require!(out);
        let built = synth_kernel_matrix(grid_side, kernel_radius, heterogeneity, seed)
            .and_then(|m| normalize_matrix(&m, NormalizeMode::MaxRowSum));
        match built {
            Ok((matrix, _scale)) => {
                *out = Box::into_raw(Box::new(PrnnCoupling(matrix)));
                PrnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Node count of a coupling matrix.
#[no_mangle]
pub unsafe extern "C" fn prnn_coupling_n_nodes(
    coupling: *const PrnnCoupling,
    out: *mut usize,
) -> PrnnStatus {
    guard(|| {
        require!(coupling);
        require!(out);
        *out = (*coupling).0.n_nodes();
        PrnnStatus::Ok
    })
}

/// Kernel radius (grid distance beyond which entries are zero).
#[no_mangle]
pub unsafe extern "C" fn prnn_coupling_kernel_radius(
    coupling: *const PrnnCoupling,
    out: *mut usize,
) -> PrnnStatus {
    guard(|| {
        require!(coupling);
        require!(out);
        *out = (*coupling).0.kernel_radius();
        PrnnStatus::Ok
    })
}

/// Weight at `(i, j)`; zero where the kernel has no support.
#[no_mangle]
pub unsafe extern "C" fn prnn_coupling_entry(
    coupling: *const PrnnCoupling,
    i: usize,
    j: usize,
    out: *mut f64,
) -> PrnnStatus {
    guard(|| {
        require!(coupling);
        require!(out);
        let matrix = &(*coupling).0;
        if i >= matrix.n_nodes() || j >= matrix.n_nodes() {
            set_error("matrix index out of range");
            return PrnnStatus::InvalidArgument;
        }
        *out = matrix.entry(i, j);
        PrnnStatus::Ok
    })
}

/// Write a coupling matrix as a plain-text triplet file.
#[no_mangle]
pub unsafe extern "C" fn prnn_coupling_write(
    coupling: *const PrnnCoupling,
    path: *const c_char,
) -> PrnnStatus {
    guard(|| {
        require!(coupling);
        require!(path);
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match write_coupling_matrix(Path::new(path), &(*coupling).0, &[]) {
            Ok(()) => PrnnStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Read a coupling matrix from a triplet file written by
/// [`prnn_coupling_write`].
#[no_mangle]
pub unsafe extern "C" fn prnn_coupling_read(
    path: *const c_char,
    out: *mut *mut PrnnCoupling,
) -> PrnnStatus {
    guard(|| {
        require!(path);
        require!(out);
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match read_coupling_matrix(Path::new(path)) {
            Ok(matrix) => {
                *out = Box::into_raw(Box::new(PrnnCoupling(matrix)));
                PrnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a coupling handle; a null handle is ignored.
#[no_mangle]
pub unsafe extern "C" fn prnn_coupling_free(coupling: *mut PrnnCoupling) {
    if !coupling.is_null() {
        drop(Box::from_raw(coupling));
    }
}

/// Run one seeded end-to-end training described by a TOML config string.
///
/// `out_dir` may be null to skip artifact emission; when given, the
/// directory is created and receives the learning record, prediction table,
/// final weights and summary. `summary` receives the headline numbers.
#[no_mangle]
pub unsafe extern "C" fn prnn_train_from_config(
    config_toml: *const c_char,
    out_dir: *const c_char,
    summary: *mut PrnnRunSummary,
) -> PrnnStatus {
    guard(|| {
        require!(config_toml);
        require!(summary);
        let text = match cstr(config_toml) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let config = match ExperimentConfig::from_toml_str(text) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        let seeds = RunSeeds::derive(config.seeds.master);
        let outcome = match run_training(&config, &seeds) {
            Ok(o) => o,
            Err(e) => return fail(&e),
        };
        if !out_dir.is_null() {
            let dir = match cstr(out_dir) {
                Ok(d) => d,
                Err(status) => return status,
            };
            if let Err(e) = std::fs::create_dir_all(dir) {
                set_error(&format!("cannot create {dir}: {e}"));
                return PrnnStatus::Runtime;
            }
            if let Err(e) = write_train_artifacts(&config, &outcome, Path::new(dir), false) {
                return fail(&e);
            }
        }

        let s = &outcome.summary;
        (*summary).n_nodes = s.n_nodes;
        (*summary).alpha = s.alpha;
        (*summary).epsilon_initial = s.epsilon_initial;
        (*summary).epsilon_train = s.epsilon_train;
        (*summary).epsilon_test = s.epsilon_test;
        (*summary).iterations = s.iterations;
        (*summary).accepted_flips = s.accepted_flips;
        let mut hash = [0 as c_char; 17];
        for (slot, byte) in hash.iter_mut().zip(s.config_hash.as_bytes()) {
            *slot = *byte as c_char;
        }
        (*summary).config_hash = hash;
        PrnnStatus::Ok
    })
}
