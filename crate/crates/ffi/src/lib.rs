//! C ABI for `gdcover`.
//!
//! Graphs and spectral data are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`GdStatus`]; the message of the last failure on the calling thread is
//! available from [`gd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gdcover::asymptotics::{analyze, AnalyzeOptions};
use gdcover::covering::{count_all, CoverOptions};
use gdcover::graph::validate;
use gdcover::lattice::classify_graph;
use gdcover::spec_file::SpecFile;
use gdcover::spectral::solve_s0;
use gdcover::{Error, MwGraph, SpectralData};

/// Status codes. Values 1 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdStatus {
    Ok = 0,
    Validation = 1,
    ResourceCap = 2,
    Numerical = 3,
    Inconclusive = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque graph handle.
pub struct GdGraph {
    spec: SpecFile,
    graph: MwGraph,
}

/// Opaque spectral data handle.
pub struct GdSpectral {
    data: SpectralData,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(e: Error) -> GdStatus {
    set_error(e.to_string());
    match e.exit_code() {
        2 => GdStatus::ResourceCap,
        3 => GdStatus::Numerical,
        4 => GdStatus::Inconclusive,
        _ => GdStatus::Validation,
    }
}

fn guard(f: impl FnOnce() -> GdStatus) -> GdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            GdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, GdStatus> {
    if p.is_null() {
        set_error("null pointer argument");
        return Err(GdStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        GdStatus::InvalidUtf8
    })
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument");
            return GdStatus::NullPointer;
        }
    };
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a spec document. On success `*out` receives a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_graph_from_json(json: *const c_char, out: *mut *mut GdGraph) -> GdStatus {
    guard(|| {
        non_null!(out);
        let text = match str_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec = match SpecFile::from_json(text) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        match spec.to_graph() {
            Ok(graph) => {
                *out = Box::into_raw(Box::new(GdGraph { spec, graph }));
                GdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Reads a spec file from disk.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_graph_from_file(path: *const c_char, out: *mut *mut GdGraph) -> GdStatus {
    guard(|| {
        non_null!(out);
        let p = match str_arg(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match gdcover::spec_file::load_graph(p) {
            Ok((spec, graph)) => {
                *out = Box::into_raw(Box::new(GdGraph { spec, graph }));
                GdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a graph handle. NULL is ignored.
///
/// # Safety
/// `graph` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gd_graph_free(graph: *mut GdGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of vertices, or 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_graph_vertex_count(graph: *const GdGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.vertex_count())
}

/// Runs every validation check; the first failure is the error message.
///
/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_graph_validate(graph: *const GdGraph) -> GdStatus {
    guard(|| {
        non_null!(graph);
        match validate(&(*graph).graph).into_result() {
            Ok(_) => GdStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Solves for s₀ and the Perron data.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_spectral_solve(graph: *const GdGraph, tol: f64, out: *mut *mut GdSpectral) -> GdStatus {
    guard(|| {
        non_null!(graph, out);
        match solve_s0(&(*graph).graph, tol) {
            Ok(data) => {
                *out = Box::into_raw(Box::new(GdSpectral { data }));
                GdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// s₀, or NaN for NULL.
///
/// # Safety
/// `spectral` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_spectral_s0(spectral: *const GdSpectral) -> f64 {
    spectral.as_ref().map_or(f64::NAN, |s| s.data.s0)
}

/// Copies the right (`u`) and left (`v`) Perron vectors into buffers of
/// length `len`; either buffer may be NULL.
///
/// # Safety
/// Non-NULL buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_spectral_vectors(
    spectral: *const GdSpectral,
    u: *mut f64,
    v: *mut f64,
    len: usize,
) -> GdStatus {
    guard(|| {
        non_null!(spectral);
        let d = &(*spectral).data;
        if len < d.u.len() {
            set_error(format!("buffers need {} entries", d.u.len()));
            return GdStatus::BufferTooSmall;
        }
        if !u.is_null() {
            ptr::copy_nonoverlapping(d.u.as_ptr(), u, d.u.len());
        }
        if !v.is_null() {
            ptr::copy_nonoverlapping(d.v.as_ptr(), v, d.v.len());
        }
        GdStatus::Ok
    })
}

/// Releases spectral data. NULL is ignored.
///
/// # Safety
/// `spectral` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gd_spectral_free(spectral: *mut GdSpectral) {
    if !spectral.is_null() {
        drop(Box::from_raw(spectral));
    }
}

/// Lattice classification: `*is_lattice` is 1 or 0 and `*tau` the span
/// (NaN when dense).
///
/// # Safety
/// `graph` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gd_lattice_classify(
    graph: *const GdGraph,
    eps: f64,
    is_lattice: *mut i32,
    tau: *mut f64,
) -> GdStatus {
    guard(|| {
        non_null!(graph, is_lattice, tau);
        match classify_graph(&(*graph).graph, eps) {
            Ok(r) => {
                *is_lattice = i32::from(r.is_lattice());
                *tau = r.tau.unwrap_or(f64::NAN);
                GdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Grid counts at resolution `r` with origin 0: per vertex into `per_vertex`
/// (length `len`, may be NULL) and of the union into `*total`.
///
/// # Safety
/// `graph` must be a live handle, `total` valid, `per_vertex` NULL or `len` long.
#[no_mangle]
pub unsafe extern "C" fn gd_count(
    graph: *const GdGraph,
    r: f64,
    per_vertex: *mut u64,
    len: usize,
    total: *mut u64,
) -> GdStatus {
    guard(|| {
        non_null!(graph, total);
        let g = &(*graph).graph;
        if !per_vertex.is_null() && len < g.vertex_count() {
            set_error(format!("buffer needs {} entries", g.vertex_count()));
            return GdStatus::BufferTooSmall;
        }
        match count_all(g, r, &CoverOptions::default()) {
            Ok(c) => {
                if !per_vertex.is_null() {
                    ptr::copy_nonoverlapping(c.per_vertex.as_ptr(), per_vertex, c.per_vertex.len());
                }
                *total = c.total;
                GdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Full analysis with default options; `*out_json` receives a string to be
/// released with [`gd_string_free`].
///
/// # Safety
/// `graph` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_analyze_json(graph: *const GdGraph, seed: u64, out_json: *mut *mut c_char) -> GdStatus {
    guard(|| {
        non_null!(graph, out_json);
        let g = &*graph;
        let opts = AnalyzeOptions { seed, ..AnalyzeOptions::default() };
        let report = match analyze(&g.graph, g.spec.name.clone(), &opts) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        match serde_json::to_string(&report) {
            Ok(s) => match CString::new(s) {
                Ok(c) => {
                    *out_json = c.into_raw();
                    GdStatus::Ok
                }
                Err(_) => {
                    set_error("report contains a NUL byte");
                    GdStatus::Validation
                }
            },
            Err(e) => fail(e.into()),
        }
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
