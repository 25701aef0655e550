//! C ABI over `plap`.
//!
//! Graphs and spectra are opaque handles released with their `_free`
//! function. Every fallible call returns a [`PlapStatus`]; on failure the
//! message is available from [`plap_last_error`] on the same thread.
//! Vertex indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plap::eigen::{solve_spectrum, Spectrum};
use plap::nodal::{default_zero_tol, strong_nodal_domains, weak_nodal_domains};
use plap::report::{cmd_certify, RunOptions, Status};
use plap::{cheeger, parse_graph, Error, Graph, MuMode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlapStatus {
    Ok = 0,
    CertificateFailure = 1,
    InvalidInput = 2,
    NonConvergence = 3,
    NullPointer = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlapMu {
    Unit = 0,
    Degree = 1,
    Explicit = 2,
}

impl From<PlapMu> for MuMode {
    fn from(m: PlapMu) -> Self {
        match m {
            PlapMu::Unit => MuMode::Unit,
            PlapMu::Degree => MuMode::Degree,
            PlapMu::Explicit => MuMode::Explicit,
        }
    }
}

/// Opaque graph handle.
pub struct PlapGraph(Graph);

/// Opaque spectrum handle.
pub struct PlapSpectrum(Spectrum);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> PlapStatus {
    match e {
        Error::Solver(_) => PlapStatus::NonConvergence,
        Error::Io(_) => PlapStatus::Io,
        _ => PlapStatus::InvalidInput,
    }
}

/// Runs `f`, turning errors and panics into a status and the last error.
fn guard(f: impl FnOnce() -> Result<PlapStatus, Error>) -> PlapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            PlapStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument");
            return PlapStatus::NullPointer;
        }
    };
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn plap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an edge-list document (NUL-terminated UTF-8).
///
/// # Safety
/// `text` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn plap_graph_parse(text: *const c_char, mu: PlapMu, out: *mut *mut PlapGraph) -> PlapStatus {
    non_null!(text, out);
    guard(|| {
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Error::InvalidArgument("text is not UTF-8".into()))?;
        let g = parse_graph(text, mu.into())?;
        *out = Box::into_raw(Box::new(PlapGraph(g)));
        Ok(PlapStatus::Ok)
    })
}

/// Builds a graph from `m` edges `(u[i], v[i], w[i])`. With
/// `PLAP_MU_EXPLICIT`, `measure` must hold `n` values; otherwise it is
/// ignored and may be NULL.
///
/// # Safety
/// `u`, `v`, `w` must point to `m` elements, `measure` to `n` elements when
/// used, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plap_graph_new(
    n: usize,
    u: *const usize,
    v: *const usize,
    w: *const f64,
    m: usize,
    mu: PlapMu,
    measure: *const f64,
    out: *mut *mut PlapGraph,
) -> PlapStatus {
    non_null!(out);
    if m > 0 {
        non_null!(u, v, w);
    }
    if mu == PlapMu::Explicit {
        non_null!(measure);
    }
    guard(|| {
        let edges: Vec<(usize, usize, f64)> = (0..m).map(|i| (*u.add(i), *v.add(i), *w.add(i))).collect();
        let g = match mu {
            PlapMu::Explicit => Graph::new(std::slice::from_raw_parts(measure, n).to_vec(), edges)?,
            mode => Graph::with_mu_mode(n, edges, mode.into())?,
        };
        *out = Box::into_raw(Box::new(PlapGraph(g)));
        Ok(PlapStatus::Ok)
    })
}

/// # Safety
/// `g` must come from this library and not be used afterwards. NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn plap_graph_free(g: *mut PlapGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn plap_graph_n(g: *const PlapGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Eigenpairs at exponent `p` in ascending order.
///
/// # Safety
/// `g` must be a live graph handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn plap_solve(g: *const PlapGraph, p: f64, out: *mut *mut PlapSpectrum) -> PlapStatus {
    non_null!(g, out);
    guard(|| {
        let s = solve_spectrum(&(*g).0, p, &Default::default())?;
        *out = Box::into_raw(Box::new(PlapSpectrum(s)));
        Ok(PlapStatus::Ok)
    })
}

/// # Safety
/// `s` must come from [`plap_solve`] and not be used afterwards. NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn plap_spectrum_free(s: *mut PlapSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of eigenpairs, or 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn plap_spectrum_len(s: *const PlapSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.0.pairs.len())
}

/// Eigenvalue and residual of pair `k` (0-based). `residual` may be NULL.
///
/// # Safety
/// `s` must be a live spectrum handle, `lambda` writable and `residual`
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn plap_spectrum_pair(
    s: *const PlapSpectrum,
    k: usize,
    lambda: *mut f64,
    residual: *mut f64,
) -> PlapStatus {
    non_null!(s, lambda);
    guard(|| {
        let pair = (&*s).0.pairs.get(k).ok_or_else(|| Error::InvalidArgument(format!("no pair {k}")))?;
        *lambda = pair.lambda;
        if !residual.is_null() {
            *residual = pair.residual;
        }
        Ok(PlapStatus::Ok)
    })
}

/// Copies the eigenfunction of pair `k` into `buf`, which must hold `len`
/// values with `len` equal to the vertex count.
///
/// # Safety
/// `s` must be a live spectrum handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn plap_spectrum_eigenfunction(
    s: *const PlapSpectrum,
    k: usize,
    buf: *mut f64,
    len: usize,
) -> PlapStatus {
    non_null!(s, buf);
    guard(|| {
        let pair = (&*s).0.pairs.get(k).ok_or_else(|| Error::InvalidArgument(format!("no pair {k}")))?;
        if pair.f.len() != len {
            return Err(Error::LengthMismatch {
                expected: pair.f.len(),
                got: len,
            });
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&pair.f);
        Ok(PlapStatus::Ok)
    })
}

unsafe fn vertex_function<'a>(g: &Graph, f: *const f64, len: usize) -> Result<&'a [f64], Error> {
    if len != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), got: len });
    }
    Ok(std::slice::from_raw_parts(f, len))
}

/// Strong and weak nodal domain counts of `f` with the default zero
/// tolerance.
///
/// # Safety
/// `g` must be a live graph handle, `f` readable for `len` values and the
/// outputs writable.
#[no_mangle]
pub unsafe extern "C" fn plap_nodal_counts(
    g: *const PlapGraph,
    f: *const f64,
    len: usize,
    strong: *mut usize,
    weak: *mut usize,
) -> PlapStatus {
    non_null!(g, f, strong, weak);
    guard(|| {
        let g = &(*g).0;
        let f = vertex_function(g, f, len)?;
        let tol = default_zero_tol(f);
        *strong = strong_nodal_domains(g, f, tol)?.count();
        *weak = weak_nodal_domains(g, f, tol)?.count();
        Ok(PlapStatus::Ok)
    })
}

/// Exact `h_1 .. h_k` into `h[0..k]`.
///
/// # Safety
/// `g` must be a live graph handle and `h` writable for `k` values.
#[no_mangle]
pub unsafe extern "C" fn plap_cheeger(g: *const PlapGraph, k: usize, h: *mut f64) -> PlapStatus {
    non_null!(g, h);
    guard(|| {
        let g = &(*g).0;
        let hs: Vec<f64> = if k == g.n() {
            cheeger::multiway_cheeger_all(g, k)?.iter().map(|c| c.h).collect()
        } else {
            (1..=k).map(|j| cheeger::multiway_cheeger(g, j).map(|c| c.h)).collect::<Result<_, _>>()?
        };
        std::slice::from_raw_parts_mut(h, k).copy_from_slice(&hs);
        Ok(PlapStatus::Ok)
    })
}

/// Best sweep cut of `f` at exponent `p`: its cut ratio, the guaranteed
/// bound, and the set as a 0/1 mask in `mask` (may be NULL).
///
/// # Safety
/// `g` must be a live graph handle, `f` readable and `mask` NULL or
/// writable for `len` values, and the scalar outputs writable.
#[no_mangle]
pub unsafe extern "C" fn plap_sweep(
    g: *const PlapGraph,
    f: *const f64,
    len: usize,
    p: f64,
    cut_ratio: *mut f64,
    bound: *mut f64,
    mask: *mut u8,
) -> PlapStatus {
    non_null!(g, f, cut_ratio, bound);
    guard(|| {
        let g = &(*g).0;
        let f = vertex_function(g, f, len)?;
        let cut = cheeger::sweep_cut(g, f, p)?;
        *cut_ratio = cut.cut_ratio;
        *bound = cut.bound;
        if !mask.is_null() {
            for (m, b) in std::slice::from_raw_parts_mut(mask, len).iter_mut().zip(cut.set.mask()) {
                *m = b as u8;
            }
        }
        Ok(PlapStatus::Ok)
    })
}

/// Runs the certification pipeline at the `np` exponents in `p_list` and
/// returns the JSON report in `json` (release with [`plap_string_free`]).
/// The status is `PLAP_STATUS_OK`, `PLAP_STATUS_CERTIFICATE_FAILURE` or
/// `PLAP_STATUS_NON_CONVERGENCE` when a report was produced.
///
/// # Safety
/// `g` must be a live graph handle, `p_list` readable for `np` values and
/// `json` writable.
#[no_mangle]
pub unsafe extern "C" fn plap_certify_json(
    g: *const PlapGraph,
    p_list: *const f64,
    np: usize,
    seed: u64,
    json: *mut *mut c_char,
) -> PlapStatus {
    non_null!(g, p_list, json);
    guard(|| {
        let opts = RunOptions {
            seed,
            ..RunOptions::default()
        };
        let r = cmd_certify(&(*g).0, std::slice::from_raw_parts(p_list, np), &opts)?;
        *json = CString::new(r.to_json()).expect("JSON has no nul").into_raw();
        Ok(match r.status {
            Status::Certified => PlapStatus::Ok,
            Status::CertificateFailure => PlapStatus::CertificateFailure,
            Status::NonConvergence => PlapStatus::NonConvergence,
        })
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn plap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
