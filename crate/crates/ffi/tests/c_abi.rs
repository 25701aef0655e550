use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use plap_ffi::*;

const P4: &str = "n 4\n1 2 1\n2 3 1\n3 4 1\n";

fn parse(text: &str, mu: PlapMu) -> *mut PlapGraph {
    let text = CString::new(text).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { plap_graph_parse(text.as_ptr(), mu, &mut g) }, PlapStatus::Ok);
    g
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(plap_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn solve_and_read_pairs() {
    let g = parse(P4, PlapMu::Unit);
    assert_eq!(unsafe { plap_graph_n(g) }, 4);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { plap_solve(g, 2.0, &mut s) }, PlapStatus::Ok);
    assert_eq!(unsafe { plap_spectrum_len(s) }, 4);
    let (mut lambda, mut residual) = (0.0, 0.0);
    assert_eq!(unsafe { plap_spectrum_pair(s, 1, &mut lambda, &mut residual) }, PlapStatus::Ok);
    let exact = 2.0 - 2.0 * (std::f64::consts::PI / 4.0).cos();
    assert!((lambda - exact).abs() < 1e-12);
    assert!(residual < 1e-12);
    let mut f = [0.0; 4];
    assert_eq!(unsafe { plap_spectrum_eigenfunction(s, 1, f.as_mut_ptr(), 4) }, PlapStatus::Ok);
    let (mut strong, mut weak) = (0, 0);
    assert_eq!(unsafe { plap_nodal_counts(g, f.as_ptr(), 4, &mut strong, &mut weak) }, PlapStatus::Ok);
    assert_eq!((strong, weak), (2, 2));
    assert_eq!(unsafe { plap_spectrum_pair(s, 9, &mut lambda, ptr::null_mut()) }, PlapStatus::InvalidInput);
    assert!(last_error().contains("no pair 9"));
    unsafe {
        plap_spectrum_free(s);
        plap_graph_free(g);
    }
}

#[test]
fn graph_from_arrays() {
    let (u, v, w) = ([0usize, 1], [1usize, 2], [1.0, 1.0]);
    let mut g = ptr::null_mut();
    let status = unsafe {
        plap_graph_new(3, u.as_ptr(), v.as_ptr(), w.as_ptr(), 2, PlapMu::Degree, ptr::null(), &mut g)
    };
    assert_eq!(status, PlapStatus::Ok);
    let mut h = [0.0; 3];
    assert_eq!(unsafe { plap_cheeger(g, 3, h.as_mut_ptr()) }, PlapStatus::Ok);
    assert_eq!(h[0], 0.0);
    assert_eq!(h[1], 1.0);
    assert_eq!(h[2], 1.0);
    let mu = [1.0, 0.0, 1.0];
    let mut bad = ptr::null_mut();
    let status = unsafe {
        plap_graph_new(3, u.as_ptr(), v.as_ptr(), w.as_ptr(), 2, PlapMu::Explicit, mu.as_ptr(), &mut bad)
    };
    assert_eq!(status, PlapStatus::InvalidInput);
    unsafe { plap_graph_free(g) };
}

#[test]
fn errors_and_null_pointers() {
    let text = CString::new("n 3\n1 2\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { plap_graph_parse(text.as_ptr(), PlapMu::Unit, &mut g) }, PlapStatus::InvalidInput);
    assert!(last_error().starts_with("line 2"));
    assert!(g.is_null());
    assert_eq!(unsafe { plap_graph_parse(ptr::null(), PlapMu::Unit, &mut g) }, PlapStatus::NullPointer);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { plap_solve(ptr::null(), 2.0, &mut s) }, PlapStatus::NullPointer);
    assert_eq!(unsafe { plap_graph_n(ptr::null()) }, 0);
    unsafe {
        plap_graph_free(ptr::null_mut());
        plap_spectrum_free(ptr::null_mut());
        plap_string_free(ptr::null_mut());
    }
    let g = parse(P4, PlapMu::Unit);
    let mut h = [0.0; 5];
    assert_eq!(unsafe { plap_cheeger(g, 5, h.as_mut_ptr()) }, PlapStatus::InvalidInput);
    let f = [1.0; 3];
    let (mut c, mut b) = (0.0, 0.0);
    let status = unsafe { plap_sweep(g, f.as_ptr(), 3, 2.0, &mut c, &mut b, ptr::null_mut()) };
    assert_eq!(status, PlapStatus::InvalidInput);
    unsafe { plap_graph_free(g) };
}

#[test]
fn sweep_mask() {
    let g = parse(P4, PlapMu::Unit);
    let f = [2.0, 1.0, -0.5, -1.0];
    let (mut c, mut b) = (0.0, 0.0);
    let mut mask = [9u8; 4];
    let status = unsafe { plap_sweep(g, f.as_ptr(), 4, 2.0, &mut c, &mut b, mask.as_mut_ptr()) };
    assert_eq!(status, PlapStatus::Ok);
    assert!(c <= b);
    assert!(mask.iter().all(|&m| m <= 1));
    unsafe { plap_graph_free(g) };
}

#[test]
fn certify_returns_json() {
    let g = parse(P4, PlapMu::Unit);
    let ps = [1.5, 2.0];
    let run = || {
        let mut json = ptr::null_mut();
        let status = unsafe { plap_certify_json(g, ps.as_ptr(), 2, 7, &mut json) };
        let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
        unsafe { plap_string_free(json) };
        (status, text)
    };
    let (status, a) = run();
    assert_eq!(status, PlapStatus::Ok);
    assert!(a.contains("\"status\": \"certified\""));
    assert_eq!(run().1, a);
    unsafe { plap_graph_free(g) };
}

#[test]
fn header_declares_the_abi() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/plap.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "plap_last_error",
        "plap_graph_parse",
        "plap_graph_new",
        "plap_graph_free",
        "plap_solve",
        "plap_spectrum_pair",
        "plap_spectrum_eigenfunction",
        "plap_nodal_counts",
        "plap_cheeger",
        "plap_sweep",
        "plap_certify_json",
        "plap_string_free",
        "PLAP_STATUS_NON_CONVERGENCE = 3",
        "typedef struct PlapGraph PlapGraph",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    // compile the header as C when a compiler is around
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
