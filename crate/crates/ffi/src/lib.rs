//! C ABI over `orbicell`.
//!
//! Every entry point returns an [`OcStatus`]. On anything other than
//! `OC_STATUS_OK` a message is kept per thread and can be read with
//! [`oc_last_error`]. Strings handed out by this library must be released
//! with [`oc_string_free`]; presentations with [`oc_presentation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use orbicell::cellular::{self, Construction};
use orbicell::orbit::{Graph, OrbitError};
use orbicell::poset::Poset;
use orbicell::ring::{self, RingError, RingPresentation};
use orbicell::sheaf::Copresheaf;
use orbicell::tor::{Mode, TorError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcStatus {
    Ok = 0,
    /// A check failed or no cellular form exists.
    VerificationFailed = 1,
    InvalidInput = 2,
    /// Parameters outside what is implemented (m = 1 rings, oversized oracles).
    Unsupported = 3,
    NullPointer = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcMode {
    Complex = 0,
    Real = 1,
}

impl From<OcMode> for Mode {
    fn from(m: OcMode) -> Mode {
        match m {
            OcMode::Complex => Mode::Complex,
            OcMode::Real => Mode::Real,
        }
    }
}

/// Opaque handle to a computed cohomology presentation.
pub struct OcPresentation {
    inner: RingPresentation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type Outcome<T> = Result<T, (OcStatus, String)>;

fn ring_status(e: RingError) -> (OcStatus, String) {
    let s = match &e {
        RingError::UnsupportedM(_) => OcStatus::Unsupported,
        RingError::UnsupportedK(_) => OcStatus::InvalidInput,
        RingError::Orbit(OrbitError::TooLarge { .. }) => OcStatus::Unsupported,
        RingError::Orbit(OrbitError::InvalidGraph(_)) => OcStatus::InvalidInput,
        RingError::Tor(TorError::OracleTooLarge { .. } | TorError::ComplexTooLarge { .. }) => OcStatus::Unsupported,
        _ => OcStatus::Internal,
    };
    (s, e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> (OcStatus, String) {
    (OcStatus::InvalidInput, e.to_string())
}

/// Run `f`, record its error, and turn panics into `Internal`.
fn guard(f: impl FnOnce() -> Outcome<OcStatus>) -> OcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            OcStatus::Internal
        }
    }
}

unsafe fn graph_from_raw(n_vertices: usize, edges: *const u32, n_edges: usize) -> Outcome<Graph> {
    if edges.is_null() && n_edges > 0 {
        return Err((OcStatus::NullPointer, "edges is null".into()));
    }
    let flat: &[u32] = if n_edges == 0 { &[] } else { std::slice::from_raw_parts(edges, 2 * n_edges) };
    let pairs: Vec<(usize, usize)> = flat.chunks(2).map(|p| (p[0] as usize, p[1] as usize)).collect();
    Graph::new(n_vertices, &pairs).map_err(invalid)
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Outcome<&'a str> {
    if s.is_null() {
        return Err((OcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|e| invalid(format!("{what}: {e}")))
}

fn give_string(s: String, out: *mut *mut c_char) -> Outcome<()> {
    let c = CString::new(s).map_err(|e| (OcStatus::Internal, e.to_string()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

fn check_k_mode(k: u32, m: u32) -> Outcome<()> {
    if k == 0 || m == 0 {
        return Err(invalid("k and m must be positive"));
    }
    Ok(())
}

/// Build the presentation for a graph on `n_vertices` vertices with
/// `n_edges` edges given as 1-based pairs in `edges[2*i], edges[2*i+1]`.
/// With `with_products` set, `m` must exceed 1.
///
/// # Safety
/// `edges` must point to `2 * n_edges` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_presentation_new(
    n_vertices: usize,
    edges: *const u32,
    n_edges: usize,
    k: u32,
    m: u32,
    mode: OcMode,
    with_products: bool,
    out: *mut *mut OcPresentation,
) -> OcStatus {
    guard(|| {
        if out.is_null() {
            return Err((OcStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        check_k_mode(k, m)?;
        let g = graph_from_raw(n_vertices, edges, n_edges)?;
        let r = RingPresentation::build(&g, k, m as usize, mode.into(), with_products).map_err(ring_status)?;
        *out = Box::into_raw(Box::new(OcPresentation { inner: r }));
        Ok(OcStatus::Ok)
    })
}

/// # Safety
/// `p` must come from [`oc_presentation_new`] and not be freed already.
#[no_mangle]
pub unsafe extern "C" fn oc_presentation_free(p: *mut OcPresentation) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of additive basis elements.
///
/// # Safety
/// `p` must be a live presentation and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn oc_presentation_len(p: *const OcPresentation, len: *mut usize) -> OcStatus {
    guard(|| {
        if p.is_null() || len.is_null() {
            return Err((OcStatus::NullPointer, "null argument".into()));
        }
        *len = (*p).inner.len();
        Ok(OcStatus::Ok)
    })
}

/// Betti numbers by degree. Writes at most `cap` values to `buf` and the
/// full length to `len`; call with `cap = 0` to size the buffer.
///
/// # Safety
/// `buf` must hold `cap` values; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_presentation_poincare(
    p: *const OcPresentation,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> OcStatus {
    guard(|| {
        if p.is_null() || len.is_null() || (buf.is_null() && cap > 0) {
            return Err((OcStatus::NullPointer, "null argument".into()));
        }
        let v = (*p).inner.poincare();
        *len = v.len();
        for (i, x) in v.iter().take(cap).enumerate() {
            *buf.add(i) = *x;
        }
        Ok(OcStatus::Ok)
    })
}

/// Degree of basis element `i`.
///
/// # Safety
/// `p` must be a live presentation and `degree` writable.
#[no_mangle]
pub unsafe extern "C" fn oc_presentation_degree(p: *const OcPresentation, i: usize, degree: *mut usize) -> OcStatus {
    guard(|| {
        if p.is_null() || degree.is_null() {
            return Err((OcStatus::NullPointer, "null argument".into()));
        }
        let b = (*p).inner.basis().get(i).ok_or_else(|| invalid(format!("index {i} out of range")))?;
        *degree = b.degree;
        Ok(OcStatus::Ok)
    })
}

/// Product of basis elements `i` and `j` as sparse terms
/// `coeffs[t] * e_{indices[t]}`. Same sizing protocol as
/// [`oc_presentation_poincare`]. Coefficients beyond 64 bits are reported
/// as `Internal`.
///
/// # Safety
/// `coeffs` and `indices` must hold `cap` values; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_presentation_product(
    p: *const OcPresentation,
    i: usize,
    j: usize,
    coeffs: *mut i64,
    indices: *mut usize,
    cap: usize,
    len: *mut usize,
) -> OcStatus {
    guard(|| {
        if p.is_null() || len.is_null() || ((coeffs.is_null() || indices.is_null()) && cap > 0) {
            return Err((OcStatus::NullPointer, "null argument".into()));
        }
        let r = &(*p).inner;
        if !r.has_products() {
            return Err((OcStatus::Unsupported, "presentation was built without products".into()));
        }
        if i >= r.len() || j >= r.len() {
            return Err(invalid("index out of range"));
        }
        let c = r.product(i, j);
        let terms = ring::small(&c);
        if terms.iter().any(|&(_, v)| v == i64::MIN || v == i64::MAX) {
            return Err((OcStatus::Internal, "coefficient does not fit in 64 bits".into()));
        }
        *len = terms.len();
        for (t, (idx, v)) in terms.iter().take(cap).enumerate() {
            *coeffs.add(t) = *v;
            *indices.add(t) = *idx;
        }
        Ok(OcStatus::Ok)
    })
}

/// Full presentation as JSON; free with [`oc_string_free`].
///
/// # Safety
/// `p` must be a live presentation and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oc_presentation_to_json(p: *const OcPresentation, out: *mut *mut c_char) -> OcStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return Err((OcStatus::NullPointer, "null argument".into()));
        }
        *out = ptr::null_mut();
        let r = &(*p).inner;
        let v = if r.has_products() { r.to_json() } else { r.betti_json() };
        give_string(v.to_string(), out)?;
        Ok(OcStatus::Ok)
    })
}

/// Run every oracle check that fits in `oracle_limit` poset elements.
/// Returns `VerificationFailed` if any check fails; the report (one
/// PASS/FAIL line per check) is written to `report` in both cases.
///
/// # Safety
/// As for [`oc_presentation_new`]; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_verify(
    n_vertices: usize,
    edges: *const u32,
    n_edges: usize,
    k: u32,
    m: u32,
    mode: OcMode,
    oracle_limit: usize,
    report: *mut *mut c_char,
) -> OcStatus {
    guard(|| {
        if report.is_null() {
            return Err((OcStatus::NullPointer, "report is null".into()));
        }
        *report = ptr::null_mut();
        check_k_mode(k, m)?;
        let g = graph_from_raw(n_vertices, edges, n_edges)?;
        let rep = ring::verify_full(&g, k, m as usize, mode.into(), oracle_limit).map_err(ring_status)?;
        give_string(rep.text(), report)?;
        Ok(if rep.passed() { OcStatus::Ok } else { OcStatus::VerificationFailed })
    })
}

/// Cellular form of a copresheaf on a poset, both as JSON. A null
/// `copresheaf_json` means the constant copresheaf Z. On success `out`
/// holds the form; when no form exists the status is `VerificationFailed`
/// and `out` holds the reason.
///
/// # Safety
/// Non-null strings must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_cellular_form(
    poset_json: *const c_char,
    copresheaf_json: *const c_char,
    out: *mut *mut c_char,
) -> OcStatus {
    guard(|| {
        if out.is_null() {
            return Err((OcStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let p = Arc::new(Poset::from_json_str(str_arg(poset_json, "poset_json")?).map_err(invalid)?);
        let g = if copresheaf_json.is_null() {
            Copresheaf::constant(p.clone())
        } else {
            Copresheaf::from_json_str(p.clone(), str_arg(copresheaf_json, "copresheaf_json")?).map_err(invalid)?
        };
        match cellular::construct_cellular_form(&Arc::new(g)).map_err(invalid)? {
            Construction::Cellular(form) => {
                give_string(form.to_json().to_string(), out)?;
                Ok(OcStatus::Ok)
            }
            Construction::NotCellular(nc) => {
                let msg = nc.to_string();
                give_string(msg.clone(), out)?;
                set_error(&msg);
                Ok(OcStatus::VerificationFailed)
            }
        }
    })
}

/// Message for the last failing call on this thread, or null. Owned by the
/// library and valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn oc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
