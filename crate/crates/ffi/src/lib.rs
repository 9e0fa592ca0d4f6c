//! C ABI over the `bratteli` crate.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`BratteliStatus`]; on failure the message is available from
//! [`bratteli_last_error`] until the next failing call on the same thread.
//! Strings handed out by the library are released with
//! [`bratteli_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use bratteli::group::ElementLiteral;
use bratteli::{BratteliDiagram, DiagramFile, Error, GroupElement, InvariantMeasure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BratteliStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    LevelOutOfRange = 5,
    DiagramMismatch = 6,
    Precondition = 7,
    Exhausted = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

impl From<&Error> for BratteliStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) => BratteliStatus::Parse,
            Error::LevelOutOfRange { .. } => BratteliStatus::LevelOutOfRange,
            Error::DiagramMismatch => BratteliStatus::DiagramMismatch,
            Error::Precondition(_) => BratteliStatus::Precondition,
            Error::DepthExhausted { .. } | Error::BudgetExceeded(_) | Error::NotFound(_) => BratteliStatus::Exhausted,
            _ => BratteliStatus::InvalidInput,
        }
    }
}

/// Opaque diagram handle.
pub struct BratteliDiagramHandle {
    inner: Arc<BratteliDiagram>,
}

/// Opaque invariant-measure handle.
pub struct BratteliMeasureHandle {
    inner: InvariantMeasure,
}

/// Opaque full-group element handle.
pub struct BratteliElementHandle {
    inner: GroupElement,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: BratteliStatus, msg: impl Into<String>) -> BratteliStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), BratteliStatus>>(f: F) -> BratteliStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BratteliStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(BratteliStatus::Panic, "panic inside the library"),
    }
}

fn lib_err(e: Error) -> BratteliStatus {
    let s = BratteliStatus::from(&e);
    fail(s, e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, BratteliStatus> {
    if p.is_null() {
        return Err(fail(BratteliStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(BratteliStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, BratteliStatus> {
    p.as_ref().ok_or_else(|| fail(BratteliStatus::NullPointer, "null handle"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), BratteliStatus> {
    if out.is_null() {
        return Err(fail(BratteliStatus::NullPointer, "null output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_scalar<T>(out: *mut T, value: T) -> Result<(), BratteliStatus> {
    if out.is_null() {
        return Err(fail(BratteliStatus::NullPointer, "null output pointer"));
    }
    *out = value;
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Message of the last failing call on this thread, or NULL. The pointer
/// stays valid until the next failing call.
#[no_mangle]
pub extern "C" fn bratteli_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bratteli_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The `k`-odometer: one vertex per level, `k` edges between levels.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bratteli_diagram_odometer(k: u64, out: *mut *mut BratteliDiagramHandle) -> BratteliStatus {
    guard(|| {
        if k < 2 {
            return Err(fail(BratteliStatus::InvalidInput, "odometer base must be at least 2"));
        }
        put(out, BratteliDiagramHandle { inner: Arc::new(BratteliDiagram::odometer(k)) })
    })
}

/// Stationary diagram with incidence matrix `[[1, 1], [1, 0]]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bratteli_diagram_fibonacci(out: *mut *mut BratteliDiagramHandle) -> BratteliStatus {
    guard(|| put(out, BratteliDiagramHandle { inner: Arc::new(BratteliDiagram::fibonacci()) }))
}

/// Diagram from its JSON file format (`levels`, `edges`, `stationary`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bratteli_diagram_from_json(json: *const c_char, out: *mut *mut BratteliDiagramHandle) -> BratteliStatus {
    guard(|| {
        let text = str_arg(json)?;
        let file: DiagramFile = serde_json::from_str(text).map_err(|e| fail(BratteliStatus::Parse, e.to_string()))?;
        let d = file.build().map_err(lib_err)?;
        put(out, BratteliDiagramHandle { inner: Arc::new(d) })
    })
}

/// # Safety
/// `d` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bratteli_diagram_free(d: *mut BratteliDiagramHandle) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of vertices at `level`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_diagram_num_vertices(d: *const BratteliDiagramHandle, level: usize, out: *mut usize) -> BratteliStatus {
    guard(|| {
        let n = handle(d)?.inner.num_vertices(level).map_err(lib_err)?;
        put_scalar(out, n)
    })
}

/// Writes the path counts `h_v` at `level` into `buf`. `len` is the buffer
/// capacity; the number of vertices is stored in `out_len` even when the
/// buffer is too small.
///
/// # Safety
/// `buf` must hold `len` values; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_diagram_path_counts(
    d: *const BratteliDiagramHandle,
    level: usize,
    buf: *mut u64,
    len: usize,
    out_len: *mut usize,
) -> BratteliStatus {
    guard(|| {
        let h = handle(d)?.inner.path_counts(level).map_err(lib_err)?;
        put_scalar(out_len, h.len())?;
        if len < h.len() {
            return Err(fail(BratteliStatus::BufferTooSmall, format!("need {} slots", h.len())));
        }
        if buf.is_null() {
            return Err(fail(BratteliStatus::NullPointer, "null buffer"));
        }
        std::slice::from_raw_parts_mut(buf, h.len()).copy_from_slice(&h);
        Ok(())
    })
}

/// The ergodic measure of a stationary diagram with primitive tail.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_measure_ergodic(d: *const BratteliDiagramHandle, out: *mut *mut BratteliMeasureHandle) -> BratteliStatus {
    guard(|| {
        let mu = InvariantMeasure::stationary_ergodic(&handle(d)?.inner).map_err(lib_err)?;
        put(out, BratteliMeasureHandle { inner: mu })
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bratteli_measure_free(m: *mut BratteliMeasureHandle) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Weight `p_v` of one cylinder into `vertex` at `level`, as a double.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_measure_weight(m: *const BratteliMeasureHandle, level: usize, vertex: usize, out: *mut f64) -> BratteliStatus {
    guard(|| {
        let w = handle(m)?.inner.weights(level).map_err(lib_err)?;
        let x = w.get(vertex).ok_or_else(|| fail(BratteliStatus::InvalidInput, format!("no vertex {vertex} at level {level}")))?;
        put_scalar(out, x.to_f64())
    })
}

/// Element from its JSON literal `{"level": n, "perms": {"v": [...]}}`.
///
/// # Safety
/// `json` must be NUL-terminated; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_element_from_json(
    d: *const BratteliDiagramHandle,
    json: *const c_char,
    out: *mut *mut BratteliElementHandle,
) -> BratteliStatus {
    guard(|| {
        let d = handle(d)?;
        let lit: ElementLiteral = serde_json::from_str(str_arg(json)?).map_err(|e| fail(BratteliStatus::Parse, e.to_string()))?;
        let g = GroupElement::from_literal(&d.inner, &lit).map_err(lib_err)?;
        put(out, BratteliElementHandle { inner: g })
    })
}

/// Uniformly random element of `G_level` drawn from `seed`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_element_random(
    d: *const BratteliDiagramHandle,
    level: usize,
    seed: u64,
    out: *mut *mut BratteliElementHandle,
) -> BratteliStatus {
    guard(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GroupElement::random(&handle(d)?.inner, level, &mut rng).map_err(lib_err)?;
        put(out, BratteliElementHandle { inner: g })
    })
}

/// `a ∘ b`, with `b` applied first.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_element_compose(
    a: *const BratteliElementHandle,
    b: *const BratteliElementHandle,
    out: *mut *mut BratteliElementHandle,
) -> BratteliStatus {
    guard(|| {
        let g = handle(a)?.inner.compose(&handle(b)?.inner).map_err(lib_err)?;
        put(out, BratteliElementHandle { inner: g })
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_element_inverse(a: *const BratteliElementHandle, out: *mut *mut BratteliElementHandle) -> BratteliStatus {
    guard(|| {
        let g = handle(a)?.inner.inverse();
        put(out, BratteliElementHandle { inner: g })
    })
}

/// 1 when the two elements act identically, 0 otherwise.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_element_equal(a: *const BratteliElementHandle, b: *const BratteliElementHandle, out: *mut c_int) -> BratteliStatus {
    guard(|| {
        let eq = handle(a)?.inner == handle(b)?.inner;
        put_scalar(out, c_int::from(eq))
    })
}

/// JSON literal of the element; free with [`bratteli_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_element_to_json(a: *const BratteliElementHandle, out: *mut *mut c_char) -> BratteliStatus {
    guard(|| {
        let text = serde_json::to_string(&handle(a)?.inner.to_literal()).map_err(|e| fail(BratteliStatus::Parse, e.to_string()))?;
        put_scalar(out, owned_string(text))
    })
}

/// # Safety
/// `a` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bratteli_element_free(a: *mut BratteliElementHandle) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// `μ(Fix(g))`, both as a double and as text (exact fractions stay exact).
/// `text` may be NULL; otherwise free it with [`bratteli_string_free`].
///
/// # Safety
/// Pointers other than `text` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_fix_measure(
    m: *const BratteliMeasureHandle,
    g: *const BratteliElementHandle,
    value: *mut f64,
    text: *mut *mut c_char,
) -> BratteliStatus {
    guard(|| {
        let g = handle(g)?;
        let v = handle(m)?.inner.measure_of(&g.inner.fix_set().map_err(lib_err)?).map_err(lib_err)?;
        put_scalar(value, v.to_f64())?;
        if !text.is_null() {
            *text = owned_string(v.to_string());
        }
        Ok(())
    })
}

/// Runs the command-line front end on `argv` (program name first). The
/// report goes to `report` (free with [`bratteli_string_free`]) and the
/// command's exit code to `exit_code`.
///
/// # Safety
/// `argv` must hold `argc` NUL-terminated strings; other pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn bratteli_run(argc: c_int, argv: *const *const c_char, report: *mut *mut c_char, exit_code: *mut c_int) -> BratteliStatus {
    guard(|| {
        if argv.is_null() || argc < 0 {
            return Err(fail(BratteliStatus::NullPointer, "null argv"));
        }
        let args = std::slice::from_raw_parts(argv, argc as usize)
            .iter()
            .map(|&p| str_arg(p).map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let outcome = bratteli::cli::run(args);
        put_scalar(exit_code, outcome.code)?;
        put_scalar(report, owned_string(outcome.report))
    })
}
