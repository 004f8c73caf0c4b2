//! C ABI over `opmodel`.
//!
//! Every function returns an [`OpmStatus`]; on failure the message is
//! available from [`opm_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings returned
//! through `out` parameters are released with [`opm_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use opmodel::config::{model_context, ESpec, RunConfig, System};
use opmodel::dtree::{DirectedTreeSystem, EMode};
use opmodel::laurent::ModelContext;
use opmodel::scalar::Scalar;
use opmodel::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Spec = 3,
    UnknownKey = 4,
    NotLeftInvertible = 5,
    Hypothesis = 6,
    Domain = 7,
    NonCommuting = 8,
    Config = 9,
    Numeric = 10,
    Panic = 11,
    Other = 12,
}

impl From<&Error> for OpmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Spec { .. }
            | Error::CyclicParent(_)
            | Error::LeafWithoutExtension(_)
            | Error::ZeroWeight(_)
            | Error::DegenerateBranching(_) => OpmStatus::Spec,
            Error::UnknownKey(_) | Error::NotDescendant { .. } => OpmStatus::UnknownKey,
            Error::NotLeftInvertible { .. } => OpmStatus::NotLeftInvertible,
            Error::Hypothesis { .. } => OpmStatus::Hypothesis,
            Error::Domain { .. } | Error::NotInRange { .. } => OpmStatus::Domain,
            Error::NonCommuting { .. } => OpmStatus::NonCommuting,
            Error::Config(_) => OpmStatus::Config,
            Error::Singular | Error::DenseTooLarge(_) | Error::SupportBudget { .. } => OpmStatus::Numeric,
            _ => OpmStatus::Other,
        }
    }
}

/// Which subspace a model is built on.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpmEMode {
    Kernel = 0,
    KernelOmega = 1,
}

/// A weighted shift on a directed tree.
pub struct OpmTree {
    inner: DirectedTreeSystem,
}

/// A Laurent model of a tree shift.
pub struct OpmModel {
    system: System,
    ctx: ModelContext,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(OpmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(OpmStatus::from(&e), format!("{} [{}]", e, e.code()))
    }
}

fn guard<F>(f: F) -> OpmStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OpmStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            OpmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(OpmStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(OpmStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(OpmStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(OpmStatus::NullPointer, format!("`{name}` is null")));
    }
    out.write(value);
    Ok(())
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn opm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn opm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opm_tree_from_json(json: *const c_char, out: *mut *mut OpmTree) -> OpmStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let inner = DirectedTreeSystem::from_json(text)?;
        write(out, Box::into_raw(Box::new(OpmTree { inner })), "out")
    })
}

/// # Safety
/// `tree` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opm_tree_free(tree: *mut OpmTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// `d(v) = Σ |λ_c|²` over the children of `key`.
///
/// # Safety
/// Pointers must be valid; `key` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn opm_tree_gram_diagonal(tree: *const OpmTree, key: *const c_char, out: *mut f64) -> OpmStatus {
    guard(|| {
        let t = &ref_arg(tree, "tree")?.inner;
        let k = t.parse_key(str_arg(key, "key")?)?;
        write(out, t.gram_diagonal(&k)?, "out")
    })
}

/// Scans the Gram diagonal over `depth` levels around the base vertex.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn opm_tree_check_left_invertible(
    tree: *const OpmTree,
    depth: usize,
    ok: *mut bool,
    inf_d: *mut f64,
    sup_d: *mut f64,
) -> OpmStatus {
    guard(|| {
        let li = ref_arg(tree, "tree")?.inner.check_left_invertible(depth);
        write(ok, li.ok, "ok")?;
        write(inf_d, li.inf_d, "inf_d")?;
        write(sup_d, li.sup_d, "sup_d")
    })
}

/// The tree carrying the Cauchy dual weights; free it separately.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn opm_tree_cauchy_dual(tree: *const OpmTree, out: *mut *mut OpmTree) -> OpmStatus {
    guard(|| {
        let inner = ref_arg(tree, "tree")?.inner.cauchy_dual_shift()?;
        write(out, Box::into_raw(Box::new(OpmTree { inner })), "out")
    })
}

/// Weight of `key`; `0` for the root of a rooted tree.
///
/// # Safety
/// Pointers must be valid; `key` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn opm_tree_weight(
    tree: *const OpmTree,
    key: *const c_char,
    re: *mut f64,
    im: *mut f64,
) -> OpmStatus {
    guard(|| {
        let t = &ref_arg(tree, "tree")?.inner;
        let w = t.weight(&t.parse_key(str_arg(key, "key")?)?)?.unwrap_or_default();
        write(re, w.re, "re")?;
        write(im, w.im, "im")
    })
}

/// Product of the weights on the path from `u` down to `v`.
///
/// # Safety
/// Pointers must be valid; keys nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn opm_tree_path_weight(
    tree: *const OpmTree,
    u: *const c_char,
    v: *const c_char,
    re: *mut f64,
    im: *mut f64,
) -> OpmStatus {
    guard(|| {
        let t = &ref_arg(tree, "tree")?.inner;
        let u = t.parse_key(str_arg(u, "u")?)?;
        let v = t.parse_key(str_arg(v, "v")?)?;
        let w = t.path_weight(&u, &v)?;
        write(re, w.re, "re")?;
        write(im, w.im, "im")
    })
}

/// Builds the model on the chosen subspace; the tree handle stays owned by
/// the caller.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn opm_model_new(
    tree: *const OpmTree,
    mode: OpmEMode,
    depth: usize,
    out: *mut *mut OpmModel,
) -> OpmStatus {
    guard(|| {
        let system = System::Tree(ref_arg(tree, "tree")?.inner.clone());
        let mode = match mode {
            OpmEMode::Kernel => EMode::Kernel,
            OpmEMode::KernelOmega => EMode::KernelOmega,
        };
        let ctx = model_context(&system, &ESpec::Mode(mode), depth, opmodel::laurent::DEFAULT_TOL)?;
        write(out, Box::into_raw(Box::new(OpmModel { system, ctx })), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opm_model_free(model: *mut OpmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn opm_model_dim_e(model: *const OpmModel, out: *mut usize) -> OpmStatus {
    guard(|| write(out, ref_arg(model, "model")?.ctx.dim(), "out"))
}

/// Laurent window of `vector_json` (`{"key": scalar, ...}`) on
/// `[-n_minus, n_plus]`, as JSON.
///
/// # Safety
/// Pointers must be valid; the result must be released with
/// [`opm_string_free`].
#[no_mangle]
pub unsafe extern "C" fn opm_model_coeffs(
    model: *const OpmModel,
    vector_json: *const c_char,
    n_minus: usize,
    n_plus: usize,
    out: *mut *mut c_char,
) -> OpmStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let entries: BTreeMap<String, Scalar> =
            serde_json::from_str(str_arg(vector_json, "vector_json")?).map_err(|e| Error::Spec {
                field: "vector".into(),
                message: e.to_string(),
            })?;
        let x = m.system.parse_vector(&entries)?;
        let w = m.ctx.analytic_model(&x, n_minus, n_plus)?;
        write(out, to_c(w.to_json().to_string()), "out")
    })
}

/// Runs the suites of a run configuration file and returns the JSON report.
/// Failing suites are reported in the JSON, not through the status.
///
/// # Safety
/// Pointers must be valid; the result must be released with
/// [`opm_string_free`].
#[no_mangle]
pub unsafe extern "C" fn opm_verify_json(config_path: *const c_char, out: *mut *mut c_char) -> OpmStatus {
    guard(|| {
        let cfg = RunConfig::from_path(Path::new(str_arg(config_path, "config_path")?))?;
        cfg.validate()?;
        let report = opmodel::suites::run_config(&cfg)?;
        write(out, to_c(serde_json::to_string(&report).expect("serializable")), "out")
    })
}
