//! C ABI over `xaitax`.
//!
//! Every fallible function returns an [`XtaxStatus`] and writes its result
//! through an out pointer. On failure the message is available from
//! [`xtax_last_error`] on the same thread. Strings handed out must be freed
//! with [`xtax_string_free`], models with [`xtax_svm_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xaitax::data::iris;
use xaitax::models::extraction::extract_rules_matrix;
use xaitax::models::svm::{train_svm, train_svm_matrix, SvmConfig, SvmModel};
use xaitax::models::{OutputKind, PredictFunction};
use xaitax::shapley::{exact_shapley, kernel_shap, BackgroundSet, Budget, KernelShapConfig};
use xaitax::taxonomy::{self, ruleset_complexity, Aggregation, DeclineFamily, UnderstandabilityParams};
use xaitax::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XtaxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    OutOfRange = 4,
    Empty = 5,
    Dimension = 6,
    TooManyFeatures = 7,
    RankDeficient = 8,
    NotConverged = 9,
    Data = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XtaxFamily {
    Gaussian = 0,
    Sht = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XtaxAggregation {
    Average = 0,
    Sum = 1,
}

/// Single-output model: `row` has `len` entries.
pub type XtaxModelFn = Option<unsafe extern "C" fn(row: *const f64, len: usize, user_data: *mut c_void) -> f64>;

/// Trained SVM classifier.
pub struct XtaxSvm(SvmModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> XtaxStatus {
    match e {
        Error::InvalidArgument(_) => XtaxStatus::InvalidArgument,
        Error::OutOfRange { .. } => XtaxStatus::OutOfRange,
        Error::Empty(_) => XtaxStatus::Empty,
        Error::Dimension { .. } => XtaxStatus::Dimension,
        Error::TooManyFeatures { .. } => XtaxStatus::TooManyFeatures,
        Error::RankDeficient { .. } => XtaxStatus::RankDeficient,
        Error::NotConverged { .. } => XtaxStatus::NotConverged,
        Error::Io(_) => XtaxStatus::Io,
        Error::Stage { source, .. } => status_of(source),
        _ => XtaxStatus::Data,
    }
}

enum Fail {
    Null(&'static str),
    Utf8,
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> XtaxStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => XtaxStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            XtaxStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string is not valid UTF-8".into());
            XtaxStatus::InvalidUtf8
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(format!("{}: {e}", e.kind()));
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside xaitax".into());
            XtaxStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn rows(p: *const f64, n_rows: usize, n_cols: usize, what: &'static str) -> Result<Vec<Vec<f64>>, Fail> {
    let flat = slice(p, n_rows * n_cols, what)?;
    Ok(flat.chunks(n_cols.max(1)).take(n_rows).map(<[f64]>::to_vec).collect())
}

unsafe fn handle<'a>(p: *const XtaxSvm) -> Result<&'a SvmModel, Fail> {
    p.as_ref().map(|s| &s.0).ok_or(Fail::Null("svm"))
}

fn to_family(f: XtaxFamily) -> DeclineFamily {
    match f {
        XtaxFamily::Gaussian => DeclineFamily::Gaussian,
        XtaxFamily::Sht => DeclineFamily::Sht,
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library; valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn xtax_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn xtax_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn xtax_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_total_two(e1: f64, e2: f64, result: *mut f64) -> XtaxStatus {
    guard(|| {
        *out(result, "result")? = taxonomy::total_two(e1, e2)?;
        Ok(())
    })
}

/// # Safety
/// `values` must point to `len` doubles; `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_total_explainability(values: *const f64, len: usize, result: *mut f64) -> XtaxStatus {
    guard(|| {
        let v = slice(values, len, "values")?;
        *out(result, "result")? = taxonomy::total_explainability(v)?;
        Ok(())
    })
}

/// # Safety
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_understandability(
    omega: f64,
    omega_b: f64,
    decline: XtaxFamily,
    result: *mut f64,
) -> XtaxStatus {
    guard(|| {
        let p = UnderstandabilityParams::new(omega_b, to_family(decline))?;
        *out(result, "result")? = taxonomy::understandability(omega, &p)?;
        Ok(())
    })
}

/// `E = I * C * U(omega)`.
///
/// # Safety
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_explainability(
    interpretability: f64,
    completeness: f64,
    omega: f64,
    omega_b: f64,
    decline: XtaxFamily,
    result: *mut f64,
) -> XtaxStatus {
    guard(|| {
        let p = UnderstandabilityParams::new(omega_b, to_family(decline))?;
        *out(result, "result")? = taxonomy::explainability(interpretability, completeness, omega, &p)?.explainability;
        Ok(())
    })
}

/// Train the default RBF SVM on the bundled Iris table.
///
/// # Safety
/// `svm_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_train_iris(svm_out: *mut *mut XtaxSvm) -> XtaxStatus {
    guard(|| {
        let slot = out(svm_out, "svm_out")?;
        let data = iris::load()?;
        let model = train_svm(&data, iris::LABEL, &SvmConfig::default())?;
        *slot = Box::into_raw(Box::new(XtaxSvm(model)));
        Ok(())
    })
}

/// Train an RBF SVM on a row-major `n_rows x n_cols` matrix with class
/// indices `labels` (`0..n_classes`).
///
/// # Safety
/// `x` must hold `n_rows * n_cols` doubles, `labels` `n_rows` entries;
/// `svm_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_train(
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    labels: *const u32,
    n_classes: usize,
    c: f64,
    svm_out: *mut *mut XtaxSvm,
) -> XtaxStatus {
    guard(|| {
        let slot = out(svm_out, "svm_out")?;
        let x = rows(x, n_rows, n_cols, "x")?;
        let labels: Vec<usize> = slice(labels, n_rows, "labels")?.iter().map(|&l| l as usize).collect();
        if labels.iter().any(|&l| l >= n_classes) {
            return Err(Error::InvalidArgument("label outside 0..n_classes".into()).into());
        }
        let classes = (0..n_classes).map(|k| k.to_string()).collect();
        let names = (0..n_cols).map(|j| format!("x{j}")).collect();
        let config = SvmConfig {
            c,
            ..SvmConfig::default()
        };
        let model = train_svm_matrix(&x, &labels, classes, names, &config)?;
        *slot = Box::into_raw(Box::new(XtaxSvm(model)));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `svm_out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_from_json(json: *const c_char, svm_out: *mut *mut XtaxSvm) -> XtaxStatus {
    guard(|| {
        let slot = out(svm_out, "svm_out")?;
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| Fail::Utf8)?;
        *slot = Box::into_raw(Box::new(XtaxSvm(SvmModel::from_json(text)?)));
        Ok(())
    })
}

/// # Safety
/// `svm` must be a live handle; `json_out` valid for writes. Free the
/// string with [`xtax_string_free`].
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_to_json(svm: *const XtaxSvm, json_out: *mut *mut c_char) -> XtaxStatus {
    guard(|| {
        let slot = out(json_out, "json_out")?;
        *slot = into_c_string(handle(svm)?.to_json()?);
        Ok(())
    })
}

/// # Safety
/// `svm` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_free(svm: *mut XtaxSvm) {
    if !svm.is_null() {
        drop(Box::from_raw(svm));
    }
}

/// # Safety
/// `svm` must be a live handle; out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_shape(
    svm: *const XtaxSvm,
    n_features: *mut usize,
    n_outputs: *mut usize,
) -> XtaxStatus {
    guard(|| {
        let m = handle(svm)?;
        *out(n_features, "n_features")? = m.n_features();
        *out(n_outputs, "n_outputs")? = m.n_outputs();
        Ok(())
    })
}

/// Decision values for one row: `n_outputs` margins.
///
/// # Safety
/// `row` must hold `len` doubles, `values` `values_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_decision(
    svm: *const XtaxSvm,
    row: *const f64,
    len: usize,
    values: *mut f64,
    values_len: usize,
) -> XtaxStatus {
    guard(|| {
        let m = handle(svm)?;
        check_len(m.n_features(), len, "row")?;
        check_len(m.n_outputs(), values_len, "values")?;
        let row = slice(row, len, "row")?;
        if values.is_null() {
            return Err(Fail::Null("values"));
        }
        let dst = std::slice::from_raw_parts_mut(values, values_len);
        m.predict_into(row, dst);
        Ok(())
    })
}

/// # Safety
/// `row` must hold `len` doubles; `class_out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_predict_class(
    svm: *const XtaxSvm,
    row: *const f64,
    len: usize,
    class_out: *mut usize,
) -> XtaxStatus {
    guard(|| {
        let m = handle(svm)?;
        check_len(m.n_features(), len, "row")?;
        let row = slice(row, len, "row")?;
        *out(class_out, "class_out")? = m.predict_class(row);
        Ok(())
    })
}

/// Complexity of the SVM+prototype rules extracted against the given
/// training data.
///
/// # Safety
/// `x` must hold `n_rows * n_features` doubles, `labels` `n_rows` entries;
/// the out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xtax_svm_rule_complexity(
    svm: *const XtaxSvm,
    x: *const f64,
    n_rows: usize,
    labels: *const u32,
    prototypes_per_class: usize,
    aggregation: XtaxAggregation,
    n_rules: *mut usize,
    complexity: *mut f64,
) -> XtaxStatus {
    guard(|| {
        let m = handle(svm)?;
        let x = rows(x, n_rows, m.n_features(), "x")?;
        let labels: Vec<usize> = slice(labels, n_rows, "labels")?.iter().map(|&l| l as usize).collect();
        let ex = extract_rules_matrix(m, &x, &labels, prototypes_per_class)?;
        let agg = match aggregation {
            XtaxAggregation::Average => Aggregation::Average,
            XtaxAggregation::Sum => Aggregation::Sum,
        };
        let set = ex.rule_set(&m.feature_names, agg)?;
        *out(n_rules, "n_rules")? = set.len();
        *out(complexity, "complexity")? = ruleset_complexity(&set)?;
        Ok(())
    })
}

fn check_len(expected: usize, actual: usize, context: &'static str) -> Result<(), Fail> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            actual,
            context,
        }
        .into())
    }
}

struct Callback {
    f: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    user_data: *mut c_void,
    arity: usize,
}

// Only ever called from the thread that entered the library: `concurrent`
// is false.
unsafe impl Sync for Callback {}

impl PredictFunction for Callback {
    fn arity(&self) -> usize {
        self.arity
    }
    fn output_kind(&self) -> OutputKind {
        OutputKind::Margin
    }
    fn predict_into(&self, row: &[f64], out: &mut [f64]) {
        out[0] = unsafe { (self.f)(row.as_ptr(), row.len(), self.user_data) };
    }
    fn concurrent(&self) -> bool {
        false
    }
}

struct Shap<'a> {
    model: Callback,
    instance: &'a [f64],
    background: BackgroundSet,
}

unsafe fn shap_inputs<'a>(
    model: XtaxModelFn,
    user_data: *mut c_void,
    instance: *const f64,
    arity: usize,
    background: *const f64,
    n_background: usize,
    phi_len: usize,
) -> Result<Shap<'a>, Fail> {
    let f = model.ok_or(Fail::Null("model"))?;
    check_len(arity, phi_len, "phi")?;
    let instance = slice(instance, arity, "instance")?;
    let background = BackgroundSet::unnamed(rows(background, n_background, arity, "background")?)?;
    Ok(Shap {
        model: Callback { f, user_data, arity },
        instance,
        background,
    })
}

unsafe fn write_phi(phi: *mut f64, phi0: *mut f64, values: &[f64], base: f64) -> Result<(), Fail> {
    if phi.is_null() {
        return Err(Fail::Null("phi"));
    }
    std::slice::from_raw_parts_mut(phi, values.len()).copy_from_slice(values);
    if !phi0.is_null() {
        *phi0 = base;
    }
    Ok(())
}

/// Exact Shapley values of a callback model (at most 15 features).
/// `background` is row-major `n_background x arity`; `phi0` may be null.
///
/// # Safety
/// Pointers must match the given lengths; `model` is called on this thread
/// only, with `user_data` passed through.
#[no_mangle]
pub unsafe extern "C" fn xtax_shapley_exact(
    model: XtaxModelFn,
    user_data: *mut c_void,
    instance: *const f64,
    arity: usize,
    background: *const f64,
    n_background: usize,
    phi: *mut f64,
    phi_len: usize,
    phi0: *mut f64,
) -> XtaxStatus {
    guard(|| {
        let s = shap_inputs(model, user_data, instance, arity, background, n_background, phi_len)?;
        let a = exact_shapley(&s.model, s.instance, &s.background)?;
        write_phi(phi, phi0, &a.phi, a.phi0)
    })
}

/// KernelSHAP of a callback model. `budget == 0` enumerates every coalition.
///
/// # Safety
/// As for [`xtax_shapley_exact`].
#[no_mangle]
pub unsafe extern "C" fn xtax_shapley_kernel(
    model: XtaxModelFn,
    user_data: *mut c_void,
    instance: *const f64,
    arity: usize,
    background: *const f64,
    n_background: usize,
    budget: usize,
    seed: u64,
    phi: *mut f64,
    phi_len: usize,
    phi0: *mut f64,
) -> XtaxStatus {
    guard(|| {
        let s = shap_inputs(model, user_data, instance, arity, background, n_background, phi_len)?;
        let config = KernelShapConfig {
            budget: if budget == 0 {
                Budget::Full
            } else {
                Budget::Samples(budget)
            },
            seed,
            ..KernelShapConfig::default()
        };
        let a = kernel_shap(&s.model, s.instance, &s.background, &config)?;
        write_phi(phi, phi0, &a.phi, a.phi0)
    })
}
