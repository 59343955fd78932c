//! C ABI over `corrpool`.
//!
//! Conventions:
//! - every fallible function returns a [`CpStatus`]; on failure a message is
//!   available from [`cp_last_error_message`] on the same thread;
//! - results are written through out-pointers, never returned by value;
//! - handles (`CpLayerStack`, `CpModel`) are opaque, created by `*_load` /
//!   `*_from_*` functions and released with the matching `*_free`;
//! - arrays are dense row-major `double` buffers with explicit lengths;
//! - paths are NUL-terminated UTF-8.
//!
//! Panics never cross the boundary; they are reported as `CP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use corrpool::data::{load_feature_file, write_feature_file};
use corrpool::head::smooth_labels;
use corrpool::model::SavedModel;
use corrpool::pooling::{corr_pool, LayerStack};
use corrpool::Error;
use ndarray::{ArrayView1, ArrayView2, Array3};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// Argument values or buffer lengths that do not fit together.
    InvalidArgument = 2,
    Config = 3,
    Input = 4,
    /// Malformed LSF1 feature file.
    Format = 5,
    Training = 6,
    Metric = 7,
    Io = 8,
    Json = 9,
    /// A bug: Rust code panicked. The message holds the panic payload.
    Panic = 10,
}

/// Loaded multi-layer feature stack of one utterance.
pub struct CpLayerStack {
    inner: LayerStack,
}

/// Trained classification head with its class names.
pub struct CpModel {
    inner: SavedModel,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) => CpStatus::Config,
            Error::Input(_) => CpStatus::Input,
            Error::Format { .. } => CpStatus::Format,
            Error::Training { .. } => CpStatus::Training,
            Error::Metric(_) => CpStatus::Metric,
            Error::Io { .. } => CpStatus::Io,
            Error::Json(_) => CpStatus::Json,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CpStatus::InvalidArgument, msg.into())
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', "\\0")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            CpStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller contract — non-null pointers refer to live values.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(CpStatus::NullPointer, format!("{name} is NULL")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure(CpStatus::NullPointer, format!("{name} is NULL")))
    } else {
        Ok(p)
    }
}

fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure(CpStatus::NullPointer, "path is NULL".into()));
    }
    // SAFETY: caller passes a NUL-terminated string.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

/// # Safety
/// `ptr` must be valid for `len` reads (or `len == 0`).
unsafe fn input_slice<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure(CpStatus::NullPointer, format!("{name} is NULL")));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be valid for `len` writes (or `len == 0`).
unsafe fn output_slice<'a, T>(ptr: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure(CpStatus::NullPointer, format!("{name} is NULL")));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

fn checked_len(dims: &[usize]) -> Result<usize, Failure> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| invalid("dimensions overflow"))
}

fn copy_out(src: &[f64], dst: &mut [f64], what: &str) -> Result<(), Failure> {
    if dst.len() != src.len() {
        return Err(invalid(format!(
            "{what} buffer holds {} values, expected {}",
            dst.len(),
            src.len()
        )));
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL if none failed yet.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a stack from `n_layers * frames * dim` doubles laid out as
/// `[layer][frame][dim]`.
///
/// # Safety
/// `values` must be valid for that many reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_stack_from_f64(
    values: *const f64,
    n_layers: usize,
    frames: usize,
    dim: usize,
    out: *mut *mut CpLayerStack,
) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let n = checked_len(&[n_layers, frames, dim])?;
        let data = input_slice(values, n, "values")?;
        let arr = Array3::from_shape_vec((n_layers, frames, dim), data.to_vec())
            .map_err(|e| invalid(e.to_string()))?;
        let inner = LayerStack::new(arr)?;
        *out = Box::into_raw(Box::new(CpLayerStack { inner }));
        Ok(())
    })
}

/// Same as [`cp_stack_from_f64`] for single-precision input.
///
/// # Safety
/// `values` must be valid for `n_layers * frames * dim` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_stack_from_f32(
    values: *const f32,
    n_layers: usize,
    frames: usize,
    dim: usize,
    out: *mut *mut CpLayerStack,
) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let n = checked_len(&[n_layers, frames, dim])?;
        let data = input_slice(values, n, "values")?;
        let wide = data.iter().map(|&v| f64::from(v)).collect();
        let arr = Array3::from_shape_vec((n_layers, frames, dim), wide)
            .map_err(|e| invalid(e.to_string()))?;
        let inner = LayerStack::new(arr)?;
        *out = Box::into_raw(Box::new(CpLayerStack { inner }));
        Ok(())
    })
}

/// Reads an LSF1 feature file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_stack_load(path: *const c_char, out: *mut *mut CpLayerStack) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = load_feature_file(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(CpLayerStack { inner }));
        Ok(())
    })
}

/// Writes the stack as an LSF1 file (values are narrowed to f32).
///
/// # Safety
/// `stack` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cp_stack_write(stack: *const CpLayerStack, path: *const c_char) -> CpStatus {
    guard(|| {
        let stack = non_null(stack, "stack")?;
        write_feature_file(path_arg(path)?, &stack.inner)?;
        Ok(())
    })
}

/// Dimensions of a stack; any out-pointer may be NULL.
///
/// # Safety
/// `stack` must come from this library; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_stack_dims(
    stack: *const CpLayerStack,
    n_layers: *mut usize,
    frames: *mut usize,
    dim: *mut usize,
) -> CpStatus {
    guard(|| {
        let s = &non_null(stack, "stack")?.inner;
        for (p, v) in [(n_layers, s.n_layers()), (frames, s.frames()), (dim, s.dim())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Releases a stack. NULL is ignored.
///
/// # Safety
/// `stack` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_stack_free(stack: *mut CpLayerStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

/// Loads a `model.json` written by `corrpool train`.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_model_load(path: *const c_char, out: *mut *mut CpModel) -> CpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = SavedModel::load(path_arg(path)?)?;
        let names = inner
            .class_names
            .iter()
            .map(|n| CString::new(n.as_str()).map_err(|_| invalid("class name contains NUL")))
            .collect::<Result<_, _>>()?;
        *out = Box::into_raw(Box::new(CpModel { inner, names }));
        Ok(())
    })
}

/// Number of output classes, or 0 for a NULL model.
///
/// # Safety
/// `model` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cp_model_num_classes(model: *const CpModel) -> usize {
    model.as_ref().map_or(0, |m| m.names.len())
}

/// Name of class `k`, or NULL when out of range. Owned by the model.
///
/// # Safety
/// `model` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cp_model_class_name(model: *const CpModel, k: usize) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.names.get(k))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Evaluation-mode logits for one utterance into `logits[0..len]`, where
/// `len` must equal the class count. `predicted` (optional) receives the argmax.
///
/// # Safety
/// Handles must come from this library; `logits` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cp_model_predict(
    model: *const CpModel,
    stack: *const CpLayerStack,
    logits: *mut f64,
    len: usize,
    predicted: *mut usize,
) -> CpStatus {
    guard(|| {
        let m = non_null(model, "model")?;
        let s = non_null(stack, "stack")?;
        let out = output_slice(logits, len, "logits")?;
        let z = m.inner.params.logits(&s.inner)?;
        copy_out(z.as_slice().expect("contiguous logits"), out, "logits")?;
        if !predicted.is_null() {
            *predicted = corrpool::head::predict(z.view());
        }
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_model_free(model: *mut CpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Length of the correlation embedding for `dim` channels: `dim (dim - 1) / 2`.
#[no_mangle]
pub extern "C" fn cp_corr_pool_len(dim: usize) -> usize {
    dim * dim.saturating_sub(1) / 2
}

/// Correlation pooling of a `frames x dim` row-major sequence: the strict
/// upper triangle of the channel correlation matrix, row by row.
///
/// # Safety
/// `seq` must be valid for `frames * dim` reads, `out` for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn cp_corr_pool(
    seq: *const f64,
    frames: usize,
    dim: usize,
    epsilon: f64,
    out: *mut f64,
    out_len: usize,
) -> CpStatus {
    guard(|| {
        let n = checked_len(&[frames, dim])?;
        let data = input_slice(seq, n, "seq")?;
        let view = ArrayView2::from_shape((frames, dim), data).map_err(|e| invalid(e.to_string()))?;
        let emb = corr_pool(view, epsilon)?;
        let dst = output_slice(out, out_len, "out")?;
        copy_out(&emb.values.to_vec(), dst, "out")
    })
}

/// Label smoothing `y (1 - p_l) + p_l / K` of a `classes`-long target into `out`.
///
/// # Safety
/// `target` and `out` must each be valid for `classes` elements.
#[no_mangle]
pub unsafe extern "C" fn cp_smooth_labels(
    target: *const f64,
    classes: usize,
    p_l: f64,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        let y = input_slice(target, classes, "target")?;
        let smoothed = smooth_labels(ArrayView1::from(y), p_l)?;
        let dst = output_slice(out, classes, "out")?;
        copy_out(&smoothed.probs.to_vec(), dst, "out")
    })
}
