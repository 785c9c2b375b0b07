//! C ABI over the `morphguard` library.
//!
//! Every fallible function returns an [`MgStatus`] and writes results
//! through out-pointers. On failure the message is kept per thread and can
//! be read with [`mg_last_error_message`]. Models are opaque [`MgModel`]
//! handles released with [`mg_model_free`]. Panics never cross the
//! boundary; they surface as [`MgStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use morphguard::encoder::{init_model, load_checkpoint, save_checkpoint, DualHeadModel};
use morphguard::featviz::{confidence_ellipse, project_2d};
use morphguard::loss::{margin_adjust, margin_softmax_ce, CosineLogits};
use morphguard::metrics::{min_rmmr, mmpmr, rmmr, MorphTrial, VerificationSet};
use morphguard::{Error, ErrorClass};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    Config = 2,
    Data = 3,
    Numeric = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque model handle.
pub struct MgModel {
    inner: DualHeadModel,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MgEllipse {
    pub center_x: f64,
    pub center_y: f64,
    pub width: f64,
    pub height: f64,
    pub orientation: f64,
    /// `(width + height) / 2`.
    pub size: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MgRmmrMinimum {
    pub threshold: f64,
    pub value: f64,
    pub mmpmr: f64,
    pub fnmr: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> MgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MgStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            MgStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            match e.class() {
                ErrorClass::Config => MgStatus::Config,
                ErrorClass::Data => MgStatus::Data,
                ErrorClass::Numeric => MgStatus::Numeric,
                ErrorClass::Io => MgStatus::Io,
            }
        }
        Err(_) => {
            set_last_error("internal panic".into());
            MgStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or valid for `len` writes.
unsafe fn output<'a, T>(p: *mut T, len: usize, what: &'static str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn model_ref<'a>(m: *const MgModel) -> FfiResult<&'a DualHeadModel> {
    m.as_ref().map(|m| &m.inner).ok_or(Failure::Null("model"))
}

unsafe fn path_arg(p: *const c_char) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::Config("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn trials_from(scores: &[f64], subjects: usize) -> FfiResult<Vec<MorphTrial>> {
    if subjects == 0 {
        return Err(Error::Config("subjects per trial must be at least 1".into()).into());
    }
    Ok(scores
        .chunks(subjects)
        .enumerate()
        .map(|(i, s)| MorphTrial {
            morph_id: i as u64,
            subject_scores: s.to_vec(),
        })
        .collect())
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn mg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a freshly initialized model.
///
/// # Safety
/// `hidden_dims` must be valid for `num_hidden` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_model_new(
    input_dim: usize,
    hidden_dims: *const usize,
    num_hidden: usize,
    embedding_dim: usize,
    num_classes: usize,
    seed: u64,
    out: *mut *mut MgModel,
) -> MgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let hidden = input(hidden_dims, num_hidden, "hidden_dims")?;
        let inner = init_model(input_dim, hidden, embedding_dim, num_classes, seed)?;
        *out = Box::into_raw(Box::new(MgModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_model_load(path: *const c_char, out: *mut *mut MgModel) -> MgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = load_checkpoint(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(MgModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mg_model_save(model: *const MgModel, path: *const c_char) -> MgStatus {
    guard(|| {
        let m = model_ref(model)?;
        save_checkpoint(m, &path_arg(path)?)?;
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mg_model_free(model: *mut MgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// Each non-null out-pointer must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_model_dims(
    model: *const MgModel,
    input_dim: *mut usize,
    embedding_dim: *mut usize,
    num_classes: *mut usize,
) -> MgStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out_ref(input_dim, "input_dim")? = m.input_dim();
        *out_ref(embedding_dim, "embedding_dim")? = m.embedding_dim();
        *out_ref(num_classes, "num_classes")? = m.num_classes();
        Ok(())
    })
}

/// Writes the unit-norm embedding of `input` into `out`, which must hold
/// exactly the model's embedding dimension.
///
/// # Safety
/// `input` must be valid for `input_len` reads and `out` for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn mg_model_embed(
    model: *const MgModel,
    input_ptr: *const f64,
    input_len: usize,
    out: *mut f64,
    out_len: usize,
) -> MgStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out_len != m.embedding_dim() {
            return Err(Error::Config(format!(
                "output holds {out_len} values, embedding has {}",
                m.embedding_dim()
            ))
            .into());
        }
        let e = m.embed(input(input_ptr, input_len, "input")?)?;
        output(out, out_len, "out")?.copy_from_slice(&e);
        Ok(())
    })
}

/// `cos(clamp(acos(c) + m, 0, π))`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_margin_adjust(cos_theta: f64, m: f64, out: *mut f64) -> MgStatus {
    guard(|| {
        *out_ref(out, "out")? = margin_adjust(cos_theta, m)?;
        Ok(())
    })
}

/// Margin softmax cross-entropy over `n` cosines; `grad` receives the
/// gradient with respect to each cosine.
///
/// # Safety
/// `cosines` must be valid for `n` reads, `grad` for `n` writes, `loss` for one.
#[no_mangle]
pub unsafe extern "C" fn mg_margin_softmax_ce(
    cosines: *const f64,
    n: usize,
    target: usize,
    scale: f64,
    m: f64,
    loss: *mut f64,
    grad: *mut f64,
) -> MgStatus {
    guard(|| {
        let logits = CosineLogits::new(input(cosines, n, "cosines")?.to_vec())?;
        let (l, g) = margin_softmax_ce(&logits, target, scale, m)?;
        let loss = out_ref(loss, "loss")?;
        output(grad, n, "grad")?.copy_from_slice(&g);
        *loss = l;
        Ok(())
    })
}

/// MMPMR at `tau` over `num_trials` trials stored row-major with
/// `subjects` scores each.
///
/// # Safety
/// `scores` must be valid for `num_trials * subjects` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_mmpmr(
    scores: *const f64,
    num_trials: usize,
    subjects: usize,
    tau: f64,
    out: *mut f64,
) -> MgStatus {
    guard(|| {
        let len = num_trials
            .checked_mul(subjects)
            .ok_or_else(|| Error::Config("trial matrix too large".into()))?;
        let trials = trials_from(input(scores, len, "scores")?, subjects)?;
        *out_ref(out, "out")? = mmpmr(&trials, tau)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_rmmr(mmpmr_value: f64, fnmr_value: f64, out: *mut f64) -> MgStatus {
    guard(|| {
        *out_ref(out, "out")? = rmmr(mmpmr_value, fnmr_value)?;
        Ok(())
    })
}

/// Minimum RMMR over every observed threshold.
///
/// # Safety
/// Each array must be valid for its stated length; `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_min_rmmr(
    scores: *const f64,
    num_trials: usize,
    subjects: usize,
    genuine: *const f64,
    num_genuine: usize,
    impostor: *const f64,
    num_impostor: usize,
    out: *mut MgRmmrMinimum,
) -> MgStatus {
    guard(|| {
        let len = num_trials
            .checked_mul(subjects)
            .ok_or_else(|| Error::Config("trial matrix too large".into()))?;
        let trials = trials_from(input(scores, len, "scores")?, subjects)?;
        let set = VerificationSet {
            genuine: input(genuine, num_genuine, "genuine")?.to_vec(),
            impostor: input(impostor, num_impostor, "impostor")?.to_vec(),
        };
        let r = min_rmmr(&trials, &set)?;
        *out_ref(out, "out")? = MgRmmrMinimum {
            threshold: r.threshold,
            value: r.value,
            mmpmr: r.mmpmr,
            fnmr: r.fnmr,
        };
        Ok(())
    })
}

/// Averages even- and odd-indexed coordinates into `out[0]`, `out[1]`.
///
/// # Safety
/// `feature` must be valid for `len` reads and `out` for two writes.
#[no_mangle]
pub unsafe extern "C" fn mg_project_2d(feature: *const f64, len: usize, out: *mut f64) -> MgStatus {
    guard(|| {
        let p = project_2d(input(feature, len, "feature")?)?;
        output(out, 2, "out")?.copy_from_slice(&p);
        Ok(())
    })
}

/// Confidence ellipse of `n` points given as interleaved `x, y` pairs.
///
/// # Safety
/// `xy` must be valid for `2 * n` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn mg_confidence_ellipse(xy: *const f64, n: usize, level: f64, out: *mut MgEllipse) -> MgStatus {
    guard(|| {
        let len = n
            .checked_mul(2)
            .ok_or_else(|| Error::Config("too many points".into()))?;
        let points: Vec<[f64; 2]> = input(xy, len, "xy")?.chunks(2).map(|c| [c[0], c[1]]).collect();
        let e = confidence_ellipse(&points, level)?;
        *out_ref(out, "out")? = MgEllipse {
            center_x: e.center[0],
            center_y: e.center[1],
            width: e.width,
            height: e.height,
            orientation: e.orientation,
            size: e.size,
        };
        Ok(())
    })
}
