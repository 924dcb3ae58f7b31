//! C ABI over `pattern_cse`.
//!
//! Every fallible function returns a [`PcseStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be fetched with [`pcse_last_error_message`]. Strings returned by this
//! library must be released with [`pcse_string_free`]; handles with their own
//! `_free` function. Vectors are passed as row-major `f64` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pattern_cse::embeddings::{
    cosine_similarity, encode, wrap_with_template, Embedding, EncoderHandle, PoolingConfig,
    PoolingStrategy, SentenceEncoder, ToyEncoder,
};
use pattern_cse::lexical_metrics::mer;
use pattern_cse::losses::{
    hierarchical_triplet, info_nce, BatchRow, ContrastiveBatch, HtConfig, InfoNceConfig,
};
use pattern_cse::repr_metrics::{
    alignment, rfd, uniformity, AlignUniformConfig, Trajectory, TrajectorySnapshot,
};
use pattern_cse::train_eval::{spearman, top_k_average};
use pattern_cse::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcseStatus {
    Ok = 0,
    Argument = 1,
    Config = 2,
    Data = 3,
    Environment = 4,
    /// A correlation or ratio is undefined for the input (constant vector,
    /// two empty sentences).
    Undefined = 5,
    Unsupported = 6,
    Consistency = 7,
    Generation = 8,
    Training = 9,
    Parse = 10,
    Io = 11,
    NullPointer = 12,
    InvalidUtf8 = 13,
    Panic = 14,
}

/// Opaque encoder handle.
pub struct PcseEncoder(ToyEncoder);

/// Opaque trajectory handle.
pub struct PcseTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PcseStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Argument(_) => PcseStatus::Argument,
            Error::Config(_) => PcseStatus::Config,
            Error::Data(_) => PcseStatus::Data,
            Error::Environment(_) => PcseStatus::Environment,
            Error::UndefinedCorrelation(_) => PcseStatus::Undefined,
            Error::Unsupported(_) => PcseStatus::Unsupported,
            Error::Consistency(_) => PcseStatus::Consistency,
            Error::Generation { .. } => PcseStatus::Generation,
            Error::Training { .. } => PcseStatus::Training,
            Error::Parse { .. } => PcseStatus::Parse,
            Error::Io { .. } => PcseStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PcseStatus::NullPointer, format!("`{what}` is null"))
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PcseStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PcseStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            PcseStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            PcseStatus::InvalidUtf8,
            format!("`{what}` is not valid UTF-8"),
        )
    })
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn checked_len(rows: usize, dim: usize) -> Result<usize, Failure> {
    if dim == 0 {
        return Err(Failure(
            PcseStatus::Argument,
            "dimension must be positive".into(),
        ));
    }
    rows.checked_mul(dim)
        .ok_or_else(|| Failure(PcseStatus::Argument, "array size overflows".into()))
}

fn rows_of(flat: &[f64], dim: usize) -> Vec<Embedding> {
    flat.chunks(dim)
        .map(|c| Embedding::new(c.to_vec()))
        .collect()
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(PcseStatus::Argument, "result contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or NULL. The caller owns
/// the returned string.
#[no_mangle]
pub extern "C" fn pcse_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .clone()
            .map_or(ptr::null_mut(), CString::into_raw)
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pcse_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcse_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a toy encoder. `pooling` is `first_token`, `mean_tokens` or
/// `prompt_mask`; `template` is required for `prompt_mask` and ignored
/// otherwise (may be NULL).
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcse_encoder_new(
    pooling: *const c_char,
    template: *const c_char,
    dim: usize,
    seed: u64,
    out: *mut *mut PcseEncoder,
) -> PcseStatus {
    guard(|| {
        let strategy: PoolingStrategy = str_arg(pooling, "pooling")?.parse()?;
        let pooling = match strategy {
            PoolingStrategy::PromptMask => {
                PoolingConfig::prompt_mask(str_arg(template, "template")?)?
            }
            s => PoolingConfig::new(s),
        };
        let handle = EncoderHandle {
            pooling,
            dim,
            ..EncoderHandle::default()
        };
        let enc = handle.load(seed)?;
        write_out(out, Box::into_raw(Box::new(PcseEncoder(enc))), "out")
    })
}

/// Loads an encoder saved by `pcse train` (`encoder.json`).
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcse_encoder_load(
    path: *const c_char,
    out: *mut *mut PcseEncoder,
) -> PcseStatus {
    guard(|| {
        let path = Path::new(str_arg(path, "path")?);
        let text = pattern_cse::io::read_to_string(path)?;
        let enc = ToyEncoder::from_json(&text)?;
        write_out(out, Box::into_raw(Box::new(PcseEncoder(enc))), "out")
    })
}

/// # Safety
/// `enc` must come from `pcse_encoder_new`/`pcse_encoder_load` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn pcse_encoder_free(enc: *mut PcseEncoder) {
    if !enc.is_null() {
        drop(Box::from_raw(enc));
    }
}

/// Output dimension, or 0 for a NULL handle.
///
/// # Safety
/// `enc` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pcse_encoder_dim(enc: *const PcseEncoder) -> usize {
    enc.as_ref().map_or(0, |e| e.0.dim())
}

/// Writes the unit-norm embedding of `sentence` into `out[0..dim]`.
///
/// # Safety
/// `enc` must be live; `out` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcse_encode(
    enc: *const PcseEncoder,
    sentence: *const c_char,
    out: *mut f64,
    dim: usize,
) -> PcseStatus {
    guard(|| {
        let enc = enc.as_ref().ok_or_else(|| null("enc"))?;
        let sentence = str_arg(sentence, "sentence")?;
        if dim != enc.0.dim() {
            return Err(Failure(
                PcseStatus::Argument,
                format!(
                    "output buffer holds {dim} values, encoder dimension is {}",
                    enc.0.dim()
                ),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let e = encode(&enc.0, &[sentence], true)?.remove(0);
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(e.as_slice());
        Ok(())
    })
}

/// Cosine similarity of two `dim`-vectors.
///
/// # Safety
/// `a` and `b` must hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcse_cosine(
    a: *const f64,
    b: *const f64,
    dim: usize,
    out: *mut f64,
) -> PcseStatus {
    guard(|| {
        let a = Embedding::new(slice_arg(a, dim, "a")?.to_vec());
        let b = Embedding::new(slice_arg(b, dim, "b")?.to_vec());
        write_out(out, cosine_similarity(&a, &b)?, "out")
    })
}

/// Mean InfoNCE loss over `batch` rows of unit vectors. `hard_negatives` is
/// NULL or holds one negative per row.
///
/// # Safety
/// Each non-NULL array must hold `batch * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcse_info_nce(
    anchors: *const f64,
    positives: *const f64,
    hard_negatives: *const f64,
    batch: usize,
    dim: usize,
    tau: f64,
    out: *mut f64,
) -> PcseStatus {
    guard(|| {
        let len = checked_len(batch, dim)?;
        let a = rows_of(slice_arg(anchors, len, "anchors")?, dim);
        let p = rows_of(slice_arg(positives, len, "positives")?, dim);
        let n = if hard_negatives.is_null() {
            vec![None; batch]
        } else {
            rows_of(slice_arg(hard_negatives, len, "hard_negatives")?, dim)
                .into_iter()
                .map(Some)
                .collect()
        };
        let rows = a
            .into_iter()
            .zip(p)
            .zip(n)
            .map(|((a, p), n)| BatchRow {
                hard_negative: n,
                ..BatchRow::pair(a, p)
            })
            .collect();
        let loss = info_nce(&ContrastiveBatch::new(rows)?, &InfoNceConfig { tau })?;
        write_out(out, loss, "out")
    })
}

/// Hierarchical triplet loss with every row supervised.
///
/// # Safety
/// Each array must hold `batch * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcse_hierarchical_triplet(
    anchors: *const f64,
    positives: *const f64,
    intermediates: *const f64,
    negatives: *const f64,
    batch: usize,
    dim: usize,
    m1: f64,
    m2: f64,
    out: *mut f64,
) -> PcseStatus {
    guard(|| {
        let len = checked_len(batch, dim)?;
        let a = rows_of(slice_arg(anchors, len, "anchors")?, dim);
        let p = rows_of(slice_arg(positives, len, "positives")?, dim);
        let m = rows_of(slice_arg(intermediates, len, "intermediates")?, dim);
        let n = rows_of(slice_arg(negatives, len, "negatives")?, dim);
        let rows = a
            .into_iter()
            .zip(p)
            .zip(m.into_iter().zip(n))
            .map(|((a, p), (m, n))| BatchRow {
                anchor: a,
                positive: p,
                intermediate: Some(m),
                hard_negative: Some(n),
                ht: true,
            })
            .collect();
        let cfg = HtConfig { m1, m2, beta: 1.0 };
        let loss = hierarchical_triplet(&ContrastiveBatch::new(rows)?, &cfg)?.loss;
        write_out(out, loss, "out")
    })
}

/// Alignment of the pairs `(x[i], y[i])`.
///
/// # Safety
/// `x` and `y` must hold `n * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcse_alignment(
    x: *const f64,
    y: *const f64,
    n: usize,
    dim: usize,
    alpha: f64,
    out: *mut f64,
) -> PcseStatus {
    guard(|| {
        let len = checked_len(n, dim)?;
        let pairs: Vec<(Embedding, Embedding)> = rows_of(slice_arg(x, len, "x")?, dim)
            .into_iter()
            .zip(rows_of(slice_arg(y, len, "y")?, dim))
            .collect();
        let cfg = AlignUniformConfig {
            alpha,
            ..AlignUniformConfig::default()
        };
        write_out(out, alignment(&pairs, &cfg)?, "out")
    })
}

/// Uniformity of `n` vectors.
///
/// # Safety
/// `x` must hold `n * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcse_uniformity(
    x: *const f64,
    n: usize,
    dim: usize,
    t: f64,
    out: *mut f64,
) -> PcseStatus {
    guard(|| {
        let xs = rows_of(slice_arg(x, checked_len(n, dim)?, "x")?, dim);
        let cfg = AlignUniformConfig {
            t,
            ..AlignUniformConfig::default()
        };
        write_out(out, uniformity(&xs, &cfg)?, "out")
    })
}

/// Match error rate of two sentences; `Undefined` when both are empty.
///
/// # Safety
/// Strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pcse_mer(
    s1: *const c_char,
    s2: *const c_char,
    out: *mut f64,
) -> PcseStatus {
    guard(|| {
        let m = mer(str_arg(s1, "s1")?, str_arg(s2, "s2")?)
            .ok_or_else(|| Failure(PcseStatus::Undefined, "both sentences are empty".into()))?;
        write_out(out, m.value, "out")
    })
}

/// Spearman rank correlation with average ranks for ties.
///
/// # Safety
/// `x` and `y` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcse_spearman(
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> PcseStatus {
    guard(|| {
        let r = spearman(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?)?;
        write_out(out, r, "out")
    })
}

/// Substitutes `sentence` for `{s}` in `template`; `{mask}` is kept.
///
/// # Safety
/// Strings must be NUL-terminated; free `*out` with `pcse_string_free`.
#[no_mangle]
pub unsafe extern "C" fn pcse_wrap_template(
    sentence: *const c_char,
    template: *const c_char,
    out: *mut *mut c_char,
) -> PcseStatus {
    guard(|| {
        let wrapped = wrap_with_template(
            str_arg(sentence, "sentence")?,
            str_arg(template, "template")?,
        )?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_out(out, into_c_string(wrapped)?, "out")
    })
}

/// An empty trajectory.
#[no_mangle]
pub extern "C" fn pcse_trajectory_new() -> *mut PcseTrajectory {
    Box::into_raw(Box::new(PcseTrajectory(Trajectory::new())))
}

/// Reads a `trajectory.csv` file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcse_trajectory_read_csv(
    path: *const c_char,
    out: *mut *mut PcseTrajectory,
) -> PcseStatus {
    guard(|| {
        let t = Trajectory::read_csv_file(Path::new(str_arg(path, "path")?))?;
        write_out(out, Box::into_raw(Box::new(PcseTrajectory(t))), "out")
    })
}

/// Appends a snapshot; steps must strictly increase.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcse_trajectory_push(
    traj: *mut PcseTrajectory,
    step: u64,
    align_heldout: f64,
    unif_heldout: f64,
    align_eval: f64,
    unif_eval: f64,
    spearman_eval: f64,
) -> PcseStatus {
    guard(|| {
        let traj = traj.as_mut().ok_or_else(|| null("traj"))?;
        traj.0.push(TrajectorySnapshot {
            step,
            align_heldout,
            unif_heldout,
            align_eval,
            unif_eval,
            spearman_eval,
        })?;
        Ok(())
    })
}

/// Number of snapshots, or 0 for NULL.
///
/// # Safety
/// `traj` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pcse_trajectory_len(traj: *const PcseTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `traj` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn pcse_trajectory_free(traj: *mut PcseTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Relative fitting difficulty of a trajectory.
///
/// # Safety
/// `traj` must be live; `rfd_a` and `rfd_u` writable.
#[no_mangle]
pub unsafe extern "C" fn pcse_rfd(
    traj: *const PcseTrajectory,
    rfd_a: *mut f64,
    rfd_u: *mut f64,
) -> PcseStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        if rfd_a.is_null() || rfd_u.is_null() {
            return Err(null("rfd_a/rfd_u"));
        }
        let r = rfd(&traj.0)?;
        write_out(rfd_a, r.rfd_a, "rfd_a")?;
        write_out(rfd_u, r.rfd_u, "rfd_u")
    })
}

/// Mean of the `k` largest eval Spearman values.
///
/// # Safety
/// `traj` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pcse_top_k_average(
    traj: *const PcseTrajectory,
    k: usize,
    out: *mut f64,
) -> PcseStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        write_out(out, top_k_average(&traj.0, k)?, "out")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let p = pcse_last_error_message();
        assert!(!p.is_null());
        let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
        unsafe { pcse_string_free(p) };
        s
    }

    #[test]
    fn spearman_and_errors() {
        let mut out = 0.0;
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert_eq!(
            unsafe { pcse_spearman(x.as_ptr(), y.as_ptr(), 4, &mut out) },
            PcseStatus::Ok
        );
        assert_eq!(out, 0.8);
        let c = [1.0; 4];
        assert_eq!(
            unsafe { pcse_spearman(x.as_ptr(), c.as_ptr(), 4, &mut out) },
            PcseStatus::Undefined
        );
        assert!(!last_error().is_empty());
        assert_eq!(
            unsafe { pcse_spearman(ptr::null(), y.as_ptr(), 4, &mut out) },
            PcseStatus::NullPointer
        );
    }

    #[test]
    fn losses_match_closed_forms() {
        let a = [1.0, 0.0];
        let p = [1.0, 0.0];
        let n = [0.0, 1.0];
        let mut out = 0.0;
        let s = unsafe { pcse_info_nce(a.as_ptr(), p.as_ptr(), n.as_ptr(), 1, 2, 1.0, &mut out) };
        assert_eq!(s, PcseStatus::Ok);
        assert!((out - 0.313_261_687_518_222_8).abs() < 1e-12);

        let v = [0.4f64.cos(), 0.4f64.sin()];
        let s = unsafe {
            pcse_hierarchical_triplet(
                a.as_ptr(),
                v.as_ptr(),
                v.as_ptr(),
                v.as_ptr(),
                1,
                2,
                5e-3,
                1e-2,
                &mut out,
            )
        };
        assert_eq!(s, PcseStatus::Ok);
        assert_eq!(out, (5e-3 + 1e-2) / 2.0);

        let bad = [2.0, 0.0];
        let s =
            unsafe { pcse_info_nce(bad.as_ptr(), p.as_ptr(), ptr::null(), 1, 2, 1.0, &mut out) };
        assert_eq!(s, PcseStatus::Argument);
    }

    #[test]
    fn metrics_and_text() {
        let x = [1.0, 0.0, 0.0, 1.0, -1.0, 0.0];
        let mut out = 0.0;
        assert_eq!(
            unsafe { pcse_uniformity(x.as_ptr(), 3, 2, 2.0, &mut out) },
            PcseStatus::Ok
        );
        assert!((out + 4.39634).abs() < 1e-4);
        assert_eq!(
            unsafe { pcse_alignment(x.as_ptr(), x.as_ptr(), 3, 2, 2.0, &mut out) },
            PcseStatus::Ok
        );
        assert_eq!(out, 0.0);
        assert_eq!(
            unsafe { pcse_cosine(x.as_ptr(), x[2..].as_ptr(), 2, &mut out) },
            PcseStatus::Ok
        );
        assert_eq!(out, 0.0);

        let s1 = CString::new("a b c").unwrap();
        let s2 = CString::new("a x c d").unwrap();
        assert_eq!(
            unsafe { pcse_mer(s1.as_ptr(), s2.as_ptr(), &mut out) },
            PcseStatus::Ok
        );
        assert_eq!(out, 0.5);
        let empty = CString::new("").unwrap();
        assert_eq!(
            unsafe { pcse_mer(empty.as_ptr(), empty.as_ptr(), &mut out) },
            PcseStatus::Undefined
        );

        let tpl = CString::new("This sentence: \"{s}\" means {mask}").unwrap();
        let mut wrapped: *mut c_char = ptr::null_mut();
        assert_eq!(
            unsafe { pcse_wrap_template(s1.as_ptr(), tpl.as_ptr(), &mut wrapped) },
            PcseStatus::Ok
        );
        assert_eq!(
            unsafe { CStr::from_ptr(wrapped) }.to_str().unwrap(),
            "This sentence: \"a b c\" means {mask}"
        );
        unsafe { pcse_string_free(wrapped) };
        let no_mask = CString::new("{s}").unwrap();
        assert_eq!(
            unsafe { pcse_wrap_template(s1.as_ptr(), no_mask.as_ptr(), &mut wrapped) },
            PcseStatus::Config
        );
    }

    #[test]
    fn encoder_handle_round_trip() {
        let pooling = CString::new("mean_tokens").unwrap();
        let mut enc: *mut PcseEncoder = ptr::null_mut();
        assert_eq!(
            unsafe { pcse_encoder_new(pooling.as_ptr(), ptr::null(), 8, 3, &mut enc) },
            PcseStatus::Ok
        );
        assert_eq!(unsafe { pcse_encoder_dim(enc) }, 8);
        let s = CString::new("the cat sat").unwrap();
        let mut a = [0.0; 8];
        let mut b = [0.0; 8];
        assert_eq!(
            unsafe { pcse_encode(enc, s.as_ptr(), a.as_mut_ptr(), 8) },
            PcseStatus::Ok
        );
        assert_eq!(
            unsafe { pcse_encode(enc, s.as_ptr(), b.as_mut_ptr(), 8) },
            PcseStatus::Ok
        );
        assert_eq!(a, b);
        assert!((a.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(
            unsafe { pcse_encode(enc, s.as_ptr(), a.as_mut_ptr(), 4) },
            PcseStatus::Argument
        );
        unsafe { pcse_encoder_free(enc) };

        let prompt = CString::new("prompt_mask").unwrap();
        assert_eq!(
            unsafe { pcse_encoder_new(prompt.as_ptr(), ptr::null(), 8, 3, &mut enc) },
            PcseStatus::NullPointer
        );
        let bogus = CString::new("max_pool").unwrap();
        assert_eq!(
            unsafe { pcse_encoder_new(bogus.as_ptr(), ptr::null(), 8, 3, &mut enc) },
            PcseStatus::Config
        );
    }

    #[test]
    fn trajectory_handle() {
        let t = pcse_trajectory_new();
        unsafe {
            assert_eq!(
                pcse_trajectory_push(t, 1, 1.0, -1.0, 0.5, -1.0, 0.5),
                PcseStatus::Ok
            );
            assert_eq!(
                pcse_trajectory_push(t, 2, 0.8, -1.5, 0.5, -1.5, 0.7),
                PcseStatus::Ok
            );
            assert_eq!(
                pcse_trajectory_push(t, 2, 0.0, 0.0, 0.0, 0.0, 0.0),
                PcseStatus::Data
            );
            assert_eq!(pcse_trajectory_len(t), 2);
            let (mut a, mut u, mut top) = (0.0, 0.0, 0.0);
            assert_eq!(pcse_rfd(t, &mut a, &mut u), PcseStatus::Ok);
            assert!((a - 0.4).abs() < 1e-15);
            assert_eq!(u, 0.0);
            assert_eq!(pcse_top_k_average(t, 1, &mut top), PcseStatus::Ok);
            assert_eq!(top, 0.7);
            assert_eq!(pcse_top_k_average(t, 0, &mut top), PcseStatus::Argument);
            pcse_trajectory_free(t);
        }
        let empty = pcse_trajectory_new();
        let (mut a, mut u) = (0.0, 0.0);
        assert_eq!(
            unsafe { pcse_rfd(empty, &mut a, &mut u) },
            PcseStatus::Argument
        );
        unsafe { pcse_trajectory_free(empty) };
    }
}
