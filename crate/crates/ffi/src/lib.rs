//! C ABI for the sfw toolkit.
//!
//! Latents and keys are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`SfwStatus`]; on failure the
//! message is kept per thread and read with [`sfw_last_error_message`].
//! Outputs are written through pointer arguments only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sfw_core::channel::{channel_roundtrip, AttackSpec, ChannelConfig};
use sfw_core::detection::{decode_hsqr, ks_test, query_spectrum, DetectMode, KeyPool};
use sfw_core::qr::{Payload72, DATA_LEN};
use sfw_core::watermark::{embed, make_key, KeySpec, WatermarkKey, DEFAULT_AMPLITUDE, DEFAULT_CELL_PX, DEFAULT_MASK_ID};
use sfw_core::{LatentTensor, SfwError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Dimension = 3,
    Size = 4,
    InvalidParameter = 5,
    NonFinite = 6,
    MaskMismatch = 7,
    Unrecoverable = 8,
    FormatInfo = 9,
    Empty = 10,
    Malformed = 11,
    Io = 12,
    Json = 13,
    Panic = 14,
}

impl From<&SfwError> for SfwStatus {
    fn from(e: &SfwError) -> Self {
        match e {
            SfwError::Dimension(_) => SfwStatus::Dimension,
            SfwError::Size { .. } => SfwStatus::Size,
            SfwError::InvalidParameter(_) => SfwStatus::InvalidParameter,
            SfwError::NonFinite(_) => SfwStatus::NonFinite,
            SfwError::MaskMismatch(_) => SfwStatus::MaskMismatch,
            SfwError::Unrecoverable(_) => SfwStatus::Unrecoverable,
            SfwError::FormatInfo(_) => SfwStatus::FormatInfo,
            SfwError::Empty(_) => SfwStatus::Empty,
            SfwError::Malformed(_) => SfwStatus::Malformed,
            SfwError::Io(_) => SfwStatus::Io,
            SfwError::Json(_) => SfwStatus::Json,
        }
    }
}

/// Opaque latent tensor.
pub struct SfwLatent(LatentTensor);

/// Opaque watermark key.
pub struct SfwKey(WatermarkKey);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SfwStatus, String);

impl From<SfwError> for Failure {
    fn from(e: SfwError) -> Self {
        Failure(SfwStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SfwStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> SfwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfwStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SfwStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SfwStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sfw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sfw_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sfw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sfw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Standard 4x64x64 N(0, 1) latent from `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sfw_latent_gaussian(seed: u64, out: *mut *mut SfwLatent) -> SfwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SfwLatent(LatentTensor::gaussian(seed)));
        Ok(())
    })
}

/// Copies `len = c * h * w` finite values, channel-major, into a new latent.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_latent_from_values(
    channels: u32,
    height: u32,
    width: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut SfwLatent,
) -> SfwStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let l = LatentTensor::new(channels as usize, height as usize, width as usize, v)?;
        l.check_finite()?;
        put(out, SfwLatent(l));
        Ok(())
    })
}

/// Reads a latent file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_latent_load(path: *const c_char, out: *mut *mut SfwLatent) -> SfwStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SfwLatent(LatentTensor::load(Path::new(p))?));
        Ok(())
    })
}

/// Writes a latent file.
///
/// # Safety
/// `latent` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sfw_latent_save(latent: *const SfwLatent, path: *const c_char) -> SfwStatus {
    guard(|| {
        let l = ref_arg(latent, "latent")?;
        l.0.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Writes the shape through any non-NULL pointer.
///
/// # Safety
/// `latent` must be a live handle; non-NULL outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_latent_dims(
    latent: *const SfwLatent,
    channels: *mut u32,
    height: *mut u32,
    width: *mut u32,
) -> SfwStatus {
    guard(|| {
        let l = &ref_arg(latent, "latent")?.0;
        for (p, v) in [(channels, l.channels()), (height, l.height()), (width, l.width())] {
            if !p.is_null() {
                *p = v as u32;
            }
        }
        Ok(())
    })
}

/// Copies all values into `buf`, which must hold exactly `c * h * w`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sfw_latent_copy_values(latent: *const SfwLatent, buf: *mut f64, len: usize) -> SfwStatus {
    guard(|| {
        let v = ref_arg(latent, "latent")?.0.values();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != v.len() {
            return Err(SfwError::Size {
                what: "values",
                expected: v.len(),
                actual: len,
            }
            .into());
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(v);
        Ok(())
    })
}

/// Releases a latent. NULL is ignored.
///
/// # Safety
/// `latent` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sfw_latent_free(latent: *mut SfwLatent) {
    if !latent.is_null() {
        drop(Box::from_raw(latent));
    }
}

unsafe fn new_key(spec: KeySpec, seed: u64, out: *mut *mut SfwKey) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    put(out, SfwKey(make_key(spec, seed)?));
    Ok(())
}

/// Hermitian symmetric Tree-Ring key.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sfw_key_hstr(
    channel: u32,
    radius: u32,
    center_aware: bool,
    seed: u64,
    out: *mut *mut SfwKey,
) -> SfwStatus {
    guard(|| {
        new_key(
            KeySpec::Hstr {
                channel: channel as usize,
                radius: radius as usize,
                center_aware,
            },
            seed,
            out,
        )
    })
}

/// Tree-Ring baseline key.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sfw_key_tree_ring(
    channel: u32,
    radius: u32,
    center_aware: bool,
    seed: u64,
    out: *mut *mut SfwKey,
) -> SfwStatus {
    guard(|| {
        new_key(
            KeySpec::TreeRing {
                channel: channel as usize,
                radius: radius as usize,
                center_aware,
            },
            seed,
            out,
        )
    })
}

/// HSQR key carrying the 9-byte `payload`, with default cell size,
/// amplitude and mask.
///
/// # Safety
/// `payload` must point to 9 readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_key_hsqr(
    channel: u32,
    payload: *const u8,
    center_aware: bool,
    seed: u64,
    out: *mut *mut SfwKey,
) -> SfwStatus {
    guard(|| {
        if payload.is_null() {
            return Err(null("payload"));
        }
        let p = Payload72::from_slice(std::slice::from_raw_parts(payload, DATA_LEN))?;
        new_key(
            KeySpec::Hsqr {
                channel: channel as usize,
                payload: p,
                cell_px: DEFAULT_CELL_PX,
                amplitude: DEFAULT_AMPLITUDE,
                center_aware,
                mask_id: DEFAULT_MASK_ID,
            },
            seed,
            out,
        )
    })
}

/// Seeded Gaussian noise key.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sfw_key_noise(channel: u32, center_aware: bool, seed: u64, out: *mut *mut SfwKey) -> SfwStatus {
    guard(|| {
        new_key(
            KeySpec::Noise {
                channel: channel as usize,
                center_aware,
            },
            seed,
            out,
        )
    })
}

/// Parses a key document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_key_from_json(json: *const c_char, out: *mut *mut SfwKey) -> SfwStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SfwKey(WatermarkKey::from_json(text)?));
        Ok(())
    })
}

/// Key document as a new string; release it with [`sfw_string_free`].
///
/// # Safety
/// `key` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_key_to_json(key: *const SfwKey, out: *mut *mut c_char) -> SfwStatus {
    guard(|| {
        let k = ref_arg(key, "key")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(k.0.to_json()).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// Releases a key. NULL is ignored.
///
/// # Safety
/// `key` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sfw_key_free(key: *mut SfwKey) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

/// Embeds `key` into a copy of `latent`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_embed(latent: *const SfwLatent, key: *const SfwKey, out: *mut *mut SfwLatent) -> SfwStatus {
    guard(|| {
        let l = ref_arg(latent, "latent")?;
        let k = ref_arg(key, "key")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SfwLatent(embed(&l.0, &k.0)?));
        Ok(())
    })
}

/// Surrogate channel with one attack given as JSON, e.g.
/// `{"kind":"jpeg","quality":25}`, followed by inversion noise of standard
/// deviation `inversion_sigma`.
///
/// # Safety
/// `latent` must be live; `attack_json` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_attack(
    latent: *const SfwLatent,
    attack_json: *const c_char,
    inversion_sigma: f64,
    seed: u64,
    out: *mut *mut SfwLatent,
) -> SfwStatus {
    guard(|| {
        let l = ref_arg(latent, "latent")?;
        let spec: AttackSpec = serde_json::from_str(str_arg(attack_json, "attack_json")?).map_err(SfwError::from)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = ChannelConfig {
            inversion_noise_sigma: inversion_sigma,
            seed,
        };
        put(out, SfwLatent(channel_roundtrip(&l.0, &spec, &cfg)?));
        Ok(())
    })
}

/// L1 key-region distance; `noise_key` may be NULL. With `real_only` only
/// real components are compared.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_distance(
    latent: *const SfwLatent,
    key: *const SfwKey,
    noise_key: *const SfwKey,
    real_only: bool,
    out: *mut f64,
) -> SfwStatus {
    guard(|| {
        let l = ref_arg(latent, "latent")?;
        let k = ref_arg(key, "key")?;
        let noise = noise_key.as_ref().map(|n| &n.0);
        if out.is_null() {
            return Err(null("out"));
        }
        let mode = if real_only { DetectMode::RealOnly } else { DetectMode::Both };
        let pool = KeyPool::new(std::slice::from_ref(&k.0), noise, mode)?;
        *out = pool.distance(0, &pool.query(&l.0)?);
        Ok(())
    })
}

/// Decodes an HSQR payload into the 9 bytes at `payload`; `corrected` (may
/// be NULL) receives the number of repaired symbols.
///
/// # Safety
/// Handles must be live; `payload` must point to 9 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sfw_decode_hsqr(
    latent: *const SfwLatent,
    key: *const SfwKey,
    payload: *mut u8,
    corrected: *mut u32,
) -> SfwStatus {
    guard(|| {
        let l = ref_arg(latent, "latent")?;
        let k = ref_arg(key, "key")?;
        if payload.is_null() {
            return Err(null("payload"));
        }
        let (p, n) = decode_hsqr(&query_spectrum(&l.0, &k.0)?, &k.0)?;
        std::slice::from_raw_parts_mut(payload, DATA_LEN).copy_from_slice(p.bytes());
        if !corrected.is_null() {
            *corrected = n as u32;
        }
        Ok(())
    })
}

/// One-sample KS test of all values against N(0, 1).
///
/// # Safety
/// `latent` must be live; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn sfw_ks_test(latent: *const SfwLatent, statistic: *mut f64, p_value: *mut f64) -> SfwStatus {
    guard(|| {
        let l = ref_arg(latent, "latent")?;
        if statistic.is_null() || p_value.is_null() {
            return Err(null("output"));
        }
        let r = ks_test(l.0.values())?;
        *statistic = r.statistic;
        *p_value = r.p_value;
        Ok(())
    })
}
