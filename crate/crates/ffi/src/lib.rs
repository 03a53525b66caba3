//! C ABI over the entity linker.
//!
//! Every function returns an [`ElStatus`]; on failure a message for the
//! calling thread is available from [`el_last_error_message`]. Handles are
//! opaque and must be released with their matching `_free` function. Strings
//! returned through out-parameters are owned by the caller and released with
//! [`el_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use entity_linker::candidates::LinkerConfig;
use entity_linker::index::{build_indices, persist_bundle, BundleError, ConfigError, IndexConfig};
use entity_linker::kb::{load_kb_with, KbError};
use entity_linker::linker::{Linker, RequestType};
use entity_linker::service::set_linker_key;
use entity_linker::text::TextError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Unknown setting, out-of-range value, or unknown request type.
    InvalidArgument = 3,
    UnbalancedTag = 4,
    /// Other tagged-text problems, such as an empty annotation.
    InvalidText = 5,
    /// Malformed KB line, duplicate redirect or bad index config.
    MalformedInput = 6,
    Io = 7,
    /// Corrupt bundle or format version mismatch.
    Bundle = 8,
    Panic = 99,
}

/// A loaded, immutable index bundle. Safe to share between threads.
pub struct ElBundle {
    linker: Linker,
}

/// Linker settings, initialised to the defaults.
pub struct ElConfig {
    inner: LinkerConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ElStatus, String);

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ElStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ElStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            ElStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(ElStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ElStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn null_out(name: &str) -> Failure {
    Failure(ElStatus::NullArgument, format!("{name} is null"))
}

impl From<BundleError> for Failure {
    fn from(e: BundleError) -> Self {
        let status = match e {
            BundleError::Io { .. } => ElStatus::Io,
            _ => ElStatus::Bundle,
        };
        Failure(status, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let status = match e {
            ConfigError::Io { .. } => ElStatus::Io,
            _ => ElStatus::MalformedInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<KbError> for Failure {
    fn from(e: KbError) -> Self {
        let status = match e {
            KbError::Io { .. } => ElStatus::Io,
            _ => ElStatus::MalformedInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<TextError> for Failure {
    fn from(e: TextError) -> Self {
        let status = match e {
            TextError::UnbalancedTag { .. } => ElStatus::UnbalancedTag,
            _ => ElStatus::InvalidText,
        };
        Failure(status, e.to_string())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn el_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn el_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a bundle directory from a triple dump. `config_path` may be NULL.
///
/// # Safety
/// String arguments must be NULL or valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn el_index_build(
    kb_path: *const c_char,
    out_dir: *const c_char,
    config_path: *const c_char,
) -> ElStatus {
    guard(|| {
        let kb_path = Path::new(text(kb_path, "kb_path")?);
        let out_dir = Path::new(text(out_dir, "out_dir")?);
        let mut config = if config_path.is_null() {
            IndexConfig::default()
        } else {
            IndexConfig::from_file(Path::new(text(config_path, "config_path")?))?
        };
        if config.name.is_empty() {
            config.name = kb_path
                .file_stem()
                .map_or_else(|| "kb".into(), |s| s.to_string_lossy().into_owned());
        }
        let file = File::open(kb_path).map_err(|e| Failure(ElStatus::Io, format!("{}: {e}", kb_path.display())))?;
        let kb = load_kb_with(BufReader::new(file), &config.language, &config.name, &config.predicates)?;
        persist_bundle(&build_indices(&kb, &config), out_dir)?;
        Ok(())
    })
}

/// Loads a bundle directory into `*out`.
///
/// # Safety
/// `dir` must be NULL or a valid NUL-terminated string; `out` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn el_bundle_load(dir: *const c_char, out: *mut *mut ElBundle) -> ElStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out("out"));
        }
        let linker = Linker::open(Path::new(text(dir, "dir")?))?;
        *out = Box::into_raw(Box::new(ElBundle { linker }));
        Ok(())
    })
}

/// Number of entities in the bundle; 0 for NULL.
///
/// # Safety
/// `bundle` must be NULL or a live handle from [`el_bundle_load`].
#[no_mangle]
pub unsafe extern "C" fn el_bundle_entity_count(bundle: *const ElBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.linker.bundle().entity_count())
}

/// # Safety
/// `bundle` must be NULL or a handle from [`el_bundle_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn el_bundle_free(bundle: *mut ElBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Default linker settings into `*out`.
///
/// # Safety
/// `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn el_config_new(out: *mut *mut ElConfig) -> ElStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = Box::into_raw(Box::new(ElConfig {
            inner: LinkerConfig::default(),
        }));
        Ok(())
    })
}

/// Sets one linker setting using the properties-file key names
/// (`acronym`, `depth`, `ngramDistance`, ...).
///
/// # Safety
/// `config` must be NULL or a live handle; strings NULL or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn el_config_set(config: *mut ElConfig, key: *const c_char, value: *const c_char) -> ElStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(|| null_out("config"))?;
        let key = text(key, "key")?;
        let value = text(value, "value")?;
        match set_linker_key(&mut config.inner, key, value) {
            Ok(true) => Ok(()),
            Ok(false) => Err(Failure(ElStatus::InvalidArgument, format!("unknown setting {key}"))),
            Err(e) => Err(Failure(ElStatus::InvalidArgument, e.to_string())),
        }
    })
}

/// # Safety
/// `config` must be NULL or a handle from [`el_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn el_config_free(config: *mut ElConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Links `<entity>`-tagged `text`. `kind` is `"agdistis"` or `"candidates"`;
/// `config` may be NULL for the defaults. On success `*out_json` receives the
/// same JSON the HTTP service returns.
///
/// # Safety
/// Handles must be live or NULL; strings NULL or NUL-terminated; `out_json`
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn el_annotate(
    bundle: *const ElBundle,
    config: *const ElConfig,
    text_in: *const c_char,
    kind: *const c_char,
    out_json: *mut *mut c_char,
) -> ElStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null_out("out_json"));
        }
        let bundle = bundle.as_ref().ok_or_else(|| null_out("bundle"))?;
        let tagged = text(text_in, "text")?;
        let kind: RequestType = text(kind, "kind")?
            .parse()
            .map_err(|e: entity_linker::linker::InvalidType| Failure(ElStatus::InvalidArgument, e.to_string()))?;
        let default = LinkerConfig::default();
        let cfg = config.as_ref().map_or(&default, |c| &c.inner);
        let json = bundle.linker.annotate(tagged, kind, cfg)?.to_json();
        *out_json = CString::new(json)
            .map_err(|_| Failure(ElStatus::InvalidText, "response contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from [`el_annotate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn el_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
