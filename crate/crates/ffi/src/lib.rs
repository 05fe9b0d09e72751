//! C interface to kernelview.
//!
//! All objects are opaque handles created by a `kv_*_new`/`kv_*_load`
//! style call and released with the matching `kv_*_free`. Every fallible
//! function returns a [`KvStatus`]; on failure the message is available
//! from [`kv_last_error`] on the same thread. Strings handed out by the
//! library must be released with [`kv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kernelview::cli::Workspace;
use kernelview::clustering::{cluster_kernel, pd_against, Linkage};
use kernelview::fusion::mkl_add;
use kernelview::ingest::{
    read_call_edges, read_corpus_dir, read_transactions, Preprocessor, DEFAULT_MAX_FILES, DEFAULT_MIN_PACKAGE_SIZE,
};
use kernelview::kernels::{GraphKernel, KernelMatrix, KernelSpec, Normalization, VectorKernel, View};
use kernelview::retrieval::{fit_retrieval, RetrievalModel};
use kernelview::system::System;
use kernelview::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KvStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Malformed input file or kernel.
    Parse = 2,
    /// The views share no units.
    EmptyIntersection = 3,
    /// Not enough data for the requested analysis.
    Insufficient = 4,
    /// The query has no usable terms.
    EmptyQuery = 5,
    InvalidArgument = 6,
    Io = 7,
    /// A string argument was not valid UTF-8.
    Utf8 = 8,
    /// The output buffer is too small.
    BufferTooSmall = 9,
    /// Internal failure; the library caught a panic.
    Internal = 10,
}

/// An ingested system: its aligned views plus the text preprocessor.
pub struct KvSystem {
    system: System,
    pre: Preprocessor,
}

/// A square similarity matrix over the units of a system.
pub struct KvKernel {
    kernel: KernelMatrix,
}

/// A fitted cross-modal search model.
pub struct KvRetrieval {
    model: RetrievalModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> KvStatus {
    match err {
        Error::Parse { .. } | Error::Format { .. } | Error::UnitMismatch(_) => KvStatus::Parse,
        Error::Asymmetric(_) | Error::NonFinite(_) => KvStatus::Parse,
        Error::EmptyIntersection(_) | Error::EmptyView(_) => KvStatus::EmptyIntersection,
        Error::Insufficient(_) => KvStatus::Insufficient,
        Error::EmptyQuery => KvStatus::EmptyQuery,
        Error::InvalidArgument(_) | Error::Unknown { .. } => KvStatus::InvalidArgument,
        Error::Io { .. } => KvStatus::Io,
    }
}

struct Failure(KvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any failure (including a panic) as the last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            KvStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(KvStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(KvStatus::Utf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn c_string(s: &str) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn kv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn kv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn kv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a workspace previously created by `kernelview ingest`.
///
/// # Safety
/// `workspace` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kv_system_load(workspace: *const c_char, out: *mut *mut KvSystem) -> KvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ws = Workspace::open(Path::new(str_arg(workspace, "workspace")?))?;
        let system = ws.load_system()?;
        let pre = ws.preprocessor()?;
        *out = Box::into_raw(Box::new(KvSystem { system, pre }));
        Ok(())
    })
}

/// Reads the three views from raw inputs with the bundled word lists.
///
/// # Safety
/// String arguments must be nul-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kv_system_from_files(
    calls: *const c_char,
    transactions: *const c_char,
    corpus_dir: *const c_char,
    out: *mut *mut KvSystem,
) -> KvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let edges = read_call_edges(Path::new(str_arg(calls, "calls")?))?;
        let raw = read_transactions(Path::new(str_arg(transactions, "transactions")?))?;
        let docs = read_corpus_dir(Path::new(str_arg(corpus_dir, "corpus_dir")?))?;
        let pre = Preprocessor::default();
        let system = System::assemble(&edges, &raw, &docs, &pre, DEFAULT_MAX_FILES)?;
        *out = Box::into_raw(Box::new(KvSystem { system, pre }));
        Ok(())
    })
}

/// # Safety
/// `system` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn kv_system_free(system: *mut KvSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kv_system_unit_count(system: *const KvSystem, out: *mut usize) -> KvStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(system, "system")?.system.n();
        Ok(())
    })
}

/// Name of unit `index`; release with `kv_string_free`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kv_system_unit_name(system: *const KvSystem, index: usize, out: *mut *mut c_char) -> KvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = &ref_arg(system, "system")?.system;
        if index >= s.n() {
            return Err(Failure(KvStatus::InvalidArgument, format!("unit {index} out of range")));
        }
        *out = c_string(s.units.name(index));
        Ok(())
    })
}

/// Computes a kernel of one view. `view` is `struct`, `evol` or `lex`;
/// `kernel` a family name (`ed`, `led`, `poly`, `rbf`, `bow`, `cons`,
/// `spec`, `exp`). `param` is ignored unless `has_param` is true.
///
/// # Safety
/// Pointers must be valid; strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn kv_kernel_compute(
    system: *const KvSystem,
    view: *const c_char,
    kernel: *const c_char,
    param: f64,
    has_param: bool,
    out: *mut *mut KvKernel,
) -> KvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = &ref_arg(system, "system")?.system;
        let view: View = str_arg(view, "view")?.parse()?;
        let spec = KernelSpec::parse(str_arg(kernel, "kernel")?, has_param.then_some(param))?;
        *out = Box::into_raw(Box::new(KvKernel {
            kernel: s.kernel(view, &spec)?,
        }));
        Ok(())
    })
}

/// # Safety
/// `kernel` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn kv_kernel_free(kernel: *mut KvKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kv_kernel_size(kernel: *const KvKernel, out: *mut usize) -> KvStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(kernel, "kernel")?.kernel.n();
        Ok(())
    })
}

/// Copies the kernel into `buffer` in row-major order. `len` is the
/// buffer length in doubles and must be at least `n * n`.
///
/// # Safety
/// `buffer` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kv_kernel_values(kernel: *const KvKernel, buffer: *mut f64, len: usize) -> KvStatus {
    guard(|| {
        let k = &ref_arg(kernel, "kernel")?.kernel.values;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let n = k.nrows();
        if len < n * n {
            return Err(Failure(
                KvStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", n * n),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(buffer, n * n);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = k[(i, j)];
            }
        }
        Ok(())
    })
}

/// Sums trace-normalized kernels.
///
/// # Safety
/// `kernels` must point to `count` valid kernel handles.
#[no_mangle]
pub unsafe extern "C" fn kv_kernel_add(
    kernels: *const *const KvKernel,
    count: usize,
    out: *mut *mut KvKernel,
) -> KvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if kernels.is_null() {
            return Err(null("kernels"));
        }
        let handles = std::slice::from_raw_parts(kernels, count);
        let ks = handles
            .iter()
            .map(|&h| ref_arg(h, "kernel").map(|k| k.kernel.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        *out = Box::into_raw(Box::new(KvKernel {
            kernel: mkl_add(&ks, Normalization::Trace)?,
        }));
        Ok(())
    })
}

/// Clusters the units with average linkage and scores the result against
/// the package hierarchy. Writes the path difference to `pd` and, if
/// `newick` is not null, the dendrogram (release with `kv_string_free`).
///
/// # Safety
/// Pointers must be valid; `newick` may be null.
#[no_mangle]
pub unsafe extern "C" fn kv_cluster(
    system: *const KvSystem,
    kernel: *const KvKernel,
    pd: *mut f64,
    newick: *mut *mut c_char,
) -> KvStatus {
    guard(|| {
        let pd = out_arg(pd, "pd")?;
        let s = &ref_arg(system, "system")?.system;
        let k = &ref_arg(kernel, "kernel")?.kernel;
        let dendrogram = cluster_kernel(k, s.units.names(), Linkage::Average)?;
        *pd = pd_against(&dendrogram, &s.oracle(DEFAULT_MIN_PACKAGE_SIZE))?;
        if let Some(out) = newick.as_mut() {
            *out = c_string(&dendrogram.to_newick());
        }
        Ok(())
    })
}

/// Fits the search model on exponential diffusion (alpha 1) of the call
/// graph, a linear kernel of the change history and bag-of-words text.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kv_retrieval_fit(
    system: *const KvSystem,
    dims: usize,
    kappa: f64,
    out: *mut *mut KvRetrieval,
) -> KvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = &ref_arg(system, "system")?.system;
        let others = [
            s.kernel(View::Struct, &KernelSpec::Graph(GraphKernel::ExpDiffusion(1.0)))?,
            s.kernel(
                View::Evol,
                &KernelSpec::Vector(VectorKernel::Poly { degree: 1, offset: 0.0 }),
            )?,
        ];
        let model = fit_retrieval(&s.corpus, VectorKernel::Bow, &others, dims, kappa)?;
        *out = Box::into_raw(Box::new(KvRetrieval { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn kv_retrieval_free(model: *mut KvRetrieval) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Ranks units for a free-text query. Up to `capacity` unit indices and
/// distances are written; `count` receives the number written.
///
/// # Safety
/// `units` and `distances` must each hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn kv_retrieval_search(
    model: *const KvRetrieval,
    system: *const KvSystem,
    query: *const c_char,
    capacity: usize,
    units: *mut usize,
    distances: *mut f64,
    count: *mut usize,
) -> KvStatus {
    guard(|| {
        let count = out_arg(count, "count")?;
        *count = 0;
        let model = &ref_arg(model, "model")?.model;
        let pre = &ref_arg(system, "system")?.pre;
        if capacity > 0 && (units.is_null() || distances.is_null()) {
            return Err(null("units or distances"));
        }
        let hits = model.search(str_arg(query, "query")?, pre, capacity, true)?;
        for (r, h) in hits.iter().enumerate() {
            *units.add(r) = h.unit;
            *distances.add(r) = h.distance;
        }
        *count = hits.len();
        Ok(())
    })
}
