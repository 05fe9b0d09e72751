use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use kernelview_ffi::*;
use tempfile::TempDir;

/// Two packages of three units each, with matching calls, changes and text.
fn fixture(dir: &Path) -> (CString, CString, CString) {
    let calls = "a.A\ta.B\na.B\ta.C\na.C\ta.A\nb.D\tb.E\nb.E\tb.F\nb.F\tb.D\na.A\tb.D\n";
    let trans = "t1\ta.A,a.B\nt2\ta.B,a.C\nt3\tb.D,b.E\nt4\tb.E,b.F\nt5\ta.C,a.A\nt6\tb.F,b.D\n";
    std::fs::write(dir.join("calls.tsv"), calls).unwrap();
    std::fs::write(dir.join("trans.tsv"), trans).unwrap();
    let docs = [
        ("a", "A", "parser token grammar"),
        ("a", "B", "parser grammar syntax"),
        ("a", "C", "token syntax lexer"),
        ("b", "D", "window button render"),
        ("b", "E", "render pixel window"),
        ("b", "F", "button pixel layout"),
    ];
    for (pkg, unit, text) in docs {
        std::fs::create_dir_all(dir.join("corpus").join(pkg)).unwrap();
        std::fs::write(dir.join(format!("corpus/{pkg}/{unit}.java")), text).unwrap();
    }
    let c = |p: &Path| CString::new(p.to_str().unwrap()).unwrap();
    (
        c(&dir.join("calls.tsv")),
        c(&dir.join("trans.tsv")),
        c(&dir.join("corpus")),
    )
}

fn load(dir: &Path) -> *mut KvSystem {
    let (calls, trans, corpus) = fixture(dir);
    let mut sys = ptr::null_mut();
    let status = unsafe { kv_system_from_files(calls.as_ptr(), trans.as_ptr(), corpus.as_ptr(), &mut sys) };
    assert_eq!(status, KvStatus::Ok, "{:?}", last_error());
    assert!(!sys.is_null());
    sys
}

fn last_error() -> Option<String> {
    let p = kv_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn kernel(sys: *const KvSystem, view: &str, name: &str, param: Option<f64>) -> *mut KvKernel {
    let view = CString::new(view).unwrap();
    let name = CString::new(name).unwrap();
    let mut k = ptr::null_mut();
    let status = unsafe {
        kv_kernel_compute(
            sys,
            view.as_ptr(),
            name.as_ptr(),
            param.unwrap_or(0.0),
            param.is_some(),
            &mut k,
        )
    };
    assert_eq!(status, KvStatus::Ok, "{:?}", last_error());
    k
}

#[test]
fn system_round_trip() {
    let dir = TempDir::new().unwrap();
    let sys = load(dir.path());
    let mut n = 0usize;
    assert_eq!(unsafe { kv_system_unit_count(sys, &mut n) }, KvStatus::Ok);
    assert_eq!(n, 6);
    let mut name = ptr::null_mut();
    assert_eq!(unsafe { kv_system_unit_name(sys, 0, &mut name) }, KvStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(name) }.to_str().unwrap(), "a.A");
    unsafe { kv_string_free(name) };
    assert_eq!(
        unsafe { kv_system_unit_name(sys, 6, &mut name) },
        KvStatus::InvalidArgument
    );
    assert!(last_error().unwrap().contains("out of range"));
    unsafe { kv_system_free(sys) };
}

#[test]
fn kernels_are_symmetric_and_sum() {
    let dir = TempDir::new().unwrap();
    let sys = load(dir.path());
    let ed = kernel(sys, "struct", "ed", Some(1.0));
    let bow = kernel(sys, "lex", "bow", None);
    let mut n = 0usize;
    assert_eq!(unsafe { kv_kernel_size(ed, &mut n) }, KvStatus::Ok);
    let mut values = vec![0.0; n * n];
    assert_eq!(
        unsafe { kv_kernel_values(ed, values.as_mut_ptr(), values.len()) },
        KvStatus::Ok
    );
    for i in 0..n {
        for j in 0..n {
            assert_eq!(values[i * n + j], values[j * n + i]);
        }
    }
    assert_eq!(
        unsafe { kv_kernel_values(ed, values.as_mut_ptr(), n) },
        KvStatus::BufferTooSmall
    );

    let parts = [ed as *const KvKernel, bow as *const KvKernel];
    let mut sum = ptr::null_mut();
    assert_eq!(
        unsafe { kv_kernel_add(parts.as_ptr(), parts.len(), &mut sum) },
        KvStatus::Ok
    );
    assert_eq!(
        unsafe { kv_kernel_values(sum, values.as_mut_ptr(), values.len()) },
        KvStatus::Ok
    );
    let trace: f64 = (0..n).map(|i| values[i * n + i]).sum();
    assert!((trace - 2.0 * n as f64).abs() < 1e-9, "trace {trace}");

    let mut pd = -1.0;
    let mut newick = ptr::null_mut();
    assert_eq!(
        unsafe { kv_cluster(sys, sum, &mut pd, &mut newick) },
        KvStatus::Ok,
        "{:?}",
        last_error()
    );
    assert!(pd >= 0.0);
    assert!(unsafe { CStr::from_ptr(newick) }.to_str().unwrap().ends_with(';'));
    unsafe {
        kv_string_free(newick);
        kv_kernel_free(sum);
        kv_kernel_free(bow);
        kv_kernel_free(ed);
        kv_system_free(sys);
    }
}

#[test]
fn bad_arguments_report_status() {
    let dir = TempDir::new().unwrap();
    let sys = load(dir.path());
    let mut k = ptr::null_mut();
    let view = CString::new("struct").unwrap();
    let name = CString::new("nonsense").unwrap();
    let status = unsafe { kv_kernel_compute(sys, view.as_ptr(), name.as_ptr(), 0.0, false, &mut k) };
    assert_eq!(status, KvStatus::InvalidArgument);
    assert!(k.is_null());
    assert!(last_error().is_some());

    let status = unsafe { kv_kernel_compute(ptr::null(), view.as_ptr(), name.as_ptr(), 0.0, false, &mut k) };
    assert_eq!(status, KvStatus::NullArgument);

    let missing = CString::new(dir.path().join("absent.tsv").to_str().unwrap()).unwrap();
    let mut other = ptr::null_mut();
    let status = unsafe { kv_system_from_files(missing.as_ptr(), missing.as_ptr(), missing.as_ptr(), &mut other) };
    assert_ne!(status, KvStatus::Ok);
    assert!(other.is_null());

    // Freeing null handles is a no-op.
    unsafe {
        kv_system_free(ptr::null_mut());
        kv_kernel_free(ptr::null_mut());
        kv_retrieval_free(ptr::null_mut());
        kv_string_free(ptr::null_mut());
        kv_system_free(sys);
    }
}

#[test]
fn search_ranks_matching_package_first() {
    let dir = TempDir::new().unwrap();
    let sys = load(dir.path());
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { kv_retrieval_fit(sys, 2, 0.1, &mut model) },
        KvStatus::Ok,
        "{:?}",
        last_error()
    );
    let query = CString::new("parser grammar").unwrap();
    let mut units = [0usize; 3];
    let mut dist = [0.0f64; 3];
    let mut count = 0usize;
    let status = unsafe {
        kv_retrieval_search(
            model,
            sys,
            query.as_ptr(),
            3,
            units.as_mut_ptr(),
            dist.as_mut_ptr(),
            &mut count,
        )
    };
    assert_eq!(status, KvStatus::Ok, "{:?}", last_error());
    assert_eq!(count, 3);
    assert!(dist.windows(2).all(|w| w[0] <= w[1]));
    assert!(units[0] < 3, "top hit {} is outside the parser package", units[0]);

    let empty = CString::new("the of and").unwrap();
    let status = unsafe {
        kv_retrieval_search(
            model,
            sys,
            empty.as_ptr(),
            3,
            units.as_mut_ptr(),
            dist.as_mut_ptr(),
            &mut count,
        )
    };
    assert_eq!(status, KvStatus::EmptyQuery);
    assert_eq!(count, 0);
    unsafe {
        kv_retrieval_free(model);
        kv_system_free(sys);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(kv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/kernelview.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "kv_system_load",
        "kv_kernel_compute",
        "kv_cluster",
        "kv_retrieval_search",
        "KV_STATUS_EMPTY_QUERY",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn loads_an_ingested_workspace() {
    let dir = TempDir::new().unwrap();
    let (calls, trans, corpus) = fixture(dir.path());
    let ws = dir.path().join("ws");
    let args = [
        "kernelview",
        "--workspace",
        ws.to_str().unwrap(),
        "ingest",
        "--calls",
        calls.to_str().unwrap(),
        "--trans",
        trans.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
    ];
    assert_eq!(kernelview::cli::run(args), 0);
    let path = CString::new(ws.to_str().unwrap()).unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(
        unsafe { kv_system_load(path.as_ptr(), &mut sys) },
        KvStatus::Ok,
        "{:?}",
        last_error()
    );
    let mut n = 0usize;
    assert_eq!(unsafe { kv_system_unit_count(sys, &mut n) }, KvStatus::Ok);
    assert_eq!(n, 6);
    unsafe { kv_system_free(sys) };
    assert!(!ws.join(".lock").exists());
}
