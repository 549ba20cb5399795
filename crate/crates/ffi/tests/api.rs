use psd_bundle_ffi::*;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(psdb_last_error_message()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn matrix(data: &[f64], n: usize) -> *mut PsdbMatrix {
    let mut m = ptr::null_mut();
    let s = unsafe { psdb_matrix_new(data.as_ptr(), n, 0.0, &mut m) };
    assert_eq!(s, PsdbStatus::Ok, "{}", last_error());
    m
}

fn spec(g: &str, f: &str, h: Option<&str>) -> (PsdbStatus, *mut PsdbMetricSpec) {
    let g = CString::new(g).unwrap();
    let f = CString::new(f).unwrap();
    let h = h.map(|h| CString::new(h).unwrap());
    let mut out = ptr::null_mut();
    let s = unsafe {
        psdb_spec_new(
            g.as_ptr(),
            f.as_ptr(),
            h.as_ref().map_or(ptr::null(), |h| h.as_ptr()),
            &mut out,
        )
    };
    (s, out)
}

#[test]
fn gd_through_handles() {
    let a = matrix(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], 3);
    let b = matrix(&[1.0, 0.0, 0.0, 4.0], 2);
    let (s, sp) = spec("geodesic", "geo", None);
    assert_eq!(s, PsdbStatus::Ok);
    let mut rank = 0;
    unsafe {
        assert_eq!(psdb_matrix_dim(a), 3);
        assert_eq!(psdb_matrix_rank(a, 0.0, &mut rank), PsdbStatus::Ok);
        assert_eq!(rank, 2);
        let mut r = PsdbGdResult::default();
        assert_eq!(psdb_gd(a, b, sp, &mut r), PsdbStatus::Ok);
        assert!((r.total - 4f64.ln()).abs() < 1e-12);
        assert_eq!(r.stratum_index, 0);
        assert_eq!(r.mode, PsdbMode::ClosedForm as i32);

        let mut json = ptr::null_mut();
        assert_eq!(psdb_gd_json(a, b, sp, &mut json), PsdbStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        psdb_string_free(json);
        assert!(text.starts_with("{\"total\": 1.3862943611198906"), "{text}");

        psdb_spec_free(sp);
        psdb_matrix_free(a);
        psdb_matrix_free(b);
    }
}

#[test]
fn parse_and_complex_handles() {
    let text = CString::new("psdm complex 2\n2 0 0 1\n0 -1 2 0\n").unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(psdb_matrix_parse(text.as_ptr(), &mut m), PsdbStatus::Ok);
        assert_eq!(psdb_matrix_is_complex(m), 1);
        let same = [2.0, 0.0, 0.0, 1.0, 0.0, -1.0, 2.0, 0.0];
        let mut c = ptr::null_mut();
        assert_eq!(psdb_matrix_new_complex(same.as_ptr(), 2, 0.0, &mut c), PsdbStatus::Ok);
        let (_, sp) = spec("chordal", "kl", Some("faithful"));
        let mut r = PsdbGdResult::default();
        assert_eq!(psdb_gd(m, c, sp, &mut r), PsdbStatus::Ok);
        assert_eq!(r.total, 0.0);

        let real = matrix(&[1.0], 1);
        assert_eq!(psdb_gd(m, real, sp, &mut r), PsdbStatus::Domain);
        assert!(last_error().contains("mix"));
        for h in [m, c, real] {
            psdb_matrix_free(h);
        }
        psdb_spec_free(sp);
    }
}

#[test]
fn error_statuses() {
    let bad = [1.0, 2.0, 2.0, 1.0];
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(psdb_matrix_new(bad.as_ptr(), 2, 0.0, &mut m), PsdbStatus::Domain);
        assert!(m.is_null());
        assert!(last_error().contains("positive semidefinite"));
        assert_eq!(psdb_matrix_new(ptr::null(), 2, 0.0, &mut m), PsdbStatus::NullPointer);
        assert_eq!(
            psdb_matrix_new(bad.as_ptr(), 2, 0.0, ptr::null_mut()),
            PsdbStatus::NullPointer
        );

        let garbage = CString::new("psdm real 2\n1 0\n").unwrap();
        assert_eq!(psdb_matrix_parse(garbage.as_ptr(), &mut m), PsdbStatus::Parse);

        assert_eq!(spec("geodesic", "renyi:1.5", None).0, PsdbStatus::Domain);
        assert_eq!(spec("nope", "kl", None).0, PsdbStatus::Domain);

        let mut r = PsdbGdResult::default();
        assert_eq!(
            psdb_gd(ptr::null(), ptr::null(), ptr::null(), &mut r),
            PsdbStatus::NullPointer
        );
        psdb_matrix_free(ptr::null_mut());
        psdb_spec_free(ptr::null_mut());
        psdb_string_free(ptr::null_mut());
        assert_eq!(psdb_matrix_dim(ptr::null()), 0);
    }
}

#[test]
fn pairwise_and_configure() {
    let items = [
        matrix(&[1.0, 0.0, 0.0, 1.0], 2),
        matrix(&[1.0], 1),
        matrix(&[1.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 1.0], 3),
    ];
    let (_, sp) = spec("geodesic", "geo", None);
    let mut g = [f64::NAN; 9];
    unsafe {
        assert_eq!(psdb_spec_configure(sp, 8, 0, 7), PsdbStatus::Ok);
        let handles: Vec<*const PsdbMatrix> = items.iter().map(|&p| p as *const _).collect();
        assert_eq!(psdb_pairwise(handles.as_ptr(), 3, sp, g.as_mut_ptr()), PsdbStatus::Ok);
        for i in 0..3 {
            assert_eq!(g[i * 3 + i], 0.0);
            for j in 0..3 {
                assert_eq!(g[i * 3 + j], g[j * 3 + i]);
            }
        }
        assert!((g[2] - 4f64.ln()).abs() < 1e-12);
        assert!(g[2] > g[1] + g[5]);
        for h in items {
            psdb_matrix_free(h);
        }
        psdb_spec_free(sp);
    }
}

#[test]
fn pointset_values_and_witnesses() {
    let fiber = CString::new("geo").unwrap();
    let c = [1.0, 0.0, 0.0, 1.0];
    let d = [4.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0];
    let mut minus = 0.0;
    let mut plus = 0.0;
    let mut dm = [0.0; 4];
    let mut cp = [0.0; 9];
    unsafe {
        let s = psdb_pointset(
            fiber.as_ptr(),
            c.as_ptr(),
            2,
            d.as_ptr(),
            3,
            PsdbSide::Minus,
            &mut minus,
            dm.as_mut_ptr(),
        );
        assert_eq!(s, PsdbStatus::Ok);
        let s = psdb_pointset(
            fiber.as_ptr(),
            c.as_ptr(),
            2,
            d.as_ptr(),
            3,
            PsdbSide::Plus,
            &mut plus,
            cp.as_mut_ptr(),
        );
        assert_eq!(s, PsdbStatus::Ok);
        let want = (4f64.ln().powi(2) + 2f64.ln().powi(2)).sqrt();
        assert!((minus - want).abs() < 1e-12);
        assert_eq!(minus.to_bits(), plus.to_bits());
        assert_eq!(dm, [4.0, 0.0, 0.0, 2.0]);
        let s = psdb_pointset(
            fiber.as_ptr(),
            d.as_ptr(),
            3,
            c.as_ptr(),
            2,
            PsdbSide::Minus,
            &mut minus,
            ptr::null_mut(),
        );
        assert_eq!(s, PsdbStatus::Domain);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(psdb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles the C smoke code against the generated header into a shared
/// object and runs it inside this process, whose exported `psdb_*` symbols
/// satisfy its imports.
#[cfg(target_os = "linux")]
#[test]
fn c_code_against_generated_header() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    assert!(
        root.join("include").join("psd_bundle.h").exists(),
        "header not generated"
    );
    let tmp = tempfile::TempDir::new().unwrap();
    let so = tmp.path().join("libsmoke.so");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-shared", "-fPIC", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests").join("c").join("smoke.c"))
        .arg("-lm")
        .arg("-o")
        .arg(&so)
        .status()
        .unwrap_or_else(|e| panic!("cannot run C compiler {cc}: {e}"));
    assert!(status.success(), "C smoke code failed to compile");

    let path = CString::new(so.to_str().unwrap()).unwrap();
    unsafe {
        let handle = libc::dlopen(path.as_ptr(), libc::RTLD_NOW | libc::RTLD_LOCAL);
        assert!(!handle.is_null(), "dlopen: {:?}", CStr::from_ptr(libc::dlerror()));
        let sym = libc::dlsym(handle, c"psdb_smoke".as_ptr());
        assert!(!sym.is_null(), "psdb_smoke not found");
        let smoke: extern "C" fn(*mut f64) -> i32 = std::mem::transmute(sym);
        let mut total = f64::NAN;
        assert_eq!(smoke(&mut total), 0, "C smoke check failed");
        assert!((total - 4f64.ln()).abs() < 1e-12);
        libc::dlclose(handle);
    }
}
