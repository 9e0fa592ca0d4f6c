use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bratteli_ffi::*;

fn last_error() -> String {
    let p = bratteli_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    bratteli_string_free(s);
    out
}

#[test]
fn odometer_round_trip() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(bratteli_diagram_odometer(2, &mut d), BratteliStatus::Ok);
        let mut counts = [0u64; 4];
        let mut n = 0usize;
        assert_eq!(bratteli_diagram_path_counts(d, 5, counts.as_mut_ptr(), counts.len(), &mut n), BratteliStatus::Ok);
        assert_eq!((n, counts[0]), (1, 32));

        let mut mu = ptr::null_mut();
        assert_eq!(bratteli_measure_ergodic(d, &mut mu), BratteliStatus::Ok);
        let mut w = 0.0;
        assert_eq!(bratteli_measure_weight(mu, 3, 0, &mut w), BratteliStatus::Ok);
        assert_eq!(w, 0.125);

        let lit = CString::new(r#"{"level": 2, "perms": {"0": [1, 2, 0, 3]}}"#).unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(bratteli_element_from_json(d, lit.as_ptr(), &mut g), BratteliStatus::Ok);
        let (mut value, mut text) = (0.0, ptr::null_mut());
        assert_eq!(bratteli_fix_measure(mu, g, &mut value, &mut text), BratteliStatus::Ok);
        assert_eq!(value, 0.25);
        assert_eq!(take(text), "1/4");

        let (mut inv, mut e) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(bratteli_element_inverse(g, &mut inv), BratteliStatus::Ok);
        assert_eq!(bratteli_element_compose(g, inv, &mut e), BratteliStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(bratteli_element_to_json(e, &mut json), BratteliStatus::Ok);
        assert_eq!(take(json), r#"{"level":2,"perms":{}}"#);

        let mut r = ptr::null_mut();
        assert_eq!(bratteli_element_random(d, 3, 9, &mut r), BratteliStatus::Ok);
        let mut r2 = ptr::null_mut();
        assert_eq!(bratteli_element_random(d, 3, 9, &mut r2), BratteliStatus::Ok);
        let mut eq: c_int = 0;
        assert_eq!(bratteli_element_equal(r, r2, &mut eq), BratteliStatus::Ok);
        assert_eq!(eq, 1);

        for h in [g, inv, e, r, r2] {
            bratteli_element_free(h);
        }
        bratteli_measure_free(mu);
        bratteli_diagram_free(d);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(bratteli_diagram_odometer(1, &mut d), BratteliStatus::InvalidInput);
        assert!(d.is_null());
        assert!(last_error().contains("at least 2"));

        assert_eq!(bratteli_diagram_fibonacci(&mut d), BratteliStatus::Ok);
        let mut small = [0u64; 1];
        let mut n = 0;
        assert_eq!(bratteli_diagram_path_counts(d, 3, small.as_mut_ptr(), 1, &mut n), BratteliStatus::BufferTooSmall);
        assert_eq!(n, 2);

        let bad = CString::new("{not json").unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(bratteli_element_from_json(d, bad.as_ptr(), &mut g), BratteliStatus::Parse);
        let not_perm = CString::new(r#"{"level": 2, "perms": {"0": [0, 0]}}"#).unwrap();
        assert_eq!(bratteli_element_from_json(d, not_perm.as_ptr(), &mut g), BratteliStatus::InvalidInput);
        assert_eq!(bratteli_diagram_num_vertices(ptr::null(), 0, &mut n), BratteliStatus::NullPointer);

        let file = CString::new(r#"{"levels": [["r"], ["a"]], "edges": []}"#).unwrap();
        let mut broken = ptr::null_mut();
        assert_ne!(bratteli_diagram_from_json(file.as_ptr(), &mut broken), BratteliStatus::Ok);
        bratteli_diagram_free(d);
    }
}

#[test]
fn cli_through_the_abi() {
    let args: Vec<CString> = ["bratteli", "alpha-probe", "--alpha", "0.5"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let argv: Vec<*const c_char> = args.iter().map(|a| a.as_ptr()).collect();
    let (mut report, mut code) = (ptr::null_mut(), 0);
    unsafe {
        assert_eq!(bratteli_run(argv.len() as c_int, argv.as_ptr(), &mut report, &mut code), BratteliStatus::Ok);
        assert_eq!(code, 1);
        assert!(take(report).contains("status\tviolated"));
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/bratteli.h")).unwrap();
    for name in [
        "bratteli_diagram_odometer",
        "bratteli_measure_ergodic",
        "bratteli_element_compose",
        "bratteli_fix_measure",
        "bratteli_run",
        "bratteli_last_error",
        "typedef struct BratteliDiagramHandle BratteliDiagramHandle",
        "BRATTELI_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a C program against the static library when a C
/// compiler is around.
#[test]
fn c_program_links() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let Some(profile_dir) = std::env::current_exe().ok().and_then(|p| p.parent()?.parent().map(PathBuf::from)) else {
        return;
    };
    let lib = profile_dir.join("libbratteli_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let src = tmp.join("abi_smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "bratteli.h"
int main(void) {
    BratteliDiagramHandle *d = NULL;
    BratteliMeasureHandle *m = NULL;
    BratteliElementHandle *g = NULL;
    if (bratteli_diagram_odometer(2, &d) != BRATTELI_STATUS_OK) return 10;
    if (bratteli_measure_ergodic(d, &m) != BRATTELI_STATUS_OK) return 11;
    if (bratteli_element_from_json(d, "{\"level\": 1, \"perms\": {\"0\": [1, 0]}}", &g) != BRATTELI_STATUS_OK) return 12;
    double v = -1.0;
    char *text = NULL;
    if (bratteli_fix_measure(m, g, &v, &text) != BRATTELI_STATUS_OK) return 13;
    printf("%s %g\n", text, v);
    bratteli_string_free(text);
    bratteli_element_free(g);
    bratteli_measure_free(m);
    bratteli_diagram_free(d);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.join("abi_smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0 0");
}
