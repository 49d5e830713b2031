use std::ffi::{c_void, CStr};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use xaitax_ffi::*;

unsafe extern "C" fn product(row: *const f64, len: usize, _: *mut c_void) -> f64 {
    std::slice::from_raw_parts(row, len).iter().map(|v| 1.0 + v).product()
}

unsafe extern "C" fn counting(row: *const f64, len: usize, user_data: *mut c_void) -> f64 {
    *(user_data as *mut usize) += 1;
    std::slice::from_raw_parts(row, len).iter().sum()
}

fn last_error() -> String {
    let p = xtax_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn taxonomy_calls() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(xtax_total_two(0.5, 0.5, &mut v), XtaxStatus::Ok);
        assert_eq!(v, 0.75);
        assert!(xtax_last_error().is_null());
        assert_eq!(
            xtax_total_explainability([0.5, 0.5, 0.5].as_ptr(), 3, &mut v),
            XtaxStatus::Ok
        );
        assert_eq!(v, 0.875);
        assert_eq!(xtax_total_explainability(ptr::null(), 0, &mut v), XtaxStatus::Empty);
        assert_eq!(
            xtax_understandability(0.0, 3.0, XtaxFamily::Sht, &mut v),
            XtaxStatus::Ok
        );
        assert_eq!(v, 1.0);
        assert_eq!(
            xtax_explainability(1.0, 1.0, 3.0, 3.0, XtaxFamily::Gaussian, &mut v),
            XtaxStatus::Ok
        );
        assert!((v - (-1.0f64 / 9.0).exp()).abs() < 1e-15);
        assert_eq!(xtax_total_two(-0.5, 0.5, &mut v), XtaxStatus::OutOfRange);
        assert!(last_error().starts_with("out_of_range"));
        assert_eq!(xtax_total_two(0.5, 0.5, ptr::null_mut()), XtaxStatus::NullPointer);
        assert_eq!(
            xtax_understandability(1.0, 0.0, XtaxFamily::Gaussian, &mut v),
            XtaxStatus::InvalidArgument
        );
    }
}

#[test]
fn exact_and_kernel_agree_through_callbacks() {
    let x = [0.5, -1.0, 2.0, 0.25];
    let bg = [0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.5, 0.0];
    let (mut a, mut b) = ([0.0; 4], [0.0; 4]);
    let (mut a0, mut b0) = (0.0, 0.0);
    unsafe {
        let s = xtax_shapley_exact(
            Some(product),
            ptr::null_mut(),
            x.as_ptr(),
            4,
            bg.as_ptr(),
            2,
            a.as_mut_ptr(),
            4,
            &mut a0,
        );
        assert_eq!(s, XtaxStatus::Ok);
        let s = xtax_shapley_kernel(
            Some(product),
            ptr::null_mut(),
            x.as_ptr(),
            4,
            bg.as_ptr(),
            2,
            0,
            1,
            b.as_mut_ptr(),
            4,
            &mut b0,
        );
        assert_eq!(s, XtaxStatus::Ok);
    }
    let fx: f64 = x.iter().map(|v| 1.0 + v).product();
    assert!((a.iter().sum::<f64>() + a0 - fx).abs() < 1e-12);
    assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-9));
    assert_eq!(a0, b0);
}

#[test]
fn callback_sees_user_data_on_calling_thread() {
    let mut calls = 0usize;
    let x = [1.0, 2.0, 3.0];
    let bg = [0.0; 3];
    let mut phi = [0.0; 3];
    unsafe {
        let s = xtax_shapley_exact(
            Some(counting),
            (&mut calls as *mut usize).cast(),
            x.as_ptr(),
            3,
            bg.as_ptr(),
            1,
            phi.as_mut_ptr(),
            3,
            ptr::null_mut(),
        );
        assert_eq!(s, XtaxStatus::Ok);
    }
    assert!(calls >= 8);
    assert_eq!(phi, [1.0, 2.0, 3.0]);
}

#[test]
fn shapley_argument_errors() {
    let x = [1.0; 3];
    let mut phi = [0.0; 3];
    unsafe {
        let s = xtax_shapley_exact(
            None,
            ptr::null_mut(),
            x.as_ptr(),
            3,
            x.as_ptr(),
            1,
            phi.as_mut_ptr(),
            3,
            ptr::null_mut(),
        );
        assert_eq!(s, XtaxStatus::NullPointer);
        let s = xtax_shapley_exact(
            Some(product),
            ptr::null_mut(),
            x.as_ptr(),
            3,
            x.as_ptr(),
            1,
            phi.as_mut_ptr(),
            2,
            ptr::null_mut(),
        );
        assert_eq!(s, XtaxStatus::Dimension);
        let s = xtax_shapley_exact(
            Some(product),
            ptr::null_mut(),
            x.as_ptr(),
            3,
            x.as_ptr(),
            0,
            phi.as_mut_ptr(),
            3,
            ptr::null_mut(),
        );
        assert_eq!(s, XtaxStatus::Empty);
        let big = [0.0; 16];
        let mut phi16 = [0.0; 16];
        let s = xtax_shapley_exact(
            Some(product),
            ptr::null_mut(),
            big.as_ptr(),
            16,
            big.as_ptr(),
            1,
            phi16.as_mut_ptr(),
            16,
            ptr::null_mut(),
        );
        assert_eq!(s, XtaxStatus::TooManyFeatures);
    }
}

#[test]
fn svm_handle_lifecycle() {
    unsafe {
        let mut svm: *mut XtaxSvm = ptr::null_mut();
        assert_eq!(xtax_svm_train_iris(&mut svm), XtaxStatus::Ok);
        let (mut p, mut k) = (0, 0);
        assert_eq!(xtax_svm_shape(svm, &mut p, &mut k), XtaxStatus::Ok);
        assert_eq!((p, k), (4, 3));
        let row = [6.3, 3.3, 6.0, 2.5];
        let mut class = 0;
        assert_eq!(xtax_svm_predict_class(svm, row.as_ptr(), 4, &mut class), XtaxStatus::Ok);
        assert_eq!(class, 2);
        let mut d = [0.0; 3];
        assert_eq!(
            xtax_svm_decision(svm, row.as_ptr(), 4, d.as_mut_ptr(), 3),
            XtaxStatus::Ok
        );
        assert_eq!(
            xtax_svm_decision(svm, row.as_ptr(), 3, d.as_mut_ptr(), 3),
            XtaxStatus::Dimension
        );

        let mut json = ptr::null_mut();
        assert_eq!(xtax_svm_to_json(svm, &mut json), XtaxStatus::Ok);
        let mut copy: *mut XtaxSvm = ptr::null_mut();
        assert_eq!(xtax_svm_from_json(json, &mut copy), XtaxStatus::Ok);
        xtax_string_free(json);
        let mut d2 = [0.0; 3];
        assert_eq!(
            xtax_svm_decision(copy, row.as_ptr(), 4, d2.as_mut_ptr(), 3),
            XtaxStatus::Ok
        );
        assert_eq!(d, d2);
        assert_eq!(xtax_svm_from_json(c"{".as_ptr(), &mut copy), XtaxStatus::Data);
        xtax_svm_free(copy);
        xtax_svm_free(svm);
        xtax_svm_free(ptr::null_mut());
        assert_eq!(xtax_svm_shape(ptr::null(), &mut p, &mut k), XtaxStatus::NullPointer);
    }
}

#[test]
fn trained_svm_rules_have_box_complexity() {
    // two separated blobs
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..20 {
        let t = i as f64 * 0.05;
        x.extend_from_slice(&[t, 1.0 - t, t * t]);
        y.push(0u32);
        x.extend_from_slice(&[3.0 + t, 4.0 - t, 3.0 + t * t]);
        y.push(1);
    }
    unsafe {
        let mut svm: *mut XtaxSvm = ptr::null_mut();
        assert_eq!(
            xtax_svm_train(x.as_ptr(), 40, 3, y.as_ptr(), 2, 1.0, &mut svm),
            XtaxStatus::Ok
        );
        let (mut n, mut w) = (0, 0.0);
        let s = xtax_svm_rule_complexity(
            svm,
            x.as_ptr(),
            40,
            y.as_ptr(),
            1,
            XtaxAggregation::Average,
            &mut n,
            &mut w,
        );
        assert_eq!(s, XtaxStatus::Ok);
        assert!(n > 0);
        assert_eq!(w, 2.0);
        xtax_svm_free(svm);
        let bad = [0u32, 5];
        let mut other: *mut XtaxSvm = ptr::null_mut();
        assert_eq!(
            xtax_svm_train(x.as_ptr(), 2, 3, bad.as_ptr(), 2, 1.0, &mut other),
            XtaxStatus::InvalidArgument
        );
    }
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/xaitax.h")).unwrap();
    for name in [
        "xtax_last_error",
        "xtax_version",
        "xtax_string_free",
        "xtax_total_two",
        "xtax_total_explainability",
        "xtax_understandability",
        "xtax_explainability",
        "xtax_svm_train_iris",
        "xtax_svm_train",
        "xtax_svm_from_json",
        "xtax_svm_to_json",
        "xtax_svm_free",
        "xtax_svm_shape",
        "xtax_svm_decision",
        "xtax_svm_predict_class",
        "xtax_svm_rule_complexity",
        "xtax_shapley_exact",
        "xtax_shapley_kernel",
        "XTAX_STATUS_OK",
        "typedef struct XtaxSvm XtaxSvm",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut build = Command::new(cargo);
    build.args(["build", "-p", "xaitax-ffi", "--lib"]);
    if lib_dir.ends_with("release") {
        build.arg("--release");
    }
    let built = build.output().unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let lib = lib_dir.join("libxaitax_ffi.a");
    assert!(lib.is_file(), "{}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let cc = Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok 0.1.0"));
}
