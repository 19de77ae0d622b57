use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use brightbeam_ffi::*;

const PI_2: f64 = std::f64::consts::FRAC_PI_2;

fn input(db: f64) -> BbSqueezedInput {
    BbSqueezedInput { amplitude: 1e4, squeezing_db: db, antisqueezing_db: db, excess_phase_db: 0.0, correlated_group: 1 }
}

fn last_error() -> String {
    let p = bb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn entangled_pair_witness_through_handles() {
    let a = input(3.0103);
    let mut state = ptr::null_mut();
    unsafe {
        assert_eq!(bb_generate_entangled(&a, &a, PI_2, 0.5, 1.0, &mut state), BbStatus::Ok);
        assert!(bb_last_error_message().is_null());
        assert_eq!(bb_state_num_modes(state), 2);

        let mut report = BbWitnessReport::default();
        assert_eq!(bb_duan_simon(state, 1.0, &mut report), BbStatus::Ok);
        assert!((report.sum - 1.0).abs() < 1e-4, "{report:?}");
        assert!((report.v_sq_plus - 0.5).abs() < 1e-4);
        assert_eq!(report.bound, 2.0);
        assert!(report.witnessed);

        let mut amp = 0.0;
        assert_eq!(bb_state_amplitude(state, 1, &mut amp), BbStatus::Ok);
        assert!((amp - 1e4).abs() < 1e-6);
        assert_eq!(bb_state_amplitude(state, 2, &mut amp), BbStatus::InvalidArgument);

        let mut cov = [0.0; 16];
        assert_eq!(bb_state_covariance(state, cov.as_mut_ptr(), 15), BbStatus::InvalidArgument);
        assert_eq!(bb_state_covariance(state, cov.as_mut_ptr(), 16), BbStatus::Ok);
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(cov[r * 4 + c], cov[c * 4 + r]);
            }
        }
        bb_state_free(state);
    }
}

#[test]
fn state_operations_compose() {
    unsafe {
        let mut sq = ptr::null_mut();
        let mut coh = ptr::null_mut();
        assert_eq!(bb_state_squeezed(&input(6.0), &mut sq), BbStatus::Ok);
        assert_eq!(bb_state_coherent(1e3, &mut coh), BbStatus::Ok);

        let mut pair = ptr::null_mut();
        assert_eq!(bb_state_compose(sq, coh, 1.0, &mut pair), BbStatus::Ok);
        let mut mixed = ptr::null_mut();
        assert_eq!(bb_state_beamsplitter(pair, 0, 1, 0.5, PI_2, &mut mixed), BbStatus::Ok);
        let mut lossy = ptr::null_mut();
        assert_eq!(bb_state_loss(mixed, 0, 0.8, &mut lossy), BbStatus::Ok);
        let mut turned = ptr::null_mut();
        assert_eq!(bb_state_phase(lossy, 1, 0.3, &mut turned), BbStatus::Ok);
        assert_eq!(bb_state_num_modes(turned), 2);

        let mut bad = ptr::null_mut();
        assert_eq!(bb_state_loss(turned, 0, 1.5, &mut bad), BbStatus::InvalidArgument);
        assert!(bad.is_null());
        assert!(last_error().contains("1.5"), "{}", last_error());

        for s in [sq, coh, pair, mixed, lossy, turned] {
            bb_state_free(s);
        }
        bb_state_free(ptr::null_mut());
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(bb_state_squeezed(ptr::null(), &mut out), BbStatus::NullPointer);
        assert!(last_error().contains("spec"));
        assert_eq!(bb_state_coherent(1.0, ptr::null_mut()), BbStatus::NullPointer);
        assert_eq!(bb_duan_simon(ptr::null(), 1.0, ptr::null_mut()), BbStatus::NullPointer);
        assert_eq!(bb_scenario_parse(ptr::null(), ptr::null_mut()), BbStatus::NullPointer);
        assert_eq!(bb_state_num_modes(ptr::null()), 0);
    }
}

#[test]
fn scenarios_run_and_report_errors() {
    let text = CString::new("method = \"B\"\ninput_a.squeezing_db = 3.0103\ninput_b.squeezing_db = 3.0103\n").unwrap();
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(bb_scenario_parse(text.as_ptr(), &mut sc), BbStatus::Ok);
        let mut r = BbReport::default();
        assert_eq!(bb_scenario_run(sc, &mut r), BbStatus::Ok);
        assert_eq!(r.method as u8, b'B');
        assert!((r.sum - 1.0).abs() < 1e-4);
        assert!(r.witnessed);
        assert!(r.mc_sum.is_nan() && r.mc_stderr.is_nan());
        bb_scenario_free(sc);

        let bad = CString::new("method = \"B\"\ninput_a.squeezing_db = 3\n").unwrap();
        assert_eq!(bb_scenario_parse(bad.as_ptr(), &mut sc), BbStatus::InvalidArgument);
        assert!(last_error().contains("input_b.squeezing_db"), "{}", last_error());

        let dark = CString::new("method = \"C\"\nphi = 0\ninput_a.squeezing_db = 3\ninput_b.squeezing_db = 3\n").unwrap();
        assert_eq!(bb_scenario_parse(dark.as_ptr(), &mut sc), BbStatus::Ok);
        assert_eq!(bb_scenario_run(sc, &mut r), BbStatus::Degenerate);
        bb_scenario_free(sc);

        let garbled = CString::new("method \"B\"\n").unwrap();
        assert_eq!(bb_scenario_parse(garbled.as_ptr(), &mut sc), BbStatus::Io);

        let missing = CString::new("/nonexistent/scenario.cfg").unwrap();
        assert_eq!(bb_scenario_load(missing.as_ptr(), &mut sc), BbStatus::Io);
    }
}

#[test]
fn scenario_files_load() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/scenario_method_b.cfg");
    let path = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(bb_scenario_load(path.as_ptr(), &mut sc), BbStatus::Ok);
        let mut r = BbReport::default();
        assert_eq!(bb_scenario_run(sc, &mut r), BbStatus::Ok);
        assert!((r.sum - 1.08).abs() < 0.01, "{r:?}");
        bb_scenario_free(sc);
    }
}

#[test]
fn decibel_conversions() {
    assert!((bb_db_to_var(10.0) - 10.0).abs() < 1e-12);
    let mut db = 0.0;
    unsafe {
        assert_eq!(bb_var_to_db(0.5, &mut db), BbStatus::Ok);
        assert!((db + 3.0103).abs() < 1e-4);
        assert_eq!(bb_var_to_db(-1.0, &mut db), BbStatus::InvalidArgument);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/brightbeam.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 19);
    for name in exports {
        assert!(h.contains(&format!("{name}(")), "{name} missing from header");
    }
    for status in ["BB_STATUS_OK = 0", "BB_STATUS_INVALID_ARGUMENT = 2", "BB_STATUS_DEGENERATE = 3", "BB_STATUS_PANIC = 5"] {
        assert!(h.contains(status), "{status}");
    }
    assert!(h.contains("typedef struct BbState BbState;"));
}

#[test]
fn c_program_links_against_the_static_library() {
    // target/<profile>/deps/<test binary> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libbrightbeam_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let built = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .output()
        .unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));

    let run = Command::new(&exe).output().unwrap();
    let out = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{out}{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.contains("sum 1.000000 bound 2.0 witnessed 1"), "{out}");
    assert!(out.contains("entangle_ratio"), "{out}");
}
