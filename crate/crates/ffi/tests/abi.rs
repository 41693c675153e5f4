use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tradeq_ffi::*;

fn last_error() -> String {
    let p = tq_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn solves_degenerate_fixture() {
    unsafe {
        let name = CString::new("degenerate_2x2").unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(
            tq_instance_from_fixture(name.as_ptr(), &mut inst),
            TqStatus::Ok
        );
        assert_eq!(tq_instance_goods(inst), 2);
        assert_eq!(tq_instance_countries(inst), 2);

        let cfg = tq_solver_config_default();
        let mut res = ptr::null_mut();
        assert_eq!(tq_solve(inst, &cfg, &mut res), TqStatus::Ok);
        let mut p = [f64::NAN; 2];
        assert_eq!(tq_result_prices(res, p.as_mut_ptr(), 2), TqStatus::Ok);
        assert_eq!(p, [1.0, 0.0]);
        assert_eq!(tq_result_degeneracy(res), 1);
        assert!((tq_result_recession_level(res) - 0.5).abs() < 1e-12);
        assert!(tq_result_converged(res));

        let mut y = [0.0; 2];
        assert_eq!(
            tq_result_balance_ratios(res, y.as_mut_ptr(), 2),
            TqStatus::Ok
        );
        assert_eq!(y, [1.0, 1.0]);

        let json = tq_result_to_json(res);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        tq_string_free(json);
        assert!(text.contains("\"recession_level_proxy\": 0.5"), "{text}");

        tq_result_free(res);
        tq_instance_free(inst);
    }
}

#[test]
fn builds_instances_from_row_major_buffers() {
    unsafe {
        let c = [1.0, 0.0, 0.0, 1.0];
        let b = [0.0, 1.0, 1.0, 0.0];
        let mut inst = ptr::null_mut();
        assert_eq!(
            tq_instance_new(2, 2, c.as_ptr(), b.as_ptr(), &mut inst),
            TqStatus::Ok
        );

        let p = [2.0, 2.0];
        let mut d = [f64::NAN; 2];
        assert_eq!(
            tq_excess_demand(inst, p.as_ptr(), 2, d.as_mut_ptr(), 2),
            TqStatus::Ok
        );
        assert_eq!(d, [0.0, 0.0]);

        let mut shares = [0.0; 2];
        assert_eq!(
            tq_country_supply_shares(inst, shares.as_mut_ptr(), 2),
            TqStatus::Ok
        );
        assert_eq!(shares, [0.5, 0.5]);

        let mut res = ptr::null_mut();
        assert_eq!(tq_solve(inst, ptr::null(), &mut res), TqStatus::Ok);
        assert_eq!(tq_result_iterations(res), 0);
        tq_result_free(res);
        tq_instance_free(inst);
    }
}

#[test]
fn reports_errors_with_codes_and_messages() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(
            tq_instance_new(2, 2, ptr::null(), ptr::null(), &mut inst),
            TqStatus::NullPointer
        );
        assert!(inst.is_null());

        let bad = [1.0, -1.0];
        assert_eq!(
            tq_instance_new(1, 2, bad.as_ptr(), bad.as_ptr(), &mut inst),
            TqStatus::InvalidArgument
        );

        let name = CString::new("nope").unwrap();
        assert_eq!(
            tq_instance_from_fixture(name.as_ptr(), &mut inst),
            TqStatus::UnknownFixture
        );
        assert!(last_error().contains("nope"));

        let name = CString::new("fig1_2020").unwrap();
        assert_eq!(
            tq_instance_from_fixture(name.as_ptr(), &mut inst),
            TqStatus::InvalidArgument
        );

        // the exporter in column 0 imports nothing
        let c = [0.0, 1.0];
        let b = [1.0, 1.0];
        assert_eq!(
            tq_instance_new(1, 2, c.as_ptr(), b.as_ptr(), &mut inst),
            TqStatus::Ok
        );
        let mut res = ptr::null_mut();
        assert_eq!(
            tq_solve(inst, ptr::null(), &mut res),
            TqStatus::UndefinedDemand
        );
        assert!(res.is_null());
        tq_instance_free(inst);

        let z = [0.0, 0.0];
        assert_eq!(
            tq_instance_new(1, 2, b.as_ptr(), z.as_ptr(), &mut inst),
            TqStatus::Ok
        );
        assert_eq!(tq_solve(inst, ptr::null(), &mut res), TqStatus::ZeroSupply);
        tq_instance_free(inst);

        let name = CString::new("ideal_2x2").unwrap();
        assert_eq!(
            tq_instance_from_fixture(name.as_ptr(), &mut inst),
            TqStatus::Ok
        );
        let mut cfg = tq_solver_config_default();
        cfg.damping = 0.0;
        assert_eq!(tq_solve(inst, &cfg, &mut res), TqStatus::InvalidArgument);
        assert!(last_error().contains("damping"));

        assert_eq!(tq_solve(inst, ptr::null(), &mut res), TqStatus::Ok);
        let mut small = [0.0; 1];
        assert_eq!(
            tq_result_prices(res, small.as_mut_ptr(), 1),
            TqStatus::BufferTooSmall
        );
        assert_eq!(
            tq_result_prices(res, ptr::null_mut(), 2),
            TqStatus::NullPointer
        );
        assert_eq!(
            tq_result_prices(ptr::null(), small.as_mut_ptr(), 1),
            TqStatus::NullPointer
        );
        tq_result_free(res);
        tq_instance_free(inst);

        tq_instance_free(ptr::null_mut());
        tq_result_free(ptr::null_mut());
        tq_string_free(ptr::null_mut());
        assert!(tq_result_recession_level(ptr::null()).is_nan());
    }
}

#[test]
fn generated_header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/tradeq.h")).unwrap();
    for name in [
        "typedef struct TqInstance TqInstance;",
        "typedef struct TqResult TqResult;",
        "TQ_STATUS_UNDEFINED_DEMAND = 4",
        "TqStatus tq_solve(",
        "char *tq_result_to_json(",
        "const char *tq_last_error_message(void);",
        "TqSolverConfig tq_solver_config_default(void);",
    ] {
        assert!(header.contains(name), "missing `{name}`");
    }
}

/// Compiles and runs a C program against the header and static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libtradeq_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "tradeq.h"
int main(void) {
    TqInstance *inst = NULL;
    TqResult *res = NULL;
    double p[2];
    if (tq_instance_from_fixture("degenerate_2x2", &inst) != TQ_STATUS_OK) return 1;
    TqSolverConfig cfg = tq_solver_config_default();
    if (tq_solve(inst, &cfg, &res) != TQ_STATUS_OK) return 2;
    if (tq_result_prices(res, p, 2) != TQ_STATUS_OK) return 3;
    printf("%g %g %zu %g\n", p[0], p[1], tq_result_degeneracy(res), tq_result_recession_level(res));
    tq_result_free(res);
    tq_instance_free(inst);
    return 0;
}
"#,
    )
    .unwrap();
    let out = dir.path().join("main");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "1 0 1 0.5\n");
}

fn which_cc() -> Result<PathBuf, ()> {
    for cand in ["cc", "gcc", "clang"] {
        if Command::new(cand)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(PathBuf::from(cand));
        }
    }
    Err(())
}
