//! Exercises the C surface the way an external caller would: open handles
//! by name, read shapes and reports back through raw pointers, and check
//! that every failure path sets a readable message.

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use pncalc_ffi::{
    pn_flow_final_state, pn_hamiltonian_value, pn_hierarchy_field, pn_last_error,
    pn_string_free, pn_system_dim, pn_system_free, pn_system_name, pn_system_open,
    pn_system_rank, pn_system_validate, PnSystem, PN_ERR_CHECK_FAILED,
    PN_ERR_INVALID_ARGUMENT, PN_ERR_UNKNOWN_SYSTEM, PN_OK,
};

fn open(target: &str) -> *mut PnSystem {
    let name = CString::new(target).unwrap();
    let mut sys: *mut PnSystem = ptr::null_mut();
    let code = unsafe { pn_system_open(name.as_ptr(), &mut sys) };
    assert_eq!(code, PN_OK, "opening {target}: {}", last_error());
    assert!(!sys.is_null());
    sys
}

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { pn_string_free(p) };
    s
}

fn last_error() -> String {
    let p = pn_last_error();
    if p.is_null() {
        String::new()
    } else {
        take_string(p)
    }
}

fn temp_config(stem: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("{stem}-{}.json", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn open_reports_identity_and_shape() {
    let sys = open("toda-physical-2");
    assert_eq!(take_string(unsafe { pn_system_name(sys) }), "toda-physical-2");
    assert_eq!(unsafe { pn_system_dim(sys) }, 4);
    assert_eq!(unsafe { pn_system_rank(sys) }, 4);
    unsafe { pn_system_free(sys) };

    assert!(unsafe { pn_system_name(ptr::null()) }.is_null());
    assert_eq!(unsafe { pn_system_dim(ptr::null()) }, -1);
    assert_eq!(unsafe { pn_system_rank(ptr::null()) }, -1);
    unsafe { pn_system_free(ptr::null_mut()) };
    unsafe { pn_string_free(ptr::null_mut()) };
}

#[test]
fn validate_passes_and_reports_json() {
    let sys = open("toda-physical-2");
    let mut json: *mut c_char = ptr::null_mut();
    let code = unsafe { pn_system_validate(sys, 10, 1e-8, 42, &mut json) };
    assert_eq!(code, PN_OK, "{}", last_error());
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["system"], "toda-physical-2");
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["pass"] == true));
    unsafe { pn_system_free(sys) };
}

#[test]
fn validate_distinguishes_passing_and_failing_configs() {
    let good = temp_config(
        "pncalc-ffi-conformal",
        r#"{
            "name": "conformal-plane",
            "coords": ["x", "y"],
            "pi": {"0,1": "1"},
            "N": [["0.5*(x+y)", "0"], ["0", "0.5*(x+y)"]],
            "domain": {"x": [1, 2], "y": [1, 2]}
        }"#,
    );
    let sys = open(good.to_str().unwrap());
    let code = unsafe { pn_system_validate(sys, 10, 1e-8, 7, ptr::null_mut()) };
    assert_eq!(code, PN_OK, "{}", last_error());
    unsafe { pn_system_free(sys) };
    std::fs::remove_file(&good).unwrap();

    let bad = temp_config(
        "pncalc-ffi-broken",
        r#"{
            "name": "broken-jacobi",
            "coords": ["x", "y", "z"],
            "pi": {"0,1": "1", "1,2": "x*y"},
            "domain": {"x": [-1, 1], "y": [-1, 1], "z": [-1, 1]}
        }"#,
    );
    let sys = open(bad.to_str().unwrap());
    let mut json: *mut c_char = ptr::null_mut();
    let code = unsafe { pn_system_validate(sys, 10, 1e-8, 7, &mut json) };
    assert_eq!(code, PN_ERR_CHECK_FAILED);
    assert!(last_error().contains("checks failed"));
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["pass"] == false));
    unsafe { pn_system_free(sys) };
    std::fs::remove_file(&bad).unwrap();
}

#[test]
fn unknown_target_sets_error() {
    let name = CString::new("no-such-system").unwrap();
    let mut sys: *mut PnSystem = ptr::null_mut();
    let code = unsafe { pn_system_open(name.as_ptr(), &mut sys) };
    assert_eq!(code, PN_ERR_UNKNOWN_SYSTEM);
    assert!(sys.is_null());
    assert!(last_error().contains("neither a built-in"));
}

#[test]
fn hamiltonian_values_match_the_origin_oracle() {
    let sys = open("toda-physical-2");
    let origin = [0.0f64; 4];
    let mut value = f64::NAN;
    for (index, want) in [(0i64, 0.0), (1, 0.0), (2, 2.0)] {
        let code = unsafe {
            pn_hamiltonian_value(sys, index, origin.as_ptr(), origin.len(), &mut value)
        };
        assert_eq!(code, PN_OK, "h{index}: {}", last_error());
        assert!(
            (value - want).abs() < 1e-12,
            "h{index} at the origin: got {value}, want {want}"
        );
    }
    unsafe { pn_system_free(sys) };
}

#[test]
fn hierarchy_field_pushes_to_base() {
    let sys = open("toda-physical-2");
    let origin = [0.0f64; 4];
    let mut field = [f64::NAN; 4];
    let code = unsafe {
        pn_hierarchy_field(sys, 1, origin.as_ptr(), origin.len(), field.as_mut_ptr())
    };
    assert_eq!(code, PN_OK, "{}", last_error());
    let want = [2.0, 2.0, 0.0, 0.0];
    for (got, want) in field.iter().zip(want) {
        assert!((got - want).abs() < 1e-12, "field {field:?}");
    }
    unsafe { pn_system_free(sys) };
}

#[test]
fn flow_conserves_the_ladder() {
    let sys = open("toda-flaschka-3");
    assert_eq!(unsafe { pn_system_dim(sys) }, 5);
    let x0 = [1.0, 0.8, 0.3, -0.1, 0.2];
    let mut state = [f64::NAN; 5];
    let mut drift = f64::NAN;
    let code = unsafe {
        pn_flow_final_state(
            sys,
            2,
            0,
            x0.as_ptr(),
            x0.len(),
            1.0,
            1e-3,
            state.as_mut_ptr(),
            &mut drift,
        )
    };
    assert_eq!(code, PN_OK, "{}", last_error());
    assert!(drift < 1e-10, "ladder drift {drift:.3e}");
    assert!(state.iter().all(|v| v.is_finite()));
    let moved = state
        .iter()
        .zip(x0)
        .map(|(s, x)| (s - x).abs())
        .fold(0.0, f64::max);
    assert!(moved > 1e-3, "the flow did not move the state: {state:?}");

    // The second bracket drives the same ladder.
    let code = unsafe {
        pn_flow_final_state(sys, 1, 1, x0.as_ptr(), x0.len(), 1.0, 1e-3, ptr::null_mut(), &mut drift)
    };
    assert_eq!(code, PN_OK, "{}", last_error());
    assert!(drift < 1e-10, "ladder drift {drift:.3e}");
    unsafe { pn_system_free(sys) };
}

#[test]
fn invalid_arguments_are_rejected_with_messages() {
    let mut sys: *mut PnSystem = ptr::null_mut();
    assert_eq!(
        unsafe { pn_system_open(ptr::null(), &mut sys) },
        PN_ERR_INVALID_ARGUMENT
    );
    let name = CString::new("toda-physical-2").unwrap();
    assert_eq!(
        unsafe { pn_system_open(name.as_ptr(), ptr::null_mut()) },
        PN_ERR_INVALID_ARGUMENT
    );
    assert_eq!(
        unsafe { pn_system_validate(ptr::null(), 10, 1e-8, 42, ptr::null_mut()) },
        PN_ERR_INVALID_ARGUMENT
    );

    let sys = open("toda-physical-2");
    let short = [0.0f64; 2];
    let mut value = f64::NAN;
    let code = unsafe {
        pn_hamiltonian_value(sys, 2, short.as_ptr(), short.len(), &mut value)
    };
    assert_eq!(code, PN_ERR_INVALID_ARGUMENT);
    assert!(last_error().contains("expected 4"), "{}", last_error());
    unsafe { pn_system_free(sys) };

    // The reduced chart has no recursion operator and only brackets 0, 1.
    let sys = open("toda-flaschka-2");
    let pt = [1.0f64, 0.0, 0.0];
    let code = unsafe { pn_hamiltonian_value(sys, 2, pt.as_ptr(), pt.len(), &mut value) };
    assert_eq!(code, PN_ERR_INVALID_ARGUMENT);
    assert!(last_error().contains("no recursion operator"), "{}", last_error());
    let code = unsafe {
        pn_flow_final_state(sys, 2, 5, ptr::null(), 0, 0.1, 1e-3, ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(code, PN_ERR_INVALID_ARGUMENT);
    assert!(last_error().contains("brackets 0 and 1"), "{}", last_error());
    unsafe { pn_system_free(sys) };
}

/// Every exported symbol and status code must appear in the committed
/// header with a matching declaration, so C callers never chase a stale
/// surface.
#[test]
fn header_covers_every_symbol_and_code() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = std::fs::read_to_string(root.join("src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(root.join("include/pncalc.h")).unwrap();

    let mut symbols = Vec::new();
    for line in lib.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap().trim();
            symbols.push(name.to_string());
        }
    }
    assert!(symbols.len() >= 10, "expected the full surface, found {symbols:?}");
    for name in &symbols {
        assert!(
            header.contains(&format!("{name}(")),
            "header is missing a declaration for {name}"
        );
    }

    let mut codes = 0;
    for line in lib.lines() {
        let Some(rest) = line.trim().strip_prefix("pub const PN_") else {
            continue;
        };
        let (name_rest, value) = rest.split_once(": i32 = ").unwrap();
        let name = format!("PN_{name_rest}");
        let value = value.trim_end_matches(';').trim();
        assert!(
            header.contains(&format!("#define {name} {value}")),
            "header is missing {name} = {value}"
        );
        codes += 1;
    }
    assert_eq!(codes, 5, "expected five status codes");
}
