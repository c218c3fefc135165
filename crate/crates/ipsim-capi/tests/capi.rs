//! Exercise the C ABI exactly as a foreign caller would: through raw
//! pointers and status codes.

use ipsim_capi::*;
use std::ffi::{CStr, CString};
use std::ptr;

const CONFIG: &str = r#"{
    "scenario": "multi-tenant",
    "policy": "segmented",
    "seed": 9,
    "tenants": 100,
    "warmup_days": 1,
    "adversary_days": 1
}"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn full_lifecycle_through_the_abi() {
    unsafe {
        let cfg = c(CONFIG);
        let mut sim: *mut IpsimSim = ptr::null_mut();
        assert_eq!(ipsim_sim_new(cfg.as_ptr(), &mut sim), IpsimStatus::Ok);
        assert!(!sim.is_null());

        // Stats before running is an invalid state.
        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            ipsim_sim_stats_json(sim, &mut json),
            IpsimStatus::InvalidState
        );
        assert!(!ipsim_last_error_message().is_null());

        assert_eq!(ipsim_sim_run(sim), IpsimStatus::Ok);
        assert_eq!(ipsim_sim_stats_json(sim, &mut json), IpsimStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap();
        let parsed: serde_json::Value = serde_json::from_str(text).unwrap();
        assert!(parsed["total_allocations"].as_u64().unwrap() > 0);
        assert!(parsed["adversary_allocations"].as_u64().unwrap() > 0);
        ipsim_string_free(json);

        let mut y = 0.0f64;
        assert_eq!(ipsim_sim_unique_ip_yield(sim, &mut y), IpsimStatus::Ok);
        assert!((0.0..=1.0).contains(&y));
        assert_eq!(ipsim_sim_lc_yield(sim, &mut y), IpsimStatus::Ok);
        assert!((0.0..=1.0).contains(&y));
        assert_eq!(ipsim_sim_ar_max(sim, &mut y), IpsimStatus::Ok);
        assert!(y > 0.0);

        ipsim_sim_free(sim);
    }
}

#[test]
fn determinism_across_handles() {
    unsafe {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let cfg = c(CONFIG);
            let mut sim: *mut IpsimSim = ptr::null_mut();
            assert_eq!(ipsim_sim_new(cfg.as_ptr(), &mut sim), IpsimStatus::Ok);
            assert_eq!(ipsim_sim_run(sim), IpsimStatus::Ok);
            let mut json: *mut std::ffi::c_char = ptr::null_mut();
            assert_eq!(ipsim_sim_stats_json(sim, &mut json), IpsimStatus::Ok);
            outputs.push(CStr::from_ptr(json).to_str().unwrap().to_string());
            ipsim_string_free(json);
            ipsim_sim_free(sim);
        }
        assert_eq!(outputs[0], outputs[1]);
    }
}

#[test]
fn error_paths_set_status_and_message() {
    unsafe {
        let mut sim: *mut IpsimSim = ptr::null_mut();
        assert_eq!(
            ipsim_sim_new(ptr::null(), &mut sim),
            IpsimStatus::NullArgument
        );

        let bad_utf8 = [0xFFu8, 0xFE, 0x00];
        assert_eq!(
            ipsim_sim_new(bad_utf8.as_ptr() as *const _, &mut sim),
            IpsimStatus::InvalidUtf8
        );

        let cfg = c(r#"{"scenario": "benign"}"#);
        assert_eq!(
            ipsim_sim_new(cfg.as_ptr(), &mut sim),
            IpsimStatus::InvalidConfig
        );
        let msg = CStr::from_ptr(ipsim_last_error_message()).to_str().unwrap();
        assert!(!msg.is_empty());

        let cfg = c(r#"{"scenario": "benign", "policy": "lru", "seed": 1, "ar_max": 0.0}"#);
        assert_eq!(
            ipsim_sim_new(cfg.as_ptr(), &mut sim),
            IpsimStatus::InvalidConfig
        );

        assert_eq!(ipsim_sim_run(ptr::null_mut()), IpsimStatus::NullArgument);
        ipsim_string_free(ptr::null_mut());
        ipsim_sim_free(ptr::null_mut());
    }
}

#[test]
fn version_and_header_exist() {
    unsafe {
        let version = CStr::from_ptr(ipsim_version()).to_str().unwrap();
        assert!(!version.is_empty());
    }
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ipsim.h");
    let text = std::fs::read_to_string(header).expect("generated C header exists");
    for needle in [
        "typedef struct IpsimSim IpsimSim;",
        "ipsim_sim_new",
        "ipsim_sim_run",
        "ipsim_sim_stats_json",
        "ipsim_string_free",
        "IPSIM_H",
    ] {
        assert!(text.contains(needle), "header missing {needle}: {text}");
    }
}
