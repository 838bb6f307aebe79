use std::ffi::CStr;
use std::ptr;

use squeezekit_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { sk_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn circuit_round_trip() {
    unsafe {
        let mut lat = ptr::null_mut();
        assert_eq!(sk_lattice_chain(6, 2.0, 1.0, &mut lat), SkStatus::Ok);
        assert_eq!(sk_lattice_n_atoms(lat), 6);
        assert!((sk_lattice_coupling(lat, 0, 1) - 64.0 / 65.0).abs() < 1e-12);
        assert!(sk_lattice_coupling(lat, 0, 6).is_nan());

        let mut st = ptr::null_mut();
        assert_eq!(sk_state_coherent_x(6, &mut st), SkStatus::Ok);
        let mut xi2 = 0.0;
        assert_eq!(sk_state_xi2(st, &mut xi2), SkStatus::Ok);
        assert!((xi2 - 1.0).abs() < 1e-12);

        let params = [0.3, 0.5, 0.1];
        assert_eq!(sk_state_apply_circuit(st, lat, params.as_ptr(), 3), SkStatus::Ok);
        let mut mean = [0.0; 3];
        assert_eq!(sk_state_mean_spin(st, mean.as_mut_ptr()), SkStatus::Ok);
        assert!(mean[0] > 0.0 && mean[1].abs() < 1e-10 && mean[2].abs() < 1e-10);
        assert_eq!(sk_state_xi2(st, &mut xi2), SkStatus::Ok);
        assert!(xi2 < 1.0);

        sk_state_free(st);
        sk_lattice_free(lat);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut st = ptr::null_mut();
        assert_eq!(sk_state_coherent_x(40, &mut st), SkStatus::Capacity);
        assert!(st.is_null());
        assert!(last_error().contains("cap"), "{}", last_error());

        assert_eq!(sk_state_coherent_x(4, ptr::null_mut()), SkStatus::NullPointer);
        assert_eq!(sk_state_xi2(ptr::null(), ptr::null_mut()), SkStatus::NullPointer);

        let mut lat = ptr::null_mut();
        assert_eq!(sk_lattice_square(2, 2, 1.5, 1.0, &mut lat), SkStatus::Ok);
        assert_eq!(sk_state_coherent_x(4, &mut st), SkStatus::Ok);
        let bad = [0.1, 0.2];
        assert_eq!(sk_state_apply_circuit(st, lat, bad.as_ptr(), 2), SkStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        // Length 0 is the identity circuit.
        assert_eq!(sk_state_apply_circuit(st, lat, ptr::null(), 0), SkStatus::Ok);
        assert!(last_error().is_empty());
        sk_state_free(st);
        sk_lattice_free(lat);
        sk_lattice_free(ptr::null_mut());
    }
}

#[test]
fn truncated_error_copy() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(sk_trial_state_xi2(5, &mut out), SkStatus::InvalidArgument);
        let mut buf = [1 as std::ffi::c_char; 4];
        let full = sk_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(full > 3);
        assert_eq!(buf[3], 0);
        assert_eq!(sk_last_error_message(ptr::null_mut(), 0), full);
    }
}

#[test]
fn reference_values() {
    unsafe {
        let mut x = 0.0;
        assert_eq!(sk_trial_state_xi2(10, &mut x), SkStatus::Ok);
        assert!((x - 4.0 / 12.0).abs() < 1e-12);
        assert_eq!(sk_oat_optimal_xi2(16, &mut x), SkStatus::Ok);
        assert!(x > 0.0 && x < 1.0);
        let v = CStr::from_ptr(sk_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
        assert_eq!(CStr::from_ptr(sk_status_name(SkStatus::Capacity)).to_str().unwrap(), "capacity exceeded");
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/squeezekit.h")).unwrap();
    for name in [
        "SkLattice",
        "SkState",
        "SK_STATUS_CAPACITY",
        "sk_last_error_message",
        "sk_lattice_square",
        "sk_state_apply_circuit",
        "sk_state_free",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
