use std::ffi::{CStr, CString};
use std::ptr;

use sipcond_ffi::*;

fn kernel(spec: &str) -> *mut SipcondKernel {
    let s = CString::new(spec).unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { sipcond_kernel_from_family(s.as_ptr(), &mut k) }, SipcondStatus::Ok);
    k
}

fn copy(t: *const SipcondTrajectory) -> (Vec<f64>, Vec<f64>) {
    unsafe {
        let (n, s) = (sipcond_trajectory_len(t), sipcond_trajectory_sites(t));
        let mut times = vec![0.0; n];
        let mut pts = vec![0.0; n * s];
        assert_eq!(sipcond_trajectory_copy(t, times.as_mut_ptr(), pts.as_mut_ptr()), SipcondStatus::Ok);
        (times, pts)
    }
}

#[test]
fn seed_golden_value() {
    assert_eq!(sipcond_derive_replica_seed(0, 0), 0xE220_A839_7B1D_CDAF);
}

#[test]
fn sip_round_trip_matches_rust() {
    let k = kernel("cycle:4");
    assert_eq!(unsafe { sipcond_kernel_sites(k) }, 4);
    let start = [0.25; 4];
    let times = [0.0, 0.5, 1.0];
    let mut t = ptr::null_mut();
    let st = unsafe { sipcond_simulate_sip(k, 200, 0.05, 1.0, start.as_ptr(), 4, times.as_ptr(), 3, 42, &mut t) };
    assert_eq!(st, SipcondStatus::Ok);
    let (ts, pts) = copy(t);
    assert_eq!(ts, times);
    assert_eq!(pts.len(), 12);
    for row in pts.chunks(4) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    // same call through the Rust API
    use sipcond::kernel::{KernelFamily, RateKernel};
    use sipcond::simplex::SimplexPoint;
    use sipcond::sip::{simulate_sip, ParticleConfig, SipParams};
    let rk = RateKernel::from_family(&KernelFamily::Cycle(4)).unwrap();
    let p = SipParams::new(200, 0.05, 1.0).unwrap();
    let init = ParticleConfig::from_simplex(&SimplexPoint::uniform(4), 200).unwrap();
    let direct = simulate_sip(&rk, &p, &init, &times, 42, 0, &mut sipcond::rng::rng_from_seed(42)).unwrap();
    let flat: Vec<f64> = direct.points.iter().flat_map(|x| x.coords().to_vec()).collect();
    assert_eq!(flat, pts);
    unsafe {
        sipcond_trajectory_free(t);
        sipcond_kernel_free(k);
    }
}

#[test]
fn limit_and_corner_chain() {
    let k = kernel("chain:3");
    let times = [0.0, 0.5, 1.0, 2.0];
    let start = [0.5, 0.0, 0.5];
    let mut t = ptr::null_mut();
    let st = unsafe {
        sipcond_simulate_limit(
            k,
            1.0,
            SIPCOND_JUMP_CONSTANT,
            SIPCOND_DIFFUSION_HALF,
            1e-3,
            start.as_ptr(),
            3,
            times.as_ptr(),
            4,
            7,
            &mut t,
        )
    };
    assert_eq!(st, SipcondStatus::Ok);
    let (_, pts) = copy(t);
    for row in pts.chunks(3) {
        // never both ends of an edge occupied
        assert!(row[1] == 0.0 || (row[0] == 0.0 && row[2] == 0.0));
    }
    unsafe { sipcond_trajectory_free(t) };

    let mut c = ptr::null_mut();
    assert_eq!(unsafe { sipcond_simulate_corner_chain(k, 1.0, 1, times.as_ptr(), 4, 3, &mut c) }, SipcondStatus::Ok);
    let (_, pts) = copy(c);
    assert_eq!(&pts[..3], &[0.0, 1.0, 0.0]);
    unsafe {
        sipcond_trajectory_free(c);
        sipcond_kernel_free(k);
    }
}

#[test]
fn errors_are_reported() {
    let mut k = ptr::null_mut();
    let bad = [0.0, 1.0, 2.0, 0.0];
    assert_eq!(unsafe { sipcond_kernel_from_matrix(bad.as_ptr(), 2, &mut k) }, SipcondStatus::InvalidKernel);
    assert!(k.is_null());
    let msg = unsafe { CStr::from_ptr(sipcond_last_error()) }.to_str().unwrap();
    assert!(msg.contains("asymmetric"), "{msg}");

    let k = kernel("chain:3");
    let start = [0.5, 0.5, 0.0];
    let times = [1.0];
    let mut t = ptr::null_mut();
    let st = unsafe { sipcond_simulate_limit(k, 1.0, 0, 0, 1e-3, start.as_ptr(), 3, times.as_ptr(), 1, 1, &mut t) };
    assert_eq!(st, SipcondStatus::NotOnSimplex);
    let st = unsafe { sipcond_simulate_limit(k, 1.0, 9, 0, 1e-3, start.as_ptr(), 3, times.as_ptr(), 1, 1, &mut t) };
    assert_eq!(st, SipcondStatus::InvalidArgument);
    let st =
        unsafe { sipcond_simulate_sip(ptr::null(), 10, 0.1, 1.0, start.as_ptr(), 3, times.as_ptr(), 1, 1, &mut t) };
    assert_eq!(st, SipcondStatus::NullPointer);
    assert!(t.is_null());

    let good = [0.0, 1.0, 1.0, 0.0];
    let mut k2 = ptr::null_mut();
    assert_eq!(unsafe { sipcond_kernel_from_matrix(good.as_ptr(), 2, &mut k2) }, SipcondStatus::Ok);
    assert!(sipcond_last_error().is_null());
    unsafe {
        sipcond_kernel_free(k);
        sipcond_kernel_free(k2);
        sipcond_kernel_free(ptr::null_mut());
    }
}

#[test]
fn oracle_first_moment() {
    let times = [0.0, 0.7];
    let mut out = [0.0; 6];
    let st = unsafe { sipcond_moment_dual_oracle(2, 3.0, 0.2, times.as_ptr(), 2, out.as_mut_ptr()) };
    assert_eq!(st, SipcondStatus::Ok);
    assert_eq!(out[0], 1.0);
    assert!((out[1] - 0.2).abs() < 1e-15);
    // n = 1 relaxes to 1/2 at rate 2
    let expect = 0.5 + (0.2 - 0.5) * (-2.0f64 * 0.7).exp();
    assert!((out[4] - expect).abs() < 1e-12);
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sipcond.h")).unwrap();
    for name in [
        "typedef struct SipcondKernel SipcondKernel",
        "typedef struct SipcondTrajectory SipcondTrajectory",
        "SIPCOND_STATUS_OK = 0",
        "sipcond_simulate_sip(",
        "sipcond_simulate_limit(",
        "sipcond_simulate_corner_chain(",
        "sipcond_derive_replica_seed(",
        "sipcond_moment_dual_oracle(",
        "sipcond_last_error(",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}
