//! C ABI over `sipcond`.
//!
//! Kernels and trajectories are opaque heap handles created by `*_new`/
//! `simulate_*` calls and released with the matching `*_free`. Every fallible
//! function returns a `SipcondStatus`; on failure a message is kept per
//! thread and can be read with `sipcond_last_error`. Panics never cross the
//! boundary.
//!
//! Site indices are 0-based. A `seed` is used directly as the generator seed;
//! derive per-replica seeds with `sipcond_derive_replica_seed`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sipcond::diffusion::{moment_dual_oracle, MomentDualSpec};
use sipcond::kernel::{validate_kernel, KernelFamily, RateKernel};
use sipcond::limit::{
    simulate_corner_chain, simulate_limit, CoefficientConvention, DiffusionConstant, JumpRateRule, LimitParams,
    LimitState,
};
use sipcond::rng::{derive_replica_seed, rng_from_seed};
use sipcond::simplex::{SimplexPoint, Trajectory};
use sipcond::sip::{simulate_sip, ParticleConfig, SipParams};
use sipcond::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SipcondStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidKernel = 3,
    NotOnSimplex = 4,
    BudgetExceeded = 5,
    Runtime = 6,
    Panic = 7,
}

/// Jump-rate rule codes for `sipcond_simulate_limit`.
pub const SIPCOND_JUMP_PROPORTIONAL: u32 = 0;
pub const SIPCOND_JUMP_CONSTANT: u32 = 1;
/// Diffusion-constant codes for `sipcond_simulate_limit`.
pub const SIPCOND_DIFFUSION_FULL: u32 = 0;
pub const SIPCOND_DIFFUSION_HALF: u32 = 1;
pub const SIPCOND_DIFFUSION_QUARTER: u32 = 2;

/// Opaque rate kernel.
pub struct SipcondKernel(RateKernel);

/// Opaque sampled trajectory.
pub struct SipcondTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SipcondStatus {
    match e {
        Error::NotSquare { .. }
        | Error::EmptyKernel
        | Error::NegativeRate { .. }
        | Error::Asymmetric { .. }
        | Error::NonzeroDiagonal { .. }
        | Error::Reducible { .. }
        | Error::NotBinaryKernel
        | Error::UnknownFamily(_) => SipcondStatus::InvalidKernel,
        Error::NotOnSimplex { .. } | Error::NotAbsorbing => SipcondStatus::NotOnSimplex,
        Error::EventBudgetExceeded { .. } => SipcondStatus::BudgetExceeded,
        Error::NonpositiveAlpha(_) | Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } => {
            SipcondStatus::InvalidArgument
        }
        _ => SipcondStatus::Runtime,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (SipcondStatus, String)>) -> SipcondStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SipcondStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SipcondStatus::Panic
        }
    }
}

fn lib<T>(r: sipcond::Result<T>) -> Result<T, (SipcondStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SipcondStatus, String) {
    (SipcondStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (SipcondStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn kernel_ref<'a>(k: *const SipcondKernel) -> Result<&'a RateKernel, (SipcondStatus, String)> {
    k.as_ref().map(|k| &k.0).ok_or_else(|| null("kernel"))
}

unsafe fn emit(out: *mut *mut SipcondTrajectory, traj: Trajectory) {
    *out = Box::into_raw(Box::new(SipcondTrajectory(traj)));
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn sipcond_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sipcond_derive_replica_seed(master_seed: u64, replica: u64) -> u64 {
    derive_replica_seed(master_seed, replica)
}

/// Builds a kernel from a row-major `n × n` rate matrix.
#[no_mangle]
pub unsafe extern "C" fn sipcond_kernel_from_matrix(
    rates: *const f64,
    n: usize,
    out: *mut *mut SipcondKernel,
) -> SipcondStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let flat = slice(rates, n * n, "rates")?;
        let rows: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let k = lib(validate_kernel(&rows))?;
        *out = Box::into_raw(Box::new(SipcondKernel(k)));
        Ok(())
    })
}

/// Builds a kernel from a family name such as `"cycle:4"`.
#[no_mangle]
pub unsafe extern "C" fn sipcond_kernel_from_family(
    spec: *const c_char,
    out: *mut *mut SipcondKernel,
) -> SipcondStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(spec)
            .to_str()
            .map_err(|_| (SipcondStatus::InvalidArgument, "spec is not UTF-8".to_string()))?;
        let family: KernelFamily = lib(s.parse())?;
        let k = lib(RateKernel::from_family(&family))?;
        *out = Box::into_raw(Box::new(SipcondKernel(k)));
        Ok(())
    })
}

/// Number of sites, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sipcond_kernel_sites(kernel: *const SipcondKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.0.site_count())
}

#[no_mangle]
pub unsafe extern "C" fn sipcond_kernel_free(kernel: *mut SipcondKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Particle system with `n` particles started at `round(n · start)`.
#[no_mangle]
pub unsafe extern "C" fn sipcond_simulate_sip(
    kernel: *const SipcondKernel,
    n: u64,
    m: f64,
    alpha: f64,
    start: *const f64,
    sites: usize,
    times: *const f64,
    n_times: usize,
    seed: u64,
    out: *mut *mut SipcondTrajectory,
) -> SipcondStatus {
    guard(|| {
        let k = kernel_ref(kernel)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x0 = lib(SimplexPoint::new(slice(start, sites, "start")?.to_vec()))?;
        let params = lib(SipParams::new(n, m, alpha))?;
        let init = lib(ParticleConfig::from_simplex(&x0, n))?;
        let times = slice(times, n_times, "times")?;
        let traj = lib(simulate_sip(k, &params, &init, times, seed, 0, &mut rng_from_seed(seed)))?;
        emit(out, traj);
        Ok(())
    })
}

/// Limit jump-diffusion; `jump_rule` and `diffusion_constant` take the
/// `SIPCOND_JUMP_*` and `SIPCOND_DIFFUSION_*` codes.
#[no_mangle]
pub unsafe extern "C" fn sipcond_simulate_limit(
    kernel: *const SipcondKernel,
    alpha: f64,
    jump_rule: u32,
    diffusion_constant: u32,
    dt: f64,
    start: *const f64,
    sites: usize,
    times: *const f64,
    n_times: usize,
    seed: u64,
    out: *mut *mut SipcondTrajectory,
) -> SipcondStatus {
    guard(|| {
        let k = kernel_ref(kernel)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let bad = |what: &str, v: u32| (SipcondStatus::InvalidArgument, format!("unknown {what} code {v}"));
        let rule = *JumpRateRule::ALL.get(jump_rule as usize).ok_or_else(|| bad("jump rule", jump_rule))?;
        let diff = *DiffusionConstant::ALL
            .get(diffusion_constant as usize)
            .ok_or_else(|| bad("diffusion constant", diffusion_constant))?;
        let params = lib(LimitParams::new(alpha, CoefficientConvention::new(rule, diff), dt))?;
        let x0 = lib(SimplexPoint::new(slice(start, sites, "start")?.to_vec()))?;
        let state = lib(LimitState::new(x0, k))?;
        let times = slice(times, n_times, "times")?;
        let run = lib(simulate_limit(&state, k, &params, times, seed, 0, &mut rng_from_seed(seed)))?;
        emit(out, run.trajectory);
        Ok(())
    })
}

/// Corner random walk started at `start_site`.
#[no_mangle]
pub unsafe extern "C" fn sipcond_simulate_corner_chain(
    kernel: *const SipcondKernel,
    alpha: f64,
    start_site: usize,
    times: *const f64,
    n_times: usize,
    seed: u64,
    out: *mut *mut SipcondTrajectory,
) -> SipcondStatus {
    guard(|| {
        let k = kernel_ref(kernel)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let times = slice(times, n_times, "times")?;
        let traj = lib(simulate_corner_chain(k, alpha, start_site, times, seed, 0, &mut rng_from_seed(seed)))?;
        emit(out, traj);
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sipcond_trajectory_len(traj: *const SipcondTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// Number of sites, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sipcond_trajectory_sites(traj: *const SipcondTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.sites())
}

/// Copies sample times into `times_out` (`len` entries) and states into
/// `points_out` (`len × sites`, row-major). Either output may be null.
#[no_mangle]
pub unsafe extern "C" fn sipcond_trajectory_copy(
    traj: *const SipcondTrajectory,
    times_out: *mut f64,
    points_out: *mut f64,
) -> SipcondStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null("trajectory"))?.0;
        if !times_out.is_null() {
            ptr::copy_nonoverlapping(t.times.as_ptr(), times_out, t.len());
        }
        if !points_out.is_null() {
            let s = t.sites();
            for (k, x) in t.points.iter().enumerate() {
                ptr::copy_nonoverlapping(x.coords().as_ptr(), points_out.add(k * s), s);
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sipcond_trajectory_free(traj: *mut SipcondTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Two-site moments `E[y(t)^n]`, `n = 0..=n_max`, from the dual ODE with
/// coalescence scale `kappa`. Writes `n_times × (n_max + 1)` values row-major.
#[no_mangle]
pub unsafe extern "C" fn sipcond_moment_dual_oracle(
    n_max: usize,
    kappa: f64,
    y0: f64,
    times: *const f64,
    n_times: usize,
    out: *mut f64,
) -> SipcondStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = MomentDualSpec { n_max, theta: kappa, times: slice(times, n_times, "times")?.to_vec() };
        let rows = lib(moment_dual_oracle(&spec, y0))?;
        for (i, row) in rows.iter().enumerate() {
            ptr::copy_nonoverlapping(row.as_ptr(), out.add(i * (n_max + 1)), n_max + 1);
        }
        Ok(())
    })
}
