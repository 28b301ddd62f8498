//! The auxiliary slow-fast diffusion `L + θ L'` on the simplex, pure
//! Wright–Fisher absorption, harmonic-measure sampling and the two-site
//! moment-dual oracle.
//!
//! `L` is the deterministic drift `(α/2) Σ_i p(i,j)(x_i − x_j)` on coordinate
//! `j`; `θ L'` exchanges mass along every edge with variance rate
//! `2 θ p(i,j) x_i x_j`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::run_replicas;
use crate::error::{Error, Result};
use crate::kernel::{is_absorbing, AbsorbingPredicateConfig, RateKernel};
use crate::rng::SimRng;
use crate::simplex::{validate_sample_times, SimplexPoint, Trajectory};

/// Coordinates below this are set to zero once a path is absorbed.
pub const SNAP_TOL: f64 = 1e-6;

/// Coefficient on the unordered-edge drift term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftConvention {
    /// `(α/2) p(i,j)` per edge.
    #[default]
    OrderedSum,
    /// `(α/4) p(i,j)` per edge: the sum over ordered pairs read as a sum over edges.
    UnorderedSum,
}

impl DriftConvention {
    fn edge_factor(self, alpha: f64) -> f64 {
        match self {
            DriftConvention::OrderedSum => 0.5 * alpha,
            DriftConvention::UnorderedSum => 0.25 * alpha,
        }
    }
}

/// How a per-edge noise increment is kept inside the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    /// Gaussian in the interior, replaced near the boundary by a two-point
    /// law with the same mean and variance that never leaves the simplex.
    #[default]
    MomentMatched,
    /// Gaussian resampled up to 8 times, then clamped. Biased near the faces.
    Resample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeParams {
    /// Drift scale; zero turns the drift off.
    pub alpha: f64,
    pub theta: f64,
    pub dt: f64,
    pub max_time: f64,
    pub drift: DriftConvention,
    pub boundary: BoundaryRule,
}

impl SdeParams {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::NonpositiveAlpha(alpha));
        }
        Self::build(alpha, theta)
    }

    /// Pure Wright–Fisher with unit exchange rate and no drift.
    pub fn pure_wright_fisher() -> Self {
        Self::build(0.0, 1.0).expect("unit theta is valid")
    }

    fn build(alpha: f64, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::param("theta", "must be positive and finite"));
        }
        Ok(SdeParams {
            alpha,
            theta,
            dt: default_dt(theta),
            max_time: 1e3,
            drift: DriftConvention::default(),
            boundary: BoundaryRule::default(),
        })
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || dt > 1e-2 / self.theta * (1.0 + 1e-12) {
            return Err(Error::param("dt", format!("must lie in (0, 1e-2/theta = {}]", 1e-2 / self.theta)));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn with_max_time(mut self, max_time: f64) -> Result<Self> {
        if !(max_time > 0.0) || !max_time.is_finite() {
            return Err(Error::param("max_time", "must be positive and finite"));
        }
        self.max_time = max_time;
        Ok(self)
    }

    pub fn with_drift(mut self, drift: DriftConvention) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_boundary(mut self, boundary: BoundaryRule) -> Self {
        self.boundary = boundary;
        self
    }
}

/// `min(1e-4, 1e-2/θ)`.
pub fn default_dt(theta: f64) -> f64 {
    1e-4_f64.min(1e-2 / theta)
}

/// Ordered-sum drift `(α/2) Σ_i p(i,j)(x_i − x_j)`.
pub fn drift_vector(x: &SimplexPoint, k: &RateKernel, alpha: f64) -> Vec<f64> {
    drift_with(x.coords(), k, DriftConvention::OrderedSum.edge_factor(alpha))
}

fn drift_with(x: &[f64], k: &RateKernel, factor: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            // pairwise (x_i − x_j) terms keep the components cancelling
            let s: f64 = k.neighbors(j).iter().map(|&i| k.rate(i, j) * (x[i] - x[j])).sum();
            factor * s
        })
        .collect()
}

/// Adds `(Δ, −Δ)` to `(x_i, x_j)` where `Δ` has mean 0 and variance `var`.
pub(crate) fn pair_noise(x: &mut [f64], i: usize, j: usize, var: f64, rule: BoundaryRule, rng: &mut SimRng) {
    if !(var > 0.0) {
        return;
    }
    let (xi, xj) = (x[i], x[j]);
    let sigma = var.sqrt();
    let delta = match rule {
        BoundaryRule::MomentMatched => {
            let a = xi.min(xj);
            if a >= 6.0 * sigma {
                (sigma * rng.sample::<f64, _>(StandardNormal)).clamp(-xi, xj)
            } else if a >= sigma {
                if rng.random::<bool>() {
                    sigma
                } else {
                    -sigma
                }
            } else {
                // Two-point law on the short side: hit the face, or step
                // inward by var/a. Mean 0, variance var.
                let toward = rng.random::<f64>() * (a * a + var) < var;
                let step = if toward { -a } else { (var / a).min(xi.max(xj)) };
                if xi <= xj {
                    step
                } else {
                    -step
                }
            }
        }
        BoundaryRule::Resample => {
            let mut d = sigma * rng.sample::<f64, _>(StandardNormal);
            let mut tries = 0;
            while (xi + d < 0.0 || xj - d < 0.0) && tries < 8 {
                d = sigma * rng.sample::<f64, _>(StandardNormal);
                tries += 1;
            }
            d.clamp(-xi, xj)
        }
    };
    x[i] = xi + delta;
    x[j] = (xj - delta).max(0.0);
}

pub(crate) fn renormalize(x: &mut [f64]) {
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|c| *c /= s);
}

/// One Euler–Maruyama step of length `h` applied in place.
pub(crate) fn em_step_in_place(x: &mut [f64], k: &RateKernel, params: &SdeParams, h: f64, rng: &mut SimRng) {
    if params.alpha > 0.0 {
        let factor = params.drift.edge_factor(params.alpha) * h;
        for &(i, j) in k.edges() {
            let flow = factor * k.rate(i, j) * (x[i] - x[j]);
            x[i] -= flow;
            x[j] += flow;
        }
        x.iter_mut().for_each(|c| *c = c.max(0.0));
    }
    for &(i, j) in k.edges() {
        let var = 2.0 * params.theta * k.rate(i, j) * x[i] * x[j] * h;
        pair_noise(x, i, j, var, params.boundary, rng);
    }
    renormalize(x);
}

pub fn em_step(x: &SimplexPoint, k: &RateKernel, params: &SdeParams, rng: &mut SimRng) -> SimplexPoint {
    let mut y = x.coords().to_vec();
    em_step_in_place(&mut y, k, params, params.dt, rng);
    SimplexPoint::from_raw(y)
}

/// Integrates the auxiliary diffusion and records the state at `sample_times`.
pub fn simulate_auxiliary(
    x0: &SimplexPoint,
    k: &RateKernel,
    params: &SdeParams,
    sample_times: &[f64],
    seed: u64,
    replica_id: u64,
    rng: &mut SimRng,
) -> Result<Trajectory> {
    check_dims(x0, k)?;
    validate_sample_times(sample_times)?;
    let mut x = x0.coords().to_vec();
    let mut traj = Trajectory::new(replica_id, seed);
    let mut now = 0.0;
    for &t in sample_times {
        let span = t - now;
        if span > 0.0 {
            let steps = (span / params.dt - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                em_step_in_place(&mut x, k, params, h, rng);
            }
        }
        now = t;
        traj.push(t, SimplexPoint::from_raw(x.clone()));
    }
    Ok(traj)
}

fn check_dims(x: &SimplexPoint, k: &RateKernel) -> Result<()> {
    if x.len() != k.site_count() {
        return Err(Error::DimensionMismatch { expected: k.site_count(), got: x.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionResult {
    pub point: Vec<f64>,
    pub time: f64,
    pub hit_cap: bool,
}

/// Runs until the absorbing predicate holds (or `max_time`), then snaps.
pub fn simulate_wf_absorption(
    x0: &SimplexPoint,
    k: &RateKernel,
    cfg: &AbsorbingPredicateConfig,
    params: &SdeParams,
    rng: &mut SimRng,
) -> Result<AbsorptionResult> {
    check_dims(x0, k)?;
    let mut x = x0.coords().to_vec();
    let mut time = 0.0;
    let mut steps = 0u64;
    let hit_cap = loop {
        if is_absorbing(&x, k, cfg.epsilon()) {
            break false;
        }
        if time >= params.max_time {
            break true;
        }
        em_step_in_place(&mut x, k, params, params.dt, rng);
        steps += 1;
        time = steps as f64 * params.dt;
    };
    if !hit_cap {
        x.iter_mut().filter(|c| **c < SNAP_TOL).for_each(|c| *c = 0.0);
        renormalize(&mut x);
    }
    Ok(AbsorptionResult { point: x, time, hit_cap })
}

/// Empirical law of the absorption point.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicMeasure {
    pub replicas: usize,
    pub corner_frequency: Vec<f64>,
    pub corner_std_error: Vec<f64>,
    /// Absorption points with more than one occupied site.
    pub face_points: Vec<Vec<f64>>,
    pub capped: usize,
    pub results: Vec<AbsorptionResult>,
}

impl HarmonicMeasure {
    /// Mean absorption point over all uncapped replicas.
    pub fn mean_point(&self) -> Vec<f64> {
        let done: Vec<&AbsorptionResult> = self.results.iter().filter(|r| !r.hit_cap).collect();
        let n = self.corner_frequency.len();
        (0..n).map(|i| done.iter().map(|r| r.point[i]).sum::<f64>() / done.len() as f64).collect()
    }
}

/// Samples `replicas` absorption points; replica `r` uses the seed
/// `derive_replica_seed(master_seed, r)`.
pub fn estimate_harmonic_measure(
    x0: &SimplexPoint,
    k: &RateKernel,
    cfg: &AbsorbingPredicateConfig,
    params: &SdeParams,
    replicas: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<HarmonicMeasure> {
    if replicas == 0 {
        return Err(Error::InsufficientReplicas { needed: 1, got: 0 });
    }
    check_dims(x0, k)?;
    let results =
        run_replicas(master_seed, replicas, workers, |_, _, rng| simulate_wf_absorption(x0, k, cfg, params, rng))?;

    let n = k.site_count();
    let mut corners = vec![0usize; n];
    let mut face_points = Vec::new();
    let mut capped = 0;
    for r in &results {
        if r.hit_cap {
            capped += 1;
            continue;
        }
        let p = SimplexPoint::from_raw(r.point.clone());
        match p.as_corner(0.0) {
            Some(i) => corners[i] += 1,
            None => face_points.push(r.point.clone()),
        }
    }
    let total = replicas as f64;
    let corner_frequency: Vec<f64> = corners.iter().map(|&c| c as f64 / total).collect();
    let corner_std_error = corner_frequency.iter().map(|&f| (f * (1.0 - f) / total).sqrt()).collect();
    Ok(HarmonicMeasure { replicas, corner_frequency, corner_std_error, face_points, capped, results })
}

/// Two-site moment-dual system size and rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDualSpec {
    pub n_max: usize,
    /// Coalescence scale `κ` in the down-rate `2κ n(n−1) + n`.
    pub theta: f64,
    pub times: Vec<f64>,
}

pub const MOMENT_DUAL_MAX_N: usize = 32;

/// `E[y(t)^n]` for `n = 0..=n_max` and each `t` in `spec.times` (rows by time).
///
/// Solves `ψ_n' = a_n (ψ_{n−1} − ψ_n) − n ψ_n`, `a_n = 2κ n(n−1) + n`, by
/// scaling and squaring of the Taylor series of the matrix exponential. The
/// generator is lower bidiagonal with non-negative off-diagonal, so every
/// intermediate power is entrywise non-negative and no cancellation occurs.
pub fn moment_dual_oracle(spec: &MomentDualSpec, y0: f64) -> Result<Vec<Vec<f64>>> {
    if spec.n_max == 0 || spec.n_max > MOMENT_DUAL_MAX_N {
        return Err(Error::param("n_max", format!("must lie in 1..={MOMENT_DUAL_MAX_N}")));
    }
    if !(0.0..=1.0).contains(&y0) {
        return Err(Error::param("y0", "must lie in [0, 1]"));
    }
    if !(spec.theta > 0.0) || !spec.theta.is_finite() {
        return Err(Error::param("theta", "must be positive and finite"));
    }
    if spec.times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::param("times", "must be finite and non-negative"));
    }
    let d = spec.n_max + 1;
    let mut a = vec![0.0; d * d];
    for n in 1..d {
        let nf = n as f64;
        let down = 2.0 * spec.theta * nf * (nf - 1.0) + nf;
        a[n * d + n - 1] = down;
        a[n * d + n] = -(down + nf);
    }
    let psi0: Vec<f64> = (0..d).map(|n| y0.powi(n as i32)).collect();
    Ok(spec
        .times
        .iter()
        .map(|&t| {
            let e = expm(&a, d, t);
            (0..d).map(|r| (0..d).map(|c| e[r * d + c] * psi0[c]).sum()).collect()
        })
        .collect())
}

fn matmul(x: &[f64], y: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for r in 0..d {
        for k in 0..d {
            let v = x[r * d + k];
            if v != 0.0 {
                for c in 0..d {
                    out[r * d + c] += v * y[k * d + c];
                }
            }
        }
    }
    out
}

fn expm(a: &[f64], d: usize, t: f64) -> Vec<f64> {
    let norm = (0..d).map(|r| (0..d).map(|c| a[r * d + c].abs()).sum::<f64>()).fold(0.0, f64::max) * t;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = t / 2f64.powi(squarings);
    let b: Vec<f64> = a.iter().map(|v| v * scale).collect();

    let mut result = vec![0.0; d * d];
    let mut term = vec![0.0; d * d];
    for i in 0..d {
        result[i * d + i] = 1.0;
        term[i * d + i] = 1.0;
    }
    for k in 1..40 {
        term = matmul(&term, &b, d);
        term.iter_mut().for_each(|v| *v /= k as f64);
        let size = term.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        result.iter_mut().zip(&term).for_each(|(r, v)| *r += v);
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, d);
    }
    result
}

/// Moments `E[y^n]`, `n = 0..=n_max`, of the two-site Euler–Maruyama chain
/// with Gaussian increments after `steps` steps of length `h` from `y0`.
///
/// Given `y`, the drifted point is `ỹ = y + b(y) h` and the increment has
/// variance `2θ h ỹ(1 − ỹ)`, so `E[y'^n | y]` is a polynomial of degree `n`
/// in `y` and the moments obey a closed linear recursion. The moment-matched
/// boundary rule shares the first two conditional moments with the Gaussian
/// step, so for `n ≤ 2` this is also the exact law of [`em_step`] up to the
/// six-sigma clamp.
pub fn scheme_moments(params: &SdeParams, y0: f64, h: f64, steps: usize, n_max: usize) -> Vec<f64> {
    let c = params.drift.edge_factor(params.alpha) * h;
    let g = 2.0 * params.theta * h;
    let drifted = [c, 1.0 - 2.0 * c];
    let spread = poly_mul(&drifted, &[1.0 - c, -(1.0 - 2.0 * c)]);

    // row n holds the coefficients of E[y'^n | y]
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut row = vec![0.0; n + 1];
        let mut j = 0;
        while j <= n {
            let weight = binomial(n, j) * double_factorial(j) * g.powi(j as i32 / 2);
            let term = poly_mul(&poly_pow(&drifted, n - j), &poly_pow(&spread, j / 2));
            row.iter_mut().zip(&term).for_each(|(r, t)| *r += weight * t);
            j += 2;
        }
        rows.push(row);
    }
    let mut mu: Vec<f64> = (0..=n_max).map(|n| y0.powi(n as i32)).collect();
    for _ in 0..steps {
        mu = rows.iter().map(|row| row.iter().zip(&mu).map(|(a, m)| a * m).sum()).collect();
    }
    mu
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(a: &[f64], k: usize) -> Vec<f64> {
    (0..k).fold(vec![1.0], |acc, _| poly_mul(&acc, a))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(j − 1)!!`, the `j`-th moment of a standard normal for even `j`.
fn double_factorial(j: usize) -> f64 {
    (1..j).step_by(2).map(|k| k as f64).product()
}
