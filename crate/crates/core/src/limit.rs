//! The limiting jump-diffusion on the absorbing set and the corner chain.
//!
//! Occupied sites form an independent set of the kernel graph. Mass moves
//! diffusively between occupied sites at graph distance two, and an empty site
//! `j` with neighbouring mass `z_j > 0` can capture all of it in one jump.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::diffusion::{pair_noise, renormalize, BoundaryRule};
use crate::error::{Error, Result};
use crate::kernel::{two_step_kernel, RateKernel, TwoStepKernel};
use crate::rng::SimRng;
use crate::simplex::{validate_sample_times, SimplexPoint, Trajectory};

/// Point of the absorbing set: `p(i,j) x_i x_j = 0` for every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitState(SimplexPoint);

impl LimitState {
    pub fn new(x: SimplexPoint, k: &RateKernel) -> Result<Self> {
        if x.len() != k.site_count() {
            return Err(Error::DimensionMismatch { expected: k.site_count(), got: x.len() });
        }
        if !support_is_independent(x.coords(), k) {
            return Err(Error::NotAbsorbing);
        }
        Ok(LimitState(x))
    }

    pub fn point(&self) -> &SimplexPoint {
        &self.0
    }

    pub fn coords(&self) -> &[f64] {
        self.0.coords()
    }
}

pub(crate) fn support_is_independent(x: &[f64], k: &RateKernel) -> bool {
    k.edges().iter().all(|&(i, j)| x[i] == 0.0 || x[j] == 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpRateRule {
    /// `(α/2) z_j`, proportional to the neighbouring mass.
    #[default]
    Proportional,
    /// `α/2` for every reachable empty site.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionConstant {
    /// `c = α`.
    #[default]
    Full,
    /// `c = α/2`.
    Half,
    /// `c = α/4`.
    Quarter,
}

impl JumpRateRule {
    pub const ALL: [JumpRateRule; 2] = [JumpRateRule::Proportional, JumpRateRule::Constant];

    pub fn rate(self, alpha: f64, z: f64) -> f64 {
        match self {
            JumpRateRule::Proportional => 0.5 * alpha * z,
            JumpRateRule::Constant => 0.5 * alpha,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JumpRateRule::Proportional => "proportional",
            JumpRateRule::Constant => "constant",
        }
    }
}

impl DiffusionConstant {
    pub const ALL: [DiffusionConstant; 3] =
        [DiffusionConstant::Full, DiffusionConstant::Half, DiffusionConstant::Quarter];

    pub fn factor(self, alpha: f64) -> f64 {
        match self {
            DiffusionConstant::Full => alpha,
            DiffusionConstant::Half => 0.5 * alpha,
            DiffusionConstant::Quarter => 0.25 * alpha,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DiffusionConstant::Full => "full",
            DiffusionConstant::Half => "half",
            DiffusionConstant::Quarter => "quarter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConvention {
    #[serde(default)]
    pub jump_rate_rule: JumpRateRule,
    #[serde(default)]
    pub diffusion_constant: DiffusionConstant,
}

impl CoefficientConvention {
    pub fn new(jump_rate_rule: JumpRateRule, diffusion_constant: DiffusionConstant) -> Self {
        CoefficientConvention { jump_rate_rule, diffusion_constant }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub target: usize,
    pub rate: f64,
    pub z: f64,
    pub post: Vec<f64>,
}

/// Possible jumps out of `x`: one per empty site with positive neighbouring mass.
pub fn limit_jump_events(
    x: &LimitState,
    k: &RateKernel,
    alpha: f64,
    conv: &CoefficientConvention,
) -> Result<Vec<JumpEvent>> {
    check_binary(k)?;
    if !support_is_independent(x.coords(), k) {
        return Err(Error::NotAbsorbing);
    }
    Ok(jump_events(x.coords(), k, alpha, conv.jump_rate_rule))
}

fn jump_events(x: &[f64], k: &RateKernel, alpha: f64, rule: JumpRateRule) -> Vec<JumpEvent> {
    let mut out = Vec::new();
    for j in 0..x.len() {
        if x[j] != 0.0 {
            continue;
        }
        let z = k.neighbor_mass(x, j);
        if z > 0.0 {
            let mut post = x.to_vec();
            post[j] = z;
            k.neighbors(j).iter().for_each(|&i| post[i] = 0.0);
            out.push(JumpEvent { target: j, rate: rule.rate(alpha, z), z, post });
        }
    }
    out
}

/// `(pair, c p̂(i,j) x_i x_j)` for every pair with a positive coefficient.
pub fn limit_diffusion_coefficients(
    x: &LimitState,
    k: &RateKernel,
    p_hat: &TwoStepKernel,
    alpha: f64,
    conv: &CoefficientConvention,
) -> Result<Vec<((usize, usize), f64)>> {
    check_binary(k)?;
    if !support_is_independent(x.coords(), k) {
        return Err(Error::NotAbsorbing);
    }
    let c = conv.diffusion_constant.factor(alpha);
    let pairs = p_hat.pairs();
    Ok(diffusion_terms(x.coords(), p_hat, &pairs, c))
}

fn diffusion_terms(x: &[f64], p_hat: &TwoStepKernel, pairs: &[(usize, usize)], c: f64) -> Vec<((usize, usize), f64)> {
    pairs
        .iter()
        .map(|&(i, j)| ((i, j), c * f64::from(p_hat.count(i, j)) * x[i] * x[j]))
        .filter(|&(_, coef)| coef > 0.0)
        .collect()
}

fn check_binary(k: &RateKernel) -> Result<()> {
    if k.is_binary() {
        Ok(())
    } else {
        Err(Error::NotBinaryKernel)
    }
}

/// A realised jump of the limit process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub t: f64,
    pub target: usize,
    pub z: f64,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LimitRun {
    pub trajectory: Trajectory,
    pub jumps: Vec<JumpRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub alpha: f64,
    pub convention: CoefficientConvention,
    pub dt: f64,
    pub boundary: BoundaryRule,
}

impl LimitParams {
    pub fn new(alpha: f64, convention: CoefficientConvention, dt: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::NonpositiveAlpha(alpha));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        Ok(LimitParams { alpha, convention, dt, boundary: BoundaryRule::default() })
    }
}

/// Hybrid scheme: Euler–Maruyama along two-step pairs, then jumps by thinning
/// with probability `rate · dt`.
pub fn simulate_limit(
    x0: &LimitState,
    k: &RateKernel,
    params: &LimitParams,
    sample_times: &[f64],
    seed: u64,
    replica_id: u64,
    rng: &mut SimRng,
) -> Result<LimitRun> {
    check_binary(k)?;
    validate_sample_times(sample_times)?;
    if x0.coords().len() != k.site_count() {
        return Err(Error::DimensionMismatch { expected: k.site_count(), got: x0.coords().len() });
    }
    let p_hat = two_step_kernel(k)?;
    let pairs = p_hat.pairs();
    let c = params.convention.diffusion_constant.factor(params.alpha);
    let rule = params.convention.jump_rate_rule;

    let mut x = x0.coords().to_vec();
    let mut traj = Trajectory::new(replica_id, seed);
    let mut jumps = Vec::new();
    let mut now = 0.0;
    for &t in sample_times {
        let span = t - now;
        if span > 0.0 {
            let steps = (span / params.dt - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for s in 1..=steps {
                for ((i, j), coef) in diffusion_terms(&x, &p_hat, &pairs, c) {
                    pair_noise(&mut x, i, j, 2.0 * coef * h, params.boundary, rng);
                }
                renormalize(&mut x);

                let events = jump_events(&x, k, params.alpha, rule);
                let total: f64 = events.iter().map(|e| e.rate).sum();
                if total * h > 0.1 {
                    return Err(Error::StepTooLarge { rate: total, dt: h });
                }
                let u = rng.random::<f64>() * total.max(f64::MIN_POSITIVE);
                if rng.random::<f64>() < total * h {
                    let mut acc = 0.0;
                    let chosen = events
                        .iter()
                        .find(|e| {
                            acc += e.rate;
                            u < acc
                        })
                        .unwrap_or(&events[events.len() - 1]);
                    jumps.push(JumpRecord {
                        t: now + s as f64 * h,
                        target: chosen.target,
                        z: chosen.z,
                        pre: x.clone(),
                        post: chosen.post.clone(),
                    });
                    x.clone_from(&chosen.post);
                }
            }
        }
        now = t;
        traj.push(t, SimplexPoint::from_raw(x.clone()));
    }
    Ok(LimitRun { trajectory: traj, jumps })
}

/// Exact jump path of the corner chain up to `horizon`: `(time, site)` pairs
/// starting with `(0, start)`.
pub fn corner_chain_path(
    k: &RateKernel,
    alpha: f64,
    start: usize,
    horizon: f64,
    rng: &mut SimRng,
) -> Result<Vec<(f64, usize)>> {
    if !(alpha > 0.0) {
        return Err(Error::NonpositiveAlpha(alpha));
    }
    if start >= k.site_count() {
        return Err(Error::param("start", "site index out of range"));
    }
    let mut path = vec![(0.0, start)];
    let mut site = start;
    let mut t = 0.0;
    loop {
        let exit = 0.5 * alpha * k.degree(site);
        t += rng.sample::<f64, _>(Exp1) / exit;
        if t > horizon {
            break;
        }
        let mut u = rng.random::<f64>() * k.degree(site);
        let nbrs = k.neighbors(site);
        let mut next = nbrs[nbrs.len() - 1];
        for &j in nbrs {
            u -= k.rate(site, j);
            if u < 0.0 {
                next = j;
                break;
            }
        }
        site = next;
        path.push((t, site));
    }
    Ok(path)
}

/// Corner chain sampled at `sample_times`.
pub fn simulate_corner_chain(
    k: &RateKernel,
    alpha: f64,
    start: usize,
    sample_times: &[f64],
    seed: u64,
    replica_id: u64,
    rng: &mut SimRng,
) -> Result<Trajectory> {
    validate_sample_times(sample_times)?;
    let horizon = *sample_times.last().expect("validated non-empty");
    let path = corner_chain_path(k, alpha, start, horizon, rng)?;
    let mut traj = Trajectory::new(replica_id, seed);
    let mut idx = 0;
    for &t in sample_times {
        while idx + 1 < path.len() && path[idx + 1].0 <= t {
            idx += 1;
        }
        traj.push(t, SimplexPoint::corner(k.site_count(), path[idx].1));
    }
    Ok(traj)
}
