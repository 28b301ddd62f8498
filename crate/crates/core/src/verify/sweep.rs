//! Semigroup convergence in `N`: two-site `E[x_1(t)]` from the particle
//! system (and optionally the auxiliary diffusion) against the flip chain.
//!
//! The flip chain started from the harmonic projection of `x0` has
//! `E[x_1(t)] = 1/2 + (x0_1 − 1/2) e^{−αt}`.

use serde::{Deserialize, Serialize};

use crate::diffusion::{simulate_auxiliary, SdeParams};
use crate::ensemble::run_replicas;
use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, RateKernel};
use crate::simplex::SimplexPoint;
use crate::sip::{simulate_sip, ParticleConfig, SipParams};
use crate::verify::stats::mean_se;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha: f64,
    pub sizes: Vec<u64>,
    /// `m = m_times_n / N`, so `θ = α N / m_times_n`.
    pub m_times_n: f64,
    pub x0: f64,
    pub t: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Also run the auxiliary diffusion at each `θ`.
    pub include_auxiliary: bool,
    pub final_gap_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            alpha: 1.0,
            sizes: vec![200, 500, 2000],
            m_times_n: 5.0,
            x0: 1.0,
            t: 1.0,
            replicas: 2500,
            seed: 8,
            include_auxiliary: false,
            final_gap_max: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub level: String,
    pub n: u64,
    pub theta: f64,
    pub mean: f64,
    pub std_error: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub exact: f64,
    pub rows: Vec<SweepRow>,
    /// No particle-level gap exceeds its predecessor by more than two
    /// standard errors of the difference.
    pub non_increasing: bool,
    pub final_gap: f64,
    pub pass: bool,
}

pub fn flip_chain_mean(alpha: f64, x0: f64, t: f64) -> f64 {
    0.5 + (x0 - 0.5) * (-alpha * t).exp()
}

pub fn semigroup_convergence_sweep(cfg: &SweepConfig, workers: Option<usize>) -> Result<SweepReport> {
    if cfg.sizes.is_empty() {
        return Err(Error::param("sizes", "need at least one N"));
    }
    if cfg.replicas < 2 {
        return Err(Error::InsufficientReplicas { needed: 2, got: cfg.replicas });
    }
    let k = RateKernel::from_family(&KernelFamily::Chain(2))?;
    let x0 = SimplexPoint::new(vec![cfg.x0, 1.0 - cfg.x0])?;
    let exact = flip_chain_mean(cfg.alpha, cfg.x0, cfg.t);
    let times = [cfg.t];
    let row = |level: &str, n: u64, theta: f64, xs: Vec<f64>| {
        let (mean, std_error) = mean_se(&xs);
        SweepRow { level: level.to_string(), n, theta, mean, std_error, gap: (mean - exact).abs() }
    };

    let mut rows = Vec::new();
    for (idx, &n) in cfg.sizes.iter().enumerate() {
        let params = SipParams::new(n, cfg.m_times_n / n as f64, cfg.alpha)?;
        let init = ParticleConfig::from_simplex(&x0, n)?;
        let seed = cfg.seed.wrapping_add(idx as u64);
        let xs = run_replicas(seed, cfg.replicas, workers, |r, s, rng| {
            Ok(simulate_sip(&k, &params, &init, &times, s, r, rng)?.points[0][0])
        })?;
        rows.push(row("sip", n, params.theta(), xs));
    }
    let sip_rows: Vec<SweepRow> = rows.clone();
    let non_increasing = sip_rows.windows(2).all(|w| {
        let slack = 2.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].gap <= w[0].gap + slack
    });
    let final_gap = sip_rows.last().expect("non-empty sizes").gap;

    if cfg.include_auxiliary {
        for (idx, r) in sip_rows.iter().enumerate() {
            let params = SdeParams::new(cfg.alpha, r.theta)?;
            let seed = cfg.seed.wrapping_add(1000 + idx as u64);
            let xs = run_replicas(seed, cfg.replicas, workers, |rep, s, rng| {
                Ok(simulate_auxiliary(&x0, &k, &params, &times, s, rep, rng)?.points[0][0])
            })?;
            rows.push(row("auxiliary", r.n, r.theta, xs));
        }
    }
    Ok(SweepReport {
        config: cfg.clone(),
        exact,
        rows,
        non_increasing,
        final_gap,
        pass: non_increasing && final_gap <= cfg.final_gap_max,
    })
}
