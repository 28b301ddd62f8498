//! Exact event-driven simulation of the symmetric inclusion process.
//!
//! A particle moves from `i` to `j` at rate `p(i,j) η_i (m/2 + η_j)`. Time is
//! reported in rescaled units `t`, where internal time is `θ t`, `θ = α/m`.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::kernel::RateKernel;
use crate::rng::SimRng;
use crate::simplex::{validate_sample_times, SimplexPoint, Trajectory};

/// Default cap on the number of events in one run.
pub const DEFAULT_EVENT_BUDGET: u64 = 5_000_000_000;

const REFRESH_EVERY: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SipParams {
    pub n: u64,
    pub m: f64,
    pub alpha: f64,
    pub event_budget: u64,
}

impl SipParams {
    pub fn new(n: u64, m: f64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "need at least one particle"));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::param("m", "must be positive and finite"));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::NonpositiveAlpha(alpha));
        }
        let params = SipParams { n, m, alpha, event_budget: DEFAULT_EVENT_BUDGET };
        let ratio = params.theta() / n as f64;
        if ratio > 0.1 {
            log::warn!("theta/N = {ratio:.3} > 0.1: outside the condensing scaling regime");
        }
        Ok(params)
    }

    pub fn with_event_budget(mut self, budget: u64) -> Self {
        self.event_budget = budget;
        self
    }

    /// Time dilation `α/m`.
    pub fn theta(&self) -> f64 {
        self.alpha / self.m
    }
}

/// Occupation numbers; the total is conserved by the dynamics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticleConfig {
    counts: Vec<u64>,
}

impl ParticleConfig {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || counts.iter().sum::<u64>() == 0 {
            return Err(Error::param("counts", "need at least one particle"));
        }
        Ok(ParticleConfig { counts })
    }

    /// `round(N x_i)` with the rounding residue assigned by largest remainder.
    pub fn from_simplex(x: &SimplexPoint, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "need at least one particle"));
        }
        let scaled: Vec<f64> = x.coords().iter().map(|&c| c * n as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
        let assigned: u64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        // stable sort keeps ties at the lowest index
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.total_cmp(&ra)
        });
        for &i in order.iter().take(n.saturating_sub(assigned) as usize) {
            counts[i] += 1;
        }
        Ok(ParticleConfig { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn sites(&self) -> usize {
        self.counts.len()
    }

    pub fn to_simplex(&self) -> SimplexPoint {
        let n = self.total() as f64;
        SimplexPoint::from_raw(self.counts.iter().map(|&c| c as f64 / n).collect())
    }
}

/// `p(i,j) η_i (m/2 + η_j)`.
pub fn directed_edge_rate(k: &RateKernel, eta: &ParticleConfig, m: f64, i: usize, j: usize) -> f64 {
    edge_rate(k.rate(i, j), eta.counts[i], eta.counts[j], m)
}

#[inline]
fn edge_rate(p: f64, from: u64, to: u64, m: f64) -> f64 {
    p * from as f64 * (0.5 * m + to as f64)
}

/// Directed-edge rates with an incrementally maintained total.
#[derive(Debug, Clone)]
pub struct RateTable {
    m: f64,
    edges: Vec<(usize, usize, f64)>,
    rates: Vec<f64>,
    incident: Vec<Vec<usize>>,
    total: f64,
    since_refresh: u64,
}

impl RateTable {
    pub fn new(k: &RateKernel, eta: &ParticleConfig, m: f64) -> Result<Self> {
        if eta.sites() != k.site_count() {
            return Err(Error::DimensionMismatch { expected: k.site_count(), got: eta.sites() });
        }
        let n = k.site_count();
        let mut edges = Vec::new();
        let mut incident = vec![Vec::new(); n];
        for i in 0..n {
            for &j in k.neighbors(i) {
                incident[i].push(edges.len());
                incident[j].push(edges.len());
                edges.push((i, j, k.rate(i, j)));
            }
        }
        let mut table = RateTable { m, edges, rates: Vec::new(), incident, total: 0.0, since_refresh: 0 };
        table.refresh(eta);
        Ok(table)
    }

    /// Recomputes every rate and the total from scratch.
    pub fn refresh(&mut self, eta: &ParticleConfig) {
        let m = self.m;
        self.rates = self.edges.iter().map(|&(i, j, p)| edge_rate(p, eta.counts[i], eta.counts[j], m)).collect();
        self.total = self.rates.iter().sum();
        self.since_refresh = 0;
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(i, j, _)| (i, j))
    }

    fn update_site(&mut self, eta: &ParticleConfig, site: usize) {
        for &e in &self.incident[site] {
            let (i, j, p) = self.edges[e];
            let new = edge_rate(p, eta.counts[i], eta.counts[j], self.m);
            self.total += new - self.rates[e];
            self.rates[e] = new;
        }
    }

    fn pick(&self, target: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (e, &r) in self.rates.iter().enumerate() {
            if r > 0.0 {
                acc += r;
                last = e;
                if target < acc {
                    return e;
                }
            }
        }
        // rounding put `target` past the accumulated sum
        last
    }
}

/// Draws one event: returns the internal waiting time and updates `state` and `table`.
pub fn gillespie_step(state: &mut ParticleConfig, table: &mut RateTable, rng: &mut SimRng) -> Result<f64> {
    let wait = gillespie_peek(table, rng)?;
    fire(state, table, rng);
    Ok(wait)
}

/// Runs the particle system and records `η(θ t_k)/N` at each sample time.
pub fn simulate_sip(
    k: &RateKernel,
    params: &SipParams,
    init: &ParticleConfig,
    sample_times: &[f64],
    seed: u64,
    replica_id: u64,
    rng: &mut SimRng,
) -> Result<Trajectory> {
    validate_sample_times(sample_times)?;
    let theta = params.theta();
    let n = init.total();
    let mut state = init.clone();
    let mut table = RateTable::new(k, &state, params.m)?;
    let mut traj = Trajectory::new(replica_id, seed);
    let mut now = 0.0;
    let mut events = 0u64;
    let mut next_wait = gillespie_peek(&table, rng)?;

    for &t in sample_times {
        let target = theta * t;
        // The pending waiting time is memoryless, so drawing it ahead is exact.
        while now + next_wait <= target {
            now += next_wait;
            fire(&mut state, &mut table, rng);
            events += 1;
            if events > params.event_budget {
                return Err(Error::EventBudgetExceeded { budget: params.event_budget });
            }
            next_wait = gillespie_peek(&table, rng)?;
        }
        debug_assert_eq!(state.total(), n);
        traj.push(t, state.to_simplex());
    }
    Ok(traj)
}

fn gillespie_peek(table: &RateTable, rng: &mut SimRng) -> Result<f64> {
    if !(table.total > 0.0) {
        return Err(Error::ZeroTotalRate);
    }
    Ok(rng.sample::<f64, _>(Exp1) / table.total)
}

fn fire(state: &mut ParticleConfig, table: &mut RateTable, rng: &mut SimRng) {
    let e = table.pick(rng.random::<f64>() * table.total);
    let (i, j, _) = table.edges[e];
    debug_assert!(state.counts[i] > 0);
    state.counts[i] -= 1;
    state.counts[j] += 1;
    table.update_site(state, i);
    table.update_site(state, j);
    table.since_refresh += 1;
    if table.since_refresh >= REFRESH_EVERY {
        table.refresh(state);
    }
}
