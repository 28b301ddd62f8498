//! Hop-rate estimation for condensed trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::RateKernel;
use crate::simplex::Trajectory;
use crate::verify::stats::RateEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondensateConfig {
    /// The condensate sits at the argmax once the maximum exceeds this.
    pub threshold: f64,
    /// Samples before this time are ignored.
    pub burn_in: f64,
    /// Minimum fraction of post-burn-in samples above `threshold`.
    pub min_condensed: f64,
    /// A visit shorter than this is treated as a failed transfer and erased.
    pub min_dwell: f64,
}

impl Default for CondensateConfig {
    fn default() -> Self {
        CondensateConfig { threshold: 0.8, burn_in: 0.5, min_condensed: 0.9, min_dwell: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRate {
    pub from: usize,
    pub to: usize,
    pub estimate: RateEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CondensateRates {
    pub sites: usize,
    /// Every ordered pair of distinct sites, including those with no hops.
    pub edges: Vec<EdgeRate>,
    pub occupation_time: Vec<f64>,
    /// Completed sojourns (both ends observed).
    pub holding_times: Vec<f64>,
    pub transitions: u64,
    pub condensed_fraction: f64,
}

impl CondensateRates {
    pub fn edge(&self, from: usize, to: usize) -> &RateEstimate {
        &self.edges.iter().find(|e| e.from == from && e.to == to).expect("all ordered pairs present").estimate
    }

    /// Total exit rate from any site, pooled over sites.
    pub fn pooled_exit_rate(&self) -> RateEstimate {
        RateEstimate::poisson(self.transitions, self.occupation_time.iter().sum())
    }

    /// Exposure per transition, the censoring-aware mean holding time.
    pub fn mean_holding_time(&self) -> f64 {
        self.occupation_time.iter().sum::<f64>() / self.transitions as f64
    }

    pub fn occupancy_fraction(&self, site: usize) -> f64 {
        self.occupation_time[site] / self.occupation_time.iter().sum::<f64>()
    }
}

/// Visits of the condensate: `(site, first sample time, first time of the next visit)`.
fn visits(traj: &Trajectory, cfg: &CondensateConfig) -> (Vec<(usize, f64, f64)>, usize, usize) {
    let mut runs: Vec<(usize, f64, f64)> = Vec::new();
    let (mut above, mut total) = (0, 0);
    let mut end = f64::NAN;
    for (t, x) in traj.times.iter().zip(&traj.points) {
        if *t < cfg.burn_in {
            continue;
        }
        total += 1;
        end = *t;
        let site = x.argmax();
        if x[site] <= cfg.threshold {
            continue;
        }
        above += 1;
        match runs.last_mut() {
            Some(run) if run.0 == site => {}
            Some(run) => {
                run.2 = *t;
                runs.push((site, *t, f64::NAN));
            }
            None => runs.push((site, *t, f64::NAN)),
        }
    }
    if let Some(run) = runs.last_mut() {
        run.2 = end;
    }
    if cfg.min_dwell > 0.0 {
        runs = debounce(runs, cfg.min_dwell);
    }
    (runs, above, total)
}

fn debounce(runs: Vec<(usize, f64, f64)>, min_dwell: f64) -> Vec<(usize, f64, f64)> {
    let n = runs.len();
    let mut out: Vec<(usize, f64, f64)> = Vec::with_capacity(n);
    for (k, run) in runs.into_iter().enumerate() {
        // the final visit is censored, so its length says nothing
        let short = k > 0 && k + 1 < n && run.2 - run.1 < min_dwell;
        match out.last_mut() {
            Some(prev) if short || prev.0 == run.0 => prev.2 = run.2,
            _ => out.push(run),
        }
    }
    out
}

/// Per-edge hop rates `transitions(i→j) / occupation_time(i)` with exact
/// Poisson intervals, pooled over the ensemble.
pub fn estimate_condensate_jump_rate(ensemble: &[Trajectory], cfg: &CondensateConfig) -> Result<CondensateRates> {
    let sites = ensemble.first().map_or(0, Trajectory::sites);
    if sites == 0 {
        return Err(Error::InsufficientReplicas { needed: 1, got: 0 });
    }
    let mut counts = vec![0u64; sites * sites];
    let mut occupation_time = vec![0.0; sites];
    let mut holding_times = Vec::new();
    let (mut above, mut total) = (0usize, 0usize);
    for traj in ensemble {
        if traj.sites() != sites {
            return Err(Error::DimensionMismatch { expected: sites, got: traj.sites() });
        }
        let (runs, a, t) = visits(traj, cfg);
        above += a;
        total += t;
        for (k, &(site, start, end)) in runs.iter().enumerate() {
            occupation_time[site] += end - start;
            if let Some(next) = runs.get(k + 1) {
                counts[site * sites + next.0] += 1;
                if k > 0 {
                    holding_times.push(end - start);
                }
            }
        }
    }
    let condensed_fraction = if total == 0 { 0.0 } else { above as f64 / total as f64 };
    if condensed_fraction < cfg.min_condensed {
        return Err(Error::NotCondensed { fraction: condensed_fraction });
    }
    let edges = (0..sites)
        .flat_map(|i| (0..sites).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(from, to)| EdgeRate {
            from,
            to,
            estimate: RateEstimate::poisson(counts[from * sites + to], occupation_time[from]),
        })
        .collect();
    Ok(CondensateRates {
        sites,
        edges,
        occupation_time,
        holding_times,
        transitions: counts.iter().sum(),
        condensed_fraction,
    })
}

/// Time to the first capture: the initially empty sites together holding at
/// least `capture · min_j z_j(0)`, the smallest mass a single jump can move.
/// Watching the total rather than each site keeps the detection when the
/// captured mass starts diffusing straight away.
#[derive(Debug, Clone, Serialize)]
pub struct FirstJumpEstimate {
    pub rate: RateEstimate,
    /// Per-replica first capture time (midpoint of the sample interval where
    /// it was seen), `None` if censored at the horizon.
    pub times: Vec<Option<f64>>,
    pub targets: Vec<Option<usize>>,
}

/// Rate of the first jump out of the start state, from right-censored
/// exponential waiting times (MLE `captures / total exposure`).
pub fn estimate_first_jump_rate(ensemble: &[Trajectory], k: &RateKernel, capture: f64) -> Result<FirstJumpEstimate> {
    if ensemble.is_empty() {
        return Err(Error::InsufficientReplicas { needed: 1, got: 0 });
    }
    if !(capture > 0.0 && capture <= 1.0) {
        return Err(Error::param("capture", "must lie in (0, 1]"));
    }
    let mut events = 0u64;
    let mut exposure = 0.0;
    let mut times = Vec::with_capacity(ensemble.len());
    let mut targets = Vec::with_capacity(ensemble.len());
    for traj in ensemble {
        let x0 = traj.points.first().ok_or(Error::InsufficientSegments { found: 0 })?;
        if x0.len() != k.site_count() {
            return Err(Error::DimensionMismatch { expected: k.site_count(), got: x0.len() });
        }
        let empty: Vec<usize> = (0..x0.len()).filter(|&j| x0[j] == 0.0).collect();
        let z_min =
            empty.iter().map(|&j| k.neighbor_mass(x0.coords(), j)).filter(|&z| z > 0.0).fold(f64::INFINITY, f64::min);
        let hit = if z_min.is_finite() {
            traj.times.iter().zip(&traj.points).enumerate().find_map(|(s, (t, x))| {
                let moved: f64 = empty.iter().map(|&j| x[j]).sum();
                (moved >= capture * z_min).then(|| {
                    let target = empty.iter().copied().max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap_or(0);
                    let prev = if s > 0 { traj.times[s - 1] } else { *t };
                    (0.5 * (prev + t), target)
                })
            })
        } else {
            None
        };
        match hit {
            Some((t, j)) => {
                events += 1;
                exposure += t;
                times.push(Some(t));
                targets.push(Some(j));
            }
            None => {
                exposure += traj.times.last().copied().unwrap_or(0.0);
                times.push(None);
                targets.push(None);
            }
        }
    }
    Ok(FirstJumpEstimate { rate: RateEstimate::poisson(events, exposure), times, targets })
}
