//! The acceptance battery, criteria 1 to 8. Shared by the `acceptance` test
//! target and `sipcond verify --suite acceptance`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::diffusion::{estimate_harmonic_measure, SdeParams};
use crate::ensemble::run_replicas;
use crate::error::Result;
use crate::kernel::{AbsorbingPredicateConfig, KernelFamily, RateKernel};
use crate::limit::{simulate_limit, CoefficientConvention, LimitParams, LimitState};
use crate::simplex::{sample_grid, SimplexPoint};
use crate::sip::{simulate_sip, ParticleConfig, SipParams};
use crate::verify::adjudicate::{adjudicate, AdjudicationConfig};
use crate::verify::duality::{moment_duality_check, DualityCheckConfig};
use crate::verify::invariants::check_limit_invariants;
use crate::verify::product_moment_curve;
use crate::verify::rates::{estimate_condensate_jump_rate, CondensateConfig};
use crate::verify::sweep::{semigroup_convergence_sweep, SweepConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub summary: String,
    pub details: Value,
}

impl CriterionResult {
    /// One line: `criterion N: PASS name (summary)`.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {}: {verdict} {} ({})", self.id, self.name, self.summary)
    }
}

pub const CRITERIA: [(u8, &str); 8] = [
    (1, "corner-chain hop rate"),
    (2, "two-site flip process"),
    (3, "complete-graph harmonic measure"),
    (4, "product-moment concentration"),
    (5, "moment-dual oracle"),
    (6, "limit structural invariants"),
    (7, "coefficient adjudication"),
    (8, "cross-level semigroup agreement"),
];

/// Runs criterion `id` (1 to 8).
pub fn run_criterion(id: u8, workers: Option<usize>) -> Result<CriterionResult> {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .ok_or_else(|| crate::Error::param("criterion", "must be 1..=8"))?;
    let (pass, summary, details) = match id {
        1 => corner_chain(workers)?,
        2 => flip_process(workers)?,
        3 => harmonic_measure(workers)?,
        4 => concentration(workers)?,
        5 => duality(workers)?,
        6 => invariants(workers)?,
        7 => adjudication(workers)?,
        _ => sweep(workers)?,
    };
    Ok(CriterionResult { id, name, pass, summary, details })
}

pub fn run_all(workers: Option<usize>) -> Result<Vec<CriterionResult>> {
    CRITERIA.iter().map(|c| run_criterion(c.0, workers)).collect()
}

type Outcome = Result<(bool, String, Value)>;

/// Sampling interval for hop counting. Finer grids count brief failed
/// transfers as hops; see the README.
const HOP_SAMPLE_INTERVAL: f64 = 0.05;

fn condensed_runs(
    family: KernelFamily,
    n: u64,
    m: f64,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<crate::simplex::Trajectory>> {
    let k = RateKernel::from_family(&family)?;
    let params = SipParams::new(n, m, 1.0)?;
    let init = ParticleConfig::from_simplex(&SimplexPoint::corner(k.site_count(), 0), n)?;
    let grid = sample_grid(400.0, HOP_SAMPLE_INTERVAL);
    run_replicas(seed, reps, workers, |r, s, rng| simulate_sip(&k, &params, &init, &grid, s, r, rng))
}

fn corner_chain(workers: Option<usize>) -> Outcome {
    let ens = condensed_runs(KernelFamily::Complete(3), 800, 0.02, 8, 1, workers)?;
    let rates = estimate_condensate_jump_rate(&ens, &CondensateConfig::default())?;
    let per_edge: Vec<f64> = rates.edges.iter().map(|e| e.estimate.rate).collect();
    let in_band = per_edge.iter().all(|r| (0.4..=0.6).contains(r));
    let pass = in_band && rates.transitions >= 150;
    let lo = per_edge.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = per_edge.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let summary = format!("per-edge rates {lo:.3}..{hi:.3}, {} jumps", rates.transitions);
    Ok((pass, summary, serde_json::to_value(&rates)?))
}

fn flip_process(workers: Option<usize>) -> Outcome {
    let ens = condensed_runs(KernelFamily::Chain(2), 500, 0.05, 8, 2, workers)?;
    let rates = estimate_condensate_jump_rate(&ens, &CondensateConfig::default())?;
    let hold = rates.mean_holding_time();
    let occ = rates.occupancy_fraction(0);
    let pass = (1.6..=2.4).contains(&hold) && (0.45..=0.55).contains(&occ);
    let summary = format!("mean holding {hold:.3}, occupancy of site 1 {occ:.3}, {} flips", rates.transitions);
    Ok((pass, summary, json!({ "mean_holding_time": hold, "occupancy_site1": occ, "rates": rates })))
}

fn harmonic_measure(workers: Option<usize>) -> Outcome {
    let k = RateKernel::from_family(&KernelFamily::Complete(3))?;
    let x0 = SimplexPoint::new(vec![0.3, 0.3, 0.4])?;
    let reps = 10_000;
    let hm = estimate_harmonic_measure(
        &x0,
        &k,
        &AbsorbingPredicateConfig::SDE,
        &SdeParams::pure_wright_fisher(),
        reps,
        3,
        workers,
    )?;
    let z: Vec<f64> = (0..3)
        .map(|i| {
            let p = x0[i];
            (hm.corner_frequency[i] - p) / (p * (1.0 - p) / reps as f64).sqrt()
        })
        .collect();
    let pass = z.iter().all(|z| z.abs() <= 3.0) && hm.capped == 0 && hm.face_points.is_empty();
    let f = &hm.corner_frequency;
    let summary = format!(
        "corner frequencies ({:.4}, {:.4}, {:.4}), max |z| {:.2}",
        f[0],
        f[1],
        f[2],
        z.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    );
    Ok((
        pass,
        summary,
        json!({ "corner_frequency": f, "z": z, "capped": hm.capped, "face_points": hm.face_points.len() }),
    ))
}

fn concentration(workers: Option<usize>) -> Outcome {
    let k = RateKernel::from_family(&KernelFamily::Chain(2))?;
    let x0 = SimplexPoint::new(vec![0.5, 0.5])?;
    let times = [0.25, 0.5, 0.75, 1.0];
    let mut rows = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for (idx, n) in [200u64, 500, 1000].into_iter().enumerate() {
        let params = SipParams::new(n, 5.0 / n as f64, 1.0)?;
        let theta = params.theta();
        let init = ParticleConfig::from_simplex(&x0, n)?;
        let ens = run_replicas(40 + idx as u64, 400, workers, |r, s, rng| {
            simulate_sip(&k, &params, &init, &times, s, r, rng)
        })?;
        let curve = product_moment_curve(&ens)?;
        let (mean, se) = (curve.mean[3], curve.std_error[3]);
        let bound = (-theta).exp() + 2.0 / theta;
        let ok = mean <= bound + 4.0 * se;
        pass &= ok;
        parts.push(format!("N={n}: {mean:.4} vs {:.4}", bound + 4.0 * se));
        rows.push(json!({ "n": n, "theta": theta, "mean": mean, "std_error": se, "bound": bound, "pass": ok, "curve": curve }));
    }
    Ok((pass, parts.join(", "), Value::Array(rows)))
}

fn duality(workers: Option<usize>) -> Outcome {
    let rep = moment_duality_check(&DualityCheckConfig::default(), workers)?;
    let worst = rep.rows.iter().map(|r| (r.simulated - r.oracle).abs() / r.tolerance).fold(0.0f64, f64::max);
    let (lo, hi) =
        rep.slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, s| (a.0.min(s.ratio), a.1.max(s.ratio)));
    let summary = format!("worst |MC - oracle| / tolerance {worst:.2}, halved-dt gap ratio {lo:.3}..{hi:.3}");
    Ok((rep.pass, summary, serde_json::to_value(&rep)?))
}

fn invariants(workers: Option<usize>) -> Outcome {
    let k = RateKernel::from_family(&KernelFamily::Cycle(4))?;
    let x0 = LimitState::new(SimplexPoint::new(vec![0.5, 0.0, 0.5, 0.0])?, &k)?;
    let params = LimitParams::new(1.0, CoefficientConvention::default(), 1e-3)?;
    let grid = sample_grid(5.0, 0.01);
    let runs = run_replicas(6, 1000, workers, |r, s, rng| simulate_limit(&x0, &k, &params, &grid, s, r, rng))?;
    let rep = check_limit_invariants(&runs, &k);
    let summary = format!("{} paths, {} jumps, {} violations", rep.paths, rep.jumps, rep.violations.total());
    Ok((rep.violations.total() == 0, summary, serde_json::to_value(&rep)?))
}

fn adjudication(workers: Option<usize>) -> Outcome {
    let cfg = AdjudicationConfig::default();
    let report = adjudicate(&cfg, workers)?;
    let manifest = toml::to_string(&report.config).map_err(|e| crate::Error::Config(e.to_string()))?;
    let reloaded: AdjudicationConfig = toml::from_str(&manifest).map_err(|e| crate::Error::Config(e.to_string()))?;
    let rerun = adjudicate(&reloaded, workers)?;
    let reproducible = serde_json::to_string(&report)? == serde_json::to_string(&rerun)?;
    let complete = report.diffusion_ranking.len() == 3
        && report.jump_ranking.len() == 2
        && report.diffusion_ranking.iter().chain(&report.jump_ranking).all(|r| r.chi2.is_finite());
    let best = |r: &[crate::verify::adjudicate::Ranked]| r.first().map(|x| x.convention.clone()).unwrap_or_default();
    let cover: Vec<String> = report.calibration.iter().map(|c| format!("{} {:.2}", c.estimator, c.coverage)).collect();
    let summary = format!(
        "diffusion best {}, jump best {}, coverage [{}], reproducible {reproducible}",
        best(&report.diffusion_ranking),
        best(&report.jump_ranking),
        cover.join(", ")
    );
    let pass = report.calibrated && reproducible && complete;
    Ok((pass, summary, json!({ "report": report, "manifest": manifest, "reproducible": reproducible })))
}

fn sweep(workers: Option<usize>) -> Outcome {
    let rep = semigroup_convergence_sweep(&SweepConfig::default(), workers)?;
    let gaps: Vec<String> = rep.rows.iter().map(|r| format!("N={} {:.4}±{:.4}", r.n, r.gap, r.std_error)).collect();
    let summary = format!("gaps {}; final {:.4}", gaps.join(", "), rep.final_gap);
    Ok((rep.pass, summary, serde_json::to_value(&rep)?))
}
