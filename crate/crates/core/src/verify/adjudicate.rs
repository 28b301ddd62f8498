//! Empirical ranking of the candidate limit coefficients.
//!
//! Particle-system ensembles are reduced to two kinds of measurement: the
//! per-unit exchange constant `c` of every occupied two-step pair (from
//! quadratic variation) and the total rate of the first jump out of the start
//! state. Each measurement is scored against every candidate convention.
//! Before anything is trusted, each estimator is run on synthetic data with a
//! known answer and its interval coverage is recorded.

use serde::{Deserialize, Serialize};

use crate::ensemble::run_replicas;
use crate::error::{Error, Result};
use crate::kernel::{two_step_kernel, KernelFamily, RateKernel};
use crate::limit::{
    limit_jump_events, simulate_corner_chain, simulate_limit, CoefficientConvention, DiffusionConstant, JumpRateRule,
    LimitParams, LimitState,
};
use crate::rng::derive_replica_seed;
use crate::simplex::{sample_grid, SimplexPoint, Trajectory};
use crate::sip::{simulate_sip, ParticleConfig, SipParams};
use crate::verify::config_hash;
use crate::verify::qv::{estimate_pair_diffusivity, QvConfig};
use crate::verify::rates::{estimate_condensate_jump_rate, estimate_first_jump_rate, CondensateConfig};
use crate::verify::stats::{Estimate, RateEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// `chain:n`, `cycle:n` or `complete:n`.
    pub kernel: String,
    pub start: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub runs: usize,
    pub replicas: usize,
    pub horizon: f64,
    pub limit_dt: f64,
    pub corner_replicas: usize,
    pub corner_horizon: f64,
    pub corner_interval: f64,
    pub min_coverage: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            runs: 50,
            replicas: 16,
            horizon: 10.0,
            limit_dt: 1e-3,
            corner_replicas: 4,
            corner_horizon: 200.0,
            corner_interval: 0.01,
            min_coverage: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjudicationConfig {
    pub alpha: f64,
    pub n: u64,
    pub m: f64,
    pub replicas: usize,
    pub horizon: f64,
    pub sample_interval: f64,
    pub seed: u64,
    /// A first jump is seen once the initially empty sites hold `capture · min z_j(0)`.
    pub capture: f64,
    pub qv: QvConfig,
    pub experiments: Vec<ExperimentSpec>,
    pub calibration: CalibrationConfig,
}

impl Default for AdjudicationConfig {
    fn default() -> Self {
        AdjudicationConfig {
            alpha: 1.0,
            n: 2000,
            m: 0.005,
            replicas: 16,
            horizon: 6.0,
            sample_interval: 0.05,
            seed: 7,
            capture: 0.5,
            qv: QvConfig::default(),
            experiments: vec![
                ExperimentSpec { name: "chain3".into(), kernel: "chain:3".into(), start: vec![0.5, 0.0, 0.5] },
                ExperimentSpec { name: "path4".into(), kernel: "chain:4".into(), start: vec![0.5, 0.0, 0.0, 0.5] },
            ],
            calibration: CalibrationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub convention: String,
    pub predicted: f64,
    pub z: f64,
    pub inside_ci: bool,
}

/// `indistinguishable`: every candidate predicts the same value.
/// `resolved`: exactly one candidate lies inside the interval.
/// `overlap`: several do. `no_candidate_in_ci`: none does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Indistinguishable,
    Resolved,
    Overlap,
    NoCandidateInCi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFit {
    /// 1-based site labels.
    pub pair: (usize, usize),
    pub p_hat: u32,
    pub intervals: usize,
    pub estimate: Estimate,
    pub candidates: Vec<Candidate>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpFit {
    pub estimate: RateEstimate,
    pub candidates: Vec<Candidate>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub kernel: String,
    pub start: Vec<f64>,
    pub diffusivity: Vec<PairFit>,
    /// Pairs with too few usable intervals.
    pub skipped_pairs: Vec<(usize, usize)>,
    pub first_jump: JumpFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranked {
    pub rank: usize,
    pub convention: String,
    /// Sum of squared z-scores over all fits.
    pub chi2: f64,
    pub fits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub estimator: String,
    pub truth: f64,
    pub trials: usize,
    pub covered: usize,
    pub coverage: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjudicationReport {
    pub config: AdjudicationConfig,
    pub config_hash: String,
    pub experiments: Vec<ExperimentReport>,
    pub diffusion_ranking: Vec<Ranked>,
    pub jump_ranking: Vec<Ranked>,
    pub calibration: Vec<CalibrationResult>,
    pub calibrated: bool,
}

fn verdict(candidates: &[Candidate]) -> Verdict {
    let first = candidates[0].predicted;
    if candidates.iter().all(|c| (c.predicted - first).abs() <= 1e-12 * first.abs().max(1.0)) {
        return Verdict::Indistinguishable;
    }
    match candidates.iter().filter(|c| c.inside_ci).count() {
        0 => Verdict::NoCandidateInCi,
        1 => Verdict::Resolved,
        _ => Verdict::Overlap,
    }
}

/// `z` is a score statistic evaluated under each candidate, so its sign
/// says whether the data sit above or below the prediction.
fn score(z: impl Fn(f64) -> f64, covers: impl Fn(f64) -> bool, preds: &[(String, f64)]) -> Vec<Candidate> {
    preds
        .iter()
        .map(|(name, p)| Candidate { convention: name.clone(), predicted: *p, z: z(*p), inside_ci: covers(*p) })
        .collect()
}

/// Poisson score statistic `(k − λE) / sqrt(λE)` for candidate rate `λ`.
fn rate_z(r: &RateEstimate, lambda: f64) -> f64 {
    let expected = lambda * r.exposure;
    (r.events as f64 - expected) / expected.sqrt()
}

/// Fitted pairs, and the pairs skipped for lack of usable intervals.
type PairFits = (Vec<PairFit>, Vec<(usize, usize)>);

fn fit_pairs(ensemble: &[Trajectory], k: &RateKernel, alpha: f64, qv: &QvConfig) -> Result<PairFits> {
    let p_hat = two_step_kernel(k)?;
    let preds: Vec<(String, f64)> =
        DiffusionConstant::ALL.iter().map(|d| (d.name().to_string(), d.factor(alpha))).collect();
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for (i, j) in p_hat.pairs() {
        match estimate_pair_diffusivity(ensemble, (i, j), p_hat.count(i, j), qv) {
            Ok(d) => {
                let est = d.constant.expect("pairs() only lists positive counts");
                let ph = f64::from(d.p_hat);
                let candidates = score(|p| d.score_z(p * ph), |p| est.covers(p), &preds);
                fits.push(PairFit {
                    pair: (i + 1, j + 1),
                    p_hat: d.p_hat,
                    intervals: d.intervals,
                    estimate: est,
                    verdict: verdict(&candidates),
                    candidates,
                });
            }
            Err(Error::InsufficientSegments { .. }) => skipped.push((i + 1, j + 1)),
            Err(e) => return Err(e),
        }
    }
    Ok((fits, skipped))
}

fn fit_first_jump(
    ensemble: &[Trajectory],
    k: &RateKernel,
    start: &SimplexPoint,
    alpha: f64,
    capture: f64,
) -> Result<JumpFit> {
    let est = estimate_first_jump_rate(ensemble, k, capture)?;
    let state = LimitState::new(start.clone(), k)?;
    let preds = JumpRateRule::ALL
        .iter()
        .map(|&rule| {
            let conv = CoefficientConvention::new(rule, DiffusionConstant::default());
            let total: f64 = limit_jump_events(&state, k, alpha, &conv)?.iter().map(|e| e.rate).sum();
            Ok((rule.name().to_string(), total))
        })
        .collect::<Result<Vec<_>>>()?;
    let r = est.rate;
    let candidates = score(|p| rate_z(&r, p), |p| r.covers(p), &preds);
    Ok(JumpFit { estimate: r, verdict: verdict(&candidates), candidates })
}

fn rank(names: &[&str], fits: &[&[Candidate]]) -> Vec<Ranked> {
    let mut out: Vec<Ranked> = names
        .iter()
        .map(|&name| {
            let zs: Vec<f64> =
                fits.iter().flat_map(|f| f.iter().filter(|c| c.convention == name).map(|c| c.z)).collect();
            Ranked { rank: 0, convention: name.to_string(), chi2: zs.iter().map(|z| z * z).sum(), fits: zs.len() }
        })
        .collect();
    out.sort_by(|a, b| a.chi2.total_cmp(&b.chi2));
    out.iter_mut().enumerate().for_each(|(i, r)| r.rank = i + 1);
    out
}

fn run_experiment(cfg: &AdjudicationConfig, idx: usize, workers: Option<usize>) -> Result<ExperimentReport> {
    let spec = &cfg.experiments[idx];
    let family: KernelFamily = spec.kernel.parse()?;
    let k = RateKernel::from_family(&family)?;
    let start = SimplexPoint::new(spec.start.clone())?;
    let params = SipParams::new(cfg.n, cfg.m, cfg.alpha)?;
    let init = ParticleConfig::from_simplex(&start, cfg.n)?;
    let grid = sample_grid(cfg.horizon, cfg.sample_interval);
    let seed = derive_replica_seed(cfg.seed, idx as u64);
    let ensemble =
        run_replicas(seed, cfg.replicas, workers, |r, s, rng| simulate_sip(&k, &params, &init, &grid, s, r, rng))?;
    let (diffusivity, skipped_pairs) = fit_pairs(&ensemble, &k, cfg.alpha, &cfg.qv)?;
    let first_jump = fit_first_jump(&ensemble, &k, &start, cfg.alpha, cfg.capture)?;
    Ok(ExperimentReport {
        name: spec.name.clone(),
        kernel: spec.kernel.clone(),
        start: spec.start.clone(),
        diffusivity,
        skipped_pairs,
        first_jump,
    })
}

fn coverage(estimator: &str, truth: f64, hits: Vec<(usize, usize)>, min: f64) -> CalibrationResult {
    let (covered, trials) = hits.iter().fold((0, 0), |acc, h| (acc.0 + h.0, acc.1 + h.1));
    let coverage = covered as f64 / trials.max(1) as f64;
    CalibrationResult {
        estimator: estimator.to_string(),
        truth,
        trials,
        covered,
        coverage,
        pass: trials > 0 && coverage >= min,
    }
}

/// Interval coverage of each estimator on synthetic data with known
/// coefficients: QV on limit paths with `c = α/2`, condensate hop rates on
/// the exact corner chain, and the first-jump rate on limit paths with the
/// constant jump rule. Run `r` uses master seed `derive_replica_seed(seed, r)`.
pub fn calibrate(cfg: &AdjudicationConfig, workers: Option<usize>) -> Result<Vec<CalibrationResult>> {
    let cal = &cfg.calibration;
    let alpha = cfg.alpha;
    let grid = sample_grid(cal.horizon, cfg.sample_interval);
    let base = derive_replica_seed(cfg.seed, u64::MAX);

    let chain3 = RateKernel::from_family(&KernelFamily::Chain(3))?;
    let conv = CoefficientConvention::new(JumpRateRule::Proportional, DiffusionConstant::Half);
    let params = LimitParams::new(alpha, conv, cal.limit_dt)?;
    let x0 = LimitState::new(SimplexPoint::new(vec![0.5, 0.0, 0.5])?, &chain3)?;
    let truth_c = DiffusionConstant::Half.factor(alpha);
    let qv_hits = (0..cal.runs)
        .map(|run| {
            let seed = derive_replica_seed(base, run as u64);
            let ens = run_replicas(seed, cal.replicas, workers, |r, s, rng| {
                Ok(simulate_limit(&x0, &chain3, &params, &grid, s, r, rng)?.trajectory)
            })?;
            Ok(match estimate_pair_diffusivity(&ens, (0, 2), 1, &cfg.qv) {
                Ok(d) => (usize::from(d.effective.covers(truth_c)), 1),
                Err(Error::InsufficientSegments { .. }) => (0, 1),
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let triangle = RateKernel::from_family(&KernelFamily::Complete(3))?;
    let corner_grid = sample_grid(cal.corner_horizon, cal.corner_interval);
    let rate_cfg = CondensateConfig { burn_in: 0.0, ..CondensateConfig::default() };
    let truth_hop = 0.5 * alpha;
    let hop_hits = (0..cal.runs)
        .map(|run| {
            let seed = derive_replica_seed(base ^ 0x5151, run as u64);
            let ens = run_replicas(seed, cal.corner_replicas, workers, |r, s, rng| {
                simulate_corner_chain(&triangle, alpha, (r % 3) as usize, &corner_grid, s, r, rng)
            })?;
            let rates = estimate_condensate_jump_rate(&ens, &rate_cfg)?;
            let covered = rates.edges.iter().filter(|e| e.estimate.covers(truth_hop)).count();
            Ok((covered, rates.edges.len()))
        })
        .collect::<Result<Vec<_>>>()?;

    let path4 = RateKernel::from_family(&KernelFamily::Chain(4))?;
    let conv = CoefficientConvention::new(JumpRateRule::Constant, DiffusionConstant::Half);
    let params = LimitParams::new(alpha, conv, cal.limit_dt)?;
    let x0 = LimitState::new(SimplexPoint::new(vec![0.5, 0.0, 0.0, 0.5])?, &path4)?;
    let truth_jump: f64 = limit_jump_events(&x0, &path4, alpha, &conv)?.iter().map(|e| e.rate).sum();
    let jump_hits = (0..cal.runs)
        .map(|run| {
            let seed = derive_replica_seed(base ^ 0xa7a7, run as u64);
            let ens = run_replicas(seed, cal.replicas, workers, |r, s, rng| {
                Ok(simulate_limit(&x0, &path4, &params, &grid, s, r, rng)?.trajectory)
            })?;
            let est = estimate_first_jump_rate(&ens, &path4, cfg.capture)?;
            Ok((usize::from(est.rate.covers(truth_jump)), 1))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(vec![
        coverage("pair_diffusivity", truth_c, qv_hits, cal.min_coverage),
        coverage("condensate_hop_rate", truth_hop, hop_hits, cal.min_coverage),
        coverage("first_jump_rate", truth_jump, jump_hits, cal.min_coverage),
    ])
}

/// Runs every experiment and the calibration. The result depends only on
/// `cfg`, so re-running a saved manifest reproduces it exactly.
pub fn adjudicate(cfg: &AdjudicationConfig, workers: Option<usize>) -> Result<AdjudicationReport> {
    if cfg.experiments.is_empty() {
        return Err(Error::param("experiments", "need at least one experiment"));
    }
    let experiments =
        (0..cfg.experiments.len()).map(|i| run_experiment(cfg, i, workers)).collect::<Result<Vec<_>>>()?;
    let diff_names: Vec<&str> = DiffusionConstant::ALL.iter().map(|d| d.name()).collect();
    let jump_names: Vec<&str> = JumpRateRule::ALL.iter().map(|r| r.name()).collect();
    let diff_fits: Vec<&[Candidate]> =
        experiments.iter().flat_map(|e| e.diffusivity.iter().map(|f| f.candidates.as_slice())).collect();
    let jump_fits: Vec<&[Candidate]> = experiments.iter().map(|e| e.first_jump.candidates.as_slice()).collect();
    let calibration = calibrate(cfg, workers)?;
    Ok(AdjudicationReport {
        config: cfg.clone(),
        config_hash: config_hash(cfg),
        diffusion_ranking: rank(&diff_names, &diff_fits),
        jump_ranking: rank(&jump_names, &jump_fits),
        calibrated: calibration.iter().all(|c| c.pass),
        calibration,
        experiments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(name: &str, predicted: f64, inside: bool) -> Candidate {
        Candidate { convention: name.into(), predicted, z: 0.0, inside_ci: inside }
    }

    #[test]
    fn verdicts() {
        assert_eq!(verdict(&[cand("a", 0.5, true), cand("b", 0.5, true)]), Verdict::Indistinguishable);
        assert_eq!(verdict(&[cand("a", 0.5, true), cand("b", 1.0, false)]), Verdict::Resolved);
        assert_eq!(verdict(&[cand("a", 0.5, true), cand("b", 1.0, true)]), Verdict::Overlap);
        assert_eq!(verdict(&[cand("a", 0.5, false), cand("b", 1.0, false)]), Verdict::NoCandidateInCi);
    }

    #[test]
    fn ranking_orders_by_chi2() {
        let f1 = [Candidate { z: 3.0, ..cand("a", 1.0, false) }, Candidate { z: 0.5, ..cand("b", 1.0, true) }];
        let f2 = [Candidate { z: -1.0, ..cand("a", 1.0, true) }, Candidate { z: 1.0, ..cand("b", 1.0, true) }];
        let r = rank(&["a", "b"], &[&f1, &f2]);
        assert_eq!(r[0].convention, "b");
        assert_eq!(r[0].rank, 1);
        assert!((r[1].chi2 - 10.0).abs() < 1e-12);
        assert_eq!(r[1].fits, 2);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = AdjudicationConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: AdjudicationConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(config_hash(&cfg), config_hash(&back));
    }

    #[test]
    fn small_adjudication_is_deterministic() {
        let cfg = AdjudicationConfig {
            n: 300,
            m: 0.02,
            replicas: 4,
            horizon: 3.0,
            experiments: vec![ExperimentSpec {
                name: "c3".into(),
                kernel: "chain:3".into(),
                start: vec![0.5, 0.0, 0.5],
            }],
            calibration: CalibrationConfig {
                runs: 3,
                replicas: 4,
                horizon: 3.0,
                corner_horizon: 20.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = adjudicate(&cfg, Some(1)).unwrap();
        let b = adjudicate(&cfg, Some(2)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.diffusion_ranking.len(), 3);
        assert_eq!(a.jump_ranking.len(), 2);
        assert!(a.diffusion_ranking.iter().all(|r| r.chi2.is_finite()));
        assert_eq!(a.experiments[0].first_jump.verdict, Verdict::Indistinguishable);
    }
}
