//! Estimators fed synthetic data with a known answer.

use sipcond::ensemble::run_replicas;
use sipcond::kernel::{KernelFamily, RateKernel};
use sipcond::limit::{
    simulate_corner_chain, simulate_limit, CoefficientConvention, DiffusionConstant, JumpRateRule, LimitParams,
    LimitState,
};
use sipcond::simplex::{sample_grid, SimplexPoint, Trajectory};
use sipcond::verify::qv::{estimate_pair_diffusivity, QvConfig};
use sipcond::verify::rates::{estimate_condensate_jump_rate, estimate_first_jump_rate, CondensateConfig};

fn limit_paths(
    kernel: &RateKernel,
    start: &[f64],
    conv: CoefficientConvention,
    reps: usize,
    seed: u64,
) -> Vec<Trajectory> {
    let state = LimitState::new(SimplexPoint::new(start.to_vec()).unwrap(), kernel).unwrap();
    let p = LimitParams::new(1.0, conv, 1e-3).unwrap();
    let grid = sample_grid(10.0, 0.05);
    run_replicas(seed, reps, None, |r, s, rng| Ok(simulate_limit(&state, kernel, &p, &grid, s, r, rng)?.trajectory))
        .unwrap()
}

#[test]
fn qv_recovers_each_diffusion_constant() {
    let k = RateKernel::from_family(&KernelFamily::Chain(3)).unwrap();
    for (idx, d) in DiffusionConstant::ALL.into_iter().enumerate() {
        let conv = CoefficientConvention::new(JumpRateRule::Proportional, d);
        let paths = limit_paths(&k, &[0.5, 0.0, 0.5], conv, 48, 100 + idx as u64);
        let est = estimate_pair_diffusivity(&paths, (0, 2), 1, &QvConfig::default()).unwrap();
        let truth = d.factor(1.0);
        assert!(est.effective.covers(truth), "{}: {:?} vs {truth}", d.name(), est.effective);
        // The three candidates are a factor 2 apart; the interval must not cover the others.
        for other in DiffusionConstant::ALL.into_iter().filter(|&o| o != d) {
            assert!(!est.effective.covers(other.factor(1.0)), "{} also covers {}", d.name(), other.name());
        }
    }
}

#[test]
fn qv_interval_is_finite_for_one_replica() {
    let k = RateKernel::from_family(&KernelFamily::Chain(3)).unwrap();
    let est = (0..100)
        .find_map(|seed| {
            let paths = limit_paths(&k, &[0.5, 0.0, 0.5], CoefficientConvention::default(), 1, seed);
            estimate_pair_diffusivity(&paths, (0, 2), 1, &QvConfig::default()).ok()
        })
        .expect("some path lives long enough");
    assert!(est.effective.ci_high.is_finite() && est.effective.ci_low < est.effective.value);
}

#[test]
fn corner_chain_hop_rate_is_half_alpha() {
    let k = RateKernel::from_family(&KernelFamily::Complete(3)).unwrap();
    let grid = sample_grid(400.0, 0.01);
    let paths = run_replicas(3, 4, None, |r, s, rng| simulate_corner_chain(&k, 1.0, 0, &grid, s, r, rng)).unwrap();
    let rates = estimate_condensate_jump_rate(&paths, &CondensateConfig::default()).unwrap();
    assert!(rates.pooled_exit_rate().covers(1.0), "{:?}", rates.pooled_exit_rate());
    // Six edges: a 3.5 sigma band per edge keeps the family-wise error small.
    for e in &rates.edges {
        let band = 3.5 * (0.5 / e.estimate.exposure).sqrt();
        assert!((e.estimate.rate - 0.5).abs() < band, "{} -> {}: {:?}", e.from, e.to, e.estimate);
    }
    assert!((rates.mean_holding_time() - 1.0).abs() < 0.1);
}

#[test]
fn first_jump_rate_separates_the_two_rules() {
    // From (0.5, 0, 0, 0.5) on a 4-path each empty site sees mass 0.5, so the
    // total first-jump rate is α/2 under one rule and α under the other.
    let k = RateKernel::from_family(&KernelFamily::Chain(4)).unwrap();
    for (rule, truth) in [(JumpRateRule::Proportional, 0.5), (JumpRateRule::Constant, 1.0)] {
        let conv = CoefficientConvention::new(rule, DiffusionConstant::Half);
        let paths = limit_paths(&k, &[0.5, 0.0, 0.0, 0.5], conv, 400, 21);
        let est = estimate_first_jump_rate(&paths, &k, 0.5).unwrap();
        assert!(est.rate.covers(truth), "{}: {:?}", rule.name(), est.rate);
        assert!(!est.rate.covers(1.5 - truth), "{}: {:?}", rule.name(), est.rate);
        assert!(est.targets.iter().flatten().all(|&j| j == 1 || j == 2));
    }
}
