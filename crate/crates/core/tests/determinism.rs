use proptest::prelude::*;

use sipcond::diffusion::{simulate_auxiliary, SdeParams};
use sipcond::ensemble::run_replicas;
use sipcond::kernel::{KernelFamily, RateKernel};
use sipcond::limit::{simulate_corner_chain, simulate_limit, CoefficientConvention, LimitParams, LimitState};
use sipcond::simplex::{sample_grid, SimplexPoint, Trajectory};
use sipcond::sip::{simulate_sip, ParticleConfig, SipParams};
use sipcond::verify::invariants::check_limit_invariants;

fn cycle4() -> RateKernel {
    RateKernel::from_family(&KernelFamily::Cycle(4)).unwrap()
}

fn sip_ensemble(seed: u64, workers: Option<usize>) -> Vec<Trajectory> {
    let k = cycle4();
    let p = SipParams::new(300, 0.02, 1.0).unwrap();
    let init = ParticleConfig::from_simplex(&SimplexPoint::uniform(4), 300).unwrap();
    let grid = sample_grid(1.0, 0.1);
    run_replicas(seed, 6, workers, |r, s, rng| simulate_sip(&k, &p, &init, &grid, s, r, rng)).unwrap()
}

#[test]
fn sip_is_bit_identical_across_runs_and_workers() {
    let a = sip_ensemble(5, Some(1));
    assert_eq!(a, sip_ensemble(5, Some(4)));
    assert_eq!(a, sip_ensemble(5, None));
    assert_ne!(a, sip_ensemble(6, None));
}

#[test]
fn replica_depends_only_on_its_own_seed() {
    let k = cycle4();
    let grid = sample_grid(2.0, 0.1);
    let x0 = SimplexPoint::new(vec![0.4, 0.1, 0.3, 0.2]).unwrap();
    let p = SdeParams::new(1.0, 20.0).unwrap();
    let many = run_replicas(9, 5, None, |r, s, rng| simulate_auxiliary(&x0, &k, &p, &grid, s, r, rng)).unwrap();
    let few = run_replicas(9, 2, None, |r, s, rng| simulate_auxiliary(&x0, &k, &p, &grid, s, r, rng)).unwrap();
    assert_eq!(&many[..2], &few[..]);
}

#[test]
fn limit_and_corner_chain_repeat() {
    let k = cycle4();
    let grid = sample_grid(3.0, 0.05);
    let state = LimitState::new(SimplexPoint::new(vec![0.5, 0.0, 0.5, 0.0]).unwrap(), &k).unwrap();
    let p = LimitParams::new(1.0, CoefficientConvention::default(), 1e-3).unwrap();
    let run = || run_replicas(2, 4, None, |r, s, rng| simulate_limit(&state, &k, &p, &grid, s, r, rng)).unwrap();
    let (a, b) = (run(), run());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.trajectory, y.trajectory);
        assert_eq!(x.jumps, y.jumps);
    }
    let chain = || run_replicas(2, 4, None, |r, s, rng| simulate_corner_chain(&k, 1.0, 0, &grid, s, r, rng)).unwrap();
    assert_eq!(chain(), chain());
}

fn family() -> impl Strategy<Value = KernelFamily> {
    prop_oneof![
        (3usize..6).prop_map(KernelFamily::Chain),
        (3usize..6).prop_map(KernelFamily::Cycle),
        (3usize..5).prop_map(KernelFamily::Complete),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Structural invariants hold from any start in the absorbing set, on
    /// any small graph.
    #[test]
    fn limit_invariants_on_random_graphs(fam in family(), seed in any::<u64>(), weights in prop::collection::vec(0.05f64..1.0, 6)) {
        let k = RateKernel::from_family(&fam).unwrap();
        let sites = k.site_count();
        // Greedy independent set gives a start in the absorbing set.
        let mut x = vec![0.0; sites];
        for i in 0..sites {
            if k.neighbors(i).iter().all(|&j| x[j] == 0.0) {
                x[i] = weights[i % weights.len()];
            }
        }
        let start = SimplexPoint::normalized(x).unwrap();
        let state = LimitState::new(start, &k).unwrap();
        let p = LimitParams::new(1.0, CoefficientConvention::default(), 2e-3).unwrap();
        let grid = sample_grid(2.0, 0.02);
        let runs = run_replicas(seed, 4, Some(1), |r, s, rng| simulate_limit(&state, &k, &p, &grid, s, r, rng)).unwrap();
        let rep = check_limit_invariants(&runs, &k);
        prop_assert_eq!(rep.violations.total(), 0, "{:?}", rep.violations);
    }
}
