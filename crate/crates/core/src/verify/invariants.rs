//! Structural checks on limit-process runs.

use serde::Serialize;

use crate::kernel::{is_absorbing, AbsorbingPredicateConfig, RateKernel};
use crate::limit::LimitRun;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InvariantViolations {
    /// A sampled state outside the absorbing set.
    pub outside_absorbing: usize,
    /// The number of occupied sites went up between samples.
    pub occupied_increase: usize,
    /// A corner was followed by a non-corner.
    pub left_corner: usize,
    /// A jump moved mass outside the target and its neighbours.
    pub nonlocal_jump: usize,
}

impl InvariantViolations {
    pub fn total(&self) -> usize {
        self.outside_absorbing + self.occupied_increase + self.left_corner + self.nonlocal_jump
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    pub paths: usize,
    pub samples: usize,
    pub jumps: usize,
    pub violations: InvariantViolations,
}

fn occupied(x: &[f64]) -> usize {
    x.iter().filter(|&&c| c > 0.0).count()
}

/// Checks every sampled state and every recorded jump of `runs`.
pub fn check_limit_invariants(runs: &[LimitRun], k: &RateKernel) -> InvariantReport {
    let eps = AbsorbingPredicateConfig::EXACT.epsilon();
    let mut rep = InvariantReport { paths: runs.len(), ..Default::default() };
    let v = &mut rep.violations;
    for run in runs {
        let pts = &run.trajectory.points;
        rep.samples += pts.len();
        for x in pts {
            if !is_absorbing(x.coords(), k, eps) {
                v.outside_absorbing += 1;
            }
        }
        for w in pts.windows(2) {
            let (a, b) = (occupied(w[0].coords()), occupied(w[1].coords()));
            if b > a {
                v.occupied_increase += 1;
            }
            if a == 1 && b != 1 {
                v.left_corner += 1;
            }
        }
        rep.jumps += run.jumps.len();
        for j in &run.jumps {
            let local = |s: usize| s == j.target || k.neighbors(j.target).contains(&s);
            if j.pre.iter().zip(&j.post).enumerate().any(|(s, (p, q))| p != q && !local(s)) {
                v.nonlocal_jump += 1;
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;
    use crate::limit::JumpRecord;
    use crate::simplex::{SimplexPoint, Trajectory};

    #[test]
    fn detects_each_violation() {
        let k = RateKernel::from_family(&KernelFamily::Cycle(4)).unwrap();
        let mut t = Trajectory::new(0, 0);
        t.push(0.0, SimplexPoint::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap());
        t.push(1.0, SimplexPoint::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap());
        let jump =
            JumpRecord { t: 0.5, target: 1, z: 1.0, pre: vec![0.5, 0.0, 0.0, 0.5], post: vec![0.0, 1.0, 0.0, 0.0] };
        let rep = check_limit_invariants(&[LimitRun { trajectory: t, jumps: vec![jump] }], &k);
        let v = rep.violations;
        assert_eq!((v.outside_absorbing, v.occupied_increase, v.left_corner, v.nonlocal_jump), (1, 1, 1, 1));
    }
}
