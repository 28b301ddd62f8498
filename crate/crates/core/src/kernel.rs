//! Symmetric random-walk kernels, their two-step connection counts, and the
//! absorbing/corner structure they induce on the simplex.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simplex::SimplexPoint;

/// Validated symmetric, irreducible jump-rate matrix `p(i,j)` on `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateKernel {
    n: usize,
    rates: Vec<f64>,
    binary: bool,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

/// Checks symmetry, zero diagonal, non-negativity and connectivity.
pub fn validate_kernel(matrix: &[Vec<f64>]) -> Result<RateKernel> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::EmptyKernel);
    }
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare { row, len: r.len(), expected: n });
        }
    }
    for i in 0..n {
        for j in 0..n {
            let v = matrix[i][j];
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeRate { i, j });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix[i][j] != matrix[j][i] {
                return Err(Error::Asymmetric { i, j });
            }
        }
    }
    for i in 0..n {
        if matrix[i][i] != 0.0 {
            return Err(Error::NonzeroDiagonal { i });
        }
    }

    let rates: Vec<f64> = matrix.iter().flatten().copied().collect();
    let binary = rates.iter().all(|&v| v == 0.0 || v == 1.0);
    let neighbors: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| rates[i * n + j] > 0.0).collect()).collect();
    let edges =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| rates[i * n + j] > 0.0).collect();

    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &neighbors[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if let Some(unreachable) = seen.iter().position(|&s| !s) {
        return Err(Error::Reducible { unreachable });
    }

    Ok(RateKernel { n, rates, binary, neighbors, edges })
}

impl RateKernel {
    pub fn site_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.n + j]
    }

    pub fn is_binary(&self) -> bool {
        self.binary
    }

    /// Sites `j` with `p(i,j) > 0`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Unordered edges `(i,j)`, `i < j`, with positive rate.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.neighbors[i].iter().map(|&j| self.rate(i, j)).sum()
    }

    pub fn max_degree(&self) -> f64 {
        (0..self.n).map(|i| self.degree(i)).fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.rates.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `Σ_i p(i,j) x_i`, the mass adjacent to site `j`.
    pub fn neighbor_mass(&self, x: &[f64], j: usize) -> f64 {
        self.neighbors[j].iter().map(|&i| self.rate(i, j) * x[i]).sum()
    }

    pub fn from_family(family: &KernelFamily) -> Result<RateKernel> {
        validate_kernel(&family.matrix())
    }
}

/// Named kernel families with unit rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// Path `1 - 2 - ... - n`.
    Chain(usize),
    /// Ring `1 - 2 - ... - n - 1`.
    Cycle(usize),
    /// Complete graph on `n` sites.
    Complete(usize),
}

impl KernelFamily {
    pub fn sites(&self) -> usize {
        match *self {
            KernelFamily::Chain(n) | KernelFamily::Cycle(n) | KernelFamily::Complete(n) => n,
        }
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.sites();
        let mut m = vec![vec![0.0; n]; n];
        let mut link = |i: usize, j: usize| {
            m[i][j] = 1.0;
            m[j][i] = 1.0;
        };
        match *self {
            KernelFamily::Chain(_) => (1..n).for_each(|i| link(i - 1, i)),
            KernelFamily::Cycle(_) => (0..n).for_each(|i| link(i, (i + 1) % n)),
            KernelFamily::Complete(_) => (0..n).for_each(|i| ((i + 1)..n).for_each(|j| link(i, j))),
        }
        m
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownFamily(s.to_string());
        let (name, size) = s.split_once(':').ok_or_else(unknown)?;
        let n: usize = size.trim().parse().map_err(|_| unknown())?;
        let family = match name.trim() {
            "chain" if n >= 2 => KernelFamily::Chain(n),
            "cycle" if n >= 3 => KernelFamily::Cycle(n),
            "complete" if n >= 2 => KernelFamily::Complete(n),
            _ => return Err(unknown()),
        };
        Ok(family)
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Chain(n) => write!(f, "chain:{n}"),
            KernelFamily::Cycle(n) => write!(f, "cycle:{n}"),
            KernelFamily::Complete(n) => write!(f, "complete:{n}"),
        }
    }
}

/// Two-step connection counts `p̂(i,j) = (1 - p(i,j)) Σ_k p(i,k) p(k,j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepKernel {
    n: usize,
    counts: Vec<u32>,
}

impl TwoStepKernel {
    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    pub fn site_count(&self) -> usize {
        self.n
    }

    /// Unordered pairs `(i,j)`, `i < j`, with a positive count.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.count(i, j) > 0)
            .collect()
    }
}

pub fn two_step_kernel(kernel: &RateKernel) -> Result<TwoStepKernel> {
    if !kernel.is_binary() {
        return Err(Error::NotBinaryKernel);
    }
    let n = kernel.site_count();
    let mut counts = vec![0u32; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j || kernel.rate(i, j) > 0.0 {
                continue;
            }
            let paths = kernel.neighbors(i).iter().filter(|&&k| kernel.rate(k, j) > 0.0).count();
            counts[i * n + j] = paths as u32;
        }
    }
    Ok(TwoStepKernel { n, counts })
}

/// Tolerance for the absorbing-set predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingPredicateConfig {
    epsilon_abs: f64,
}

impl AbsorbingPredicateConfig {
    /// Default for exactly represented states.
    pub const EXACT: AbsorbingPredicateConfig = AbsorbingPredicateConfig { epsilon_abs: 1e-9 };
    /// Default for Euler–Maruyama trajectories.
    pub const SDE: AbsorbingPredicateConfig = AbsorbingPredicateConfig { epsilon_abs: 1e-6 };

    pub fn new(epsilon_abs: f64) -> Result<Self> {
        if !(epsilon_abs > 0.0) {
            return Err(Error::param("epsilon_abs", "must be positive"));
        }
        Ok(AbsorbingPredicateConfig { epsilon_abs })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_abs
    }
}

impl Default for AbsorbingPredicateConfig {
    fn default() -> Self {
        Self::EXACT
    }
}

/// True iff `p(i,j) x_i x_j < ε` for every pair.
pub fn absorbing_membership(x: &SimplexPoint, kernel: &RateKernel, cfg: &AbsorbingPredicateConfig) -> bool {
    is_absorbing(x.coords(), kernel, cfg.epsilon())
}

pub(crate) fn is_absorbing(x: &[f64], kernel: &RateKernel, eps: f64) -> bool {
    kernel.edges().iter().all(|&(i, j)| kernel.rate(i, j) * x[i] * x[j] < eps)
}

/// Generator of the condensate random walk on corners: `e_i -> e_j` at `(α/2) p(i,j)`.
pub fn corner_chain_rates(kernel: &RateKernel, alpha: f64) -> Result<Vec<Vec<f64>>> {
    if !(alpha > 0.0) {
        return Err(Error::NonpositiveAlpha(alpha));
    }
    let n = kernel.site_count();
    let mut q = vec![vec![0.0; n]; n];
    for (i, row) in q.iter_mut().enumerate() {
        for &j in kernel.neighbors(i) {
            row[j] = 0.5 * alpha * kernel.rate(i, j);
        }
        row[i] = -row.iter().sum::<f64>();
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain3() -> RateKernel {
        validate_kernel(&[vec![0., 1., 0.], vec![1., 0., 1.], vec![0., 1., 0.]]).unwrap()
    }

    #[test]
    fn chain_is_valid_and_binary() {
        let k = chain3();
        assert!(k.is_binary());
        assert_eq!(k.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(validate_kernel(&[vec![0., 1.], vec![0., 0.]]), Err(Error::Asymmetric { i: 0, j: 1 })));
        assert!(matches!(
            validate_kernel(&[vec![0., 1., 0.], vec![1., 0., 0.], vec![0., 0., 0.]]),
            Err(Error::Reducible { unreachable: 2 })
        ));
        assert!(matches!(validate_kernel(&[vec![1., 1.], vec![1., 0.]]), Err(Error::NonzeroDiagonal { i: 0 })));
        assert!(matches!(validate_kernel(&[vec![0., -1.], vec![-1., 0.]]), Err(Error::NegativeRate { .. })));
        assert!(matches!(validate_kernel(&[vec![0., 1.]]), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn weighted_kernel_accepted_but_no_two_step() {
        let k = validate_kernel(&[vec![0., 0.5], vec![0.5, 0.]]).unwrap();
        assert!(!k.is_binary());
        assert!(matches!(two_step_kernel(&k), Err(Error::NotBinaryKernel)));
    }

    #[test]
    fn two_step_on_cycle4() {
        let k = RateKernel::from_family(&KernelFamily::Cycle(4)).unwrap();
        let p = two_step_kernel(&k).unwrap();
        assert_eq!(p.count(0, 2), 2);
        assert_eq!(p.count(1, 3), 2);
        assert_eq!(p.count(0, 1), 0);
        assert_eq!(p.pairs(), vec![(0, 2), (1, 3)]);
    }

    #[test]
    fn two_step_complete_and_path() {
        let tri = RateKernel::from_family(&KernelFamily::Complete(3)).unwrap();
        assert!(two_step_kernel(&tri).unwrap().pairs().is_empty());
        for n in 2..9 {
            let k = RateKernel::from_family(&KernelFamily::Chain(n)).unwrap();
            let p = two_step_kernel(&k).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let expect = u32::from(i.abs_diff(j) == 2);
                    assert_eq!(p.count(i, j), expect, "chain:{n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn absorbing_examples() {
        let k = chain3();
        let cfg = AbsorbingPredicateConfig::EXACT;
        let on_segment = SimplexPoint::new(vec![0.4, 0.0, 0.6]).unwrap();
        assert!(absorbing_membership(&on_segment, &k, &cfg));
        let mixed = SimplexPoint::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(!absorbing_membership(&mixed, &k, &cfg));
        for i in 0..3 {
            assert!(absorbing_membership(&SimplexPoint::corner(3, i), &k, &cfg));
        }
    }

    #[test]
    fn corner_rates_examples() {
        let tri = RateKernel::from_family(&KernelFamily::Complete(3)).unwrap();
        let q = corner_chain_rates(&tri, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(q[i][j], 0.5);
                }
            }
        }
        let q = corner_chain_rates(&chain3(), 2.0).unwrap();
        assert_eq!(q[0][2], 0.0);
        assert_eq!(q[1][0], 1.0);
        assert!(matches!(corner_chain_rates(&chain3(), 0.0), Err(Error::NonpositiveAlpha(_))));
    }

    #[test]
    fn family_parsing() {
        assert_eq!("cycle:4".parse::<KernelFamily>().unwrap(), KernelFamily::Cycle(4));
        assert_eq!("complete:3".parse::<KernelFamily>().unwrap().to_string(), "complete:3");
        assert!("ring:4".parse::<KernelFamily>().is_err());
        assert!("cycle:2".parse::<KernelFamily>().is_err());
    }

    fn random_connected_binary() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..=8).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
                let mut m = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in (i + 1)..n {
                        if bits[i * n + j] || j == i + 1 {
                            m[i][j] = 1.0;
                            m[j][i] = 1.0;
                        }
                    }
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn two_step_symmetric(m in random_connected_binary()) {
            let k = validate_kernel(&m).unwrap();
            let p = two_step_kernel(&k).unwrap();
            let n = k.site_count();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(p.count(i, j), p.count(j, i));
                    // brute-force oracle of the defining formula
                    let mut s = 0.0;
                    for l in 0..n { s += m[i][l] * m[l][j]; }
                    let expect = if i == j { 0.0 } else { (1.0 - m[i][j]) * s };
                    prop_assert_eq!(f64::from(p.count(i, j)), expect);
                }
            }
        }

        #[test]
        fn corners_always_absorbing(m in random_connected_binary()) {
            let k = validate_kernel(&m).unwrap();
            for i in 0..k.site_count() {
                let e = SimplexPoint::corner(k.site_count(), i);
                prop_assert!(absorbing_membership(&e, &k, &AbsorbingPredicateConfig::EXACT));
            }
        }

        #[test]
        fn corner_rows_sum_to_zero(m in random_connected_binary(), alpha in 0.01f64..10.0) {
            let k = validate_kernel(&m).unwrap();
            let q = corner_chain_rates(&k, alpha).unwrap();
            for (i, row) in q.iter().enumerate() {
                prop_assert!(row.iter().sum::<f64>().abs() < 1e-12);
                for (j, &v) in row.iter().enumerate() {
                    if i != j { prop_assert!(v >= 0.0); }
                }
            }
        }
    }
}
