//! Diffusion-constant estimation from realised quadratic variation.
//!
//! If mass is exchanged between sites `i` and `j` with generator coefficient
//! `κ x_i x_j (∂_i − ∂_j)²`, then `x_i − x_j` has quadratic variation
//! increment `8 κ x_i x_j dt`. Summing squared increments `Q_k` and the
//! trapezoidal integrals `D_k` of `x_i x_j` over usable sample intervals gives
//! the ratio estimator `κ̂ = ΣQ / (8 ΣD)`. Increments are correlated along a
//! path, so the error analysis treats each replica's totals as one
//! observation: a Fieller interval with a t quantile on one fewer degree of
//! freedom than there are contributing replicas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::Trajectory;
use crate::verify::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvConfig {
    /// Both endpoints need `x_i x_j` above this.
    pub cutoff: f64,
    /// Every other site must stay below this on the interval and one sample
    /// either side; larger mass there means a jump is under way.
    pub quiet: f64,
    pub min_intervals: usize,
}

impl Default for QvConfig {
    fn default() -> Self {
        QvConfig { cutoff: 0.01, quiet: 0.02, min_intervals: 10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairDiffusivity {
    pub pair: (usize, usize),
    pub p_hat: u32,
    /// `c` in `c p̂ x_i x_j`; absent when `p̂ = 0`.
    pub constant: Option<Estimate>,
    /// `c p̂`, the coefficient actually seen by the pair.
    pub effective: Estimate,
    pub intervals: usize,
    pub exposure: f64,
    /// Per-cluster `(ΣQ, 8ΣD)`, kept for score tests.
    #[serde(skip)]
    pub clusters: Vec<(f64, f64)>,
}

impl PairDiffusivity {
    /// Clustered score statistic for the hypothesis that the effective
    /// coefficient `c p̂` equals `effective`. `|z|` is below the interval's
    /// t quantile exactly when `effective` lies inside the interval.
    pub fn score_z(&self, effective: f64) -> f64 {
        let m = ClusterMoments::new(&self.clusters);
        (m.sa - effective * m.sb) / m.total_var(effective).sqrt()
    }
}

/// Totals and centred second moments of cluster pairs `(A_g, B_g)`.
struct ClusterMoments {
    sa: f64,
    sb: f64,
    saa: f64,
    sab: f64,
    sbb: f64,
    /// `G/(G−1)`.
    c: f64,
}

impl ClusterMoments {
    fn new(clusters: &[(f64, f64)]) -> Self {
        let g = clusters.len() as f64;
        let (sa, sb) = clusters.iter().fold((0.0, 0.0), |(x, y), (a, b)| (x + a, y + b));
        let (ma, mb) = (sa / g, sb / g);
        let (saa, sab, sbb) = clusters.iter().fold((0.0, 0.0, 0.0), |(x, y, z), (a, b)| {
            (x + (a - ma).powi(2), y + (a - ma) * (b - mb), z + (b - mb).powi(2))
        });
        let c = if g > 1.0 { g / (g - 1.0) } else { f64::INFINITY };
        ClusterMoments { sa, sb, saa, sab, sbb, c }
    }

    /// Estimated variance of `ΣA − κΣB`.
    fn total_var(&self, kappa: f64) -> f64 {
        self.c * (self.saa - 2.0 * kappa * self.sab + kappa * kappa * self.sbb)
    }
}

/// Estimates the exchange constant of `pair` from inter-jump segments.
pub fn estimate_pair_diffusivity(
    ensemble: &[Trajectory],
    pair: (usize, usize),
    p_hat: u32,
    cfg: &QvConfig,
) -> Result<PairDiffusivity> {
    let (i, j) = pair;
    let mut q = Vec::new();
    let mut d = Vec::new();
    // Start of each replica's block in `q`.
    let mut blocks = Vec::new();
    let mut exposure = 0.0;
    for traj in ensemble {
        let n = traj.len();
        if traj.sites() <= i.max(j) {
            return Err(Error::DimensionMismatch { expected: i.max(j) + 1, got: traj.sites() });
        }
        let quiet: Vec<bool> =
            traj.points.iter().map(|x| (0..x.len()).filter(|&s| s != i && s != j).all(|s| x[s] < cfg.quiet)).collect();
        blocks.push(q.len());
        for k in 0..n.saturating_sub(1) {
            let lo = k.saturating_sub(1);
            let hi = (k + 2).min(n - 1);
            if !quiet[lo..=hi].iter().all(|&b| b) {
                continue;
            }
            let (a, b) = (&traj.points[k], &traj.points[k + 1]);
            let (pa, pb) = (a[i] * a[j], b[i] * b[j]);
            if pa <= cfg.cutoff || pb <= cfg.cutoff {
                continue;
            }
            let dt = traj.times[k + 1] - traj.times[k];
            let inc = (b[i] - b[j]) - (a[i] - a[j]);
            q.push(inc * inc);
            d.push(0.5 * (pa + pb) * dt);
            exposure += dt;
        }
    }
    if q.len() < cfg.min_intervals {
        return Err(Error::InsufficientSegments { found: q.len() });
    }
    blocks.push(q.len());
    // Per-cluster totals (A_g, B_g) of Q and 8D; with one replica every
    // interval is its own cluster.
    let mut clusters: Vec<(f64, f64)> = blocks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0]..w[1]).fold((0.0, 0.0), |(a, b), k| (a + q[k], b + 8.0 * d[k])))
        .collect();
    let df = if clusters.len() >= 2 {
        clusters.len() as f64 - 1.0
    } else {
        clusters = q.iter().zip(&d).map(|(qk, dk)| (*qk, 8.0 * dk)).collect();
        f64::INFINITY
    };
    let effective = ratio_interval(&clusters, df);
    let constant = (p_hat > 0).then(|| effective.scaled(1.0 / f64::from(p_hat)));
    Ok(PairDiffusivity { pair, p_hat, constant, effective, intervals: q.len(), exposure, clusters })
}

/// Ratio `ΣA / ΣB` with a clustered standard error and the Fieller 95%
/// interval `{κ : (ΣA − κΣB)² ≤ t² Var(ΣA − κΣB)}`. Unlike the Wald interval
/// its width does not shrink when the estimate happens to be low.
fn ratio_interval(clusters: &[(f64, f64)], df: f64) -> Estimate {
    let m = ClusterMoments::new(clusters);
    let kappa = m.sa / m.sb;
    let se = m.total_var(kappa).sqrt() / m.sb;
    let wald = Estimate::student(kappa, se, df);
    let t = (wald.ci_high - kappa) / se;
    if !t.is_finite() {
        return wald;
    }
    let k = t * t * m.c;
    let qa = m.sb * m.sb - k * m.sbb;
    let qb = m.sa * m.sb - k * m.sab;
    let qc = m.sa * m.sa - k * m.saa;
    let disc = qb * qb - qa * qc;
    if qa <= 0.0 || disc < 0.0 {
        // Unbounded set: the cluster totals of B vary too much to pin κ down.
        return Estimate { value: kappa, std_error: se, ci_low: 0.0, ci_high: f64::INFINITY };
    }
    let root = disc.sqrt();
    Estimate { value: kappa, std_error: se, ci_low: ((qb - root) / qa).max(0.0), ci_high: (qb + root) / qa }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn score_test_agrees_with_interval() {
        let clusters = vec![(1.0, 2.0), (2.2, 4.0), (1.1, 2.5), (1.0, 2.2), (1.9, 3.5)];
        let est = ratio_interval(&clusters, 4.0);
        assert!((est.value - 7.2 / 14.2).abs() < 1e-12);
        assert!(est.ci_low > 0.0 && est.ci_high.is_finite());
        let fit = PairDiffusivity {
            pair: (0, 1),
            p_hat: 1,
            constant: None,
            effective: est,
            intervals: 5,
            exposure: 1.0,
            clusters,
        };
        let t = StudentsT::new(0.0, 1.0, 4.0).unwrap().inverse_cdf(0.975);
        assert!((fit.score_z(est.ci_low) - t).abs() < 1e-9);
        assert!((fit.score_z(est.ci_high) + t).abs() < 1e-9);
        assert!(fit.score_z(est.value).abs() < 1e-12);
    }
}
