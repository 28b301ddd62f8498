//! Estimators, oracles and the acceptance battery.

pub mod acceptance;
pub mod adjudicate;
pub mod duality;
pub mod invariants;
pub mod qv;
pub mod rates;
pub mod stats;
pub mod sweep;

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::simplex::{SimplexPoint, Trajectory};
use crate::verify::stats::mean_se;

/// Hex SHA-256 of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("config types serialize"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableStats {
    pub name: String,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

/// Per-time ensemble means of a set of observables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub replica_count: usize,
    pub times: Vec<f64>,
    pub observables: Vec<ObservableStats>,
    pub metadata: BTreeMap<String, String>,
    pub config_hash: String,
}

pub type Observable<'a> = (&'a str, &'a dyn Fn(&SimplexPoint) -> f64);

impl EnsembleStats {
    /// All trajectories must share the same sample times.
    pub fn from_ensemble(
        ensemble: &[Trajectory],
        observables: &[Observable<'_>],
        metadata: BTreeMap<String, String>,
        config_hash: String,
    ) -> Result<EnsembleStats> {
        let first = ensemble.first().ok_or(Error::InsufficientReplicas { needed: 1, got: 0 })?;
        if let Some(bad) = ensemble.iter().find(|t| t.times != first.times) {
            return Err(Error::DimensionMismatch { expected: first.len(), got: bad.len() });
        }
        let observables = observables
            .iter()
            .map(|(name, f)| {
                let (mean, std_error) = (0..first.len())
                    .map(|k| mean_se(&ensemble.iter().map(|t| f(&t.points[k])).collect::<Vec<_>>()))
                    .unzip();
                ObservableStats { name: (*name).to_string(), mean, std_error }
            })
            .collect();
        Ok(EnsembleStats {
            replica_count: ensemble.len(),
            times: first.times.clone(),
            observables,
            metadata,
            config_hash,
        })
    }

    /// Means of every coordinate, named `x1..xS`.
    pub fn coordinates(
        ensemble: &[Trajectory],
        metadata: BTreeMap<String, String>,
        config_hash: String,
    ) -> Result<EnsembleStats> {
        let sites = ensemble.first().map_or(0, Trajectory::sites);
        let names: Vec<String> = (1..=sites).map(|i| format!("x{i}")).collect();
        let fns: Vec<_> = (0..sites).map(|i| move |x: &SimplexPoint| x[i]).collect();
        let obs: Vec<Observable<'_>> =
            names.iter().zip(&fns).map(|(n, f)| (n.as_str(), f as &dyn Fn(&SimplexPoint) -> f64)).collect();
        Self::from_ensemble(ensemble, &obs, metadata, config_hash)
    }

    pub fn observable(&self, name: &str) -> Option<&ObservableStats> {
        self.observables.iter().find(|o| o.name == name)
    }
}

/// `E[x_1 x_2]` over time for a two-site ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductMomentCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl ProductMomentCurve {
    /// Largest `mean + 4 SE` over samples at or after `t0`, with its time.
    pub fn sup_after(&self, t0: f64) -> Option<(f64, f64)> {
        self.times
            .iter()
            .zip(self.mean.iter().zip(&self.std_error))
            .filter(|(t, _)| **t >= t0)
            .map(|(t, (m, se))| (*t, m + 4.0 * se))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub fn product_moment_curve(ensemble: &[Trajectory]) -> Result<ProductMomentCurve> {
    if let Some(t) = ensemble.iter().find(|t| t.sites() != 2) {
        return Err(Error::DimensionMismatch { expected: 2, got: t.sites() });
    }
    let f = |x: &SimplexPoint| x[0] * x[1];
    let stats = EnsembleStats::from_ensemble(ensemble, &[("x1x2", &f)], BTreeMap::new(), String::new())?;
    let obs = stats.observables.into_iter().next().expect("one observable");
    Ok(ProductMomentCurve { times: stats.times, mean: obs.mean, std_error: obs.std_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(points: &[[f64; 2]]) -> Trajectory {
        let mut t = Trajectory::new(0, 0);
        for (k, p) in points.iter().enumerate() {
            t.push(k as f64, SimplexPoint::new(p.to_vec()).unwrap());
        }
        t
    }

    #[test]
    fn coordinate_means() {
        let ens = vec![traj(&[[0.5, 0.5], [1.0, 0.0]]), traj(&[[0.5, 0.5], [0.0, 1.0]])];
        let s = EnsembleStats::coordinates(&ens, BTreeMap::new(), config_hash(&1u8)).unwrap();
        assert_eq!(s.replica_count, 2);
        assert_eq!(s.observable("x1").unwrap().mean, vec![0.5, 0.5]);
        assert_eq!(s.observable("x2").unwrap().std_error[0], 0.0);
        assert_eq!(s.config_hash.len(), 64);
    }

    #[test]
    fn product_curve_and_sup() {
        let ens = vec![traj(&[[0.5, 0.5], [0.9, 0.1], [1.0, 0.0]]); 3];
        let c = product_moment_curve(&ens).unwrap();
        assert!((c.mean[1] - 0.09).abs() < 1e-12);
        assert_eq!(c.sup_after(1.0).unwrap().0, 1.0);
    }

    #[test]
    fn mismatched_times_rejected() {
        let mut b = traj(&[[0.5, 0.5]]);
        b.times[0] = 3.0;
        assert!(product_moment_curve(&[traj(&[[0.5, 0.5]]), b]).is_err());
    }
}
