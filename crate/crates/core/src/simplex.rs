//! Points of the probability simplex and sampled paths on it.

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` for a point to count as on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Normalised mass vector: non-negative fractions summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// Validates `coords` against the simplex invariants.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(coords, SIMPLEX_TOL)
    }

    pub fn with_tolerance(coords: Vec<f64>, tol: f64) -> Result<Self> {
        let sum: f64 = coords.iter().sum();
        let min = coords.iter().copied().fold(f64::INFINITY, f64::min);
        if coords.is_empty() || !(min >= 0.0) || !((sum - 1.0).abs() <= tol) {
            return Err(Error::NotOnSimplex { sum, min });
        }
        Ok(SimplexPoint(coords))
    }

    /// Clamps negatives to zero and rescales to unit mass.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        for c in coords.iter_mut() {
            if !c.is_finite() {
                return Err(Error::NotOnSimplex { sum: f64::NAN, min: f64::NAN });
            }
            *c = c.max(0.0);
        }
        let sum: f64 = coords.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::NotOnSimplex { sum, min: 0.0 });
        }
        coords.iter_mut().for_each(|c| *c /= sum);
        Ok(SimplexPoint(coords))
    }

    /// Unit vector `e_site`.
    pub fn corner(sites: usize, site: usize) -> Self {
        let mut v = vec![0.0; sites];
        v[site] = 1.0;
        SimplexPoint(v)
    }

    pub fn uniform(sites: usize) -> Self {
        SimplexPoint(vec![1.0 / sites as f64; sites])
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        SimplexPoint(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest coordinate (lowest index on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.0.iter().enumerate() {
            if c > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Number of coordinates strictly above `tol`.
    pub fn occupied(&self, tol: f64) -> usize {
        self.0.iter().filter(|&&c| c > tol).count()
    }

    /// The corner index if exactly one coordinate exceeds `tol`.
    pub fn as_corner(&self, tol: f64) -> Option<usize> {
        let mut it = self.0.iter().enumerate().filter(|(_, &c)| c > tol);
        match (it.next(), it.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }
}

impl std::ops::Index<usize> for SimplexPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A time-sampled path on the simplex, in rescaled time units.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<SimplexPoint>,
    pub replica_id: u64,
    pub seed: u64,
}

impl Trajectory {
    pub fn new(replica_id: u64, seed: u64) -> Self {
        Trajectory { times: Vec::new(), points: Vec::new(), replica_id, seed }
    }

    pub fn push(&mut self, t: f64, x: SimplexPoint) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.points.push(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.points.first().map_or(0, SimplexPoint::len)
    }

    pub fn last(&self) -> Option<&SimplexPoint> {
        self.points.last()
    }
}

/// Strictly increasing, non-negative, finite sample grid.
pub fn validate_sample_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::param("sample_times", "must not be empty"));
    }
    if !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("sample_times", "must be finite and non-negative"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("sample_times", "must be strictly increasing"));
    }
    Ok(())
}

/// Uniform grid `0, dt, 2 dt, ..., horizon` (horizon included up to rounding).
pub fn sample_grid(horizon: f64, interval: f64) -> Vec<f64> {
    let n = (horizon / interval + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * interval).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_off_simplex() {
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexPoint::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn corner_detection() {
        let x = SimplexPoint::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(x.as_corner(1e-9), Some(1));
        let y = SimplexPoint::new(vec![0.4, 0.0, 0.6]).unwrap();
        assert_eq!(y.as_corner(1e-9), None);
        assert_eq!(y.occupied(1e-9), 2);
        assert_eq!(y.argmax(), 2);
    }

    #[test]
    fn grid_includes_horizon() {
        let g = sample_grid(1.0, 0.1);
        assert_eq!(g.len(), 11);
        assert!((g[10] - 1.0).abs() < 1e-12);
        assert!(validate_sample_times(&g).is_ok());
        assert!(validate_sample_times(&[0.0, 0.0]).is_err());
    }
}
