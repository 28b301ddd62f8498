//! Parallel replica fan-out with per-replica seeds.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_replica_seed, rng_from_seed, SimRng};

/// Runs `f(replica, seed, rng)` for `replica in 0..replicas` and returns the
/// results in replica order. `workers = None` uses the global rayon pool.
///
/// Results depend only on `(master_seed, replica)`, never on scheduling.
pub fn run_replicas<T, F>(master_seed: u64, replicas: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64, &mut SimRng) -> Result<T> + Sync,
{
    let job = || {
        (0..replicas as u64)
            .into_par_iter()
            .map(|r| {
                let seed = derive_replica_seed(master_seed, r);
                f(r, seed, &mut rng_from_seed(seed))
            })
            .collect::<Result<Vec<T>>>()
    };
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Config(format!("workers: {e}")))?;
            pool.install(job)
        }
        None => job(),
    }
}
