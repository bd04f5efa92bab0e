//! Wall clock and multi-threaded pricing.

use std::time::Instant;

use evsp_core::clock::Clock;
use evsp_core::network::Network;
use evsp_core::pricing::{best_path, Column, DualVector, PricingBackend};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn new() -> Self {
        StdClock(Instant::now())
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Prices networks concurrently on a dedicated pool. Results are collected
/// in network order, so runs do not depend on the thread count.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// `threads == 0` uses one thread per core.
    pub fn new(threads: usize) -> Result<Self, ThreadPoolBuildError> {
        Ok(Parallel {
            pool: ThreadPoolBuilder::new().num_threads(threads).build()?,
        })
    }
}

impl PricingBackend for Parallel {
    fn best_paths(&self, nets: &[Network], duals: &DualVector) -> Vec<Option<Column>> {
        self.pool.install(|| {
            nets.par_iter()
                .enumerate()
                .map(|(k, n)| best_path(n, k, duals))
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, Profile};
    use evsp_core::discretization::{RoundingMode, SocGrid, TimeBlocks};
    use evsp_core::network::build_networks;
    use evsp_core::pricing::Sequential;

    #[test]
    fn parallel_matches_sequential() {
        let inst = generate(5, 12, &Profile::default()).unwrap();
        let tb = TimeBlocks::new(inst.horizon.start, inst.horizon.end, 5).unwrap();
        let grid = SocGrid::new(220, 60).unwrap();
        let (nets, _) = build_networks(&inst, &grid, &tb, RoundingMode::Conservative).unwrap();
        let mut duals = DualVector::zeros(inst.trips.len(), inst.stations.len(), tb.count());
        for (i, s) in duals.sigma.iter_mut().enumerate() {
            *s = 40_000.0 + 1_000.0 * i as f64;
        }
        let a = Parallel::new(3).unwrap().best_paths(&nets, &duals);
        let b = Sequential.best_paths(&nets, &duals);
        assert_eq!(a, b);
    }
}
