//! Column generation loop with optional early termination.

use alloc::vec::Vec;

use crate::clock::Clock;
use crate::master::{Origin, Rmp};
use crate::network::Network;
use crate::pricing::{Column, PricingBackend, EPS_RC};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnsPerIter {
    /// The best column of every network with negative reduced cost.
    PerNetwork,
    /// Only the overall best column.
    GlobalBest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColgenParams {
    /// Minimum relative improvement over the window, as a fraction
    /// (`1e-4` is 0.01%).
    pub z_min: f64,
    /// Window length in iterations.
    pub window: usize,
    pub truncate: bool,
    pub eps_rc: f64,
    pub columns: ColumnsPerIter,
    /// Wall-clock budget in seconds for this call.
    pub time_limit: f64,
}

impl Default for ColgenParams {
    fn default() -> Self {
        ColgenParams {
            z_min: 1e-4,
            window: 30,
            truncate: false,
            eps_rc: EPS_RC,
            columns: ColumnsPerIter::PerNetwork,
            time_limit: f64::INFINITY,
        }
    }
}

impl ColgenParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_min >= 0.0) {
            return Err(Error::Parameter {
                name: "zmin",
                reason: alloc::format!("must be >= 0, got {}", self.z_min),
            });
        }
        if self.window < 1 {
            return Err(Error::Parameter {
                name: "iters-window",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColgenStatus {
    /// No column prices out: the LP over all network paths is solved.
    Optimal,
    /// Stopped by the improvement window.
    Truncated,
    /// Stopped by the time budget.
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterLog {
    /// Global iteration counter, strictly increasing across calls sharing
    /// one log.
    pub iter: usize,
    /// Colgen phase (diving heuristics restart colgen after each fixing).
    pub phase: usize,
    pub z: f64,
    /// Minimum reduced cost over all networks, if any network is non-empty.
    pub best_rc: Option<f64>,
    /// `z + kappa * min(best_rc, 0)`; absent while a dummy column is active.
    pub lagrangian_lb: Option<f64>,
    pub pricing_secs: f64,
    pub lp_secs: f64,
    pub columns_added: usize,
    pub pool_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColgenLog {
    pub entries: Vec<IterLog>,
}

impl ColgenLog {
    pub fn total_pricing_secs(&self) -> f64 {
        self.entries.iter().map(|e| e.pricing_secs).sum()
    }

    pub fn best_lagrangian_lb(&self) -> Option<f64> {
        self.entries
            .iter()
            .filter_map(|e| e.lagrangian_lb)
            .reduce(f64::max)
    }

    fn next_phase(&self) -> usize {
        self.entries.last().map_or(0, |e| e.phase + 1)
    }
}

/// `z + kappa * c` with `kappa = z / min_invest`. Any optimal master solution
/// uses at most `z / min_invest` vehicles since every duty costs at least
/// the cheapest investment.
pub fn lagrangian_lb(z: f64, best_rc: f64, min_invest: f64) -> f64 {
    let c = best_rc.min(0.0);
    z + z / min_invest * c
}

/// Runs column generation from the current master until no column prices
/// out (or the truncation window / time budget stops it).
pub fn run_colgen(
    rmp: &mut Rmp,
    nets: &[Network],
    params: &ColgenParams,
    min_invest: f64,
    backend: &dyn PricingBackend,
    clock: &dyn Clock,
    log: &mut ColgenLog,
) -> Result<ColgenStatus> {
    params.validate()?;
    let start = clock.now_secs();
    let phase = log.next_phase();
    let mut history: Vec<f64> = Vec::new();
    loop {
        let t0 = clock.now_secs();
        let z = rmp.solve_lp()?;
        let t1 = clock.now_secs();
        let best: Vec<Column> = backend
            .best_paths(nets, &rmp.duals)
            .into_iter()
            .flatten()
            .collect();
        let t2 = clock.now_secs();
        let best_rc = best.iter().map(|c| c.reduced_cost).reduce(f64::min);
        let lagr =
            (!rmp.dummy_active()).then(|| lagrangian_lb(z, best_rc.unwrap_or(0.0), min_invest));
        let mut improving: Vec<Column> = best
            .into_iter()
            .filter(|c| c.reduced_cost < -params.eps_rc)
            .collect();
        if params.columns == ColumnsPerIter::GlobalBest {
            // first minimum in network order
            if let Some(k) = (0..improving.len()).min_by(|&a, &b| {
                improving[a]
                    .reduced_cost
                    .total_cmp(&improving[b].reduced_cost)
                    .then(a.cmp(&b))
            }) {
                improving = alloc::vec![improving.swap_remove(k)];
            }
        }
        let mut added = 0;
        let t = history.len();
        history.push(z);
        let truncated = params.truncate
            && t >= params.window
            && history[t - params.window] > 0.0
            && (history[t - params.window] - z) / history[t - params.window] < params.z_min;
        let none_improving = improving.is_empty();
        if !none_improving && !truncated {
            for c in improving {
                if rmp.add_column(c, Origin::Priced).is_some() {
                    added += 1;
                }
            }
        }
        log.entries.push(IterLog {
            iter: log.entries.last().map_or(1, |e| e.iter + 1),
            phase,
            z,
            best_rc,
            lagrangian_lb: lagr,
            pricing_secs: t2 - t1,
            lp_secs: t1 - t0,
            columns_added: added,
            pool_size: rmp.pool.len(),
        });
        // when every improving column is pooled already the LP cannot move
        if none_improving || (!truncated && added == 0) {
            return Ok(ColgenStatus::Optimal);
        }
        if truncated {
            return Ok(ColgenStatus::Truncated);
        }
        if clock.now_secs() - start >= params.time_limit {
            return Ok(ColgenStatus::TimeLimit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::NullClock;
    use crate::discretization::{RoundingMode, SocGrid, TimeBlocks};
    use crate::master::init_rmp;
    use crate::network::build_networks;
    use crate::pricing::Sequential;
    use crate::testkit::random_instance;

    #[test]
    fn lagrangian_arithmetic() {
        assert_eq!(lagrangian_lb(100.0, 0.0, 25.0), 100.0);
        assert_eq!(lagrangian_lb(100.0, -5.0, 25.0), 80.0);
        assert_eq!(lagrangian_lb(100.0, 3.0, 25.0), 100.0);
    }

    fn setup(seed: u64, n: usize) -> (crate::instance::Instance, Vec<Network>, Rmp) {
        let inst = random_instance(seed, n);
        let tb = TimeBlocks::new(inst.horizon.start, inst.horizon.end, 5).unwrap();
        let grid = SocGrid::new(220, 30).unwrap();
        let (nets, _) = build_networks(&inst, &grid, &tb, RoundingMode::Conservative).unwrap();
        let rmp = init_rmp(&inst, &nets, tb.count()).unwrap();
        (inst, nets, rmp)
    }

    #[test]
    fn single_trip_is_optimal_at_its_singleton() {
        let (inst, nets, mut rmp) = setup(4, 1);
        let z0 = rmp.z;
        let mut log = ColgenLog::default();
        let st = run_colgen(
            &mut rmp,
            &nets,
            &ColgenParams::default(),
            inst.min_invest_cost().unwrap(),
            &Sequential,
            &NullClock,
            &mut log,
        )
        .unwrap();
        assert_eq!(st, ColgenStatus::Optimal);
        assert!(log.entries.len() <= 2);
        assert!((rmp.z - z0).abs() < 1e-6);
    }

    #[test]
    fn full_window_truncates_at_first_chance() {
        let (inst, nets, mut rmp) = setup(6, 6);
        let mut log = ColgenLog::default();
        let params = ColgenParams {
            z_min: 1.0,
            window: 1,
            truncate: true,
            ..ColgenParams::default()
        };
        let st = run_colgen(
            &mut rmp,
            &nets,
            &params,
            inst.min_invest_cost().unwrap(),
            &Sequential,
            &NullClock,
            &mut log,
        )
        .unwrap();
        if log.entries.len() > 1 {
            assert_eq!(st, ColgenStatus::Truncated);
            assert_eq!(log.entries.len(), 2);
        }
    }

    #[test]
    fn objective_never_rises_and_bounds_stay_below() {
        for seed in 0..6 {
            let (inst, nets, mut rmp) = setup(seed, 7);
            let mut log = ColgenLog::default();
            let st = run_colgen(
                &mut rmp,
                &nets,
                &ColgenParams::default(),
                inst.min_invest_cost().unwrap(),
                &Sequential,
                &NullClock,
                &mut log,
            )
            .unwrap();
            assert_eq!(st, ColgenStatus::Optimal);
            let zs: Vec<f64> = log.entries.iter().map(|e| e.z).collect();
            for w in zs.windows(2) {
                assert!(w[1] <= w[0] + 1e-6 * w[0]);
            }
            let last = *zs.last().unwrap();
            for e in &log.entries {
                if let Some(lb) = e.lagrangian_lb {
                    assert!(lb <= last * (1.0 + 1e-6));
                }
            }
            // dual feasibility at the end
            for pc in &rmp.pool {
                assert!(pc.column.reduced_cost_under(&rmp.duals) >= -1e-6 * last.max(1.0));
            }
        }
    }
}
