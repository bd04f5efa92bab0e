//! End-to-end workflows shared by the CLI and the tests.

use evsp_core::bounds::{gap, true_lower_bound, LowerBound};
use evsp_core::clock::Clock;
use evsp_core::colgen::{ColgenLog, ColgenParams};
use evsp_core::discretization::{RoundingMode, SocGrid, TimeBlocks};
use evsp_core::heuristics::{solve as run_heuristic, HeuristicConfig, HeuristicOutcome};
use evsp_core::instance::Instance;
use evsp_core::master::dummy_trips;
use evsp_core::network::{build_networks, Network, NetworkKey, NetworkStats};
use evsp_core::pricing::PricingBackend;
use evsp_core::schedule::{realize, simulate, summarize, DutyTrace, Schedule, Summary, Verdict};
use evsp_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// SoC grid and time blocks in user units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub soc_step_percent: f64,
    pub soc_min_percent: f64,
    pub block_len: i32,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            soc_step_percent: 3.0,
            soc_min_percent: 22.0,
            block_len: 5,
        }
    }
}

impl Discretization {
    pub fn grid(&self) -> Result<SocGrid> {
        SocGrid::from_percent(self.soc_min_percent, self.soc_step_percent)
    }

    pub fn blocks(&self, inst: &Instance) -> Result<TimeBlocks> {
        TimeBlocks::new(inst.horizon.start, inst.horizon.end, self.block_len)
    }

    /// Floor in tenths of a percent.
    pub fn s_min(&self) -> f64 {
        self.grid()
            .map_or(self.soc_min_percent * 10.0, |g| g.s_min() as f64)
    }
}

pub struct Networks {
    pub nets: Vec<Network>,
    pub skipped: Vec<NetworkKey>,
    pub grid: SocGrid,
    pub blocks: TimeBlocks,
}

pub fn networks(inst: &Instance, disc: &Discretization, mode: RoundingMode) -> Result<Networks> {
    let grid = disc.grid()?;
    let blocks = disc.blocks(inst)?;
    let (nets, skipped) = build_networks(inst, &grid, &blocks, mode)?;
    Ok(Networks {
        nets,
        skipped,
        grid,
        blocks,
    })
}

pub fn network_stats(nets: &Networks) -> Vec<(NetworkKey, NetworkStats)> {
    nets.nets.iter().map(|n| (n.key, n.stats())).collect()
}

/// Outcome of a heuristic run turned into a validated schedule.
pub struct Solved {
    pub outcome: HeuristicOutcome,
    pub schedule: Schedule,
    pub traces: Vec<DutyTrace>,
    pub verdict: Verdict,
    pub summary: Summary,
    pub grid: SocGrid,
    pub blocks: TimeBlocks,
    pub seconds: f64,
}

impl Solved {
    /// Cost of the realized schedule.
    pub fn sol(&self) -> f64 {
        self.schedule.total_cost()
    }

    pub fn vehicles(&self) -> usize {
        self.schedule.vehicles()
    }
}

/// Builds the primal networks, runs the heuristic, realizes and simulates
/// the schedule. Trips only dummy columns can cover are an error.
pub fn solve(
    inst: &Instance,
    disc: &Discretization,
    cfg: &HeuristicConfig,
    backend: &dyn PricingBackend,
    clock: &dyn Clock,
) -> Result<Solved> {
    let t0 = clock.now_secs();
    let n = networks(inst, disc, RoundingMode::Conservative)?;
    let outcome = run_heuristic(&n.nets, inst, n.blocks.count(), cfg, backend, clock)?;
    let dummies = dummy_trips(&outcome.rmp);
    if !dummies.is_empty() {
        return Err(Error::Uncoverable {
            trips: dummies.iter().map(|&i| inst.trips[i].id.clone()).collect(),
        });
    }
    let s_min = n.grid.s_min() as f64;
    let schedule = realize(inst, &n.blocks, s_min, outcome.rmp.selected_plans())?;
    let (traces, verdict) = simulate(inst, &n.blocks, s_min, Some(&n.grid), &schedule)?;
    let summary = summarize(&schedule, &traces);
    Ok(Solved {
        outcome,
        schedule,
        traces,
        verdict,
        summary,
        grid: n.grid,
        blocks: n.blocks,
        seconds: clock.now_secs() - t0,
    })
}

pub fn lower_bound(
    inst: &Instance,
    disc: &Discretization,
    params: &ColgenParams,
    backend: &dyn PricingBackend,
    clock: &dyn Clock,
) -> Result<LowerBound> {
    true_lower_bound(
        inst,
        &disc.grid()?,
        &disc.blocks(inst)?,
        params,
        backend,
        clock,
    )
}

/// Lower bound file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub value: f64,
    pub exact: bool,
    pub z: f64,
    pub dummy_active: bool,
    pub iterations: usize,
    pub soc_step_percent: f64,
    pub soc_min_percent: f64,
    pub block_len: i32,
}

impl BoundRecord {
    pub fn new(lb: &LowerBound, disc: &Discretization) -> Self {
        BoundRecord {
            value: lb.value,
            exact: lb.exact,
            z: lb.z,
            dummy_active: lb.dummy_active,
            iterations: lb.log.entries.len(),
            soc_step_percent: disc.soc_step_percent,
            soc_min_percent: disc.soc_min_percent,
            block_len: disc.block_len,
        }
    }
}

/// Per-run statistics in the usual table layout: iterations, mean pricing
/// and master seconds per iteration, solution value, lower bound, gap and
/// fleet size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub time: f64,
    pub it: usize,
    pub pp: f64,
    pub rmp: f64,
    pub sol: f64,
    pub lb: Option<f64>,
    pub g: Option<f64>,
    pub b: usize,
}

impl RunRow {
    pub fn new(solved: &Solved, lb: Option<f64>) -> Self {
        let log: &ColgenLog = &solved.outcome.log;
        let it = log.entries.len();
        let per = |x: f64| if it == 0 { 0.0 } else { x / it as f64 };
        let sol = solved.sol();
        RunRow {
            time: solved.seconds,
            it,
            pp: per(log.total_pricing_secs()),
            rmp: per(log.entries.iter().map(|e| e.lp_secs).sum()),
            sol,
            lb,
            g: lb.and_then(|lb| gap(sol, lb).ok()),
            b: solved.vehicles(),
        }
    }
}
