//! Integer heuristics on top of column generation: price-and-branch (full
//! or truncated colgen followed by branch and bound over the pool) and
//! truncated column generation with column fixing (diving).

use alloc::vec::Vec;

use crate::clock::Clock;
use crate::colgen::{run_colgen, ColgenLog, ColgenParams, ColgenStatus};
use crate::master::{init_rmp, BipOutcome, Rmp};
use crate::network::Network;
use crate::pricing::PricingBackend;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    /// Column generation to optimality, then branch and bound on the pool.
    PriceAndBranch,
    /// Truncated column generation, then branch and bound on the pool.
    TruncatedPriceAndBranch,
    /// Alternating truncated column generation and column fixing.
    TruncatedCg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicConfig {
    pub kind: HeuristicKind,
    /// Fixing threshold of the diving heuristic.
    pub theta: f64,
    /// Prune fixed trips and saturated charger blocks from the networks
    /// between diving phases.
    pub node_removal: bool,
    /// Colgen parameters; `truncate` is set per heuristic.
    pub colgen: ColgenParams,
    /// Branch-and-bound time limit in seconds.
    pub bip_time_limit: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            kind: HeuristicKind::TruncatedCg,
            theta: 0.7,
            node_removal: false,
            colgen: ColgenParams::default(),
            bip_time_limit: 3600.0,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        // below one half two fixed columns could share a full charger
        if !(0.5..1.0).contains(&self.theta) {
            return Err(Error::Parameter {
                name: "theta",
                reason: alloc::format!("must lie in [0.5, 1), got {}", self.theta),
            });
        }
        if !(self.bip_time_limit >= 0.0) {
            return Err(Error::Parameter {
                name: "bip-time-limit",
                reason: "must be >= 0".into(),
            });
        }
        self.colgen.validate()
    }
}

#[derive(Debug, Clone)]
pub struct HeuristicOutcome {
    pub rmp: Rmp,
    pub log: ColgenLog,
    /// Objective of the integral master solution (before duplicate repair).
    pub objective: f64,
    /// Pool indices of the selected columns.
    pub selected: Vec<usize>,
    /// Status of the last colgen call.
    pub colgen_status: ColgenStatus,
    /// Number of diving fixing steps.
    pub fixing_steps: usize,
    /// Diving stalled and branch and bound finished the job.
    pub fell_back_to_bip: bool,
    pub bip: Option<BipOutcome>,
    /// LP value after the first colgen phase.
    pub root_lp: f64,
}

/// Runs the configured heuristic. `nets` are the primal networks and
/// `blocks` the number of time blocks.
pub fn solve(
    nets: &[Network],
    inst: &crate::instance::Instance,
    blocks: usize,
    cfg: &HeuristicConfig,
    backend: &dyn PricingBackend,
    clock: &dyn Clock,
) -> Result<HeuristicOutcome> {
    cfg.validate()?;
    match cfg.kind {
        HeuristicKind::PriceAndBranch | HeuristicKind::TruncatedPriceAndBranch => {
            price_and_branch(nets, inst, blocks, cfg, backend, clock)
        }
        HeuristicKind::TruncatedCg => truncated_cg(nets, inst, blocks, cfg, backend, clock),
    }
}

fn min_invest(inst: &crate::instance::Instance) -> Result<f64> {
    inst.min_invest_cost().ok_or(Error::Parameter {
        name: "vehicle_types",
        reason: "no vehicle type".into(),
    })
}

pub fn price_and_branch(
    nets: &[Network],
    inst: &crate::instance::Instance,
    blocks: usize,
    cfg: &HeuristicConfig,
    backend: &dyn PricingBackend,
    clock: &dyn Clock,
) -> Result<HeuristicOutcome> {
    let mut rmp = init_rmp(inst, nets, blocks)?;
    let mut log = ColgenLog::default();
    let params = ColgenParams {
        truncate: cfg.kind == HeuristicKind::TruncatedPriceAndBranch,
        ..cfg.colgen
    };
    let status = run_colgen(
        &mut rmp,
        nets,
        &params,
        min_invest(inst)?,
        backend,
        clock,
        &mut log,
    )?;
    let root_lp = rmp.z;
    let bip = rmp.solve_bip(cfg.bip_time_limit, clock)?;
    Ok(HeuristicOutcome {
        objective: bip.objective,
        selected: rmp.selected(),
        rmp,
        log,
        colgen_status: status,
        fixing_steps: 0,
        fell_back_to_bip: false,
        bip: Some(bip),
        root_lp,
    })
}

pub fn truncated_cg(
    nets: &[Network],
    inst: &crate::instance::Instance,
    blocks: usize,
    cfg: &HeuristicConfig,
    backend: &dyn PricingBackend,
    clock: &dyn Clock,
) -> Result<HeuristicOutcome> {
    let mut rmp = init_rmp(inst, nets, blocks)?;
    let mut log = ColgenLog::default();
    let params = ColgenParams {
        truncate: true,
        ..cfg.colgen
    };
    let kappa_base = min_invest(inst)?;
    let mut reduced: Option<Vec<Network>> = None;
    let mut fixing_steps = 0;
    let mut root_lp = None;
    let mut bip = None;
    let mut fell_back = false;
    let status = loop {
        let current = reduced.as_deref().unwrap_or(nets);
        let status = run_colgen(
            &mut rmp, current, &params, kappa_base, backend, clock, &mut log,
        )?;
        root_lp.get_or_insert(rmp.z);
        if rmp.is_integral() {
            break status;
        }
        match rmp.fix_columns(cfg.theta) {
            Ok(_) => fixing_steps += 1,
            Err(Error::NoFixableColumn) => {
                fell_back = true;
                bip = Some(rmp.solve_bip(cfg.bip_time_limit, clock)?);
                break status;
            }
            Err(e) => return Err(e),
        }
        if cfg.node_removal {
            let trips = rmp.fixed_trips();
            let saturated = rmp.saturated();
            reduced = Some(
                nets.iter()
                    .map(|n| n.remove_nodes(&trips, &saturated))
                    .collect(),
            );
        }
    };
    Ok(HeuristicOutcome {
        objective: rmp.z,
        selected: rmp.selected(),
        rmp,
        log,
        colgen_status: status,
        fixing_steps,
        fell_back_to_bip: fell_back,
        bip,
        root_lp: root_lp.unwrap_or(f64::INFINITY),
    })
}
