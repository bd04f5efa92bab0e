//! Discretization-independent lower bounds, optimality gaps, and an
//! exhaustive oracle for small instances.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::clock::Clock;
use crate::colgen::{run_colgen, ColgenLog, ColgenParams, ColgenStatus};
use crate::discretization::{RoundingMode, SocGrid, TimeBlocks, SOC_FULL};
use crate::duty::{duty_cost, DutyPlan, Stop};
use crate::instance::Instance;
use crate::lp::{Lp, RowSense};
use crate::master::init_rmp;
use crate::network::{build_networks, network_keys, tau_soc, Network};
use crate::pricing::PricingBackend;
use crate::{Cents, Error, Minutes, Result};

#[derive(Debug, Clone)]
pub struct LowerBound {
    /// The bound: the optimal master LP value on the optimistic networks,
    /// or the best Lagrangian bound when the run was cut short.
    pub value: f64,
    /// True when column generation reached optimality.
    pub exact: bool,
    /// Last master LP value.
    pub z: f64,
    /// A dummy column is in the final LP solution: some trip cannot be
    /// served even under optimistic rounding.
    pub dummy_active: bool,
    pub log: ColgenLog,
}

/// Lower bound valid for every discretization: column generation to
/// optimality over the optimistic (rounding-up) networks. With a finite
/// `params.time_limit` the best Lagrangian bound so far is returned instead
/// when time runs out.
pub fn true_lower_bound(
    inst: &Instance,
    grid: &SocGrid,
    blocks: &TimeBlocks,
    params: &ColgenParams,
    backend: &dyn PricingBackend,
    clock: &dyn Clock,
) -> Result<LowerBound> {
    let (nets, _) = build_networks(inst, grid, blocks, RoundingMode::Optimistic)?;
    let mut rmp = init_rmp(inst, &nets, blocks.count())?;
    let mut log = ColgenLog::default();
    let params = ColgenParams {
        truncate: false,
        ..*params
    };
    let min_invest = inst.min_invest_cost().ok_or(Error::Parameter {
        name: "vehicle_types",
        reason: "no vehicle type".into(),
    })?;
    let status = run_colgen(
        &mut rmp, &nets, &params, min_invest, backend, clock, &mut log,
    )?;
    let exact = status == ColgenStatus::Optimal;
    let value = if exact {
        rmp.z
    } else {
        log.best_lagrangian_lb().unwrap_or(0.0)
    };
    Ok(LowerBound {
        value,
        exact,
        z: rmp.z,
        dummy_active: rmp.dummy_active(),
        log,
    })
}

/// Optimality gap in percent, `100 (sol - lb) / lb`.
pub fn gap(sol: f64, lb: f64) -> Result<f64> {
    if !(lb > 0.0) {
        return Err(Error::NonPositiveBound(lb));
    }
    Ok(100.0 * (sol - lb) / lb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Every source-to-sink path of the conservative networks.
    NetworkPaths,
    /// Every duty that is feasible with continuous SoC and block-granular
    /// charging, without any grid.
    ContinuousDuties,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_trips: usize,
    pub max_duties: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_trips: 8,
            max_duties: 300_000,
        }
    }
}

/// One enumerated duty reduced to its master coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleColumn {
    pub cost: Cents,
    pub trips: Vec<usize>,
    pub charges: Vec<(usize, usize)>,
    pub plan: DutyPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Master LP optimum over all enumerated duties.
    pub lp: f64,
    /// Master integer optimum over all enumerated duties.
    pub ip: f64,
    /// Distinct duties after merging equal (trips, charges) signatures.
    pub columns: usize,
}

fn refuse(what: &str) -> Error {
    Error::OracleRefused(what.into())
}

/// Enumerates every source-to-sink path of `net`; `None` past `cap`.
pub fn network_paths(net: &Network, cap: usize) -> Option<Vec<(Vec<usize>, f64)>> {
    let mut out = Vec::new();
    if net.is_empty() {
        return Some(out);
    }
    let mut stack = vec![(vec![net.source()], 0.0)];
    while let Some((p, c)) = stack.pop() {
        let v = *p.last().unwrap();
        if v == net.sink() {
            out.push((p, c));
            if out.len() > cap {
                return None;
            }
            continue;
        }
        for a in net.outgoing(v) {
            let mut q = p.clone();
            q.push(a.to as usize);
            stack.push((q, c + a.cost));
        }
    }
    Some(out)
}

/// Every duty feasible with continuous SoC, for all vehicle type / depot
/// pairs. Charging starts at a block start no earlier than arrival and runs
/// for whole blocks; a duty never charges twice in a row without a trip in
/// between. `None` past `cap`.
pub fn continuous_duties(
    inst: &Instance,
    blocks: &TimeBlocks,
    s_min: f64,
    cap: usize,
) -> Result<Option<Vec<DutyPlan>>> {
    struct Ctx<'a> {
        inst: &'a Instance,
        blocks: &'a TimeBlocks,
        s_min: f64,
        cap: usize,
        vti: usize,
        depot_loc: usize,
        out: Vec<DutyPlan>,
        depot: usize,
    }
    const TOL: f64 = 1e-9;

    // `loc`, `ready`: where and when the vehicle is free; `soc` on arrival
    // there. `after_charge` forbids a second charge stop in a row.
    fn extend(
        ctx: &mut Ctx,
        stops: &mut Vec<Stop>,
        loc: usize,
        ready: Minutes,
        soc: f64,
        after_charge: bool,
    ) -> Result<bool> {
        let inst = ctx.inst;
        let vt = &inst.vehicle_types[ctx.vti];
        let costs = &inst.costs;
        // pull in
        let back = inst.deadhead(loc, ctx.depot_loc)?;
        if back.minutes <= costs.max_deadhead_min
            && soc - tau_soc(vt, back.km, 0) >= ctx.s_min - TOL
        {
            ctx.out.push(DutyPlan {
                vehicle_type: ctx.vti,
                depot: ctx.depot,
                stops: stops.clone(),
            });
            if ctx.out.len() > ctx.cap {
                return Ok(false);
            }
        }
        let idle_cap = if after_charge {
            costs.max_idle_charge_min
        } else {
            costs.max_idle_trip_min
        };
        for (j, t) in inst.trips.iter().enumerate() {
            let dh = inst.deadhead(loc, t.origin)?;
            let idle = t.begin - ready - dh.minutes;
            if dh.minutes > costs.max_deadhead_min || idle < 0 || idle > idle_cap {
                continue;
            }
            let s = soc - tau_soc(vt, dh.km, idle);
            let f = vt.soc_tenths(inst.trip_kwh(ctx.vti, j));
            if s - f < ctx.s_min - TOL {
                continue;
            }
            stops.push(Stop::trip(j));
            let go = extend(ctx, stops, t.destination, t.end, s - f, false)?;
            stops.pop();
            if !go {
                return Ok(false);
            }
        }
        if after_charge {
            return Ok(true);
        }
        let l = ctx.blocks.len();
        let gain = vt.soc_tenths(vt.charge_kwh(l));
        for (r, st) in inst.stations.iter().enumerate() {
            let dh = inst.deadhead(loc, st.location)?;
            if dh.minutes > costs.max_deadhead_min {
                continue;
            }
            let arrive = ready + dh.minutes;
            for b in 0..ctx.blocks.count() {
                let idle = ctx.blocks.start(b) - arrive;
                if idle < 0 || idle > costs.max_idle_charge_min {
                    continue;
                }
                let mut s = soc - tau_soc(vt, dh.km, idle);
                if s < ctx.s_min - TOL {
                    continue;
                }
                for n in 1..=ctx.blocks.count() - b {
                    s = (s + gain).min(SOC_FULL as f64);
                    stops.push(Stop::Charge {
                        station: r,
                        first_block: b,
                        blocks: n,
                    });
                    let go = extend(ctx, stops, st.location, ctx.blocks.end(b + n - 1), s, true)?;
                    stops.pop();
                    if !go {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    let mut all = Vec::new();
    for key in network_keys(inst) {
        let depot_loc = inst.depots[key.depot].location;
        let mut ctx = Ctx {
            inst,
            blocks,
            s_min,
            cap: cap.saturating_sub(all.len()),
            vti: key.vehicle_type,
            depot_loc,
            out: Vec::new(),
            depot: key.depot,
        };
        let vt = &inst.vehicle_types[key.vehicle_type];
        for (i, t) in inst.trips.iter().enumerate() {
            let dh = inst.deadhead(depot_loc, t.origin)?;
            if dh.minutes > inst.costs.max_deadhead_min {
                continue;
            }
            let s = SOC_FULL as f64 - tau_soc(vt, dh.km, 0);
            let f = vt.soc_tenths(inst.trip_kwh(key.vehicle_type, i));
            if s - f < s_min - TOL {
                continue;
            }
            let mut stops = vec![Stop::trip(i)];
            if !extend(&mut ctx, &mut stops, t.destination, t.end, s - f, false)? {
                return Ok(None);
            }
        }
        all.extend(ctx.out);
    }
    Ok(Some(all))
}

/// Cheapest duty per (trips, charges) signature.
fn merge_columns(cols: impl IntoIterator<Item = OracleColumn>) -> Vec<OracleColumn> {
    let mut best: BTreeMap<(Vec<usize>, Vec<(usize, usize)>), OracleColumn> = BTreeMap::new();
    for c in cols {
        let mut key_trips = c.trips.clone();
        key_trips.sort_unstable();
        let mut key_charges = c.charges.clone();
        key_charges.sort_unstable();
        match best.get(&(key_trips.clone(), key_charges.clone())) {
            Some(old) if old.cost <= c.cost => {}
            _ => {
                best.insert((key_trips, key_charges), c);
            }
        }
    }
    best.into_values().collect()
}

/// Enumerates all duties in `mode` and solves the master LP and IP over
/// them exactly. Refuses instances with more than `limits.max_trips` trips
/// or more than `limits.max_duties` duties.
pub fn oracle_solve(
    inst: &Instance,
    grid: &SocGrid,
    blocks: &TimeBlocks,
    mode: OracleMode,
    limits: &OracleLimits,
) -> Result<OracleResult> {
    if inst.trips.len() > limits.max_trips {
        return Err(refuse(&format!(
            "{} trips exceed the limit of {}",
            inst.trips.len(),
            limits.max_trips
        )));
    }
    let cols = oracle_columns(inst, grid, blocks, mode, limits)?;
    let mut covered = vec![false; inst.trips.len()];
    for c in &cols {
        for &i in &c.trips {
            covered[i] = true;
        }
    }
    let missing: Vec<_> = inst
        .trips
        .iter()
        .zip(&covered)
        .filter(|(_, &c)| !c)
        .map(|(t, _)| t.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Uncoverable { trips: missing });
    }
    let lp = oracle_lp(inst, &cols)?;
    let ip = oracle_ip(inst, &cols).ok_or(Error::Uncoverable {
        trips: alloc::vec![format!("no integral cover exists")],
    })?;
    Ok(OracleResult {
        lp,
        ip,
        columns: cols.len(),
    })
}

/// The merged duty set the oracle works on.
pub fn oracle_columns(
    inst: &Instance,
    grid: &SocGrid,
    blocks: &TimeBlocks,
    mode: OracleMode,
    limits: &OracleLimits,
) -> Result<Vec<OracleColumn>> {
    let too_many = || refuse(&format!("more than {} duties", limits.max_duties));
    let mut raw = Vec::new();
    match mode {
        OracleMode::NetworkPaths => {
            let (nets, _) = build_networks(inst, grid, blocks, RoundingMode::Conservative)?;
            for net in &nets {
                let paths = network_paths(net, limits.max_duties.saturating_sub(raw.len()))
                    .ok_or_else(too_many)?;
                for (p, cost) in paths {
                    let plan = net.plan_of_path(&p);
                    raw.push(OracleColumn {
                        cost,
                        trips: plan.trips().collect(),
                        charges: plan.charge_blocks().collect(),
                        plan,
                    });
                }
            }
        }
        OracleMode::ContinuousDuties => {
            let plans = continuous_duties(inst, blocks, grid.s_min() as f64, limits.max_duties)?
                .ok_or_else(too_many)?;
            for plan in plans {
                raw.push(OracleColumn {
                    cost: duty_cost(inst, blocks, &plan)?,
                    trips: plan.trips().collect(),
                    charges: plan.charge_blocks().collect(),
                    plan,
                });
            }
        }
    }
    Ok(merge_columns(raw))
}

/// Master LP over a full column set; every capacity row is included.
pub fn oracle_lp(inst: &Instance, cols: &[OracleColumn]) -> Result<f64> {
    let mut lp = Lp::new();
    let n = inst.trips.len();
    for _ in 0..n {
        lp.add_row(RowSense::Ge, 1.0, &[]);
    }
    let mut rows: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for c in cols {
        for &(r, b) in &c.charges {
            let next = n + rows.len();
            rows.entry((r, b)).or_insert(next);
        }
    }
    for (&(r, _), _) in &rows {
        lp.add_row(RowSense::Le, inst.stations[r].capacity as f64, &[]);
    }
    for c in cols {
        let mut e: Vec<(usize, f64)> = c.trips.iter().map(|&i| (i, 1.0)).collect();
        e.extend(c.charges.iter().map(|rb| (rows[rb], 1.0)));
        lp.add_col(c.cost, 0.0, f64::INFINITY, &e);
    }
    Ok(lp.solve()?)
}

/// Exact master IP by depth-first search: always branch on the lowest
/// uncovered trip, bound with the uncapacitated cover value of the
/// remaining trips, track charger use.
pub fn oracle_ip(inst: &Instance, cols: &[OracleColumn]) -> Option<f64> {
    let n = inst.trips.len();
    assert!(n <= 16);
    let full: u32 = (1 << n) - 1;
    let masks: Vec<u32> = cols
        .iter()
        .map(|c| c.trips.iter().fold(0, |m, &i| m | 1 << i))
        .collect();
    // cheapest uncapacitated cover of every trip subset
    let mut f = vec![f64::INFINITY; 1 << n];
    f[0] = 0.0;
    for m in 1..=full {
        let low = m.trailing_zeros();
        let mut best = f64::INFINITY;
        for (k, c) in cols.iter().enumerate() {
            if masks[k] >> low & 1 == 1 {
                best = best.min(c.cost + f[(m & !masks[k]) as usize]);
            }
        }
        f[m as usize] = best;
    }
    if !f[full as usize].is_finite() {
        return None;
    }
    let mut by_trip: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..cols.len() {
        for i in 0..n {
            if masks[k] >> i & 1 == 1 {
                by_trip[i].push(k);
            }
        }
    }
    for list in &mut by_trip {
        list.sort_by(|&a, &b| cols[a].cost.total_cmp(&cols[b].cost));
    }
    let cap: Vec<u32> = inst.stations.iter().map(|s| s.capacity).collect();

    struct Search<'a> {
        cols: &'a [OracleColumn],
        masks: &'a [u32],
        f: &'a [f64],
        by_trip: &'a [Vec<usize>],
        cap: &'a [u32],
        full: u32,
        usage: BTreeMap<(usize, usize), u32>,
        best: f64,
    }
    fn go(s: &mut Search, covered: u32, cost: f64) {
        if covered == s.full {
            s.best = s.best.min(cost);
            return;
        }
        let rest = s.full & !covered;
        if cost + s.f[rest as usize] >= s.best - 1e-9 {
            return;
        }
        let low = rest.trailing_zeros() as usize;
        for &k in &s.by_trip[low] {
            let c = &s.cols[k];
            if cost + c.cost + s.f[(rest & !s.masks[k]) as usize] >= s.best - 1e-9 {
                continue;
            }
            let fits = c
                .charges
                .iter()
                .all(|rb| s.usage.get(rb).copied().unwrap_or(0) < s.cap[rb.0]);
            if !fits {
                continue;
            }
            for rb in &c.charges {
                *s.usage.entry(*rb).or_insert(0) += 1;
            }
            go(s, covered | s.masks[k], cost + c.cost);
            for rb in &c.charges {
                *s.usage.get_mut(rb).unwrap() -= 1;
            }
        }
    }
    let mut s = Search {
        cols,
        masks: &masks,
        f: &f,
        by_trip: &by_trip,
        cap: &cap,
        full,
        usage: BTreeMap::new(),
        best: f64::INFINITY,
    };
    go(&mut s, 0, 0.0);
    s.best.is_finite().then_some(s.best)
}
