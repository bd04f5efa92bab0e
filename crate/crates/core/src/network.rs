//! Time x SoC pricing networks, one per (vehicle type, depot) pair.
//!
//! Nodes are the depot source and sink, trip nodes `(trip, soc)` holding the
//! SoC at the start of the trip, and charge nodes `(station, block, soc)`
//! holding the SoC at the start of the block. Arcs carry their primal cost;
//! duals are applied during pricing. After construction every node that is
//! not on some source-to-sink path is pruned, and nodes are renumbered in
//! topological order (source first, sink last) with arcs grouped by head.

use alloc::vec;
use alloc::vec::Vec;

use crate::discretization::{RoundingMode, SocGrid, TimeBlocks, SOC_FULL};
use crate::duty::{DutyPlan, Stop};
use crate::instance::{Deadhead, Instance, VehicleType};
use crate::{Cents, Minutes, Result};

/// Tolerance when testing a raw SoC against a threshold.
const EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetworkKey {
    pub vehicle_type: usize,
    pub depot: usize,
}

/// All (vehicle type, depot) combinations the instance allows.
pub fn network_keys(inst: &Instance) -> Vec<NetworkKey> {
    let mut keys = Vec::new();
    for (depot, d) in inst.depots.iter().enumerate() {
        for &vehicle_type in &d.vehicle_types {
            keys.push(NetworkKey {
                vehicle_type,
                depot,
            });
        }
    }
    keys.sort();
    keys.dedup();
    keys
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Source,
    Sink,
    Trip { trip: u32, soc: i32 },
    Charge { station: u32, block: u32, soc: i32 },
}

impl Node {
    pub fn soc(&self) -> Option<i32> {
        match *self {
            Node::Trip { soc, .. } | Node::Charge { soc, .. } => Some(soc),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcFamily {
    SourceTrip,
    TripSink,
    TripTrip,
    TripCharge,
    ChargeSink,
    ChargeTrip,
    ChargeCharge,
}

impl ArcFamily {
    pub const ALL: [ArcFamily; 7] = [
        ArcFamily::SourceTrip,
        ArcFamily::TripSink,
        ArcFamily::TripTrip,
        ArcFamily::TripCharge,
        ArcFamily::ChargeSink,
        ArcFamily::ChargeTrip,
        ArcFamily::ChargeCharge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArcFamily::SourceTrip => "source-trip",
            ArcFamily::TripSink => "trip-sink",
            ArcFamily::TripTrip => "trip-trip",
            ArcFamily::TripCharge => "trip-charge",
            ArcFamily::ChargeSink => "charge-sink",
            ArcFamily::ChargeTrip => "charge-trip",
            ArcFamily::ChargeCharge => "charge-charge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: u32,
    pub to: u32,
    /// Primal cost in cents.
    pub cost: Cents,
    /// Idle minutes between deadhead end and the head's start. Negative only
    /// on optimistic arcs that leave a charger mid-block.
    pub idle: Minutes,
    pub family: ArcFamily,
}

/// SoC (tenths of a percent) needed to deadhead `km` and then idle
/// `idle_min` minutes.
pub fn tau_soc(vt: &VehicleType, km: f64, idle_min: Minutes) -> f64 {
    vt.soc_tenths(vt.drive_kwh(km) + vt.idle_kwh(idle_min.max(0)))
}

/// Cost of a deadhead followed by idling, for vehicle type `vt`.
fn move_cost(inst: &Instance, vt: &VehicleType, dh: Deadhead, idle: Minutes) -> Cents {
    vt.op_cost_per_km * dh.km + inst.costs.crew_cost_per_min * (dh.minutes + idle.max(0)) as f64
}

#[derive(Debug, Clone)]
pub struct Network {
    pub key: NetworkKey,
    pub mode: RoundingMode,
    pub grid: SocGrid,
    pub blocks: TimeBlocks,
    trip_begin: Vec<Minutes>,
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    in_start: Vec<u32>,
    /// Arc indices grouped by tail.
    out_arcs: Vec<u32>,
    out_start: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NetworkStats {
    pub trip_nodes: usize,
    pub charge_nodes: usize,
    /// Indexed by `ArcFamily as usize`.
    pub arcs_by_family: [usize; 7],
}

impl NetworkStats {
    pub fn arcs(&self) -> usize {
        self.arcs_by_family.iter().sum()
    }
}

impl Network {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Arcs grouped by head node in topological order.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Arcs entering `node`, in ascending tail order.
    pub fn incoming(&self, node: usize) -> &[Arc] {
        &self.arcs[self.in_start[node] as usize..self.in_start[node + 1] as usize]
    }

    /// Arcs leaving `node`.
    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = &Arc> + '_ {
        self.out_arcs[self.out_start[node] as usize..self.out_start[node + 1] as usize]
            .iter()
            .map(|&k| &self.arcs[k as usize])
    }

    /// True when no source-to-sink path survives.
    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn stats(&self) -> NetworkStats {
        let mut st = NetworkStats::default();
        for n in &self.nodes {
            match n {
                Node::Trip { .. } => st.trip_nodes += 1,
                Node::Charge { .. } => st.charge_nodes += 1,
                _ => {}
            }
        }
        for a in &self.arcs {
            st.arcs_by_family[a.family as usize] += 1;
        }
        st
    }

    /// Drops the trip nodes of every trip flagged in `trips` and the charge
    /// nodes of the `saturated` (station, block) pairs, then prunes again.
    /// The result is a sub-network of `self`.
    pub fn remove_nodes(&self, trips: &[bool], saturated: &[(usize, usize)]) -> Network {
        let keep: Vec<bool> = self
            .nodes
            .iter()
            .map(|n| match *n {
                Node::Trip { trip, .. } => !trips.get(trip as usize).copied().unwrap_or(false),
                Node::Charge { station, block, .. } => {
                    !saturated.contains(&(station as usize, block as usize))
                }
                _ => true,
            })
            .collect();
        let arcs = self
            .arcs
            .iter()
            .filter(|a| keep[a.from as usize] && keep[a.to as usize])
            .copied()
            .collect();
        Network::assemble(
            self.key,
            self.mode,
            self.grid.clone(),
            self.blocks,
            self.trip_begin.clone(),
            self.nodes.clone(),
            arcs,
        )
    }

    /// Stop list of a source-to-sink node sequence. Runs of charge nodes at
    /// one station become a single charge stop.
    pub fn plan_of_path(&self, path: &[usize]) -> DutyPlan {
        let mut stops: Vec<Stop> = Vec::new();
        for &v in path {
            match self.nodes[v] {
                Node::Trip { trip, .. } => stops.push(Stop::trip(trip as usize)),
                Node::Charge { station, block, .. } => match stops.last_mut() {
                    Some(Stop::Charge {
                        station: s,
                        first_block,
                        blocks,
                    }) if *s == station as usize && *first_block + *blocks == block as usize => {
                        *blocks += 1
                    }
                    _ => stops.push(Stop::Charge {
                        station: station as usize,
                        first_block: block as usize,
                        blocks: 1,
                    }),
                },
                _ => {}
            }
        }
        DutyPlan {
            vehicle_type: self.key.vehicle_type,
            depot: self.key.depot,
            stops,
        }
    }

    fn node_time(&self, node: &Node) -> i64 {
        match *node {
            Node::Source => i64::MIN,
            Node::Sink => i64::MAX,
            Node::Trip { trip, .. } => self.trip_begin[trip as usize] as i64,
            Node::Charge { block, .. } => self.blocks.start(block as usize) as i64,
        }
    }

    /// Prunes nodes off every source-to-sink path, renumbers the survivors
    /// topologically and groups arcs by head.
    fn assemble(
        key: NetworkKey,
        mode: RoundingMode,
        grid: SocGrid,
        blocks: TimeBlocks,
        trip_begin: Vec<Minutes>,
        nodes: Vec<Node>,
        arcs: Vec<Arc>,
    ) -> Network {
        let n = nodes.len();
        let source = nodes.iter().position(|x| *x == Node::Source).unwrap();
        let sink = nodes.iter().position(|x| *x == Node::Sink).unwrap();

        let csr = |by_tail: bool| -> (Vec<u32>, Vec<u32>) {
            let mut start = vec![0u32; n + 1];
            for a in &arcs {
                let k = if by_tail { a.from } else { a.to } as usize;
                start[k + 1] += 1;
            }
            for i in 0..n {
                start[i + 1] += start[i];
            }
            let mut fill = start.clone();
            let mut adj = vec![0u32; arcs.len()];
            for a in &arcs {
                let (k, other) = if by_tail {
                    (a.from, a.to)
                } else {
                    (a.to, a.from)
                };
                adj[fill[k as usize] as usize] = other;
                fill[k as usize] += 1;
            }
            (start, adj)
        };
        let reach = |origin: usize, (start, adj): &(Vec<u32>, Vec<u32>)| -> Vec<bool> {
            let mut seen = vec![false; n];
            let mut stack = vec![origin];
            seen[origin] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[start[v] as usize..start[v + 1] as usize] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w as usize);
                    }
                }
            }
            seen
        };
        let fwd = reach(source, &csr(true));
        let bwd = reach(sink, &csr(false));
        let keep: Vec<bool> = (0..n)
            .map(|v| v == source || v == sink || (fwd[v] && bwd[v]))
            .collect();

        let mut net = Network {
            key,
            mode,
            grid,
            blocks,
            trip_begin,
            nodes: Vec::new(),
            arcs: Vec::new(),
            in_start: Vec::new(),
            out_arcs: Vec::new(),
            out_start: Vec::new(),
        };
        let mut order: Vec<usize> = (0..n).filter(|&v| keep[v]).collect();
        order.sort_by_key(|&v| (net.node_time(&nodes[v]), nodes[v]));
        let mut new_id = vec![u32::MAX; n];
        for (k, &v) in order.iter().enumerate() {
            new_id[v] = k as u32;
        }
        let connected = fwd[sink];
        let mut new_arcs: Vec<Arc> = if connected {
            arcs.into_iter()
                .filter(|a| keep[a.from as usize] && keep[a.to as usize])
                .map(|mut a| {
                    a.from = new_id[a.from as usize];
                    a.to = new_id[a.to as usize];
                    a
                })
                .collect()
        } else {
            Vec::new()
        };
        new_arcs.sort_by_key(|a| (a.to, a.from));
        let mut in_start = vec![0u32; order.len() + 1];
        for a in &new_arcs {
            debug_assert!(a.from < a.to, "arc must point forward in topological order");
            in_start[a.to as usize + 1] += 1;
        }
        for i in 0..order.len() {
            in_start[i + 1] += in_start[i];
        }
        net.nodes = order.iter().map(|&v| nodes[v]).collect();
        if !connected {
            net.nodes = vec![Node::Source, Node::Sink];
            in_start = vec![0; 3];
        }
        let mut out_start = vec![0u32; net.nodes.len() + 1];
        for a in &new_arcs {
            out_start[a.from as usize + 1] += 1;
        }
        for i in 0..net.nodes.len() {
            out_start[i + 1] += out_start[i];
        }
        let mut fill = out_start.clone();
        let mut out_arcs = vec![0u32; new_arcs.len()];
        for (k, a) in new_arcs.iter().enumerate() {
            out_arcs[fill[a.from as usize] as usize] = k as u32;
            fill[a.from as usize] += 1;
        }
        net.arcs = new_arcs;
        net.in_start = in_start;
        net.out_arcs = out_arcs;
        net.out_start = out_start;
        net
    }
}

/// Inclusive block index range whose start times fall in `[t_lo, t_hi]`.
fn blocks_in(blocks: &TimeBlocks, t_lo: Minutes, t_hi: Minutes) -> core::ops::Range<usize> {
    if t_hi < t_lo {
        return 0..0;
    }
    let l = blocks.len();
    let base = blocks.start(0);
    let lo = (t_lo - base + l - 1).div_euclid(l).max(0);
    let hi = (t_hi - base).div_euclid(l);
    if hi < 0 {
        return 0..0;
    }
    let hi = (hi as usize + 1).min(blocks.count());
    (lo as usize).min(hi)..hi
}

/// Builds the network of combination `key` under `mode` (conservative =
/// primal network, optimistic = dual network).
pub fn build_network(
    inst: &Instance,
    key: NetworkKey,
    grid: &SocGrid,
    blocks: &TimeBlocks,
    mode: RoundingMode,
) -> Result<Network> {
    let dual = mode == RoundingMode::Optimistic;
    let vt = &inst.vehicle_types[key.vehicle_type];
    let vti = key.vehicle_type;
    let depot_loc = inst.depots[key.depot].location;
    let costs = &inst.costs;
    let ng = grid.len();
    let nt = inst.trips.len();
    let nr = inst.stations.len();
    let nb = blocks.count();
    let l = blocks.len();
    let full = SOC_FULL as f64;
    let s_min = grid.s_min() as f64;
    let gain = vt.soc_tenths(vt.charge_kwh(l));
    let partial_gain = |minutes: Minutes| vt.soc_tenths(vt.charge_kwh(minutes));
    let block_cost = costs.energy_cost_per_kwh * vt.charge_kwh(l);
    let f: Vec<f64> = (0..nt)
        .map(|i| vt.soc_tenths(inst.trip_kwh(vti, i)))
        .collect();
    let round = |raw: f64| grid.round(mode, raw).and_then(|s| grid.index_of(s));

    let trip_id = |i: usize, g: usize| (2 + i * ng + g) as u32;
    let charge_id = |r: usize, b: usize, g: usize| (2 + nt * ng + (r * nb + b) * ng + g) as u32;
    let full_idx = ng - 1;
    let trip_ok = |i: usize, g: usize| grid.values()[g] as f64 >= s_min + f[i] - EPS;
    let charge_ok = |g: usize| dual || g != full_idx;

    let mut nodes = Vec::with_capacity(2 + nt * ng + nr * nb * ng);
    nodes.push(Node::Source);
    nodes.push(Node::Sink);
    for i in 0..nt {
        for &soc in grid.values() {
            nodes.push(Node::Trip {
                trip: i as u32,
                soc,
            });
        }
    }
    for r in 0..nr {
        for b in 0..nb {
            for &soc in grid.values() {
                nodes.push(Node::Charge {
                    station: r as u32,
                    block: b as u32,
                    soc,
                });
            }
        }
    }

    let mut arcs = Vec::new();
    let mut push = |from: u32, to: u32, cost: Cents, idle: Minutes, family: ArcFamily| {
        arcs.push(Arc {
            from,
            to,
            cost,
            idle,
            family,
        })
    };

    // trip -> trip compatibility and trip -> charger options
    let mut trip_next: Vec<Vec<(usize, Deadhead, Minutes)>> = vec![Vec::new(); nt];
    let mut trip_charge: Vec<Vec<(usize, usize, Deadhead, Minutes)>> = vec![Vec::new(); nt];
    for (i, ti) in inst.trips.iter().enumerate() {
        for (j, tj) in inst.trips.iter().enumerate() {
            if i == j || ti.end > tj.begin {
                continue;
            }
            let dh = inst.deadhead(ti.destination, tj.origin)?;
            let idle = tj.begin - ti.end - dh.minutes;
            if dh.minutes <= costs.max_deadhead_min && (0..=costs.max_idle_trip_min).contains(&idle)
            {
                trip_next[i].push((j, dh, idle));
            }
        }
        for (r, st) in inst.stations.iter().enumerate() {
            let dh = inst.deadhead(ti.destination, st.location)?;
            if dh.minutes > costs.max_deadhead_min {
                continue;
            }
            let arrive = ti.end + dh.minutes;
            for b in blocks_in(blocks, arrive, arrive + costs.max_idle_charge_min) {
                trip_charge[i].push((r, b, dh, blocks.start(b) - arrive));
            }
        }
    }
    // charger block -> trip options
    let mut charge_next: Vec<Vec<(usize, Deadhead, Minutes)>> = vec![Vec::new(); nr * nb];
    let min_idle = if dual { 1 - l } else { 0 };
    for (r, st) in inst.stations.iter().enumerate() {
        for (j, tj) in inst.trips.iter().enumerate() {
            let dh = inst.deadhead(st.location, tj.origin)?;
            if dh.minutes > costs.max_deadhead_min {
                continue;
            }
            let latest_end = tj.begin - dh.minutes;
            for b in blocks_in(
                blocks,
                latest_end - l - costs.max_idle_charge_min,
                latest_end - l - min_idle,
            ) {
                charge_next[r * nb + b].push((j, dh, latest_end - blocks.end(b)));
            }
        }
    }

    // source arcs
    for (i, t) in inst.trips.iter().enumerate() {
        let dh = inst.deadhead(depot_loc, t.origin)?;
        if dh.minutes > costs.max_deadhead_min {
            continue;
        }
        if let Some(g) = round(full - tau_soc(vt, dh.km, 0)) {
            if trip_ok(i, g) {
                push(
                    0,
                    trip_id(i, g),
                    vt.invest_cost + move_cost(inst, vt, dh, 0) + inst.trip_cost(vti, i),
                    0,
                    ArcFamily::SourceTrip,
                );
            }
        }
    }

    // trip node arcs
    for (i, t) in inst.trips.iter().enumerate() {
        let back = inst.deadhead(t.destination, depot_loc)?;
        let tau_back = tau_soc(vt, back.km, 0);
        for g in (0..ng).filter(|&g| trip_ok(i, g)) {
            let s = grid.values()[g] as f64;
            let from = trip_id(i, g);
            if back.minutes <= costs.max_deadhead_min && s >= f[i] + tau_back + s_min - EPS {
                push(
                    from,
                    1,
                    move_cost(inst, vt, back, 0),
                    0,
                    ArcFamily::TripSink,
                );
            }
            for &(j, dh, idle) in &trip_next[i] {
                if let Some(h) = round(s - f[i] - tau_soc(vt, dh.km, idle)) {
                    if trip_ok(j, h) {
                        push(
                            from,
                            trip_id(j, h),
                            move_cost(inst, vt, dh, idle) + inst.trip_cost(vti, j),
                            idle,
                            ArcFamily::TripTrip,
                        );
                    }
                }
            }
            for &(r, b, dh, idle) in &trip_charge[i] {
                let mut raw = s - f[i] - tau_soc(vt, dh.km, idle);
                if dual && idle < l {
                    raw = (raw + partial_gain(idle)).min(full);
                }
                if let Some(h) = round(raw) {
                    if charge_ok(h) {
                        push(
                            from,
                            charge_id(r, b, h),
                            move_cost(inst, vt, dh, idle) + costs.charge_start_penalty + block_cost,
                            idle,
                            ArcFamily::TripCharge,
                        );
                    }
                }
            }
        }
    }

    // charge node arcs
    for (r, st) in inst.stations.iter().enumerate() {
        let back = inst.deadhead(st.location, depot_loc)?;
        let tau_back = tau_soc(vt, back.km, 0);
        let need = tau_back + s_min;
        for b in 0..nb {
            for g in (0..ng).filter(|&g| charge_ok(g)) {
                let s = grid.values()[g] as f64;
                let from = charge_id(r, b, g);
                let top = (s + gain).min(full);
                let needed = dual || s + EPS < need;
                if back.minutes <= costs.max_deadhead_min && needed && need <= top + EPS {
                    push(
                        from,
                        1,
                        move_cost(inst, vt, back, 0),
                        0,
                        ArcFamily::ChargeSink,
                    );
                }
                if b + 1 < nb {
                    if let Some(h) = round(top) {
                        let grows = h > g || (dual && g == full_idx);
                        if grows && charge_ok(h) {
                            push(
                                from,
                                charge_id(r, b + 1, h),
                                block_cost,
                                0,
                                ArcFamily::ChargeCharge,
                            );
                        }
                    }
                }
                for &(j, dh, idle) in &charge_next[r * nb + b] {
                    let raw = if idle >= 0 {
                        top - tau_soc(vt, dh.km, idle)
                    } else {
                        (s + partial_gain(l + idle)).min(full) - tau_soc(vt, dh.km, 0)
                    };
                    if let Some(h) = round(raw) {
                        if trip_ok(j, h) {
                            push(
                                from,
                                trip_id(j, h),
                                move_cost(inst, vt, dh, idle) + inst.trip_cost(vti, j),
                                idle,
                                ArcFamily::ChargeTrip,
                            );
                        }
                    }
                }
            }
        }
    }

    let trip_begin = inst.trips.iter().map(|t| t.begin).collect();
    Ok(Network::assemble(
        key,
        mode,
        grid.clone(),
        *blocks,
        trip_begin,
        nodes,
        arcs,
    ))
}

/// Builds one network per allowed (vehicle type, depot) combination. Empty
/// networks are dropped; their keys are returned separately.
pub fn build_networks(
    inst: &Instance,
    grid: &SocGrid,
    blocks: &TimeBlocks,
    mode: RoundingMode,
) -> Result<(Vec<Network>, Vec<NetworkKey>)> {
    let mut nets = Vec::new();
    let mut skipped = Vec::new();
    for key in network_keys(inst) {
        let net = build_network(inst, key, grid, blocks, mode)?;
        if net.is_empty() {
            skipped.push(key);
        } else {
            nets.push(net);
        }
    }
    Ok((nets, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duty::{duty_cost, grid_trace, replay};
    use crate::instance::tests::{two_trip_instance, type1};
    use crate::instance::{ChargingStation, CostParams, DeadheadMatrix, Depot, Horizon, Trip};
    use crate::testkit::random_instance;
    use alloc::collections::BTreeMap;
    use alloc::string::String;

    /// Every source-to-sink path as (node sequence, summed arc cost).
    fn all_paths(net: &Network) -> Vec<(Vec<usize>, f64)> {
        let mut out_arcs: Vec<Vec<Arc>> = vec![Vec::new(); net.nodes().len()];
        for a in net.arcs() {
            out_arcs[a.from as usize].push(*a);
        }
        let mut paths = Vec::new();
        let mut stack = vec![(vec![net.source()], 0.0)];
        while let Some((p, c)) = stack.pop() {
            let v = *p.last().unwrap();
            if v == net.sink() {
                paths.push((p, c));
                continue;
            }
            for a in &out_arcs[v] {
                let mut q = p.clone();
                q.push(a.to as usize);
                stack.push((q, c + a.cost));
            }
            assert!(paths.len() < 200_000, "too many paths for a test");
        }
        paths
    }

    fn build(inst: &Instance, grid: &SocGrid, mode: RoundingMode) -> Vec<Network> {
        let tb = TimeBlocks::new(inst.horizon.start, inst.horizon.end, 5).unwrap();
        network_keys(inst)
            .into_iter()
            .map(|k| build_network(inst, k, grid, &tb, mode).unwrap())
            .collect()
    }

    /// One location hosting depot, station and both trip ends; no deadheads,
    /// no idle consumption, 20% charged per 10-minute block.
    fn charging_bridge_instance() -> Instance {
        let vt = VehicleType {
            id: "V".into(),
            battery_kwh: 100.0,
            consumption_kwh_per_km: 1.0,
            idle_consumption_kwh_per_min: 1e-12,
            charge_kwh_per_min: 2.0,
            invest_cost: 1000.0,
            op_cost_per_km: 1.0,
        };
        let trip = |id: &str, begin, end, km| Trip {
            id: String::from(id),
            origin: 0,
            destination: 0,
            begin,
            end,
            distance_km: km,
        };
        Instance::new(
            vec!["X".into()],
            vec![trip("i", 100, 140, 40.0), trip("j", 160, 240, 80.0)],
            vec![Depot {
                id: "X".into(),
                location: 0,
                vehicle_types: vec![0],
            }],
            vec![ChargingStation {
                id: "R".into(),
                location: 0,
                capacity: 1,
            }],
            vec![vt],
            DeadheadMatrix::new(1),
            CostParams::default(),
            Horizon {
                start: 100,
                end: 250,
            },
        )
        .unwrap()
        .0
    }

    #[test]
    fn charging_bridges_trips_that_cannot_follow_directly() {
        let inst = charging_bridge_instance();
        let grid = SocGrid::new(0, 200).unwrap();
        let tb = TimeBlocks::new(100, 250, 10).unwrap();
        let key = network_keys(&inst)[0];
        let net = build_network(&inst, key, &grid, &tb, RoundingMode::Conservative).unwrap();
        let st = net.stats();
        assert_eq!(st.arcs_by_family[ArcFamily::TripTrip as usize], 0);
        assert!(st.arcs_by_family[ArcFamily::ChargeCharge as usize] > 0);
        let both: Vec<_> = all_paths(&net)
            .into_iter()
            .map(|(p, _)| net.plan_of_path(&p))
            .filter(|p| p.trips().count() == 2)
            .collect();
        assert!(!both.is_empty());
        // every i-then-j duty charges in between; one of them charges two
        // consecutive blocks to reach j with a full battery
        for p in &both {
            assert!(matches!(p.stops[1], Stop::Charge { .. }), "{p:?}");
        }
        assert!(both
            .iter()
            .any(|p| matches!(p.stops[1], Stop::Charge { blocks: 2, .. })));
        // pruning leaves only nodes on source-to-sink paths
        let on_path: Vec<usize> = {
            let mut seen = vec![false; net.nodes().len()];
            for (p, _) in all_paths(&net) {
                for v in p {
                    seen[v] = true;
                }
            }
            seen.iter().filter(|&&b| !b).map(|_| 0).collect()
        };
        assert!(on_path.is_empty());
    }

    #[test]
    fn tau_examples() {
        let vt = type1();
        // 10 km at 1.3 kWh/km of a 155 kWh battery
        assert!((tau_soc(&vt, 10.0, 0) - 83.870_967_7).abs() < 1e-6);
        // idle only: 60 min at 0.1002 kWh/min
        assert!((tau_soc(&vt, 0.0, 60) - 38.787_096_8).abs() < 1e-6);
        // negative idle never adds energy
        assert_eq!(tau_soc(&vt, 0.0, -3), 0.0);
    }

    #[test]
    fn coarse_grid_removes_charging_progress() {
        // per-block gain of type 1 at l = 5 is 12.37%; a 13% step exceeds it
        let (inst, _) = two_trip_instance().unwrap();
        let grid = SocGrid::new(220, 130).unwrap();
        assert_eq!(*grid.values().last().unwrap(), 1000);
        for net in build(&inst, &grid, RoundingMode::Conservative) {
            let st = net.stats();
            assert_eq!(st.arcs_by_family[ArcFamily::ChargeCharge as usize], 0);
            for a in net.arcs() {
                if a.family == ArcFamily::ChargeTrip {
                    let (s, h) = (net.nodes()[a.from as usize], net.nodes()[a.to as usize]);
                    assert!(h.soc() <= s.soc());
                }
            }
        }
    }

    #[test]
    fn networks_are_topologically_ordered() {
        for seed in 0..10 {
            let inst = random_instance(seed, 6);
            for mode in [RoundingMode::Conservative, RoundingMode::Optimistic] {
                for net in build(&inst, &SocGrid::new(220, 30).unwrap(), mode) {
                    assert_eq!(net.nodes()[0], Node::Source);
                    assert_eq!(*net.nodes().last().unwrap(), Node::Sink);
                    for (v, _) in net.nodes().iter().enumerate() {
                        for a in net.incoming(v) {
                            assert_eq!(a.to as usize, v);
                            assert!(a.from < a.to);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn path_costs_match_duty_costs_and_replays_are_feasible() {
        let grid = SocGrid::new(220, 30).unwrap();
        for seed in 0..8 {
            let inst = random_instance(seed, 4);
            let tb = TimeBlocks::new(inst.horizon.start, inst.horizon.end, 5).unwrap();
            for net in build(&inst, &grid, RoundingMode::Conservative) {
                for (p, c) in all_paths(&net) {
                    let plan = net.plan_of_path(&p);
                    let dc = duty_cost(&inst, &tb, &plan).unwrap();
                    assert!((dc - c).abs() < 1e-6, "{plan:?}: {dc} vs {c}");
                    let r = replay(&inst, &tb, &plan, grid.s_min() as f64).unwrap();
                    assert!(r.violations.is_empty(), "{plan:?}: {:?}", r.violations);
                    // the network SoC never exceeds what the duty really has
                    let trace = grid_trace(&inst, &tb, &grid, &plan).unwrap().unwrap();
                    for (raw, g) in trace {
                        assert!(raw + 1e-7 >= g as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn optimistic_networks_contain_every_conservative_duty() {
        let grid = SocGrid::new(220, 30).unwrap();
        for seed in 0..8 {
            let inst = random_instance(seed, 3);
            let primal = build(&inst, &grid, RoundingMode::Conservative);
            let dual = build(&inst, &grid, RoundingMode::Optimistic);
            for (p, d) in primal.iter().zip(&dual) {
                let mut best: BTreeMap<DutyPlan, f64> = BTreeMap::new();
                for (path, c) in all_paths(d) {
                    let e = best.entry(d.plan_of_path(&path)).or_insert(f64::INFINITY);
                    *e = e.min(c);
                }
                for (path, c) in all_paths(p) {
                    let plan = p.plan_of_path(&path);
                    let dc = best.get(&plan).copied().unwrap_or(f64::INFINITY);
                    assert!(
                        dc <= c + 1e-6,
                        "seed {seed}: {plan:?} missing from dual network"
                    );
                }
            }
        }
    }

    #[test]
    fn removing_nothing_is_identity_and_removing_all_trips_empties() {
        let inst = random_instance(3, 5);
        let grid = SocGrid::new(220, 30).unwrap();
        for net in build(&inst, &grid, RoundingMode::Conservative) {
            let same = net.remove_nodes(&[], &[]);
            assert_eq!(same.nodes(), net.nodes());
            assert_eq!(same.arcs(), net.arcs());
            let none = net.remove_nodes(&vec![true; inst.trips.len()], &[]);
            assert!(none.is_empty());
            assert_eq!(none.nodes().len(), 2);
        }
    }

    #[test]
    fn removing_a_trip_never_cheapens_the_best_path() {
        let inst = random_instance(5, 5);
        let grid = SocGrid::new(220, 30).unwrap();
        for net in build(&inst, &grid, RoundingMode::Conservative) {
            let best = |n: &Network| {
                all_paths(n)
                    .into_iter()
                    .map(|(_, c)| c)
                    .fold(f64::INFINITY, f64::min)
            };
            let before = best(&net);
            let mut drop = vec![false; inst.trips.len()];
            drop[0] = true;
            let after = net.remove_nodes(&drop, &[]);
            assert!(after
                .nodes()
                .iter()
                .all(|n| !matches!(n, Node::Trip { trip: 0, .. })));
            assert!(best(&after) >= before - 1e-9);
        }
    }
}
