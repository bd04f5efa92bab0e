//! Pricing: shortest source-to-sink paths under reduced arc costs.
//!
//! The reduced cost of an arc is its primal cost minus the covering dual of
//! the head trip or the capacity dual of the head charge block. Because the
//! networks are DAGs in topological order, one forward sweep suffices.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::duty::DutyPlan;
use crate::network::{Network, Node};
use crate::Cents;

/// Negative reduced cost threshold: only columns below `-EPS_RC` improve.
pub const EPS_RC: f64 = 1e-6;

/// Master duals. `sigma[i] >= 0` per trip covering row; `gamma[r * blocks
/// + b] <= 0` per charger capacity row (zero where no row exists).
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    pub sigma: Vec<f64>,
    pub gamma: Vec<f64>,
    pub blocks: usize,
}

impl DualVector {
    pub fn zeros(trips: usize, stations: usize, blocks: usize) -> Self {
        DualVector {
            sigma: vec![0.0; trips],
            gamma: vec![0.0; stations * blocks],
            blocks,
        }
    }

    pub fn gamma(&self, station: usize, block: usize) -> f64 {
        self.gamma[station * self.blocks + block]
    }

    fn node_dual(&self, node: &Node) -> f64 {
        match *node {
            Node::Trip { trip, .. } => self.sigma[trip as usize],
            Node::Charge { station, block, .. } => self.gamma(station as usize, block as usize),
            _ => 0.0,
        }
    }
}

/// A duty produced by pricing, with its master coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    /// Index of the network the duty came from.
    pub network: usize,
    pub cost: Cents,
    /// Covered trips in service order (`a_ip = 1`).
    pub trips: Vec<usize>,
    /// Occupied (station, block) pairs (`u_rbp = 1`).
    pub charges: Vec<(usize, usize)>,
    pub plan: DutyPlan,
    /// Grid SoC at each trip and charge node of the path, in order.
    pub socs: Vec<i32>,
    /// Reduced cost under the duals it was priced with.
    pub reduced_cost: f64,
}

impl Column {
    /// `c_p - sum sigma_i a_ip - sum gamma_rb u_rbp`.
    pub fn reduced_cost_under(&self, duals: &DualVector) -> f64 {
        self.cost
            - self.trips.iter().map(|&i| duals.sigma[i]).sum::<f64>()
            - self
                .charges
                .iter()
                .map(|&(r, b)| duals.gamma(r, b))
                .sum::<f64>()
    }

    fn from_path(net: &Network, network: usize, path: &[usize], reduced_cost: f64) -> Column {
        let mut cost = 0.0;
        for w in path.windows(2) {
            let a = net
                .incoming(w[1])
                .iter()
                .find(|a| a.from as usize == w[0])
                .expect("path follows arcs");
            cost += a.cost;
        }
        let mut trips = Vec::new();
        let mut charges = Vec::new();
        let mut socs = Vec::new();
        for &v in path {
            match net.nodes()[v] {
                Node::Trip { trip, soc } => {
                    trips.push(trip as usize);
                    socs.push(soc);
                }
                Node::Charge {
                    station,
                    block,
                    soc,
                } => {
                    charges.push((station as usize, block as usize));
                    socs.push(soc);
                }
                _ => {}
            }
        }
        Column {
            network,
            cost,
            trips,
            charges,
            plan: net.plan_of_path(path),
            socs,
            reduced_cost,
        }
    }
}

/// Minimum reduced cost path of `net`, whatever its sign. `None` only for
/// an empty network.
pub fn best_path(net: &Network, network: usize, duals: &DualVector) -> Option<Column> {
    if net.is_empty() {
        return None;
    }
    let n = net.nodes().len();
    let mut label = vec![f64::INFINITY; n];
    let mut pred = vec![u32::MAX; n];
    label[net.source()] = 0.0;
    for v in 1..n {
        let head_dual = duals.node_dual(&net.nodes()[v]);
        let mut best = f64::INFINITY;
        let mut from = u32::MAX;
        for a in net.incoming(v) {
            let cand = label[a.from as usize] + a.cost - head_dual;
            // arcs are sorted by tail, so strict `<` keeps the smallest tail
            if cand < best {
                best = cand;
                from = a.from;
            }
        }
        label[v] = best;
        pred[v] = from;
    }
    let sink = net.sink();
    let mut path = vec![sink];
    let mut v = sink;
    while v != net.source() {
        v = pred[v] as usize;
        path.push(v);
    }
    path.reverse();
    Some(Column::from_path(net, network, &path, label[sink]))
}

/// The pricing step for one network: the best path if its reduced cost is
/// below `-eps`.
pub fn price(net: &Network, network: usize, duals: &DualVector, eps: f64) -> Option<Column> {
    best_path(net, network, duals).filter(|c| c.reduced_cost < -eps)
}

/// Cheapest duty of `net` that serves `trip` and no other trip, with
/// optional charging afterwards. Searches forward from the trip's nodes so
/// the cost is proportional to the part of the network actually touched.
pub fn cheapest_singleton(net: &Network, network: usize, trip: usize) -> Option<Column> {
    if net.is_empty() {
        return None;
    }
    let allowed = |v: usize| match net.nodes()[v] {
        Node::Trip { trip: t, .. } => t as usize == trip,
        _ => true,
    };
    let mut label: alloc::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    let mut queue = BinaryHeap::new();
    for a in net.outgoing(net.source()) {
        let v = a.to as usize;
        if allowed(v) {
            label.insert(v, (a.cost, net.source()));
            queue.push(Reverse(v));
        }
    }
    let mut done = alloc::collections::BTreeSet::new();
    while let Some(Reverse(v)) = queue.pop() {
        if !done.insert(v) || v == net.sink() {
            continue;
        }
        let base = label[&v].0;
        for a in net.outgoing(v) {
            let w = a.to as usize;
            if !allowed(w) {
                continue;
            }
            let cand = base + a.cost;
            let e = label.entry(w).or_insert((f64::INFINITY, usize::MAX));
            if cand < e.0 {
                *e = (cand, v);
                queue.push(Reverse(w));
            }
        }
    }
    let &(cost, _) = label.get(&net.sink())?;
    let mut path = vec![net.sink()];
    let mut v = net.sink();
    while v != net.source() {
        v = label[&v].1;
        path.push(v);
    }
    path.reverse();
    Some(Column::from_path(net, network, &path, cost))
}

/// Runs pricing over a list of networks. Implementations may work in
/// parallel but must return results in network order.
pub trait PricingBackend {
    /// Best path per network (`None` for empty networks).
    fn best_paths(&self, nets: &[Network], duals: &DualVector) -> Vec<Option<Column>>;
}

/// Prices networks one after another.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sequential;

impl PricingBackend for Sequential {
    fn best_paths(&self, nets: &[Network], duals: &DualVector) -> Vec<Option<Column>> {
        nets.iter()
            .enumerate()
            .map(|(k, n)| best_path(n, k, duals))
            .collect()
    }
}

/// Per-network best columns with reduced cost below `-eps`, in network order.
pub fn price_all(
    backend: &dyn PricingBackend,
    nets: &[Network],
    duals: &DualVector,
    eps: f64,
) -> Vec<Column> {
    backend
        .best_paths(nets, duals)
        .into_iter()
        .flatten()
        .filter(|c| c.reduced_cost < -eps)
        .collect()
}
