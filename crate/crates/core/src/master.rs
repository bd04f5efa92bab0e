//! The restricted master problem: set covering of trips plus charger
//! capacity rows over a growing column pool.
//!
//! Capacity rows are created lazily: the row of a (station, block) pair is
//! only added once more pooled columns use the pair than the station has
//! chargers. With fewer users the row cannot bind (covering optima never
//! need `x_p > 1` when costs are positive), so its dual is zero.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::clock::Clock;
use crate::duty::DutyPlan;
use crate::instance::Instance;
use crate::lp::{Lp, RowSense};
use crate::network::Network;
use crate::pricing::{cheapest_singleton, Column, DualVector};
use crate::{Cents, Error, Result};

/// Cost of a dummy column covering a trip no network can serve.
pub const BIG: Cents = 1e9;

/// Integrality tolerance for column values.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Singleton duty of the starting pool.
    Initial,
    /// Placeholder covering one uncoverable trip at cost [`BIG`].
    Dummy,
    /// Found by pricing.
    Priced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolColumn {
    pub column: Column,
    pub origin: Origin,
}

#[derive(Debug, Clone)]
pub struct Rmp {
    pub pool: Vec<PoolColumn>,
    capacity: Vec<u32>,
    blocks: usize,
    lp: Lp,
    cap_rows: BTreeMap<(usize, usize), usize>,
    users: BTreeMap<(usize, usize), Vec<usize>>,
    signatures: BTreeSet<(usize, Vec<usize>, Vec<(usize, usize)>)>,
    fixed: Vec<usize>,
    /// Last LP objective, primal values and duals.
    pub z: f64,
    pub x: Vec<f64>,
    pub duals: DualVector,
}

impl Rmp {
    /// Empty master with one covering row per trip.
    pub fn new(inst: &Instance, blocks: usize) -> Self {
        let mut lp = Lp::new();
        for _ in &inst.trips {
            lp.add_row(RowSense::Ge, 1.0, &[]);
        }
        Rmp {
            pool: Vec::new(),
            capacity: inst.stations.iter().map(|s| s.capacity).collect(),
            blocks,
            lp,
            cap_rows: BTreeMap::new(),
            users: BTreeMap::new(),
            signatures: BTreeSet::new(),
            fixed: Vec::new(),
            z: f64::INFINITY,
            x: Vec::new(),
            duals: DualVector::zeros(inst.trips.len(), inst.stations.len(), blocks),
        }
    }

    pub fn num_trips(&self) -> usize {
        self.duals.sigma.len()
    }

    /// Adds a column unless an identical duty (same network, trips and
    /// charge blocks) is pooled already. Returns its index when added.
    pub fn add_column(&mut self, column: Column, origin: Origin) -> Option<usize> {
        let sig = (column.network, column.trips.clone(), column.charges.clone());
        if origin != Origin::Dummy && !self.signatures.insert(sig) {
            return None;
        }
        let p = self.pool.len();
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for &i in &column.trips {
            match entries.iter_mut().find(|e| e.0 == i) {
                Some(e) => e.1 += 1.0,
                None => entries.push((i, 1.0)),
            }
        }
        let mut new_rows = Vec::new();
        for &(r, b) in &column.charges {
            let users = self.users.entry((r, b)).or_default();
            users.push(p);
            if let Some(&row) = self.cap_rows.get(&(r, b)) {
                entries.push((row, 1.0));
            } else if users.len() > self.capacity[r] as usize {
                new_rows.push((r, b));
            }
        }
        let lp_col = self.lp.add_col(column.cost, 0.0, f64::INFINITY, &entries);
        debug_assert_eq!(lp_col, p);
        self.pool.push(PoolColumn { column, origin });
        for (r, b) in new_rows {
            let coefs: Vec<(usize, f64)> = self.users[&(r, b)].iter().map(|&q| (q, 1.0)).collect();
            let row = self
                .lp
                .add_row(RowSense::Le, self.capacity[r] as f64, &coefs);
            self.cap_rows.insert((r, b), row);
        }
        Some(p)
    }

    /// Solves the LP over the pool and stores value, primal and duals.
    pub fn solve_lp(&mut self) -> Result<f64> {
        let z = self.lp.solve()?;
        self.z = z;
        self.x = self.lp.values();
        let y = self.lp.duals();
        let n = self.num_trips();
        for i in 0..n {
            self.duals.sigma[i] = y[i].max(0.0);
        }
        self.duals.gamma.iter_mut().for_each(|g| *g = 0.0);
        for (&(r, b), &row) in &self.cap_rows {
            self.duals.gamma[r * self.blocks + b] = y[row].min(0.0);
        }
        Ok(z)
    }

    /// True when a dummy column carries positive value in the last LP.
    pub fn dummy_active(&self) -> bool {
        self.pool
            .iter()
            .zip(&self.x)
            .any(|(c, &x)| c.origin == Origin::Dummy && x > INT_TOL)
    }

    pub fn is_integral(&self) -> bool {
        self.x
            .iter()
            .all(|&x| (x - libm::round(x)).abs() <= INT_TOL)
    }

    /// Columns with value one in the last (integral) solution.
    pub fn selected(&self) -> Vec<usize> {
        (0..self.pool.len()).filter(|&p| self.x[p] > 0.5).collect()
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    /// Pins column `p` to one.
    pub fn fix(&mut self, p: usize) {
        if !self.fixed.contains(&p) {
            self.fixed.push(p);
            self.lp.set_bounds(p, 1.0, f64::INFINITY);
        }
    }

    /// Charger use summed over fixed columns.
    pub fn fixed_usage(&self) -> BTreeMap<(usize, usize), u32> {
        let mut usage = BTreeMap::new();
        for &p in &self.fixed {
            for &rb in &self.pool[p].column.charges {
                *usage.entry(rb).or_insert(0) += 1;
            }
        }
        usage
    }

    /// Trips covered by fixed columns.
    pub fn fixed_trips(&self) -> Vec<bool> {
        let mut covered = vec![false; self.num_trips()];
        for &p in &self.fixed {
            for &i in &self.pool[p].column.trips {
                covered[i] = true;
            }
        }
        covered
    }

    /// (station, block) pairs whose capacity fixed columns exhaust.
    pub fn saturated(&self) -> Vec<(usize, usize)> {
        self.fixed_usage()
            .into_iter()
            .filter(|&((r, _), n)| n >= self.capacity[r])
            .map(|(rb, _)| rb)
            .collect()
    }

    /// Fixing step of the diving heuristic: fixes every priced column with
    /// `x > theta` (largest first), or else the priced column with the
    /// largest positive value. Initial singletons and dummies are never
    /// fixed, and a column that would overload a charger given the columns
    /// already fixed is skipped. Returns the newly fixed columns.
    pub fn fix_columns(&mut self, theta: f64) -> Result<Vec<usize>> {
        let mut cand: Vec<usize> = (0..self.pool.len())
            .filter(|&p| {
                self.pool[p].origin == Origin::Priced
                    && !self.fixed.contains(&p)
                    && self.x[p] > INT_TOL
            })
            .collect();
        // descending value, ties by lowest column id
        cand.sort_by(|&a, &b| self.x[b].total_cmp(&self.x[a]).then(a.cmp(&b)));
        let mut usage = self.fixed_usage();
        let fits = |p: usize, usage: &mut BTreeMap<(usize, usize), u32>, pool: &[PoolColumn]| {
            let ok = pool[p]
                .column
                .charges
                .iter()
                .all(|&(r, b)| usage.get(&(r, b)).copied().unwrap_or(0) < self.capacity[r]);
            if ok {
                for &rb in &pool[p].column.charges {
                    *usage.entry(rb).or_insert(0) += 1;
                }
            }
            ok
        };
        let mut newly = Vec::new();
        for &p in cand.iter().take_while(|&&p| self.x[p] > theta) {
            if fits(p, &mut usage, &self.pool) {
                newly.push(p);
            }
        }
        if newly.is_empty() {
            if let Some(&p) = cand.iter().find(|&&p| fits(p, &mut usage, &self.pool)) {
                newly.push(p);
            }
        }
        if newly.is_empty() {
            return Err(Error::NoFixableColumn);
        }
        for &p in &newly {
            self.fix(p);
        }
        Ok(newly)
    }

    /// Branch and bound over the pool: depth first, branching on the most
    /// fractional column with the `x = 1` branch first. Leaves the LP with
    /// the bounds it had on entry and `x` set to the incumbent.
    pub fn solve_bip(&mut self, time_limit: f64, clock: &dyn Clock) -> Result<BipOutcome> {
        let t0 = clock.now_secs();
        let root = self.solve_lp()?;
        let saved: Vec<(f64, f64)> = (0..self.pool.len()).map(|p| self.lp.bounds(p)).collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut closed = true;
        if self.is_integral() {
            best = Some((root, self.x.clone()));
        } else {
            // stack of pending bound changes: (column, lb, ub, depth)
            let mut stack: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new()];
            while let Some(fixings) = stack.pop() {
                if clock.now_secs() - t0 >= time_limit {
                    closed = false;
                    break;
                }
                for (p, &(lb, ub)) in saved.iter().enumerate() {
                    self.lp.set_bounds(p, lb, ub);
                }
                for &(p, lb, ub) in &fixings {
                    self.lp.set_bounds(p, lb, ub);
                }
                let z = match self.lp.solve() {
                    Ok(z) => z,
                    Err(crate::lp::LpError::Infeasible) => continue,
                    Err(e) => return Err(e.into()),
                };
                if best
                    .as_ref()
                    .is_some_and(|(b, _)| z >= b - 1e-6 * b.abs().max(1.0))
                {
                    continue;
                }
                let x = self.lp.values();
                let branch = (0..x.len())
                    .filter(|&p| (x[p] - libm::round(x[p])).abs() > INT_TOL)
                    .min_by(|&a, &b| {
                        (x[a] - 0.5)
                            .abs()
                            .total_cmp(&(x[b] - 0.5).abs())
                            .then(a.cmp(&b))
                    });
                match branch {
                    None => best = Some((z, x)),
                    Some(p) => {
                        let mut zero = fixings.clone();
                        zero.push((p, 0.0, 0.0));
                        let mut one = fixings;
                        one.push((p, 1.0, f64::INFINITY));
                        stack.push(zero);
                        stack.push(one);
                    }
                }
            }
            for (p, &(lb, ub)) in saved.iter().enumerate() {
                self.lp.set_bounds(p, lb, ub);
            }
        }
        match best {
            Some((z, x)) => {
                self.z = z;
                self.x = x;
                Ok(BipOutcome {
                    objective: z,
                    bound: if closed { z } else { root },
                    proven_optimal: closed,
                })
            }
            None if closed => Err(Error::NoIntegralSolution {
                bound: f64::INFINITY,
            }),
            None => Err(Error::NoIntegralSolution { bound: root }),
        }
    }

    /// Plans of the pooled columns with value one.
    pub fn selected_plans(&self) -> Vec<DutyPlan> {
        self.selected()
            .into_iter()
            .map(|p| self.pool[p].column.plan.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipOutcome {
    pub objective: f64,
    /// Best proven lower bound on the integer optimum over this pool.
    pub bound: f64,
    pub proven_optimal: bool,
}

/// Starting master: the cheapest singleton duty of every trip over all
/// networks, or a dummy column where no network has one. Solves the LP.
pub fn init_rmp(inst: &Instance, nets: &[Network], blocks: usize) -> Result<Rmp> {
    let mut rmp = Rmp::new(inst, blocks);
    for i in 0..inst.trips.len() {
        let best = nets
            .iter()
            .enumerate()
            .filter_map(|(k, n)| cheapest_singleton(n, k, i))
            .min_by(|a, b| a.cost.total_cmp(&b.cost));
        match best {
            Some(c) => {
                rmp.add_column(c, Origin::Initial);
            }
            None => {
                rmp.add_column(dummy_column(inst, i), Origin::Dummy);
            }
        }
    }
    rmp.solve_lp()?;
    Ok(rmp)
}

fn dummy_column(inst: &Instance, trip: usize) -> Column {
    let depot = &inst.depots[0];
    Column {
        network: usize::MAX,
        cost: BIG,
        trips: vec![trip],
        charges: Vec::new(),
        plan: DutyPlan {
            vehicle_type: depot.vehicle_types.first().copied().unwrap_or(0),
            depot: 0,
            stops: vec![crate::duty::Stop::trip(trip)],
        },
        socs: Vec::new(),
        reduced_cost: 0.0,
    }
}

/// Uncoverable trips: those whose dummy column is selected.
pub fn dummy_trips(rmp: &Rmp) -> Vec<usize> {
    rmp.selected()
        .into_iter()
        .filter(|&p| rmp.pool[p].origin == Origin::Dummy)
        .flat_map(|p| rmp.pool[p].column.trips.clone())
        .collect()
}
