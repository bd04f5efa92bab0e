//! Problem data: trips, depots, charging stations, vehicle types, deadheads
//! and cost parameters.
//!
//! Units: minutes for time, kWh for energy, km for distance, euro cents for
//! money. Everything is validated once in [`Instance::new`] and immutable
//! afterwards.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Cents, Error, Minutes, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub id: String,
    pub is_depot: bool,
    pub station: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub id: String,
    pub origin: usize,
    pub destination: usize,
    pub begin: Minutes,
    pub end: Minutes,
    pub distance_km: f64,
}

impl Trip {
    pub fn duration(&self) -> Minutes {
        self.end - self.begin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleType {
    pub id: String,
    pub battery_kwh: f64,
    pub consumption_kwh_per_km: f64,
    pub idle_consumption_kwh_per_min: f64,
    pub charge_kwh_per_min: f64,
    pub invest_cost: Cents,
    pub op_cost_per_km: Cents,
}

impl VehicleType {
    /// SoC in tenths of a percent corresponding to `kwh`.
    pub fn soc_tenths(&self, kwh: f64) -> f64 {
        1000.0 * kwh / self.battery_kwh
    }

    pub fn drive_kwh(&self, km: f64) -> f64 {
        km * self.consumption_kwh_per_km
    }

    pub fn idle_kwh(&self, minutes: Minutes) -> f64 {
        minutes as f64 * self.idle_consumption_kwh_per_min
    }

    pub fn charge_kwh(&self, minutes: Minutes) -> f64 {
        minutes as f64 * self.charge_kwh_per_min
    }
}

/// Converts an energy amount into a SoC percentage of the vehicle's battery.
pub fn soc_of_energy(vt: &VehicleType, kwh: f64) -> f64 {
    100.0 * kwh / vt.battery_kwh
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargingStation {
    pub id: String,
    pub location: usize,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Depot {
    pub id: String,
    pub location: usize,
    pub vehicle_types: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deadhead {
    pub minutes: Minutes,
    pub km: f64,
}

impl Deadhead {
    pub const ZERO: Deadhead = Deadhead {
        minutes: 0,
        km: 0.0,
    };
}

/// Dense location x location matrix of deadhead times and distances.
/// Missing entries are allowed for pairs no duty can ever use.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadheadMatrix {
    n: usize,
    entries: Vec<Option<Deadhead>>,
}

impl DeadheadMatrix {
    pub fn new(n: usize) -> Self {
        let mut m = DeadheadMatrix {
            n,
            entries: alloc::vec![None; n * n],
        };
        for i in 0..n {
            m.entries[i * n + i] = Some(Deadhead::ZERO);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn set(&mut self, from: usize, to: usize, dh: Option<Deadhead>) {
        self.entries[from * self.n + to] = dh;
    }

    pub fn get(&self, from: usize, to: usize) -> Option<Deadhead> {
        self.entries[from * self.n + to]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostParams {
    pub energy_cost_per_kwh: Cents,
    pub crew_cost_per_min: Cents,
    pub charge_start_penalty: Cents,
    pub max_deadhead_min: Minutes,
    pub max_idle_trip_min: Minutes,
    pub max_idle_charge_min: Minutes,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            energy_cost_per_kwh: 13.61,
            crew_cost_per_min: 67.0,
            charge_start_penalty: 1000.0,
            max_deadhead_min: 60,
            max_idle_trip_min: 480,
            max_idle_charge_min: 180,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon {
    pub start: Minutes,
    pub end: Minutes,
}

/// Non-fatal findings of instance validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// No depot can reach the trip and get back within the deadhead limit.
    UnreachableTrip { trip: String },
    /// The charge start penalty exceeds 1% of the cheapest investment cost.
    LargeStartPenalty { penalty: Cents, min_invest: Cents },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::UnreachableTrip { trip } => {
                write!(f, "trip `{trip}` is not reachable from any depot within the deadhead limit")
            }
            Warning::LargeStartPenalty {
                penalty,
                min_invest,
            } => write!(
                f,
                "charge start penalty {penalty} is not small relative to investment cost {min_invest}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub locations: Vec<Location>,
    pub trips: Vec<Trip>,
    pub depots: Vec<Depot>,
    pub stations: Vec<ChargingStation>,
    pub vehicle_types: Vec<VehicleType>,
    pub deadhead: DeadheadMatrix,
    pub costs: CostParams,
    pub horizon: Horizon,
}

fn invalid(entity: &'static str, id: &str, reason: impl ToString) -> Error {
    Error::Instance {
        entity,
        id: id.to_string(),
        reason: reason.to_string(),
    }
}

fn check_unique<'a>(entity: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(invalid(entity, id, "duplicate id"));
        }
    }
    Ok(())
}

fn finite_nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl Instance {
    /// Assembles and validates an instance. Location flags (`is_depot`,
    /// `station`) are derived from the depot and station lists.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        location_ids: Vec<String>,
        trips: Vec<Trip>,
        depots: Vec<Depot>,
        stations: Vec<ChargingStation>,
        vehicle_types: Vec<VehicleType>,
        deadhead: DeadheadMatrix,
        costs: CostParams,
        horizon: Horizon,
    ) -> Result<(Instance, Vec<Warning>)> {
        let mut locations: Vec<Location> = location_ids
            .into_iter()
            .map(|id| Location {
                id,
                is_depot: false,
                station: None,
            })
            .collect();
        for d in &depots {
            let loc = locations
                .get_mut(d.location)
                .ok_or_else(|| invalid("depot", &d.id, "unknown location"))?;
            if loc.is_depot {
                return Err(invalid("depot", &d.id, "location already hosts a depot"));
            }
            loc.is_depot = true;
        }
        for (r, s) in stations.iter().enumerate() {
            let loc = locations
                .get_mut(s.location)
                .ok_or_else(|| invalid("station", &s.id, "unknown location"))?;
            if loc.station.is_some() {
                return Err(invalid(
                    "station",
                    &s.id,
                    "location already hosts a station",
                ));
            }
            loc.station = Some(r);
        }
        let inst = Instance {
            locations,
            trips,
            depots,
            stations,
            vehicle_types,
            deadhead,
            costs,
            horizon,
        };
        let warnings = inst.validate()?;
        Ok((inst, warnings))
    }

    /// Checks every invariant; returns warnings for soft violations.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        let nloc = self.locations.len();
        check_unique("location", self.locations.iter().map(|l| l.id.as_str()))?;
        check_unique("trip", self.trips.iter().map(|t| t.id.as_str()))?;
        check_unique("depot", self.depots.iter().map(|d| d.id.as_str()))?;
        check_unique("station", self.stations.iter().map(|s| s.id.as_str()))?;
        check_unique(
            "vehicle type",
            self.vehicle_types.iter().map(|v| v.id.as_str()),
        )?;
        if self.deadhead.len() != nloc {
            return Err(invalid(
                "deadhead",
                "matrix",
                format!("has {} rows, expected {nloc}", self.deadhead.len()),
            ));
        }
        if self.horizon.start >= self.horizon.end {
            return Err(invalid("horizon", "horizon", "start must precede end"));
        }
        if self.trips.is_empty() {
            return Err(invalid("trip", "-", "instance has no trips"));
        }
        if self.depots.is_empty() {
            return Err(invalid("depot", "-", "instance has no depots"));
        }
        for t in &self.trips {
            if t.origin >= nloc || t.destination >= nloc {
                return Err(invalid("trip", &t.id, "unknown location"));
            }
            if t.begin >= t.end {
                return Err(invalid("trip", &t.id, "begin time must be before end time"));
            }
            if !finite_nonneg(t.distance_km) {
                return Err(invalid("trip", &t.id, "distance must be finite and >= 0"));
            }
            if t.begin < self.horizon.start || t.end > self.horizon.end {
                return Err(invalid("trip", &t.id, "outside the planning horizon"));
            }
        }
        for v in &self.vehicle_types {
            let rates = [
                v.battery_kwh,
                v.consumption_kwh_per_km,
                v.idle_consumption_kwh_per_min,
                v.charge_kwh_per_min,
            ];
            if !rates.iter().all(|&x| finite_pos(x)) {
                return Err(invalid("vehicle type", &v.id, "physical rates must be > 0"));
            }
            if !finite_nonneg(v.invest_cost) || !finite_nonneg(v.op_cost_per_km) {
                return Err(invalid("vehicle type", &v.id, "costs must be >= 0"));
            }
        }
        for s in &self.stations {
            if s.capacity < 1 {
                return Err(invalid("station", &s.id, "capacity must be >= 1"));
            }
        }
        for d in &self.depots {
            if d.vehicle_types.is_empty() {
                return Err(invalid("depot", &d.id, "no allowed vehicle types"));
            }
            if d.vehicle_types
                .iter()
                .any(|&k| k >= self.vehicle_types.len())
            {
                return Err(invalid("depot", &d.id, "unknown vehicle type"));
            }
        }
        let c = &self.costs;
        if ![
            c.energy_cost_per_kwh,
            c.crew_cost_per_min,
            c.charge_start_penalty,
        ]
        .iter()
        .all(|&x| finite_nonneg(x))
            || c.max_deadhead_min < 0
            || c.max_idle_trip_min < 0
            || c.max_idle_charge_min < 0
        {
            return Err(invalid(
                "costs",
                "costs",
                "all cost parameters must be >= 0",
            ));
        }
        for i in 0..nloc {
            for j in 0..nloc {
                if let Some(dh) = self.deadhead.get(i, j) {
                    if dh.minutes < 0 || !finite_nonneg(dh.km) {
                        return Err(invalid(
                            "deadhead",
                            &self.locations[i].id,
                            format!("entry to `{}` must be >= 0", self.locations[j].id),
                        ));
                    }
                    if i == j && (dh.minutes != 0 || dh.km != 0.0) {
                        return Err(invalid(
                            "deadhead",
                            &self.locations[i].id,
                            "diagonal entry must be zero",
                        ));
                    }
                }
            }
        }
        self.check_used_pairs()?;

        let mut warnings = Vec::new();
        for t in &self.trips {
            let reachable = self.depots.iter().any(|d| {
                let out = self.deadhead.get(d.location, t.origin);
                let back = self.deadhead.get(t.destination, d.location);
                matches!((out, back), (Some(o), Some(b))
                    if o.minutes <= c.max_deadhead_min && b.minutes <= c.max_deadhead_min)
            });
            if !reachable {
                warnings.push(Warning::UnreachableTrip { trip: t.id.clone() });
            }
        }
        if let Some(min_invest) = self.min_invest_cost() {
            if c.charge_start_penalty > min_invest / 100.0 {
                warnings.push(Warning::LargeStartPenalty {
                    penalty: c.charge_start_penalty,
                    min_invest,
                });
            }
        }
        Ok(warnings)
    }

    /// Every location pair that some arc may traverse must have a deadhead
    /// entry.
    fn check_used_pairs(&self) -> Result<()> {
        let need = |from: usize, to: usize| -> Result<()> {
            if self.deadhead.get(from, to).is_none() {
                Err(Error::MissingDeadhead {
                    from: self.locations[from].id.clone(),
                    to: self.locations[to].id.clone(),
                })
            } else {
                Ok(())
            }
        };
        for t in &self.trips {
            for d in &self.depots {
                need(d.location, t.origin)?;
                need(t.destination, d.location)?;
            }
            for s in &self.stations {
                need(t.destination, s.location)?;
                need(s.location, t.origin)?;
            }
            for u in &self.trips {
                if t.end <= u.begin {
                    need(t.destination, u.origin)?;
                }
            }
        }
        for s in &self.stations {
            for d in &self.depots {
                need(s.location, d.location)?;
            }
        }
        Ok(())
    }

    pub fn min_invest_cost(&self) -> Option<Cents> {
        self.vehicle_types
            .iter()
            .map(|v| v.invest_cost)
            .reduce(f64::min)
    }

    pub fn trip_index(&self, id: &str) -> Option<usize> {
        self.trips.iter().position(|t| t.id == id)
    }

    /// Deadhead lookup that treats missing entries as an error.
    pub fn deadhead(&self, from: usize, to: usize) -> Result<Deadhead> {
        self.deadhead
            .get(from, to)
            .ok_or_else(|| Error::MissingDeadhead {
                from: self.locations[from].id.clone(),
                to: self.locations[to].id.clone(),
            })
    }

    /// Energy (kWh) that vehicle type `vt` spends on trip `i`.
    pub fn trip_kwh(&self, vt: usize, i: usize) -> f64 {
        self.vehicle_types[vt].drive_kwh(self.trips[i].distance_km)
    }

    /// Service cost of trip `i` for vehicle type `vt`: distance plus crew.
    pub fn trip_cost(&self, vt: usize, i: usize) -> Cents {
        let t = &self.trips[i];
        self.vehicle_types[vt].op_cost_per_km * t.distance_km
            + self.costs.crew_cost_per_min * t.duration() as f64
    }
}
