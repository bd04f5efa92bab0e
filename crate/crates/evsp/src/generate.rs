//! Reproducible synthetic instances.
//!
//! Geography, timetable and trip lengths are our own construction: depots
//! and terminals are scattered uniformly over a square, deadheads follow
//! detoured straight lines, and trips start uniformly inside a service
//! window that widens with the number of trips. Vehicle and cost data
//! default to the published bus characteristics.

use evsp_core::instance::{
    ChargingStation, CostParams, Deadhead, DeadheadMatrix, Depot, Horizon, Instance, Trip,
    VehicleType,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bus characteristics in their published units: energy rates per second,
/// money in euros.
#[derive(Debug, Clone, PartialEq)]
pub struct BusSpec {
    pub id: &'static str,
    pub battery_kwh: f64,
    pub consumption_kwh_per_km: f64,
    pub idle_kwh_per_s: f64,
    pub charge_kwh_per_s: f64,
    pub invest_eur: f64,
    pub op_eur_per_km: f64,
}

impl BusSpec {
    pub fn type1() -> Self {
        BusSpec {
            id: "type1",
            battery_kwh: 155.0,
            consumption_kwh_per_km: 1.3,
            idle_kwh_per_s: 0.00167,
            charge_kwh_per_s: 0.0639,
            invest_eur: 50_000.0,
            op_eur_per_km: 1.0,
        }
    }

    pub fn type2() -> Self {
        BusSpec {
            id: "type2",
            battery_kwh: 210.0,
            consumption_kwh_per_km: 1.4,
            idle_kwh_per_s: 0.00167,
            charge_kwh_per_s: 0.0889,
            invest_eur: 52_500.0,
            op_eur_per_km: 1.05,
        }
    }

    /// Model units: per minute and euro cents.
    pub fn vehicle_type(&self) -> VehicleType {
        VehicleType {
            id: self.id.into(),
            battery_kwh: self.battery_kwh,
            consumption_kwh_per_km: self.consumption_kwh_per_km,
            idle_consumption_kwh_per_min: self.idle_kwh_per_s * 60.0,
            charge_kwh_per_min: self.charge_kwh_per_s * 60.0,
            invest_cost: self.invest_eur * 100.0,
            op_cost_per_km: self.op_eur_per_km * 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub buses: Vec<BusSpec>,
    pub energy_eur_per_kwh: f64,
    pub crew_eur_per_min: f64,
    pub charge_start_eur: f64,
    pub max_deadhead_min: i32,
    pub max_idle_trip_min: i32,
    pub max_idle_charge_min: i32,
    pub depots: usize,
    pub terminals: usize,
    /// One station per entry, placed at the first terminals.
    pub station_capacities: Vec<u32>,
    /// Side of the square service area.
    pub area_km: f64,
    /// Road distance over straight-line distance.
    pub detour: f64,
    pub deadhead_kmh: f64,
    pub trip_kmh: f64,
    pub trip_minutes: (i32, i32),
    /// Earliest trip start, minutes after midnight.
    pub day_start: i32,
    /// Service window: `base + per_trip * n` minutes, at most `max`.
    pub window_base: i32,
    pub window_per_trip: i32,
    pub window_max: i32,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            buses: vec![BusSpec::type1(), BusSpec::type2()],
            energy_eur_per_kwh: 0.1361,
            crew_eur_per_min: 0.67,
            charge_start_eur: 10.0,
            max_deadhead_min: 60,
            max_idle_trip_min: 480,
            max_idle_charge_min: 180,
            depots: 2,
            terminals: 6,
            station_capacities: vec![2, 1],
            area_km: 15.0,
            detour: 1.3,
            deadhead_kmh: 30.0,
            trip_kmh: 25.0,
            trip_minutes: (20, 60),
            day_start: 6 * 60,
            window_base: 60,
            window_per_trip: 8,
            window_max: 16 * 60,
        }
    }
}

impl Profile {
    pub fn costs(&self) -> CostParams {
        CostParams {
            energy_cost_per_kwh: self.energy_eur_per_kwh * 100.0,
            crew_cost_per_min: self.crew_eur_per_min * 100.0,
            charge_start_penalty: self.charge_start_eur * 100.0,
            max_deadhead_min: self.max_deadhead_min,
            max_idle_trip_min: self.max_idle_trip_min,
            max_idle_charge_min: self.max_idle_charge_min,
        }
    }

    fn window(&self, n: usize) -> i32 {
        (self.window_base + self.window_per_trip * n as i32).min(self.window_max)
    }
}

/// Builds an instance from `(seed, n_trips, profile)` alone. Every depot
/// hosts every bus type; locations are `D1..`, then terminals `T1..`.
pub fn generate(seed: u64, n_trips: usize, profile: &Profile) -> evsp_core::Result<Instance> {
    if n_trips == 0 {
        return Err(evsp_core::Error::Parameter {
            name: "trips",
            reason: "must be >= 1".into(),
        });
    }
    if profile.terminals < 2.max(profile.station_capacities.len()) || profile.depots == 0 {
        return Err(evsp_core::Error::Parameter {
            name: "profile",
            reason: "need a depot and at least two terminals, one per station".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = profile.depots;
    let nloc = nd + profile.terminals;
    let points: Vec<(f64, f64)> = (0..nloc)
        .map(|_| {
            (
                rng.random::<f64>() * profile.area_km,
                rng.random::<f64>() * profile.area_km,
            )
        })
        .collect();
    let mut ids: Vec<String> = (1..=nd).map(|d| format!("D{d}")).collect();
    ids.extend((1..=profile.terminals).map(|t| format!("T{t}")));

    let mut matrix = DeadheadMatrix::new(nloc);
    for i in 0..nloc {
        for j in 0..nloc {
            if i != j {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                let km = (dx * dx + dy * dy).sqrt() * profile.detour;
                let minutes = (km / profile.deadhead_kmh * 60.0).ceil() as i32;
                matrix.set(i, j, Some(Deadhead { minutes, km }));
            }
        }
    }

    let window = profile.window(n_trips);
    let mut trips: Vec<Trip> = (0..n_trips)
        .map(|_| {
            let origin = nd + rng.random_range(0..profile.terminals);
            let mut destination = nd + rng.random_range(0..profile.terminals - 1);
            if destination >= origin {
                destination += 1;
            }
            let begin = profile.day_start + rng.random_range(0..window);
            let minutes = rng.random_range(profile.trip_minutes.0..=profile.trip_minutes.1);
            Trip {
                id: String::new(),
                origin,
                destination,
                begin,
                end: begin + minutes,
                distance_km: minutes as f64 / 60.0 * profile.trip_kmh,
            }
        })
        .collect();
    trips.sort_by_key(|t| (t.begin, t.end, t.origin, t.destination));
    for (i, t) in trips.iter_mut().enumerate() {
        t.id = format!("t{}", i + 1);
    }
    let first = trips.iter().map(|t| t.begin).min().unwrap_or(0);
    let last = trips.iter().map(|t| t.end).max().unwrap_or(0);
    let horizon = Horizon {
        start: first.div_euclid(60) * 60,
        end: (last + 59).div_euclid(60) * 60,
    };

    let vehicle_types: Vec<VehicleType> = profile.buses.iter().map(BusSpec::vehicle_type).collect();
    let depots = (0..nd)
        .map(|d| Depot {
            id: format!("depot{}", d + 1),
            location: d,
            vehicle_types: (0..vehicle_types.len()).collect(),
        })
        .collect();
    let stations = profile
        .station_capacities
        .iter()
        .enumerate()
        .map(|(r, &capacity)| ChargingStation {
            id: format!("station{}", r + 1),
            location: nd + r,
            capacity,
        })
        .collect();
    Instance::new(
        ids,
        trips,
        depots,
        stations,
        vehicle_types,
        matrix,
        profile.costs(),
        horizon,
    )
    .map(|(inst, _)| inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::instance_to_json;

    #[test]
    fn deterministic_per_seed() {
        let p = Profile::default();
        let a = instance_to_json(&generate(1, 5, &p).unwrap());
        let b = instance_to_json(&generate(1, 5, &p).unwrap());
        let c = instance_to_json(&generate(2, 5, &p).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn horizon_is_whole_hours_around_trips() {
        for seed in 0..10 {
            let inst = generate(seed, 50, &Profile::default()).unwrap();
            assert_eq!(inst.horizon.start % 60, 0);
            assert_eq!(inst.horizon.end % 60, 0);
            let first = inst.trips.iter().map(|t| t.begin).min().unwrap();
            let last = inst.trips.iter().map(|t| t.end).max().unwrap();
            assert!(inst.horizon.start <= first && first - inst.horizon.start < 60);
            assert!(inst.horizon.end >= last && inst.horizon.end - last < 60);
        }
    }

    #[test]
    fn deadheads_are_detoured_distances_at_thirty() {
        let inst = generate(3, 4, &Profile::default()).unwrap();
        let n = inst.locations.len();
        for i in 0..n {
            for j in 0..n {
                let d = inst.deadhead.get(i, j).unwrap();
                assert_eq!(d.minutes, (d.km * 2.0).ceil() as i32);
                assert_eq!(d.km, inst.deadhead.get(j, i).unwrap().km);
            }
        }
    }

    #[test]
    fn trips_run_at_commercial_speed() {
        let inst = generate(4, 30, &Profile::default()).unwrap();
        for t in &inst.trips {
            assert!((20..=60).contains(&t.duration()));
            assert!((t.distance_km - t.duration() as f64 * 25.0 / 60.0).abs() < 1e-9);
            assert_ne!(t.origin, t.destination);
        }
    }

    #[test]
    fn zero_trips_rejected() {
        assert!(generate(1, 0, &Profile::default()).is_err());
    }
}
