//! Small random instances for unit tests.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::instance::{
    ChargingStation, CostParams, Deadhead, DeadheadMatrix, Depot, Horizon, Instance, Trip,
    VehicleType,
};

/// xorshift64*; good enough to vary test instances.
pub(crate) struct Rng(u64);

impl Rng {
    pub(crate) fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub(crate) fn next(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub(crate) fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub(crate) fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Instance with `n` trips among three terminals, one depot and one or two
/// chargers. Batteries are small so that charging matters.
pub(crate) fn random_instance(seed: u64, n: usize) -> Instance {
    let mut rng = Rng::new(seed);
    let coords = [(0.0, 0.0), (3.0, 1.0), (-2.0, 4.0), (4.0, -3.0)];
    let names = ["D", "A", "B", "C"];
    let mut dh = DeadheadMatrix::new(coords.len());
    for (i, a) in coords.iter().enumerate() {
        for (j, b) in coords.iter().enumerate() {
            if i != j {
                let km = 1.3 * libm::hypot(a.0 - b.0, a.1 - b.1);
                let minutes = libm::ceil(km * 2.0) as i32;
                dh.set(i, j, Some(Deadhead { minutes, km }));
            }
        }
    }
    let mut trips = Vec::new();
    for k in 0..n {
        let o = 1 + rng.below(3) as usize;
        let d = 1 + (o + rng.below(2) as usize) % 3;
        let begin = 400 + 5 * rng.below(36) as i32;
        let duration = 20 + 5 * rng.below(7) as i32;
        trips.push(Trip {
            id: format!("t{k}"),
            origin: o,
            destination: d,
            begin,
            end: begin + duration,
            distance_km: duration as f64 * 25.0 / 60.0,
        });
    }
    let vt = |id: &str, battery: f64| VehicleType {
        id: id.into(),
        battery_kwh: battery,
        consumption_kwh_per_km: 1.3,
        idle_consumption_kwh_per_min: 0.1,
        charge_kwh_per_min: 1.0,
        invest_cost: 50_000.0 + 10.0 * battery,
        op_cost_per_km: 100.0,
    };
    let mut types = vec![vt("small", 40.0 + 10.0 * rng.unit())];
    let mut allowed = vec![0];
    if seed % 2 == 1 {
        types.push(vt("large", 70.0));
        allowed.push(1);
    }
    let mut stations = vec![ChargingStation {
        id: "SA".into(),
        location: 1,
        capacity: 1,
    }];
    if seed % 3 == 0 {
        stations.push(ChargingStation {
            id: "SB".into(),
            location: 2,
            capacity: 2,
        });
    }
    let (inst, _) = Instance::new(
        names.iter().map(|s| (*s).into()).collect(),
        trips,
        vec![Depot {
            id: "D".into(),
            location: 0,
            vehicle_types: allowed,
        }],
        stations,
        types,
        dh,
        CostParams::default(),
        Horizon {
            start: 360,
            end: 720,
        },
    )
    .unwrap();
    inst
}
