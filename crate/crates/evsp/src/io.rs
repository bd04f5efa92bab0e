//! JSON file formats: instances and schedules.
//!
//! Instance files reference locations, depots, stations and vehicle types by
//! id. Times are minutes, energies kWh, distances km, money euro cents.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use evsp_core::discretization::TimeBlocks;
use evsp_core::duty::{DutyPlan, EventKind, Stop};
use evsp_core::instance::{
    ChargingStation, CostParams, Deadhead, DeadheadMatrix, Depot, Horizon, Instance, Trip,
    VehicleType, Warning,
};
use evsp_core::schedule::{DutyTrace, Schedule, ScheduledDuty};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    /// Syntax or schema error; serde reports the field and position.
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: unknown {entity} `{id}`")]
    UnknownRef {
        path: String,
        entity: &'static str,
        id: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        source: evsp_core::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripRecord {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub begin: i32,
    pub end: i32,
    pub distance_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepotRecord {
    pub id: String,
    pub location: String,
    pub vehicle_types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationRecord {
    pub id: String,
    pub location: String,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleTypeRecord {
    pub id: String,
    pub battery_kwh: f64,
    pub consumption_kwh_per_km: f64,
    pub idle_consumption_kwh_per_min: f64,
    pub charge_kwh_per_min: f64,
    pub invest_cost: f64,
    pub op_cost_per_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeadheadRecord {
    pub from: String,
    pub to: String,
    pub minutes: i32,
    pub km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsRecord {
    pub energy_cost_per_kwh: f64,
    pub crew_cost_per_min: f64,
    pub charge_start_penalty: f64,
    pub max_deadhead_min: i32,
    pub max_idle_trip_min: i32,
    pub max_idle_charge_min: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonRecord {
    pub start: i32,
    pub end: i32,
}

/// On-disk instance layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub locations: Vec<String>,
    pub trips: Vec<TripRecord>,
    pub depots: Vec<DepotRecord>,
    pub stations: Vec<StationRecord>,
    pub vehicle_types: Vec<VehicleTypeRecord>,
    /// Sparse list of directed entries; the diagonal is implicit.
    pub deadhead: Vec<DeadheadRecord>,
    pub costs: CostsRecord,
    pub horizon: HorizonRecord,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        let loc = |i: usize| inst.locations[i].id.clone();
        let n = inst.locations.len();
        let mut deadhead = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let Some(d) = inst.deadhead.get(i, j) {
                    deadhead.push(DeadheadRecord {
                        from: loc(i),
                        to: loc(j),
                        minutes: d.minutes,
                        km: d.km,
                    });
                }
            }
        }
        let c = &inst.costs;
        InstanceFile {
            locations: inst.locations.iter().map(|l| l.id.clone()).collect(),
            trips: inst
                .trips
                .iter()
                .map(|t| TripRecord {
                    id: t.id.clone(),
                    origin: loc(t.origin),
                    destination: loc(t.destination),
                    begin: t.begin,
                    end: t.end,
                    distance_km: t.distance_km,
                })
                .collect(),
            depots: inst
                .depots
                .iter()
                .map(|d| DepotRecord {
                    id: d.id.clone(),
                    location: loc(d.location),
                    vehicle_types: d
                        .vehicle_types
                        .iter()
                        .map(|&k| inst.vehicle_types[k].id.clone())
                        .collect(),
                })
                .collect(),
            stations: inst
                .stations
                .iter()
                .map(|s| StationRecord {
                    id: s.id.clone(),
                    location: loc(s.location),
                    capacity: s.capacity,
                })
                .collect(),
            vehicle_types: inst
                .vehicle_types
                .iter()
                .map(|v| VehicleTypeRecord {
                    id: v.id.clone(),
                    battery_kwh: v.battery_kwh,
                    consumption_kwh_per_km: v.consumption_kwh_per_km,
                    idle_consumption_kwh_per_min: v.idle_consumption_kwh_per_min,
                    charge_kwh_per_min: v.charge_kwh_per_min,
                    invest_cost: v.invest_cost,
                    op_cost_per_km: v.op_cost_per_km,
                })
                .collect(),
            deadhead,
            costs: CostsRecord {
                energy_cost_per_kwh: c.energy_cost_per_kwh,
                crew_cost_per_min: c.crew_cost_per_min,
                charge_start_penalty: c.charge_start_penalty,
                max_deadhead_min: c.max_deadhead_min,
                max_idle_trip_min: c.max_idle_trip_min,
                max_idle_charge_min: c.max_idle_charge_min,
            },
            horizon: HorizonRecord {
                start: inst.horizon.start,
                end: inst.horizon.end,
            },
        }
    }

    /// Resolves ids and validates. `path` only labels errors.
    pub fn into_instance(self, path: &str) -> Result<(Instance, Vec<Warning>), FileError> {
        let unknown = |entity, id: &str| FileError::UnknownRef {
            path: path.into(),
            entity,
            id: id.into(),
        };
        let locs: HashMap<&str, usize> = self
            .locations
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let loc = |id: &str| locs.get(id).copied().ok_or_else(|| unknown("location", id));
        let types: HashMap<&str, usize> = self
            .vehicle_types
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.as_str(), i))
            .collect();

        let mut trips = Vec::with_capacity(self.trips.len());
        for t in &self.trips {
            trips.push(Trip {
                id: t.id.clone(),
                origin: loc(&t.origin)?,
                destination: loc(&t.destination)?,
                begin: t.begin,
                end: t.end,
                distance_km: t.distance_km,
            });
        }
        let mut depots = Vec::new();
        for d in &self.depots {
            let mut vts = Vec::new();
            for v in &d.vehicle_types {
                vts.push(
                    types
                        .get(v.as_str())
                        .copied()
                        .ok_or_else(|| unknown("vehicle type", v))?,
                );
            }
            depots.push(Depot {
                id: d.id.clone(),
                location: loc(&d.location)?,
                vehicle_types: vts,
            });
        }
        let mut stations = Vec::new();
        for s in &self.stations {
            stations.push(ChargingStation {
                id: s.id.clone(),
                location: loc(&s.location)?,
                capacity: s.capacity,
            });
        }
        let mut matrix = DeadheadMatrix::new(self.locations.len());
        for d in &self.deadhead {
            matrix.set(
                loc(&d.from)?,
                loc(&d.to)?,
                Some(Deadhead {
                    minutes: d.minutes,
                    km: d.km,
                }),
            );
        }
        let vehicle_types = self
            .vehicle_types
            .iter()
            .map(|v| VehicleType {
                id: v.id.clone(),
                battery_kwh: v.battery_kwh,
                consumption_kwh_per_km: v.consumption_kwh_per_km,
                idle_consumption_kwh_per_min: v.idle_consumption_kwh_per_min,
                charge_kwh_per_min: v.charge_kwh_per_min,
                invest_cost: v.invest_cost,
                op_cost_per_km: v.op_cost_per_km,
            })
            .collect();
        let c = &self.costs;
        let costs = CostParams {
            energy_cost_per_kwh: c.energy_cost_per_kwh,
            crew_cost_per_min: c.crew_cost_per_min,
            charge_start_penalty: c.charge_start_penalty,
            max_deadhead_min: c.max_deadhead_min,
            max_idle_trip_min: c.max_idle_trip_min,
            max_idle_charge_min: c.max_idle_charge_min,
        };
        Instance::new(
            self.locations.clone(),
            trips,
            depots,
            stations,
            vehicle_types,
            matrix,
            costs,
            Horizon {
                start: self.horizon.start,
                end: self.horizon.end,
            },
        )
        .map_err(|source| FileError::Invalid {
            path: path.into(),
            source,
        })
    }
}

fn parse_error(path: &str, e: serde_json::Error) -> FileError {
    FileError::Parse {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn parse_instance(text: &str, path: &str) -> Result<(Instance, Vec<Warning>), FileError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| parse_error(path, e))?;
    file.into_instance(path)
}

pub fn load_instance(path: &Path) -> Result<(Instance, Vec<Warning>), FileError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| FileError::Read {
        path: name.clone(),
        source,
    })?;
    parse_instance(&text, &name)
}

pub fn instance_to_json(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceFile::from_instance(inst))
        .expect("instance records always serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn save_instance(inst: &Instance, path: &Path) -> Result<(), FileError> {
    write_text(path, &instance_to_json(inst))
}

/// One stop of a duty in a schedule file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StopRecord {
    Trip {
        trip: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        empty: bool,
    },
    Charge {
        station: String,
        first_block: usize,
        blocks: usize,
    },
}

/// Timed event with continuous SoC in percent; informational only, a
/// schedule is re-simulated from its stops when loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub kind: String,
    pub start: i32,
    pub end: i32,
    pub from: String,
    pub to: String,
    pub soc_before: f64,
    pub soc_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DutyRecord {
    pub vehicle_type: String,
    pub depot: String,
    pub cost: f64,
    pub stops: Vec<StopRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventRecord>,
    /// Grid SoC (percent) at each network node the duty visits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid_soc: Vec<f64>,
}

/// On-disk schedule layout. The discretization it was computed with is
/// recorded so the file can be re-simulated on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub block_len: i32,
    pub soc_min_percent: f64,
    pub vehicles: usize,
    pub total_cost: f64,
    pub deleted_duplicates: usize,
    pub duties: Vec<DutyRecord>,
}

fn event_name(kind: &EventKind) -> &'static str {
    match kind {
        EventKind::PullOut => "pull_out",
        EventKind::Deadhead => "deadhead",
        EventKind::Idle => "idle",
        EventKind::Trip { empty: false, .. } => "trip",
        EventKind::Trip { empty: true, .. } => "empty_trip",
        EventKind::Charge { .. } => "charge",
        EventKind::PullIn => "pull_in",
    }
}

impl ScheduleFile {
    /// `traces`, when given, must be parallel to the duties.
    pub fn from_schedule(
        inst: &Instance,
        blocks: &TimeBlocks,
        soc_min_percent: f64,
        schedule: &Schedule,
        traces: Option<&[DutyTrace]>,
    ) -> Self {
        let duties = schedule
            .duties
            .iter()
            .enumerate()
            .map(|(d, sd)| {
                let plan = &sd.plan;
                let stops = plan
                    .stops
                    .iter()
                    .map(|s| match *s {
                        Stop::Trip { trip, empty } => StopRecord::Trip {
                            trip: inst.trips[trip].id.clone(),
                            empty,
                        },
                        Stop::Charge {
                            station,
                            first_block,
                            blocks,
                        } => StopRecord::Charge {
                            station: inst.stations[station].id.clone(),
                            first_block,
                            blocks,
                        },
                    })
                    .collect();
                let trace = traces.map(|tr| &tr[d]);
                let events = trace
                    .map(|t| {
                        t.replay
                            .events
                            .iter()
                            .map(|ev| EventRecord {
                                kind: event_name(&ev.kind).into(),
                                start: ev.start,
                                end: ev.end,
                                from: inst.locations[ev.from].id.clone(),
                                to: inst.locations[ev.to].id.clone(),
                                soc_before: ev.soc_before / 10.0,
                                soc_after: ev.soc_after / 10.0,
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                DutyRecord {
                    vehicle_type: inst.vehicle_types[plan.vehicle_type].id.clone(),
                    depot: inst.depots[plan.depot].id.clone(),
                    cost: sd.cost,
                    stops,
                    events,
                    grid_soc: trace
                        .and_then(|t| t.grid.as_ref())
                        .map(|g| g.iter().map(|&(_, s)| s as f64 / 10.0).collect())
                        .unwrap_or_default(),
                }
            })
            .collect();
        ScheduleFile {
            block_len: blocks.len(),
            soc_min_percent,
            vehicles: schedule.vehicles(),
            total_cost: schedule.total_cost(),
            deleted_duplicates: schedule.deleted_duplicates,
            duties,
        }
    }

    /// Rebuilds the schedule against `inst`. Costs are taken from the file;
    /// the caller re-simulates for feasibility.
    pub fn into_schedule(&self, inst: &Instance, path: &str) -> Result<Schedule, FileError> {
        let unknown = |entity, id: &str| FileError::UnknownRef {
            path: path.into(),
            entity,
            id: id.into(),
        };
        let mut duties = Vec::new();
        let mut empty_trips = Vec::new();
        for d in &self.duties {
            let vehicle_type = inst
                .vehicle_types
                .iter()
                .position(|v| v.id == d.vehicle_type)
                .ok_or_else(|| unknown("vehicle type", &d.vehicle_type))?;
            let depot = inst
                .depots
                .iter()
                .position(|x| x.id == d.depot)
                .ok_or_else(|| unknown("depot", &d.depot))?;
            let mut stops = Vec::new();
            for s in &d.stops {
                stops.push(match s {
                    StopRecord::Trip { trip, empty } => {
                        let i = inst.trip_index(trip).ok_or_else(|| unknown("trip", trip))?;
                        if *empty {
                            empty_trips.push(i);
                        }
                        Stop::Trip {
                            trip: i,
                            empty: *empty,
                        }
                    }
                    StopRecord::Charge {
                        station,
                        first_block,
                        blocks,
                    } => Stop::Charge {
                        station: inst
                            .stations
                            .iter()
                            .position(|x| &x.id == station)
                            .ok_or_else(|| unknown("station", station))?,
                        first_block: *first_block,
                        blocks: *blocks,
                    },
                });
            }
            duties.push(ScheduledDuty {
                plan: DutyPlan {
                    vehicle_type,
                    depot,
                    stops,
                },
                cost: d.cost,
            });
        }
        Ok(Schedule {
            duties,
            empty_trips,
            deleted_duplicates: self.deleted_duplicates,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schedule records always serialize");
        s.push('\n');
        s
    }
}

pub fn load_schedule(path: &Path) -> Result<ScheduleFile, FileError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| FileError::Read {
        path: name.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| parse_error(&name, e))
}
