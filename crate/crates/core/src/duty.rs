//! Vehicle duties as event sequences: costing and continuous-SoC replay.
//!
//! A duty is a list of [`Stop`]s between a pull-out from and a pull-in to the
//! same depot. Everything here works from the stop list alone, independent of
//! any network, so it doubles as a cross-check for network paths.

use alloc::vec::Vec;

use crate::discretization::{RoundingMode, SocGrid, TimeBlocks, SOC_FULL};
use crate::instance::{Deadhead, Instance};
use crate::{Cents, Error, Minutes, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stop {
    /// Service of a trip. `empty` marks a duplicate kept as a non-revenue run.
    Trip { trip: usize, empty: bool },
    /// Uninterrupted charging at one station over consecutive blocks.
    Charge {
        station: usize,
        first_block: usize,
        blocks: usize,
    },
}

impl Stop {
    pub fn trip(trip: usize) -> Self {
        Stop::Trip { trip, empty: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DutyPlan {
    pub vehicle_type: usize,
    pub depot: usize,
    pub stops: Vec<Stop>,
}

impl DutyPlan {
    pub fn trips(&self) -> impl Iterator<Item = usize> + '_ {
        self.stops.iter().filter_map(|s| match *s {
            Stop::Trip { trip, empty: false } => Some(trip),
            _ => None,
        })
    }

    /// All (station, block) pairs occupied by this duty.
    pub fn charge_blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.stops.iter().flat_map(|s| {
            let (station, first, n) = match *s {
                Stop::Charge {
                    station,
                    first_block,
                    blocks,
                } => (station, first_block, blocks),
                _ => (0, 0, 0),
            };
            (first..first + n).map(move |b| (station, b))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegKind {
    PullOut,
    TripToTrip,
    TripToCharge,
    ChargeToTrip,
    PullIn,
}

/// Connection between two consecutive places of a duty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub kind: LegKind,
    pub from: usize,
    pub to: usize,
    pub deadhead: Deadhead,
    /// Waiting time after the deadhead. Negative only for relaxed duties
    /// that leave a charger before the end of their last block.
    pub idle: Minutes,
    /// Time the vehicle becomes free at `from`.
    pub depart: Minutes,
}

impl Leg {
    pub fn idle_limit(&self, inst: &Instance) -> Minutes {
        match self.kind {
            LegKind::TripToTrip => inst.costs.max_idle_trip_min,
            LegKind::TripToCharge | LegKind::ChargeToTrip => inst.costs.max_idle_charge_min,
            LegKind::PullOut | LegKind::PullIn => Minutes::MAX,
        }
    }
}

fn stop_place(inst: &Instance, blocks: &TimeBlocks, s: &Stop) -> (usize, usize, Minutes, Minutes) {
    // (arrival location, departure location, start time, end time)
    match *s {
        Stop::Trip { trip, .. } => {
            let t = &inst.trips[trip];
            (t.origin, t.destination, t.begin, t.end)
        }
        Stop::Charge {
            station,
            first_block,
            blocks: n,
        } => {
            let loc = inst.stations[station].location;
            (
                loc,
                loc,
                blocks.start(first_block),
                blocks.start(first_block) + n as Minutes * blocks.len(),
            )
        }
    }
}

/// Splits a duty into legs. Fails on structurally invalid duties: no stops,
/// not starting or ending with a trip/charge as allowed, two charge stops in
/// a row, unknown deadheads, or charge blocks outside the horizon.
pub fn legs(inst: &Instance, blocks: &TimeBlocks, plan: &DutyPlan) -> Result<Vec<Leg>> {
    let depot_loc = inst.depots[plan.depot].location;
    let first = plan
        .stops
        .first()
        .ok_or_else(|| Error::Duty("duty has no stops".into()))?;
    if !matches!(first, Stop::Trip { .. }) {
        return Err(Error::Duty("duty must start with a trip".into()));
    }
    let mut out = Vec::with_capacity(plan.stops.len() + 1);
    let (o, _, begin, _) = stop_place(inst, blocks, first);
    let dh = inst.deadhead(depot_loc, o)?;
    out.push(Leg {
        kind: LegKind::PullOut,
        from: depot_loc,
        to: o,
        deadhead: dh,
        idle: 0,
        depart: begin - dh.minutes,
    });
    for w in plan.stops.windows(2) {
        let (_, from, _, end) = stop_place(inst, blocks, &w[0]);
        let (to, _, start, _) = stop_place(inst, blocks, &w[1]);
        let kind = match (&w[0], &w[1]) {
            (Stop::Trip { .. }, Stop::Trip { .. }) => LegKind::TripToTrip,
            (Stop::Trip { .. }, Stop::Charge { .. }) => LegKind::TripToCharge,
            (Stop::Charge { .. }, Stop::Trip { .. }) => LegKind::ChargeToTrip,
            (Stop::Charge { .. }, Stop::Charge { .. }) => {
                return Err(Error::Duty("consecutive charge stops".into()))
            }
        };
        let dh = inst.deadhead(from, to)?;
        out.push(Leg {
            kind,
            from,
            to,
            deadhead: dh,
            idle: start - end - dh.minutes,
            depart: end,
        });
    }
    for s in &plan.stops {
        if let Stop::Charge {
            station,
            first_block,
            blocks: n,
        } = *s
        {
            if n == 0 || first_block + n > blocks.count() || station >= inst.stations.len() {
                return Err(Error::Duty("charge stop outside the block horizon".into()));
            }
        }
    }
    let (_, d, _, end) = stop_place(inst, blocks, plan.stops.last().unwrap());
    let dh = inst.deadhead(d, depot_loc)?;
    out.push(Leg {
        kind: LegKind::PullIn,
        from: d,
        to: depot_loc,
        deadhead: dh,
        idle: 0,
        depart: end,
    });
    Ok(out)
}

/// Cost of one charging block for vehicle type `vt`: energy billed for the
/// block at the charger rate.
pub fn charge_block_cost(inst: &Instance, vt: usize, blocks: &TimeBlocks) -> Cents {
    inst.costs.energy_cost_per_kwh * inst.vehicle_types[vt].charge_kwh(blocks.len())
}

/// Cost of the movement part of a leg: deadhead distance and crew time for
/// deadheading and (non-negative) idling.
pub fn leg_cost(inst: &Instance, vt: usize, leg: &Leg) -> Cents {
    inst.vehicle_types[vt].op_cost_per_km * leg.deadhead.km
        + inst.costs.crew_cost_per_min * (leg.deadhead.minutes + leg.idle.max(0)) as f64
}

/// Total cost of a duty recomputed from its events: investment, trip
/// service, deadhead and idle time, charging energy and charge start
/// penalties.
pub fn duty_cost(inst: &Instance, blocks: &TimeBlocks, plan: &DutyPlan) -> Result<Cents> {
    let vt = plan.vehicle_type;
    let mut cost = inst.vehicle_types[vt].invest_cost;
    for leg in legs(inst, blocks, plan)? {
        cost += leg_cost(inst, vt, &leg);
    }
    for s in &plan.stops {
        match *s {
            Stop::Trip { trip, .. } => cost += inst.trip_cost(vt, trip),
            Stop::Charge { blocks: n, .. } => {
                cost += inst.costs.charge_start_penalty
                    + n as f64 * charge_block_cost(inst, vt, blocks);
            }
        }
    }
    Ok(cost)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    PullOut,
    Deadhead,
    Idle,
    Trip { trip: usize, empty: bool },
    Charge { station: usize, block: usize },
    PullIn,
}

/// One timed event with continuous SoC before and after (tenths of a percent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub start: Minutes,
    pub end: Minutes,
    pub from: usize,
    pub to: usize,
    pub km: f64,
    pub soc_before: f64,
    pub soc_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Continuous SoC fell below the floor at the end of event `event`.
    SocBelowMin {
        event: usize,
        soc: f64,
    },
    /// The vehicle arrives after the next stop starts.
    Late {
        leg: usize,
        by: Minutes,
    },
    DeadheadTooLong {
        leg: usize,
        minutes: Minutes,
    },
    IdleTooLong {
        leg: usize,
        minutes: Minutes,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub events: Vec<Event>,
    pub min_soc: f64,
    pub violations: Vec<Violation>,
}

/// Replays a duty with continuous SoC: start full, subtract trip, deadhead
/// and idle energy, add the charger gain per block (capped at 100%). Every
/// event end is checked against `s_min` (tenths of a percent); timing rules
/// are checked per leg.
pub fn replay(inst: &Instance, blocks: &TimeBlocks, plan: &DutyPlan, s_min: f64) -> Result<Replay> {
    const TOL: f64 = 1e-6;
    let vt = &inst.vehicle_types[plan.vehicle_type];
    let legs = legs(inst, blocks, plan)?;
    let mut events: Vec<Event> = Vec::new();
    let mut violations = Vec::new();
    let mut soc = SOC_FULL as f64;
    let mut min_soc = soc;
    let push = |events: &mut Vec<Event>, violations: &mut Vec<Violation>, e: Event| {
        if e.soc_after < s_min - TOL {
            violations.push(Violation::SocBelowMin {
                event: events.len(),
                soc: e.soc_after,
            });
        }
        events.push(e);
    };

    for (li, leg) in legs.iter().enumerate() {
        if leg.deadhead.minutes > inst.costs.max_deadhead_min {
            violations.push(Violation::DeadheadTooLong {
                leg: li,
                minutes: leg.deadhead.minutes,
            });
        }
        if leg.idle < 0 {
            violations.push(Violation::Late {
                leg: li,
                by: -leg.idle,
            });
        } else if leg.idle > leg.idle_limit(inst) {
            violations.push(Violation::IdleTooLong {
                leg: li,
                minutes: leg.idle,
            });
        }
        let dh_soc = vt.soc_tenths(vt.drive_kwh(leg.deadhead.km));
        let kind = if leg.kind == LegKind::PullOut {
            EventKind::PullOut
        } else if leg.kind == LegKind::PullIn {
            EventKind::PullIn
        } else {
            EventKind::Deadhead
        };
        let before = soc;
        soc -= dh_soc;
        let e = Event {
            kind,
            start: leg.depart,
            end: leg.depart + leg.deadhead.minutes,
            from: leg.from,
            to: leg.to,
            km: leg.deadhead.km,
            soc_before: before,
            soc_after: soc,
        };
        push(&mut events, &mut violations, e);
        if leg.idle > 0 {
            let before = soc;
            soc -= vt.soc_tenths(vt.idle_kwh(leg.idle));
            let start = leg.depart + leg.deadhead.minutes;
            push(
                &mut events,
                &mut violations,
                Event {
                    kind: EventKind::Idle,
                    start,
                    end: start + leg.idle,
                    from: leg.to,
                    to: leg.to,
                    km: 0.0,
                    soc_before: before,
                    soc_after: soc,
                },
            );
        }
        min_soc = min_soc.min(soc);
        if li + 1 == legs.len() {
            break;
        }
        match plan.stops[li] {
            Stop::Trip { trip, empty } => {
                let t = &inst.trips[trip];
                let before = soc;
                soc -= vt.soc_tenths(vt.drive_kwh(t.distance_km));
                push(
                    &mut events,
                    &mut violations,
                    Event {
                        kind: EventKind::Trip { trip, empty },
                        start: t.begin,
                        end: t.end,
                        from: t.origin,
                        to: t.destination,
                        km: t.distance_km,
                        soc_before: before,
                        soc_after: soc,
                    },
                );
            }
            Stop::Charge {
                station,
                first_block,
                blocks: n,
            } => {
                let gain = vt.soc_tenths(vt.charge_kwh(blocks.len()));
                let loc = inst.stations[station].location;
                for b in first_block..first_block + n {
                    let before = soc;
                    soc = (soc + gain).min(SOC_FULL as f64);
                    events.push(Event {
                        kind: EventKind::Charge { station, block: b },
                        start: blocks.start(b),
                        end: blocks.end(b),
                        from: loc,
                        to: loc,
                        km: 0.0,
                        soc_before: before,
                        soc_after: soc,
                    });
                }
            }
        }
        min_soc = min_soc.min(soc);
    }
    Ok(Replay {
        events,
        min_soc,
        violations,
    })
}

/// SoC bookkeeping of a duty under conservative rounding: for every node the
/// raw value reached from the previous grid value and its rounded grid value.
/// `None` when the duty is not representable on the grid (some rounding
/// falls below the floor).
pub fn grid_trace(
    inst: &Instance,
    blocks: &TimeBlocks,
    grid: &SocGrid,
    plan: &DutyPlan,
) -> Result<Option<Vec<(f64, i32)>>> {
    let vt = &inst.vehicle_types[plan.vehicle_type];
    let legs = legs(inst, blocks, plan)?;
    let mode = RoundingMode::Conservative;
    let gain = vt.soc_tenths(vt.charge_kwh(blocks.len()));
    let mut out = Vec::new();
    let mut s = grid.s_full() as f64;
    for (li, leg) in legs.iter().enumerate().take(legs.len() - 1) {
        let mut tau = vt.soc_tenths(vt.drive_kwh(leg.deadhead.km));
        if leg.kind != LegKind::PullOut {
            tau += vt.soc_tenths(vt.idle_kwh(leg.idle.max(0)));
        }
        let raw = s - tau;
        let Some(g) = grid.round(mode, raw) else {
            return Ok(None);
        };
        out.push((raw, g));
        s = g as f64;
        match plan.stops[li] {
            Stop::Trip { trip, .. } => {
                s -= vt.soc_tenths(inst.trip_kwh(plan.vehicle_type, trip));
            }
            Stop::Charge { blocks: n, .. } => {
                for k in 0..n {
                    let raw = (s + gain).min(SOC_FULL as f64);
                    if k + 1 == n {
                        s = raw;
                    } else {
                        let Some(g) = grid.round(mode, raw) else {
                            return Ok(None);
                        };
                        out.push((raw, g));
                        s = g as f64;
                    }
                }
            }
        }
    }
    Ok(Some(out))
}
