//! Turning selected columns into a vehicle schedule, repairing trips that
//! are covered more than once, and checking the result with continuous SoC
//! and charger occupancy.

use alloc::vec;
use alloc::vec::Vec;

use crate::discretization::{SocGrid, TimeBlocks};
use crate::duty::{
    duty_cost, grid_trace, legs, replay, DutyPlan, EventKind, Replay, Stop, Violation,
};
use crate::instance::Instance;
use crate::{Cents, Minutes, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledDuty {
    pub plan: DutyPlan,
    pub cost: Cents,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    pub duties: Vec<ScheduledDuty>,
    /// Duplicate trips that could not be deleted and are driven without
    /// passengers.
    pub empty_trips: Vec<usize>,
    /// Duplicate trips deleted from a duty.
    pub deleted_duplicates: usize,
}

impl Schedule {
    /// Number of vehicles.
    pub fn vehicles(&self) -> usize {
        self.duties.len()
    }

    pub fn total_cost(&self) -> Cents {
        self.duties.iter().map(|d| d.cost).sum()
    }
}

fn has_revenue_trip(plan: &DutyPlan) -> bool {
    plan.trips().next().is_some()
}

/// Plan without the revenue stop of `trip`, with its cost, if that plan is
/// still a feasible duty. `Some(None)` means the duty becomes pointless and
/// can be dropped.
fn without_trip(
    inst: &Instance,
    blocks: &TimeBlocks,
    s_min: f64,
    plan: &DutyPlan,
    trip: usize,
) -> Option<Option<(DutyPlan, Cents)>> {
    let mut p = plan.clone();
    let k = p.stops.iter().position(|s| *s == Stop::trip(trip))?;
    p.stops.remove(k);
    if !has_revenue_trip(&p) {
        return Some(None);
    }
    let r = replay(inst, blocks, &p, s_min).ok()?;
    if !r.violations.is_empty() {
        return None;
    }
    let c = duty_cost(inst, blocks, &p).ok()?;
    Some(Some((p, c)))
}

/// Builds the schedule of the selected duties. A trip served by several
/// duties stays in the one where deleting it would save least; elsewhere it
/// is deleted when the shortened duty stays feasible, and otherwise kept as
/// an empty run. Duties left without revenue trips are dropped.
pub fn realize(
    inst: &Instance,
    blocks: &TimeBlocks,
    s_min: f64,
    plans: Vec<DutyPlan>,
) -> Result<Schedule> {
    let mut duties: Vec<Option<ScheduledDuty>> = Vec::with_capacity(plans.len());
    for plan in plans {
        let cost = duty_cost(inst, blocks, &plan)?;
        duties.push(Some(ScheduledDuty { plan, cost }));
    }
    let mut empty_trips = Vec::new();
    let mut deleted = 0;
    for trip in 0..inst.trips.len() {
        let holders: Vec<usize> = (0..duties.len())
            .filter(|&d| {
                duties[d]
                    .as_ref()
                    .is_some_and(|x| x.plan.trips().any(|t| t == trip))
            })
            .collect();
        if holders.len() < 2 {
            continue;
        }
        let options: Vec<(usize, Option<Option<(DutyPlan, Cents)>>, f64)> = holders
            .iter()
            .map(|&d| {
                let cur = duties[d].as_ref().unwrap();
                let opt = without_trip(inst, blocks, s_min, &cur.plan, trip);
                let saving = match &opt {
                    None => f64::NEG_INFINITY,
                    Some(None) => cur.cost,
                    Some(Some((_, c))) => cur.cost - c,
                };
                (d, opt, saving)
            })
            .collect();
        let keep = options
            .iter()
            .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
            .map(|o| o.0)
            .unwrap();
        for (d, opt, _) in options {
            if d == keep {
                continue;
            }
            match opt {
                Some(None) => {
                    duties[d] = None;
                    deleted += 1;
                }
                Some(Some((plan, cost))) => {
                    duties[d] = Some(ScheduledDuty { plan, cost });
                    deleted += 1;
                }
                None => {
                    let duty = duties[d].as_mut().unwrap();
                    for s in &mut duty.plan.stops {
                        if *s == Stop::trip(trip) {
                            *s = Stop::Trip { trip, empty: true };
                        }
                    }
                    empty_trips.push(trip);
                }
            }
        }
    }
    Ok(Schedule {
        duties: duties.into_iter().flatten().collect(),
        empty_trips,
        deleted_duplicates: deleted,
    })
}

/// Continuous replay of one duty plus grid bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DutyTrace {
    pub replay: Replay,
    /// Raw and rounded SoC at each grid rounding point, when a grid is given
    /// and the duty is representable on it.
    pub grid: Option<Vec<(f64, i32)>>,
    /// SoC given up by rounding down, summed over rounding points (tenths).
    pub discarded_soc: f64,
    pub charge_minutes: Minutes,
    pub deadhead_minutes: Minutes,
    pub idle_minutes: Minutes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupancyRow {
    pub station: usize,
    pub block: usize,
    pub block_start: Minutes,
    pub vehicles: u32,
    pub capacity: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Verdict {
    pub feasible: bool,
    /// (duty index, violation) pairs from the continuous replay.
    pub duty_violations: Vec<(usize, Violation)>,
    /// Charger blocks with more vehicles than chargers.
    pub capacity_violations: Vec<OccupancyRow>,
    /// Trips no duty serves.
    pub uncovered: Vec<usize>,
}

/// Replays every duty and checks SoC, timing, coverage and charger
/// occupancy. `s_min` is in tenths of a percent.
pub fn simulate(
    inst: &Instance,
    blocks: &TimeBlocks,
    s_min: f64,
    grid: Option<&SocGrid>,
    schedule: &Schedule,
) -> Result<(Vec<DutyTrace>, Verdict)> {
    let mut traces = Vec::with_capacity(schedule.duties.len());
    let mut verdict = Verdict::default();
    for (d, duty) in schedule.duties.iter().enumerate() {
        let r = replay(inst, blocks, &duty.plan, s_min)?;
        for v in &r.violations {
            verdict.duty_violations.push((d, v.clone()));
        }
        let g = match grid {
            Some(g) => grid_trace(inst, blocks, g, &duty.plan)?,
            None => None,
        };
        let discarded_soc = g
            .as_ref()
            .map_or(0.0, |t| t.iter().map(|&(raw, s)| raw - s as f64).sum());
        let mut charge_minutes = 0;
        for e in &r.events {
            if let EventKind::Charge { .. } = e.kind {
                charge_minutes += e.end - e.start;
            }
        }
        let mut deadhead_minutes = 0;
        let mut idle_minutes = 0;
        for leg in legs(inst, blocks, &duty.plan)? {
            deadhead_minutes += leg.deadhead.minutes;
            idle_minutes += leg.idle.max(0);
        }
        traces.push(DutyTrace {
            replay: r,
            grid: g,
            discarded_soc,
            charge_minutes,
            deadhead_minutes,
            idle_minutes,
        });
    }
    verdict.capacity_violations = occupancy(inst, blocks, schedule)
        .into_iter()
        .filter(|r| r.vehicles > r.capacity)
        .collect();
    let mut served = vec![false; inst.trips.len()];
    for duty in &schedule.duties {
        for t in duty.plan.trips() {
            served[t] = true;
        }
    }
    verdict.uncovered = (0..served.len()).filter(|&i| !served[i]).collect();
    verdict.feasible = verdict.duty_violations.is_empty()
        && verdict.capacity_violations.is_empty()
        && verdict.uncovered.is_empty();
    Ok((traces, verdict))
}

/// Vehicles charging per station and block, for every station and block.
pub fn occupancy(inst: &Instance, blocks: &TimeBlocks, schedule: &Schedule) -> Vec<OccupancyRow> {
    let nb = blocks.count();
    let mut count = vec![0u32; inst.stations.len() * nb];
    for duty in &schedule.duties {
        for (r, b) in duty.plan.charge_blocks() {
            if r < inst.stations.len() && b < nb {
                count[r * nb + b] += 1;
            }
        }
    }
    let mut rows = Vec::with_capacity(count.len());
    for (r, st) in inst.stations.iter().enumerate() {
        for b in 0..nb {
            rows.push(OccupancyRow {
                station: r,
                block: b,
                block_start: blocks.start(b),
                vehicles: count[r * nb + b],
                capacity: st.capacity,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub vehicles: usize,
    pub total_cost: Cents,
    pub avg_charge_minutes: f64,
    pub avg_deadhead_minutes: f64,
    pub avg_idle_minutes: f64,
    /// Percentage points.
    pub avg_discarded_soc: f64,
    /// Minimum continuous SoC per duty, in percent.
    pub min_soc: Vec<f64>,
    pub empty_trips: usize,
}

pub fn summarize(schedule: &Schedule, traces: &[DutyTrace]) -> Summary {
    let n = traces.len().max(1) as f64;
    let avg = |f: &dyn Fn(&DutyTrace) -> f64| traces.iter().map(f).sum::<f64>() / n;
    Summary {
        vehicles: schedule.vehicles(),
        total_cost: schedule.total_cost(),
        avg_charge_minutes: avg(&|t| t.charge_minutes as f64),
        avg_deadhead_minutes: avg(&|t| t.deadhead_minutes as f64),
        avg_idle_minutes: avg(&|t| t.idle_minutes as f64),
        avg_discarded_soc: avg(&|t| t.discarded_soc / 10.0),
        min_soc: traces.iter().map(|t| t.replay.min_soc / 10.0).collect(),
        empty_trips: schedule.empty_trips.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_trip_instance;

    fn blocks() -> TimeBlocks {
        TimeBlocks::new(360, 600, 5).unwrap()
    }

    fn plan(stops: Vec<Stop>) -> DutyPlan {
        DutyPlan {
            vehicle_type: 0,
            depot: 0,
            stops,
        }
    }

    #[test]
    fn disjoint_duties_keep_their_cost() {
        let (inst, _) = two_trip_instance().unwrap();
        let plans = vec![plan(vec![Stop::trip(0)]), plan(vec![Stop::trip(1)])];
        let expect: f64 = plans
            .iter()
            .map(|p| duty_cost(&inst, &blocks(), p).unwrap())
            .sum();
        let s = realize(&inst, &blocks(), 220.0, plans).unwrap();
        assert_eq!(s.vehicles(), 2);
        assert!((s.total_cost() - expect).abs() < 1e-9);
        let (_, v) = simulate(&inst, &blocks(), 220.0, None, &s).unwrap();
        assert!(v.feasible);
    }

    #[test]
    fn duplicate_is_deleted_and_cost_does_not_rise() {
        let (inst, _) = two_trip_instance().unwrap();
        let plans = vec![
            plan(vec![Stop::trip(0), Stop::trip(1)]),
            plan(vec![Stop::trip(1)]),
        ];
        let before: f64 = plans
            .iter()
            .map(|p| duty_cost(&inst, &blocks(), p).unwrap())
            .sum();
        let s = realize(&inst, &blocks(), 220.0, plans).unwrap();
        assert!(s.total_cost() <= before + 1e-9);
        assert_eq!(s.vehicles(), 1);
        assert_eq!(s.deleted_duplicates, 1);
    }

    #[test]
    fn simultaneous_charges_overload_a_single_charger() {
        let (inst, _) = two_trip_instance().unwrap();
        let ch = Stop::Charge {
            station: 0,
            first_block: 22,
            blocks: 2,
        };
        let s = Schedule {
            duties: vec![
                ScheduledDuty {
                    plan: plan(vec![Stop::trip(0), ch]),
                    cost: 0.0,
                },
                ScheduledDuty {
                    plan: plan(vec![Stop::trip(1)]),
                    cost: 0.0,
                },
                ScheduledDuty {
                    plan: plan(vec![Stop::trip(0), ch]),
                    cost: 0.0,
                },
            ],
            ..Schedule::default()
        };
        let (_, v) = simulate(&inst, &blocks(), 220.0, None, &s).unwrap();
        assert!(!v.feasible);
        let blocks_hit: Vec<usize> = v.capacity_violations.iter().map(|r| r.block).collect();
        assert_eq!(blocks_hit, vec![22, 23]);
        let occ = occupancy(&inst, &blocks(), &s);
        let total: u32 = occ.iter().map(|r| r.vehicles).sum();
        assert_eq!(total, 4);
    }

    #[test]
    fn too_long_trip_is_a_soc_violation() {
        let (mut inst, _) = two_trip_instance().unwrap();
        inst.trips[0].distance_km = 200.0;
        let s = Schedule {
            duties: vec![
                ScheduledDuty {
                    plan: plan(vec![Stop::trip(0)]),
                    cost: 0.0,
                },
                ScheduledDuty {
                    plan: plan(vec![Stop::trip(1)]),
                    cost: 0.0,
                },
            ],
            ..Schedule::default()
        };
        let (_, v) = simulate(&inst, &blocks(), 220.0, None, &s).unwrap();
        assert!(!v.feasible);
        assert!(v
            .duty_violations
            .iter()
            .any(|(d, x)| *d == 0 && matches!(x, Violation::SocBelowMin { .. })));
    }

    #[test]
    fn no_charging_means_empty_occupancy() {
        let (inst, _) = two_trip_instance().unwrap();
        let s = realize(
            &inst,
            &blocks(),
            220.0,
            vec![plan(vec![Stop::trip(0), Stop::trip(1)])],
        )
        .unwrap();
        assert!(occupancy(&inst, &blocks(), &s)
            .iter()
            .all(|r| r.vehicles == 0));
    }
}
