//! CSV and text reports.

use std::fmt::Write;

use evsp_core::colgen::ColgenLog;
use evsp_core::instance::Instance;
use evsp_core::network::{ArcFamily, NetworkKey, NetworkStats};
use evsp_core::schedule::{OccupancyRow, Summary, Verdict};

use crate::run::RunRow;

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

/// One row per colgen iteration: `It` iteration, `PP` pricing seconds,
/// `RMP` master seconds, then the master value and bound.
pub fn log_csv(log: &ColgenLog) -> String {
    let mut s = String::from("It,phase,PP,RMP,z,best_rc,lagrangian_lb,columns_added,pool_size\n");
    for e in &log.entries {
        writeln!(
            s,
            "{},{},{:.6},{:.6},{},{},{},{},{}",
            e.iter,
            e.phase,
            e.pricing_secs,
            e.lp_secs,
            e.z,
            opt(e.best_rc),
            opt(e.lagrangian_lb),
            e.columns_added,
            e.pool_size
        )
        .unwrap();
    }
    s
}

/// Header plus the single run row: time, iterations, mean pricing and
/// master time per iteration, solution value, bound, gap in percent, buses.
pub fn run_csv(row: &RunRow) -> String {
    format!(
        "Time,It,PP,RMP,Sol,LB,G,B\n{:.3},{},{:.6},{:.6},{:.2},{},{},{}\n",
        row.time,
        row.it,
        row.pp,
        row.rmp,
        row.sol,
        row.lb.map(|v| format!("{v:.2}")).unwrap_or_default(),
        row.g.map(|v| format!("{v:.3}")).unwrap_or_default(),
        row.b
    )
}

pub fn occupancy_csv(inst: &Instance, rows: &[OccupancyRow]) -> String {
    let mut s = String::from("station,block,block_start,vehicles,capacity\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            inst.stations[r.station].id, r.block, r.block_start, r.vehicles, r.capacity
        )
        .unwrap();
    }
    s
}

pub fn summary_text(summary: &Summary) -> String {
    let min = summary.min_soc.iter().copied().reduce(f64::min);
    let avg = if summary.min_soc.is_empty() {
        None
    } else {
        Some(summary.min_soc.iter().sum::<f64>() / summary.min_soc.len() as f64)
    };
    let pct = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.1}%"));
    format!(
        "vehicles: {}\ntotal cost: {:.2}\navg charge minutes per duty: {:.1}\n\
         avg deadhead minutes per duty: {:.1}\navg idle minutes per duty: {:.1}\n\
         avg discarded SoC per duty: {:.1} points\nlowest continuous SoC: {}\n\
         avg per-duty minimum SoC: {}\nempty trips: {}\n",
        summary.vehicles,
        summary.total_cost,
        summary.avg_charge_minutes,
        summary.avg_deadhead_minutes,
        summary.avg_idle_minutes,
        summary.avg_discarded_soc,
        pct(min),
        pct(avg),
        summary.empty_trips
    )
}

pub fn verdict_text(inst: &Instance, verdict: &Verdict) -> String {
    if verdict.feasible {
        return "feasible\n".into();
    }
    let mut s = String::from("infeasible\n");
    for (d, v) in &verdict.duty_violations {
        writeln!(s, "  duty {d}: {v:?}").unwrap();
    }
    for r in &verdict.capacity_violations {
        writeln!(
            s,
            "  station {} block {} (t={}): {} vehicles, capacity {}",
            inst.stations[r.station].id, r.block, r.block_start, r.vehicles, r.capacity
        )
        .unwrap();
    }
    for &i in &verdict.uncovered {
        writeln!(s, "  trip {} not covered", inst.trips[i].id).unwrap();
    }
    s
}

/// Node and arc counts per network and arc family.
pub fn network_stats_csv(inst: &Instance, stats: &[(NetworkKey, NetworkStats)]) -> String {
    let mut s = String::from("vehicle_type,depot,trip_nodes,charge_nodes,arcs");
    for f in ArcFamily::ALL {
        write!(s, ",{}", f.name()).unwrap();
    }
    s.push('\n');
    for (k, st) in stats {
        write!(
            s,
            "{},{},{},{},{}",
            inst.vehicle_types[k.vehicle_type].id,
            inst.depots[k.depot].id,
            st.trip_nodes,
            st.charge_nodes,
            st.arcs()
        )
        .unwrap();
        for c in st.arcs_by_family {
            write!(s, ",{c}").unwrap();
        }
        s.push('\n');
    }
    s
}
