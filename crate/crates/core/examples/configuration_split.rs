//! A reconfiguration that merges two elementary sectors mid-flight.

use std::collections::BTreeMap;

use dcb_marl::scenario::{
    resolve_crossings, validate_scenario, ConfigurationInterval, CountingRule, DelayAssignment, FlightPlan, Scenario, Sector,
    SectorCrossing, SectorId,
};
use dcb_marl::traffic::{compute_demand, detect_hotspots};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let id = SectorId::new;
    let split = BTreeMap::from([(id("e1"), id("W")), (id("e2"), id("E"))]);
    let merged = BTreeMap::from([(id("e1"), id("C")), (id("e2"), id("C"))]);
    let flight = |name: &str, entry| FlightPlan {
        id: dcb_marl::scenario::FlightId::new(name),
        crossings: vec![
            SectorCrossing { sector: id("e1"), entry, exit: entry + 20 },
            SectorCrossing { sector: id("e2"), entry: entry + 20, exit: entry + 35 },
        ],
        max_delay: 15,
        aircraft_class: "medium".into(),
        regulatable: true,
    };
    let s = Scenario {
        sectors: vec![
            Sector { id: id("W"), capacity: 2 },
            Sector { id: id("E"), capacity: 2 },
            Sector { id: id("C"), capacity: 2 },
        ],
        timeline: vec![
            ConfigurationInterval { start: 0, end: 45, mapping: split },
            ConfigurationInterval { start: 45, end: 180, mapping: merged },
        ],
        flights: vec![flight("a", 10), flight("b", 20), flight("c", 30)],
        horizon: 180,
        period_duration: 60,
        period_step: 30,
        counting_rule: CountingRule::Overlap,
    };
    let report = validate_scenario(&s);
    assert!(report.is_empty(), "{report}");

    for f in &s.flights {
        for delay in [0, 15] {
            let parts: Vec<String> = resolve_crossings(f, delay, &s)?
                .iter()
                .map(|c| format!("{}[{},{})", c.sector.as_str(), c.entry, c.exit))
                .collect();
            println!("{} +{delay:>2}: {}", f.id.as_str(), parts.join(" "));
        }
    }

    let d = DelayAssignment::zeros();
    for (sector, period, demand, cap) in compute_demand(&s, &d)?.cells().filter(|c| c.2 > 0) {
        println!("{} [{},{}) {demand}/{cap}", sector.as_str(), period.start, period.end);
    }
    for h in detect_hotspots(&s, &d)? {
        println!("hotspot {} at {}: {:?}", h.sector.as_str(), h.period.start, h.participants);
    }
    Ok(())
}
