//! A desk-scale scenario: calibration, coordination graph and a greedy witness.

use dcb_marl::experiments::run_metrics;
use dcb_marl::scenario::{generate_scenario, greedy_witness, DelayAssignment, GeneratorParams};
use dcb_marl::traffic::{build_graph, detect_hotspots};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(0), |a| a.parse())?;
    let s = generate_scenario(&GeneratorParams::desk(), seed)?;
    let zero = DelayAssignment::zeros();
    let hotspots = detect_hotspots(&s, &zero)?;
    let stats = build_graph(&s, &hotspots).degree_stats();
    println!("{} flights, {} sectors, {} hotspots", s.flights.len(), s.sectors.len(), hotspots.len());
    println!(
        "graph: {} agents coordinate, degree {}..{} mean {:.2}",
        stats.non_isolated, stats.min, stats.max, stats.mean_non_isolated
    );
    if let Some(delays) = greedy_witness(&s)? {
        let m = run_metrics(&s, &DelayAssignment::from_indexed(&s, &delays))?;
        println!(
            "witness: {} hotspots, {} regulated flights, avg delay {:.3}",
            m.remaining_hotspots, m.regulated_flights, m.avg_delay
        );
    }
    if let Some(path) = std::env::args().nth(2) {
        s.save(&path)?;
    }
    Ok(())
}
