use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::scenario::{DelayAssignment, Minute, Scenario};
use crate::traffic::detect_hotspots;

/// Delays at or below this many minutes count as no delay.
pub const NO_DELAY_THRESHOLD: Minute = 4;

/// Sum of delays above the threshold divided by the number of flights.
pub fn regulated_average_delay(delays: &[Minute]) -> f64 {
    if delays.is_empty() {
        return 0.0;
    }
    let sum: u64 = delays
        .iter()
        .filter(|&&d| d > NO_DELAY_THRESHOLD)
        .map(|&d| d as u64)
        .sum();
    sum as f64 / delays.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive bounds in minutes.
    pub lo: Minute,
    pub hi: Minute,
    pub count: usize,
}

/// `[5,9]`, `[10,29]`, `[30,59]`, then 30-minute bins until `max_delay` is covered.
pub fn histogram_bins(max_delay: Minute) -> Vec<(Minute, Minute)> {
    let mut bins = vec![(5, 9), (10, 29), (30, 59)];
    let mut lo = 60;
    while lo <= max_delay {
        bins.push((lo, lo + 29));
        lo += 30;
    }
    bins
}

pub fn delay_histogram(delays: &[Minute], max_delay: Minute) -> Vec<HistogramBin> {
    let mut bins: Vec<HistogramBin> = histogram_bins(max_delay.max(delays.iter().copied().max().unwrap_or(0)))
        .into_iter()
        .map(|(lo, hi)| HistogramBin { lo, hi, count: 0 })
        .collect();
    for &d in delays.iter().filter(|&&d| d > NO_DELAY_THRESHOLD) {
        if let Some(b) = bins.iter_mut().find(|b| b.lo <= d && d <= b.hi) {
            b.count += 1;
        }
    }
    bins
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub avg_delay: f64,
    pub regulated_flights: usize,
    pub remaining_hotspots: usize,
    /// Raw sum of all delays, the threshold not applied.
    pub total_delay: u64,
    pub histogram: Vec<HistogramBin>,
}

pub fn run_metrics(s: &Scenario, solution: &DelayAssignment) -> Result<RunMetrics, ExperimentError> {
    solution.check_feasible(s)?;
    let delays = solution.to_indexed(s);
    let hotspots = detect_hotspots(s, solution)?;
    Ok(RunMetrics {
        avg_delay: regulated_average_delay(&delays),
        regulated_flights: delays.iter().filter(|&&d| d > NO_DELAY_THRESHOLD).count(),
        remaining_hotspots: hotspots.len(),
        total_delay: delays.iter().map(|&d| d as u64).sum(),
        histogram: delay_histogram(&delays, s.max_delay()),
    })
}

/// Average delay scaled by the share of hotspot flights that got delayed.
pub fn degree_of_difficulty(
    avg_delay: f64,
    flights_with_delay: usize,
    flights_in_hotspots: usize,
) -> Result<f64, ExperimentError> {
    if flights_in_hotspots == 0 {
        return Err(ExperimentError::UndefinedDifficulty);
    }
    Ok(avg_delay * flights_with_delay as f64 / flights_in_hotspots as f64)
}
