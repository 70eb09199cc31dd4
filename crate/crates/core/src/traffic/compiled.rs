//! Precompiled traffic model for incremental evaluation.
//!
//! Every (flight, delay) pair is resolved once into a footprint: the cells
//! (sector × period) the flight is counted in, and the presence segments
//! used for congested duration. Changing one delay then costs one footprint
//! subtraction and one addition.

use std::collections::BTreeMap;

use super::{counts_in, scenario_periods, union_measure, CountingPeriod, Hotspot, TrafficError};
use crate::scenario::{resolve_crossings, FlightId, Minute, ResolvedCrossing, Scenario, SectorId};

#[derive(Clone, Copy, Debug)]
struct Segment {
    cell: u32,
    lo: Minute,
    hi: Minute,
}

#[derive(Clone, Debug)]
pub struct TrafficModel {
    flight_ids: Vec<FlightId>,
    sector_ids: Vec<SectorId>,
    periods: Vec<CountingPeriod>,
    cell_capacity: Vec<u32>,
    max_delay: Vec<Minute>,
    /// Footprint id of `(flight, 0)`; delay `d` is at `flight_base[f] + d`.
    flight_base: Vec<usize>,
    cell_start: Vec<usize>,
    cells: Vec<u32>,
    seg_start: Vec<usize>,
    segments: Vec<Segment>,
}

impl TrafficModel {
    pub fn compile(s: &Scenario) -> Result<Self, TrafficError> {
        let periods = scenario_periods(s)?;
        let n_periods = periods.len();
        let sector_index: BTreeMap<&SectorId, usize> =
            s.sectors.iter().enumerate().map(|(i, x)| (&x.id, i)).collect();
        let cell_capacity = s
            .sectors
            .iter()
            .flat_map(|x| std::iter::repeat_n(x.capacity, n_periods))
            .collect();

        let mut model = TrafficModel {
            flight_ids: s.flights.iter().map(|f| f.id.clone()).collect(),
            sector_ids: s.sectors.iter().map(|x| x.id.clone()).collect(),
            periods,
            cell_capacity,
            max_delay: s.flights.iter().map(|f| f.effective_max_delay()).collect(),
            flight_base: Vec::with_capacity(s.flights.len()),
            cell_start: vec![0],
            cells: Vec::new(),
            seg_start: vec![0],
            segments: Vec::new(),
        };

        for f in &s.flights {
            model.flight_base.push(model.cell_start.len() - 1);
            for delay in 0..=f.effective_max_delay() {
                let mut by_sector: BTreeMap<usize, Vec<ResolvedCrossing>> = BTreeMap::new();
                for c in resolve_crossings(f, delay, s)? {
                    let idx = *sector_index
                        .get(&c.sector)
                        .ok_or_else(|| TrafficError::UnknownSector(c.sector.clone()))?;
                    by_sector.entry(idx).or_default().push(c);
                }
                for (&sector, fragments) in &by_sector {
                    let refs: Vec<&ResolvedCrossing> = fragments.iter().collect();
                    let lo_t = fragments.first().map_or(0, |c| c.entry);
                    let hi_t = fragments.last().map_or(0, |c| c.exit);
                    let touching: Vec<CountingPeriod> = model.periods_touching(lo_t, hi_t).collect();
                    for period in touching {
                        if !counts_in(s.counting_rule, &refs, &period) {
                            continue;
                        }
                        let cell = (sector * n_periods + period.index) as u32;
                        model.cells.push(cell);
                        for c in fragments {
                            let lo = c.entry.max(period.start);
                            let hi = c.exit.min(period.end);
                            if lo < hi {
                                model.segments.push(Segment { cell, lo, hi });
                            }
                        }
                    }
                }
                model.cell_start.push(model.cells.len());
                model.seg_start.push(model.segments.len());
            }
        }
        Ok(model)
    }

    fn periods_touching(&self, lo: Minute, hi: Minute) -> impl Iterator<Item = CountingPeriod> + '_ {
        self.periods
            .iter()
            .copied()
            .skip_while(move |p| p.end <= lo)
            .take_while(move |p| p.start < hi)
    }

    pub fn n_flights(&self) -> usize {
        self.flight_ids.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_capacity.len()
    }

    pub fn flight_id(&self, f: usize) -> &FlightId {
        &self.flight_ids[f]
    }

    pub fn max_delay(&self, f: usize) -> Minute {
        self.max_delay[f]
    }

    pub fn periods(&self) -> &[CountingPeriod] {
        &self.periods
    }

    fn footprint(&self, f: usize, delay: Minute) -> usize {
        debug_assert!(delay <= self.max_delay[f]);
        self.flight_base[f] + delay as usize
    }

    fn cells_of(&self, f: usize, delay: Minute) -> &[u32] {
        let k = self.footprint(f, delay);
        &self.cells[self.cell_start[k]..self.cell_start[k + 1]]
    }

    fn segments_of(&self, f: usize, delay: Minute) -> &[Segment] {
        let k = self.footprint(f, delay);
        &self.segments[self.seg_start[k]..self.seg_start[k + 1]]
    }

    fn cell_sector_period(&self, cell: u32) -> (usize, usize) {
        let n = self.periods.len();
        (cell as usize / n, cell as usize % n)
    }
}

/// Current delays and cell counts over a [`TrafficModel`].
#[derive(Clone, Debug)]
pub struct TrafficState<'m> {
    model: &'m TrafficModel,
    delays: Vec<Minute>,
    counts: Vec<u32>,
}

impl<'m> TrafficState<'m> {
    pub fn new(model: &'m TrafficModel) -> Self {
        let mut state = TrafficState {
            model,
            delays: vec![0; model.n_flights()],
            counts: vec![0; model.n_cells()],
        };
        for f in 0..model.n_flights() {
            for &c in model.cells_of(f, 0) {
                state.counts[c as usize] += 1;
            }
        }
        state
    }

    pub fn model(&self) -> &'m TrafficModel {
        self.model
    }

    pub fn delays(&self) -> &[Minute] {
        &self.delays
    }

    pub fn delay(&self, f: usize) -> Minute {
        self.delays[f]
    }

    pub fn count(&self, cell: usize) -> u32 {
        self.counts[cell]
    }

    pub fn reset(&mut self) {
        for f in 0..self.delays.len() {
            self.set_delay(f, 0);
        }
    }

    pub fn set_delay(&mut self, f: usize, delay: Minute) {
        let old = self.delays[f];
        if old == delay {
            return;
        }
        let model = self.model;
        for &c in model.cells_of(f, old) {
            self.counts[c as usize] -= 1;
        }
        for &c in model.cells_of(f, delay) {
            self.counts[c as usize] += 1;
        }
        self.delays[f] = delay;
    }

    pub fn set_all(&mut self, delays: &[Minute]) {
        for (f, &d) in delays.iter().enumerate() {
            self.set_delay(f, d);
        }
    }

    #[inline]
    pub fn is_hot(&self, cell: u32) -> bool {
        self.counts[cell as usize] > self.model.cell_capacity[cell as usize]
    }

    pub fn hotspot_total(&self) -> usize {
        (0..self.counts.len() as u32).filter(|&c| self.is_hot(c)).count()
    }

    /// Sum over cells of demand above capacity.
    pub fn excess(&self) -> u64 {
        self.counts
            .iter()
            .zip(&self.model.cell_capacity)
            .map(|(&n, &c)| n.saturating_sub(c) as u64)
            .sum()
    }

    /// True when `f` sits in at least one hotspot.
    pub fn in_hotspot(&self, f: usize) -> bool {
        self.model
            .cells_of(f, self.delays[f])
            .iter()
            .any(|&c| self.is_hot(c))
    }

    /// Recomputes hotspot membership, congested durations and the
    /// coordination graph into `out`.
    pub fn analyze(&self, out: &mut Analysis) {
        let model = self.model;
        let n = model.n_flights();
        out.prepare(n, model.n_cells());

        for f in 0..n {
            let mut hot = 0;
            for &c in model.cells_of(f, self.delays[f]) {
                if self.is_hot(c) {
                    hot += 1;
                    let members = &mut out.members[c as usize];
                    if members.is_empty() {
                        out.hot_cells.push(c);
                    }
                    members.push(f as u32);
                }
            }
            out.hotspot_count[f] = hot;
            if hot > 0 {
                out.spans.clear();
                for seg in model.segments_of(f, self.delays[f]) {
                    if self.is_hot(seg.cell) {
                        out.spans.push((seg.lo, seg.hi));
                    }
                }
                out.tdc[f] = union_measure(&mut out.spans);
            }
        }
        out.hot_cells.sort_unstable();

        out.nbr_start.push(0);
        for f in 0..n {
            if out.hotspot_count[f] > 0 {
                let stamp = f as u32 + 1;
                let begin = out.nbrs.len();
                for &c in model.cells_of(f, self.delays[f]) {
                    if !self.is_hot(c) {
                        continue;
                    }
                    for &g in &out.members[c as usize] {
                        if g as usize != f && out.mark[g as usize] != stamp {
                            out.mark[g as usize] = stamp;
                            out.nbrs.push(g);
                        }
                    }
                }
                out.nbrs[begin..].sort_unstable();
            }
            out.nbr_start.push(out.nbrs.len() as u32);
        }
    }

    /// Hotspot list in the same order as [`super::detect_hotspots`].
    pub fn hotspots(&self, analysis: &Analysis) -> Vec<Hotspot> {
        let model = self.model;
        analysis
            .hot_cells
            .iter()
            .map(|&c| {
                let (s, p) = model.cell_sector_period(c);
                Hotspot {
                    sector: model.sector_ids[s].clone(),
                    period: model.periods[p],
                    demand: self.counts[c as usize],
                    capacity: model.cell_capacity[c as usize],
                    participants: analysis.members[c as usize]
                        .iter()
                        .map(|&f| model.flight_ids[f as usize].clone())
                        .collect(),
                }
            })
            .collect()
    }
}

/// Per-step derived quantities. Buffers are reused between calls.
#[derive(Clone, Debug, Default)]
pub struct Analysis {
    pub hot_cells: Vec<u32>,
    /// Hotspots each flight takes part in.
    pub hotspot_count: Vec<u32>,
    /// Congested duration per flight.
    pub tdc: Vec<Minute>,
    nbr_start: Vec<u32>,
    nbrs: Vec<u32>,
    members: Vec<Vec<u32>>,
    mark: Vec<u32>,
    spans: Vec<(Minute, Minute)>,
}

impl Analysis {
    fn prepare(&mut self, n_flights: usize, n_cells: usize) {
        for &c in &self.hot_cells {
            self.members[c as usize].clear();
        }
        self.hot_cells.clear();
        if self.members.len() != n_cells {
            self.members = vec![Vec::new(); n_cells];
        }
        self.hotspot_count.clear();
        self.hotspot_count.resize(n_flights, 0);
        self.tdc.clear();
        self.tdc.resize(n_flights, 0);
        self.nbr_start.clear();
        self.nbrs.clear();
        self.mark.clear();
        self.mark.resize(n_flights, 0);
    }

    pub fn hotspot_total(&self) -> usize {
        self.hot_cells.len()
    }

    /// Neighbours of `f`, excluding `f`, in ascending index order.
    #[inline]
    pub fn neighbours(&self, f: usize) -> &[u32] {
        &self.nbrs[self.nbr_start[f] as usize..self.nbr_start[f + 1] as usize]
    }

    /// Neighbourhood size counting `f` itself.
    #[inline]
    pub fn neighbourhood_size(&self, f: usize) -> usize {
        self.neighbours(f).len() + 1
    }

    pub fn edge_count(&self) -> usize {
        self.nbrs.len() / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{tiny3, DelayAssignment};
    use crate::traffic::{build_graph, compute_demand, congested_durations, detect_hotspots};

    #[test]
    fn tiny3_matches_reference() {
        let s = tiny3();
        let model = TrafficModel::compile(&s).unwrap();
        let mut state = TrafficState::new(&model);
        let mut a = Analysis::default();
        state.analyze(&mut a);
        assert_eq!(a.hotspot_total(), 1);
        assert_eq!(a.tdc, vec![10, 10, 9]);
        assert_eq!(a.neighbours(0), &[1, 2]);
        assert_eq!(a.neighbourhood_size(2), 3);
        assert_eq!(
            state.hotspots(&a),
            detect_hotspots(&s, &DelayAssignment::zeros()).unwrap()
        );

        state.set_delay(2, 10);
        state.analyze(&mut a);
        assert_eq!(a.hotspot_total(), 0);
        assert_eq!(a.tdc, vec![0, 0, 0]);
        assert!(a.neighbours(0).is_empty());
        let demand = compute_demand(&s, &DelayAssignment::from_pairs([("f3", 10)])).unwrap();
        assert_eq!((state.count(0), state.count(1)), (demand.count_at(0, 0), demand.count_at(0, 1)));

        state.reset();
        assert_eq!(state.delays(), &[0, 0, 0]);
        assert_eq!(state.hotspot_total(), 1);
    }

    #[test]
    fn graph_and_tdc_match_on_generated() {
        use crate::scenario::{generate_scenario, GeneratorParams};
        let s = generate_scenario(&GeneratorParams::desk(), 11).unwrap();
        let model = TrafficModel::compile(&s).unwrap();
        let mut state = TrafficState::new(&model);
        let mut a = Analysis::default();
        let delays: Vec<Minute> = s.flights.iter().map(|f| (f.max_delay * 7 / 13) % (f.max_delay + 1)).collect();
        state.set_all(&delays);
        state.analyze(&mut a);
        let d = DelayAssignment::from_indexed(&s, &delays);
        let hot = detect_hotspots(&s, &d).unwrap();
        assert_eq!(state.hotspots(&a), hot);
        assert_eq!(a.tdc, congested_durations(&s, &d).unwrap());
        let g = build_graph(&s, &hot);
        assert_eq!(a.edge_count(), g.edges.len());
        for (i, f) in s.flights.iter().enumerate() {
            assert_eq!(a.neighbours(i).len(), g.degree(&f.id));
        }
    }
}
