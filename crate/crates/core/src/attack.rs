//! User-id reconstruction: trip concatenation, home-location assignment and
//! the orchestration of all stages including TF-IDF refinement.
//!
//! Nothing in here reads ground-truth labels.

use std::collections::{BTreeSet, HashMap, HashSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{dissolve_cells, CellId, GridSpec, Zone};
use crate::lcss::PreparedTrack;
use crate::model::{hours, trips_overlap_in_time, AttackParams, ClusterAssignment, Trip, TripDataset, TripId, UserId};
use crate::refine::{refine_clusters, RefineOutcome};

/// `earlier` ends where `later` starts, `gap_h` hours before it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatLink {
    pub earlier: TripId,
    pub later: TripId,
    pub shared_cell: CellId,
    pub gap_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomeLocation {
    pub zone: Zone,
    pub assigned: BTreeSet<TripId>,
    /// Trips assigned without a double match; always a subset of `assigned`.
    pub uniquely_assigned: BTreeSet<TripId>,
}

impl HomeLocation {
    pub fn new(zone: Zone) -> Self {
        Self {
            zone,
            assigned: BTreeSet::new(),
            uniquely_assigned: BTreeSet::new(),
        }
    }
}

/// Grid cell and time of both ends of every trip, indexed like `ds.trips()`.
struct Endpoints<'a> {
    trips: Vec<&'a Trip>,
    start_cell: Vec<CellId>,
    end_cell: Vec<CellId>,
}

impl<'a> Endpoints<'a> {
    fn new(ds: &'a TripDataset, grid: &GridSpec) -> Result<Self> {
        let trips: Vec<&Trip> = ds.trips().collect();
        let mut start_cell = Vec::with_capacity(trips.len());
        let mut end_cell = Vec::with_capacity(trips.len());
        for t in &trips {
            start_cell.push(grid.cell_of(t.start_point())?);
            end_cell.push(grid.cell_of(t.end_point())?);
        }
        Ok(Self {
            trips,
            start_cell,
            end_cell,
        })
    }

    fn index_by_cell(&self, starts: bool) -> HashMap<CellId, Vec<(DateTime<Utc>, usize)>> {
        let mut map: HashMap<CellId, Vec<(DateTime<Utc>, usize)>> = HashMap::new();
        for (i, t) in self.trips.iter().enumerate() {
            let (cell, time) = if starts {
                (self.start_cell[i], t.start_time())
            } else {
                (self.end_cell[i], t.end_time())
            };
            map.entry(cell).or_default().push((time, i));
        }
        for v in map.values_mut() {
            v.sort();
        }
        map
    }
}

/// Events in `sorted` whose time lies in `[lo, hi]` (inclusive) or, when
/// `open_lo`, in `(lo, hi]`.
fn in_window(
    sorted: &[(DateTime<Utc>, usize)],
    lo: DateTime<Utc>,
    hi: DateTime<Utc>,
    open_lo: bool,
) -> &[(DateTime<Utc>, usize)] {
    let a = if open_lo {
        sorted.partition_point(|(t, _)| *t <= lo)
    } else {
        sorted.partition_point(|(t, _)| *t < lo)
    };
    let b = sorted.partition_point(|(t, _)| *t <= hi);
    if a >= b {
        &[]
    } else {
        &sorted[a..b]
    }
}

/// Link trip A to trip B when B is the only trip leaving A's end cell within
/// `(t, t + h_concat]` of A's arrival `t`, and no other trip arrives at that
/// cell inside the concatenation window around `t`. A trip that would
/// receive links from several predecessors receives none.
pub fn concatenate_trips(ds: &TripDataset, params: &AttackParams) -> Result<Vec<ConcatLink>> {
    let grid = GridSpec::new(params.bbox, params.s_cell_m)?;
    let ep = Endpoints::new(ds, &grid)?;
    concatenate(&ep, params)
}

fn concatenate(ep: &Endpoints<'_>, params: &AttackParams) -> Result<Vec<ConcatLink>> {
    let departures = ep.index_by_cell(true);
    let arrivals = ep.index_by_cell(false);
    let mut raw: Vec<(usize, usize)> = Vec::new();
    for (a, trip) in ep.trips.iter().enumerate() {
        let cell = ep.end_cell[a];
        let t = trip.end_time();
        let Some(deps) = departures.get(&cell) else {
            continue;
        };
        let mut cands = in_window(deps, t, t + hours(params.h_concat), true)
            .iter()
            .filter(|(_, i)| *i != a);
        let (Some(&(_, b)), None) = (cands.next(), cands.next()) else {
            continue;
        };
        let (lo, hi) = params.concat_window.around(t);
        let crowded = arrivals
            .get(&cell)
            .map(|arr| in_window(arr, lo, hi, false).iter().any(|(_, i)| *i != a))
            .unwrap_or(false);
        if !crowded {
            raw.push((a, b));
        }
    }

    let mut incoming: HashMap<usize, usize> = HashMap::new();
    for &(_, b) in &raw {
        *incoming.entry(b).or_default() += 1;
    }
    Ok(raw
        .into_iter()
        .filter(|(_, b)| incoming[b] == 1)
        .map(|(a, b)| {
            let (ta, tb) = (ep.trips[a], ep.trips[b]);
            ConcatLink {
                earlier: ta.id().clone(),
                later: tb.id().clone(),
                shared_cell: ep.end_cell[a],
                gap_h: (tb.start_time() - ta.end_time()).num_milliseconds() as f64 / 3_600_000.0,
            }
        })
        .collect())
}

/// Chains of linked trips, each in travel order; every trip of `ds` is in
/// exactly one chain. Chains are ordered by the id of their first trip.
pub fn chains(ds: &TripDataset, links: &[ConcatLink]) -> Vec<Vec<TripId>> {
    let next: HashMap<&TripId, &TripId> = links.iter().map(|l| (&l.earlier, &l.later)).collect();
    let has_prev: HashSet<&TripId> = links.iter().map(|l| &l.later).collect();
    let mut out = Vec::new();
    for id in ds.trip_ids() {
        if has_prev.contains(id) {
            continue;
        }
        let mut chain = vec![id.clone()];
        let mut cur = id;
        while let Some(n) = next.get(cur) {
            chain.push((*n).clone());
            cur = n;
        }
        out.push(chain);
    }
    out
}

/// Cells that host at least one qualifying home event, dissolved into zones.
///
/// A morning event is a trip start inside `t_morning` (local clock) with no
/// other trip starting in the same cell within `morning_window` of it. An
/// evening event is a trip end inside `t_evening` with no other trip ending
/// in the same cell within `evening_window` of it.
pub fn find_hl_candidates(ds: &TripDataset, params: &AttackParams) -> Result<Vec<HomeLocation>> {
    let grid = GridSpec::new(params.bbox, params.s_cell_m)?;
    let ep = Endpoints::new(ds, &grid)?;
    Ok(hl_candidates(&ep, params))
}

fn hl_candidates(ep: &Endpoints<'_>, params: &AttackParams) -> Vec<HomeLocation> {
    let starts = ep.index_by_cell(true);
    let ends = ep.index_by_cell(false);
    let mut cells = BTreeSet::new();
    for (i, trip) in ep.trips.iter().enumerate() {
        let t = trip.start_time();
        if params.t_morning.contains(params.local_time(t)) {
            let (lo, hi) = params.morning_window.around(t);
            let lonely = !in_window(&starts[&ep.start_cell[i]], lo, hi, false)
                .iter()
                .any(|(_, j)| *j != i);
            if lonely {
                cells.insert(ep.start_cell[i]);
            }
        }
        let t = trip.end_time();
        if params.t_evening.contains(params.local_time(t)) {
            let (lo, hi) = params.evening_window.around(t);
            let lonely = !in_window(&ends[&ep.end_cell[i]], lo, hi, false)
                .iter()
                .any(|(_, j)| *j != i);
            if lonely {
                cells.insert(ep.end_cell[i]);
            }
        }
    }
    dissolve_cells(&cells).into_iter().map(HomeLocation::new).collect()
}

/// Which of two home locations a double-matched unit goes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pick {
    First,
    Second,
}

/// Decide between two home locations from the unit's LCSS scores against
/// each one's uniquely assigned trips. Scores are compared rank by rank from
/// the highest down, a missing rank losing to any present one; then the
/// number of uniquely assigned trips decides; then the zone with the smaller
/// lowest cell.
pub fn choose_home(
    mut scores_first: Vec<f64>,
    mut scores_second: Vec<f64>,
    first: &HomeLocation,
    second: &HomeLocation,
) -> Pick {
    scores_first.sort_by(|a, b| b.total_cmp(a));
    scores_second.sort_by(|a, b| b.total_cmp(a));
    let ranks = scores_first.len().max(scores_second.len());
    for r in 0..ranks {
        let a = scores_first.get(r).copied().unwrap_or(f64::NEG_INFINITY);
        let b = scores_second.get(r).copied().unwrap_or(f64::NEG_INFINITY);
        if a > b {
            return Pick::First;
        }
        if b > a {
            return Pick::Second;
        }
    }
    let (na, nb) = (first.uniquely_assigned.len(), second.uniquely_assigned.len());
    if na != nb {
        return if na > nb { Pick::First } else { Pick::Second };
    }
    if first.zone.min_cell() <= second.zone.min_cell() {
        Pick::First
    } else {
        Pick::Second
    }
}

/// Score a unit (given as its concatenated points) against both homes'
/// uniquely assigned trips with direction-agnostic LCSS, then pick.
pub fn resolve_double_match(
    unit: &PreparedTrack,
    first: &HomeLocation,
    second: &HomeLocation,
    tracks: &HashMap<TripId, PreparedTrack>,
    params: &AttackParams,
) -> Pick {
    let score = |hl: &HomeLocation| -> Vec<f64> {
        hl.uniquely_assigned
            .par_iter()
            .map(|id| unit.directionless(&tracks[id], params.lcss_epsilon_m))
            .collect()
    };
    choose_home(score(first), score(second), first, second)
}

/// Maximum set of pairwise non-overlapping trips by earliest-end greedy
/// interval scheduling. Returns (kept, evicted), both sorted by trip id.
pub fn non_simultaneous_subset<'a>(trips: &[&'a Trip]) -> (Vec<&'a Trip>, Vec<&'a Trip>) {
    let mut order: Vec<&Trip> = trips.to_vec();
    order.sort_by(|a, b| {
        a.end_time()
            .cmp(&b.end_time())
            .then_with(|| b.start_time().cmp(&a.start_time()))
            .then_with(|| a.id().cmp(b.id()))
    });
    let mut kept: Vec<&Trip> = Vec::new();
    let mut evicted = Vec::new();
    for t in order {
        // Kept ends are non-decreasing, so only the tail can reach past t's start.
        let clash = kept
            .iter()
            .rev()
            .take_while(|k| k.end_time() > t.start_time())
            .any(|k| trips_overlap_in_time(k, t));
        if clash {
            evicted.push(t);
        } else {
            kept.push(t);
        }
    }
    kept.sort_by(|a, b| a.id().cmp(b.id()));
    evicted.sort_by(|a, b| a.id().cmp(b.id()));
    (kept, evicted)
}

/// Home-location stage. Each concatenation chain is one unit whose start is
/// its first trip's start and whose end is its last trip's end. Units
/// touching no zone become their own user; units touching one zone join it;
/// units touching two zones are resolved by [`resolve_double_match`]. Each
/// home then keeps a largest non-overlapping subset of its trips and the
/// evicted trips become singletons.
///
/// Home `i` gets user id `i`; fresh ids follow in chain order, then
/// evictions in trip-id order.
pub fn assign_trips_to_hls(
    ds: &TripDataset,
    links: &[ConcatLink],
    hls: &[HomeLocation],
    params: &AttackParams,
) -> Result<(ClusterAssignment, Vec<HomeLocation>)> {
    let grid = GridSpec::new(params.bbox, params.s_cell_m)?;
    let units = chains(ds, links);
    let mut hls: Vec<HomeLocation> = hls.to_vec();
    let zone_of: HashMap<CellId, usize> = hls
        .iter()
        .enumerate()
        .flat_map(|(i, h)| h.zone.cells().iter().map(move |c| (*c, i)))
        .collect();

    let mut unit_home: Vec<Option<usize>> = vec![None; units.len()];
    let mut doubles: Vec<(usize, usize, usize)> = Vec::new();
    for (u, unit) in units.iter().enumerate() {
        let first = ds.get(&unit[0]).expect("chain ids come from the dataset");
        let last = ds.get(unit.last().unwrap()).expect("chain ids come from the dataset");
        let mut hit = BTreeSet::new();
        for cell in [grid.cell_of(first.start_point())?, grid.cell_of(last.end_point())?] {
            if let Some(&z) = zone_of.get(&cell) {
                hit.insert(z);
            }
        }
        let hit: Vec<usize> = hit.into_iter().collect();
        match hit.as_slice() {
            [] => {}
            [z] => {
                unit_home[u] = Some(*z);
                hls[*z].assigned.extend(unit.iter().cloned());
                hls[*z].uniquely_assigned.extend(unit.iter().cloned());
            }
            [a, b] => doubles.push((u, *a, *b)),
            _ => unreachable!("a unit has two ends"),
        }
    }

    if !doubles.is_empty() {
        let mut needed: BTreeSet<&TripId> = BTreeSet::new();
        for &(_, a, b) in &doubles {
            needed.extend(hls[a].uniquely_assigned.iter());
            needed.extend(hls[b].uniquely_assigned.iter());
        }
        let tracks: HashMap<TripId, PreparedTrack> = needed
            .into_par_iter()
            .map(|id| (id.clone(), PreparedTrack::from_trip(ds.get(id).unwrap())))
            .collect();
        let picks: Vec<(usize, usize)> = doubles
            .par_iter()
            .map(|&(u, a, b)| {
                let points: Vec<_> = units[u]
                    .iter()
                    .flat_map(|id| ds.get(id).unwrap().points().iter().copied())
                    .collect();
                let track = PreparedTrack::new(&points);
                let pick = resolve_double_match(&track, &hls[a], &hls[b], &tracks, params);
                (u, if pick == Pick::First { a } else { b })
            })
            .collect();
        for (u, z) in picks {
            unit_home[u] = Some(z);
            hls[z].assigned.extend(units[u].iter().cloned());
        }
    }

    let mut assignment = ClusterAssignment::new();
    let mut next_id = hls.len() as u64;
    for (u, unit) in units.iter().enumerate() {
        let user = match unit_home[u] {
            Some(z) => UserId(z as u64),
            None => {
                next_id += 1;
                UserId(next_id - 1)
            }
        };
        for id in unit {
            assignment.insert(id.clone(), user);
        }
    }

    let mut evicted_all: Vec<TripId> = Vec::new();
    for hl in hls.iter_mut() {
        let members: Vec<&Trip> = hl.assigned.iter().map(|id| ds.get(id).unwrap()).collect();
        let (_, evicted) = non_simultaneous_subset(&members);
        for t in evicted {
            hl.assigned.remove(t.id());
            hl.uniquely_assigned.remove(t.id());
            evicted_all.push(t.id().clone());
        }
    }
    evicted_all.sort();
    for id in evicted_all {
        assignment.insert(id, UserId(next_id));
        next_id += 1;
    }
    Ok((assignment, hls))
}

/// Assignment after concatenation alone: one user per chain.
pub fn chain_assignment(ds: &TripDataset, links: &[ConcatLink]) -> ClusterAssignment {
    let mut a = ClusterAssignment::new();
    for (i, chain) in chains(ds, links).into_iter().enumerate() {
        for id in chain {
            a.insert(id, UserId(i as u64));
        }
    }
    a
}

/// Full attack output.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub assignment: ClusterAssignment,
    /// After concatenation, after home-location assignment, after refinement.
    pub snapshots: [ClusterAssignment; 3],
    pub links: Vec<ConcatLink>,
    pub home_locations: Vec<HomeLocation>,
    pub refine: RefineOutcome,
}

pub fn run_attack(ds: &TripDataset, params: &AttackParams) -> Result<AttackOutcome> {
    params.validate()?;
    let grid = GridSpec::new(params.bbox, params.s_cell_m)?;
    let ep = Endpoints::new(ds, &grid)?;
    let links = concatenate(&ep, params)?;
    let stage1 = chain_assignment(ds, &links);
    let candidates = hl_candidates(&ep, params);
    let (stage2, home_locations) = assign_trips_to_hls(ds, &links, &candidates, params)?;
    let refine = refine_clusters(&stage2, ds, params)?;
    let stage3 = refine.assignment.clone();
    Ok(AttackOutcome {
        assignment: stage3.clone(),
        snapshots: [stage1, stage2, stage3],
        links,
        home_locations,
        refine,
    })
}
