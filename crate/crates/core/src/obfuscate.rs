//! Endpoint truncation: drop the points of a trip that lie within a random
//! radius of its original start and end point.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{haversine_m, Trip, TripDataset, TripId};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    pub radius_min_m: f64,
    pub radius_max_m: f64,
    pub rng_seed: u64,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self {
            radius_min_m: 100.0,
            radius_max_m: 300.0,
            rng_seed: 0,
        }
    }
}

impl TruncationSpec {
    pub fn new(radius_min_m: f64, radius_max_m: f64, rng_seed: u64) -> Result<Self> {
        if !(radius_min_m.is_finite() && radius_max_m.is_finite())
            || radius_min_m <= 0.0
            || radius_min_m > radius_max_m
        {
            return Err(Error::InvalidParams(format!(
                "truncation radii must satisfy 0 < min <= max, got [{radius_min_m}, {radius_max_m}]"
            )));
        }
        Ok(Self {
            radius_min_m,
            radius_max_m,
            rng_seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Truncated {
    Kept(Trip),
    Dropped,
}

/// Remove the longest prefix of points closer than `r_start` to the original
/// start point and the longest suffix closer than `r_end` to the original end
/// point. Fewer than two remaining points drops the trip.
pub fn truncate_trip(t: &Trip, r_start: f64, r_end: f64) -> Truncated {
    let pts = t.points();
    let (sp, ep) = (t.start_point(), t.end_point());
    let first = pts.iter().position(|p| haversine_m(p, sp) >= r_start);
    let last = pts.iter().rposition(|p| haversine_m(p, ep) >= r_end);
    match (first, last) {
        (Some(i), Some(j)) if j > i => {
            Truncated::Kept(Trip::new(t.id().clone(), pts[i..=j].to_vec()).expect("sub-slice of a valid trip"))
        }
        _ => Truncated::Dropped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropRecord {
    pub trip_id: TripId,
    pub r_start_m: f64,
    pub r_end_m: f64,
    pub dropped: bool,
}

/// Truncate every trip with radii drawn independently and uniformly from
/// `[radius_min, radius_max]`, using a stream keyed by (seed, trip id).
pub fn truncate_dataset(ds: &TripDataset, spec: &TruncationSpec) -> (TripDataset, Vec<DropRecord>) {
    let results: Vec<(DropRecord, Option<Trip>)> = ds
        .trips()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|t| {
            let mut rng = seeding::stream(spec.rng_seed, &t.id().0);
            let r_start = rng.gen_range(spec.radius_min_m..=spec.radius_max_m);
            let r_end = rng.gen_range(spec.radius_min_m..=spec.radius_max_m);
            let kept = match truncate_trip(t, r_start, r_end) {
                Truncated::Kept(k) => Some(k),
                Truncated::Dropped => None,
            };
            let rec = DropRecord {
                trip_id: t.id().clone(),
                r_start_m: r_start,
                r_end_m: r_end,
                dropped: kept.is_none(),
            };
            (rec, kept)
        })
        .collect();

    let mut replacements = std::collections::HashMap::with_capacity(results.len());
    let mut report = Vec::with_capacity(results.len());
    for (rec, kept) in results {
        if let Some(k) = kept {
            replacements.insert(rec.trip_id.clone(), k);
        }
        report.push(rec);
    }
    let out = ds.map_trips(|t| replacements.remove(t.id()));
    (out, report)
}

/// `trip_id,r_start_m,r_end_m,dropped`
pub fn write_drop_report<W: Write>(records: &[DropRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trip_id", "r_start_m", "r_end_m", "dropped"])?;
    for r in records {
        w.write_record([
            r.trip_id.0.as_str(),
            &r.r_start_m.to_string(),
            &r.r_end_m.to_string(),
            if r.dropped { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::io("<drop report>", e))?;
    Ok(())
}
