//! Synthetic commuters with known identities, for end-to-end tests.
//!
//! Every user gets a home and one to three destinations (the first one is
//! "work"). All sites of all users sit on distinct nodes of a square lattice
//! whose spacing is a multiple of 1 km and at least `home_separation_m`; each
//! node is the center of a 200 m cell, so no two users share a cell at the
//! 200 m or 500 m resolution.
//!
//! A routine day is home → work in the morning, optionally work → errand →
//! work around noon, and work → home in the evening. Other days run
//! home → destination → home between late morning and late afternoon, which
//! leaves no morning departure or evening arrival.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, TimeZone, Utc};
use chrono_tz::Tz;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{CellId, GridSpec, METERS_PER_DEGREE_LAT};
use crate::model::{haversine_deg, BBox, GpsPoint, Trip, TripDataset, TripId};
use crate::seeding;

const LATTICE_STEP_M: f64 = 1000.0;
const SITE_CELL_M: f64 = 200.0;
const SPEED_M_PER_S: f64 = 25_000.0 / 3600.0;
/// Destinations are drawn within this many meters (per axis) of home.
const DESTINATION_RANGE_M: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub days: usize,
    pub bbox: BBox,
    pub home_separation_m: f64,
    pub routine_strength: f64,
    pub noise_sigma_m: f64,
    pub points_per_km: f64,
    pub rng_seed: u64,
    pub timezone: Tz,
    pub start_date: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 20,
            days: 14,
            bbox: BBox::BERLIN,
            home_separation_m: 1000.0,
            routine_strength: 0.8,
            noise_sigma_m: 10.0,
            points_per_km: 20.0,
            rng_seed: 0,
            timezone: chrono_tz::Europe::Berlin,
            start_date: NaiveDate::from_ymd_opt(2022, 11, 7).expect("valid date"),
        }
    }
}

impl SynthConfig {
    /// Zero noise, every day routine.
    pub fn easy(n_users: usize, days: usize, rng_seed: u64) -> Self {
        Self {
            n_users,
            days,
            routine_strength: 1.0,
            noise_sigma_m: 0.0,
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.n_users == 0 {
            return bad("n_users must be at least 1");
        }
        if self.days == 0 {
            return bad("days must be at least 1");
        }
        if !(self.home_separation_m > 0.0 && self.home_separation_m.is_finite()) {
            return bad("home_separation_m must be positive");
        }
        if !(0.0..=1.0).contains(&self.routine_strength) {
            return bad("routine_strength must lie in [0, 1]");
        }
        if !(self.noise_sigma_m >= 0.0 && self.noise_sigma_m.is_finite()) {
            return bad("noise_sigma_m must be non-negative");
        }
        if !(self.points_per_km >= 0.0 && self.points_per_km.is_finite()) {
            return bad("points_per_km must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Sites {
    home: (f64, f64),
    destinations: Vec<(f64, f64)>,
}

fn place_sites(cfg: &SynthConfig) -> Result<Vec<Sites>> {
    let grid = GridSpec::new(cfg.bbox, SITE_CELL_M)?;
    let spacing = (cfg.home_separation_m.max(LATTICE_STEP_M) / LATTICE_STEP_M).ceil() * LATTICE_STEP_M;
    let stride = (spacing / SITE_CELL_M).round() as u32;
    // Keep one full spacing away from the box edges so jitter stays inside.
    let nodes_along = |cells: u32| (cells / stride).saturating_sub(1);
    let (n_rows, n_cols) = (nodes_along(grid.rows()), nodes_along(grid.cols()));
    let needed = cfg.n_users * 4;
    if (n_rows as usize) * (n_cols as usize) < needed {
        return Err(Error::InvalidParams(format!(
            "bounding box too small: {} lattice sites at {spacing} m spacing, need {needed}",
            n_rows as usize * n_cols as usize
        )));
    }
    let site = |r: u32, c: u32| grid.cell_center(CellId::new((r + 1) * stride, (c + 1) * stride));
    let reach = ((DESTINATION_RANGE_M / spacing).floor() as i64).max(1);

    let mut rng = seeding::stream(cfg.rng_seed, "sites");
    let mut all: Vec<(u32, u32)> = (0..n_rows).flat_map(|r| (0..n_cols).map(move |c| (r, c))).collect();
    all.shuffle(&mut rng);
    let mut taken: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut homes = all.into_iter();
    let mut out = Vec::with_capacity(cfg.n_users);
    for _ in 0..cfg.n_users {
        let home = homes
            .by_ref()
            .find(|n| !taken.contains(n))
            .ok_or_else(|| Error::InvalidParams("bounding box too small for the requested users".into()))?;
        taken.insert(home);
        let mut near: Vec<(u32, u32)> = Vec::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (r, c) = (home.0 as i64 + dr, home.1 as i64 + dc);
                if r >= 0 && c >= 0 && r < n_rows as i64 && c < n_cols as i64 && !taken.contains(&(r as u32, c as u32)) {
                    near.push((r as u32, c as u32));
                }
            }
        }
        let k = rng.gen_range(1..=3usize);
        if near.len() < k {
            return Err(Error::InvalidParams("bounding box too small for the requested users".into()));
        }
        let dest: Vec<(u32, u32)> = near.choose_multiple(&mut rng, k).copied().collect();
        taken.extend(dest.iter().copied());
        out.push(Sites {
            home: site(home.0, home.1),
            destinations: dest.into_iter().map(|(r, c)| site(r, c)).collect(),
        });
    }
    Ok(out)
}

struct TripBuilder<'a> {
    cfg: &'a SynthConfig,
    jitter: Option<Normal<f64>>,
    m_per_deg_lon: f64,
}

impl TripBuilder<'_> {
    /// Straight line from `a` to `b` departing at `depart`; returns the trip
    /// points and the arrival time.
    fn line<R: Rng>(&self, rng: &mut R, a: (f64, f64), b: (f64, f64), depart: DateTime<Utc>) -> (Vec<GpsPoint>, DateTime<Utc>) {
        let dist = haversine_deg(a.0, a.1, b.0, b.1);
        let n = ((dist / 1000.0 * self.cfg.points_per_km).ceil() as usize + 1).max(50);
        let duration_ms = (dist / SPEED_M_PER_S * 1000.0).round() as i64;
        let points = (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                let (mut lat, mut lon) = (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1));
                if let Some(j) = &self.jitter {
                    lat += j.sample(rng) / METERS_PER_DEGREE_LAT;
                    lon += j.sample(rng) / self.m_per_deg_lon;
                }
                let t = depart + Duration::milliseconds(duration_ms * i as i64 / (n - 1) as i64);
                GpsPoint::new(lat, lon, t).expect("synthetic coordinates are valid")
            })
            .collect();
        (points, depart + Duration::milliseconds(duration_ms))
    }

    fn local(&self, day: NaiveDate, minutes: f64) -> DateTime<Utc> {
        let midnight = day.and_time(NaiveTime::MIN);
        let local = self
            .cfg
            .timezone
            .from_local_datetime(&midnight)
            .earliest()
            .expect("midnight exists in the configured zone");
        local.with_timezone(&Utc) + Duration::milliseconds((minutes * 60_000.0).round() as i64)
    }

    fn user_trips(&self, user: usize, sites: &Sites) -> Vec<Trip> {
        let mut rng = seeding::stream(self.cfg.rng_seed, &format!("user{user}"));
        let mut trips = Vec::new();
        let push = |trips: &mut Vec<Trip>, day: usize, pts: Vec<GpsPoint>| {
            let id = format!("u{user:04}-d{day:03}-{}", trips.len());
            trips.push(Trip::new(id, pts).expect("synthetic trips are ordered"));
        };
        let home = sites.home;
        let work = sites.destinations[0];
        for d in 0..self.cfg.days {
            let day = self.cfg.start_date + Duration::days(d as i64);
            let mins = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| rng.gen_range(lo..hi);
            if rng.gen_bool(self.cfg.routine_strength) {
                let t = self.local(day, mins(&mut rng, 390.0, 480.0));
                let (p, _) = self.line(&mut rng, home, work, t);
                push(&mut trips, d, p);
                if sites.destinations.len() > 1 && rng.gen_bool(0.5) {
                    let errand = *sites.destinations[1..].choose(&mut rng).expect("non-empty");
                    let t = self.local(day, mins(&mut rng, 720.0, 780.0));
                    let (p, arrive) = self.line(&mut rng, work, errand, t);
                    push(&mut trips, d, p);
                    let back = arrive + Duration::minutes(rng.gen_range(60..=120));
                    let (p, _) = self.line(&mut rng, errand, work, back);
                    push(&mut trips, d, p);
                }
                let t = self.local(day, mins(&mut rng, 1080.0, 1200.0));
                let (p, _) = self.line(&mut rng, work, home, t);
                push(&mut trips, d, p);
            } else {
                let dest = *sites.destinations.choose(&mut rng).expect("non-empty");
                let t = self.local(day, mins(&mut rng, 630.0, 720.0));
                let (p, arrive) = self.line(&mut rng, home, dest, t);
                push(&mut trips, d, p);
                let back = arrive + Duration::minutes(rng.gen_range(120..=240));
                let (p, _) = self.line(&mut rng, dest, home, back);
                push(&mut trips, d, p);
            }
        }
        trips
    }
}

/// Generate a labelled dataset; the true label of every trip is `userNNNN`.
pub fn generate(cfg: &SynthConfig) -> Result<TripDataset> {
    cfg.validate()?;
    let sites = place_sites(cfg)?;
    let grid = GridSpec::new(cfg.bbox, SITE_CELL_M)?;
    let builder = TripBuilder {
        cfg,
        jitter: (cfg.noise_sigma_m > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma_m).expect("finite sigma")),
        m_per_deg_lon: grid.meters_per_degree_lon(),
    };
    let per_user: Vec<Vec<Trip>> = sites
        .par_iter()
        .enumerate()
        .map(|(u, s)| builder.user_trips(u, s))
        .collect();
    let mut labels = BTreeMap::new();
    let mut trips = Vec::new();
    for (u, ts) in per_user.into_iter().enumerate() {
        for t in ts {
            labels.insert(TripId::clone(t.id()), format!("user{u:04}"));
            trips.push(t);
        }
    }
    TripDataset::with_ground_truth(trips, labels)
}
