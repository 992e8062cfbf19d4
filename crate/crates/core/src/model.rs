//! Domain types shared by every stage: points, trips, datasets, cluster
//! assignments and the attack parameters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, NaiveTime, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by every distance computation in the crate.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// One timestamped WGS84 fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsPoint {
    pub lat: f64,
    pub lon: f64,
    pub time: DateTime<Utc>,
}

impl GpsPoint {
    pub fn new(lat: f64, lon: f64, time: DateTime<Utc>) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidPoint(format!("latitude {lat} out of range")));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidPoint(format!("longitude {lon} out of range")));
        }
        Ok(Self { lat, lon, time })
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_m(a: &GpsPoint, b: &GpsPoint) -> f64 {
    haversine_deg(a.lat, a.lon, b.lat, b.lon)
}

pub fn haversine_deg(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Opaque trip identifier. Ordering is lexicographic on the string form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TripId(pub String);

impl fmt::Display for TripId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TripId {
    fn from(s: &str) -> Self {
        TripId(s.to_string())
    }
}

impl From<String> for TripId {
    fn from(s: String) -> Self {
        TripId(s)
    }
}

/// Reconstructed (attack-side) user identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A temporally ordered sequence of at least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    id: TripId,
    points: Vec<GpsPoint>,
}

impl Trip {
    pub fn new(id: impl Into<TripId>, points: Vec<GpsPoint>) -> Result<Self> {
        let id = id.into();
        if points.len() < 2 {
            return Err(Error::InvalidTrip {
                trip: id.0,
                reason: format!("{} point(s), need at least 2", points.len()),
            });
        }
        if let Some(i) = points.windows(2).position(|w| w[1].time < w[0].time) {
            return Err(Error::InvalidTrip {
                trip: id.0,
                reason: format!("timestamp decreases at point {}", i + 1),
            });
        }
        Ok(Self { id, points })
    }

    pub fn id(&self) -> &TripId {
        &self.id
    }

    pub fn points(&self) -> &[GpsPoint] {
        &self.points
    }

    pub fn start_point(&self) -> &GpsPoint {
        &self.points[0]
    }

    pub fn end_point(&self) -> &GpsPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn start_time(&self) -> DateTime<Utc> {
        self.start_point().time
    }

    pub fn end_time(&self) -> DateTime<Utc> {
        self.end_point().time
    }

    pub fn duration_s(&self) -> f64 {
        (self.end_time() - self.start_time()).num_milliseconds() as f64 / 1000.0
    }

    /// Path length: sum of consecutive haversine segments.
    pub fn length_m(&self) -> f64 {
        self.points.windows(2).map(|w| haversine_m(&w[0], &w[1])).sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<GpsPoint> {
        self.points
    }
}

/// Strict temporal overlap: touching endpoints do not overlap.
pub fn trips_overlap_in_time(a: &Trip, b: &Trip) -> bool {
    a.start_time() < b.end_time() && b.start_time() < a.end_time()
}

/// A set of trips keyed by id, optionally carrying the true user of each
/// trip. Labels are for evaluation only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripDataset {
    trips: BTreeMap<TripId, Trip>,
    ground_truth: Option<BTreeMap<TripId, String>>,
}

impl TripDataset {
    pub fn new(trips: Vec<Trip>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for trip in trips {
            let id = trip.id().clone();
            if map.insert(id.clone(), trip).is_some() {
                return Err(Error::DuplicateTrip(id.0));
            }
        }
        Ok(Self {
            trips: map,
            ground_truth: None,
        })
    }

    pub fn with_ground_truth(trips: Vec<Trip>, labels: BTreeMap<TripId, String>) -> Result<Self> {
        let mut ds = Self::new(trips)?;
        let keys: BTreeSet<&TripId> = labels.keys().collect();
        let ids: BTreeSet<&TripId> = ds.trips.keys().collect();
        if keys != ids {
            return Err(Error::GroundTruthMismatch);
        }
        ds.ground_truth = Some(labels);
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.trips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }

    /// Trips in ascending id order.
    pub fn trips(&self) -> impl ExactSizeIterator<Item = &Trip> + Clone {
        self.trips.values()
    }

    pub fn trip_ids(&self) -> impl ExactSizeIterator<Item = &TripId> {
        self.trips.keys()
    }

    pub fn get(&self, id: &TripId) -> Option<&Trip> {
        self.trips.get(id)
    }

    pub fn ground_truth(&self) -> Option<&BTreeMap<TripId, String>> {
        self.ground_truth.as_ref()
    }

    pub fn label_of(&self, id: &TripId) -> Option<&str> {
        self.ground_truth.as_ref()?.get(id).map(String::as_str)
    }

    /// Same dataset without labels; what the attack is allowed to see.
    pub fn without_labels(&self) -> Self {
        Self {
            trips: self.trips.clone(),
            ground_truth: None,
        }
    }

    /// Keep only trips for which `keep` returns true; labels follow.
    pub fn filter(&self, mut keep: impl FnMut(&Trip) -> bool) -> Self {
        let trips: BTreeMap<TripId, Trip> = self
            .trips
            .iter()
            .filter(|(_, t)| keep(t))
            .map(|(k, t)| (k.clone(), t.clone()))
            .collect();
        let ground_truth = self.ground_truth.as_ref().map(|gt| {
            gt.iter()
                .filter(|(k, _)| trips.contains_key(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect()
        });
        Self {
            trips,
            ground_truth,
        }
    }

    /// Replace or remove trips by id while keeping the label map consistent.
    pub fn map_trips(&self, mut f: impl FnMut(&Trip) -> Option<Trip>) -> Self {
        let mut trips = BTreeMap::new();
        for (id, t) in &self.trips {
            if let Some(nt) = f(t) {
                debug_assert_eq!(nt.id(), id);
                trips.insert(id.clone(), nt);
            }
        }
        let ground_truth = self.ground_truth.as_ref().map(|gt| {
            gt.iter()
                .filter(|(k, _)| trips.contains_key(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect()
        });
        Self {
            trips,
            ground_truth,
        }
    }

    /// Distinct true user labels in sorted order.
    pub fn users(&self) -> Vec<String> {
        match &self.ground_truth {
            Some(gt) => gt
                .values()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
            None => Vec::new(),
        }
    }

    /// Smallest box containing every point, or `None` for an empty dataset.
    pub fn extent(&self) -> Option<BBox> {
        let mut it = self.trips.values().flat_map(|t| t.points());
        let first = it.next()?;
        let mut b = BBox {
            lat_min: first.lat,
            lon_min: first.lon,
            lat_max: first.lat,
            lon_max: first.lon,
        };
        for p in it {
            b.lat_min = b.lat_min.min(p.lat);
            b.lat_max = b.lat_max.max(p.lat);
            b.lon_min = b.lon_min.min(p.lon);
            b.lon_max = b.lon_max.max(p.lon);
        }
        Some(b)
    }
}

/// Axis-aligned latitude/longitude box, inclusive on every edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lat_min: f64,
    pub lon_min: f64,
    pub lat_max: f64,
    pub lon_max: f64,
}

impl BBox {
    pub fn new(lat_min: f64, lon_min: f64, lat_max: f64, lon_max: f64) -> Result<Self> {
        let ok = [lat_min, lon_min, lat_max, lon_max].iter().all(|v| v.is_finite())
            && lat_min < lat_max
            && lon_min < lon_max
            && (-90.0..=90.0).contains(&lat_min)
            && (-90.0..=90.0).contains(&lat_max)
            && (-180.0..=180.0).contains(&lon_min)
            && (-180.0..=180.0).contains(&lon_max);
        if !ok {
            return Err(Error::InvalidParams(format!(
                "bounding box ({lat_min}, {lon_min}, {lat_max}, {lon_max}) is not a proper box"
            )));
        }
        Ok(Self {
            lat_min,
            lon_min,
            lat_max,
            lon_max,
        })
    }

    /// Berlin urban area with suburb buffer.
    pub const BERLIN: BBox = BBox {
        lat_min: 52.100,
        lon_min: 12.562,
        lat_max: 52.803,
        lon_max: 14.129,
    };

    /// Beijing urban area with suburb buffer.
    pub const BEIJING: BBox = BBox {
        lat_min: 39.600,
        lon_min: 116.080,
        lat_max: 40.270,
        lon_max: 116.690,
    };

    pub fn contains(&self, p: &GpsPoint) -> bool {
        p.lat >= self.lat_min && p.lat <= self.lat_max && p.lon >= self.lon_min && p.lon <= self.lon_max
    }

    /// Grow the box by `margin_deg` on every side; used when the box is derived
    /// from data extent and must strictly contain it.
    pub fn padded(&self, margin_deg: f64) -> BBox {
        BBox {
            lat_min: (self.lat_min - margin_deg).max(-90.0),
            lon_min: (self.lon_min - margin_deg).max(-180.0),
            lat_max: (self.lat_max + margin_deg).min(90.0),
            lon_max: (self.lon_max + margin_deg).min(180.0),
        }
    }
}

/// Trip id → reconstructed user id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterAssignment {
    map: BTreeMap<TripId, UserId>,
}

impl ClusterAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_map(map: BTreeMap<TripId, UserId>) -> Self {
        Self { map }
    }

    pub fn insert(&mut self, trip: TripId, user: UserId) -> Option<UserId> {
        self.map.insert(trip, user)
    }

    pub fn get(&self, trip: &TripId) -> Option<UserId> {
        self.map.get(trip).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TripId, UserId)> {
        self.map.iter().map(|(k, v)| (k, *v))
    }

    pub fn as_map(&self) -> &BTreeMap<TripId, UserId> {
        &self.map
    }

    /// Users with their trips, both in ascending order.
    pub fn clusters(&self) -> BTreeMap<UserId, Vec<TripId>> {
        let mut out: BTreeMap<UserId, Vec<TripId>> = BTreeMap::new();
        for (t, u) in &self.map {
            out.entry(*u).or_default().push(t.clone());
        }
        out
    }

    pub fn n_clusters(&self) -> usize {
        self.map.values().collect::<BTreeSet<_>>().len()
    }

    /// Every trip of `ds` has exactly one id and no foreign trips are present.
    pub fn is_total_for(&self, ds: &TripDataset) -> bool {
        self.map.len() == ds.len() && ds.trip_ids().all(|id| self.map.contains_key(id))
    }

    /// Relabel users to 0..k in order of their smallest trip id.
    pub fn canonical(&self) -> Self {
        let mut relabel: BTreeMap<UserId, UserId> = BTreeMap::new();
        let mut next = 0u64;
        let mut map = BTreeMap::new();
        for (t, u) in &self.map {
            let nu = *relabel.entry(*u).or_insert_with(|| {
                let id = UserId(next);
                next += 1;
                id
            });
            map.insert(t.clone(), nu);
        }
        Self { map }
    }
}

/// Half-open local clock interval `[start, end)` expressed in minutes after
/// midnight; `end` may be 1440 to reach midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockWindow {
    pub start_min: u32,
    pub end_min: u32,
}

impl ClockWindow {
    pub fn new(start_min: u32, end_min: u32) -> Result<Self> {
        if start_min >= end_min || end_min > 24 * 60 {
            return Err(Error::InvalidParams(format!(
                "clock window [{start_min}, {end_min}) minutes is empty or exceeds a day"
            )));
        }
        Ok(Self { start_min, end_min })
    }

    pub fn hours(start_h: u32, end_h: u32) -> Self {
        Self {
            start_min: start_h * 60,
            end_min: end_h * 60,
        }
    }

    pub fn contains(&self, t: NaiveTime) -> bool {
        let m = t.hour() * 60 + t.minute();
        m >= self.start_min && m < self.end_min
    }

    pub fn overlaps(&self, other: &ClockWindow) -> bool {
        self.start_min < other.end_min && other.start_min < self.end_min
    }
}

/// Signed offset window in hours relative to an anchor instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourWindow {
    pub before_h: f64,
    pub after_h: f64,
}

impl HourWindow {
    pub const fn new(before_h: f64, after_h: f64) -> Self {
        Self { before_h, after_h }
    }

    /// Inclusive instant range around `anchor`.
    pub fn around(&self, anchor: DateTime<Utc>) -> (DateTime<Utc>, DateTime<Utc>) {
        (anchor + hours(self.before_h), anchor + hours(self.after_h))
    }
}

pub(crate) fn hours(h: f64) -> chrono::Duration {
    chrono::Duration::milliseconds((h * 3_600_000.0).round() as i64)
}

/// Every tunable of the attack. `Default` reproduces the published setting.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackParams {
    pub s_cell_m: f64,
    pub h_concat: f64,
    pub concat_window: HourWindow,
    pub t_morning: ClockWindow,
    pub t_evening: ClockWindow,
    pub morning_window: HourWindow,
    pub evening_window: HourWindow,
    pub lcss_epsilon_m: f64,
    pub s_cell_tfidf_m: f64,
    pub n_matches: usize,
    pub q_match: f64,
    pub bbox: BBox,
    pub timezone: Tz,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self {
            s_cell_m: 200.0,
            h_concat: 8.0,
            concat_window: HourWindow::new(-4.0, 4.0),
            t_morning: ClockWindow::hours(6, 10),
            t_evening: ClockWindow::hours(18, 24),
            morning_window: HourWindow::new(-2.0, 2.0),
            evening_window: HourWindow::new(0.0, 4.0),
            lcss_epsilon_m: 200.0,
            s_cell_tfidf_m: 500.0,
            n_matches: 5,
            q_match: 0.75,
            bbox: BBox::BERLIN,
            timezone: chrono_tz::Europe::Berlin,
        }
    }
}

impl AttackParams {
    /// Published setting for the Berlin dataset.
    pub fn berlin() -> Self {
        Self::default()
    }

    /// Published setting for the Beijing (GeoLife) dataset.
    pub fn beijing() -> Self {
        Self {
            n_matches: 100,
            bbox: BBox::BEIJING,
            timezone: chrono_tz::Asia::Shanghai,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("s_cell", self.s_cell_m),
            ("h_concat", self.h_concat),
            ("lcss_epsilon", self.lcss_epsilon_m),
            ("s_cell_tfidf", self.s_cell_tfidf_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.n_matches == 0 {
            return Err(Error::InvalidParams("n_matches must be > 0".into()));
        }
        if !(self.q_match > 0.0 && self.q_match < 1.0) {
            return Err(Error::InvalidParams(format!(
                "q_match must lie in (0, 1), got {}",
                self.q_match
            )));
        }
        if self.t_morning.overlaps(&self.t_evening) {
            return Err(Error::InvalidParams(
                "morning and evening intervals must be disjoint".into(),
            ));
        }
        for (name, w) in [
            ("concat_window", self.concat_window),
            ("morning_window", self.morning_window),
            ("evening_window", self.evening_window),
        ] {
            if !(w.before_h.is_finite() && w.after_h.is_finite() && w.before_h <= w.after_h) {
                return Err(Error::InvalidParams(format!("{name} is inverted")));
            }
        }
        BBox::new(
            self.bbox.lat_min,
            self.bbox.lon_min,
            self.bbox.lat_max,
            self.bbox.lon_max,
        )?;
        Ok(())
    }

    pub fn local_time(&self, t: DateTime<Utc>) -> NaiveTime {
        t.with_timezone(&self.timezone).time()
    }
}
