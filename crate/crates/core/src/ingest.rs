//! Readers for GeoLife `.plt` directories and the trips CSV interchange
//! format, plus the cleaning pipeline applied before the attack.
//!
//! Trips CSV layout (UTF-8, LF or CRLF):
//!
//! ```text
//! trip_id,user_id,lat,lon,timestamp
//! t1,alice,52.51,13.40,2022-11-02T07:30:00+01:00
//! ```
//!
//! Rows of one trip are contiguous and time-sorted. `user_id` is either set
//! on every row or empty on every row.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, NaiveTime, SecondsFormat, TimeZone, Utc};
use chrono_tz::Tz;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BBox, ClusterAssignment, GpsPoint, Trip, TripDataset, TripId, UserId};

/// Number of header lines at the top of every GeoLife `.plt` file.
pub const PLT_HEADER_LINES: usize = 6;

pub const TRIPS_CSV_HEADER: [&str; 5] = ["trip_id", "user_id", "lat", "lon", "timestamp"];

/// Non-fatal problems met while reading.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReadReport {
    pub skipped_lines: usize,
    pub skipped_files: usize,
    pub rejected_trips: usize,
    pub diagnostics: Vec<String>,
}

impl ReadReport {
    fn merge(&mut self, other: ReadReport) {
        self.skipped_lines += other.skipped_lines;
        self.skipped_files += other.skipped_files;
        self.rejected_trips += other.rejected_trips;
        self.diagnostics.extend(other.diagnostics);
    }
}

/// Result of parsing one `.plt` body.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PltPoints {
    pub points: Vec<GpsPoint>,
    pub skipped_lines: usize,
}

/// Parse a `.plt` body. The first six lines are skipped unconditionally;
/// every following line must read `lat,lon,0,alt,days,date,time`, with the
/// date and time read as wall-clock time in `clock`. Malformed lines and
/// lines that go back in time are skipped and counted.
pub fn parse_plt(text: &str, clock: Tz) -> PltPoints {
    let mut out = PltPoints::default();
    for line in text.lines().skip(PLT_HEADER_LINES) {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match parse_plt_line(line, clock) {
            Some(p) if out.points.last().is_none_or(|q| q.time <= p.time) => out.points.push(p),
            _ => out.skipped_lines += 1,
        }
    }
    out
}

fn parse_plt_line(line: &str, clock: Tz) -> Option<GpsPoint> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 7 {
        return None;
    }
    let lat: f64 = fields[0].parse().ok()?;
    let lon: f64 = fields[1].parse().ok()?;
    let date = NaiveDate::parse_from_str(fields[5], "%Y-%m-%d").ok()?;
    let time = NaiveTime::parse_from_str(fields[6], "%H:%M:%S").ok()?;
    let local = NaiveDateTime::new(date, time);
    let t = clock.from_local_datetime(&local).single()?.with_timezone(&Utc);
    GpsPoint::new(lat, lon, t).ok()
}

/// Read a GeoLife tree laid out as `<user>/Trajectory/*.plt`. Trip ids are
/// `<user>/<file stem>`; labels come from the user directory name.
pub fn read_geolife(dir: &Path, clock: Tz) -> Result<(TripDataset, ReadReport)> {
    let mut files = Vec::new();
    let users = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in users {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let user_dir = entry.path();
        if !user_dir.is_dir() {
            continue;
        }
        let user = entry.file_name().to_string_lossy().into_owned();
        let traj = user_dir.join("Trajectory");
        if !traj.is_dir() {
            continue;
        }
        for f in fs::read_dir(&traj).map_err(|e| Error::io(&traj, e))? {
            let f = f.map_err(|e| Error::io(&traj, e))?;
            let path = f.path();
            if path.extension().and_then(|e| e.to_str()) == Some("plt") {
                files.push((user.clone(), path));
            }
        }
    }
    files.sort();

    let parsed: Vec<Result<(Option<(Trip, String)>, ReadReport)>> = files
        .par_iter()
        .map(|(user, path)| {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let text = String::from_utf8_lossy(&bytes);
            let plt = parse_plt(&text, clock);
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let id = format!("{user}/{stem}");
            let mut report = ReadReport {
                skipped_lines: plt.skipped_lines,
                ..Default::default()
            };
            if plt.points.len() < 2 {
                report.skipped_files = 1;
                report
                    .diagnostics
                    .push(format!("{}: fewer than 2 valid points", path.display()));
                return Ok((None, report));
            }
            let trip = Trip::new(id, plt.points)?;
            Ok((Some((trip, user.clone())), report))
        })
        .collect();

    let mut report = ReadReport::default();
    let mut trips = Vec::new();
    let mut labels = BTreeMap::new();
    for r in parsed {
        let (trip, rep) = r?;
        report.merge(rep);
        if let Some((trip, user)) = trip {
            labels.insert(trip.id().clone(), user);
            trips.push(trip);
        }
    }
    Ok((TripDataset::with_ground_truth(trips, labels)?, report))
}

pub fn read_trips_csv(path: &Path) -> Result<(TripDataset, ReadReport)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trips_csv_from(file, &path.display().to_string())
}

struct Block {
    id: String,
    user: String,
    points: Vec<GpsPoint>,
    first_line: u64,
}

/// Parse trips CSV from any reader. `source` names the input in errors.
pub fn read_trips_csv_from<R: Read>(reader: R, source: &str) -> Result<(TripDataset, ReadReport)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let got: Vec<&str> = headers.iter().map(|h| h.trim_start_matches('\u{feff}').trim()).collect();
    if got != TRIPS_CSV_HEADER {
        return Err(Error::parse(
            source,
            format!("expected header {}, found {}", TRIPS_CSV_HEADER.join(","), got.join(",")),
        ));
    }

    let mut report = ReadReport::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut trips = Vec::new();
    let mut labels: Vec<(TripId, String)> = Vec::new();
    let mut current: Option<Block> = None;

    let finish = |block: Block,
                      trips: &mut Vec<Trip>,
                      labels: &mut Vec<(TripId, String)>,
                      report: &mut ReadReport| {
        match Trip::new(block.id.clone(), block.points) {
            Ok(t) => {
                labels.push((t.id().clone(), block.user));
                trips.push(t);
            }
            Err(e) => {
                report.rejected_trips += 1;
                report
                    .diagnostics
                    .push(format!("{source}:{}: {e}", block.first_line));
            }
        }
    };

    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let (id, user) = (field(0), field(1));
        if id.is_empty() {
            return Err(Error::parse(source, format!("line {line}: empty trip_id")));
        }
        let lat: f64 = field(2)
            .parse()
            .map_err(|_| Error::parse(source, format!("line {line}: bad lat {:?}", field(2))))?;
        let lon: f64 = field(3)
            .parse()
            .map_err(|_| Error::parse(source, format!("line {line}: bad lon {:?}", field(3))))?;
        let time = parse_timestamp(field(4))
            .ok_or_else(|| Error::parse(source, format!("line {line}: bad timestamp {:?}", field(4))))?;
        let point = GpsPoint::new(lat, lon, time)
            .map_err(|e| Error::parse(source, format!("line {line}: {e}")))?;

        let same = current.as_ref().is_some_and(|b| b.id == id);
        if !same {
            if let Some(done) = current.take() {
                finish(done, &mut trips, &mut labels, &mut report);
            }
            if !seen.insert(id.to_string()) {
                return Err(Error::parse(
                    source,
                    format!("line {line}: trip {id} appears in non-contiguous blocks"),
                ));
            }
            current = Some(Block {
                id: id.to_string(),
                user: user.to_string(),
                points: Vec::new(),
                first_line: line,
            });
        }
        let block = current.as_mut().expect("block opened above");
        if block.user != user {
            return Err(Error::parse(
                source,
                format!("line {line}: trip {id} has conflicting user_id values"),
            ));
        }
        block.points.push(point);
    }
    if let Some(done) = current.take() {
        finish(done, &mut trips, &mut labels, &mut report);
    }

    let labelled = labels.iter().filter(|(_, u)| !u.is_empty()).count();
    let ds = if labelled == 0 {
        TripDataset::new(trips)?
    } else if labelled == labels.len() {
        TripDataset::with_ground_truth(trips, labels.into_iter().collect())?
    } else {
        return Err(Error::parse(
            source,
            "user_id must be set on every trip or on none",
        ));
    };
    Ok((ds, report))
}

pub(crate) fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f%:z"))
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

pub(crate) fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, false)
}

/// Write a dataset in trips CSV form. Rows are emitted in trip-id order;
/// coordinates use the shortest representation that round-trips exactly.
pub fn write_trips_csv<W: Write>(ds: &TripDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRIPS_CSV_HEADER)?;
    for trip in ds.trips() {
        let user = ds.label_of(trip.id()).unwrap_or("");
        for p in trip.points() {
            w.write_record([
                trip.id().0.as_str(),
                user,
                &p.lat.to_string(),
                &p.lon.to_string(),
                &format_timestamp(&p.time),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trips csv>", e))?;
    Ok(())
}

pub const ASSIGNMENT_CSV_HEADER: [&str; 2] = ["trip_id", "user_id"];

/// `trip_id,user_id` rows in trip-id order.
pub fn write_assignment_csv<W: Write>(a: &ClusterAssignment, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ASSIGNMENT_CSV_HEADER)?;
    for (trip, user) in a.iter() {
        w.write_record([trip.0.as_str(), &user.0.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<assignment csv>", e))?;
    Ok(())
}

/// Inverse of [`write_assignment_csv`]. A trip listed twice is an error.
pub fn read_assignment_csv_from<R: Read>(reader: R, source: &str) -> Result<ClusterAssignment> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ASSIGNMENT_CSV_HEADER {
        return Err(Error::parse(source, format!("expected header trip_id,user_id, got {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = ClusterAssignment::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(Error::parse(source, format!("line {line}: expected 2 fields")));
        }
        let user: u64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(source, format!("line {line}: bad user id {:?}", &rec[1])))?;
        if out.insert(TripId::from(&rec[0]), UserId(user)).is_some() {
            return Err(Error::parse(source, format!("line {line}: trip {} listed twice", &rec[0])));
        }
    }
    Ok(out)
}

pub fn read_assignment_csv(path: &Path) -> Result<ClusterAssignment> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_assignment_csv_from(std::io::BufReader::new(f), &path.display().to_string())
}

/// Keep trips that start in `year` on the local clock of `tz`.
pub fn filter_year(ds: &TripDataset, year: i32, tz: Tz) -> TripDataset {
    ds.filter(|t| t.start_time().with_timezone(&tz).year() == year)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub bbox: Option<BBox>,
    pub min_length_m: f64,
    pub min_points: usize,
    pub long_trim_quantile: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            bbox: None,
            min_length_m: 200.0,
            min_points: 50,
            long_trim_quantile: 0.05,
        }
    }
}

impl PreprocessConfig {
    pub fn with_bbox(bbox: BBox) -> Self {
        Self {
            bbox: Some(bbox),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PreprocessReport {
    pub n_input_trips: usize,
    pub n_removed_short: usize,
    pub n_removed_sparse: usize,
    pub n_removed_long_quantile: usize,
    pub n_removed_bbox: usize,
    pub n_output_trips: usize,
    pub n_output_users: Option<usize>,
}

/// Cleaning pipeline, in fixed order: (1) drop trips shorter than
/// `min_length_m` or with fewer than `min_points` points (a trip failing both
/// counts as short); (2) drop the longest `floor(q * n)` survivors by path
/// length, ties going to the larger trip id; (3) drop trips with any point
/// outside the bounding box.
pub fn preprocess(ds: &TripDataset, cfg: &PreprocessConfig) -> Result<(TripDataset, PreprocessReport)> {
    if !(0.0..1.0).contains(&cfg.long_trim_quantile) {
        return Err(Error::InvalidParams(format!(
            "long_trim_quantile must lie in [0, 1), got {}",
            cfg.long_trim_quantile
        )));
    }
    let mut report = PreprocessReport {
        n_input_trips: ds.len(),
        ..Default::default()
    };

    let lengths: BTreeMap<&TripId, f64> = ds.trips().map(|t| (t.id(), t.length_m())).collect();
    let mut survivors: Vec<(&TripId, f64)> = Vec::new();
    for t in ds.trips() {
        let len = lengths[t.id()];
        if len < cfg.min_length_m {
            report.n_removed_short += 1;
        } else if t.len() < cfg.min_points {
            report.n_removed_sparse += 1;
        } else {
            survivors.push((t.id(), len));
        }
    }

    let n_trim = (cfg.long_trim_quantile * survivors.len() as f64).floor() as usize;
    survivors.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| b.0.cmp(a.0)));
    report.n_removed_long_quantile = n_trim;
    let kept: HashSet<TripId> = survivors[n_trim..].iter().map(|(id, _)| (*id).clone()).collect();

    let mut removed_bbox = 0;
    let out = ds.filter(|t| {
        if !kept.contains(t.id()) {
            return false;
        }
        match &cfg.bbox {
            Some(b) if !t.points().iter().all(|p| b.contains(p)) => {
                removed_bbox += 1;
                false
            }
            _ => true,
        }
    });
    report.n_removed_bbox = removed_bbox;
    report.n_output_trips = out.len();
    report.n_output_users = out.ground_truth().map(|_| out.users().len());
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::METERS_PER_DEGREE_LAT;
    use chrono::Duration;

    const HEADER: &str = "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n";

    fn plt_rows(n: usize) -> String {
        let mut s = HEADER.to_string();
        for i in 0..n {
            s.push_str(&format!(
                "39.9{:04},116.3{:04},0,492,39744.1201851852,2008-10-23,02:{:02}:{:02}\n",
                i,
                i,
                (i / 60) % 60,
                i % 60
            ));
        }
        s
    }

    #[test]
    fn plt_skips_header_and_parses_rows() {
        let p = parse_plt(&plt_rows(50), chrono_tz::UTC);
        assert_eq!(p.points.len(), 50);
        assert_eq!(p.skipped_lines, 0);
        assert_eq!(p.points[0].lat, 39.9);
        assert_eq!(
            p.points[1].time,
            Utc.with_ymd_and_hms(2008, 10, 23, 2, 0, 1).unwrap()
        );
    }

    #[test]
    fn plt_local_clock() {
        let p = parse_plt(&plt_rows(2), chrono_tz::Asia::Shanghai);
        assert_eq!(
            p.points[0].time,
            Utc.with_ymd_and_hms(2008, 10, 22, 18, 0, 0).unwrap()
        );
    }

    #[test]
    fn plt_malformed_lines_counted() {
        let mut s = plt_rows(3);
        s.push_str("garbage\n39.9,116.3,0,1,2,2008-13-40,00:00:00\n");
        let p = parse_plt(&s, chrono_tz::UTC);
        assert_eq!(p.points.len(), 3);
        assert_eq!(p.skipped_lines, 2);
    }

    fn write_user(root: &Path, user: &str, files: &[(&str, usize)]) {
        let dir = root.join(user).join("Trajectory");
        fs::create_dir_all(&dir).unwrap();
        for (name, rows) in files {
            fs::write(dir.join(format!("{name}.plt")), plt_rows(*rows)).unwrap();
        }
    }

    #[test]
    fn geolife_directory() {
        let tmp = tempfile::tempdir().unwrap();
        write_user(tmp.path(), "000", &[("a", 50), ("b", 10), ("c", 3)]);
        write_user(tmp.path(), "001", &[("a", 1)]);
        let (ds, rep) = read_geolife(tmp.path(), chrono_tz::UTC).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(rep.skipped_files, 1);
        assert!(ds.trips().all(|t| ds.label_of(t.id()) == Some("000")));
        assert_eq!(ds.get(&"000/a".into()).unwrap().len(), 50);
        assert!(read_geolife(&tmp.path().join("missing"), chrono_tz::UTC).is_err());
    }

    fn csv_ds(text: &str) -> Result<(TripDataset, ReadReport)> {
        read_trips_csv_from(text.as_bytes(), "test.csv")
    }

    #[test]
    fn csv_two_trips() {
        let text = "trip_id,user_id,lat,lon,timestamp\r\n\
            t1,u1,52.5,13.4,2022-11-02T07:00:00+01:00\r\n\
            t1,u1,52.51,13.4,2022-11-02T07:01:00+01:00\r\n\
            t1,u1,52.52,13.4,2022-11-02T07:02:00+01:00\r\n\
            t2,u2,52.5,13.5,2022-11-02T08:00:00Z\r\n\
            t2,u2,52.51,13.5,2022-11-02T08:01:00Z\r\n\
            t2,u2,52.52,13.5,2022-11-02T08:02:00Z\r\n";
        let (ds, rep) = csv_ds(text).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(rep.rejected_trips, 0);
        assert_eq!(ds.label_of(&"t2".into()), Some("u2"));
        assert_eq!(
            ds.get(&"t1".into()).unwrap().start_time(),
            Utc.with_ymd_and_hms(2022, 11, 2, 6, 0, 0).unwrap()
        );
    }

    #[test]
    fn csv_without_labels() {
        let text = "trip_id,user_id,lat,lon,timestamp\n\
            t1,,52.5,13.4,2022-11-02T07:00:00Z\n\
            t1,,52.6,13.4,2022-11-02T07:10:00Z\n";
        let (ds, _) = csv_ds(text).unwrap();
        assert!(ds.ground_truth().is_none());
    }

    #[test]
    fn csv_rejects_unordered_trip_and_noncontiguous_ids() {
        let text = "trip_id,user_id,lat,lon,timestamp\n\
            t1,u,52.5,13.4,2022-11-02T07:10:00Z\n\
            t1,u,52.6,13.4,2022-11-02T07:00:00Z\n\
            t2,u,52.5,13.4,2022-11-02T08:00:00Z\n\
            t2,u,52.6,13.4,2022-11-02T08:10:00Z\n";
        let (ds, rep) = csv_ds(text).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(rep.rejected_trips, 1);

        let text = "trip_id,user_id,lat,lon,timestamp\n\
            t1,u,52.5,13.4,2022-11-02T07:00:00Z\n\
            t2,u,52.5,13.4,2022-11-02T08:00:00Z\n\
            t1,u,52.6,13.4,2022-11-02T09:00:00Z\n";
        assert!(csv_ds(text).is_err());
        assert!(csv_ds("a,b\n1,2\n").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let text = "trip_id,user_id,lat,lon,timestamp\n\
            t1,u,52.123456789012345,13.4,2022-11-02T07:00:00Z\n\
            t1,u,52.6,13.400000000000001,2022-11-02T07:10:00.250Z\n";
        let (ds, _) = csv_ds(text).unwrap();
        let mut buf = Vec::new();
        write_trips_csv(&ds, &mut buf).unwrap();
        let (back, _) = read_trips_csv_from(buf.as_slice(), "rt").unwrap();
        assert_eq!(back, ds);
    }

    /// Straight trip heading north from (lat0, 13.4), one point per `step_m`.
    fn line_trip(id: &str, lat0: f64, n: usize, step_m: f64) -> Trip {
        let t0 = Utc.with_ymd_and_hms(2022, 11, 2, 7, 0, 0).unwrap();
        let pts = (0..n)
            .map(|i| {
                GpsPoint::new(
                    lat0 + i as f64 * step_m / METERS_PER_DEGREE_LAT,
                    13.4,
                    t0 + Duration::seconds(i as i64),
                )
                .unwrap()
            })
            .collect();
        Trip::new(id, pts).unwrap()
    }

    #[test]
    fn sparse_trip_removed_first() {
        let ds = TripDataset::new(vec![line_trip("a", 52.4, 40, 125.0)]).unwrap();
        let (out, rep) = preprocess(&ds, &PreprocessConfig::with_bbox(BBox::BERLIN)).unwrap();
        assert!(out.is_empty());
        assert_eq!(rep.n_removed_sparse, 1);
    }

    #[test]
    fn trims_floor_five_percent() {
        let trips: Vec<Trip> = (0..100)
            .map(|i| line_trip(&format!("t{i:03}"), 52.4, 60, 10.0 + i as f64))
            .collect();
        let ds = TripDataset::new(trips).unwrap();
        let (out, rep) = preprocess(&ds, &PreprocessConfig::with_bbox(BBox::BERLIN)).unwrap();
        assert_eq!(rep.n_removed_long_quantile, 5);
        assert_eq!(out.len(), 95);
        for i in 95..100 {
            assert!(out.get(&format!("t{i:03}").as_str().into()).is_none());
        }
    }

    #[test]
    fn out_of_bbox_removed_last() {
        let mut pts = line_trip("x", 52.4, 60, 10.0).into_points();
        pts.last_mut().unwrap().lat = 52.9;
        let ds = TripDataset::new(vec![Trip::new("x", pts).unwrap()]).unwrap();
        let (out, rep) = preprocess(&ds, &PreprocessConfig::with_bbox(BBox::BERLIN)).unwrap();
        assert!(out.is_empty());
        assert_eq!(rep.n_removed_bbox, 1);
    }

    #[test]
    fn short_and_outside_counts_as_short() {
        // 59 m long, crossing the northern edge of a tight box.
        let ds = TripDataset::new(vec![line_trip("x", 52.4, 60, 1.0)]).unwrap();
        let bbox = BBox::new(52.0, 13.0, 52.40003, 14.0).unwrap();
        let (_, rep) = preprocess(&ds, &PreprocessConfig::with_bbox(bbox)).unwrap();
        assert_eq!(rep.n_removed_short, 1);
        assert_eq!(rep.n_removed_bbox, 0);
    }
}
