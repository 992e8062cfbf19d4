//! Metric rectangular tessellation of a bounding box.
//!
//! Meters are converted to degrees with an equirectangular projection anchored
//! at the box's mid-latitude, so a cell is `cell_side_m` on each side to within
//! a fraction of a percent over a metropolitan area.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, GpsPoint};

pub const METERS_PER_DEGREE_LAT: f64 = 111_320.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub row: u32,
    pub col: u32,
}

impl CellId {
    pub const fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }

    /// 8-neighborhood: shares an edge or a corner.
    pub fn touches(&self, other: &CellId) -> bool {
        self != other && self.row.abs_diff(other.row) <= 1 && self.col.abs_diff(other.col) <= 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    bbox: BBox,
    cell_side_m: f64,
    meters_per_degree_lon: f64,
    rows: u32,
    cols: u32,
}

impl GridSpec {
    pub fn new(bbox: BBox, cell_side_m: f64) -> Result<Self> {
        if !(cell_side_m.is_finite() && cell_side_m > 0.0) {
            return Err(Error::InvalidParams(format!(
                "cell side must be > 0, got {cell_side_m}"
            )));
        }
        let mid_lat = (bbox.lat_min + bbox.lat_max) / 2.0;
        let meters_per_degree_lon = METERS_PER_DEGREE_LAT * mid_lat.to_radians().cos();
        let height = (bbox.lat_max - bbox.lat_min) * METERS_PER_DEGREE_LAT;
        let width = (bbox.lon_max - bbox.lon_min) * meters_per_degree_lon;
        let rows = ((height / cell_side_m).ceil() as u64).max(1);
        let cols = ((width / cell_side_m).ceil() as u64).max(1);
        if rows > u32::MAX as u64 || cols > u32::MAX as u64 {
            return Err(Error::InvalidParams("grid too fine for bounding box".into()));
        }
        Ok(Self {
            bbox,
            cell_side_m,
            meters_per_degree_lon,
            rows: rows as u32,
            cols: cols as u32,
        })
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    pub fn cell_side_m(&self) -> f64 {
        self.cell_side_m
    }

    pub fn meters_per_degree_lon(&self) -> f64 {
        self.meters_per_degree_lon
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn cell_of(&self, p: &GpsPoint) -> Result<CellId> {
        self.cell_of_deg(p.lat, p.lon)
    }

    pub fn cell_of_deg(&self, lat: f64, lon: f64) -> Result<CellId> {
        let b = &self.bbox;
        if !(lat >= b.lat_min && lat <= b.lat_max && lon >= b.lon_min && lon <= b.lon_max) {
            return Err(Error::OutsideGrid { lat, lon });
        }
        let row = ((lat - b.lat_min) * METERS_PER_DEGREE_LAT / self.cell_side_m).floor() as u64;
        let col = ((lon - b.lon_min) * self.meters_per_degree_lon / self.cell_side_m).floor() as u64;
        Ok(CellId {
            row: (row as u32).min(self.rows - 1),
            col: (col as u32).min(self.cols - 1),
        })
    }

    /// Center of a cell in degrees (lat, lon); used by the synthetic generator.
    pub fn cell_center(&self, cell: CellId) -> (f64, f64) {
        let lat = self.bbox.lat_min
            + (cell.row as f64 + 0.5) * self.cell_side_m / METERS_PER_DEGREE_LAT;
        let lon = self.bbox.lon_min
            + (cell.col as f64 + 0.5) * self.cell_side_m / self.meters_per_degree_lon;
        (lat, lon)
    }
}

/// A maximal connected group of cells; cells are kept sorted so the first
/// one is the lexicographically smallest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Zone {
    cells: BTreeSet<CellId>,
}

impl Zone {
    pub fn cells(&self) -> &BTreeSet<CellId> {
        &self.cells
    }

    pub fn min_cell(&self) -> CellId {
        *self.cells.iter().next().expect("zones are non-empty")
    }

    pub fn contains(&self, c: &CellId) -> bool {
        self.cells.contains(c)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Partition `cells` into maximal 8-connected components, returned in order
/// of their smallest cell.
pub fn dissolve_cells(cells: &BTreeSet<CellId>) -> Vec<Zone> {
    let mut seen: HashSet<CellId> = HashSet::with_capacity(cells.len());
    let mut zones = Vec::new();
    for &seed in cells {
        if !seen.insert(seed) {
            continue;
        }
        let mut component = BTreeSet::new();
        let mut queue = VecDeque::from([seed]);
        while let Some(c) = queue.pop_front() {
            component.insert(c);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (r, k) = (c.row as i64 + dr, c.col as i64 + dc);
                    if r < 0 || k < 0 || r > u32::MAX as i64 || k > u32::MAX as i64 {
                        continue;
                    }
                    let n = CellId::new(r as u32, k as u32);
                    if cells.contains(&n) && seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
        }
        zones.push(Zone { cells: component });
    }
    zones
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn pt(lat: f64, lon: f64) -> GpsPoint {
        GpsPoint::new(lat, lon, Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()).unwrap()
    }

    fn berlin() -> GridSpec {
        GridSpec::new(BBox::BERLIN, 200.0).unwrap()
    }

    #[test]
    fn origin_maps_to_zero() {
        let g = berlin();
        assert_eq!(g.cell_of(&pt(52.100, 12.562)).unwrap(), CellId::new(0, 0));
    }

    #[test]
    fn offset_north_by_250m_is_row_one() {
        let g = berlin();
        let lat = 52.100 + 250.0 / METERS_PER_DEGREE_LAT;
        assert_eq!(g.cell_of(&pt(lat, 12.562)).unwrap(), CellId::new(1, 0));
    }

    #[test]
    fn nearby_points_share_cell() {
        let g = berlin();
        let (lat, lon) = g.cell_center(CellId::new(100, 100));
        let lat2 = lat + 10.0 / METERS_PER_DEGREE_LAT;
        assert_eq!(g.cell_of(&pt(lat, lon)).unwrap(), g.cell_of(&pt(lat2, lon)).unwrap());
    }

    #[test]
    fn max_edge_clamps_and_outside_errors() {
        let g = berlin();
        let c = g.cell_of(&pt(52.803, 14.129)).unwrap();
        assert_eq!(c, CellId::new(g.rows() - 1, g.cols() - 1));
        assert!(matches!(g.cell_of(&pt(52.9, 13.0)), Err(Error::OutsideGrid { .. })));
        assert!(GridSpec::new(BBox::BERLIN, 0.0).is_err());
    }

    #[test]
    fn dissolve_examples() {
        let set = |v: &[(u32, u32)]| v.iter().map(|&(r, c)| CellId::new(r, c)).collect::<BTreeSet<_>>();
        let zones = dissolve_cells(&set(&[(0, 0), (0, 1), (5, 5)]));
        assert_eq!(zones.len(), 2);
        assert_eq!(zones[0].cells(), &set(&[(0, 0), (0, 1)]));
        assert_eq!(zones[1].cells(), &set(&[(5, 5)]));
        assert_eq!(dissolve_cells(&set(&[(0, 0), (1, 1)])).len(), 1);
        assert_eq!(dissolve_cells(&set(&[(3, 4)])).len(), 1);
        assert!(dissolve_cells(&BTreeSet::new()).is_empty());
    }

    /// Union-find over all pairs; independent of the BFS above.
    fn components_oracle(cells: &[CellId]) -> BTreeSet<BTreeSet<CellId>> {
        let n = cells.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for i in 0..n {
            for j in i + 1..n {
                if cells[i].touches(&cells[j]) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, BTreeSet<CellId>> = Default::default();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().insert(cells[i]);
        }
        groups.into_values().collect()
    }

    proptest! {
        #[test]
        fn dissolve_matches_pairwise_oracle(raw in proptest::collection::btree_set((0u32..8, 0u32..8), 0..30)) {
            let cells: BTreeSet<CellId> = raw.into_iter().map(|(r, c)| CellId::new(r, c)).collect();
            let zones = dissolve_cells(&cells);
            let got: BTreeSet<BTreeSet<CellId>> = zones.iter().map(|z| z.cells().clone()).collect();
            let v: Vec<CellId> = cells.iter().copied().collect();
            prop_assert_eq!(&got, &components_oracle(&v));
            let total: usize = zones.iter().map(Zone::len).sum();
            prop_assert_eq!(total, cells.len());
        }

        #[test]
        fn cell_of_is_total_on_bbox(fl in 0.0f64..=1.0, fo in 0.0f64..=1.0) {
            let g = berlin();
            let b = g.bbox();
            let lat = b.lat_min + fl * (b.lat_max - b.lat_min);
            let lon = b.lon_min + fo * (b.lon_max - b.lon_min);
            let c = g.cell_of(&pt(lat, lon)).unwrap();
            prop_assert!(c.row < g.rows() && c.col < g.cols());
        }
    }
}
