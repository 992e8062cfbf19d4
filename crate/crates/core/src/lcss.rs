//! Longest-common-subsequence similarity between point sequences.
//!
//! Two points match when their haversine distance is strictly below epsilon.
//! The score is the LCS length divided by the length of the shorter sequence.
//! Time is ignored.

use crate::model::{haversine_deg, GpsPoint, Trip, EARTH_RADIUS_M};

/// Points pre-projected onto the unit sphere so that most match decisions
/// are a chord-length comparison. Decisions close to the threshold fall back
/// to the haversine formula, so results equal the plain definition exactly.
#[derive(Debug, Clone)]
pub struct PreparedTrack {
    deg: Vec<(f64, f64)>,
    unit: Vec<[f64; 3]>,
}

impl PreparedTrack {
    pub fn new(points: &[GpsPoint]) -> Self {
        let deg: Vec<(f64, f64)> = points.iter().map(|p| (p.lat, p.lon)).collect();
        let unit = deg
            .iter()
            .map(|&(lat, lon)| {
                let (phi, lambda) = (lat.to_radians(), lon.to_radians());
                [phi.cos() * lambda.cos(), phi.cos() * lambda.sin(), phi.sin()]
            })
            .collect();
        Self { deg, unit }
    }

    pub fn from_trip(trip: &Trip) -> Self {
        Self::new(trip.points())
    }

    pub fn len(&self) -> usize {
        self.deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deg.is_empty()
    }

    pub fn similarity(&self, other: &PreparedTrack, epsilon_m: f64) -> f64 {
        let m = Matcher::new(epsilon_m);
        normalize(lcs_len(self, other, false, &m), self.len(), other.len())
    }

    /// Maximum over the forward comparison and the comparison with `other`
    /// traversed backwards.
    pub fn directionless(&self, other: &PreparedTrack, epsilon_m: f64) -> f64 {
        let m = Matcher::new(epsilon_m);
        let fwd = lcs_len(self, other, false, &m);
        if fwd == self.len().min(other.len()) {
            return normalize(fwd, self.len(), other.len());
        }
        let rev = lcs_len(self, other, true, &m);
        normalize(fwd.max(rev), self.len(), other.len())
    }
}

struct Matcher {
    epsilon_m: f64,
    chord_lo: f64,
    chord_hi: f64,
}

impl Matcher {
    fn new(epsilon_m: f64) -> Self {
        let half = (epsilon_m / (2.0 * EARTH_RADIUS_M)).min(std::f64::consts::FRAC_PI_2);
        let chord = 2.0 * half.sin();
        let chord_sq = chord * chord;
        Self {
            epsilon_m,
            chord_lo: chord_sq * (1.0 - 1e-9),
            chord_hi: chord_sq * (1.0 + 1e-9),
        }
    }

    #[inline]
    fn matches(&self, a: &PreparedTrack, i: usize, b: &PreparedTrack, j: usize) -> bool {
        let (u, v) = (&a.unit[i], &b.unit[j]);
        let c = (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2);
        if c < self.chord_lo {
            true
        } else if c > self.chord_hi {
            false
        } else {
            let (p, q) = (a.deg[i], b.deg[j]);
            haversine_deg(p.0, p.1, q.0, q.1) < self.epsilon_m
        }
    }
}

fn normalize(lcs: usize, n: usize, m: usize) -> f64 {
    let shorter = n.min(m);
    if shorter == 0 {
        0.0
    } else {
        lcs as f64 / shorter as f64
    }
}

/// Rolling-row LCS dynamic program; `reverse_b` walks `b` from its end.
fn lcs_len(a: &PreparedTrack, b: &PreparedTrack, reverse_b: bool, m: &Matcher) -> usize {
    let (n, k) = (a.len(), b.len());
    if n == 0 || k == 0 {
        return 0;
    }
    let mut prev = vec![0u32; k + 1];
    let mut curr = vec![0u32; k + 1];
    for i in 0..n {
        for j in 1..=k {
            let bj = if reverse_b { k - j } else { j - 1 };
            curr[j] = if m.matches(a, i, b, bj) {
                prev[j - 1] + 1
            } else {
                prev[j].max(curr[j - 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[k] as usize
}

pub fn lcss_points(a: &[GpsPoint], b: &[GpsPoint], epsilon_m: f64) -> f64 {
    PreparedTrack::new(a).similarity(&PreparedTrack::new(b), epsilon_m)
}

pub fn directionless_lcss_points(a: &[GpsPoint], b: &[GpsPoint], epsilon_m: f64) -> f64 {
    PreparedTrack::new(a).directionless(&PreparedTrack::new(b), epsilon_m)
}

pub fn lcss_similarity(a: &Trip, b: &Trip, epsilon_m: f64) -> f64 {
    lcss_points(a.points(), b.points(), epsilon_m)
}

pub fn directionless_lcss(a: &Trip, b: &Trip, epsilon_m: f64) -> f64 {
    directionless_lcss_points(a.points(), b.points(), epsilon_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::METERS_PER_DEGREE_LAT;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn pt(lat: f64, lon: f64) -> GpsPoint {
        GpsPoint::new(lat, lon, Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()).unwrap()
    }

    /// Point `north_m` meters north and `east_m` east of a fixed Berlin anchor.
    fn local(north_m: f64, east_m: f64) -> GpsPoint {
        let lat0: f64 = 52.5;
        pt(
            lat0 + north_m / METERS_PER_DEGREE_LAT,
            13.4 + east_m / (METERS_PER_DEGREE_LAT * lat0.to_radians().cos()),
        )
    }

    /// Exponential recursion over all monotone matchings.
    fn brute(a: &[GpsPoint], b: &[GpsPoint], eps: f64) -> usize {
        if a.is_empty() || b.is_empty() {
            return 0;
        }
        let skip = brute(&a[1..], b, eps).max(brute(a, &b[1..], eps));
        if haversine_deg(a[0].lat, a[0].lon, b[0].lat, b[0].lon) < eps {
            skip.max(1 + brute(&a[1..], &b[1..], eps))
        } else {
            skip
        }
    }

    #[test]
    fn identical_is_one() {
        let a: Vec<_> = (0..7).map(|i| local(i as f64 * 300.0, 0.0)).collect();
        assert_eq!(lcss_points(&a, &a, 200.0), 1.0);
    }

    /// Lower trip runs west to east along y=0 with points every 400 m; the
    /// upper trip sits 150 m north for its first two points and 400 m north
    /// for the last two, so only half of the shorter trip lies within 200 m.
    fn figure_pair() -> (Vec<GpsPoint>, Vec<GpsPoint>) {
        let lower: Vec<_> = (0..6).map(|i| local(0.0, i as f64 * 400.0)).collect();
        let upper = vec![
            local(150.0, 0.0),
            local(150.0, 400.0),
            local(400.0, 800.0),
            local(400.0, 1200.0),
        ];
        (upper, lower)
    }

    #[test]
    fn figure_configuration_forward_and_reversed() {
        let (upper, lower) = figure_pair();
        assert_eq!(lcss_points(&upper, &lower, 200.0), 0.5);
        let reversed: Vec<_> = upper.iter().rev().copied().collect();
        assert_eq!(lcss_points(&reversed, &lower, 200.0), 0.25);
        assert_eq!(directionless_lcss_points(&reversed, &lower, 200.0), 0.5);
    }

    #[test]
    fn palindrome_vs_itself() {
        let a = vec![local(0.0, 0.0), local(500.0, 0.0), local(0.0, 0.0)];
        assert_eq!(lcss_points(&a, &a, 100.0), 1.0);
        let r: Vec<_> = a.iter().rev().copied().collect();
        assert_eq!(lcss_points(&a, &r, 100.0), 1.0);
        assert_eq!(directionless_lcss_points(&a, &a, 100.0), 1.0);
    }

    #[test]
    fn strict_threshold() {
        let a = vec![local(0.0, 0.0)];
        let b = vec![local(100.0, 0.0)];
        let d = haversine_deg(a[0].lat, a[0].lon, b[0].lat, b[0].lon);
        assert_eq!(lcss_points(&a, &b, d), 0.0);
        assert_eq!(lcss_points(&a, &b, d * (1.0 + 1e-12)), 1.0);
    }

    #[test]
    fn subsequence_scores_one() {
        let long: Vec<_> = (0..10).map(|i| local(i as f64 * 300.0, 0.0)).collect();
        let short: Vec<_> = [1, 4, 8].iter().map(|&i| local(i as f64 * 300.0 + 20.0, 0.0)).collect();
        assert_eq!(lcss_points(&short, &long, 50.0), 1.0);
    }

    fn track() -> impl Strategy<Value = Vec<GpsPoint>> {
        proptest::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 1..=8)
            .prop_map(|v| v.into_iter().map(|(n, e)| local(n, e)).collect())
    }

    proptest! {
        #[test]
        fn dp_equals_recursion(a in track(), b in track(), eps in 50.0f64..400.0) {
            let got = lcss_points(&a, &b, eps);
            let want = brute(&a, &b, eps) as f64 / a.len().min(b.len()) as f64;
            prop_assert_eq!(got, want);
        }

        #[test]
        fn directionless_symmetric(a in track(), b in track(), eps in 50.0f64..400.0) {
            let ab = directionless_lcss_points(&a, &b, eps);
            let ba = directionless_lcss_points(&b, &a, eps);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn monotone_in_epsilon(a in track(), b in track(), e1 in 10.0f64..300.0, de in 0.0f64..300.0) {
            prop_assert!(lcss_points(&a, &b, e1) <= lcss_points(&a, &b, e1 + de));
        }
    }
}
