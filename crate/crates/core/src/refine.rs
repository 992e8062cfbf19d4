//! TF-IDF location-similarity refinement.
//!
//! Every preliminary cluster ("user") is profiled by how often its trips start
//! or end in each cell of a coarse grid. Pairs of users are scored by the mean
//! product of their TF-IDF weights over co-visited cells, and the best pairs
//! are merged in batches of `n_matches` until the best remaining score drops
//! below the square of the `q_match` quantile of the first iteration's TF-IDF
//! weights.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{CellId, GridSpec};
use crate::model::{AttackParams, ClusterAssignment, TripDataset, UserId};
use crate::stats::quantile_linear;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitProfile {
    pub user: UserId,
    pub visits: BTreeMap<CellId, u64>,
}

impl VisitProfile {
    pub fn total(&self) -> u64 {
        self.visits.values().sum()
    }

    fn absorb(&mut self, other: &VisitProfile) {
        for (c, n) in &other.visits {
            *self.visits.entry(*c).or_insert(0) += n;
        }
    }
}

/// One profile per user of `assignment`, counting the start and end cell of
/// every trip on `grid`. Sorted by user.
pub fn build_profiles(
    assignment: &ClusterAssignment,
    ds: &TripDataset,
    grid: &GridSpec,
) -> Result<Vec<VisitProfile>> {
    let mut by_user: BTreeMap<UserId, BTreeMap<CellId, u64>> = BTreeMap::new();
    for (id, user) in assignment.iter() {
        let trip = ds
            .get(id)
            .ok_or_else(|| crate::error::Error::InvalidParams(format!("assignment names unknown trip {id}")))?;
        let visits = by_user.entry(user).or_default();
        for p in [trip.start_point(), trip.end_point()] {
            *visits.entry(grid.cell_of(p)?).or_insert(0) += 1;
        }
    }
    Ok(by_user
        .into_iter()
        .map(|(user, visits)| VisitProfile { user, visits })
        .collect())
}

/// Relative visit frequency of `g` for `u`; zero when `u` never visited `g`.
pub fn tf(g: &CellId, u: &VisitProfile) -> f64 {
    match u.visits.get(g) {
        Some(&n) => n as f64 / u.total() as f64,
        None => 0.0,
    }
}

/// `ln(|U| / (1 + number of users that visited g))`. Negative when nearly
/// every user visited `g`.
pub fn idf(g: &CellId, users: &[VisitProfile]) -> f64 {
    let df = users.iter().filter(|u| u.visits.contains_key(g)).count();
    idf_from_counts(users.len(), df)
}

fn idf_from_counts(n_users: usize, df: usize) -> f64 {
    (n_users as f64 / (1 + df) as f64).ln()
}

pub fn tfidf(g: &CellId, u: &VisitProfile, users: &[VisitProfile]) -> f64 {
    tf(g, u) * idf(g, users)
}

/// Mean product of TF-IDF weights over co-visited cells; `None` when the two
/// users share no cell.
pub fn locsim(ui: &VisitProfile, uj: &VisitProfile, users: &[VisitProfile]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for g in ui.visits.keys() {
        if uj.visits.contains_key(g) {
            sum += tfidf(g, ui, users) * tfidf(g, uj, users);
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Every TF-IDF weight `tfidf(g, u)` for `u` in `users` and `g` in `G_u`.
pub fn tfidf_values(users: &[VisitProfile]) -> Vec<f64> {
    let df = doc_freq(users);
    users
        .iter()
        .flat_map(|u| {
            let total = u.total() as f64;
            let df = &df;
            u.visits
                .iter()
                .map(move |(g, &n)| n as f64 / total * idf_from_counts(users.len(), df[g]))
        })
        .collect()
}

/// Stopping threshold: the squared `q` quantile of [`tfidf_values`].
pub fn stopping_threshold(users: &[VisitProfile], q: f64) -> Option<f64> {
    quantile_linear(&tfidf_values(users), q).map(|v| v * v)
}

fn doc_freq(users: &[VisitProfile]) -> HashMap<CellId, usize> {
    let mut df = HashMap::new();
    for u in users {
        for g in u.visits.keys() {
            *df.entry(*g).or_insert(0) += 1;
        }
    }
    df
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub user_a: UserId,
    pub user_b: UserId,
    pub locsim: f64,
}

/// Upper-triangular location-similarity matrix, holding only pairs with at
/// least one co-visited cell, ranked by descending similarity and then by
/// ascending user pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub ranked: Vec<Candidate>,
}

impl SimilarityMatrix {
    pub fn build(users: &[VisitProfile]) -> Self {
        let df = doc_freq(users);
        let n_users = users.len();
        let weights: Vec<BTreeMap<CellId, f64>> = users
            .iter()
            .map(|u| {
                let total = u.total() as f64;
                u.visits
                    .iter()
                    .map(|(g, &n)| (*g, n as f64 / total * idf_from_counts(n_users, df[g])))
                    .collect()
            })
            .collect();
        let mut inverted: HashMap<CellId, Vec<usize>> = HashMap::new();
        for (i, u) in users.iter().enumerate() {
            for g in u.visits.keys() {
                inverted.entry(*g).or_default().push(i);
            }
        }

        let mut ranked: Vec<Candidate> = (0..n_users)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
                for (g, wi) in &weights[i] {
                    for &j in &inverted[g] {
                        if j > i {
                            let e = acc.entry(j).or_insert((0.0, 0));
                            e.0 += wi * weights[j][g];
                            e.1 += 1;
                        }
                    }
                }
                let (ua, users) = (users[i].user, users);
                acc.into_iter().map(move |(j, (sum, n))| Candidate {
                    user_a: ua.min(users[j].user),
                    user_b: ua.max(users[j].user),
                    locsim: sum / n as f64,
                })
            })
            .collect();
        ranked.sort_by(|x, y| {
            y.locsim
                .total_cmp(&x.locsim)
                .then_with(|| (x.user_a, x.user_b).cmp(&(y.user_a, y.user_b)))
        });
        Self { ranked }
    }

    pub fn get(&self, a: UserId, b: UserId) -> Option<f64> {
        let (a, b) = (a.min(b), a.max(b));
        self.ranked
            .iter()
            .find(|c| c.user_a == a && c.user_b == b)
            .map(|c| c.locsim)
    }
}

/// One realized merge; `user_b` was folded into `user_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeRecord {
    pub iteration: usize,
    pub user_a: UserId,
    pub user_b: UserId,
    pub locsim: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub assignment: ClusterAssignment,
    /// `None` when there was nothing to score.
    pub theta: Option<f64>,
    /// Iterations that realized at least one merge.
    pub iterations: usize,
    pub merges: Vec<MergeRecord>,
}

/// Result of merging profiles: the surviving profiles and where each
/// original user ended up.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMerge {
    pub profiles: Vec<VisitProfile>,
    pub survivor: BTreeMap<UserId, UserId>,
    pub theta: Option<f64>,
    pub iterations: usize,
    pub merges: Vec<MergeRecord>,
}

/// Iterative merging on profiles alone. Each iteration merges, best first,
/// up to `n_matches` pairs scoring at least the threshold, skipping pairs
/// with a member already merged in that iteration; the smaller user id
/// survives. Stops when the best pair scores below the threshold or no pair
/// shares a cell.
pub fn merge_profiles(profiles: Vec<VisitProfile>, n_matches: usize, q_match: f64) -> ProfileMerge {
    let theta = stopping_threshold(&profiles, q_match);
    let mut current: BTreeMap<UserId, VisitProfile> =
        profiles.into_iter().map(|p| (p.user, p)).collect();
    let mut survivor: BTreeMap<UserId, UserId> = current.keys().map(|u| (*u, *u)).collect();
    let mut merges = Vec::new();
    let mut iterations = 0;

    if let Some(theta) = theta {
        loop {
            let snapshot: Vec<VisitProfile> = current.values().cloned().collect();
            let matrix = SimilarityMatrix::build(&snapshot);
            match matrix.ranked.first() {
                Some(best) if best.locsim >= theta => {}
                _ => break,
            }
            iterations += 1;
            let mut touched: BTreeSet<UserId> = BTreeSet::new();
            let mut realized = 0;
            for c in &matrix.ranked {
                if realized == n_matches || c.locsim < theta {
                    break;
                }
                if touched.contains(&c.user_a) || touched.contains(&c.user_b) {
                    continue;
                }
                touched.insert(c.user_a);
                touched.insert(c.user_b);
                let gone = current.remove(&c.user_b).expect("candidate users are live");
                current.get_mut(&c.user_a).expect("candidate users are live").absorb(&gone);
                for s in survivor.values_mut() {
                    if *s == c.user_b {
                        *s = c.user_a;
                    }
                }
                merges.push(MergeRecord {
                    iteration: iterations,
                    user_a: c.user_a,
                    user_b: c.user_b,
                    locsim: c.locsim,
                    theta,
                });
                realized += 1;
            }
        }
    }

    ProfileMerge {
        profiles: current.into_values().collect(),
        survivor,
        theta,
        iterations,
        merges,
    }
}

pub fn refine_clusters(
    assignment: &ClusterAssignment,
    ds: &TripDataset,
    params: &AttackParams,
) -> Result<RefineOutcome> {
    let grid = GridSpec::new(params.bbox, params.s_cell_tfidf_m)?;
    let profiles = build_profiles(assignment, ds, &grid)?;
    let merged = merge_profiles(profiles, params.n_matches, params.q_match);
    let mut out = ClusterAssignment::new();
    for (id, user) in assignment.iter() {
        out.insert(id.clone(), merged.survivor[&user]);
    }
    Ok(RefineOutcome {
        assignment: out,
        theta: merged.theta,
        iterations: merged.iterations,
        merges: merged.merges,
    })
}
