//! Evaluation: external clustering indices against ground truth, the
//! p-point re-identification experiment, per-user mobility characteristics
//! and univariate least squares.
//!
//! All entropies use the natural logarithm.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;
use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::grid::{CellId, GridSpec};
use crate::model::{haversine_deg, ClusterAssignment, TripDataset, TripId, UserId};
use crate::seeding;
use crate::stats::{mean, t_confidence_half_width};

/// Cluster × class co-occurrence counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    /// Sparse cells `(cluster, class, count)` with `count > 0`.
    pub cells: Vec<(usize, usize, u64)>,
    pub cluster_sizes: Vec<u64>,
    pub class_sizes: Vec<u64>,
    pub total: u64,
}

fn encode<L: Eq + Hash + Clone>(labels: &[L]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<L, usize> = HashMap::new();
    let codes = labels
        .iter()
        .map(|l| {
            let n = ids.len();
            *ids.entry(l.clone()).or_insert(n)
        })
        .collect();
    (codes, ids.len())
}

impl ContingencyTable {
    pub fn from_labels<P, T>(pred: &[P], truth: &[T]) -> Self
    where
        P: Eq + Hash + Clone,
        T: Eq + Hash + Clone,
    {
        assert_eq!(pred.len(), truth.len(), "label vectors differ in length");
        let (p, np) = encode(pred);
        let (t, nt) = encode(truth);
        let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
        let mut cluster_sizes = vec![0u64; np];
        let mut class_sizes = vec![0u64; nt];
        for (&i, &j) in p.iter().zip(&t) {
            *counts.entry((i, j)).or_insert(0) += 1;
            cluster_sizes[i] += 1;
            class_sizes[j] += 1;
        }
        let mut cells: Vec<(usize, usize, u64)> = counts.into_iter().map(|((i, j), n)| (i, j, n)).collect();
        cells.sort_unstable();
        Self {
            cells,
            cluster_sizes,
            class_sizes,
            total: pred.len() as u64,
        }
    }

    /// Predicted and true labels aligned by trip id. Fails when the trip sets
    /// differ.
    pub fn from_assignment(pred: &ClusterAssignment, truth: &BTreeMap<TripId, String>) -> Result<Self> {
        let (p, t) = aligned(pred, truth)?;
        Ok(Self::from_labels(&p, &t))
    }

    /// Each cluster maps to exactly one class and vice versa.
    fn is_bijective(&self) -> bool {
        self.cells.len() == self.cluster_sizes.len() && self.cells.len() == self.class_sizes.len()
    }
}

fn aligned(pred: &ClusterAssignment, truth: &BTreeMap<TripId, String>) -> Result<(Vec<UserId>, Vec<String>)> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidParams(format!(
            "assignment covers {} trips, ground truth {}",
            pred.len(),
            truth.len()
        )));
    }
    let mut p = Vec::with_capacity(truth.len());
    let mut t = Vec::with_capacity(truth.len());
    for (id, label) in truth {
        let u = pred
            .get(id)
            .ok_or_else(|| Error::InvalidParams(format!("trip {id} missing from assignment")))?;
        p.push(u);
        t.push(label.clone());
    }
    Ok((p, t))
}

fn comb2(n: u64) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

pub fn ari_from_table(ct: &ContingencyTable) -> f64 {
    if ct.total < 2 {
        return 1.0;
    }
    let index: f64 = ct.cells.iter().map(|c| comb2(c.2)).sum();
    let a: f64 = ct.cluster_sizes.iter().map(|&n| comb2(n)).sum();
    let b: f64 = ct.class_sizes.iter().map(|&n| comb2(n)).sum();
    let expected = a * b / comb2(ct.total);
    let max = (a + b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

fn entropy_of(sizes: &[u64], total: u64) -> f64 {
    let n = total as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn mutual_information(ct: &ContingencyTable) -> f64 {
    let n = ct.total as f64;
    ct.cells
        .iter()
        .map(|&(i, j, nij)| {
            let nij = nij as f64;
            let (a, b) = (ct.cluster_sizes[i] as f64, ct.class_sizes[j] as f64);
            nij / n * (n * nij / (a * b)).ln()
        })
        .sum::<f64>()
        .max(0.0)
}

fn ln_factorials(n: u64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    v.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        v.push(acc);
    }
    v
}

/// Expected mutual information under the hypergeometric (permutation) model
/// with fixed marginals.
pub fn expected_mutual_information(ct: &ContingencyTable) -> f64 {
    let n = ct.total;
    if n == 0 {
        return 0.0;
    }
    let lf = ln_factorials(n);
    let group = |sizes: &[u64]| {
        let mut m: BTreeMap<u64, u64> = BTreeMap::new();
        for &s in sizes {
            *m.entry(s).or_insert(0) += 1;
        }
        m.into_iter().collect::<Vec<_>>()
    };
    let rows = group(&ct.cluster_sizes);
    let cols = group(&ct.class_sizes);
    let nf = n as f64;
    rows.par_iter()
        .map(|&(a, ka)| {
            let mut s = 0.0;
            for &(b, kb) in &cols {
                let lo = (a + b).saturating_sub(n).max(1);
                let hi = a.min(b);
                let mut term = 0.0;
                for nij in lo..=hi {
                    let x = nij as f64;
                    let log_p = lf[a as usize] + lf[b as usize] + lf[(n - a) as usize] + lf[(n - b) as usize]
                        - lf[n as usize]
                        - lf[nij as usize]
                        - lf[(a - nij) as usize]
                        - lf[(b - nij) as usize]
                        - lf[(n + nij - a - b) as usize];
                    term += x / nf * (nf * x / (a as f64 * b as f64)).ln() * log_p.exp();
                }
                s += term * kb as f64;
            }
            s * ka as f64
        })
        .sum()
}

pub fn ami_from_table(ct: &ContingencyTable) -> f64 {
    let (nc, nk) = (ct.cluster_sizes.len(), ct.class_sizes.len());
    if (nc == 1 && nk == 1) || ct.total == 0 || ct.is_bijective() {
        return 1.0;
    }
    let mi = mutual_information(ct);
    let emi = expected_mutual_information(ct);
    let h_pred = entropy_of(&ct.cluster_sizes, ct.total);
    let h_true = entropy_of(&ct.class_sizes, ct.total);
    let mut denom = (h_pred + h_true) / 2.0 - emi;
    denom = if denom < 0.0 {
        denom.min(-f64::EPSILON)
    } else {
        denom.max(f64::EPSILON)
    };
    (mi - emi) / denom
}

/// (homogeneity, completeness).
pub fn homogeneity_completeness_from_table(ct: &ContingencyTable) -> (f64, f64) {
    let n = ct.total as f64;
    if ct.total == 0 {
        return (1.0, 1.0);
    }
    let h_true = entropy_of(&ct.class_sizes, ct.total);
    let h_pred = entropy_of(&ct.cluster_sizes, ct.total);
    let mut h_true_given_pred = 0.0;
    let mut h_pred_given_true = 0.0;
    for &(i, j, nij) in &ct.cells {
        let x = nij as f64;
        h_true_given_pred -= x / n * (x / ct.cluster_sizes[i] as f64).ln();
        h_pred_given_true -= x / n * (x / ct.class_sizes[j] as f64).ln();
    }
    let h = if h_true == 0.0 { 1.0 } else { 1.0 - h_true_given_pred / h_true };
    let c = if h_pred == 0.0 { 1.0 } else { 1.0 - h_pred_given_true / h_pred };
    (h, c)
}

pub fn ari(pred: &ClusterAssignment, truth: &BTreeMap<TripId, String>) -> Result<f64> {
    Ok(ari_from_table(&ContingencyTable::from_assignment(pred, truth)?))
}

pub fn ami(pred: &ClusterAssignment, truth: &BTreeMap<TripId, String>) -> Result<f64> {
    Ok(ami_from_table(&ContingencyTable::from_assignment(pred, truth)?))
}

pub fn homogeneity_completeness(pred: &ClusterAssignment, truth: &BTreeMap<TripId, String>) -> Result<(f64, f64)> {
    Ok(homogeneity_completeness_from_table(&ContingencyTable::from_assignment(pred, truth)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusteringScores {
    pub ari: f64,
    pub ami: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub n_clusters: usize,
}

pub fn clustering_scores(pred: &ClusterAssignment, truth: &BTreeMap<TripId, String>) -> Result<ClusteringScores> {
    let ct = ContingencyTable::from_assignment(pred, truth)?;
    let (homogeneity, completeness) = homogeneity_completeness_from_table(&ct);
    Ok(ClusteringScores {
        ari: ari_from_table(&ct),
        ami: ami_from_table(&ct),
        homogeneity,
        completeness,
        n_clusters: ct.cluster_sizes.len(),
    })
}

/// Precision, recall and F-score of one retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Retrieval {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

pub fn score_retrieval(retrieved: &BTreeSet<TripId>, actual: &BTreeSet<TripId>) -> Retrieval {
    let tp = retrieved.intersection(actual).count() as f64;
    let precision = if retrieved.is_empty() { 0.0 } else { tp / retrieved.len() as f64 };
    let recall = if actual.is_empty() { 0.0 } else { tp / actual.len() as f64 };
    let f_score = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Retrieval {
        precision,
        recall,
        f_score,
    }
}

/// Every trip sharing a predicted user with any of `hit`.
pub fn retrieve(
    hit: impl IntoIterator<Item = TripId>,
    pred: &ClusterAssignment,
    clusters: &BTreeMap<UserId, Vec<TripId>>,
) -> BTreeSet<TripId> {
    let users: BTreeSet<UserId> = hit.into_iter().filter_map(|t| pred.get(&t)).collect();
    users
        .iter()
        .flat_map(|u| clusters[u].iter().cloned())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReidResult {
    pub user: String,
    pub n_trips: usize,
    #[serde(skip)]
    pub samples: Vec<Retrieval>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f_score: f64,
    pub ci_precision: f64,
    pub ci_recall: f64,
    pub ci_f_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReidConfig {
    pub p: usize,
    pub n_samples: usize,
    pub rng_seed: u64,
}

impl Default for ReidConfig {
    fn default() -> Self {
        Self {
            p: 4,
            n_samples: 100,
            rng_seed: 0,
        }
    }
}

/// For every user with at least `p + 1` trips, repeatedly sample `p`
/// distinct points from the union of the user's trip points, retrieve all
/// trips in the predicted clusters of the trips those points belong to, and
/// score the retrieval against the user's true trips. Users with fewer trips
/// are left out of the results but stay in the clustering.
pub fn reid_evaluate(pred: &ClusterAssignment, ds: &TripDataset, cfg: &ReidConfig) -> Result<Vec<ReidResult>> {
    let truth = ds.ground_truth().ok_or(Error::MissingLabels)?;
    if !pred.is_total_for(ds) {
        return Err(Error::InvalidParams("assignment does not cover the dataset".into()));
    }
    if cfg.p == 0 || cfg.n_samples == 0 {
        return Err(Error::InvalidParams("p and n_samples must be positive".into()));
    }
    let mut by_user: BTreeMap<&str, Vec<&TripId>> = BTreeMap::new();
    for (id, label) in truth {
        by_user.entry(label.as_str()).or_default().push(id);
    }
    let clusters = pred.clusters();
    let eligible: Vec<(&str, Vec<&TripId>)> = by_user
        .into_iter()
        .filter(|(_, trips)| trips.len() > cfg.p)
        .collect();

    Ok(eligible
        .par_iter()
        .map(|(user, trips)| {
            let actual: BTreeSet<TripId> = trips.iter().map(|t| (*t).clone()).collect();
            let mut offsets = Vec::with_capacity(trips.len());
            let mut total = 0usize;
            for t in trips {
                offsets.push(total);
                total += ds.get(t).expect("labelled trips exist").len();
            }
            let mut rng = seeding::stream(cfg.rng_seed, user);
            let samples: Vec<Retrieval> = (0..cfg.n_samples)
                .map(|_| {
                    let hit = sample(&mut rng, total, cfg.p.min(total))
                        .into_iter()
                        .map(|k| trips[offsets.partition_point(|&o| o <= k) - 1].clone());
                    score_retrieval(&retrieve(hit, pred, &clusters), &actual)
                })
                .collect();
            let col = |f: fn(&Retrieval) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
            let (pr, rc, fs) = (col(|r| r.precision), col(|r| r.recall), col(|r| r.f_score));
            ReidResult {
                user: user.to_string(),
                n_trips: trips.len(),
                mean_precision: mean(&pr),
                mean_recall: mean(&rc),
                mean_f_score: mean(&fs),
                ci_precision: t_confidence_half_width(&pr, 0.95),
                ci_recall: t_confidence_half_width(&rc, 0.95),
                ci_f_score: t_confidence_half_width(&fs, 0.95),
                samples,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserCharacteristics {
    pub user: String,
    pub avg_location_entropy: f64,
    pub random_entropy: f64,
    pub n_trips: usize,
    pub radius_of_gyration_m: f64,
}

/// Per true user: mean location entropy over the cells the user visited
/// (cells of trip start and end points), log of the number of distinct
/// visited cells, trip count, and radius of gyration over all trip points.
pub fn user_characteristics(ds: &TripDataset, grid: &GridSpec) -> Result<Vec<UserCharacteristics>> {
    let truth = ds.ground_truth().ok_or(Error::MissingLabels)?;
    let mut visits: BTreeMap<CellId, BTreeMap<&str, u64>> = BTreeMap::new();
    let mut user_cells: BTreeMap<&str, BTreeSet<CellId>> = BTreeMap::new();
    let mut user_trips: BTreeMap<&str, Vec<&TripId>> = BTreeMap::new();
    for trip in ds.trips() {
        let user = truth[trip.id()].as_str();
        user_trips.entry(user).or_default().push(trip.id());
        for p in [trip.start_point(), trip.end_point()] {
            let c = grid.cell_of(p)?;
            *visits.entry(c).or_default().entry(user).or_insert(0) += 1;
            user_cells.entry(user).or_default().insert(c);
        }
    }
    let entropy: BTreeMap<CellId, f64> = visits
        .iter()
        .map(|(c, per_user)| {
            let counts: Vec<u64> = per_user.values().copied().collect();
            (*c, entropy_of(&counts, counts.iter().sum()))
        })
        .collect();

    Ok(user_trips
        .into_iter()
        .map(|(user, trips)| {
            let cells = &user_cells[user];
            let avg = cells.iter().map(|c| entropy[c]).sum::<f64>() / cells.len() as f64;
            let points: Vec<(f64, f64)> = trips
                .iter()
                .flat_map(|t| ds.get(t).unwrap().points().iter().map(|p| (p.lat, p.lon)))
                .collect();
            let n = points.len() as f64;
            let clat = points.iter().map(|p| p.0).sum::<f64>() / n;
            let clon = points.iter().map(|p| p.1).sum::<f64>() / n;
            let msd = points
                .iter()
                .map(|&(la, lo)| haversine_deg(la, lo, clat, clon).powi(2))
                .sum::<f64>()
                / n;
            UserCharacteristics {
                user: user.to_string(),
                avg_location_entropy: avg,
                random_entropy: (cells.len() as f64).ln(),
                n_trips: trips.len(),
                radius_of_gyration_m: msd.sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Two-sided p-value of the slope's t statistic, n - 2 degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn ols_univariate(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::InvalidParams(format!(
            "regression needs two equal-length samples of at least 3, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let df = (n - 2) as f64;
    let se = (ss_res / df / sxx).sqrt();
    let p_value = if se == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = (slope / se).abs();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * (1.0 - dist.cdf(t))).clamp(0.0, 1.0)
    };
    Ok(OlsFit {
        slope,
        intercept,
        r_squared,
        p_value,
        n,
    })
}

/// Bumped whenever a field of [`EvaluationReport`] changes meaning.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    #[serde(flatten)]
    pub scores: ClusteringScores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReidSummary {
    pub p: usize,
    pub n_samples: usize,
    pub rng_seed: u64,
    pub eligible_users: usize,
    pub median_f_score: Option<f64>,
    pub mean_f_score: Option<f64>,
}

/// Mean F-score regressed on one user characteristic. `fit` is absent when
/// the regression is undefined; `note` says why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionRow {
    pub characteristic: String,
    pub fit: Option<OlsFit>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub label: String,
    pub obfuscated: bool,
    pub n_trips: usize,
    pub n_users: usize,
    pub stages: Vec<StageReport>,
    pub reid: ReidSummary,
    pub regressions: Vec<RegressionRow>,
}

/// Serializes as the report with the per-user tables appended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    #[serde(flatten)]
    pub report: EvaluationReport,
    #[serde(rename = "reid_per_user")]
    pub reid: Vec<ReidResult>,
    pub characteristics: Vec<UserCharacteristics>,
}

/// Score every stage against the labels, run re-identification on the last
/// stage, and relate per-user F-scores to mobility characteristics.
pub fn evaluate(
    ds: &TripDataset,
    stages: &[(String, ClusterAssignment)],
    reid_cfg: &ReidConfig,
    grid: &GridSpec,
    label: &str,
    obfuscated: bool,
) -> Result<Evaluation> {
    let truth = ds.ground_truth().ok_or(Error::MissingLabels)?;
    let (_, last) = stages
        .last()
        .ok_or_else(|| Error::InvalidParams("no assignment to evaluate".into()))?;
    let stage_reports = stages
        .iter()
        .map(|(name, a)| {
            Ok(StageReport {
                stage: name.clone(),
                scores: clustering_scores(a, truth)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reid = reid_evaluate(last, ds, reid_cfg)?;
    let characteristics = user_characteristics(ds, grid)?;

    let f: Vec<f64> = reid.iter().map(|r| r.mean_f_score).collect();
    let by_user: BTreeMap<&str, &UserCharacteristics> =
        characteristics.iter().map(|c| (c.user.as_str(), c)).collect();
    let features: [(&str, fn(&UserCharacteristics) -> f64); 4] = [
        ("avg_location_entropy", |c| c.avg_location_entropy),
        ("random_entropy", |c| c.random_entropy),
        ("n_trips", |c| c.n_trips as f64),
        ("radius_of_gyration_m", |c| c.radius_of_gyration_m),
    ];
    let regressions = features
        .iter()
        .map(|(name, get)| {
            let x: Vec<f64> = reid.iter().map(|r| get(by_user[r.user.as_str()])).collect();
            match ols_univariate(&x, &f) {
                Ok(fit) => RegressionRow {
                    characteristic: name.to_string(),
                    fit: Some(fit),
                    note: None,
                },
                Err(e) => RegressionRow {
                    characteristic: name.to_string(),
                    fit: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();

    let report = EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        label: label.to_string(),
        obfuscated,
        n_trips: ds.len(),
        n_users: characteristics.len(),
        stages: stage_reports,
        reid: ReidSummary {
            p: reid_cfg.p,
            n_samples: reid_cfg.n_samples,
            rng_seed: reid_cfg.rng_seed,
            eligible_users: reid.len(),
            median_f_score: crate::stats::median(&f),
            mean_f_score: (!f.is_empty()).then(|| mean(&f)),
        },
        regressions,
    };
    Ok(Evaluation {
        report,
        reid,
        characteristics,
    })
}

fn flush<W: Write>(mut w: csv::Writer<W>, what: &str) -> Result<()> {
    w.flush().map_err(|e| Error::io(what, e))
}

/// Per-user re-identification means and 95% half-widths, best F first.
pub fn write_reid_csv<W: Write>(reid: &[ReidResult], writer: W) -> Result<()> {
    let mut rows: Vec<&ReidResult> = reid.iter().collect();
    rows.sort_by(|a, b| b.mean_f_score.total_cmp(&a.mean_f_score).then_with(|| a.user.cmp(&b.user)));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "user", "n_trips", "mean_precision", "ci_precision", "mean_recall", "ci_recall", "mean_f_score", "ci_f_score",
    ])?;
    for r in rows {
        w.write_record([
            r.user.clone(),
            r.n_trips.to_string(),
            r.mean_precision.to_string(),
            r.ci_precision.to_string(),
            r.mean_recall.to_string(),
            r.ci_recall.to_string(),
            r.mean_f_score.to_string(),
            r.ci_f_score.to_string(),
        ])?;
    }
    flush(w, "<reid csv>")
}

/// One row per true user; `mean_f_score` is empty for users with too few
/// trips to be re-identification targets.
pub fn write_characteristics_csv<W: Write>(
    chars: &[UserCharacteristics],
    reid: &[ReidResult],
    writer: W,
) -> Result<()> {
    let f: BTreeMap<&str, f64> = reid.iter().map(|r| (r.user.as_str(), r.mean_f_score)).collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "user", "n_trips", "avg_location_entropy", "random_entropy", "radius_of_gyration_m", "mean_f_score",
    ])?;
    for c in chars {
        w.write_record([
            c.user.clone(),
            c.n_trips.to_string(),
            c.avg_location_entropy.to_string(),
            c.random_entropy.to_string(),
            c.radius_of_gyration_m.to_string(),
            f.get(c.user.as_str()).map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    flush(w, "<characteristics csv>")
}

/// `label,obfuscated,median_f_score` for comparing runs.
pub fn write_median_f_csv<W: Write>(report: &EvaluationReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label", "obfuscated", "median_f_score"])?;
    w.write_record([
        report.label.clone(),
        report.obfuscated.to_string(),
        report.reid.median_f_score.map(|v| v.to_string()).unwrap_or_default(),
    ])?;
    flush(w, "<median f csv>")
}
