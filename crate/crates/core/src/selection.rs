//! Cluster-validity statistics and selection of the penalty `lambda`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::{dp_means, nearest, sq_dist, DpConfig, Partition};
use crate::rng::Rng;

/// A validity score that may be undefined (e.g. one cluster) or unbounded.
///
/// Serialized as a JSON number, `"undefined"` or `"infinite"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Value(f64),
    Undefined,
    Infinite,
}

impl Score {
    pub fn value(self) -> Option<f64> {
        match self {
            Score::Value(v) => Some(v),
            Score::Infinite => Some(f64::INFINITY),
            Score::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        !matches!(self, Score::Undefined)
    }
}

impl Serialize for Score {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Score::Value(v) => s.serialize_f64(*v),
            Score::Undefined => s.serialize_str("undefined"),
            Score::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Score::Value(v)),
            Raw::Tag(t) if t == "undefined" => Ok(Score::Undefined),
            Raw::Tag(t) if t == "infinite" => Ok(Score::Infinite),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!(
                "unknown score marker '{t}'"
            ))),
        }
    }
}

/// Maps arbitrary labels to `0..k` by first occurrence.
fn dense_labels<L: Eq + std::hash::Hash + Copy>(labels: &[L]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

fn check_len(data: &Dataset, n_labels: usize) -> Result<()> {
    if n_labels != data.n() {
        return Err(Error::data(format!(
            "{n_labels} labels for {} rows",
            data.n()
        )));
    }
    Ok(())
}

/// Mean silhouette width with Euclidean distance.
///
/// Points in singleton clusters score 0. Undefined when there is one cluster.
pub fn silhouette_score<L: Eq + std::hash::Hash + Copy>(
    data: &Dataset,
    labels: &[L],
) -> Result<Score> {
    check_len(data, labels.len())?;
    let (labels, k) = dense_labels(labels);
    if k < 2 {
        return Ok(Score::Undefined);
    }
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let n = data.n();
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            let xi = data.row(i);
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += sq_dist(xi, data.row(j)).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .sum();
    Ok(Score::Value(total / n as f64))
}

/// Calinski-Harabasz ratio `(B / (K - 1)) / (W / (n - K))`.
///
/// Undefined for `K = 1` or `K = n`; [`Score::Infinite`] when the
/// within-cluster scatter is zero but the between-cluster scatter is not.
pub fn calinski_harabasz<L: Eq + std::hash::Hash + Copy>(
    data: &Dataset,
    labels: &[L],
) -> Result<Score> {
    check_len(data, labels.len())?;
    let (labels, k) = dense_labels(labels);
    let n = data.n();
    if k < 2 || k >= n {
        return Ok(Score::Undefined);
    }
    let (centroids, sizes) = crate::partition::cluster_means(data, &labels, k);
    let grand = data.mean();
    let between: f64 = centroids
        .iter()
        .zip(&sizes)
        .map(|(c, &s)| s as f64 * sq_dist(c, &grand))
        .sum();
    let within: f64 = data
        .rows()
        .zip(&labels)
        .map(|(x, &l)| sq_dist(x, &centroids[l]))
        .sum();
    if within == 0.0 {
        return Ok(if between > 0.0 {
            Score::Infinite
        } else {
            Score::Undefined
        });
    }
    Ok(Score::Value(
        (between / (k - 1) as f64) / (within / (n - k) as f64),
    ))
}

/// Adjusted Rand index between two labelings of the same rows.
///
/// Two labelings that are both trivial (one cluster, or all singletons) and
/// identical score 1.
pub fn adjusted_rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Eq + std::hash::Hash + Copy,
    B: Eq + std::hash::Hash + Copy,
{
    if a.len() != b.len() {
        return Err(Error::data("labelings have different lengths"));
    }
    let (a, ka) = dense_labels(a);
    let (b, kb) = dense_labels(b);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(&b) {
        table[x * kb + y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let pairs = |v: u64| (v * v.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&v| pairs(v)).sum();
    let sum_a: f64 = rows.iter().map(|&v| pairs(v)).sum();
    let sum_b: f64 = cols.iter().map(|&v| pairs(v)).sum();
    let total = pairs(a.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Seeded V-fold assignment: a Fisher-Yates shuffle of `0..n`, then position
/// `p` of the shuffled order goes to fold `p % folds`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut order);
    let mut out = vec![Vec::new(); folds];
    for (p, i) in order.into_iter().enumerate() {
        out[p % folds].push(i);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    out
}

fn check_folds(data: &Dataset, folds: usize) -> Result<()> {
    if folds < 2 {
        return Err(Error::usage("cross-validation needs at least 2 folds"));
    }
    if data.n() < folds {
        return Err(Error::data(format!(
            "{} rows cannot be split into {folds} folds",
            data.n()
        )));
    }
    Ok(())
}

/// Runs `per_fold(train, test, partition)` over every fold and averages the
/// per-point losses it returns.
fn cross_validate(
    data: &Dataset,
    lambda: f64,
    folds: usize,
    config: &DpConfig,
    per_point: impl Fn(&Dataset, &Partition, &[f64]) -> f64 + Sync,
) -> Result<f64> {
    check_folds(data, folds)?;
    let cfg = DpConfig {
        lambda,
        ..config.clone()
    };
    let assignment = fold_assignment(data.n(), folds, config.seed);
    let mut total = 0.0;
    for held in &assignment {
        let mut is_held = vec![false; data.n()];
        held.iter().for_each(|&i| is_held[i] = true);
        let train_idx: Vec<usize> = (0..data.n()).filter(|&i| !is_held[i]).collect();
        let train = data.select_rows(&train_idx)?;
        let fit = dp_means(&train, &cfg)?;
        total += held
            .iter()
            .map(|&i| per_point(&train, &fit, data.row(i)))
            .sum::<f64>();
    }
    Ok(total / data.n() as f64)
}

/// Mean capped held-out cost `min(min_k ||x - mu_k||^2, lambda)`.
///
/// A held-out row either joins its nearest training centroid or pays the
/// penalty of opening its own cluster. Always in `[0, lambda]`.
pub fn cv_heldout_loss(
    data: &Dataset,
    lambda: f64,
    folds: usize,
    config: &DpConfig,
) -> Result<f64> {
    // The mean of capped terms can round one ulp past the cap.
    cross_validate(data, lambda, folds, config, |_, fit, x| {
        nearest(x, &fit.centroids).1.min(lambda)
    })
    .map(|loss| loss.min(lambda))
}

/// Mean held-out negative log predictive density under the Gaussian mixture
/// implied by a training fit: weights `n_k / n`, means at the centroids and a
/// shared isotropic variance `WSS / (n d)`.
///
/// This is the criterion `select_lambda` minimizes for cross-validation.
pub fn cv_heldout_nll(data: &Dataset, lambda: f64, folds: usize, config: &DpConfig) -> Result<f64> {
    cross_validate(data, lambda, folds, config, |train, fit, x| {
        let d = train.d() as f64;
        let n = train.n() as f64;
        let wss = fit.objective - lambda * fit.k as f64;
        let spread = train_spread(train);
        let var = (wss.max(0.0) / (n * d))
            .max(1e-12 * spread)
            .max(f64::MIN_POSITIVE);
        let logs: Vec<f64> = fit
            .centroids
            .iter()
            .zip(&fit.sizes)
            .map(|(mu, &s)| (s as f64 / n).ln() - sq_dist(x, mu) / (2.0 * var))
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        0.5 * d * (std::f64::consts::TAU * var).ln() - lse
    })
}

/// Mean squared distance to the grand mean, per dimension.
fn train_spread(train: &Dataset) -> f64 {
    let mean = train.mean();
    train.rows().map(|x| sq_dist(x, &mean)).sum::<f64>() / (train.n() * train.d()) as f64
}

/// How `lambda` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Cv,
    Silhouette,
    CalinskiHarabasz,
}

impl SelectionMethod {
    fn maximize(self) -> bool {
        !matches!(self, SelectionMethod::Cv)
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cv" | "cross_validation" => Ok(Self::Cv),
            "sil" | "silhouette" => Ok(Self::Silhouette),
            "ch" | "calinski_harabasz" => Ok(Self::CalinskiHarabasz),
            other => Err(Error::usage(format!(
                "unknown selection method '{other}' (expected cv, silhouette or calinski_harabasz)"
            ))),
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cv => "cv",
            Self::Silhouette => "silhouette",
            Self::CalinskiHarabasz => "calinski_harabasz",
        })
    }
}

/// Strictly ascending, finite, nonnegative penalty values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LambdaGrid(Vec<f64>);

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::usage("lambda grid is empty"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::usage(format!(
                "lambda grid values must be nonnegative and finite, got {v}"
            )));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("lambda grid must be strictly ascending"));
        }
        Ok(Self(values))
    }

    /// `steps` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linear(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        match steps {
            0 => Err(Error::usage("grid needs at least one step")),
            1 => Self::new(vec![lo]),
            _ => Self::new(
                (0..steps)
                    .map(|s| {
                        if s + 1 == steps {
                            hi
                        } else {
                            lo + (hi - lo) * s as f64 / (steps - 1) as f64
                        }
                    })
                    .collect(),
            ),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl FromStr for LambdaGrid {
    type Err = Error;

    /// Parses `lo:hi:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts.as_slice() else {
            return Err(Error::usage(format!(
                "grid '{s}' is not of the form lo:hi:steps"
            )));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::usage(format!("invalid number '{t}' in grid '{s}'")))
        };
        let steps = steps
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::usage(format!("invalid step count in grid '{s}'")))?;
        Self::linear(num(lo)?, num(hi)?, steps)
    }
}

impl TryFrom<Vec<f64>> for LambdaGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LambdaGrid> for Vec<f64> {
    fn from(g: LambdaGrid) -> Self {
        g.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: SelectionMethod,
    pub grid: LambdaGrid,
    pub scores: Vec<Score>,
    pub k_per_lambda: Vec<usize>,
    pub chosen_lambda: f64,
    pub chosen_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    /// Capped held-out cost per lambda (cross-validation only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heldout_capped_loss: Option<Vec<f64>>,
    pub seed: u64,
}

pub const DEFAULT_FOLDS: usize = 5;

pub fn select_lambda(
    data: &Dataset,
    method: SelectionMethod,
    grid: &LambdaGrid,
    config: &DpConfig,
) -> Result<SelectionReport> {
    select_and_fit(data, method, grid, config, DEFAULT_FOLDS).map(|(r, _)| r)
}

/// Evaluates every grid value and returns the report with the fit at the
/// chosen value.
///
/// Silhouette and Calinski-Harabasz are maximized, cross-validated loss is
/// minimized. Ties go to the largest `lambda`. If no score is defined the
/// largest `lambda` is chosen.
pub fn select_and_fit(
    data: &Dataset,
    method: SelectionMethod,
    grid: &LambdaGrid,
    config: &DpConfig,
    folds: usize,
) -> Result<(SelectionReport, Partition)> {
    config.validate()?;
    if method == SelectionMethod::Cv {
        check_folds(data, folds)?;
    }
    type Eval = (Partition, Score, Option<f64>);
    let evals: Vec<Eval> = grid
        .values()
        .par_iter()
        .map(|&lambda| -> Result<Eval> {
            let cfg = DpConfig {
                lambda,
                ..config.clone()
            };
            let fit = dp_means(data, &cfg)?;
            let (score, capped) = match method {
                SelectionMethod::Silhouette => (silhouette_score(data, &fit.labels)?, None),
                SelectionMethod::CalinskiHarabasz => (calinski_harabasz(data, &fit.labels)?, None),
                SelectionMethod::Cv => (
                    Score::Value(cv_heldout_nll(data, lambda, folds, &cfg)?),
                    Some(cv_heldout_loss(data, lambda, folds, &cfg)?),
                ),
            };
            Ok((fit, score, capped))
        })
        .collect::<Result<_>>()?;

    let scores: Vec<Score> = evals.iter().map(|e| e.1).collect();
    let chosen = choose(&scores, method.maximize());
    let k_per_lambda = evals.iter().map(|e| e.0.k).collect();
    let heldout_capped_loss = (method == SelectionMethod::Cv)
        .then(|| evals.iter().map(|e| e.2.unwrap_or(f64::NAN)).collect());
    let fit = evals
        .into_iter()
        .nth(chosen)
        .expect("chosen index in range")
        .0;
    let report = SelectionReport {
        method,
        grid: grid.clone(),
        scores,
        k_per_lambda,
        chosen_lambda: grid.values()[chosen],
        chosen_k: fit.k,
        folds: (method == SelectionMethod::Cv).then_some(folds),
        heldout_capped_loss,
        seed: config.seed,
    };
    Ok((report, fit))
}

/// Index of the best defined score; ties and the all-undefined case go to the
/// last (largest lambda) entry.
fn choose(scores: &[Score], maximize: bool) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        let Some(v) = s.value() else { continue };
        let v = if maximize { v } else { -v };
        match best {
            Some((_, b)) if v < b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map_or(scores.len() - 1, |(i, _)| i)
}
