//! Single-source penalized clustering.
//!
//! Minimizes `J = sum_i ||x_i - mu_{z_i}||^2 + lambda * K` by coordinate
//! descent: the hard, small-variance limit of a Dirichlet-process Gaussian
//! mixture. Each sweep visits rows in order with the centroids held fixed. A
//! row whose squared distance to every centroid exceeds `lambda` opens a new
//! cluster at its own location (unless the cluster cap is reached); otherwise
//! it joins its nearest centroid. After the sweep, empty clusters are dropped,
//! labels are renumbered by first occurrence and centroids move to the means.
//!
//! The descent starts from a single cluster at the grand mean. No restarts
//! are performed, so the result is a local optimum; `seed` is recorded but
//! the descent itself draws no randomness.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Penalty per cluster, in squared feature-distance units.
    pub lambda: f64,
    pub max_clusters: usize,
    pub max_iter: usize,
    /// Relative objective change below which the descent stops.
    pub tol: f64,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_clusters: 100,
            max_iter: 100,
            tol: 1e-8,
            seed: 0,
            standardize: false,
        }
    }
}

impl DpConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::usage(format!(
                "lambda must be a nonnegative finite number, got {}",
                self.lambda
            )));
        }
        if self.max_clusters == 0 {
            return Err(Error::usage("max_clusters must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::usage("max_iter must be at least 1"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::usage("tol must be a nonnegative finite number"));
        }
        Ok(())
    }
}

/// Result of a single-source fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Cluster of each row, numbered `0..k` by first occurrence.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    pub objective: f64,
    pub iterations: usize,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub converged: bool,
}

impl Partition {
    /// Packages labels with the means of their rows. Labels are renumbered by
    /// first occurrence; `objective` is `J` at `lambda`.
    pub fn from_labels(data: &Dataset, labels: &[usize], lambda: f64) -> Result<Self> {
        if labels.len() != data.n() {
            return Err(Error::data(format!(
                "{} labels for {} rows",
                labels.len(),
                data.n()
            )));
        }
        let mut labels = labels.to_vec();
        let k = compact_labels(&mut labels);
        let (centroids, sizes) = cluster_means(data, &labels, k);
        let objective = penalized_cost(data, &labels, &centroids, lambda);
        Ok(Self {
            labels,
            centroids,
            k,
            objective,
            iterations: 0,
            sizes,
            converged: true,
        })
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lowest index.
pub(crate) fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d2 = sq_dist(x, mu);
        if d2 < best.1 {
            best = (c, d2);
        }
    }
    best
}

/// Renumbers labels by first occurrence and returns the number of distinct labels.
pub(crate) fn compact_labels(labels: &mut [usize]) -> usize {
    let max = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut map = vec![usize::MAX; max];
    let mut next = 0;
    for l in labels.iter_mut() {
        if map[*l] == usize::MAX {
            map[*l] = next;
            next += 1;
        }
        *l = map[*l];
    }
    next
}

/// Means and sizes for labels in `0..k`. Every label must be used.
pub(crate) fn cluster_means(
    data: &Dataset,
    labels: &[usize],
    k: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; data.d()]; k];
    let mut sizes = vec![0usize; k];
    for (row, &l) in data.rows().zip(labels) {
        sizes[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(row) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&sizes) {
        s.iter_mut().for_each(|v| *v /= c as f64);
    }
    (sums, sizes)
}

fn penalized_cost(data: &Dataset, labels: &[usize], centroids: &[Vec<f64>], lambda: f64) -> f64 {
    let wss: f64 = data
        .rows()
        .zip(labels)
        .map(|(x, &l)| sq_dist(x, &centroids[l]))
        .sum();
    wss + lambda * centroids.len() as f64
}

/// Recomputes `J = WSS + lambda * K` for a stored partition.
pub fn objective(data: &Dataset, partition: &Partition, lambda: f64) -> Result<f64> {
    if partition.labels.len() != data.n() {
        return Err(Error::data(format!(
            "partition has {} labels, dataset has {} rows",
            partition.labels.len(),
            data.n()
        )));
    }
    if partition.centroids.len() != partition.k {
        return Err(Error::data(format!(
            "partition has {} centroids but k = {}",
            partition.centroids.len(),
            partition.k
        )));
    }
    if let Some(c) = partition.centroids.iter().find(|c| c.len() != data.d()) {
        return Err(Error::data(format!(
            "centroid dimension {} does not match data dimension {}",
            c.len(),
            data.d()
        )));
    }
    if let Some(&l) = partition.labels.iter().find(|&&l| l >= partition.k) {
        return Err(Error::data(format!(
            "label {l} out of range for k = {}",
            partition.k
        )));
    }
    Ok(penalized_cost(
        data,
        &partition.labels,
        &partition.centroids,
        lambda,
    ))
}

/// Labels each new row by its nearest centroid (ties to the lowest index).
pub fn predict(partition: &Partition, newdata: &Dataset) -> Result<Vec<usize>> {
    predict_with(&partition.centroids, newdata)
}

pub(crate) fn predict_with(centroids: &[Vec<f64>], newdata: &Dataset) -> Result<Vec<usize>> {
    if let Some(c) = centroids.first() {
        if c.len() != newdata.d() {
            return Err(Error::data(format!(
                "new data has dimension {}, centroids have {}",
                newdata.d(),
                c.len()
            )));
        }
    } else {
        return Err(Error::data("partition has no centroids"));
    }
    Ok(newdata.rows().map(|x| nearest(x, centroids).0).collect())
}

/// Fits the penalized clustering.
pub fn dp_means(data: &Dataset, config: &DpConfig) -> Result<Partition> {
    dp_means_traced(data, config).map(|(p, _)| p)
}

/// Like [`dp_means`], also returning the objective after initialization and
/// after every sweep.
pub fn dp_means_traced(data: &Dataset, config: &DpConfig) -> Result<(Partition, Vec<f64>)> {
    config.validate()?;
    if config.standardize {
        let scaler = Standardizer::fit(data);
        let z = scaler.transform(data)?;
        let (mut p, trace) = descend(&z, config);
        for c in &mut p.centroids {
            scaler.inverse_row(c);
        }
        return Ok((p, trace));
    }
    Ok(descend(data, config))
}

fn descend(data: &Dataset, config: &DpConfig) -> (Partition, Vec<f64>) {
    let lambda = config.lambda;
    let mut centroids = vec![data.mean()];
    let mut labels = vec![0usize; data.n()];
    let mut prev = penalized_cost(data, &labels, &centroids, lambda);
    let mut trace = vec![prev];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;
        let mut changed = false;
        for (i, x) in data.rows().enumerate() {
            let (c, d2) = nearest(x, &centroids);
            if d2 > lambda && centroids.len() < config.max_clusters {
                centroids.push(x.to_vec());
                labels[i] = centroids.len() - 1;
                changed = true;
            } else if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        let k = compact_labels(&mut labels);
        let (means, _) = cluster_means(data, &labels, k);
        centroids = means;
        let j = penalized_cost(data, &labels, &centroids, lambda);
        trace.push(j);
        if !changed {
            converged = true;
            break;
        }
        let rel = (prev - j).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = j;
        if rel < config.tol {
            converged = true;
            break;
        }
    }

    let k = centroids.len();
    let (_, sizes) = cluster_means(data, &labels, k);
    let partition = Partition {
        objective: *trace.last().expect("trace is never empty"),
        labels,
        centroids,
        k,
        iterations,
        sizes,
        converged,
    };
    (partition, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::from_column(xs).unwrap()
    }

    #[test]
    fn two_points_small_penalty_split() {
        let p = dp_means(
            &line(&[0.0, 10.0]),
            &DpConfig {
                max_clusters: 10,
                ..DpConfig::with_lambda(4.0)
            },
        )
        .unwrap();
        assert_eq!(p.k, 2);
        assert_eq!(p.centroids, vec![vec![0.0], vec![10.0]]);
        assert_eq!(p.objective, 8.0);
        assert_eq!(p.labels, vec![0, 1]);
    }

    #[test]
    fn two_points_large_penalty_merge() {
        let p = dp_means(&line(&[0.0, 10.0]), &DpConfig::with_lambda(100.0)).unwrap();
        assert_eq!(p.k, 1);
        assert_eq!(p.centroids, vec![vec![5.0]]);
        assert_eq!(p.objective, 150.0);
    }

    #[test]
    fn single_point() {
        let data = Dataset::from_rows(vec![vec![3.0, 3.0]]).unwrap();
        let p = dp_means(&data, &DpConfig::with_lambda(1.0)).unwrap();
        assert_eq!(p.k, 1);
        assert_eq!(p.centroids, vec![vec![3.0, 3.0]]);
        assert_eq!(p.objective, 1.0);
    }

    #[test]
    fn cap_assigns_to_nearest_existing() {
        let p = dp_means(
            &line(&[0.0, 10.0, 20.0, 30.0]),
            &DpConfig {
                max_clusters: 2,
                ..DpConfig::with_lambda(1.0)
            },
        )
        .unwrap();
        assert!(p.k <= 2);
        assert!(p.sizes.iter().all(|&s| s >= 1));
    }

    #[test]
    fn objective_examples() {
        let data = line(&[0.0, 10.0]);
        let mut p = Partition {
            labels: vec![0, 1],
            centroids: vec![vec![0.0], vec![10.0]],
            k: 2,
            objective: 0.0,
            iterations: 0,
            sizes: vec![1, 1],
            converged: true,
        };
        assert_eq!(objective(&data, &p, 4.0).unwrap(), 8.0);
        assert_eq!(objective(&data, &p, 0.0).unwrap(), 0.0);
        p.labels = vec![0, 0];
        p.centroids = vec![vec![5.0]];
        p.k = 1;
        assert_eq!(objective(&data, &p, 100.0).unwrap(), 150.0);
        p.centroids = vec![vec![5.0, 1.0]];
        assert!(matches!(objective(&data, &p, 1.0), Err(Error::Data(_))));
    }

    #[test]
    fn predict_examples() {
        let p = Partition::from_labels(&line(&[0.0, 10.0]), &[0, 1], 1.0).unwrap();
        assert_eq!(predict(&p, &line(&[4.0])).unwrap(), vec![0]);
        assert_eq!(predict(&p, &line(&[5.0])).unwrap(), vec![0]);
        assert_eq!(predict(&p, &line(&[-1.0, 12.0])).unwrap(), vec![0, 1]);
        let wide = Dataset::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        assert!(predict(&p, &wide).is_err());
    }

    #[test]
    fn rejects_negative_lambda() {
        let err = dp_means(&line(&[0.0]), &DpConfig::with_lambda(-1.0)).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn standardized_centroids_in_original_units() {
        let data = Dataset::from_rows(vec![
            vec![0.0, 100.0],
            vec![0.0, 100.0],
            vec![10.0, 100.0],
            vec![10.0, 100.0],
        ])
        .unwrap();
        let cfg = DpConfig {
            standardize: true,
            ..DpConfig::with_lambda(0.5)
        };
        let p = dp_means(&data, &cfg).unwrap();
        assert_eq!(p.k, 2);
        assert_eq!(p.centroids, vec![vec![0.0, 100.0], vec![10.0, 100.0]]);
    }

    #[test]
    fn compact_renumbers_by_first_occurrence() {
        let mut l = vec![3, 3, 1, 5, 1];
        assert_eq!(compact_labels(&mut l), 3);
        assert_eq!(l, vec![0, 0, 1, 2, 1]);
    }
}
