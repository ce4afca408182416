//! Synthetic data with planted partitions.
//!
//! Planted means are drawn uniformly in the hypercube `[0, L]^d` with
//! `L = 2 * min_dist * max(1, k^(1/d))`, one at a time, rejecting any draw
//! closer than `min_dist` to an accepted mean (`min_dist = separation * sigma`,
//! or `separation` when `sigma = 0`). At most 10,000 draws are attempted in
//! total. Points are `mean + sigma * N(0, I)`, emitted cluster by cluster.
//! All randomness comes from [`crate::rng::Rng`].

use serde::{Deserialize, Serialize};

use crate::dataset::{default_row_ids, default_var_names, Dataset, GroupedDataset};
use crate::error::{Error, Result};
use crate::partition::sq_dist;
use crate::rng::Rng;
use crate::text::Corpus;

pub const MAX_PLACEMENT_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub k_true: usize,
    pub n_per_cluster: usize,
    /// Explicit per-cluster sizes; overrides `n_per_cluster` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    pub d: usize,
    /// Minimum pairwise distance between planted means, in units of `sigma`.
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            k_true: 3,
            n_per_cluster: 50,
            sizes: None,
            d: 2,
            separation: 8.0,
            sigma: 1.0,
            seed: 42,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_true == 0 || self.d == 0 {
            return Err(Error::usage("k_true and d must be positive"));
        }
        match &self.sizes {
            Some(s) if s.len() != self.k_true => {
                return Err(Error::usage(format!(
                    "{} cluster sizes given for k_true = {}",
                    s.len(),
                    self.k_true
                )))
            }
            Some(s) if s.contains(&0) => {
                return Err(Error::usage("cluster sizes must be positive"))
            }
            None if self.n_per_cluster == 0 => {
                return Err(Error::usage("n_per_cluster must be positive"))
            }
            _ => {}
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(Error::usage("separation must be positive"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::usage("sigma must be nonnegative"));
        }
        Ok(())
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.sizes
            .clone()
            .unwrap_or_else(|| vec![self.n_per_cluster; self.k_true])
    }

    pub fn min_mean_distance(&self) -> f64 {
        if self.sigma > 0.0 {
            self.separation * self.sigma
        } else {
            self.separation
        }
    }
}

/// A generated dataset with its planted truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: Dataset,
    pub labels: Vec<usize>,
    pub means: Vec<Vec<f64>>,
}

/// Sidecar describing the planted truth, written next to generated CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub labels: Vec<usize>,
    pub means: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_labels: Option<Vec<usize>>,
    pub config: serde_json::Value,
}

fn place_means(rng: &mut Rng, k: usize, d: usize, min_dist: f64) -> Result<Vec<Vec<f64>>> {
    let side = 2.0 * min_dist * (k as f64).powf(1.0 / d as f64).max(1.0);
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut draws = 0;
    while means.len() < k {
        if draws == MAX_PLACEMENT_DRAWS {
            return Err(Error::Generation(format!(
                "could not place {k} means {min_dist} apart after {MAX_PLACEMENT_DRAWS} draws; \
                 try a smaller separation"
            )));
        }
        draws += 1;
        let cand: Vec<f64> = (0..d).map(|_| rng.uniform_range(0.0, side)).collect();
        if means
            .iter()
            .all(|m| sq_dist(m, &cand) >= min_dist * min_dist)
        {
            means.push(cand);
        }
    }
    Ok(means)
}

fn sample_point(rng: &mut Rng, mean: &[f64], sigma: f64) -> Vec<f64> {
    mean.iter().map(|&m| m + sigma * rng.normal()).collect()
}

pub fn generate_single(config: &GenConfig) -> Result<Generated> {
    config.validate()?;
    let mut rng = Rng::new(config.seed);
    let means = place_means(
        &mut rng,
        config.k_true,
        config.d,
        config.min_mean_distance(),
    )?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &size) in config.cluster_sizes().iter().enumerate() {
        for _ in 0..size {
            rows.push(sample_point(&mut rng, &means[c], config.sigma));
            labels.push(c);
        }
    }
    let n = rows.len();
    let data = Dataset::new(rows, default_var_names(config.d), default_row_ids(n))?;
    Ok(Generated {
        data,
        labels,
        means,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedGenConfig {
    #[serde(flatten)]
    pub base: GenConfig,
    pub groups: usize,
    /// Global clusters each group may draw from; `None` lets every group use
    /// every cluster. Each group draws `n_per_cluster` (or the explicit size)
    /// rows from each permitted cluster.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedGrouped {
    pub data: GroupedDataset,
    pub global_labels: Vec<usize>,
    /// Index of the row's cluster within its group's permitted list.
    pub local_labels: Vec<usize>,
    pub means: Vec<Vec<f64>>,
}

pub fn generate_grouped(config: &GroupedGenConfig) -> Result<GeneratedGrouped> {
    config.base.validate()?;
    if config.groups == 0 {
        return Err(Error::usage("groups must be at least 1"));
    }
    let k = config.base.k_true;
    let usage: Vec<Vec<usize>> = match &config.usage {
        Some(u) => {
            if u.len() != config.groups {
                return Err(Error::usage(format!(
                    "usage lists {} groups, config has {}",
                    u.len(),
                    config.groups
                )));
            }
            u.clone()
        }
        None => vec![(0..k).collect(); config.groups],
    };
    let mut used = vec![false; k];
    for (g, set) in usage.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::usage(format!(
                "group {} has an empty usage set",
                g + 1
            )));
        }
        for &c in set {
            *used.get_mut(c).ok_or_else(|| {
                Error::usage(format!("group {} uses unknown cluster {c}", g + 1))
            })? = true;
        }
    }
    if let Some(c) = used.iter().position(|u| !u) {
        return Err(Error::usage(format!(
            "global cluster {c} is used by no group"
        )));
    }

    let mut rng = Rng::new(config.base.seed);
    let means = place_means(&mut rng, k, config.base.d, config.base.min_mean_distance())?;
    let sizes = config.base.cluster_sizes();
    let mut rows = Vec::new();
    let mut group = Vec::new();
    let mut global_labels = Vec::new();
    let mut local_labels = Vec::new();
    for (g, set) in usage.iter().enumerate() {
        for (l, &c) in set.iter().enumerate() {
            for _ in 0..sizes[c] {
                rows.push(sample_point(&mut rng, &means[c], config.base.sigma));
                group.push(g);
                global_labels.push(c);
                local_labels.push(l);
            }
        }
    }
    let n = rows.len();
    let data = Dataset::new(rows, default_var_names(config.base.d), default_row_ids(n))?;
    let names = (1..=config.groups).map(|g| format!("g{g}")).collect();
    Ok(GeneratedGrouped {
        data: GroupedDataset::from_indices(data, group, names)?,
        global_labels,
        local_labels,
        means,
    })
}

/// A gently curled 2-D sheet in 3-D: `t = 1.5 pi (1 + u)`, `h = 10 v`,
/// `(t cos t, h, t sin t)` with `u, v` uniform on `[0, 1)`. Returns the data
/// and the intrinsic coordinates `(arc length, h)`.
pub fn swiss_roll_lite(n: usize, seed: u64) -> Result<(Dataset, Vec<[f64; 2]>)> {
    let mut rng = Rng::new(seed);
    let mut rows = Vec::with_capacity(n);
    let mut intrinsic = Vec::with_capacity(n);
    for _ in 0..n {
        let t = 1.5 * std::f64::consts::PI * (1.0 + rng.uniform());
        let h = 10.0 * rng.uniform();
        rows.push(vec![t * t.cos(), h, t * t.sin()]);
        // Arc length of the spiral r = t from 0 to t.
        let arc = 0.5 * (t * (1.0 + t * t).sqrt() + t.asinh());
        intrinsic.push([arc, h]);
    }
    let data = Dataset::new(
        rows,
        vec!["x".into(), "y".into(), "z".into()],
        default_row_ids(n),
    )?;
    Ok((data, intrinsic))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n_docs: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub shared_words: usize,
    pub doc_len: usize,
    /// Probability that a token is drawn from the document's topic.
    pub topic_share: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_docs: 60,
            topics: 3,
            words_per_topic: 12,
            shared_words: 20,
            doc_len: 80,
            topic_share: 0.6,
            seed: 42,
        }
    }
}

const FILLER: [&str; 8] = ["The", "and", "of", "a", "in", "to", "is", "for"];

/// Topic-structured synthetic documents. Document `i` belongs to topic
/// `i % topics`. Text mixes topic words, shared words, capitalized filler
/// stopwords and punctuation. Returns the corpus (with the filler words as
/// its stopword list) and the topic of each document.
pub fn generate_corpus(config: &CorpusConfig) -> Result<(Corpus, Vec<usize>)> {
    if config.n_docs == 0 || config.topics == 0 || config.words_per_topic == 0 {
        return Err(Error::usage(
            "corpus needs documents, topics and topic words",
        ));
    }
    let mut rng = Rng::new(config.seed);
    let mut docs = Vec::with_capacity(config.n_docs);
    let mut topics = Vec::with_capacity(config.n_docs);
    for i in 0..config.n_docs {
        let topic = i % config.topics;
        let mut text = String::new();
        for w in 0..config.doc_len {
            let u = rng.uniform();
            let word = if u < config.topic_share || config.shared_words == 0 {
                format!("topic{topic}word{}", rng.below(config.words_per_topic))
            } else if u < config.topic_share + 0.5 * (1.0 - config.topic_share) {
                format!("common{}", rng.below(config.shared_words))
            } else {
                FILLER[rng.below(FILLER.len())].to_string()
            };
            if w > 0 {
                text.push(if rng.below(10) == 0 { ',' } else { ' ' });
                text.push(' ');
            }
            text.push_str(&word);
        }
        text.push('.');
        docs.push((format!("doc{:03}", i + 1), text));
        topics.push(topic);
    }
    let stopwords = FILLER.iter().map(|w| w.to_lowercase()).collect();
    Ok((Corpus::new(docs, stopwords)?, topics))
}
