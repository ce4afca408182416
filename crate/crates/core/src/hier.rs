//! Hierarchical grow-clusters: per-sub-domain local partitions whose cluster
//! means are drawn from one global set of centroids.
//!
//! Minimizes
//!
//! ```text
//! J_h = sum_x ||x - mu_{global(local(x))}||^2
//!       + lambda_local * (number of local clusters, all groups)
//!       + lambda_global * K_g
//! ```
//!
//! by coordinate descent. Each sweep visits groups in input order and rows in
//! row order within a group, with global centroids held fixed. A row may stay,
//! join another local cluster of its group, open a local cluster bound to an
//! existing global centroid, or open a local cluster bound to a new global
//! centroid placed at the row (subject to `max_global_clusters`). Each local
//! cluster is then rebound to the global centroid that minimizes its scatter
//! (or to a new global centroid at its mean). Finally global centroids move to
//! the mean of every row mapped to them; empty local clusters and unreferenced
//! global centroids are dropped.

use serde::{Deserialize, Serialize};

use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::partition::{compact_labels, sq_dist, Partition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierConfig {
    pub lambda_global: f64,
    pub lambda_local: f64,
    pub max_global_clusters: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for HierConfig {
    fn default() -> Self {
        Self {
            lambda_global: 1.0,
            lambda_local: 1.0,
            max_global_clusters: 100,
            max_iter: 100,
            tol: 1e-8,
            seed: 0,
        }
    }
}

impl HierConfig {
    pub fn with_penalties(lambda_local: f64, lambda_global: f64) -> Self {
        Self {
            lambda_local,
            lambda_global,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_global", self.lambda_global),
            ("lambda_local", self.lambda_local),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::usage(format!(
                    "{name} must be a nonnegative finite number, got {v}"
                )));
            }
        }
        if self.max_global_clusters == 0 {
            return Err(Error::usage("max_global_clusters must be at least 1"));
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCluster {
    /// Row indices into the grouped dataset.
    pub rows: Vec<usize>,
    pub row_ids: Vec<String>,
    pub global_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupClusters {
    pub group: String,
    pub local_clusters: Vec<LocalCluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierPartition {
    pub global_centroids: Vec<Vec<f64>>,
    pub groups: Vec<GroupClusters>,
    /// Local cluster of each row, indexed within the row's group.
    pub labels_local: Vec<usize>,
    /// Global centroid of each row, numbered by first occurrence in row order.
    pub labels_global: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    #[serde(default)]
    pub converged: bool,
}

impl HierPartition {
    pub fn k_global(&self) -> usize {
        self.global_centroids.len()
    }

    pub fn n_local(&self) -> usize {
        self.groups.iter().map(|g| g.local_clusters.len()).sum()
    }
}

/// Mutable descent state. Local clusters may be empty between compactions.
struct State {
    globals: Vec<Vec<f64>>,
    /// Number of non-empty local clusters bound to each global centroid.
    refs: Vec<usize>,
    /// Per group: global index of each local cluster.
    bind: Vec<Vec<usize>>,
    /// Per group: size of each local cluster.
    count: Vec<Vec<usize>>,
    /// Local cluster of each row (within its group).
    local: Vec<usize>,
}

impl State {
    fn active_globals(&self) -> usize {
        self.refs.iter().filter(|&&r| r > 0).count()
    }

    fn cost(&self, data: &GroupedDataset, config: &HierConfig) -> f64 {
        let x = data.data();
        let scatter: f64 = (0..x.n())
            .map(|i| {
                let g = data.group()[i];
                sq_dist(x.row(i), &self.globals[self.bind[g][self.local[i]]])
            })
            .sum();
        let n_local: usize = self
            .count
            .iter()
            .map(|c| c.iter().filter(|&&s| s > 0).count())
            .sum();
        scatter
            + config.lambda_local * n_local as f64
            + config.lambda_global * self.active_globals() as f64
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Move {
    Stay,
    Join(usize),
    NewLocal(usize),
    NewGlobal,
}

pub fn hdp_means(data: &GroupedDataset, config: &HierConfig) -> Result<HierPartition> {
    hdp_means_traced(data, config).map(|(hp, _)| hp)
}

/// Like [`hdp_means`], also returning the objective after initialization and
/// after every sweep.
pub fn hdp_means_traced(
    data: &GroupedDataset,
    config: &HierConfig,
) -> Result<(HierPartition, Vec<f64>)> {
    config.validate()?;
    let members = data.members();
    if let Some(g) = members.iter().position(Vec::is_empty) {
        return Err(Error::data(format!(
            "group '{}' has no rows",
            data.group_names()[g]
        )));
    }
    let n_groups = data.n_groups();
    let x = data.data();

    let mut st = State {
        globals: vec![x.mean()],
        refs: vec![n_groups],
        bind: vec![vec![0]; n_groups],
        count: members.iter().map(|m| vec![m.len()]).collect(),
        local: vec![0; x.n()],
    };
    let mut prev = st.cost(data, config);
    let mut trace = vec![prev];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;
        let mut changed = false;
        for (g, rows) in members.iter().enumerate() {
            for &i in rows {
                changed |= assign_row(&mut st, g, x.row(i), i, config);
            }
        }
        for (g, rows) in members.iter().enumerate() {
            changed |= rebind_locals(&mut st, g, rows, x, config);
        }
        compact(&mut st, data, &members);
        let j = st.cost(data, config);
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

    let objective = *trace.last().expect("trace is never empty");
    Ok((
        finish(st, data, &members, objective, iterations, converged),
        trace,
    ))
}

fn assign_row(st: &mut State, g: usize, x: &[f64], i: usize, config: &HierConfig) -> bool {
    let l0 = st.local[i];
    let p0 = st.bind[g][l0];
    st.count[g][l0] -= 1;
    if st.count[g][l0] == 0 {
        st.refs[p0] -= 1;
    }

    let mut stay = sq_dist(x, &st.globals[p0]);
    if st.count[g][l0] == 0 {
        stay += config.lambda_local;
        if st.refs[p0] == 0 {
            stay += config.lambda_global;
        }
    }
    let mut best = (stay, Move::Stay);
    for (l, (&p, &c)) in st.bind[g].iter().zip(&st.count[g]).enumerate() {
        if c == 0 || l == l0 {
            continue;
        }
        let cost = sq_dist(x, &st.globals[p]);
        if cost < best.0 {
            best = (cost, Move::Join(l));
        }
    }
    for (p, mu) in st.globals.iter().enumerate() {
        if st.refs[p] == 0 {
            continue;
        }
        let cost = sq_dist(x, mu) + config.lambda_local;
        if cost < best.0 {
            best = (cost, Move::NewLocal(p));
        }
    }
    if st.active_globals() < config.max_global_clusters {
        let cost = config.lambda_local + config.lambda_global;
        if cost < best.0 {
            best = (cost, Move::NewGlobal);
        }
    }

    let l = match best.1 {
        Move::Stay => l0,
        Move::Join(l) => l,
        Move::NewLocal(p) => open_local(st, g, p),
        Move::NewGlobal => {
            st.globals.push(x.to_vec());
            st.refs.push(0);
            open_local(st, g, st.globals.len() - 1)
        }
    };
    if st.count[g][l] == 0 {
        st.refs[st.bind[g][l]] += 1;
    }
    st.count[g][l] += 1;
    st.local[i] = l;
    l != l0
}

fn open_local(st: &mut State, g: usize, p: usize) -> usize {
    st.bind[g].push(p);
    st.count[g].push(0);
    st.bind[g].len() - 1
}

fn rebind_locals(
    st: &mut State,
    g: usize,
    rows: &[usize],
    x: &crate::dataset::Dataset,
    config: &HierConfig,
) -> bool {
    let n_local = st.bind[g].len();
    let mut sums = vec![vec![0.0; x.d()]; n_local];
    for &i in rows {
        for (s, v) in sums[st.local[i]].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let mut changed = false;
    for (l, sum) in sums.into_iter().enumerate() {
        let size = st.count[g][l];
        if size == 0 {
            continue;
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / size as f64).collect();
        let w = size as f64;
        let p0 = st.bind[g][l];
        st.refs[p0] -= 1;

        let mut stay = w * sq_dist(&mean, &st.globals[p0]);
        if st.refs[p0] == 0 {
            stay += config.lambda_global;
        }
        let mut best = (stay, None);
        for (p, mu) in st.globals.iter().enumerate() {
            if st.refs[p] == 0 || p == p0 {
                continue;
            }
            let cost = w * sq_dist(&mean, mu);
            if cost < best.0 {
                best = (cost, Some(p));
            }
        }
        if st.active_globals() < config.max_global_clusters && config.lambda_global < best.0 {
            st.globals.push(mean);
            st.refs.push(0);
            best = (config.lambda_global, Some(st.globals.len() - 1));
        }
        let p = best.1.unwrap_or(p0);
        changed |= p != p0;
        st.bind[g][l] = p;
        st.refs[p] += 1;
    }
    changed
}

/// Drops empty local clusters and unreferenced global centroids, renumbers
/// both by first occurrence in row order and moves global centroids to means.
fn compact(st: &mut State, data: &GroupedDataset, members: &[Vec<usize>]) {
    let x = data.data();
    // Globals by first occurrence in row order.
    let mut gmap = vec![usize::MAX; st.globals.len()];
    let mut next = 0;
    for i in 0..x.n() {
        let g = data.group()[i];
        let p = st.bind[g][st.local[i]];
        if gmap[p] == usize::MAX {
            gmap[p] = next;
            next += 1;
        }
    }
    let mut sums = vec![vec![0.0; x.d()]; next];
    let mut sizes = vec![0usize; next];
    for i in 0..x.n() {
        let g = data.group()[i];
        let p = gmap[st.bind[g][st.local[i]]];
        sizes[p] += 1;
        for (s, v) in sums[p].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&sizes) {
        s.iter_mut().for_each(|v| *v /= c as f64);
    }
    st.globals = sums;
    st.refs = vec![0; next];

    for (g, rows) in members.iter().enumerate() {
        let old_bind = std::mem::take(&mut st.bind[g]);
        let mut labels: Vec<usize> = rows.iter().map(|&i| st.local[i]).collect();
        let old_of_new = {
            let mut order = Vec::new();
            let mut seen = vec![false; old_bind.len()];
            for &l in &labels {
                if !seen[l] {
                    seen[l] = true;
                    order.push(l);
                }
            }
            order
        };
        let k = compact_labels(&mut labels);
        debug_assert_eq!(k, old_of_new.len());
        st.bind[g] = old_of_new.iter().map(|&l| gmap[old_bind[l]]).collect();
        st.count[g] = vec![0; k];
        for (&i, &l) in rows.iter().zip(&labels) {
            st.local[i] = l;
            st.count[g][l] += 1;
        }
        for &p in &st.bind[g] {
            st.refs[p] += 1;
        }
    }
}

fn finish(
    st: State,
    data: &GroupedDataset,
    members: &[Vec<usize>],
    objective: f64,
    iterations: usize,
    converged: bool,
) -> HierPartition {
    let ids = data.data().row_ids();
    let groups = members
        .iter()
        .enumerate()
        .map(|(g, rows)| {
            let mut local_clusters: Vec<LocalCluster> = st.bind[g]
                .iter()
                .map(|&p| LocalCluster {
                    rows: Vec::new(),
                    row_ids: Vec::new(),
                    global_index: p,
                })
                .collect();
            for &i in rows {
                let lc = &mut local_clusters[st.local[i]];
                lc.rows.push(i);
                lc.row_ids.push(ids[i].clone());
            }
            GroupClusters {
                group: data.group_names()[g].clone(),
                local_clusters,
            }
        })
        .collect();
    let labels_global = (0..data.data().n())
        .map(|i| st.bind[data.group()[i]][st.local[i]])
        .collect();
    HierPartition {
        global_centroids: st.globals,
        groups,
        labels_local: st.local,
        labels_global,
        objective,
        iterations,
        converged,
    }
}

/// Recomputes `J_h` from the stored structure.
pub fn hier_objective(
    data: &GroupedDataset,
    hp: &HierPartition,
    config: &HierConfig,
) -> Result<f64> {
    let x = data.data();
    if hp.labels_global.len() != x.n() || hp.labels_local.len() != x.n() {
        return Err(Error::data("label count does not match dataset rows"));
    }
    if hp.groups.len() != data.n_groups() {
        return Err(Error::data(format!(
            "partition has {} groups, dataset has {}",
            hp.groups.len(),
            data.n_groups()
        )));
    }
    let k = hp.global_centroids.len();
    for i in 0..x.n() {
        let g = data.group()[i];
        let local = hp.groups[g]
            .local_clusters
            .get(hp.labels_local[i])
            .ok_or_else(|| Error::data(format!("local label out of range at row {i}")))?;
        if local.global_index >= k {
            return Err(Error::data(format!(
                "global index {} out of range for {k} centroids",
                local.global_index
            )));
        }
        if local.global_index != hp.labels_global[i] {
            return Err(Error::data(format!(
                "row {i}: global label disagrees with its local cluster mapping"
            )));
        }
    }
    let scatter: f64 = x
        .rows()
        .zip(&hp.labels_global)
        .map(|(row, &p)| sq_dist(row, &hp.global_centroids[p]))
        .sum();
    Ok(scatter + config.lambda_local * hp.n_local() as f64 + config.lambda_global * k as f64)
}

/// Per-row global labels and global centroids as a single-source partition.
/// The objective carried over is the hierarchical one.
pub fn flatten(hp: &HierPartition) -> Partition {
    let k = hp.global_centroids.len();
    let mut sizes = vec![0usize; k];
    for &p in &hp.labels_global {
        sizes[p] += 1;
    }
    Partition {
        labels: hp.labels_global.clone(),
        centroids: hp.global_centroids.clone(),
        k,
        objective: hp.objective,
        iterations: hp.iterations,
        sizes,
        converged: hp.converged,
    }
}
