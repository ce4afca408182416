//! Isometric feature mapping: k-nearest-neighbour graph, graph geodesics and
//! classical multidimensional scaling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::sq_dist;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_REL_TOL: f64 = 1e-10;

pub const DEFAULT_NEIGHBORS: usize = 10;

/// What to do when the neighbour graph is not connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disconnected {
    #[default]
    Error,
    /// Keep only the largest connected component.
    LargestComponent,
}

/// Undirected weighted graph over (a subset of) the dataset rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub k: usize,
    /// Original row index of each node.
    pub rows: Vec<usize>,
    /// Rows removed because they were outside the largest component.
    pub dropped: Vec<usize>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adj[i].iter().find(|(v, _)| *v == j).map(|e| e.1)
    }

    /// Builds a graph from explicit undirected edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::usage(format!("edge ({a}, {b}) out of range")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::usage(format!("edge weight {w} must be nonnegative")));
            }
            add_edge(&mut adj, a, b, w);
        }
        Ok(Self {
            k: 0,
            rows: (0..n).collect(),
            dropped: Vec::new(),
            adj,
        })
    }

    /// Sizes of the connected components, largest first, with node membership.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &(u, _) in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        out
    }

    fn restrict(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.n()];
        for (new, &old) in keep.iter().enumerate() {
            new_index[old] = new;
        }
        let adj = keep
            .iter()
            .map(|&old| {
                self.adj[old]
                    .iter()
                    .filter(|(u, _)| new_index[*u] != usize::MAX)
                    .map(|&(u, w)| (new_index[u], w))
                    .collect()
            })
            .collect();
        let rows: Vec<usize> = keep.iter().map(|&i| self.rows[i]).collect();
        let mut dropped: Vec<usize> = (0..self.n())
            .filter(|i| new_index[*i] == usize::MAX)
            .map(|i| self.rows[i])
            .collect();
        dropped.extend(&self.dropped);
        dropped.sort_unstable();
        Self {
            k: self.k,
            rows,
            dropped,
            adj,
        }
    }
}

fn add_edge(adj: &mut [Vec<(usize, f64)>], a: usize, b: usize, w: f64) {
    if a == b || adj[a].iter().any(|(v, _)| *v == b) {
        return;
    }
    adj[a].push((b, w));
    adj[b].push((a, w));
}

/// Connects every row to its `k` nearest others (ties by lower row index) and
/// symmetrizes by union.
pub fn knn_graph(data: &Dataset, k: usize, policy: Disconnected) -> Result<NeighborGraph> {
    let n = data.n();
    if k == 0 || k >= n {
        return Err(Error::usage(format!(
            "neighbour count must satisfy 1 <= k < n (k = {k}, n = {n})"
        )));
    }
    let lists: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = data.row(i);
            let mut d: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, sq_dist(xi, data.row(j))))
                .collect();
            d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            d.truncate(k);
            d
        })
        .collect();
    let mut adj = vec![Vec::new(); n];
    for (i, list) in lists.iter().enumerate() {
        for &(j, d2) in list {
            add_edge(&mut adj, i, j, d2.sqrt());
        }
    }
    for a in &mut adj {
        a.sort_by_key(|e| e.0);
    }
    let graph = NeighborGraph {
        k,
        rows: (0..n).collect(),
        dropped: Vec::new(),
        adj,
    };
    let comps = graph.components();
    if comps.len() == 1 {
        return Ok(graph);
    }
    match policy {
        Disconnected::Error => Err(Error::DisconnectedGraph {
            sizes: comps.iter().map(Vec::len).collect(),
        }),
        Disconnected::LargestComponent => {
            log::warn!(
                "neighbour graph has {} components; keeping the largest ({} of {n} rows)",
                comps.len(),
                comps[0].len()
            );
            Ok(graph.restrict(&comps[0]))
        }
    }
}

/// Symmetric all-pairs shortest-path distances.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GeodesicMatrix {
    /// Wraps a full symmetric distance matrix.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::usage("distance matrix must be square"));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(v.is_finite() && v >= 0.0) || v != values[j * n + i] || (i == j && v != 0.0) {
                    return Err(Error::usage(
                        "distance matrix must be finite, nonnegative, symmetric with zero diagonal",
                    ));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(graph: &NeighborGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.n()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Frontier(0.0, source)]);
    while let Some(Frontier(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in graph.neighbors(v) {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Frontier(nd, u));
            }
        }
    }
    dist
}

/// Exact shortest paths from every node (Dijkstra per source).
pub fn geodesic_distances(graph: &NeighborGraph) -> Result<GeodesicMatrix> {
    let n = graph.n();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(graph, s)).collect();
    if rows.iter().flatten().any(|d| d.is_infinite()) {
        return Err(Error::DisconnectedGraph {
            sizes: graph.components().iter().map(Vec::len).collect(),
        });
    }
    let mut values: Vec<f64> = rows.into_iter().flatten().collect();
    // Floating-point path sums can differ by direction; take the smaller.
    for i in 0..n {
        for j in i + 1..n {
            let v = values[i * n + j].min(values[j * n + i]);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(GeodesicMatrix { n, values })
}

/// Low-dimensional coordinates with the eigenvalues that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub coords: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub row_ids: Vec<String>,
    #[serde(default)]
    pub neighbors: Option<usize>,
    #[serde(default)]
    pub dropped_rows: Vec<String>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        (1..=self.dim()).map(|j| format!("dim_{j}")).collect()
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(
            self.coords.clone(),
            self.column_names(),
            self.row_ids.clone(),
        )
    }

    /// CSV with header `id,dim_1,...,dim_m`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        crate::io::write_dataset_csv(&self.to_dataset()?, w)
    }
}

/// Classical scaling: double-centre the squared distances and keep the top
/// `m` eigenpairs, scaling eigenvectors by the root eigenvalue.
///
/// Each eigenvector's sign is fixed so its largest-magnitude entry is
/// positive. If fewer than `m` eigenvalues are positive the dimension is
/// reduced with a warning.
pub fn classical_mds(dist: &GeodesicMatrix, m: usize) -> Result<Embedding> {
    let n = dist.n();
    if m == 0 {
        return Err(Error::usage("embedding dimension must be at least 1"));
    }
    if n < 2 || m > n - 1 {
        return Err(Error::usage(format!(
            "embedding dimension {m} exceeds n - 1 = {}",
            n.saturating_sub(1)
        )));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| dist.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    let eig = SymmetricEigen::try_new(b, 1e-13, 0)
        .ok_or_else(|| Error::Numeric("eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| {
        eig.eigenvalues[c]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&c))
    });
    let top = eig.eigenvalues[order[0]];
    let positive = order
        .iter()
        .take_while(|&&i| top > 0.0 && eig.eigenvalues[i] > EIGEN_REL_TOL * top)
        .count();
    if positive == 0 {
        return Err(Error::Numeric(
            "no positive eigenvalues; all distances are zero".into(),
        ));
    }
    let m_eff = m.min(positive);
    if m_eff < m {
        log::warn!("only {positive} positive eigenvalues; reducing embedding dimension from {m} to {m_eff}");
    }

    let mut coords = vec![vec![0.0; m_eff]; n];
    let mut eigenvalues = Vec::with_capacity(m_eff);
    for (c, &idx) in order.iter().take(m_eff).enumerate() {
        let value = eig.eigenvalues[idx];
        let v = eig.eigenvectors.column(idx);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let scale = sign * value.sqrt();
        for (row, &x) in coords.iter_mut().zip(v.iter()) {
            row[c] = x * scale;
        }
        let mean = coords.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        coords.iter_mut().for_each(|r| r[c] -= mean);
        eigenvalues.push(value);
    }
    Ok(Embedding {
        coords,
        eigenvalues,
        row_ids: (1..=n).map(|i| i.to_string()).collect(),
        neighbors: None,
        dropped_rows: Vec::new(),
    })
}

/// Full pipeline on a dataset. Row ids are carried through; rows dropped by
/// the largest-component policy are listed in the result.
pub fn isomap(data: &Dataset, k: usize, m: usize, policy: Disconnected) -> Result<Embedding> {
    let graph = knn_graph(data, k, policy)?;
    let geo = geodesic_distances(&graph)?;
    let mut emb = classical_mds(&geo, m)?;
    let ids = data.row_ids();
    emb.row_ids = graph.rows.iter().map(|&i| ids[i].clone()).collect();
    emb.dropped_rows = graph.dropped.iter().map(|&i| ids[i].clone()).collect();
    emb.neighbors = Some(k);
    Ok(emb)
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(rows: Vec<Vec<f64>>) -> Dataset {
        Dataset::from_rows(rows).unwrap()
    }

    #[test]
    fn collinear_knn_contains_consecutive_edges() {
        let data = points((0..4).map(|i| vec![3.0 * i as f64]).collect());
        let g = knn_graph(&data, 2, Disconnected::Error).unwrap();
        for i in 0..3 {
            assert_eq!(g.weight(i, i + 1), Some(3.0));
        }
        assert!(g.neighbors(0).len() >= 2);
    }

    #[test]
    fn far_pairs_are_disconnected() {
        let data = points(vec![vec![0.0], vec![1.0], vec![100.0], vec![101.0]]);
        match knn_graph(&data, 1, Disconnected::Error) {
            Err(Error::DisconnectedGraph { sizes }) => assert_eq!(sizes, vec![2, 2]),
            other => panic!("expected disconnected error, got {other:?}"),
        }
        let g = knn_graph(&data, 1, Disconnected::LargestComponent).unwrap();
        assert_eq!(g.rows, vec![0, 1]);
        assert_eq!(g.dropped, vec![2, 3]);
    }

    #[test]
    fn duplicate_points_get_zero_weight() {
        let data = points(vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]]);
        let g = knn_graph(&data, 1, Disconnected::Error).unwrap();
        assert_eq!(g.weight(0, 1), Some(0.0));
    }

    #[test]
    fn geodesic_examples() {
        let path = NeighborGraph::from_edges(3, &[(0, 1, 3.0), (1, 2, 3.0)]).unwrap();
        assert_eq!(geodesic_distances(&path).unwrap().get(0, 2), 6.0);
        let tri = NeighborGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 10.0)]).unwrap();
        assert_eq!(geodesic_distances(&tri).unwrap().get(0, 2), 2.0);
        let split = NeighborGraph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            geodesic_distances(&split),
            Err(Error::DisconnectedGraph { .. })
        ));
    }

    #[test]
    fn two_point_mds() {
        let d = GeodesicMatrix::from_rows(vec![vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        let e = classical_mds(&d, 1).unwrap();
        let mut xs: Vec<f64> = e.coords.iter().map(|r| r[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 2.0).abs() < 1e-12 && (xs[1] - 2.0).abs() < 1e-12);
        assert!(matches!(classical_mds(&d, 2), Err(Error::Usage(_))));
    }

    #[test]
    fn dimension_reduced_when_eigenvalues_run_out() {
        // Collinear points have one positive eigenvalue.
        let d = GeodesicMatrix::from_rows(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let e = classical_mds(&d, 2).unwrap();
        assert_eq!(e.dim(), 1);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let data = points(vec![vec![0.0], vec![1.0]]);
        assert!(matches!(
            knn_graph(&data, 2, Disconnected::Error),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            knn_graph(&data, 0, Disconnected::Error),
            Err(Error::Usage(_))
        ));
    }
}
