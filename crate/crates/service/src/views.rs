//! Plot-ready payloads built from a result and its dataset.

use std::collections::BTreeMap;

use growclusters::io::ResultArchive;
use growclusters::Dataset;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub id: String,
    pub values: Vec<f64>,
    pub cluster: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterView {
    pub vars: Vec<String>,
    pub points: Vec<ScatterPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelLine {
    pub id: String,
    pub values: Vec<f64>,
    pub cluster: usize,
    pub dimmed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelView {
    pub vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highlight: Option<usize>,
    pub lines: Vec<ParallelLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountBy {
    Cluster,
    Group,
    ClusterXGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CountsView {
    Marginal {
        by: CountBy,
        counts: BTreeMap<String, usize>,
        total: usize,
    },
    Table {
        by: CountBy,
        groups: Vec<String>,
        clusters: Vec<usize>,
        /// `table[g][k]`: rows of group `g` in global cluster `k`.
        table: Vec<Vec<usize>>,
        total: usize,
    },
}

/// Per-row group names of a hierarchical result.
fn row_groups(archive: &ResultArchive, n: usize) -> Option<Vec<String>> {
    let hp = archive.hier_partition.as_ref()?;
    let mut out = vec![String::new(); n];
    for g in &hp.groups {
        for lc in &g.local_clusters {
            for &r in &lc.rows {
                if let Some(slot) = out.get_mut(r) {
                    *slot = g.group.clone();
                }
            }
        }
    }
    Some(out)
}

fn check_rows(archive: &ResultArchive, data: &Dataset) -> ApiResult<()> {
    if archive.labels().len() != data.n() {
        return Err(ApiError::conflict(format!(
            "result has {} labels but its dataset has {} rows",
            archive.labels().len(),
            data.n()
        )));
    }
    Ok(())
}

fn resolve_vars(data: &Dataset, vars: Option<&str>) -> ApiResult<Vec<usize>> {
    let Some(spec) = vars.filter(|s| !s.trim().is_empty()) else {
        return Ok((0..data.d()).collect());
    };
    spec.split(',')
        .map(str::trim)
        .map(|name| {
            data.var_index(name).ok_or_else(|| {
                ApiError::new(
                    axum::http::StatusCode::UNPROCESSABLE_ENTITY,
                    "unknown_variable",
                    format!("unknown variable '{name}'"),
                )
                .with_details(json!({ "valid": data.var_names() }))
            })
        })
        .collect()
}

pub fn scatter(
    archive: &ResultArchive,
    data: &Dataset,
    vars: Option<&str>,
) -> ApiResult<ScatterView> {
    check_rows(archive, data)?;
    let cols = resolve_vars(data, vars)?;
    let groups = row_groups(archive, data.n());
    let points = (0..data.n())
        .map(|i| ScatterPoint {
            id: data.row_ids()[i].clone(),
            values: cols.iter().map(|&j| data.row(i)[j]).collect(),
            cluster: archive.labels()[i],
            group: groups.as_ref().map(|g| g[i].clone()),
        })
        .collect();
    Ok(ScatterView {
        vars: cols.iter().map(|&j| data.var_names()[j].clone()).collect(),
        points,
    })
}

pub fn parallel(
    archive: &ResultArchive,
    data: &Dataset,
    highlight: Option<usize>,
) -> ApiResult<ParallelView> {
    check_rows(archive, data)?;
    if let Some(h) = highlight.filter(|&h| h >= archive.k()) {
        return Err(ApiError::invalid(format!(
            "highlight {h} out of range (result has {} clusters)",
            archive.k()
        )));
    }
    let lines = (0..data.n())
        .map(|i| {
            let cluster = archive.labels()[i];
            ParallelLine {
                id: data.row_ids()[i].clone(),
                values: data.row(i).to_vec(),
                cluster,
                dimmed: highlight.is_some_and(|h| h != cluster),
            }
        })
        .collect();
    Ok(ParallelView {
        vars: data.var_names().to_vec(),
        highlight,
        lines,
    })
}

/// Counts need only the archive: group membership is stored in hierarchical results.
pub fn counts(archive: &ResultArchive, by: CountBy) -> ApiResult<CountsView> {
    let labels = archive.labels();
    let total = labels.len();
    let hier = || {
        archive.hier_partition.as_ref().ok_or_else(|| {
            ApiError::conflict("result is single-source; group counts need a hierarchical result")
        })
    };
    match by {
        CountBy::Cluster => {
            let mut counts = BTreeMap::new();
            for k in 0..archive.k() {
                counts.insert(k.to_string(), 0);
            }
            for l in labels {
                *counts.entry(l.to_string()).or_insert(0) += 1;
            }
            Ok(CountsView::Marginal { by, counts, total })
        }
        CountBy::Group => {
            let hp = hier()?;
            let counts = hp
                .groups
                .iter()
                .map(|g| {
                    (
                        g.group.clone(),
                        g.local_clusters.iter().map(|l| l.rows.len()).sum(),
                    )
                })
                .collect();
            Ok(CountsView::Marginal { by, counts, total })
        }
        CountBy::ClusterXGroup => {
            let hp = hier()?;
            let k = hp.k_global();
            let table = hp
                .groups
                .iter()
                .map(|g| {
                    let mut row = vec![0; k];
                    for lc in &g.local_clusters {
                        row[lc.global_index] += lc.rows.len();
                    }
                    row
                })
                .collect();
            Ok(CountsView::Table {
                by,
                groups: hp.groups.iter().map(|g| g.group.clone()).collect(),
                clusters: (0..k).collect(),
                table,
                total,
            })
        }
    }
}
