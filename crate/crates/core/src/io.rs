//! CSV datasets and JSON result archives.
//!
//! CSV dialect: comma separated, `"` quoting with doubled quotes, UTF-8, one
//! header row. An optional `id` column (first position) carries row ids; an
//! optional group column (default name `group`) carries sub-domain labels.
//! Every other column must be numeric.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{default_row_ids, Dataset, GroupedDataset};
use crate::error::{Error, Result};
use crate::hier::{HierConfig, HierPartition};
use crate::partition::{DpConfig, Partition};
use crate::selection::SelectionReport;

pub const DEFAULT_GROUP_COLUMN: &str = "group";
pub const SCHEMA_VERSION: u32 = 1;

/// A dataset read from disk, with sub-domain labels when present.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Single(Dataset),
    Grouped(GroupedDataset),
}

impl Loaded {
    pub fn data(&self) -> &Dataset {
        match self {
            Loaded::Single(d) => d,
            Loaded::Grouped(g) => g.data(),
        }
    }

    pub fn into_single(self) -> Dataset {
        match self {
            Loaded::Single(d) => d,
            Loaded::Grouped(g) => g.data().clone(),
        }
    }

    pub fn is_grouped(&self) -> bool {
        matches!(self, Loaded::Grouped(_))
    }
}

pub fn read_dataset(path: &Path, group_column: Option<&str>) -> Result<Loaded> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_csv(file, group_column).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses CSV text. `group_column` defaults to `group`; the column is optional.
pub fn parse_dataset_csv<R: Read>(input: R, group_column: Option<&str>) -> Result<Loaded> {
    let group_name = group_column.unwrap_or(DEFAULT_GROUP_COLUMN);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("malformed header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::data("missing header row"));
    }
    let id_col = (header.first().map(String::as_str) == Some("id")).then_some(0);
    let group_col = header.iter().position(|h| h == group_name);
    if group_column.is_some() && group_col.is_none() {
        return Err(Error::data(format!(
            "group column '{group_name}' not found"
        )));
    }
    let value_cols: Vec<usize> = (0..header.len())
        .filter(|&j| Some(j) != id_col && Some(j) != group_col)
        .collect();
    if value_cols.is_empty() {
        return Err(Error::data("no numeric columns"));
    }
    if let Some(&j) = value_cols.iter().find(|&&j| header[j].is_empty()) {
        return Err(Error::data(format!("column {} has an empty name", j + 1)));
    }

    let mut rows = Vec::new();
    let mut ids = Vec::new();
    let mut groups = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::data(format!("row {}: {e}", r + 1)))?;
        let mut row = Vec::with_capacity(value_cols.len());
        for &j in &value_cols {
            let cell = record.get(j).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                Error::data(format!(
                    "row {}, column '{}': '{cell}' is not a number",
                    r + 1,
                    header[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "row {}, column '{}': non-finite value",
                    r + 1,
                    header[j]
                )));
            }
            row.push(v);
        }
        if let Some(j) = id_col {
            ids.push(record.get(j).unwrap_or("").to_string());
        }
        if let Some(j) = group_col {
            groups.push(record.get(j).unwrap_or("").to_string());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data("no data rows"));
    }
    let row_ids = if id_col.is_some() {
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::data(format!("duplicate row id '{dup}'")));
        }
        ids
    } else {
        default_row_ids(rows.len())
    };
    let names = value_cols.iter().map(|&j| header[j].clone()).collect();
    let data = Dataset::new(rows, names, row_ids)?;
    Ok(match group_col {
        Some(_) => Loaded::Grouped(GroupedDataset::new(data, &groups)?),
        None => Loaded::Single(data),
    })
}

fn csv_error(e: csv::Error) -> Error {
    Error::data(format!("csv write: {e}"))
}

/// Writes `id` followed by the variables.
pub fn write_dataset_csv<W: Write>(data: &Dataset, w: W) -> Result<()> {
    write_csv(data, None, w)
}

/// Writes `id`, the variables and a `group` column.
pub fn write_grouped_csv<W: Write>(data: &GroupedDataset, w: W) -> Result<()> {
    write_csv(data.data(), Some(data), w)
}

fn write_csv<W: Write>(data: &Dataset, grouped: Option<&GroupedDataset>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend(data.var_names().iter().cloned());
    if grouped.is_some() {
        header.push(DEFAULT_GROUP_COLUMN.to_string());
    }
    out.write_record(&header).map_err(csv_error)?;
    for (i, row) in data.rows().enumerate() {
        let mut rec = vec![data.row_ids()[i].clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        if let Some(g) = grouped {
            rec.push(g.group_names()[g.group()[i]].clone());
        }
        out.write_record(&rec).map_err(csv_error)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// Configuration that produced an archived result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunConfig {
    Dp(DpConfig),
    Hier(HierConfig),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub fit_seconds: f64,
}

/// A clustering result with everything needed to reproduce and view it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultArchive {
    pub schema_version: u32,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Partition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hier_partition: Option<HierPartition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection_report: Option<SelectionReport>,
    pub timings: Timings,
    /// Workspace name or path of the clustered dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
}

impl ResultArchive {
    pub fn single(config: DpConfig, partition: Partition) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: RunConfig::Dp(config),
            partition: Some(partition),
            hier_partition: None,
            selection_report: None,
            timings: Timings::default(),
            dataset: None,
        }
    }

    /// Archive of a grid search: the config records the chosen `lambda`.
    pub fn selected(config: DpConfig, report: SelectionReport, partition: Partition) -> Self {
        let chosen = DpConfig {
            lambda: report.chosen_lambda,
            ..config
        };
        let mut archive = Self::single(chosen, partition);
        archive.selection_report = Some(report);
        archive
    }

    pub fn hierarchical(config: HierConfig, hp: HierPartition) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: RunConfig::Hier(config),
            partition: None,
            hier_partition: Some(hp),
            selection_report: None,
            timings: Timings::default(),
            dataset: None,
        }
    }

    /// Per-row labels: the partition labels, or the global labels of a
    /// hierarchical result.
    pub fn labels(&self) -> &[usize] {
        match (&self.partition, &self.hier_partition) {
            (Some(p), _) => &p.labels,
            (None, Some(h)) => &h.labels_global,
            (None, None) => &[],
        }
    }

    pub fn k(&self) -> usize {
        match (&self.partition, &self.hier_partition) {
            (Some(p), _) => p.k,
            (None, Some(h)) => h.k_global(),
            (None, None) => 0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("invalid JSON: {e}")))?;
        match value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
        {
            None => return Err(Error::Schema("missing field `schema_version`".into())),
            Some(v) if v != u64::from(SCHEMA_VERSION) => {
                return Err(Error::Schema(format!(
                    "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
                )))
            }
            Some(_) => {}
        }
        let archive: Self =
            serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
        match (&archive.partition, &archive.hier_partition, &archive.config) {
            (Some(_), None, RunConfig::Dp(_)) | (None, Some(_), RunConfig::Hier(_)) => Ok(archive),
            _ => Err(Error::Schema(
                "archive must hold exactly one of `partition` (dp config) or `hier_partition` (hier config)"
                    .into(),
            )),
        }
    }
}

pub fn write_result(path: &Path, archive: &ResultArchive) -> Result<()> {
    fs::write(path, archive.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn read_result(path: &Path) -> Result<ResultArchive> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ResultArchive::from_json(&text)
}
