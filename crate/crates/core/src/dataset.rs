//! Numeric datasets: the unit of clustering.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// An `n x d` matrix of finite reals with variable names and row ids.
///
/// Values are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    d: usize,
    var_names: Vec<String>,
    row_ids: Vec<String>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, var_names: Vec<String>, row_ids: Vec<String>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::data("dataset has no rows"));
        }
        let d = var_names.len();
        if d == 0 {
            return Err(Error::data("dataset has no columns"));
        }
        if row_ids.len() != n {
            return Err(Error::data(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                n
            )));
        }
        let mut seen = HashSet::with_capacity(d);
        for name in &var_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::data(format!("duplicate variable name '{name}'")));
            }
        }
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::data(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::data(format!(
                    "non-finite value at row {i}, column '{}'",
                    var_names[j]
                )));
            }
            values.extend(row);
        }
        Ok(Self {
            values,
            n,
            d,
            var_names,
            row_ids,
        })
    }

    /// Builds a dataset with generated names `x1..xd` and ids `1..n`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        Self::new(rows, default_var_names(d), default_row_ids(n))
    }

    /// One-dimensional convenience constructor.
    pub fn from_column(xs: &[f64]) -> Result<Self> {
        Self::from_rows(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    /// Column means.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.rows() {
            for (acc, x) in m.iter_mut().zip(row) {
                *acc += x;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.n as f64);
        m
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::data("row selection is empty"));
        }
        let mut values = Vec::with_capacity(idx.len() * self.d);
        let mut row_ids = Vec::with_capacity(idx.len());
        for &i in idx {
            if i >= self.n {
                return Err(Error::data(format!("row index {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
            row_ids.push(self.row_ids[i].clone());
        }
        Ok(Self {
            values,
            n: idx.len(),
            d: self.d,
            var_names: self.var_names.clone(),
            row_ids,
        })
    }

    /// Applies `f` to every value, keeping names and ids.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let rows = self
            .rows()
            .map(|r| r.iter().enumerate().map(|(j, &x)| f(j, x)).collect())
            .collect();
        Self::new(rows, self.var_names.clone(), self.row_ids.clone())
    }
}

pub(crate) fn default_var_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

pub(crate) fn default_row_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Per-column z-scoring. Constant columns pass through unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Self {
        let mean = data.mean();
        let mut var = vec![0.0; data.d()];
        for row in data.rows() {
            for j in 0..data.d() {
                let dx = row[j] - mean[j];
                var[j] += dx * dx;
            }
        }
        let scale = var
            .iter()
            .map(|&v| {
                let sd = (v / data.n() as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        data.map_values(|j, x| (x - self.mean[j]) / self.scale[j])
    }

    pub fn inverse_row(&self, row: &mut [f64]) {
        for (j, x) in row.iter_mut().enumerate() {
            *x = *x * self.scale[j] + self.mean[j];
        }
    }
}

/// A dataset whose rows carry a known sub-domain label.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    data: Dataset,
    group: Vec<usize>,
    group_names: Vec<String>,
}

impl GroupedDataset {
    /// Groups are indexed by first appearance of their name in row order.
    pub fn new(data: Dataset, group_labels: &[String]) -> Result<Self> {
        if group_labels.len() != data.n() {
            return Err(Error::data(format!(
                "{} group labels for {} rows",
                group_labels.len(),
                data.n()
            )));
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut group_names = Vec::new();
        let group = group_labels
            .iter()
            .map(|g| {
                *index.entry(g.as_str()).or_insert_with(|| {
                    group_names.push(g.clone());
                    group_names.len() - 1
                })
            })
            .collect();
        Ok(Self {
            data,
            group,
            group_names,
        })
    }

    /// Builds from explicit group indices in `0..names.len()`; every group must be non-empty.
    pub fn from_indices(
        data: Dataset,
        group: Vec<usize>,
        group_names: Vec<String>,
    ) -> Result<Self> {
        if group.len() != data.n() {
            return Err(Error::data(format!(
                "{} group labels for {} rows",
                group.len(),
                data.n()
            )));
        }
        if group_names.is_empty() {
            return Err(Error::data("no groups"));
        }
        let mut counts = vec![0usize; group_names.len()];
        for &g in &group {
            let slot = counts
                .get_mut(g)
                .ok_or_else(|| Error::data(format!("group index {g} out of range")))?;
            *slot += 1;
        }
        if let Some(g) = counts.iter().position(|&c| c == 0) {
            return Err(Error::data(format!("group '{}' is empty", group_names[g])));
        }
        Ok(Self {
            data,
            group,
            group_names,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn group(&self) -> &[usize] {
        &self.group
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn n_groups(&self) -> usize {
        self.group_names.len()
    }

    /// Row indices of each group, in row order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_groups()];
        for (i, &g) in self.group.iter().enumerate() {
            out[g].push(i);
        }
        out
    }
}
