use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major design matrix with integer class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n_features: usize,
    x: Vec<f64>,
    y: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::invalid(format!("row {bad} has {} values, expected {d}", rows[bad].len())));
        }
        Self::from_flat(rows.concat(), d, y, class_names)
    }

    pub fn from_flat(x: Vec<f64>, n_features: usize, y: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if n_features == 0 && !x.is_empty() {
            return Err(Error::invalid("zero-width rows with data"));
        }
        let n = if n_features == 0 { y.len() } else { x.len() / n_features };
        if n_features > 0 && x.len() % n_features != 0 {
            return Err(Error::invalid("flat data is not a whole number of rows"));
        }
        if n != y.len() {
            return Err(Error::invalid(format!("{n} rows but {} labels", y.len())));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at row {}, column {}", i / n_features, i % n_features)));
        }
        if class_names.is_empty() {
            return Err(Error::invalid("at least one class name is required"));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= class_names.len()) {
            return Err(Error::invalid(format!("label {bad} outside 0..{}", class_names.len())));
        }
        Ok(Self {
            n_features,
            x,
            y,
            class_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n_features + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &y in &self.y {
            c[y] += 1;
        }
        c
    }

    /// Number of classes with at least one row.
    pub fn present_classes(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(idx.len() * self.n_features);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        Dataset {
            n_features: self.n_features,
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn select_features(&self, cols: &[usize]) -> Result<Dataset> {
        if let Some(&c) = cols.iter().find(|&&c| c >= self.n_features) {
            return Err(Error::OutOfRange(format!("feature {c} of {}", self.n_features)));
        }
        let x = self.rows().flat_map(|r| cols.iter().map(move |&c| r[c])).collect();
        Ok(Dataset {
            n_features: cols.len(),
            x,
            y: self.y.clone(),
            class_names: self.class_names.clone(),
        })
    }

    pub(crate) fn push_row(&mut self, row: &[f64], label: usize) {
        debug_assert_eq!(row.len(), self.n_features);
        self.x.extend_from_slice(row);
        self.y.push(label);
    }
}
