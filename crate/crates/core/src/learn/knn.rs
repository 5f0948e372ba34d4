use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
    /// Minkowski exponent (2 = Euclidean).
    #[serde(default = "two")]
    pub p: f64,
}

fn two() -> f64 {
    2.0
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5, p: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub p: f64,
    pub data: Dataset,
}

pub(crate) fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    }
    if p == 1.0 {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn train_knn(d: &Dataset, cfg: &KnnConfig) -> Result<KnnModel> {
    if cfg.k == 0 || cfg.k > d.n_rows() {
        return Err(Error::invalid(format!("k = {} must lie in 1..={}", cfg.k, d.n_rows())));
    }
    if !(cfg.p >= 1.0 && cfg.p.is_finite()) {
        return Err(Error::invalid("Minkowski p must be finite and >= 1"));
    }
    Ok(KnnModel {
        k: cfg.k,
        p: cfg.p,
        data: d.clone(),
    })
}

impl KnnModel {
    /// Vote shares of the k nearest stored rows (distance ties → lower
    /// row index).
    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let mut dist: Vec<(f64, usize)> = self
            .data
            .rows()
            .enumerate()
            .map(|(i, r)| (minkowski(row, r, self.p), i))
            .collect();
        dist.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; self.data.n_classes()];
        for &(_, i) in &dist[..self.k] {
            votes[self.data.labels()[i]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= self.k as f64);
        votes
    }
}
