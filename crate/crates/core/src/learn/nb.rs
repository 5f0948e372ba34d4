use serde::{Deserialize, Serialize};

use super::boost::softmax;
use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Gaussian naive Bayes with variance smoothing ε = 1e-9·(largest
/// feature variance over all rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub log_prior: Vec<Option<f64>>,
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let m = values.clone().sum::<f64>() / n;
    let v = values.map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v)
}

pub fn train_nb(d: &Dataset) -> Result<NbModel> {
    let n = d.n_rows();
    if n == 0 {
        return Err(Error::invalid("cannot fit naive Bayes on zero rows"));
    }
    let nf = d.n_features();
    let max_var = (0..nf)
        .map(|j| mean_var((0..n).map(|i| d.value(i, j))).1)
        .fold(0.0, f64::max);
    let eps = 1e-9 * max_var;
    let counts = d.class_counts();
    let mut mean = Vec::new();
    let mut var = Vec::new();
    for (c, &count) in counts.iter().enumerate() {
        let rows: Vec<usize> = (0..n).filter(|&i| d.labels()[i] == c).collect();
        let (mut mu, mut s2) = (vec![0.0; nf], vec![1.0; nf]);
        if count > 0 {
            for j in 0..nf {
                let (m, v) = mean_var(rows.iter().map(|&i| d.value(i, j)));
                mu[j] = m;
                s2[j] = v + eps;
            }
        }
        if s2.iter().any(|&v| v <= 0.0) {
            return Err(Error::undefined(format!(
                "class {} has a zero-variance feature and the data has no spread to smooth with",
                d.class_names()[c]
            )));
        }
        mean.push(mu);
        var.push(s2);
    }
    let log_prior = counts
        .iter()
        .map(|&c| (c > 0).then(|| (c as f64 / n as f64).ln()))
        .collect();
    Ok(NbModel { log_prior, mean, var })
}

impl NbModel {
    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let ll: Vec<f64> = self
            .log_prior
            .iter()
            .enumerate()
            .map(|(c, lp)| match lp {
                None => f64::NEG_INFINITY,
                Some(lp) => {
                    lp + row
                        .iter()
                        .zip(self.mean[c].iter().zip(&self.var[c]))
                        .map(|(x, (m, v))| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
                        .sum::<f64>()
                }
            })
            .collect();
        softmax(&ll)
    }
}
