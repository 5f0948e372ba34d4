use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::invalid("truth and prediction lengths differ"));
        }
        let mut m = Self::new(n_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= n_classes || p >= n_classes {
                return Err(Error::OutOfRange(format!("label outside 0..{n_classes}")));
            }
            m.counts[t][p] += 1;
        }
        Ok(m)
    }

    /// Binary matrix with class 0 = positive.
    pub fn binary(tp: u64, fn_: u64, tn: u64, fp: u64) -> Self {
        Self {
            counts: vec![vec![tp, fn_], vec![fp, tn]],
        }
    }

    pub fn per_class_recall(&self) -> Result<Vec<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    Err(Error::invalid(format!("class {k} has no true samples")))
                } else {
                    Ok(row[k] as f64 / total as f64)
                }
            })
            .collect()
    }

    pub fn balanced_accuracy(&self) -> Result<f64> {
        balanced_accuracy(&self.counts)
    }

    pub fn accuracy(&self) -> f64 {
        let total: u64 = self.counts.iter().flatten().sum();
        let diag: u64 = (0..self.counts.len()).map(|k| self.counts[k][k]).sum();
        if total == 0 {
            0.0
        } else {
            diag as f64 / total as f64
        }
    }

    pub fn report(&self) -> Result<MetricReport> {
        Ok(MetricReport {
            confusion: self.counts.clone(),
            balanced_accuracy: self.balanced_accuracy()?,
            per_class_recall: self.per_class_recall()?,
        })
    }
}

/// Mean per-class recall.
pub fn balanced_accuracy(confusion: &[Vec<u64>]) -> Result<f64> {
    if confusion.is_empty() {
        return Err(Error::invalid("empty confusion matrix"));
    }
    let m = ConfusionMatrix {
        counts: confusion.to_vec(),
    };
    let recalls = m.per_class_recall()?;
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub confusion: Vec<Vec<u64>>,
    pub balanced_accuracy: f64,
    pub per_class_recall: Vec<f64>,
}
