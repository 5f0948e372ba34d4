use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::tree::{class_stats, grow, Criterion, GrowSpec, Objective, Presorted, Tree};
use crate::error::{Error, Result};
use crate::txmodel::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    #[default]
    Sqrt,
    Log2,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::Log2 => (d as f64).log2().ceil() as usize,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    pub n_estimators: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub max_features: MaxFeatures,
    #[serde(default = "yes")]
    pub bootstrap: bool,
    #[serde(default)]
    pub criterion: Criterion,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: None,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            criterion: Criterion::Gini,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
}

impl ForestModel {
    /// Average of the trees' leaf class distributions.
    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, v) in p.iter_mut().zip(t.value(row)) {
                *a += v;
            }
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }

    /// Mean over trees of weighted impurity decrease per feature.
    pub fn feature_importances(&self) -> Vec<f64> {
        let d = self.trees.first().map_or(0, |t| t.n_features);
        let mut imp = vec![0.0; d];
        for t in &self.trees {
            for (a, v) in imp.iter_mut().zip(t.impurity_decrease()) {
                *a += v;
            }
        }
        let n = self.trees.len() as f64;
        imp.iter_mut().for_each(|v| *v /= n);
        imp
    }
}

/// Each tree sees a bootstrap resample (size n, with replacement) and a
/// fresh random feature subset at every split; tree t draws from a
/// ChaCha8 stream seeded by (seed, t).
pub fn train_forest(d: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    if cfg.n_estimators == 0 {
        return Err(Error::invalid("n_estimators must be at least 1"));
    }
    if d.n_rows() == 0 {
        return Err(Error::invalid("cannot train a forest on zero rows"));
    }
    let n = d.n_rows();
    let pre = Presorted::new(d);
    let k = cfg.max_features.resolve(d.n_features());
    let trees = (0..cfg.n_estimators)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, t as u64, 0x0f0e));
            let mut weight = vec![0.0; n];
            if cfg.bootstrap {
                for _ in 0..n {
                    weight[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weight.iter_mut().for_each(|w| *w = 1.0);
            }
            grow(
                d,
                &pre,
                &class_stats(d, &weight),
                &weight,
                GrowSpec {
                    objective: Objective::Class {
                        criterion: cfg.criterion,
                        n_classes: d.n_classes(),
                    },
                    max_depth: cfg.max_depth,
                    min_samples_split: 2,
                    max_features: Some(k),
                    rng: Some(&mut rng),
                },
            )
            .0
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_classes: d.n_classes(),
    })
}
