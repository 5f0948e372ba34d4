//! Multiclass gradient boosting: one regression tree per class per stage,
//! added to class scores F_k with shrinkage and mapped through softmax.
//!
//! `first_order` fits squared-error trees to the negative gradient
//! y_k − p_k of the multinomial deviance and replaces each leaf by one
//! Newton step, (K−1)/K · Σr / Σ|r|(1−|r|). `second_order` grows trees on
//! g = p − y, h = p(1 − p) directly: leaf weight −G/(H + λ) and split gain
//! ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ, splits with negative
//! gain being pruned.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::tree::{grow, GrowSpec, Objective, Presorted, Tree};
use crate::error::{Error, Result};
use crate::txmodel::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostMode {
    #[default]
    FirstOrder,
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondOrderParams {
    /// Minimum split gain (complexity penalty per leaf).
    #[serde(default)]
    pub gamma: f64,
    /// L2 penalty on leaf weights.
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SecondOrderParams {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    #[serde(default)]
    pub mode: BoostMode,
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Fraction of rows drawn (without replacement) per stage.
    #[serde(default = "one")]
    pub subsample: f64,
    #[serde(default)]
    pub second_order: SecondOrderParams,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            mode: BoostMode::FirstOrder,
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            subsample: 1.0,
            second_order: SecondOrderParams::default(),
            seed: 0,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be finite and >= 0"));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::invalid("subsample must lie in (0, 1]"));
        }
        let so = &self.second_order;
        if !(so.lambda >= 0.0 && so.gamma >= 0.0 && so.lambda.is_finite() && so.gamma.is_finite()) {
            return Err(Error::invalid("second-order gamma and lambda must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub mode: BoostMode,
    pub n_classes: usize,
    pub learning_rate: f64,
    /// Stage-0 scores: log class priors.
    pub priors: Vec<f64>,
    /// `stages[m][k]` is the class-k tree of stage m.
    pub stages: Vec<Vec<Tree>>,
    pub second_order: SecondOrderParams,
    /// Mean training deviance −ln p_y before the first stage and after each.
    pub train_deviance: Vec<f64>,
}

pub(crate) fn softmax(f: &[f64]) -> Vec<f64> {
    let m = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = f.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

impl BoostedModel {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn raw_scores(&self, row: &[f64]) -> Vec<f64> {
        let mut f = self.priors.clone();
        for stage in &self.stages {
            for (fk, t) in f.iter_mut().zip(stage) {
                *fk += self.learning_rate * t.value(row)[0];
            }
        }
        f
    }

    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores(row))
    }
}

fn deviance(f: &[f64], y: &[usize], k: usize) -> f64 {
    let n = y.len();
    (0..n)
        .map(|i| -softmax(&f[i * k..(i + 1) * k])[y[i]].max(1e-300).ln())
        .sum::<f64>()
        / n as f64
}

pub fn train_boosted(d: &Dataset, cfg: &BoostConfig) -> Result<BoostedModel> {
    cfg.validate()?;
    let n = d.n_rows();
    if n == 0 {
        return Err(Error::invalid("cannot boost on zero rows"));
    }
    let k = d.n_classes();
    let y = d.labels();
    let counts = d.class_counts();
    let priors: Vec<f64> = counts.iter().map(|&c| (c as f64 / n as f64).max(1e-12).ln()).collect();

    let mut f: Vec<f64> = (0..n).flat_map(|_| priors.iter().copied()).collect();
    let mut trace = vec![deviance(&f, y, k)];
    let pre = Presorted::new(d);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xb005, 0));
    let n_sub = ((cfg.subsample * n as f64).floor() as usize).clamp(1, n);
    let lr = cfg.learning_rate;

    let mut stages = Vec::with_capacity(cfg.n_stages);
    let mut stats = vec![0.0; n * 3];
    for _ in 0..cfg.n_stages {
        let p: Vec<Vec<f64>> = (0..n).map(|i| softmax(&f[i * k..(i + 1) * k])).collect();
        let weight: Vec<f64> = if n_sub < n {
            let mut w = vec![0.0; n];
            for i in sample(&mut rng, n, n_sub).into_iter() {
                w[i] = 1.0;
            }
            w
        } else {
            vec![1.0; n]
        };
        let mut stage = Vec::with_capacity(k);
        let mut updates: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(k);
        for class in 0..k {
            let target = |i: usize| f64::from(u8::from(y[i] == class));
            let objective = match cfg.mode {
                BoostMode::FirstOrder => {
                    for i in 0..n {
                        let r = target(i) - p[i][class];
                        let w = weight[i];
                        stats[i * 3..i * 3 + 3].copy_from_slice(&[w, w * r, w * r * r]);
                    }
                    Objective::Squared
                }
                BoostMode::SecondOrder => {
                    for i in 0..n {
                        let pk = p[i][class];
                        let g = pk - target(i);
                        let h = (pk * (1.0 - pk)).max(1e-16);
                        let w = weight[i];
                        stats[i * 3..i * 3 + 3].copy_from_slice(&[w, w * g, w * h]);
                    }
                    Objective::Newton {
                        lambda: cfg.second_order.lambda,
                        gamma: cfg.second_order.gamma,
                    }
                }
            };
            let (mut tree, leaf_of) = grow(
                d,
                &pre,
                &stats,
                &weight,
                GrowSpec {
                    objective,
                    max_depth: Some(cfg.max_depth),
                    min_samples_split: 2,
                    max_features: None,
                    rng: None,
                },
            );
            if cfg.mode == BoostMode::FirstOrder {
                let mut num = vec![0.0; tree.nodes.len()];
                let mut den = vec![0.0; tree.nodes.len()];
                for i in (0..n).filter(|&i| weight[i] > 0.0) {
                    let r = target(i) - p[i][class];
                    num[leaf_of[i]] += weight[i] * r;
                    den[leaf_of[i]] += weight[i] * r.abs() * (1.0 - r.abs());
                }
                let scale = (k as f64 - 1.0) / k as f64;
                for (j, node) in tree.nodes.iter_mut().enumerate().filter(|(_, n)| n.is_leaf()) {
                    node.value = vec![if den[j].abs() < 1e-150 { 0.0 } else { scale * num[j] / den[j] }];
                }
            }
            let leaf_values: Vec<f64> = tree.nodes.iter().map(|nd| nd.value[0]).collect();
            updates.push((leaf_of, leaf_values));
            stage.push(tree);
        }
        for (class, (leaf_of, vals)) in updates.iter().enumerate() {
            for i in 0..n {
                f[i * k + class] += lr * vals[leaf_of[i]];
            }
        }
        trace.push(deviance(&f, y, k));
        stages.push(stage);
    }
    Ok(BoostedModel {
        mode: cfg.mode,
        n_classes: k,
        learning_rate: lr,
        priors,
        stages,
        second_order: cfg.second_order,
        train_deviance: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_class() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..90)
            .map(|i| {
                let c = i % 3;
                vec![c as f64 + 0.3 * ((i * 37 % 11) as f64 / 11.0), ((i * 13) % 7) as f64]
            })
            .collect();
        let y = (0..90).map(|i| i % 3).collect();
        Dataset::new(rows, y, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    #[test]
    fn zero_learning_rate_predicts_priors() {
        let d = three_class();
        let m = train_boosted(
            &d,
            &BoostConfig {
                n_stages: 5,
                learning_rate: 0.0,
                ..BoostConfig::default()
            },
        )
        .unwrap();
        for row in d.rows() {
            for p in m.proba(row) {
                assert!((p - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deviance_decreases() {
        let d = three_class();
        for mode in [BoostMode::FirstOrder, BoostMode::SecondOrder] {
            let m = train_boosted(
                &d,
                &BoostConfig {
                    mode,
                    n_stages: 50,
                    ..BoostConfig::default()
                },
            )
            .unwrap();
            let t = &m.train_deviance;
            assert_eq!(t.len(), 51);
            assert!(t[50] < t[0], "{mode:?}: {} vs {}", t[50], t[0]);
        }
    }

    #[test]
    fn huge_ridge_keeps_priors() {
        let d = three_class();
        let m = train_boosted(
            &d,
            &BoostConfig {
                mode: BoostMode::SecondOrder,
                n_stages: 10,
                second_order: SecondOrderParams {
                    gamma: 0.0,
                    lambda: 1e9,
                },
                ..BoostConfig::default()
            },
        )
        .unwrap();
        for row in d.rows() {
            for p in m.proba(row) {
                assert!((p - 1.0 / 3.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn subsampled_training_is_seeded() {
        let d = three_class();
        let cfg = BoostConfig {
            n_stages: 10,
            subsample: 0.5,
            seed: 4,
            ..BoostConfig::default()
        };
        assert_eq!(train_boosted(&d, &cfg).unwrap(), train_boosted(&d, &cfg).unwrap());
        assert!(train_boosted(
            &d,
            &BoostConfig {
                learning_rate: -1.0,
                ..cfg
            }
        )
        .is_err());
    }
}
