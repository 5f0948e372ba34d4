use std::path::Path;

use serde::{Deserialize, Serialize};

use super::boost::{train_boosted, BoostConfig, BoostedModel};
use super::dataset::Dataset;
use super::forest::{train_forest, ForestConfig, ForestModel};
use super::knn::{train_knn, KnnConfig, KnnModel};
use super::nb::{train_nb, NbModel};
use super::tree::{train_tree, TreeConfig, TreeModel};
use crate::error::{Error, Result};

/// Learner family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainerConfig {
    DecisionTree(TreeConfig),
    RandomForest(ForestConfig),
    Boosted(BoostConfig),
    Knn(KnnConfig),
    NaiveBayes,
}

impl TrainerConfig {
    pub fn family(&self) -> &'static str {
        match self {
            TrainerConfig::DecisionTree(_) => "decision_tree",
            TrainerConfig::RandomForest(_) => "random_forest",
            TrainerConfig::Boosted(_) => "boosted",
            TrainerConfig::Knn(_) => "knn",
            TrainerConfig::NaiveBayes => "naive_bayes",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    DecisionTree(TreeModel),
    RandomForest(ForestModel),
    Boosted(BoostedModel),
    Knn(KnnModel),
    NaiveBayes(NbModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: Vec<usize>,
    /// Per-row class scores; nonnegative and summing to 1.
    pub scores: Vec<Vec<f64>>,
}

pub const MODEL_VERSION: &str = "model_v1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: String,
    n_features: usize,
    class_names: Vec<String>,
    model: Model,
}

/// A model together with the input width and class names it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: Model,
    pub n_features: usize,
    pub class_names: Vec<String>,
}

pub fn train(d: &Dataset, cfg: &TrainerConfig) -> Result<TrainedModel> {
    let model = match cfg {
        TrainerConfig::DecisionTree(c) => Model::DecisionTree(train_tree(d, c)?),
        TrainerConfig::RandomForest(c) => Model::RandomForest(train_forest(d, c)?),
        TrainerConfig::Boosted(c) => Model::Boosted(train_boosted(d, c)?),
        TrainerConfig::Knn(c) => Model::Knn(train_knn(d, c)?),
        TrainerConfig::NaiveBayes => Model::NaiveBayes(train_nb(d)?),
    };
    Ok(TrainedModel {
        model,
        n_features: d.n_features(),
        class_names: d.class_names().to_vec(),
    })
}

/// Index of the largest score; ties go to the lowest class.
pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = k;
        }
    }
    best
}

impl Model {
    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        match self {
            Model::DecisionTree(m) => m.proba(row),
            Model::RandomForest(m) => m.proba(row),
            Model::Boosted(m) => m.proba(row),
            Model::Knn(m) => m.proba(row),
            Model::NaiveBayes(m) => m.proba(row),
        }
    }
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn predict_rows<'a>(&self, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Prediction> {
        let mut labels = Vec::new();
        let mut scores = Vec::new();
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != self.n_features {
                return Err(Error::Model(format!(
                    "row {i} has {} features, model expects {}",
                    row.len(),
                    self.n_features
                )));
            }
            let p = self.model.proba(row);
            labels.push(argmax(&p));
            scores.push(p);
        }
        Ok(Prediction { labels, scores })
    }

    pub fn predict(&self, d: &Dataset) -> Result<Prediction> {
        self.predict_rows(d.rows())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            version: MODEL_VERSION.into(),
            n_features: self.n_features,
            class_names: self.class_names.clone(),
            model: self.model.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        match v.get("version").and_then(|s| s.as_str()) {
            Some(MODEL_VERSION) => {}
            Some(other) => return Err(Error::Model(format!("unsupported model version {other:?}, expected {MODEL_VERSION}"))),
            None => return Err(Error::Model("model file has no version field".into())),
        }
        let f: ModelFile = serde_json::from_value(v).map_err(|e| Error::Model(format!("malformed model: {e}")))?;
        Ok(Self {
            model: f.model,
            n_features: f.n_features,
            class_names: f.class_names,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset {
        Dataset::new(
            (0..30).map(|i| vec![i as f64, (i % 4) as f64]).collect(),
            (0..30).map(|i| usize::from(i >= 15)).collect(),
            vec!["lo".into(), "hi".into()],
        )
        .unwrap()
    }

    #[test]
    fn every_family_round_trips() {
        let d = data();
        for cfg in [
            TrainerConfig::DecisionTree(TreeConfig::default()),
            TrainerConfig::RandomForest(ForestConfig {
                n_estimators: 5,
                ..ForestConfig::default()
            }),
            TrainerConfig::Boosted(BoostConfig {
                n_stages: 5,
                ..BoostConfig::default()
            }),
            TrainerConfig::Knn(KnnConfig { k: 3, p: 2.0 }),
            TrainerConfig::NaiveBayes,
        ] {
            let m = train(&d, &cfg).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.predict(&d).unwrap(), m.predict(&d).unwrap(), "{}", cfg.family());
            for s in m.predict(&d).unwrap().scores {
                assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(s.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn width_and_version_errors() {
        let m = train(&data(), &TrainerConfig::NaiveBayes).unwrap();
        assert!(matches!(m.predict_rows([&[1.0][..]]), Err(Error::Model(_))));
        let bad = m.to_json().unwrap().replace(MODEL_VERSION, "model_v0");
        assert!(matches!(TrainedModel::from_json(&bad), Err(Error::Model(_))));
        assert!(TrainedModel::from_json("{\"version\":\"model_v1\"}").is_err());
    }
}
