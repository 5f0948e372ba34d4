//! From-scratch supervised learners, model selection, resampling and
//! metrics.

mod bayes;
mod boost;
mod cv;
mod dataset;
mod forest;
mod knn;
mod metrics;
mod model;
mod nb;
mod resample;
mod tree;

pub use bayes::{bayes_opt, Axis, BayesResult, N_CANDIDATES};
pub use boost::{train_boosted, BoostConfig, BoostMode, BoostedModel, SecondOrderParams};
pub use cv::{cross_val_score, grid_search, stratified_folds, stratified_split, GridResult, Metric};
pub use dataset::Dataset;
pub use forest::{train_forest, ForestConfig, ForestModel, MaxFeatures};
pub use knn::{train_knn, KnnConfig, KnnModel};
pub use metrics::{balanced_accuracy, ConfusionMatrix, MetricReport};
pub use model::{train, Model, Prediction, TrainedModel, TrainerConfig, MODEL_VERSION};
pub use nb::{train_nb, NbModel};
pub use resample::{nearmiss, smote};
pub use tree::{impurity, split_gain, train_tree, Criterion, Tree, TreeConfig, TreeModel};
