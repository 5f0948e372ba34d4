//! Feature ranking and subset selection: mutual information, mRMR,
//! random-forest impurity importance and exhaustive subset search.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::learn::{
    cross_val_score, train_forest, Dataset, ForestConfig, KnnConfig, Metric, TrainerConfig, TreeConfig,
};

/// Named columns over a labelled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub data: Dataset,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, data: Dataset) -> Result<Self> {
        if names.len() != data.n_features() {
            return Err(Error::invalid(format!("{} names for {} columns", names.len(), data.n_features())));
        }
        Ok(Self { names, data })
    }

    /// Stacks feature vectors that share one layout.
    pub fn from_vectors(vectors: &[FeatureVector], labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let names = vectors.first().map(|v| v.names.clone()).unwrap_or_default();
        if let Some(i) = vectors.iter().position(|v| v.names != names) {
            return Err(Error::invalid(format!("feature vector {i} has a different layout")));
        }
        let rows = vectors.iter().map(|v| v.values.clone()).collect();
        Self::new(names, Dataset::new(rows, labels, class_names)?)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("unknown feature {name:?}")))
    }

    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix> {
        let cols = names.iter().map(|n| self.column_index(n)).collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            names: names.to_vec(),
            data: self.data.select_features(&cols)?,
        })
    }

    fn require_classes(&self) -> Result<()> {
        if self.data.present_classes() < 2 {
            return Err(Error::invalid("feature selection needs at least 2 distinct target classes"));
        }
        Ok(())
    }

    /// CSV with the feature names plus a trailing `label` column holding
    /// class names.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let csv_err = |e: csv::Error| Error::invalid(format!("{}: {e}", path.display()));
        let mut header = self.names.clone();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for (row, &y) in self.data.rows().zip(self.data.labels()) {
            let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
            rec.push(self.data.class_names()[y].clone());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub score: f64,
    /// 1-based position.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedFeatures(pub Vec<RankedFeature>);

impl RankedFeatures {
    fn from_pairs(pairs: Vec<(String, f64)>) -> Self {
        Self(
            pairs
                .into_iter()
                .enumerate()
                .map(|(i, (name, score))| RankedFeature { name, score, rank: i + 1 })
                .collect(),
        )
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|r| r.name.clone()).collect()
    }

    pub fn top(&self, k: usize) -> Vec<String> {
        self.0.iter().take(k).map(|r| r.name.clone()).collect()
    }
}

fn discretize(x: &[f64], bins: usize) -> Vec<usize> {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi > lo) {
        return vec![0; x.len()];
    }
    let width = (hi - lo) / bins as f64;
    x.iter().map(|&v| (((v - lo) / width) as usize).min(bins - 1)).collect()
}

/// Plug-in mutual information (bits) between two discrete codings.
fn mi_codes(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let na = a.iter().max().map_or(0, |m| m + 1);
    let nb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0.0; na * nb];
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * nb + j] += 1.0;
        pa[i] += 1.0;
        pb[j] += 1.0;
    }
    let mut mi = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let c = joint[i * nb + j];
            if c > 0.0 {
                mi += c / n * (c * n / (pa[i] * pb[j])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// I(x; y) in bits after equal-width discretization of x into `bins`.
pub fn mutual_information(x: &[f64], y: &[usize], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::invalid("bins must be at least 2"));
    }
    if x.len() != y.len() {
        return Err(Error::invalid("column and target lengths differ"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("column has non-finite values"));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    Ok(mi_codes(&discretize(x, bins), y))
}

/// Picks the larger score; equal scores go to the lexicographically
/// smaller name.
fn better(score: f64, name: &str, best: Option<(f64, &str)>) -> bool {
    match best {
        None => true,
        Some((s, n)) => score > s || (score == s && name < n),
    }
}

/// Greedy mRMR (difference form): each step adds the feature maximizing
/// I(x;y) − mean_{s∈S} I(x;s).
pub fn mrmr_rank(m: &FeatureMatrix, k: usize, bins: usize) -> Result<RankedFeatures> {
    m.require_classes()?;
    let d = m.names.len();
    if k > d {
        return Err(Error::invalid(format!("k = {k} exceeds {d} columns")));
    }
    if bins < 2 {
        return Err(Error::invalid("bins must be at least 2"));
    }
    let codes: Vec<Vec<usize>> = (0..d).map(|j| discretize(&m.data.column(j), bins)).collect();
    let relevance: Vec<f64> = codes.iter().map(|c| mi_codes(c, m.data.labels())).collect();
    let mut redundancy = vec![0.0; d];
    let mut chosen = vec![false; d];
    let mut out = Vec::with_capacity(k);
    for step in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for j in (0..d).filter(|&j| !chosen[j]) {
            let score = if step == 0 { relevance[j] } else { relevance[j] - redundancy[j] / step as f64 };
            if better(score, &m.names[j], best.map(|(s, b)| (s, m.names[b].as_str()))) {
                best = Some((score, j));
            }
        }
        let (score, j) = best.expect("k <= remaining columns");
        chosen[j] = true;
        out.push((m.names[j].clone(), score));
        for i in (0..d).filter(|&i| !chosen[i]) {
            redundancy[i] += mi_codes(&codes[i], &codes[j]);
        }
    }
    Ok(RankedFeatures::from_pairs(out))
}

/// Features by mean impurity decrease over a random forest.
pub fn rf_importance(m: &FeatureMatrix, cfg: &ForestConfig) -> Result<RankedFeatures> {
    m.require_classes()?;
    let forest = train_forest(&m.data, cfg)?;
    let mut pairs: Vec<(String, f64)> = m.names.iter().cloned().zip(forest.feature_importances()).collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(RankedFeatures::from_pairs(pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Unpruned Gini CART.
    DecisionTree,
    /// 5-nearest-neighbour Euclidean vote.
    Knn,
}

impl Baseline {
    pub fn trainer(self) -> TrainerConfig {
        match self {
            Baseline::DecisionTree => TrainerConfig::DecisionTree(TreeConfig::default()),
            Baseline::Knn => TrainerConfig::Knn(KnnConfig { k: 5, p: 2.0 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub names: Vec<String>,
    pub score: f64,
    pub evaluations: usize,
}

/// Scores every nonempty subset of `candidates` by stratified-CV balanced
/// accuracy of the baseline. Ties prefer fewer features, then the
/// lexicographically smaller sorted name list.
pub fn subset_search(
    m: &FeatureMatrix,
    candidates: &[String],
    baseline: Baseline,
    cv_folds: usize,
    seed: u64,
) -> Result<SubsetResult> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate features"));
    }
    if candidates.len() > 16 {
        return Err(Error::invalid("at most 16 candidates (65,535 subsets)"));
    }
    m.require_classes()?;
    let cols = candidates.iter().map(|c| m.column_index(c)).collect::<Result<Vec<_>>>()?;
    let trainer = baseline.trainer();
    let mut best: Option<(f64, Vec<String>)> = None;
    let mut evaluations = 0;
    for mask in 1u32..(1 << candidates.len()) {
        let pick: Vec<usize> = (0..candidates.len()).filter(|b| mask >> b & 1 == 1).collect();
        let sub = m.data.select_features(&pick.iter().map(|&b| cols[b]).collect::<Vec<_>>())?;
        let score = cross_val_score(&sub, &trainer, cv_folds, Metric::BalancedAccuracy, seed)?;
        evaluations += 1;
        let mut names: Vec<String> = pick.iter().map(|&b| candidates[b].clone()).collect();
        names.sort();
        let wins = match &best {
            None => true,
            Some((s, n)) => score > *s || (score == *s && (names.len(), &names) < (n.len(), n)),
        };
        if wins {
            best = Some((score, names));
        }
    }
    let (score, names) = best.expect("at least one subset");
    Ok(SubsetResult {
        names,
        score,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mi_examples() {
        let y: Vec<usize> = (0..400).map(|i| i % 4).collect();
        let x: Vec<f64> = y.iter().map(|&c| c as f64).collect();
        assert!((mutual_information(&x, &y, 16).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(mutual_information(&[3.0; 400], &y, 16).unwrap(), 0.0);
        assert!(mutual_information(&x, &y, 1).is_err());
    }

    #[test]
    fn mrmr_prefers_independent_over_copy() {
        // f carries y fully; g carries half of it independently of f
        let n = 400;
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let f: Vec<f64> = (0..n).map(|i| (i % 2) as f64 + 0.1 * ((i / 2) % 2) as f64).collect();
        let g: Vec<f64> = (0..n).map(|i| if (i / 4) % 2 == 0 { (i % 2) as f64 } else { ((i / 8) % 2) as f64 }).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![f[i], f[i], g[i]]).collect();
        let m = FeatureMatrix::new(
            vec!["f".into(), "f_copy".into(), "g".into()],
            Dataset::new(rows, y, vec!["0".into(), "1".into()]).unwrap(),
        )
        .unwrap();
        let r = mrmr_rank(&m, 3, 16).unwrap();
        assert_eq!(r.names(), vec!["f", "g", "f_copy"]);
        assert_eq!(mrmr_rank(&m, 1, 16).unwrap().names(), vec!["f"]);
        assert!(mrmr_rank(&m, 4, 16).is_err());
    }

    #[test]
    fn constant_feature_has_zero_importance() {
        let n = 60;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![1.0, i as f64, (i * 7 % 13) as f64]).collect();
        let y: Vec<usize> = (0..n).map(|i| usize::from(i >= 30)).collect();
        let m = FeatureMatrix::new(
            vec!["c".into(), "sep".into(), "noise".into()],
            Dataset::new(rows, y, vec!["a".into(), "b".into()]).unwrap(),
        )
        .unwrap();
        let r = rf_importance(
            &m,
            &ForestConfig {
                n_estimators: 20,
                ..ForestConfig::default()
            },
        )
        .unwrap();
        assert_eq!(r.0[0].name, "sep");
        assert_eq!(r.0.iter().find(|e| e.name == "c").unwrap().score, 0.0);
    }

    #[test]
    fn subset_search_counts_and_tie_break() {
        let n = 40;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 2) as f64, (i * 5 % 7) as f64, i as f64 % 3.0]).collect();
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let m = FeatureMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            Dataset::new(rows, y, vec!["x".into(), "y".into()]).unwrap(),
        )
        .unwrap();
        let r = subset_search(&m, &m.names.clone(), Baseline::DecisionTree, 5, 0).unwrap();
        assert_eq!(r.evaluations, 7);
        assert_eq!(r.names, vec!["a"]);
        assert_eq!(r.score, 1.0);
        assert!(subset_search(&m, &[], Baseline::Knn, 5, 0).is_err());
    }
}
