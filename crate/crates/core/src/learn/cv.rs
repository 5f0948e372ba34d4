use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::metrics::ConfusionMatrix;
use super::model::{train, TrainerConfig};
use crate::error::{Error, Result};

/// Splits row indices into k folds. Each class is shuffled and dealt
/// round-robin, the dealing position carrying over from one class to the
/// next so fold sizes stay balanced overall.
pub fn stratified_folds(y: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        by_class[c].push(i);
    }
    let min = by_class.iter().filter(|v| !v.is_empty()).map(Vec::len).min().unwrap_or(0);
    if k > min {
        return Err(Error::invalid(format!("{k} folds exceed the smallest class size {min}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut deal = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[deal % k].push(i);
            deal += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Seeded stratified hold-out: returns (train, test) indices with
/// ⌊n_c·test_fraction⌉ test rows per class.
pub fn stratified_split(y: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("test_fraction must lie in (0, 1)"));
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    BalancedAccuracy,
    Accuracy,
}

impl Metric {
    pub fn score(self, m: &ConfusionMatrix) -> Result<f64> {
        match self {
            Metric::BalancedAccuracy => m.balanced_accuracy(),
            Metric::Accuracy => Ok(m.accuracy()),
        }
    }
}

/// Mean held-out metric over stratified folds.
pub fn cross_val_score(d: &Dataset, cfg: &TrainerConfig, folds: usize, metric: Metric, seed: u64) -> Result<f64> {
    let parts = stratified_folds(d.labels(), folds, seed)?;
    let mut total = 0.0;
    for test in &parts {
        let mut in_test = vec![false; d.n_rows()];
        test.iter().for_each(|&i| in_test[i] = true);
        let train_idx: Vec<usize> = (0..d.n_rows()).filter(|&i| !in_test[i]).collect();
        let model = train(&d.subset(&train_idx), cfg)?;
        let held = d.subset(test);
        let pred = model.predict(&held)?;
        let mut cm = ConfusionMatrix::from_predictions(held.labels(), &pred.labels, d.n_classes())?;
        // classes absent from the data contribute no recall term
        let present: Vec<usize> = (0..d.n_classes()).filter(|&c| cm.counts[c].iter().sum::<u64>() > 0).collect();
        cm.counts = present.iter().map(|&r| present.iter().map(|&c| cm.counts[r][c]).collect()).collect();
        total += metric.score(&cm)?;
    }
    Ok(total / parts.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_index: usize,
    pub best: TrainerConfig,
    pub best_score: f64,
    pub scores: Vec<f64>,
}

/// Exhaustive CV over the listed configurations; ties keep the earliest.
pub fn grid_search(d: &Dataset, grid: &[TrainerConfig], folds: usize, metric: Metric, seed: u64) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    let scores = grid
        .iter()
        .map(|cfg| cross_val_score(d, cfg, folds, metric, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_index] {
            best_index = i;
        }
    }
    Ok(GridResult {
        best_index,
        best: grid[best_index].clone(),
        best_score: scores[best_index],
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::tree::TreeConfig;

    #[test]
    fn folds_balanced_50_50() {
        let y: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let folds = stratified_folds(&y, 10, 1).unwrap();
        for f in &folds {
            assert_eq!(f.iter().filter(|&&i| y[i] == 0).count(), 5);
            assert_eq!(f.len(), 10);
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn folds_uneven_classes() {
        let y: Vec<usize> = (0..97).map(|i| usize::from(i >= 60)).collect();
        for f in stratified_folds(&y, 10, 3).unwrap() {
            assert_eq!(f.iter().filter(|&&i| y[i] == 0).count(), 6);
            assert!((3..=4).contains(&f.iter().filter(|&&i| y[i] == 1).count()));
        }
        assert!(stratified_folds(&[0, 0, 1], 2, 0).is_err());
        assert_eq!(stratified_folds(&y, 10, 3).unwrap(), stratified_folds(&y, 10, 3).unwrap());
    }

    fn xor(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![(i % 2) as f64 + 0.01 * (i % 7) as f64, ((i / 2) % 2) as f64 + 0.01 * (i % 5) as f64])
            .collect();
        let y = (0..n).map(|i| (i % 2) ^ ((i / 2) % 2)).collect();
        Dataset::new(rows, y, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn grid_prefers_deeper_tree_on_xor() {
        let d = xor(80);
        let depth = |m| {
            TrainerConfig::DecisionTree(TreeConfig {
                max_depth: Some(m),
                ..TreeConfig::default()
            })
        };
        let r = grid_search(&d, &[depth(1), depth(5)], 5, Metric::BalancedAccuracy, 0).unwrap();
        assert_eq!(r.best_index, 1);
        let again = cross_val_score(&d, &r.best, 5, Metric::BalancedAccuracy, 0).unwrap();
        assert_eq!(again, r.best_score);
        assert!(grid_search(&d, &[], 5, Metric::Accuracy, 0).is_err());
        let single = grid_search(&d, &[depth(2)], 5, Metric::Accuracy, 0).unwrap();
        assert_eq!(single.best, depth(2));
    }

    #[test]
    fn split_is_stratified() {
        let y: Vec<usize> = (0..100).map(|i| i % 4).collect();
        let (tr, te) = stratified_split(&y, 0.2, 9).unwrap();
        assert_eq!(te.len(), 20);
        assert_eq!(tr.len() + te.len(), 100);
        assert!((0..4).all(|c| te.iter().filter(|&&i| y[i] == c).count() == 5));
    }
}
