use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use super::knn::minkowski;
use crate::error::{Error, Result};

/// Appends `n_new` synthetic rows to `target_class`, each on the segment
/// between a random member x and one of its k nearest same-class
/// neighbours: x + u·(x_nn − x), u ~ U(0, 1).
pub fn smote(d: &Dataset, target_class: usize, n_new: usize, k: usize, seed: u64) -> Result<Dataset> {
    if target_class >= d.n_classes() {
        return Err(Error::OutOfRange(format!("class {target_class} of {}", d.n_classes())));
    }
    let members: Vec<usize> = (0..d.n_rows()).filter(|&i| d.labels()[i] == target_class).collect();
    if members.len() <= k || k == 0 {
        return Err(Error::invalid(format!(
            "SMOTE needs more than k = {k} (k >= 1) members of the target class, found {}",
            members.len()
        )));
    }
    let mut out = d.clone();
    if n_new == 0 {
        return Ok(out);
    }
    let neighbours: Vec<Vec<usize>> = members
        .iter()
        .map(|&i| {
            let mut dist: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (minkowski(d.row(i), d.row(j), 2.0), j))
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dist.iter().take(k).map(|&(_, j)| j).collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row = vec![0.0; d.n_features()];
    for _ in 0..n_new {
        let m = rng.random_range(0..members.len());
        let nn = neighbours[m][rng.random_range(0..k)];
        let u: f64 = rng.random();
        let (x, y) = (d.row(members[m]), d.row(nn));
        for j in 0..row.len() {
            row[j] = x[j] + u * (y[j] - x[j]);
        }
        out.push_row(&row, target_class);
    }
    Ok(out)
}

/// NearMiss-1: keeps the `n_keep` majority rows whose mean distance to
/// their 3 nearest non-majority rows is smallest (ties → lower index);
/// all other rows are kept. Row order is preserved. The seed is accepted
/// for interface symmetry; the selection itself is deterministic.
pub fn nearmiss(d: &Dataset, majority_class: usize, n_keep: usize, _seed: u64) -> Result<Dataset> {
    let labels = d.labels();
    let majority: Vec<usize> = (0..d.n_rows()).filter(|&i| labels[i] == majority_class).collect();
    if n_keep > majority.len() {
        return Err(Error::invalid(format!("n_keep {n_keep} exceeds majority count {}", majority.len())));
    }
    let minority: Vec<usize> = (0..d.n_rows()).filter(|&i| labels[i] != majority_class).collect();
    if minority.is_empty() {
        return Err(Error::invalid("NearMiss needs at least one non-majority row"));
    }
    let mut scored: Vec<(f64, usize)> = majority
        .iter()
        .map(|&i| {
            let mut dist: Vec<f64> = minority.iter().map(|&j| minkowski(d.row(i), d.row(j), 2.0)).collect();
            dist.sort_by(f64::total_cmp);
            let m = dist.len().min(3);
            (dist[..m].iter().sum::<f64>() / m as f64, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut keep = vec![false; d.n_rows()];
    minority.iter().for_each(|&i| keep[i] = true);
    scored.iter().take(n_keep).for_each(|&(_, i)| keep[i] = true);
    let idx: Vec<usize> = (0..d.n_rows()).filter(|&i| keep[i]).collect();
    Ok(d.subset(&idx))
}
