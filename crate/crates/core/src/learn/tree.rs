//! Binary decision trees grown level by level over presorted feature
//! columns. One engine serves classification (CART), squared-error
//! regression on boosting residuals and second-order (gradient/hessian)
//! leaf fitting.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

/// Gini = 1 − Σp², entropy = −Σp·log₂p over (possibly weighted) counts.
pub fn impurity(counts: &[f64], criterion: Criterion) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    match criterion {
        Criterion::Gini => 1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>(),
        Criterion::Entropy => -counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|c| {
                let p = c / total;
                p * p.log2()
            })
            .sum::<f64>(),
    }
}

/// Information gain I(parent) − (n_l/n)·I(left) − (n_r/n)·I(right).
pub fn split_gain(parent: &[f64], left: &[f64], right: &[f64], criterion: Criterion) -> Result<f64> {
    if parent.len() != left.len() || parent.len() != right.len() {
        return Err(Error::invalid("class-count vectors differ in length"));
    }
    let consistent = parent
        .iter()
        .zip(left.iter().zip(right))
        .all(|(p, (l, r))| (p - l - r).abs() <= 1e-9 * p.abs().max(1.0));
    if !consistent {
        return Err(Error::invalid("left + right counts do not equal parent counts"));
    }
    let np: f64 = parent.iter().sum();
    if np <= 0.0 {
        return Err(Error::invalid("empty parent node"));
    }
    let nl: f64 = left.iter().sum();
    let nr: f64 = right.iter().sum();
    Ok(impurity(parent, criterion) - nl / np * impurity(left, criterion) - nr / np * impurity(right, criterion))
}

/// What a tree's per-sample statistics mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Objective {
    /// stats = one-hot class weight (width = n_classes)
    Class { criterion: Criterion, n_classes: usize },
    /// stats = [w, w·r, w·r²]
    Squared,
    /// stats = [w, w·g, w·h]
    Newton { lambda: f64, gamma: f64 },
}

impl Objective {
    fn width(&self) -> usize {
        match self {
            Objective::Class { n_classes, .. } => *n_classes,
            _ => 3,
        }
    }

    fn weight(&self, s: &[f64]) -> f64 {
        match self {
            Objective::Class { .. } => s.iter().sum(),
            _ => s[0],
        }
    }

    fn impurity(&self, s: &[f64]) -> f64 {
        match *self {
            Objective::Class { criterion, .. } => impurity(s, criterion),
            Objective::Squared => {
                if s[0] <= 0.0 {
                    0.0
                } else {
                    let m = s[1] / s[0];
                    (s[2] / s[0] - m * m).max(0.0)
                }
            }
            Objective::Newton { lambda, .. } => -0.5 * s[1] * s[1] / (s[2] + lambda),
        }
    }

    fn gain(&self, parent: &[f64], left: &[f64], right: &[f64]) -> f64 {
        match *self {
            Objective::Newton { lambda, gamma } => {
                let score = |s: &[f64]| s[1] * s[1] / (s[2] + lambda);
                0.5 * (score(left) + score(right) - score(parent)) - gamma
            }
            _ => {
                let wp = self.weight(parent);
                self.impurity(parent)
                    - self.weight(left) / wp * self.impurity(left)
                    - self.weight(right) / wp * self.impurity(right)
            }
        }
    }

    fn value(&self, s: &[f64]) -> Vec<f64> {
        match *self {
            Objective::Class { .. } => {
                let w = self.weight(s);
                if w > 0.0 {
                    s.iter().map(|c| c / w).collect()
                } else {
                    vec![1.0 / s.len() as f64; s.len()]
                }
            }
            Objective::Squared => vec![if s[0] > 0.0 { s[1] / s[0] } else { 0.0 }],
            Objective::Newton { lambda, .. } => vec![-s[1] / (s[2] + lambda)],
        }
    }

    fn can_split(&self, s: &[f64]) -> bool {
        match self {
            Objective::Newton { .. } => true,
            _ => self.impurity(s) > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Node {
    pub feature: usize,
    pub threshold: f64,
    /// Child indices; `left == 0` marks a leaf (the root is never a child).
    pub left: usize,
    pub right: usize,
    pub impurity: f64,
    pub weight: f64,
    pub gain: f64,
    pub value: Vec<f64>,
}

impl Node {
    fn leaf(impurity: f64, weight: f64, value: Vec<f64>) -> Self {
        Self {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0,
            impurity,
            weight,
            gain: 0.0,
            value,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.left == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NestedNode {
    Split {
        feature: usize,
        threshold: f64,
        impurity: f64,
        n_samples: f64,
        gain: f64,
        value: Vec<f64>,
        left: Box<NestedNode>,
        right: Box<NestedNode>,
    },
    Leaf {
        impurity: f64,
        n_samples: f64,
        value: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    n_features: usize,
    root: NestedNode,
}

/// Arena-backed binary tree; serialized as nested node objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TreeRepr", try_from = "TreeRepr")]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) n_features: usize,
}

impl From<Tree> for TreeRepr {
    fn from(t: Tree) -> Self {
        fn nest(nodes: &[Node], i: usize) -> NestedNode {
            let n = &nodes[i];
            if n.is_leaf() {
                NestedNode::Leaf {
                    impurity: n.impurity,
                    n_samples: n.weight,
                    value: n.value.clone(),
                }
            } else {
                NestedNode::Split {
                    feature: n.feature,
                    threshold: n.threshold,
                    impurity: n.impurity,
                    n_samples: n.weight,
                    gain: n.gain,
                    value: n.value.clone(),
                    left: Box::new(nest(nodes, n.left)),
                    right: Box::new(nest(nodes, n.right)),
                }
            }
        }
        TreeRepr {
            n_features: t.n_features,
            root: nest(&t.nodes, 0),
        }
    }
}

impl TryFrom<TreeRepr> for Tree {
    type Error = String;

    fn try_from(r: TreeRepr) -> std::result::Result<Self, String> {
        // breadth-first, matching the order in which `grow` allocates nodes
        let mut nodes = vec![Node::leaf(0.0, 0.0, Vec::new())];
        let mut queue = std::collections::VecDeque::from([(0usize, r.root)]);
        while let Some((idx, n)) = queue.pop_front() {
            match n {
                NestedNode::Leaf {
                    impurity,
                    n_samples,
                    value,
                } => nodes[idx] = Node::leaf(impurity, n_samples, value),
                NestedNode::Split {
                    feature,
                    threshold,
                    impurity,
                    n_samples,
                    gain,
                    value,
                    left,
                    right,
                } => {
                    if feature >= r.n_features {
                        return Err(format!("split on feature {feature} of {}", r.n_features));
                    }
                    let l = nodes.len();
                    nodes.push(Node::leaf(0.0, 0.0, Vec::new()));
                    nodes.push(Node::leaf(0.0, 0.0, Vec::new()));
                    nodes[idx] = Node {
                        feature,
                        threshold,
                        left: l,
                        right: l + 1,
                        impurity,
                        weight: n_samples,
                        gain,
                        value,
                    };
                    queue.push_back((l, *left));
                    queue.push_back((l + 1, *right));
                }
            }
        }
        let width = nodes[0].value.len();
        if nodes.iter().any(|n| n.value.len() != width) {
            return Err("tree nodes disagree on value width".into());
        }
        Ok(Tree {
            nodes,
            n_features: r.n_features,
        })
    }
}

impl Tree {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + go(nodes, n.left).max(go(nodes, n.right))
            }
        }
        go(&self.nodes, 0)
    }

    pub(crate) fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.is_leaf() {
                return i;
            }
            i = if row[n.feature] <= n.threshold { n.left } else { n.right };
        }
    }

    pub fn value(&self, row: &[f64]) -> &[f64] {
        &self.nodes[self.leaf_index(row)].value
    }

    /// Σ over splits of (node weight / root weight)·gain, per feature.
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        let root = self.nodes[0].weight;
        if root <= 0.0 {
            return imp;
        }
        for n in self.nodes.iter().filter(|n| !n.is_leaf()) {
            imp[n.feature] += n.weight / root * n.gain.max(0.0);
        }
        imp
    }
}

/// Row indices of each feature column sorted by value (stable by index).
pub(crate) struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(d: &Dataset) -> Self {
        let order = (0..d.n_features())
            .map(|j| {
                let mut idx: Vec<u32> = (0..d.n_rows() as u32).collect();
                idx.sort_by(|&a, &b| d.value(a as usize, j).total_cmp(&d.value(b as usize, j)));
                idx
            })
            .collect();
        Self { order }
    }
}

pub(crate) struct GrowSpec<'a> {
    pub objective: Objective,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features sampled per node; `None` considers all.
    pub max_features: Option<usize>,
    pub rng: Option<&'a mut ChaCha8Rng>,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows a tree from per-sample statistics (`stats` is n × width, already
/// multiplied by `weight`). Returns the tree and each sample's leaf.
pub(crate) fn grow(data: &Dataset, pre: &Presorted, stats: &[f64], weight: &[f64], mut spec: GrowSpec) -> (Tree, Vec<usize>) {
    let obj = spec.objective;
    let w = obj.width();
    let n = data.n_rows();
    let d = data.n_features();
    debug_assert_eq!(stats.len(), n * w);

    let mut root = vec![0.0; w];
    for i in (0..n).filter(|&i| weight[i] > 0.0) {
        for (r, s) in root.iter_mut().zip(&stats[i * w..(i + 1) * w]) {
            *r += s;
        }
    }
    let mut node_stats = vec![root.clone()];
    let mut nodes = vec![Node::leaf(obj.impurity(&root), obj.weight(&root), obj.value(&root))];
    let mut node_of = vec![0usize; n];

    let splittable = |s: &[f64], depth: usize| {
        spec.max_depth.is_none_or(|m| depth < m)
            && obj.weight(s) >= spec.min_samples_split as f64
            && obj.can_split(s)
            && d > 0
    };

    let mut frontier: Vec<usize> = if splittable(&root, 0) { vec![0] } else { vec![] };
    let mut depth = 0;
    while !frontier.is_empty() {
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &node) in frontier.iter().enumerate() {
            slot[node] = s;
        }
        let masks: Vec<Option<Vec<bool>>> = frontier
            .iter()
            .map(|_| match (spec.max_features, spec.rng.as_deref_mut()) {
                (Some(k), Some(rng)) if k < d => {
                    let mut m = vec![false; d];
                    for j in sample(rng, d, k.max(1)).into_iter() {
                        m[j] = true;
                    }
                    Some(m)
                }
                _ => None,
            })
            .collect();
        let mut best: Vec<Option<Candidate>> = frontier.iter().map(|_| None).collect();
        let mut acc = vec![0.0; frontier.len() * w];
        let mut right = vec![0.0; w];
        let mut last = vec![f64::NAN; frontier.len()];

        for (f, order) in pre.order.iter().enumerate() {
            let active: Vec<bool> = masks.iter().map(|m| m.as_ref().is_none_or(|m| m[f])).collect();
            if !active.iter().any(|&a| a) {
                continue;
            }
            acc.iter_mut().for_each(|a| *a = 0.0);
            last.iter_mut().for_each(|l| *l = f64::NAN);
            for &i in order {
                let i = i as usize;
                let s = slot[node_of[i]];
                if s == usize::MAX || !active[s] || weight[i] <= 0.0 {
                    continue;
                }
                let v = data.value(i, f);
                let a = &mut acc[s * w..(s + 1) * w];
                if v > last[s] {
                    let parent = &node_stats[frontier[s]];
                    for k in 0..w {
                        right[k] = parent[k] - a[k];
                    }
                    let gain = obj.gain(parent, a, &right);
                    let better = match &best[s] {
                        None => true,
                        Some(b) => gain > b.gain + 1e-12 * b.gain.abs(),
                    };
                    if better {
                        let mid = 0.5 * (last[s] + v);
                        let threshold = if mid < v { mid } else { last[s] };
                        best[s] = Some(Candidate {
                            gain,
                            feature: f,
                            threshold,
                        });
                    }
                }
                for (ak, sk) in a.iter_mut().zip(&stats[i * w..(i + 1) * w]) {
                    *ak += sk;
                }
                last[s] = v;
            }
        }

        // children for accepted splits
        let mut split_children = vec![None; frontier.len()];
        for (s, cand) in best.iter().enumerate() {
            let Some(c) = cand else { continue };
            let accept = match obj {
                Objective::Newton { .. } => c.gain >= 0.0,
                _ => c.gain > -1e-12,
            };
            if !accept {
                continue;
            }
            let p = frontier[s];
            let l = nodes.len();
            nodes.push(Node::leaf(0.0, 0.0, Vec::new()));
            nodes.push(Node::leaf(0.0, 0.0, Vec::new()));
            node_stats.push(vec![0.0; w]);
            node_stats.push(vec![0.0; w]);
            let pn = &mut nodes[p];
            pn.feature = c.feature;
            pn.threshold = c.threshold;
            pn.gain = c.gain;
            pn.left = l;
            pn.right = l + 1;
            split_children[s] = Some(l);
        }
        for i in 0..n {
            let s = slot[node_of[i]];
            if s == usize::MAX {
                continue;
            }
            let Some(l) = split_children[s] else { continue };
            let p = &nodes[node_of[i]];
            let child = if data.value(i, p.feature) <= p.threshold { l } else { l + 1 };
            node_of[i] = child;
            if weight[i] > 0.0 {
                for (c, sk) in node_stats[child].iter_mut().zip(&stats[i * w..(i + 1) * w]) {
                    *c += sk;
                }
            }
        }
        depth += 1;
        let mut next = Vec::new();
        for l in split_children.into_iter().flatten() {
            for c in [l, l + 1] {
                let st = &node_stats[c];
                nodes[c] = Node::leaf(obj.impurity(st), obj.weight(st), obj.value(st));
                if splittable(st, depth) {
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    (
        Tree {
            nodes,
            n_features: d,
        },
        node_of,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    #[serde(default)]
    pub criterion: Criterion,
    /// `None` grows until leaves are pure.
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_min_split")]
    pub min_samples_split: usize,
}

fn default_min_split() -> usize {
    2
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

/// CART classifier; leaf values are class distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub tree: Tree,
    pub n_classes: usize,
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
}

impl TreeModel {
    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        self.tree.value(row).to_vec()
    }
}

pub(crate) fn class_stats(d: &Dataset, weight: &[f64]) -> Vec<f64> {
    let k = d.n_classes();
    let mut s = vec![0.0; d.n_rows() * k];
    for (i, &y) in d.labels().iter().enumerate() {
        s[i * k + y] = weight[i];
    }
    s
}

pub fn train_tree(d: &Dataset, cfg: &TreeConfig) -> Result<TreeModel> {
    if d.n_rows() == 0 {
        return Err(Error::invalid("cannot train a tree on zero rows"));
    }
    let weight = vec![1.0; d.n_rows()];
    let pre = Presorted::new(d);
    let (tree, _) = grow(
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
            min_samples_split: cfg.min_samples_split.max(2),
            max_features: None,
            rng: None,
        },
    );
    Ok(TreeModel {
        tree,
        n_classes: d.n_classes(),
        criterion: cfg.criterion,
        max_depth: cfg.max_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|c| format!("c{c}")).collect()
    }

    #[test]
    fn impurity_examples() {
        for c in [Criterion::Gini, Criterion::Entropy] {
            assert_eq!(impurity(&[5.0, 0.0], c), 0.0);
        }
        assert_eq!(impurity(&[3.0, 3.0], Criterion::Gini), 0.5);
        assert_eq!(impurity(&[3.0, 3.0], Criterion::Entropy), 1.0);
        assert!((impurity(&[2.0, 1.0, 1.0], Criterion::Gini) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn split_gain_examples() {
        let g = Criterion::Gini;
        assert_eq!(split_gain(&[4.0, 4.0], &[4.0, 4.0], &[0.0, 0.0], g).unwrap(), 0.0);
        assert_eq!(split_gain(&[4.0, 4.0], &[4.0, 0.0], &[0.0, 4.0], g).unwrap(), 0.5);
        assert!((split_gain(&[4.0, 4.0], &[3.0, 1.0], &[1.0, 3.0], g).unwrap() - 0.125).abs() < 1e-15);
        assert!(split_gain(&[4.0, 4.0], &[3.0, 1.0], &[1.0, 2.0], g).is_err());
    }

    #[test]
    fn xor_is_learned_at_depth_two() {
        let d = Dataset::new(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
            names(2),
        )
        .unwrap();
        let m = train_tree(
            &d,
            &TreeConfig {
                max_depth: Some(2),
                ..TreeConfig::default()
            },
        )
        .unwrap();
        for (row, &y) in d.rows().zip(d.labels()) {
            assert_eq!(m.proba(row)[y], 1.0);
        }
        // zero-gain root split goes to the lowest feature
        assert_eq!(m.tree.nodes[0].feature, 0);
        assert_eq!(m.tree.nodes[0].threshold, 0.5);
    }

    #[test]
    fn single_class_and_stump() {
        let d = Dataset::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, 1], names(2)).unwrap();
        let m = train_tree(&d, &TreeConfig::default()).unwrap();
        assert_eq!(m.tree.n_nodes(), 1);
        assert_eq!(m.proba(&[9.0]), vec![0.0, 1.0]);

        let d = Dataset::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![0, 1, 1], names(2)).unwrap();
        let stump = train_tree(
            &d,
            &TreeConfig {
                max_depth: Some(0),
                ..TreeConfig::default()
            },
        )
        .unwrap();
        assert_eq!(stump.tree.n_nodes(), 1);
        assert!((stump.proba(&[1.0])[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip_keeps_predictions() {
        let d = Dataset::new(
            (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect(),
            (0..20).map(|i| usize::from(i % 3 == 0)).collect(),
            names(2),
        )
        .unwrap();
        let m = train_tree(&d, &TreeConfig::default()).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"kind\":\"split\""));
        let back: TreeModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
