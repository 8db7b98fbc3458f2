use rand::seq::index;
use rand::Rng;

use super::{FeatureMatrix, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: 8, min_leaf: 5 }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::InvalidParameter("min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// A node in a flattened tree. Samples with `x[feature] <= threshold` go
/// left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { counts: [usize; 2] },
}

impl Node {
    pub fn leaf_class(counts: [usize; 2]) -> Label {
        if counts[1] > counts[0] {
            Label::Confirmed
        } else {
            Label::Normal
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

fn gini(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c[0] as f64 / n, c[1] as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

/// Size-weighted Gini impurity of a candidate split.
pub(crate) fn split_impurity(left: [usize; 2], right: [usize; 2]) -> f64 {
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    (nl * gini(left) + nr * gini(right)) / (nl + nr)
}

fn counts_of(data: &FeatureMatrix, rows: &[usize]) -> [usize; 2] {
    let mut c = [0, 0];
    for &i in rows {
        c[(data.labels[i] == Label::Confirmed) as usize] += 1;
    }
    c
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// A threshold `t` with `a <= t < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

fn best_split(data: &FeatureMatrix, rows: &mut [usize], features: &[usize], min_leaf: usize) -> Option<BestSplit> {
    let total = counts_of(data, rows);
    let n = rows.len();
    let mut best: Option<BestSplit> = None;
    for &f in features {
        let x = |i: usize| data.values[i * data.n_features + f];
        rows.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));
        let mut left = [0usize; 2];
        for k in 0..n - 1 {
            left[(data.labels[rows[k]] == Label::Confirmed) as usize] += 1;
            let nl = k + 1;
            if nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let (a, b) = (x(rows[k]), x(rows[k + 1]));
            if a >= b {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let imp = split_impurity(left, right);
            // Strict improvement keeps the first feature and lowest threshold.
            if best.as_ref().is_none_or(|b| imp < b.impurity) {
                best = Some(BestSplit { feature: f, threshold: midpoint(a, b), impurity: imp });
            }
        }
    }
    best
}

impl DecisionTree {
    /// Fits on all rows of `data` using every feature.
    pub fn fit(data: &FeatureMatrix, params: &TreeParams) -> Result<Self> {
        let rows: Vec<usize> = (0..data.len()).collect();
        Self::fit_rows(data, rows, params, None::<(&mut rand_chacha::ChaCha8Rng, usize)>)
    }

    /// Fits on the given rows (duplicates allowed). With `sampler`, each
    /// split considers a random subset of that many features.
    pub fn fit_rows<R: Rng>(
        data: &FeatureMatrix,
        rows: Vec<usize>,
        params: &TreeParams,
        mut sampler: Option<(&mut R, usize)>,
    ) -> Result<Self> {
        params.validate()?;
        if rows.is_empty() {
            return Err(Error::Empty("training rows"));
        }
        let d = data.n_features;
        let mut tree = DecisionTree { n_features: d, nodes: Vec::new() };
        // (rows, depth, slot to patch in the parent)
        let mut stack = vec![(rows, 0usize, None::<(usize, bool)>)];
        while let Some((mut rows, depth, parent)) = stack.pop() {
            let id = tree.nodes.len();
            if let Some((p, is_left)) = parent {
                if let Node::Split { left, right, .. } = &mut tree.nodes[p] {
                    *(if is_left { left } else { right }) = id;
                }
            }
            let counts = counts_of(data, &rows);
            let pure = counts[0] == 0 || counts[1] == 0;
            let mut split = None;
            if !pure && depth < params.max_depth && rows.len() >= 2 * params.min_leaf && d > 0 {
                let features: Vec<usize> = match sampler.as_mut() {
                    Some((rng, m)) if *m < d => {
                        let mut f = index::sample(*rng, d, *m).into_vec();
                        f.sort_unstable();
                        f
                    }
                    _ => (0..d).collect(),
                };
                split = best_split(data, &mut rows, &features, params.min_leaf)
                    .filter(|b| b.impurity < gini(counts) - 1e-12);
            }
            match split {
                None => tree.nodes.push(Node::Leaf { counts }),
                Some(b) => {
                    tree.nodes.push(Node::Split { feature: b.feature, threshold: b.threshold, left: 0, right: 0 });
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        rows.iter().partition(|&&i| data.values[i * d + b.feature] <= b.threshold);
                    // Right first so the left child is numbered next.
                    stack.push((r, depth + 1, Some((id, false))));
                    stack.push((l, depth + 1, Some((id, true))));
                }
            }
        }
        Ok(tree)
    }

    pub fn leaf_counts(&self, x: &[f64]) -> [usize; 2] {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        Node::leaf_class(self.leaf_counts(x))
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    /// Checks child links and feature indices.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::ModelFormat { line: 0, reason });
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Split { feature, threshold, left, right } = *n {
                if feature >= self.n_features {
                    return bad(format!("node {i} splits on feature {feature} of {}", self.n_features));
                }
                if !threshold.is_finite() {
                    return bad(format!("node {i} has a non-finite threshold"));
                }
                if left <= i || right <= i || left >= self.nodes.len() || right >= self.nodes.len() {
                    return bad(format!("node {i} has invalid children {left}, {right}"));
                }
            }
        }
        Ok(())
    }
}
