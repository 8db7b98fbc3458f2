use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{DecisionTree, TreeParams};
use super::{FeatureMatrix, Label};
use crate::error::{Error, Result};
use crate::riskfield::field::par_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, tree: TreeParams::default(), max_features: None, bootstrap: true, seed: 42 }
    }
}

impl ForestParams {
    pub fn features_per_split(&self, d: usize) -> usize {
        self.max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub n_features: usize,
    pub params: ForestParams,
    /// Generator seed of each tree.
    pub seeds: Vec<u64>,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Tree `t` draws its bootstrap sample and feature subsets from a
    /// generator seeded with `seed + t`.
    pub fn fit(data: &FeatureMatrix, params: &ForestParams) -> Result<Self> {
        if params.n_trees == 0 {
            return Err(Error::InvalidParameter("forest needs at least one tree".into()));
        }
        if data.is_empty() {
            return Err(Error::Empty("training rows"));
        }
        let n = data.len();
        let m = params.features_per_split(data.n_features);
        let seeds: Vec<u64> = (0..params.n_trees as u64).map(|t| params.seed.wrapping_add(t)).collect();
        let trees = par_map(&seeds, |&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            DecisionTree::fit_rows(data, rows, &params.tree, Some((&mut rng, m)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_features: data.n_features, params: *params, seeds, trees })
    }

    pub fn votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.predict(x) == Label::Confirmed).count()
    }

    /// Majority vote; ties go to normal.
    pub fn predict(&self, x: &[f64]) -> Label {
        if 2 * self.votes(x) > self.trees.len() {
            Label::Confirmed
        } else {
            Label::Normal
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::confusion;

    fn band_set(n: usize, seed: u64, noise: bool) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = FeatureMatrix::new(3);
        for i in 0..n {
            let x: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let mut positive = x[0] + x[1] > 1.0;
            if noise && rng.gen_bool(0.1) {
                positive = !positive;
            }
            let label = if positive { Label::Confirmed } else { Label::Normal };
            m.push(format!("u{i}"), &x, label, 0.0);
        }
        m
    }

    fn accuracy(predict: impl Fn(&[f64]) -> Label, m: &FeatureMatrix) -> f64 {
        confusion((0..m.len()).map(|i| (predict(m.row(i)), m.labels[i]))).metrics().acc.unwrap()
    }

    #[test]
    fn degenerate_forest_equals_tree() {
        let m = band_set(200, 1, true);
        let tp = TreeParams { max_depth: 6, min_leaf: 3 };
        let params = ForestParams { n_trees: 1, tree: tp, max_features: Some(3), bootstrap: false, seed: 9 };
        let forest = RandomForest::fit(&m, &params).unwrap();
        let tree = DecisionTree::fit(&m, &tp).unwrap();
        assert_eq!(forest.trees[0], tree);
        let probe = band_set(100, 2, false);
        for i in 0..probe.len() {
            assert_eq!(forest.predict(probe.row(i)), tree.predict(probe.row(i)));
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let m = band_set(150, 3, true);
        let p = ForestParams { n_trees: 10, ..Default::default() };
        let a = RandomForest::fit(&m, &p).unwrap();
        assert_eq!(a, RandomForest::fit(&m, &p).unwrap());
        assert_eq!(a.seeds, (42..52).collect::<Vec<_>>());
        let other = RandomForest::fit(&m, &ForestParams { seed: 7, ..p }).unwrap();
        assert_ne!(a.trees, other.trees);
    }

    #[test]
    fn ensemble_not_worse_than_single_tree() {
        let train = band_set(400, 4, true);
        let test = band_set(2000, 5, false);
        let tree = DecisionTree::fit(&train, &TreeParams::default()).unwrap();
        let forest = RandomForest::fit(&train, &ForestParams::default()).unwrap();
        let (ta, fa) = (accuracy(|x| tree.predict(x), &test), accuracy(|x| forest.predict(x), &test));
        assert!(fa >= ta, "forest {fa} < tree {ta}");
    }

    #[test]
    fn default_features_per_split() {
        let p = ForestParams::default();
        assert_eq!(p.features_per_split(8), 3);
        assert_eq!(p.features_per_split(9), 3);
        assert_eq!(p.features_per_split(1), 1);
    }
}
