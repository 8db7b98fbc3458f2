use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cohort::{stratified_split, FeatureMatrix};
use super::ecdf::EmpiricalCdf;
use super::forest::{ForestParams, RandomForest};
use super::metrics::{confusion, ConfusionCounts, Metrics};
use super::tree::{DecisionTree, TreeParams};
use super::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Stat,
    Tree,
    Forest,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Stat, Method::Tree, Method::Forest];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Stat => "stat",
            Method::Tree => "tree",
            Method::Forest => "forest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub train_fraction: f64,
    pub q: f64,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub seed: u64,
    /// Independent resamples per rate; counts are pooled.
    pub repeats: usize,
    /// Smallest class size accepted after resampling.
    pub min_class: usize,
    pub methods: Vec<Method>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            q: 0.95,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            seed: 42,
            repeats: 1,
            min_class: 5,
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rate: f64,
    pub method: Method,
    pub n_confirmed: usize,
    pub n_normal: usize,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    pub wall_s: f64,
}

/// Picks rows so that confirmed users make up `rate` of the result. Normal
/// users are dropped first; confirmed users only when normals run out.
/// Rows come from seeded permutations of each class, so smaller draws are
/// prefixes of larger ones.
pub fn resample_to_rate(pool: &FeatureMatrix, rate: f64, min_class: usize, seed: u64) -> Result<Vec<usize>> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidParameter(format!("infection rate {rate} outside (0, 1)")));
    }
    let [mut neg, mut pos] = pool.indices_by_label();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    neg.shuffle(&mut rng);
    pos.shuffle(&mut rng);
    let (p, n) = (pos.len() as f64, neg.len() as f64);
    let (mut n_pos, mut n_neg) = (pos.len(), (p * (1.0 - rate) / rate).round() as usize);
    if n_neg > neg.len() {
        n_neg = neg.len();
        n_pos = ((n * rate / (1.0 - rate)).round() as usize).min(pos.len());
    }
    if n_pos < min_class.max(1) || n_neg < min_class.max(1) {
        return Err(Error::RateUnattainable {
            rate,
            reason: format!("{} confirmed and {} normal rows give {n_pos} / {n_neg}", pos.len(), neg.len()),
        });
    }
    let mut rows: Vec<usize> = pos[..n_pos].iter().chain(&neg[..n_neg]).copied().collect();
    rows.sort_unstable();
    Ok(rows)
}

/// Trains `method` on `train` and counts its calls on `test`.
pub fn fit_and_test(
    method: Method,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    cfg: &SweepConfig,
) -> Result<ConfusionCounts> {
    let truth = test.labels.iter().copied();
    Ok(match method {
        Method::Stat => {
            let normals: Vec<f64> = (0..train.len())
                .filter(|&i| train.labels[i] == Label::Normal)
                .map(|i| train.window_scores[i])
                .collect();
            let thr = EmpiricalCdf::fit(&normals)?.critical_value(cfg.q)?;
            let pred = test.window_scores.iter().map(|&s| if s > thr { Label::Confirmed } else { Label::Normal });
            confusion(pred.zip(truth))
        }
        Method::Tree => {
            let t = DecisionTree::fit(train, &cfg.tree)?;
            confusion((0..test.len()).map(|i| t.predict(test.row(i))).zip(truth))
        }
        Method::Forest => {
            let f = RandomForest::fit(train, &ForestParams { tree: cfg.tree, ..cfg.forest })?;
            confusion((0..test.len()).map(|i| f.predict(test.row(i))).zip(truth))
        }
    })
}

fn add(a: &mut ConfusionCounts, b: ConfusionCounts) {
    a.tp += b.tp;
    a.fp += b.fp;
    a.tn += b.tn;
    a.fn_ += b.fn_;
}

/// Accuracy table over infection rates: for each rate, resample the pool,
/// split, train and evaluate every configured method.
pub fn evaluate_sweep(pool: &FeatureMatrix, rates: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut out = Vec::new();
    for &rate in rates {
        let mut acc: Vec<(ConfusionCounts, f64)> = vec![(ConfusionCounts::default(), 0.0); cfg.methods.len()];
        let mut sizes = (0, 0);
        for r in 0..cfg.repeats.max(1) as u64 {
            let seed = cfg.seed.wrapping_add(r);
            let sample = pool.subset(&resample_to_rate(pool, rate, cfg.min_class, seed)?);
            let [neg, pos] = sample.indices_by_label();
            sizes = (pos.len(), neg.len());
            let (train, test) = stratified_split(&sample.labels, cfg.train_fraction, seed)?;
            let (train, test) = (sample.subset(&train), sample.subset(&test));
            for (slot, &m) in acc.iter_mut().zip(&cfg.methods) {
                let t0 = Instant::now();
                add(&mut slot.0, fit_and_test(m, &train, &test, cfg)?);
                slot.1 += t0.elapsed().as_secs_f64();
            }
        }
        for ((counts, wall_s), &method) in acc.into_iter().zip(&cfg.methods) {
            log::info!("rate {rate}: {} acc {:?}", method.as_str(), counts.metrics().acc);
            out.push(SweepRow {
                rate,
                method,
                n_confirmed: sizes.0,
                n_normal: sizes.1,
                counts,
                metrics: counts.metrics(),
                wall_s,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn pool(n_pos: usize, n_neg: usize) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = FeatureMatrix::new(2);
        for i in 0..n_pos + n_neg {
            let pos = i < n_pos;
            let shift = if pos { 2.0 } else { 0.0 };
            let x = [rng.gen::<f64>() + shift, rng.gen::<f64>()];
            m.push(format!("u{i:05}"), &x, if pos { Label::Confirmed } else { Label::Normal }, x[0]);
        }
        m
    }

    #[test]
    fn resampling_hits_rate() {
        let p = pool(100, 900);
        let rows = resample_to_rate(&p, 0.5, 5, 1).unwrap();
        assert_eq!(rows.len(), 200);
        let rows = resample_to_rate(&p, 0.01, 5, 1).unwrap();
        let pos = rows.iter().filter(|&&i| p.labels[i] == Label::Confirmed).count();
        assert_eq!((pos, rows.len() - pos), (9, 900));
        assert!(matches!(resample_to_rate(&pool(3, 10), 0.5, 5, 1), Err(Error::RateUnattainable { .. })));
        assert!(resample_to_rate(&p, 1.0, 5, 1).is_err());
    }

    #[test]
    fn smaller_draws_nest() {
        let p = pool(100, 900);
        let small = resample_to_rate(&p, 0.5, 5, 3).unwrap();
        let large = resample_to_rate(&p, 0.2, 5, 3).unwrap();
        assert!(small.iter().all(|i| large.contains(i)));
    }

    #[test]
    fn separable_pool_is_detected() {
        let cfg = SweepConfig { forest: ForestParams { n_trees: 15, ..Default::default() }, ..Default::default() };
        let rows = evaluate_sweep(&pool(100, 900), &[0.1, 0.5], &cfg).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert!(r.metrics.acc.unwrap() > 0.9, "{r:?}");
        }
        let again = evaluate_sweep(&pool(100, 900), &[0.1, 0.5], &cfg).unwrap();
        let key = |r: &SweepRow| (r.rate.to_bits(), r.method, r.counts);
        assert_eq!(rows.iter().map(key).collect::<Vec<_>>(), again.iter().map(key).collect::<Vec<_>>());
    }
}
