//! Quantile regression forests.
//!
//! Trees are grown by CART on bootstrap samples. At prediction time each tree
//! contributes uniform weight over the distinct in-bag training points that
//! share the query's leaf; averaging those weights over trees gives a weighted
//! empirical CDF of the training responses.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Dataset;
use crate::local::{robust_spread, LocalDistribution, QuantileRule, WeightedSample};
use crate::rng::{RandomSource, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    /// Fixed response bandwidth for densities; otherwise a weighted rule of thumb per point.
    pub response_bandwidth: Option<f64>,
    pub quantile_rule: QuantileRule,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            min_leaf: 5,
            mtry: None,
            bootstrap: true,
            response_bandwidth: None,
            quantile_rule: QuantileRule::Step,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or(p.div_ceil(3)).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf(usize),
}

#[derive(Debug, Clone, PartialEq)]
struct Leaf {
    /// Distinct in-bag training indices, ascending.
    members: Vec<u32>,
    /// In-bag draws including bootstrap repeats.
    draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
}

impl Tree {
    fn leaf_for(&self, x: &[f64]) -> &Leaf {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
                Node::Leaf(k) => return &self.leaves[k],
            }
        }
    }
}

struct Grower<'a> {
    train: &'a Dataset,
    min_leaf: usize,
    mtry: usize,
    rng: crate::rng::Rng,
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn grow(&mut self, sample: Vec<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(usize::MAX));
        let split = if sample.len() >= 2 * self.min_leaf { self.best_split(&sample) } else { None };
        match split {
            Some(best) => {
                let x = self.train.x();
                let (l, r): (Vec<usize>, Vec<usize>) =
                    sample.into_iter().partition(|&i| x.get(i, best.feature) <= best.threshold);
                let left = self.grow(l);
                let right = self.grow(r);
                self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
            }
            None => {
                let draws = sample.len();
                let mut members: Vec<u32> = sample.into_iter().map(|i| i as u32).collect();
                members.sort_unstable();
                members.dedup();
                self.nodes[id] = Node::Leaf(self.leaves.len());
                self.leaves.push(Leaf { members, draws });
            }
        }
        id
    }

    fn best_split(&mut self, sample: &[usize]) -> Option<BestSplit> {
        let p = self.train.dim();
        let mut features: Vec<usize> = (0..p).collect();
        if self.mtry < p {
            features.partial_shuffle(&mut self.rng, self.mtry);
            features.truncate(self.mtry);
        }
        features.sort_unstable();

        let y = self.train.y();
        let x = self.train.x();
        let n = sample.len();
        let mean = sample.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
        let mut best: Option<BestSplit> = None;
        let mut order = sample.to_vec();
        for &j in &features {
            order.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)));
            let total: f64 = order.iter().map(|&i| y[i] - mean).sum();
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += y[order[k]] - mean;
                let n_left = k + 1;
                if n_left < self.min_leaf {
                    continue;
                }
                if n - n_left < self.min_leaf {
                    break;
                }
                let (a, b) = (x.get(order[k], j), x.get(order[k + 1], j));
                if a == b {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64
                    - total * total / n as f64;
                if gain > 1e-12 * (1.0 + mean.abs()) && best.as_ref().map_or(true, |b| gain > b.gain) {
                    best = Some(BestSplit { feature: j, threshold: a + 0.5 * (b - a), gain });
                }
            }
        }
        best
    }
}

/// A fitted quantile regression forest.
#[derive(Debug, Clone)]
pub struct ForestModel {
    trees: Vec<Tree>,
    train: Dataset,
    order: Vec<usize>,
    config: ForestConfig,
    fallback_h_y: f64,
}

/// Grows `config.n_trees` trees; tree `t` draws from `rng.derive(t)`.
pub fn fit_forest(train: &Dataset, config: &ForestConfig, rng: RandomSource) -> Result<ForestModel> {
    let n = train.len();
    if config.min_leaf == 0 || config.n_trees == 0 {
        return Err(Error::InvalidParameter("forest needs n_trees >= 1 and min_leaf >= 1"));
    }
    if n < config.min_leaf {
        return Err(Error::TooFewSamples { needed: config.min_leaf, got: n });
    }
    let mtry = config.resolved_mtry(train.dim());
    let trees = (0..config.n_trees)
        .map(|t| {
            let mut r = rng.derive(t as u64).stream(Stream::Model);
            let sample: Vec<usize> =
                if config.bootstrap { (0..n).map(|_| r.random_range(0..n)).collect() } else { (0..n).collect() };
            let mut g = Grower { train, min_leaf: config.min_leaf, mtry, rng: r, nodes: Vec::new(), leaves: Vec::new() };
            g.grow(sample);
            Tree { nodes: g.nodes, leaves: g.leaves }
        })
        .collect();
    Ok(ForestModel::assemble(train, trees, config.clone()))
}

impl ForestModel {
    fn assemble(train: &Dataset, trees: Vec<Tree>, config: ForestConfig) -> Self {
        let y = train.y();
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        let s = robust_spread(y);
        let fallback_h_y = if s > 0.0 { 1.06 * s * (y.len() as f64).powf(-0.2) } else { 1e-3 };
        ForestModel { trees, train: train.clone(), order, config, fallback_h_y }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    /// In-bag draw counts of every leaf of every tree.
    pub fn leaf_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.trees.iter().flat_map(|t| t.leaves.iter().map(|l| l.draws))
    }

    /// `w_i(x) = (1/T) sum_t 1{i in A_t(x)} / |A_t(x)|`.
    pub fn forest_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.train.dim() {
            return Err(Error::SizeMismatch { expected: self.train.dim(), got: x.len() });
        }
        let mut w = vec![0.0; self.train.len()];
        let t = self.trees.len() as f64;
        for tree in &self.trees {
            let leaf = tree.leaf_for(x);
            let share = 1.0 / (t * leaf.members.len() as f64);
            for &i in &leaf.members {
                w[i as usize] += share;
            }
        }
        Ok(w)
    }

    pub fn weighted_sample(&self, x: &[f64]) -> Result<WeightedSample> {
        let w = self.forest_weights(x)?;
        let y = self.train.y();
        WeightedSample::from_sorted(self.order.iter().map(|&i| (y[i], w[i])))
    }

    pub fn local(&self, x: &[f64]) -> Result<LocalDistribution> {
        let sample = self.weighted_sample(x)?;
        let h_y = self.config.response_bandwidth.unwrap_or_else(|| sample.rule_of_thumb_bandwidth(self.fallback_h_y));
        Ok(LocalDistribution::Empirical { sample, h_y, rule: self.config.quantile_rule })
    }

    pub fn forest_cdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        Ok(self.weighted_sample(x)?.cdf(y))
    }

    pub fn forest_quantile(&self, tau: f64, x: &[f64]) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidLevel(tau));
        }
        Ok(self.weighted_sample(x)?.quantile_with(tau, self.config.quantile_rule))
    }

    pub fn forest_density(&self, y: f64, x: &[f64], h_y: f64) -> Result<f64> {
        if !(h_y > 0.0) {
            return Err(Error::InvalidParameter("response bandwidth must be positive"));
        }
        Ok(self.weighted_sample(x)?.density(y, h_y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Fidelity, Matrix};
    use crate::dist::normal_pdf;

    fn scalar(x: Vec<f64>, y: Vec<f64>) -> Dataset {
        Dataset::from_scalar(x, y, Fidelity::High).unwrap()
    }

    fn leaf(members: &[u32]) -> Leaf {
        Leaf { members: members.to_vec(), draws: members.len() }
    }

    fn hand_forest(train: &Dataset, trees: Vec<Tree>) -> ForestModel {
        ForestModel::assemble(train, trees, ForestConfig::default())
    }

    #[test]
    fn single_leaf_weights() {
        let d = scalar((0..6).map(f64::from).collect(), (0..6).map(f64::from).collect());
        let tree = Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[2, 5])] };
        let w = hand_forest(&d, vec![tree]).forest_weights(&[0.0]).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn two_tree_average() {
        let d = scalar((0..4).map(f64::from).collect(), vec![1.0, 2.0, 3.0, 4.0]);
        let t1 = Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[0, 1])] };
        let t2 = Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[2, 3])] };
        let w = hand_forest(&d, vec![t1, t2]).forest_weights(&[0.0]).unwrap();
        assert_eq!(w, vec![0.25, 0.25, 0.25, 0.25]);
        let t1 = Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[0, 1])] };
        let t2 = Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[1, 2, 3])] };
        let w = hand_forest(&d, vec![t1, t2]).forest_weights(&[0.0]).unwrap();
        assert_eq!(w[0], 0.25);
        assert!((w[1] - (0.25 + 1.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn depth_one_tree_on_eight_points() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let y = vec![0.0, 0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 10.0];
        let d = scalar(x, y);
        let cfg = ForestConfig { n_trees: 1, min_leaf: 2, bootstrap: false, ..ForestConfig::default() };
        let f = fit_forest(&d, &cfg, RandomSource::new(0)).unwrap();
        assert_eq!(
            f.trees[0].nodes[0],
            Node::Split { feature: 0, threshold: 4.5, left: 1, right: 2 }
        );
        assert_eq!(f.forest_weights(&[2.0]).unwrap(), vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.forest_weights(&[7.0]).unwrap(), vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn depth_two_tree_on_eight_points() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let y = vec![0.0, 0.0, 5.0, 5.0, 20.0, 20.0, 30.0, 30.0];
        let d = scalar(x, y);
        let cfg = ForestConfig { n_trees: 1, min_leaf: 2, bootstrap: false, ..ForestConfig::default() };
        let f = fit_forest(&d, &cfg, RandomSource::new(0)).unwrap();
        let expect = |members: &[usize]| {
            let mut w = vec![0.0; 8];
            for &i in members {
                w[i] = 0.5;
            }
            w
        };
        assert_eq!(f.forest_weights(&[1.0]).unwrap(), expect(&[0, 1]));
        assert_eq!(f.forest_weights(&[3.2]).unwrap(), expect(&[2, 3]));
        assert_eq!(f.forest_weights(&[5.0]).unwrap(), expect(&[4, 5]));
        assert_eq!(f.forest_weights(&[100.0]).unwrap(), expect(&[6, 7]));
    }

    #[test]
    fn min_leaf_sized_sample_is_one_leaf() {
        let d = scalar(vec![0.1, 0.5, 0.2, 0.9, 0.4], vec![3.0, 1.0, 4.0, 1.5, 9.0]);
        let cfg = ForestConfig { n_trees: 1, ..ForestConfig::default() };
        let f = fit_forest(&d, &cfg, RandomSource::new(3)).unwrap();
        assert_eq!(f.trees[0].leaves.len(), 1);
        let w = f.forest_weights(&[0.3]).unwrap();
        let members = &f.trees[0].leaves[0].members;
        for (i, wi) in w.iter().enumerate() {
            let expected = if members.contains(&(i as u32)) { 1.0 / members.len() as f64 } else { 0.0 };
            assert_eq!(*wi, expected);
        }
        assert_eq!(fit_forest(&d, &ForestConfig { min_leaf: 6, ..cfg }, RandomSource::new(3)).err(),
            Some(Error::TooFewSamples { needed: 6, got: 5 }));
    }

    #[test]
    fn constant_response_gives_constant_step() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let d = scalar(x, vec![2.5; 40]);
        let f = fit_forest(&d, &ForestConfig { n_trees: 20, ..ForestConfig::default() }, RandomSource::new(1)).unwrap();
        assert!(f.trees.iter().all(|t| t.leaves.len() == 1));
        for x in [0.0, 0.5, 1.0] {
            assert_eq!(f.forest_cdf(2.49, &[x]).unwrap(), 0.0);
            assert_eq!(f.forest_cdf(2.5, &[x]).unwrap(), 1.0);
            assert_eq!(f.forest_quantile(0.3, &[x]).unwrap(), 2.5);
        }
    }

    fn noisy(n: usize, seed: u64) -> Dataset {
        let mut r = RandomSource::new(seed).rng();
        let x: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let y = x.iter().map(|v| (6.0 * v).sin() + 0.3 * r.random::<f64>()).collect();
        scalar(x, y)
    }

    #[test]
    fn fitting_is_deterministic_and_leaves_respect_min_leaf() {
        let d = noisy(200, 9);
        let cfg = ForestConfig { n_trees: 30, ..ForestConfig::default() };
        let a = fit_forest(&d, &cfg, RandomSource::new(42)).unwrap();
        let b = fit_forest(&d, &cfg, RandomSource::new(42)).unwrap();
        for k in 0..10 {
            let x = [k as f64 / 9.0];
            assert_eq!(a.forest_weights(&x).unwrap(), b.forest_weights(&x).unwrap());
        }
        assert!(a.leaf_sizes().all(|s| s >= cfg.min_leaf));
        let c = fit_forest(&d, &cfg, RandomSource::new(43)).unwrap();
        assert_ne!(a.forest_weights(&[0.5]).unwrap(), c.forest_weights(&[0.5]).unwrap());
    }

    #[test]
    fn weights_sum_to_one_at_random_probes() {
        let d = noisy(150, 2);
        let f = fit_forest(&d, &ForestConfig { n_trees: 50, ..ForestConfig::default() }, RandomSource::new(5)).unwrap();
        let mut r = RandomSource::new(77).rng();
        for _ in 0..100 {
            let x = [r.random_range(-0.5..1.5)];
            let w = f.forest_weights(&x).unwrap();
            assert!(w.iter().all(|&v| v >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_and_quantile_match_sort_and_accumulate() {
        let ys = vec![4.0, -1.0, 2.0, 7.0, 0.5, 3.0, 2.0, 6.0];
        let d = scalar((0..8).map(f64::from).collect(), ys.clone());
        let trees = vec![
            Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[0, 1, 2])] },
            Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[2, 3, 4, 5, 6])] },
            Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[6, 7])] },
        ];
        let f = hand_forest(&d, trees);
        let w = f.forest_weights(&[0.0]).unwrap();
        let mut pairs: Vec<(f64, f64)> = ys.iter().copied().zip(w.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for y in [-2.0, -1.0, 0.0, 2.0, 2.5, 6.5, 7.0] {
            let brute: f64 = pairs.iter().filter(|p| p.0 <= y).map(|p| p.1).sum();
            assert!((f.forest_cdf(y, &[0.0]).unwrap() - brute).abs() < 1e-12);
        }
        for tau in [0.05, 0.2, 0.5, 0.77, 0.95] {
            let mut acc = 0.0;
            let brute = pairs
                .iter()
                .find(|p| {
                    acc += p.1;
                    acc >= tau - 1e-12
                })
                .unwrap()
                .0;
            assert_eq!(f.forest_quantile(tau, &[0.0]).unwrap(), brute);
        }
        assert_eq!(f.forest_cdf(7.0, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn uniform_median_of_five() {
        let d = scalar(vec![0.0; 5], vec![5.0, 3.0, 1.0, 2.0, 4.0]);
        let tree = Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[0, 1, 2, 3, 4])] };
        assert_eq!(hand_forest(&d, vec![tree]).forest_quantile(0.5, &[0.0]).unwrap(), 3.0);
    }

    #[test]
    fn density_examples() {
        let d = scalar(vec![0.0, 0.0], vec![-1.0, 1.0]);
        let tree = Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[0, 1])] };
        let f = hand_forest(&d, vec![tree]);
        let h = 0.7;
        let v = f.forest_density(0.0, &[0.0], h).unwrap();
        assert!((v - 2.0 * 0.5 * normal_pdf(1.0 / h) / h).abs() < 1e-15);

        let tree = Tree { nodes: vec![Node::Leaf(0)], leaves: vec![leaf(&[1])] };
        let f = hand_forest(&d, vec![tree]);
        assert!((f.forest_density(1.3, &[0.0], h).unwrap() - normal_pdf(0.3 / h) / h).abs() < 1e-15);

        let d = noisy(100, 4);
        let f = fit_forest(&d, &ForestConfig { n_trees: 20, ..ForestConfig::default() }, RandomSource::new(0)).unwrap();
        let step = 0.001;
        let total: f64 = (0..12_000).map(|i| f.forest_density(-5.0 + (i as f64 + 0.5) * step, &[0.4], 0.2).unwrap() * step).sum();
        assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mtry_default_and_two_dimensions() {
        assert_eq!(ForestConfig::default().resolved_mtry(1), 1);
        assert_eq!(ForestConfig::default().resolved_mtry(2), 1);
        assert_eq!(ForestConfig::default().resolved_mtry(7), 3);
        // the response depends only on the second feature
        let rows: Vec<Vec<f64>> = (0..16).map(|i| vec![(i % 4) as f64, (i / 4) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 10.0 * r[1]).collect();
        let d = Dataset::new(Matrix::from_rows(&rows).unwrap(), y, Fidelity::High).unwrap();
        let cfg = ForestConfig { n_trees: 1, min_leaf: 4, mtry: Some(2), bootstrap: false, ..ForestConfig::default() };
        let f = fit_forest(&d, &cfg, RandomSource::new(0)).unwrap();
        let w = f.forest_weights(&[0.0, 3.0]).unwrap();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(w[i], if r[1] == 3.0 { 0.25 } else { 0.0 });
        }
    }
}
