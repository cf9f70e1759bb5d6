//! Synthetic stochastic-block-model datasets with Gaussian node features.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::gssl::LabelMatrix;
use crate::matrix::DenseMatrix;
use crate::rng;

const MAX_GRAPH_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SbmConfig {
    /// Nodes per class; node ids are assigned block by block.
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Euclidean distance between neighbouring class means; noise has unit variance.
    pub separation: f64,
    /// Fraction of nodes in the (class-stratified) train split.
    pub label_rate: f64,
    pub val_rate: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            block_sizes: vec![100, 100],
            p_in: 0.08,
            p_out: 0.01,
            feature_dim: 2,
            separation: 1.0,
            label_rate: 0.05,
            val_rate: 0.2,
            seed: 0,
        }
    }
}

impl SbmConfig {
    fn validate(&self) -> Result<()> {
        let k = self.block_sizes.len();
        if k < 2 || self.block_sizes.contains(&0) {
            return Err(Error::InvalidArgument("need at least two non-empty blocks".into()));
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return Err(Error::InvalidArgument("edge probabilities must lie in [0, 1]".into()));
        }
        if self.feature_dim == 0 || (self.feature_dim == 1 && k > 2) {
            return Err(Error::InvalidArgument(
                "one feature dimension only separates two classes".into(),
            ));
        }
        if !(self.label_rate > 0.0 && self.val_rate >= 0.0 && self.label_rate + self.val_rate < 1.0) {
            return Err(Error::InvalidArgument("label_rate + val_rate must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn classes(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect()
    }
}

/// Class means on a circle in the first two coordinates, neighbours `separation` apart.
fn class_means(k: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    let radius = separation / (2.0 * (PI / k as f64).sin());
    (0..k)
        .map(|c| {
            let mut m = vec![0.0; dim];
            let angle = 2.0 * PI * c as f64 / k as f64;
            m[0] = radius * angle.cos();
            if dim > 1 {
                m[1] = radius * angle.sin();
            }
            m
        })
        .collect()
}

fn features(cfg: &SbmConfig, classes: &[usize]) -> DenseMatrix {
    let means = class_means(cfg.block_sizes.len(), cfg.feature_dim, cfg.separation);
    let mut r = rng::stream(cfg.seed, "sbm-features", &[]);
    let rows: Vec<Vec<f64>> = classes
        .iter()
        .map(|&c| {
            means[c]
                .iter()
                .map(|m| m + r.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    DenseMatrix::from_rows(&rows).expect("finite features")
}

fn split(cfg: &SbmConfig, classes: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let n = classes.len();
    let k = cfg.block_sizes.len();
    let mut r = rng::stream(cfg.seed, "sbm-split", &[]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let n_train = ((cfg.label_rate * n as f64).round() as usize).max(k);
    let n_val = (cfg.val_rate * n as f64).round() as usize;
    let mut per_class: Vec<std::collections::VecDeque<usize>> = vec![Default::default(); k];
    for &v in &order {
        per_class[classes[v]].push_back(v);
    }
    let mut train = Vec::with_capacity(n_train);
    let mut c = 0;
    while train.len() < n_train {
        if let Some(v) = per_class[c % k].pop_front() {
            train.push(v);
        }
        c += 1;
    }
    let mut rest: Vec<usize> = order.into_iter().filter(|v| !train.contains(v)).collect();
    let test = rest.split_off(n_val.min(rest.len()));
    let mut val = rest;
    train.sort_unstable();
    val.sort_unstable();
    let mut test = test;
    test.sort_unstable();
    (train, val, test)
}

fn dataset(cfg: &SbmConfig, classes: &[usize]) -> Result<LabeledDataset> {
    let labels: Vec<Option<usize>> = classes.iter().map(|&c| Some(c)).collect();
    let y = LabelMatrix::from_labels(&labels, cfg.block_sizes.len())?;
    let (train, val, test) = split(cfg, classes);
    LabeledDataset::new(features(cfg, classes), y, train, val, test)
}

/// Draws an SBM graph, redrawing until it is connected, plus features and a split.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<(Graph, LabeledDataset)> {
    cfg.validate()?;
    let classes = cfg.classes();
    let n = classes.len();
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        let mut r = rng::stream(cfg.seed, "sbm-graph", &[attempt]);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let p = if classes[u] == classes[v] { cfg.p_in } else { cfg.p_out };
                if r.random::<f64>() < p {
                    edges.push(Edge { u, v, w: 1.0 });
                }
            }
        }
        let g = Graph::new(n, false, edges)?;
        if g.is_connected() {
            return Ok((g, dataset(cfg, &classes)?));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no connected graph after {MAX_GRAPH_ATTEMPTS} draws; raise p_in or p_out"
    )))
}

/// A connected block-structured graph with exactly `num_edges` edges: a random
/// spanning tree plus extra edges accepted with probability proportional to `p_in`/`p_out`.
pub fn generate_sbm_with_edges(cfg: &SbmConfig, num_edges: usize) -> Result<(Graph, LabeledDataset)> {
    cfg.validate()?;
    let classes = cfg.classes();
    let n = classes.len();
    if num_edges + 1 < n || num_edges > n * (n - 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "{num_edges} edges cannot form a connected simple graph on {n} nodes"
        )));
    }
    let top = cfg.p_in.max(cfg.p_out);
    if top <= 0.0 {
        return Err(Error::InvalidArgument("p_in or p_out must be positive".into()));
    }
    let mut r = rng::stream(cfg.seed, "sbm-graph", &[]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let mut present = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(num_edges);
    for i in 1..n {
        let v = order[i];
        let same: Vec<usize> = order[..i].iter().copied().filter(|&u| classes[u] == classes[v]).collect();
        let pool = if same.is_empty() || r.random::<f64>() < cfg.p_out / (cfg.p_in + cfg.p_out) {
            &order[..i]
        } else {
            &same[..]
        };
        let u = pool[r.random_range(0..pool.len())];
        present.insert((u.min(v), u.max(v)));
        edges.push(Edge { u: u.min(v), v: u.max(v), w: 1.0 });
    }
    while edges.len() < num_edges {
        let u = r.random_range(0..n);
        let v = r.random_range(0..n);
        if u == v || present.contains(&(u.min(v), u.max(v))) {
            continue;
        }
        let p = if classes[u] == classes[v] { cfg.p_in } else { cfg.p_out };
        if r.random::<f64>() < p / top {
            present.insert((u.min(v), u.max(v)));
            edges.push(Edge { u: u.min(v), v: u.max(v), w: 1.0 });
        }
    }
    let g = Graph::new(n, false, edges)?;
    Ok((g, dataset(cfg, &classes)?))
}
