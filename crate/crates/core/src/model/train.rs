use std::fmt::Write as _;

use rayon::prelude::*;

use super::{
    adam_step, backward, forward, loss, AdamConfig, DropoutMasks, LfgcnModel, ModelConfig, Propagation,
};
use crate::dataset::{self, LabeledDataset};
use crate::dropedge::{edge_betweenness, pdropedge_sample, DropConfig, EdgeBetweennessTable};
use crate::error::{Error, Result};
use crate::gssl::{classify_from_scores, LabelMatrix};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::rng;
use crate::spectral::FractionalOperatorSet;

/// Attempts per slot before a disconnecting edge sample is reported as an error.
const MAX_DROP_ATTEMPTS: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy of the training forward pass (dropout and edge dropping active).
    pub train_acc: f64,
    /// `None` when the dataset has no labeled validation nodes.
    pub val_acc: Option<f64>,
    /// Edges removed summed over all branch and output slots.
    pub removed_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_acc,removed_edges\n");
        for r in &self.records {
            let val = r.val_acc.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch, r.train_loss, r.train_acc, val, r.removed_edges
            );
        }
        out
    }
}

/// Edge-dropping state shared by all epochs of one run.
struct Dropper<'a> {
    graph: &'a Graph,
    table: EdgeBetweennessTable,
    cfg: DropConfig,
    components: usize,
}

impl Dropper<'_> {
    /// Samples one slot's graph and returns its propagation operator (`None` if nothing
    /// was removed) and the number of removed edges.
    fn slot(&self, config: &ModelConfig, epoch: usize, slot: usize) -> Result<(Option<DenseMatrix>, usize)> {
        for attempt in 0..MAX_DROP_ATTEMPTS {
            let mut r = rng::stream(
                config.seed,
                "dropedge",
                &[self.cfg.seed, epoch as u64, slot as u64, attempt],
            );
            let sample = pdropedge_sample(self.graph, &self.table, &self.cfg, &mut r)?;
            if sample.removed.is_empty() {
                return Ok((None, 0));
            }
            if sample.graph.component_count() > self.components {
                continue;
            }
            let ops = FractionalOperatorSet::from_graph(&sample.graph, config.gamma, config.sigma, config.laplacian)?;
            return Ok((Some(ops.l_tilde), sample.removed.len()));
        }
        Err(Error::DropEdgeDisconnected {
            attempts: MAX_DROP_ATTEMPTS as usize,
        })
    }
}

fn check_inputs(ds: &LabeledDataset, graph: &Graph) -> Result<()> {
    ds.validate_for_training()?;
    if graph.num_nodes() != ds.num_nodes() {
        return Err(Error::InvalidDataset(format!(
            "graph has {} nodes, dataset has {}",
            graph.num_nodes(),
            ds.num_nodes()
        )));
    }
    Ok(())
}

fn labeled(mask: &[usize], y: &LabelMatrix) -> Vec<usize> {
    mask.iter().copied().filter(|&v| y.label(v).is_some()).collect()
}

/// Full-batch training with best-validation model selection (ties go to the earliest epoch).
pub fn train(ds: &LabeledDataset, graph: &Graph, config: &ModelConfig) -> Result<(LfgcnModel, TrainHistory)> {
    config.validate()?;
    check_inputs(ds, graph)?;
    let full = FractionalOperatorSet::from_graph(graph, config.gamma, config.sigma, config.laplacian)?;
    let full_op = &full.l_tilde;
    let nb = config.effective_branches();
    let order = config.order();
    let dropper = config.active_drop().map(|cfg| Dropper {
        graph,
        table: edge_betweenness(graph),
        cfg: *cfg,
        components: graph.to_undirected().component_count(),
    });

    let mut model = LfgcnModel::init(config, ds.num_features(), ds.num_classes())?;
    let val = labeled(&ds.val, &ds.labels);
    let mut best: Option<(f64, usize, super::Params)> = None;
    let mut history = TrainHistory::default();
    // Slot b < nb is branch b, slot nb is the output layer.
    let mut slots: Vec<Option<DenseMatrix>> = vec![None; nb + 1];
    let mut removed = 0usize;
    let adam_cfg = AdamConfig::with_lr(config.learning_rate);

    for epoch in 0..config.epochs {
        if let Some(d) = &dropper {
            if epoch % config.redecompose_every == 0 {
                let sampled: Vec<(Option<DenseMatrix>, usize)> = (0..=nb)
                    .into_par_iter()
                    .map(|slot| d.slot(config, epoch, slot))
                    .collect::<Result<_>>()?;
                removed = sampled.iter().map(|s| s.1).sum();
                slots = sampled.into_iter().map(|s| s.0).collect();
            }
        }
        let prop = Propagation {
            alpha: config.alpha,
            order,
            branches: slots[..nb].iter().map(|s| s.as_ref().unwrap_or(full_op)).collect(),
            output: slots[nb].as_ref().unwrap_or(full_op),
        };
        let mut r = rng::stream(config.seed, "dropout", &[epoch as u64]);
        let masks = DropoutMasks::sample(
            &mut r,
            config.dropout_rate,
            nb,
            ds.num_nodes(),
            ds.num_features(),
            config.hidden_dim,
        );
        let (probs, cache) = forward(&model.params, config, &ds.features, &prop, Some(&masks))?;
        let train_loss = loss(&probs, &ds.labels, &ds.train, config.l2_coeff, &model.params)?;
        let train_acc = dataset::accuracy(&classify_from_scores(&probs), &ds.labels, &ds.train)?;
        let grads = backward(&model.params, &cache, &prop, &ds.labels, &ds.train, config.l2_coeff)?;
        adam_step(&mut model, &grads, &adam_cfg)?;

        let val_acc = if val.is_empty() {
            None
        } else {
            let shared = Propagation::shared(config.alpha, order, full_op, nb);
            let (p, _) = forward(&model.params, config, &ds.features, &shared, None)?;
            Some(dataset::accuracy(&classify_from_scores(&p), &ds.labels, &val)?)
        };
        let score = val_acc.unwrap_or(f64::NEG_INFINITY);
        let improved = match &best {
            None => true,
            Some((b, _, _)) => val_acc.is_some() && score > *b,
        };
        if improved || val_acc.is_none() {
            best = Some((score, epoch, model.params.clone()));
        }
        history.records.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_acc,
            removed_edges: removed,
        });
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    model.params = params;
    history.best_epoch = best_epoch;
    Ok((model, history))
}

/// Class probabilities on the full graph with dropout off.
pub fn predict(model: &LfgcnModel, config: &ModelConfig, graph: &Graph, features: &DenseMatrix) -> Result<DenseMatrix> {
    if graph.num_nodes() != features.rows() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, features have {} rows",
            graph.num_nodes(),
            features.rows()
        )));
    }
    let ops = FractionalOperatorSet::from_graph(graph, config.gamma, config.sigma, config.laplacian)?;
    let prop = Propagation::shared(config.alpha, config.order(), &ops.l_tilde, model.num_branches());
    Ok(forward(&model.params, config, features, &prop, None)?.0)
}

/// Accuracy of `probs` on the labeled nodes of `mask`.
pub fn accuracy_on(probs: &DenseMatrix, labels: &LabelMatrix, mask: &[usize]) -> Result<f64> {
    dataset::accuracy(&classify_from_scores(probs), labels, mask)
}

/// Test accuracy of a trained model.
pub fn evaluate(model: &LfgcnModel, config: &ModelConfig, graph: &Graph, ds: &LabeledDataset) -> Result<f64> {
    let probs = predict(model, config, graph, &ds.features)?;
    accuracy_on(&probs, &ds.labels, &ds.test)
}
