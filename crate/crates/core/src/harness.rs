//! Repeated runs, parameter sweeps, ablation tables and a no-graph baseline.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::model::{self, Ablations, LfgcnModel, ModelConfig, TrainHistory};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: LfgcnModel,
    pub history: TrainHistory,
    pub test_acc: f64,
}

/// Trains once and scores the test split.
pub fn run_once(cfg: &ModelConfig, graph: &Graph, ds: &LabeledDataset) -> Result<RunOutcome> {
    let (model, history) = model::train(ds, graph, cfg)?;
    let test_acc = model::evaluate(&model, cfg, graph, ds)?;
    Ok(RunOutcome {
        model,
        history,
        test_acc,
    })
}

/// Mean and population standard deviation (`0` for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn status_text(r: &std::result::Result<f64, String>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(msg) => format!("error: {}", msg.replace([',', '\n', '\r'], ";")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub seed: u64,
    pub test_acc: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub runs: usize,
    pub ok: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SummaryRow>,
}

impl SweepReport {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("alpha,sigma,gamma,seed,test_acc,status\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.alpha,
                r.sigma,
                r.gamma,
                r.seed,
                opt(r.test_acc.as_ref().ok().copied()),
                status_text(&r.test_acc)
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("alpha,sigma,gamma,runs,ok,mean,std\n");
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.alpha,
                s.sigma,
                s.gamma,
                s.runs,
                s.ok,
                opt(s.mean),
                opt(s.std)
            );
        }
        out
    }
}

fn seeds(cfg: &RunConfig) -> Vec<u64> {
    (0..cfg.repeats as u64).map(|r| cfg.model.seed.wrapping_add(r)).collect()
}

fn run_many(
    jobs: &[ModelConfig],
    graph: &Graph,
    ds: &LabeledDataset,
    workers: usize,
) -> Result<Vec<std::result::Result<f64, String>>> {
    let run = |m: &ModelConfig| run_once(m, graph, ds).map(|o| o.test_acc).map_err(|e| e.to_string());
    if workers == 1 {
        return Ok(jobs.iter().map(run).collect());
    }
    Ok(thread_pool(workers)?.install(|| jobs.par_iter().map(run).collect()))
}

/// Every `(α, σ, γ)` grid point trained `repeats` times with seeds `seed + r`.
/// Failed runs are recorded and skipped in the summary.
pub fn run_sweep(cfg: &RunConfig, graph: &Graph, ds: &LabeledDataset) -> Result<SweepReport> {
    cfg.validate()?;
    cfg.validate_grids()?;
    let base = cfg.model_for(graph.num_nodes());
    let seeds = seeds(cfg);
    let mut points = Vec::new();
    for &alpha in &cfg.alpha_grid {
        for &sigma in &cfg.sigma_grid {
            for &gamma in &cfg.gamma_grid {
                points.push((alpha, sigma, gamma));
            }
        }
    }
    let jobs: Vec<ModelConfig> = points
        .iter()
        .flat_map(|&(alpha, sigma, gamma)| {
            let base = &base;
            seeds.iter().map(move |&seed| ModelConfig {
                alpha,
                sigma,
                gamma,
                seed,
                ..base.clone()
            })
        })
        .collect();
    let results = run_many(&jobs, graph, ds, cfg.workers)?;
    let rows: Vec<SweepRow> = jobs
        .iter()
        .zip(results)
        .map(|(j, r)| SweepRow {
            alpha: j.alpha,
            sigma: j.sigma,
            gamma: j.gamma,
            seed: j.seed,
            test_acc: r,
        })
        .collect();
    let summary = points
        .iter()
        .zip(rows.chunks(seeds.len()))
        .map(|(&(alpha, sigma, gamma), chunk)| {
            let ok: Vec<f64> = chunk.iter().filter_map(|r| r.test_acc.as_ref().ok().copied()).collect();
            let ms = mean_std(&ok);
            SummaryRow {
                alpha,
                sigma,
                gamma,
                runs: chunk.len(),
                ok: ok.len(),
                mean: ms.map(|m| m.0),
                std: ms.map(|m| m.1),
            }
        })
        .collect();
    Ok(SweepReport { rows, summary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: &'static str,
    pub num_branches: usize,
    pub pdropedge: bool,
    pub residual: bool,
    pub gated_pool: bool,
    pub seeds: Vec<u64>,
    pub accuracies: Vec<std::result::Result<f64, String>>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,num_branches,pdropedge,residual,gated_pool,seeds,runs,ok,mean,std,accuracies\n");
        for r in &self.rows {
            let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
            let accs: Vec<String> = r
                .accuracies
                .iter()
                .map(|a| a.as_ref().map(f64::to_string).unwrap_or_else(|_| "error".into()))
                .collect();
            let ok = r.accuracies.iter().filter(|a| a.is_ok()).count();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.variant,
                r.num_branches,
                r.pdropedge,
                r.residual,
                r.gated_pool,
                seeds.join(";"),
                r.accuracies.len(),
                ok,
                opt(r.mean),
                opt(r.std),
                accs.join(";")
            );
        }
        out
    }
}

pub const ABLATION_VARIANTS: [&str; 5] = ["full", "no_pdropedge", "no_parallel", "no_residual", "no_gated_pool"];

fn variant_ablations(name: &str) -> Ablations {
    let mut a = Ablations::default();
    match name {
        "no_pdropedge" => a.no_pdropedge = true,
        "no_parallel" => a.no_parallel = true,
        "no_residual" => a.no_residual = true,
        "no_gated_pool" => a.no_gated_pool = true,
        _ => {}
    }
    a
}

/// The full model and each single-component ablation, all on the same seeds.
pub fn run_ablation(cfg: &RunConfig, graph: &Graph, ds: &LabeledDataset) -> Result<AblationReport> {
    cfg.validate()?;
    let base = cfg.model_for(graph.num_nodes());
    let seeds = seeds(cfg);
    let variants: Vec<ModelConfig> = ABLATION_VARIANTS
        .iter()
        .map(|v| ModelConfig {
            ablations: variant_ablations(v),
            ..base.clone()
        })
        .collect();
    let jobs: Vec<ModelConfig> = variants
        .iter()
        .flat_map(|v| seeds.iter().map(move |&seed| ModelConfig { seed, ..v.clone() }))
        .collect();
    let results = run_many(&jobs, graph, ds, cfg.workers)?;
    let rows = ABLATION_VARIANTS
        .iter()
        .zip(&variants)
        .zip(results.chunks(seeds.len()))
        .map(|((&variant, v), accs)| {
            let ok: Vec<f64> = accs.iter().filter_map(|a| a.as_ref().ok().copied()).collect();
            let ms = mean_std(&ok);
            AblationRow {
                variant,
                num_branches: v.effective_branches(),
                pdropedge: v.active_drop().is_some(),
                residual: v.residual(),
                gated_pool: v.gated(),
                seeds: seeds.clone(),
                accuracies: accs.to_vec(),
                mean: ms.map(|m| m.0),
                std: ms.map(|m| m.1),
            }
        })
        .collect();
    Ok(AblationReport { rows })
}

/// Multinomial logistic regression on the raw features (no graph), trained by
/// full-batch gradient descent on the train split; returns test accuracy.
pub fn logistic_baseline(ds: &LabeledDataset, iterations: usize, lr: f64, l2: f64) -> Result<f64> {
    ds.validate_for_training()?;
    let q = ds.num_features();
    let k = ds.num_classes();
    let mut w = DenseMatrix::zeros(q + 1, k);
    let train: Vec<(usize, usize)> = ds
        .train
        .iter()
        .map(|&v| (v, ds.labels.label(v).expect("validated")))
        .collect();
    let inv = 1.0 / train.len() as f64;
    let scores = |w: &DenseMatrix, v: usize| -> Vec<f64> {
        let x = ds.features.row(v);
        let logits: Vec<f64> = (0..k)
            .map(|c| w[(q, c)] + x.iter().enumerate().map(|(j, xj)| xj * w[(j, c)]).sum::<f64>())
            .collect();
        let max = logits.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l));
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    };
    for _ in 0..iterations {
        let mut grad = DenseMatrix::zeros(q + 1, k);
        for &(v, label) in &train {
            let p = scores(&w, v);
            let x = ds.features.row(v);
            for c in 0..k {
                let d = (p[c] - if c == label { 1.0 } else { 0.0 }) * inv;
                for j in 0..q {
                    grad[(j, c)] += d * x[j];
                }
                grad[(q, c)] += d;
            }
        }
        for j in 0..q {
            for c in 0..k {
                grad[(j, c)] += 2.0 * l2 * w[(j, c)];
            }
        }
        w.axpy(-lr, &grad);
    }
    let pred: Vec<usize> = (0..ds.num_nodes())
        .map(|v| {
            let p = scores(&w, v);
            (0..k).fold(0, |b, c| if p[c] > p[b] { c } else { b })
        })
        .collect();
    crate::dataset::accuracy(&pred, &ds.labels, &ds.test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_conventions() {
        assert_eq!(mean_std(&[]), None);
        assert_eq!(mean_std(&[0.7]), Some((0.7, 0.0)));
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn status_column_has_no_commas() {
        let s = status_text(&Err("bad, worse\nworst".into()));
        assert!(!s.contains(',') && !s.contains('\n'));
        assert_eq!(status_text(&Ok(0.5)), "ok");
    }
}
