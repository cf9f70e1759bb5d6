//! `key = value` run configuration files.
//!
//! Lines starting with `#` are comments, list values are comma separated and
//! unknown keys are rejected. Relative paths in a file are resolved against the
//! file's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dataset::DatasetPaths;
use crate::dropedge::DropConfig;
use crate::error::{Error, Result};
use crate::model::{Ablations, GateInput, ModelConfig};
use crate::spectral::LaplacianKind;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Model settings; `model.drop` holds the edge-dropping seed and mode.
    pub model: ModelConfig,
    /// Whether P-DropEdge is requested at all.
    pub pdropedge: bool,
    /// `None` picks the size-dependent recommendation.
    pub p_pde: Option<f64>,
    pub tau: Option<f64>,
    pub graph: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub split: Option<PathBuf>,
    /// `None` infers the class count from the labels.
    pub num_classes: Option<usize>,
    pub out: Option<PathBuf>,
    pub alpha_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub repeats: usize,
    /// Worker threads for sweeps and ablations; 0 uses all cores.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            pdropedge: true,
            p_pde: None,
            tau: None,
            graph: None,
            features: None,
            labels: None,
            split: None,
            num_classes: None,
            out: None,
            alpha_grid: Vec::new(),
            sigma_grid: Vec::new(),
            gamma_grid: Vec::new(),
            repeats: 1,
            workers: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if !x.is_finite() {
        return Err(Error::Config(format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true/false, got `{v}`"))),
    }
}

fn parse_auto<T>(v: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_f64(key, t))
        .collect()
}

impl RunConfig {
    /// Sets one key. `base` resolves relative paths.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let v = value.trim();
        let path = |v: &str| {
            let p = PathBuf::from(v);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        let m = &mut self.model;
        let drop = m.drop.get_or_insert(DropConfig::recommended(0, 0));
        match key {
            "alpha" => m.alpha = parse_f64(key, v)?,
            "sigma" => m.sigma = parse_f64(key, v)?,
            "gamma" => m.gamma = parse_f64(key, v)?,
            "hidden_dim" => m.hidden_dim = parse_num(key, v)?,
            "num_branches" => m.num_branches = parse_num(key, v)?,
            "truncation_order" => m.truncation_order = parse_auto(v, |v| parse_num(key, v))?,
            "dropout_rate" => m.dropout_rate = parse_f64(key, v)?,
            "l2_coeff" => m.l2_coeff = parse_f64(key, v)?,
            "learning_rate" => m.learning_rate = parse_f64(key, v)?,
            "epochs" => m.epochs = parse_num(key, v)?,
            "seed" => m.seed = parse_num(key, v)?,
            "redecompose_every" => m.redecompose_every = parse_num(key, v)?,
            "pdropedge" => self.pdropedge = parse_bool(key, v)?,
            "p_pde" => self.p_pde = parse_auto(v, |v| parse_f64(key, v))?,
            "tau" => self.tau = parse_auto(v, |v| parse_f64(key, v))?,
            "drop_seed" => drop.seed = parse_num(key, v)?,
            "drop_uniform" => drop.uniform = parse_bool(key, v)?,
            "no_pdropedge" => m.ablations.no_pdropedge = parse_bool(key, v)?,
            "no_parallel" => m.ablations.no_parallel = parse_bool(key, v)?,
            "no_residual" => m.ablations.no_residual = parse_bool(key, v)?,
            "no_gated_pool" => m.ablations.no_gated_pool = parse_bool(key, v)?,
            "laplacian" => {
                m.laplacian = match v {
                    "standard" => LaplacianKind::Standard,
                    "normalized" => LaplacianKind::Normalized,
                    _ => return Err(Error::Config(format!("`laplacian`: expected standard or normalized, got `{v}`"))),
                }
            }
            "gate_input" => {
                m.gate_input = match v {
                    "mean" => GateInput::BranchMean,
                    "concat" => GateInput::Concat,
                    _ => return Err(Error::Config(format!("`gate_input`: expected mean or concat, got `{v}`"))),
                }
            }
            "graph" => self.graph = Some(path(v)),
            "features" => self.features = Some(path(v)),
            "labels" => self.labels = Some(path(v)),
            "split" => self.split = Some(path(v)),
            "num_classes" => self.num_classes = parse_auto(v, |v| parse_num(key, v))?,
            "out" => self.out = Some(path(v)),
            "alpha_grid" => self.alpha_grid = parse_list(key, v)?,
            "sigma_grid" => self.sigma_grid = parse_list(key, v)?,
            "gamma_grid" => self.gamma_grid = parse_list(key, v)?,
            "repeats" => self.repeats = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k.trim(), v, None)
    }

    /// The model configuration for a graph with `num_nodes` nodes.
    pub fn model_for(&self, num_nodes: usize) -> ModelConfig {
        let mut m = self.model.clone();
        m.drop = if self.pdropedge {
            let base = m.drop.unwrap_or(DropConfig::recommended(0, 0));
            let rec = DropConfig::recommended(num_nodes, base.seed);
            Some(DropConfig {
                p_pde: self.p_pde.unwrap_or(rec.p_pde),
                tau: self.tau.unwrap_or(rec.tau),
                ..base
            })
        } else {
            None
        };
        m
    }

    pub fn validate(&self) -> Result<()> {
        self.model_for(0).validate()?;
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Grids must be non-empty for sweeps.
    pub fn validate_grids(&self) -> Result<()> {
        for (name, g) in [
            ("alpha_grid", &self.alpha_grid),
            ("sigma_grid", &self.sigma_grid),
            ("gamma_grid", &self.gamma_grid),
        ] {
            if g.is_empty() {
                return Err(Error::Config(format!("`{name}` must not be empty for a sweep")));
            }
        }
        Ok(())
    }

    pub fn dataset_paths(&self) -> Result<DatasetPaths> {
        let need = |p: &Option<PathBuf>, key: &str| {
            p.clone()
                .ok_or_else(|| Error::Config(format!("`{key}` path is required")))
        };
        Ok(DatasetPaths {
            graph: need(&self.graph, "graph")?,
            features: need(&self.features, "features")?,
            labels: need(&self.labels, "labels")?,
            split: need(&self.split, "split")?,
        })
    }
}

/// Parses configuration text; `source` names it in error messages.
pub fn parse_run_config(text: &str, source: &str) -> Result<RunConfig> {
    parse_with_base(text, source, None)
}

fn parse_with_base(text: &str, source: &str, base: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse {
            path: source.into(),
            line: i + 1,
            msg,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| perr(format!("expected `key = value`, got `{line}`")))?;
        cfg.set(k.trim(), v, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{source}:{}: {msg}", i + 1)),
            other => other,
        })?;
    }
    Ok(cfg)
}

pub fn load_run_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_with_base(&text, &path.display().to_string(), path.parent())
}

/// Serializes every model setting as `key = value` lines that [`parse_run_config`] reads back.
pub fn model_config_to_text(m: &ModelConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("alpha", m.alpha.to_string());
    kv("sigma", m.sigma.to_string());
    kv("gamma", m.gamma.to_string());
    kv("hidden_dim", m.hidden_dim.to_string());
    kv("num_branches", m.num_branches.to_string());
    kv(
        "truncation_order",
        m.truncation_order.map_or("auto".into(), |o| o.to_string()),
    );
    kv("dropout_rate", m.dropout_rate.to_string());
    kv("l2_coeff", m.l2_coeff.to_string());
    kv("learning_rate", m.learning_rate.to_string());
    kv("epochs", m.epochs.to_string());
    kv("seed", m.seed.to_string());
    kv("redecompose_every", m.redecompose_every.to_string());
    kv("pdropedge", m.drop.is_some().to_string());
    if let Some(d) = &m.drop {
        kv("p_pde", d.p_pde.to_string());
        kv("tau", d.tau.to_string());
        kv("drop_seed", d.seed.to_string());
        kv("drop_uniform", d.uniform.to_string());
    }
    let Ablations {
        no_pdropedge,
        no_parallel,
        no_residual,
        no_gated_pool,
    } = m.ablations;
    kv("no_pdropedge", no_pdropedge.to_string());
    kv("no_parallel", no_parallel.to_string());
    kv("no_residual", no_residual.to_string());
    kv("no_gated_pool", no_gated_pool.to_string());
    kv(
        "laplacian",
        match m.laplacian {
            LaplacianKind::Standard => "standard",
            LaplacianKind::Normalized => "normalized",
        }
        .into(),
    );
    kv(
        "gate_input",
        match m.gate_input {
            GateInput::BranchMean => "mean",
            GateInput::Concat => "concat",
        }
        .into(),
    );
    out
}

/// Parses text produced by [`model_config_to_text`].
pub fn model_config_from_text(text: &str, source: &str) -> Result<ModelConfig> {
    Ok(parse_run_config(text, source)?.model_for(0))
}
