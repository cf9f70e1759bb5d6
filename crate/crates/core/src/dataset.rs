//! Node features, labels and train/val/test splits.
//!
//! File formats (all UTF-8, `#` lines ignored):
//! - features: headerless CSV, row `i` holds the features of node `i`;
//! - labels: `node_id,class_index` rows (an optional `node_id,...` header is skipped);
//!   nodes without a row are unlabeled;
//! - split: lines `train: 0,1,2`, `val: ...`, `test: ...`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{self, Graph};
use crate::gssl::LabelMatrix;
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: DenseMatrix,
    pub labels: LabelMatrix,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(
        features: DenseMatrix,
        labels: LabelMatrix,
        train: Vec<usize>,
        val: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        let ds = LabeledDataset {
            features,
            labels,
            train,
            val,
            test,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    /// `|train| / N`.
    pub fn label_rate(&self) -> f64 {
        self.train.len() as f64 / self.num_nodes() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        if self.labels.num_nodes() != n {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} label rows",
                n,
                self.labels.num_nodes()
            )));
        }
        let mut seen = HashSet::new();
        for (name, mask) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &v in mask {
                if v >= n {
                    return Err(Error::InvalidDataset(format!("{name} node {v} out of range")));
                }
                if !seen.insert(v) {
                    return Err(Error::InvalidDataset(format!(
                        "node {v} appears twice across splits (again in {name})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Training additionally needs labeled train nodes from at least two classes.
    pub fn validate_for_training(&self) -> Result<()> {
        self.validate()?;
        let mut classes = HashSet::new();
        for &v in &self.train {
            match self.labels.label(v) {
                Some(k) => {
                    classes.insert(k);
                }
                None => {
                    return Err(Error::InvalidDataset(format!("train node {v} has no label")));
                }
            }
        }
        if classes.len() < 2 {
            return Err(Error::InvalidDataset(
                "train split must cover at least two classes".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub graph: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub split: PathBuf,
}

impl DatasetPaths {
    /// Conventional file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        DatasetPaths {
            graph: d.join("graph.edges"),
            features: d.join("features.csv"),
            labels: d.join("labels.csv"),
            split: d.join("split.txt"),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_features(text: &str, source: &str) -> Result<DenseMatrix> {
    let mut rows = Vec::new();
    for (ln, line) in content_lines(text) {
        let row = line
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: source.into(),
                        line: ln,
                        msg: format!("bad feature value `{t}`"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: source.into(),
                    line: ln,
                    msg: format!("expected {} features, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidDataset(format!("{source}: no feature rows")));
    }
    DenseMatrix::from_rows(&rows)
}

/// Parses `node_id,class_index` rows into per-node labels for `n` nodes.
pub fn parse_labels(text: &str, source: &str, n: usize) -> Result<Vec<Option<usize>>> {
    let mut labels = vec![None; n];
    for (ln, line) in content_lines(text) {
        let perr = |msg: String| Error::Parse {
            path: source.into(),
            line: ln,
            msg,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.first() == Some(&"node_id") {
            continue;
        }
        let [node, class] = fields.as_slice() else {
            return Err(perr(format!("expected `node_id,class_index`, got `{line}`")));
        };
        let node: usize = node.parse().map_err(|_| perr(format!("bad node id `{node}`")))?;
        let class: usize = class
            .parse()
            .map_err(|_| perr(format!("bad class index `{class}`")))?;
        if node >= n {
            return Err(perr(format!("node {node} out of range for {n} nodes")));
        }
        if labels[node].replace(class).is_some() {
            return Err(perr(format!("node {node} labeled twice")));
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn parse_split(text: &str, source: &str) -> Result<Split> {
    let mut split = Split::default();
    let mut seen = HashSet::new();
    for (ln, line) in content_lines(text) {
        let perr = |msg: String| Error::Parse {
            path: source.into(),
            line: ln,
            msg,
        };
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| perr(format!("expected `train:`, `val:` or `test:`, got `{line}`")))?;
        let name = name.trim();
        let target = match name {
            "train" => &mut split.train,
            "val" => &mut split.val,
            "test" => &mut split.test,
            other => return Err(perr(format!("unknown split `{other}`"))),
        };
        if !seen.insert(name.to_string()) {
            return Err(perr(format!("split `{name}` given twice")));
        }
        for t in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            target.push(t.parse().map_err(|_| perr(format!("bad node id `{t}`")))?);
        }
    }
    Ok(split)
}

/// Loads and validates a dataset. `num_classes = None` infers `max class + 1`.
pub fn load_dataset(paths: &DatasetPaths, num_classes: Option<usize>) -> Result<(Graph, LabeledDataset)> {
    let graph = graph::load_graph(&paths.graph)?;
    let n = graph.num_nodes();
    let features = parse_features(&read(&paths.features)?, &paths.features.display().to_string())?;
    if features.rows() != n {
        return Err(Error::InvalidDataset(format!(
            "graph has {n} nodes but features file has {} rows",
            features.rows()
        )));
    }
    let labels = parse_labels(&read(&paths.labels)?, &paths.labels.display().to_string(), n)?;
    let max_class = labels.iter().flatten().max().copied();
    let k = match (num_classes, max_class) {
        (Some(k), Some(m)) if m >= k => {
            return Err(Error::InvalidDataset(format!(
                "label file names class {m}, but there are only {k} classes"
            )))
        }
        (Some(k), _) => k,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(Error::InvalidDataset("label file has no labels".into())),
    };
    let labels = LabelMatrix::from_labels(&labels, k)?;
    let split = parse_split(&read(&paths.split)?, &paths.split.display().to_string())?;
    let ds = LabeledDataset::new(features, labels, split.train, split.val, split.test)?;
    Ok((graph, ds))
}

pub fn features_to_csv(x: &DenseMatrix) -> String {
    let mut out = String::new();
    for r in 0..x.rows() {
        let row: Vec<String> = x.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn labels_to_csv(labels: &LabelMatrix) -> String {
    let mut out = String::from("node_id,class_index\n");
    for (i, l) in labels.labels().iter().enumerate() {
        if let Some(k) = l {
            let _ = writeln!(out, "{i},{k}");
        }
    }
    out
}

pub fn split_to_text(ds: &LabeledDataset) -> String {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    format!(
        "train: {}\nval: {}\ntest: {}\n",
        join(&ds.train),
        join(&ds.val),
        join(&ds.test)
    )
}

/// Writes the four dataset files to `paths`.
pub fn save_dataset(graph: &Graph, ds: &LabeledDataset, paths: &DatasetPaths) -> Result<()> {
    let write = |p: &Path, s: String| std::fs::write(p, s).map_err(|e| Error::io(p, e));
    graph::save_graph(graph, &paths.graph)?;
    write(&paths.features, features_to_csv(&ds.features))?;
    write(&paths.labels, labels_to_csv(&ds.labels))?;
    write(&paths.split, split_to_text(ds))
}

/// Fraction of `mask` nodes whose predicted class matches the label.
pub fn accuracy(pred: &[usize], truth: &LabelMatrix, mask: &[usize]) -> Result<f64> {
    let labeled: Vec<usize> = mask
        .iter()
        .copied()
        .filter(|&v| truth.label(v).is_some())
        .collect();
    if labeled.is_empty() {
        return Err(Error::InvalidArgument("accuracy over an empty mask".into()));
    }
    let correct = labeled
        .iter()
        .filter(|&&v| truth.label(v) == Some(pred[v]))
        .count();
    Ok(correct as f64 / labeled.len() as f64)
}
