//! Graph representation, edge-list I/O and the non-fractional matrix operators.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// A simple weighted graph on nodes `0..num_nodes`. Edge ids are positions in [`Graph::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    directed: bool,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn new(num_nodes: usize, directed: bool, edges: Vec<Edge>) -> Result<Graph> {
        if num_nodes == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for (id, e) in edges.iter().enumerate() {
            if e.u >= num_nodes || e.v >= num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} ({}, {}) out of range for {num_nodes} nodes",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("edge {id} is a self-loop on node {}", e.u)));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} ({}, {}) has non-positive or non-finite weight {}",
                    e.u, e.v, e.w
                )));
            }
            let key = if directed {
                (e.u, e.v)
            } else {
                (e.u.min(e.v), e.u.max(e.v))
            };
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.u, e.v
                )));
            }
        }
        Ok(Graph {
            num_nodes,
            directed,
            edges,
        })
    }

    /// Convenience constructor for unit-weight undirected graphs.
    pub fn undirected_unit(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<Graph> {
        let edges = pairs.iter().map(|&(u, v)| Edge { u, v, w: 1.0 }).collect();
        Graph::new(num_nodes, false, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The undirected graph whose weight matrix is `(Wᵀ + W)/2`.
    ///
    /// Undirected graphs are returned unchanged. For directed graphs, each unordered
    /// pair keeps the position of its first occurrence.
    pub fn to_undirected(&self) -> Graph {
        if !self.directed {
            return self.clone();
        }
        let mut index = std::collections::HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        for e in &self.edges {
            let key = (e.u.min(e.v), e.u.max(e.v));
            match index.get(&key) {
                Some(&i) => {
                    let existing: &mut Edge = &mut edges[i];
                    existing.w += e.w / 2.0;
                }
                None => {
                    index.insert(key, edges.len());
                    edges.push(Edge {
                        u: e.u,
                        v: e.v,
                        w: e.w / 2.0,
                    });
                }
            }
        }
        Graph {
            num_nodes: self.num_nodes,
            directed: false,
            edges,
        }
    }

    /// Returns a copy without the edges whose ids are listed.
    pub fn without_edges(&self, removed: &[usize]) -> Graph {
        let drop: HashSet<usize> = removed.iter().copied().collect();
        Graph {
            num_nodes: self.num_nodes,
            directed: self.directed,
            edges: self
                .edges
                .iter()
                .enumerate()
                .filter(|(id, _)| !drop.contains(id))
                .map(|(_, e)| *e)
                .collect(),
        }
    }

    /// Neighbour lists of the undirected support, sorted ascending.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Number of connected components of the undirected support.
    pub fn component_count(&self) -> usize {
        let adj = self.neighbors();
        let mut seen = vec![false; self.num_nodes];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.num_nodes {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Serializes to the edge-list text format read by [`load_graph`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes {} directed {}\n", self.num_nodes, self.directed);
        for e in &self.edges {
            // `{}` on f64 prints the shortest representation that parses back exactly.
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
        }
        out
    }
}

/// Parses the edge-list format: a `# nodes <N> directed <true|false>` header, then
/// `u v [w]` lines. Blank lines and other `#` lines are ignored.
pub fn parse_edge_list(text: &str, source: &str) -> Result<Graph> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (num_nodes, directed) = loop {
        let Some((ln, line)) = lines.next() else {
            return Err(perr(1, "missing `# nodes <N> directed <bool>` header".into()));
        };
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.trim_start_matches('#').split_whitespace().collect();
        match tokens.as_slice() {
            ["nodes", n, "directed", d] if line.starts_with('#') => {
                let n: usize = n
                    .parse()
                    .map_err(|_| perr(ln, format!("bad node count `{n}`")))?;
                let d: bool = d
                    .parse()
                    .map_err(|_| perr(ln, format!("bad directed flag `{d}`")))?;
                break (n, d);
            }
            _ => return Err(perr(ln, "expected `# nodes <N> directed <true|false>`".into())),
        }
    };
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (ln, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&tokens.len()) {
            return Err(perr(ln, format!("expected `u v [w]`, got `{line}`")));
        }
        let idx = |t: &str| -> Result<usize> {
            t.parse::<usize>()
                .map_err(|_| perr(ln, format!("bad node index `{t}`")))
        };
        let (u, v) = (idx(tokens[0])?, idx(tokens[1])?);
        let w = match tokens.get(2) {
            Some(t) => t
                .parse::<f64>()
                .map_err(|_| perr(ln, format!("bad weight `{t}`")))?,
            None => 1.0,
        };
        if u >= num_nodes || v >= num_nodes {
            return Err(perr(
                ln,
                format!("node index out of range: ({u}, {v}) with {num_nodes} nodes"),
            ));
        }
        if u == v {
            return Err(perr(ln, format!("self-loop on node {u}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(perr(ln, format!("non-positive weight {w}")));
        }
        let key = if directed { (u, v) } else { (u.min(v), u.max(v)) };
        if !seen.insert(key) {
            return Err(perr(ln, format!("duplicate edge ({u}, {v})")));
        }
        edges.push(Edge { u, v, w });
    }
    Graph::new(num_nodes, directed, edges).map_err(|e| perr(1, e.to_string()))
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, &path.display().to_string())
}

pub fn save_graph(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, graph.to_edge_list()).map_err(|e| Error::io(path, e))
}

pub fn adjacency(g: &Graph) -> DenseMatrix {
    let n = g.num_nodes();
    let mut w = DenseMatrix::zeros(n, n);
    for e in g.edges() {
        w[(e.u, e.v)] = e.w;
        if !g.is_directed() {
            w[(e.v, e.u)] = e.w;
        }
    }
    w
}

/// `W′ = (Wᵀ + W)/2`, mirrored so the result is bitwise symmetric.
pub fn symmetrize(w: &DenseMatrix) -> Result<DenseMatrix> {
    require_square(w)?;
    let n = w.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for r in 0..n {
        out[(r, r)] = w[(r, r)];
        for c in r + 1..n {
            let v = (w[(r, c)] + w[(c, r)]) / 2.0;
            out[(r, c)] = v;
            out[(c, r)] = v;
        }
    }
    Ok(out)
}

/// Row-sum degrees, with isolated nodes recorded rather than rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Degrees {
    pub values: Vec<f64>,
    pub isolated: Vec<usize>,
}

impl Degrees {
    pub fn matrix(&self) -> DenseMatrix {
        DenseMatrix::from_diag(&self.values)
    }

    /// Fails with the first isolated node, for callers that invert `D`.
    pub fn require_positive(&self) -> Result<&[f64]> {
        match self.isolated.first() {
            Some(&node) => Err(Error::ZeroDegree { node }),
            None => Ok(&self.values),
        }
    }
}

pub fn degree_matrix(w: &DenseMatrix) -> Result<Degrees> {
    require_square(w)?;
    let values = w.row_sums();
    let isolated = values
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(Degrees { values, isolated })
}

/// `L = D − W` for a symmetric weight matrix.
pub fn standard_laplacian(w: &DenseMatrix) -> Result<DenseMatrix> {
    require_symmetric(w)?;
    let d = degree_matrix(w)?;
    Ok(DenseMatrix::from_fn(w.rows(), w.cols(), |r, c| {
        if r == c {
            d.values[r] - w[(r, c)]
        } else {
            -w[(r, c)]
        }
    }))
}

/// `D^(−1/2) (D − W) D^(−1/2)`; fails on isolated nodes.
pub fn normalized_laplacian(w: &DenseMatrix) -> Result<DenseMatrix> {
    require_symmetric(w)?;
    let d = degree_matrix(w)?;
    let inv_sqrt: Vec<f64> = d.require_positive()?.iter().map(|x| 1.0 / x.sqrt()).collect();
    let l = standard_laplacian(w)?;
    let mut out = l.scale_rows(&inv_sqrt).scale_cols(&inv_sqrt);
    // exact symmetry for downstream eigensolvers
    let n = out.rows();
    for r in 0..n {
        for c in r + 1..n {
            out[(c, r)] = out[(r, c)];
        }
    }
    Ok(out)
}

fn require_square(w: &DenseMatrix) -> Result<()> {
    if w.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            w.rows(),
            w.cols()
        )))
    }
}

fn require_symmetric(w: &DenseMatrix) -> Result<()> {
    require_square(w)?;
    let asym = w.asymmetry();
    if asym > 1e-12 * w.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}
