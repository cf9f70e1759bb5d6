//! Edge betweenness, edge order statistics and preferential edge dropping (P-DropEdge).
//!
//! Betweenness is computed on the undirected view of the graph (directed inputs are
//! symmetrized first), so edge ids in an [`EdgeBetweennessTable`] index
//! `graph.to_undirected().edges()`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Recommended `(p, τ)` for graphs with more than 2000 nodes.
pub const LARGE_GRAPH_DEFAULTS: (f64, f64) = (0.05, 0.06);
/// Recommended `(p, τ)` for smaller graphs.
pub const SMALL_GRAPH_DEFAULTS: (f64, f64) = (0.01, 0.02);

// Slack for products like 0.02 * 50 that land a hair above an integer.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScore {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBetweennessTable {
    pub entries: Vec<EdgeScore>,
    /// Edge ids sorted ascending by score, ties by id.
    pub order: Vec<usize>,
}

impl EdgeBetweennessTable {
    pub fn from_scores(entries: Vec<EdgeScore>) -> Self {
        let order = order_statistics(&entries);
        EdgeBetweennessTable { entries, order }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }

    /// 1-based ascending rank of every edge id.
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.order.len()];
        for (pos, &id) in self.order.iter().enumerate() {
            rank[id] = pos + 1;
        }
        rank
    }
}

/// How shortest paths are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathMetric {
    /// Hop counts; edge weights are ignored.
    #[default]
    Hops,
    /// Edge weights as distances (Dijkstra).
    Weighted,
}

/// Edge betweenness with unweighted shortest paths, summed over unordered node pairs.
pub fn edge_betweenness(g: &Graph) -> EdgeBetweennessTable {
    edge_betweenness_with(g, PathMetric::Hops)
}

pub fn edge_betweenness_with(g: &Graph, metric: PathMetric) -> EdgeBetweennessTable {
    let ug = g.to_undirected();
    let n = ug.num_nodes();
    let mut adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n];
    for (id, e) in ug.edges().iter().enumerate() {
        adj[e.u].push((e.v, id, e.w));
        adj[e.v].push((e.u, id, e.w));
    }
    for list in &mut adj {
        list.sort_by_key(|&(v, id, _)| (v, id));
    }
    let mut score = vec![0.0; ug.num_edges()];
    let mut sp = ShortestPaths::new(n);
    for s in 0..n {
        match metric {
            PathMetric::Hops => sp.bfs(&adj, s),
            PathMetric::Weighted => sp.dijkstra(&adj, s),
        }
        sp.accumulate(&mut score);
    }
    let entries = ug
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| EdgeScore {
            id,
            u: e.u,
            v: e.v,
            // every unordered pair was visited from both endpoints
            score: score[id] / 2.0,
        })
        .collect();
    EdgeBetweennessTable::from_scores(entries)
}

/// Single-source shortest-path DAG state reused across sources.
struct ShortestPaths {
    sigma: Vec<f64>,
    dist: Vec<f64>,
    preds: Vec<Vec<(usize, usize)>>,
    stack: Vec<usize>,
    delta: Vec<f64>,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // min-heap on distance, then node id
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl ShortestPaths {
    fn new(n: usize) -> Self {
        ShortestPaths {
            sigma: vec![0.0; n],
            dist: vec![f64::INFINITY; n],
            preds: vec![Vec::new(); n],
            stack: Vec::with_capacity(n),
            delta: vec![0.0; n],
        }
    }

    fn reset(&mut self, s: usize) {
        self.sigma.fill(0.0);
        self.dist.fill(f64::INFINITY);
        self.preds.iter_mut().for_each(Vec::clear);
        self.stack.clear();
        self.sigma[s] = 1.0;
        self.dist[s] = 0.0;
    }

    fn bfs(&mut self, adj: &[Vec<(usize, usize, f64)>], s: usize) {
        self.reset(s);
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            self.stack.push(v);
            for &(w, id, _) in &adj[v] {
                if self.dist[w].is_infinite() {
                    self.dist[w] = self.dist[v] + 1.0;
                    queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1.0 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push((v, id));
                }
            }
        }
    }

    fn dijkstra(&mut self, adj: &[Vec<(usize, usize, f64)>], s: usize) {
        self.reset(s);
        let mut settled = vec![false; adj.len()];
        let mut heap = BinaryHeap::from([HeapItem(0.0, s)]);
        while let Some(HeapItem(d, v)) = heap.pop() {
            if settled[v] || d > self.dist[v] {
                continue;
            }
            settled[v] = true;
            self.stack.push(v);
            for &(w, id, len) in &adj[v] {
                let alt = d + len;
                let tol = 1e-12 * alt.max(1.0);
                if alt < self.dist[w] - tol {
                    self.dist[w] = alt;
                    self.sigma[w] = self.sigma[v];
                    self.preds[w].clear();
                    self.preds[w].push((v, id));
                    heap.push(HeapItem(alt, w));
                } else if (alt - self.dist[w]).abs() <= tol && !settled[w] {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push((v, id));
                }
            }
        }
    }

    fn accumulate(&mut self, score: &mut [f64]) {
        self.delta.fill(0.0);
        while let Some(w) = self.stack.pop() {
            for &(v, id) in &self.preds[w] {
                let c = self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
                score[id] += c;
                self.delta[v] += c;
            }
        }
    }
}

/// Edge ids ascending by score, ties broken by edge id.
pub fn order_statistics(entries: &[EdgeScore]) -> Vec<usize> {
    let mut order: Vec<usize> = entries.iter().map(|e| e.id).collect();
    order.sort_by(|&a, &b| {
        entries[a]
            .score
            .total_cmp(&entries[b].score)
            .then(a.cmp(&b))
    });
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropConfig {
    /// Removal intensity `p`.
    pub p_pde: f64,
    /// Fraction `τ` of highest-betweenness edges eligible for removal.
    pub tau: f64,
    pub seed: u64,
    /// Baseline mode: drop the same number of edges uniformly from all edges.
    pub uniform: bool,
}

impl DropConfig {
    pub fn new(p_pde: f64, tau: f64, seed: u64) -> Result<Self> {
        let cfg = DropConfig {
            p_pde,
            tau,
            seed,
            uniform: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rule-of-thumb `(p, τ)`: 5%/6% above 2000 nodes, 1%/2% otherwise.
    pub fn recommended(num_nodes: usize, seed: u64) -> Self {
        let (p_pde, tau) = if num_nodes > 2000 {
            LARGE_GRAPH_DEFAULTS
        } else {
            SMALL_GRAPH_DEFAULTS
        };
        DropConfig {
            p_pde,
            tau,
            seed,
            uniform: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_pde) {
            return Err(Error::InvalidArgument(format!(
                "p must lie in [0, 1], got {}",
                self.p_pde
            )));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in (0, 1], got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// `⌈τ·|E|⌉`.
    pub fn top_set_size(&self, num_edges: usize) -> usize {
        let x = self.tau * num_edges as f64;
        ((x - ROUNDING_SLACK).ceil().max(0.0) as usize).min(num_edges)
    }

    /// `⌊p·τ·|E|⌋`.
    pub fn sample_size(&self, num_edges: usize) -> usize {
        let x = self.p_pde * self.tau * num_edges as f64;
        ((x + ROUNDING_SLACK).floor().max(0.0) as usize).min(self.top_set_size(num_edges))
    }
}

/// Result of one edge-dropping round.
#[derive(Debug, Clone, PartialEq)]
pub struct DropSample {
    /// The undirected graph with the removed edges deleted.
    pub graph: Graph,
    /// Removed edge ids, in draw order.
    pub removed: Vec<usize>,
}

/// One round of preferential edge dropping.
///
/// The candidate pool is the `⌈τ|E|⌉` edges with the highest order statistics;
/// `⌊p·τ·|E|⌋` of them are drawn without replacement, each draw proportional to
/// betweenness among the edges still in the pool (uniform if the pool's scores are
/// all zero).
pub fn pdropedge_sample<R: Rng + ?Sized>(
    g: &Graph,
    table: &EdgeBetweennessTable,
    cfg: &DropConfig,
    rng: &mut R,
) -> Result<DropSample> {
    cfg.validate()?;
    let ug = g.to_undirected();
    let m = ug.num_edges();
    if table.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "betweenness table has {} edges, graph has {m}",
            table.len()
        )));
    }
    let s = cfg.sample_size(m);
    if s == 0 {
        return Ok(DropSample {
            graph: ug,
            removed: Vec::new(),
        });
    }
    let mut pool: Vec<(usize, f64)> = if cfg.uniform {
        (0..m).map(|id| (id, 1.0)).collect()
    } else {
        let t = cfg.top_set_size(m);
        table.order[m - t..]
            .iter()
            .map(|&id| (id, table.entries[id].score))
            .collect()
    };
    let mut removed = Vec::with_capacity(s);
    for _ in 0..s {
        let total: f64 = pool.iter().map(|&(_, w)| w).sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = pool.len() - 1;
            for (i, &(_, w)) in pool.iter().enumerate() {
                acc += w;
                if target < acc && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..pool.len())
        };
        removed.push(pool.remove(pick).0);
    }
    Ok(DropSample {
        graph: ug.without_edges(&removed),
        removed,
    })
}

/// Selection weights `ψ` of the candidate pool, keyed by edge id.
pub fn selection_weights(table: &EdgeBetweennessTable, cfg: &DropConfig) -> Vec<(usize, f64)> {
    let m = table.len();
    let t = cfg.top_set_size(m);
    let top = &table.order[m - t..];
    let total: f64 = top.iter().map(|&id| table.entries[id].score).sum();
    top.iter()
        .map(|&id| {
            let psi = if total > 0.0 {
                table.entries[id].score / total
            } else {
                1.0 / t as f64
            };
            (id, psi)
        })
        .collect()
}

/// Empirical per-edge removal frequency over `trials` independently seeded rounds.
pub fn selection_frequencies(
    g: &Graph,
    table: &EdgeBetweennessTable,
    cfg: &DropConfig,
    trials: usize,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut counts = vec![0usize; table.len()];
    for t in 0..trials {
        let mut r = rng::stream(cfg.seed, "pdropedge-trial", &[t as u64]);
        for id in pdropedge_sample(g, table, cfg, &mut r)?.removed {
            counts[id] += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / trials as f64)
        .collect())
}
