//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use lfgcn_core::graph::{Edge, Graph};
use lfgcn_core::rng::{self, StreamRng};
use lfgcn_core::DenseMatrix;
use itertools::Itertools;
use rand::Rng;

pub fn rng_for(purpose: &str, i: u64) -> StreamRng {
    rng::stream(0x5EED, purpose, &[i])
}

/// Erdős–Rényi draw with weights in `[0.5, 2)` when `weighted`, redrawn until connected.
pub fn random_connected_graph(r: &mut StreamRng, n: usize, p: f64, weighted: bool) -> Graph {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if r.random::<f64>() < p {
                    let w = if weighted { r.random_range(0.5..2.0) } else { 1.0 };
                    edges.push(Edge { u, v, w });
                }
            }
        }
        let g = Graph::new(n, false, edges).unwrap();
        if g.is_connected() {
            return g;
        }
    }
}

/// Any simple graph (possibly disconnected).
pub fn random_graph(r: &mut StreamRng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                edges.push(Edge { u, v, w: 1.0 });
            }
        }
    }
    Graph::new(n, false, edges).unwrap()
}

pub fn dense_adjacency(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let mut w = vec![vec![0.0; n]; n];
    for e in g.edges() {
        w[e.u][e.v] += e.w;
        if !g.is_directed() {
            w[e.v][e.u] += e.w;
        }
    }
    w
}

pub fn laplacian(w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = w.len();
    (0..n)
        .map(|i| {
            let d: f64 = w[i].iter().sum();
            (0..n).map(|j| if i == j { d - w[i][j] } else { -w[i][j] }).collect()
        })
        .collect()
}

pub fn to_matrix(rows: &[Vec<f64>]) -> DenseMatrix {
    DenseMatrix::from_rows(rows).unwrap()
}

/// Cyclic Jacobi eigenvalue iteration; returns ascending eigenvalues and column eigenvectors.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| m[a][a].total_cmp(&m[b][b]));
    let vals = idx.iter().map(|&i| m[i][i]).collect();
    let vecs = (0..n).map(|r| idx.iter().map(|&i| v[r][i]).collect()).collect();
    (vals, vecs)
}

/// `f(A)` for symmetric `A` through the Jacobi eigenbasis.
pub fn jacobi_matrix_function(a: &[Vec<f64>], f: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    let (vals, vecs) = jacobi_eigen(a);
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| vecs[i][k] * f(vals[k]) * vecs[j][k]).sum()).collect())
        .collect()
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        assert!(p.abs() > 1e-14, "singular");
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (x, pr) in m[r].iter_mut().zip(pivot_row) {
                        *x -= f * pr;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = b.len();
    let m = b[0].len();
    a.iter()
        .map(|row| (0..m).map(|j| (0..k).map(|t| row[t] * b[t][j]).sum()).collect())
        .collect()
}

/// Edge betweenness by enumerating every simple path between every unordered node pair
/// and keeping the shortest ones (hop count).
pub fn brute_force_betweenness(g: &Graph) -> Vec<f64> {
    let n = g.num_nodes();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, e) in g.edges().iter().enumerate() {
        adj[e.u].push((e.v, id));
        adj[e.v].push((e.u, id));
    }
    let mut score = vec![0.0; g.num_edges()];
    for s in 0..n {
        for t in s + 1..n {
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut visited = vec![false; n];
            let mut stack = Vec::new();
            enumerate_paths(&adj, s, t, &mut visited, &mut stack, &mut paths);
            let Some(best) = paths.iter().map(Vec::len).min() else {
                continue;
            };
            let shortest: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() == best).collect();
            let share = 1.0 / shortest.len() as f64;
            for p in shortest {
                for &id in p {
                    score[id] += share;
                }
            }
        }
    }
    score
}

fn enumerate_paths(
    adj: &[Vec<(usize, usize)>],
    at: usize,
    target: usize,
    visited: &mut [bool],
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if at == target {
        out.push(stack.clone());
        return;
    }
    visited[at] = true;
    for &(next, id) in &adj[at] {
        if !visited[next] {
            stack.push(id);
            enumerate_paths(adj, next, target, visited, stack, out);
            stack.pop();
        }
    }
    visited[at] = false;
}

/// Exact variance of the sample mean over all size-`n` subsets.
pub fn enumerated_srswor_variance(values: &[f64], n: usize) -> f64 {
    let means: Vec<f64> = values
        .iter()
        .combinations(n)
        .map(|c| c.into_iter().sum::<f64>() / n as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / means.len() as f64;
    means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / means.len() as f64
}

/// Probability that at least one component works, summed over all joint outcomes.
pub fn enumerated_reliability(p: &[f64]) -> f64 {
    let k = p.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << k) {
        if mask == 0 {
            continue;
        }
        let prob: f64 = (0..k)
            .map(|i| if mask >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
            .product();
        total += prob;
    }
    total
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &DenseMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            worst = worst.max((x - b[(i, j)]).abs());
        }
    }
    worst
}

pub mod gradcheck {
    use lfgcn_core::graph::Graph;
    use lfgcn_core::gssl::LabelMatrix;
    use lfgcn_core::model::{backward, forward, loss, Ablations, DropoutMasks, GateInput, LfgcnModel, ModelConfig, Propagation};
    use lfgcn_core::spectral::{FractionalOperatorSet, LaplacianKind};
    use lfgcn_core::DenseMatrix;
    use rand::Rng;

    /// Worst per-tensor relative error `‖fd − g‖ / max(‖fd‖, ‖g‖)` between central finite
    /// differences and the analytical gradient, on a 6-node instance.
    pub fn worst_relative_error(seed: u64, ablations: Ablations, gate_input: GateInput) -> (f64, Vec<(String, f64)>) {
        let mut r = super::rng_for("gradcheck", seed);
        let g = Graph::undirected_unit(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (0, 5), (1, 4)]).unwrap();
        let g_drop = g.without_edges(&[1, 6]);
        let g_drop2 = g.without_edges(&[3]);
        let cfg = ModelConfig {
            hidden_dim: 4,
            num_branches: 3,
            alpha: 0.6,
            sigma: 0.3,
            gamma: 0.7,
            seed,
            ablations,
            gate_input,
            ..ModelConfig::default()
        };
        let nb = cfg.effective_branches();
        let ops: Vec<DenseMatrix> = [&g, &g_drop, &g_drop2]
            .iter()
            .map(|gr| FractionalOperatorSet::from_graph(gr, cfg.gamma, cfg.sigma, LaplacianKind::Standard).unwrap().l_tilde)
            .collect();
        let prop = Propagation {
            alpha: cfg.alpha,
            order: 3,
            branches: (0..nb).map(|b| &ops[b % 3]).collect(),
            output: &ops[1],
        };
        let x = DenseMatrix::from_rows(&(0..6).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect::<Vec<_>>()).unwrap();
        let y = LabelMatrix::from_labels(&[Some(0), Some(1), None, Some(1), Some(0), None], 2).unwrap();
        let mask = [0, 1, 3, 4];
        let masks = DropoutMasks::sample(&mut r, 0.3, nb, 6, 3, 4);
        let mut model = LfgcnModel::init(&cfg, 3, 2).unwrap();
        // non-zero bias so the residual path is exercised away from the origin
        for v in model.params.residual_bias.as_mut_slice() {
            *v = r.random_range(-0.5..0.5);
        }
        let l2 = 1e-2;
        let eval = |p: &lfgcn_core::model::Params| {
            let (probs, _) = forward(p, &cfg, &x, &prop, Some(&masks)).unwrap();
            loss(&probs, &y, &mask, l2, p).unwrap()
        };
        let (_, cache) = forward(&model.params, &cfg, &x, &prop, Some(&masks)).unwrap();
        let grads = backward(&model.params, &cache, &prop, &y, &mask, l2).unwrap();
        let h = 1e-6;
        let names = model.params.names();
        let mut report = Vec::new();
        let mut worst: f64 = 0.0;
        let count = model.params.tensors().len();
        for t in 0..count {
            let len = model.params.tensors()[t].as_slice().len();
            let mut fd = vec![0.0; len];
            for (i, slot) in fd.iter_mut().enumerate() {
                let orig = model.params.tensors()[t].as_slice()[i];
                model.params.tensors_mut()[t].as_mut_slice()[i] = orig + h;
                let up = eval(&model.params);
                model.params.tensors_mut()[t].as_mut_slice()[i] = orig - h;
                let down = eval(&model.params);
                model.params.tensors_mut()[t].as_mut_slice()[i] = orig;
                *slot = (up - down) / (2.0 * h);
            }
            let an = grads.tensors()[t].as_slice();
            let diff: f64 = fd.iter().zip(an).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = fd.iter().map(|a| a * a).sum::<f64>().sqrt().max(an.iter().map(|a| a * a).sum::<f64>().sqrt());
            let rel = if scale < 1e-12 { diff } else { diff / scale };
            worst = worst.max(rel);
            report.push((names[t].clone(), rel));
        }
        (worst, report)
    }
}
