use lfgcn_core::dropedge::{edge_betweenness, pdropedge_sample, DropConfig};
use lfgcn_core::fgs::{fgs_apply, FilterSpec};
use lfgcn_core::graph::{Edge, Graph};
use lfgcn_core::model::gated_pool;
use lfgcn_core::reliability::{parallel_reliability, srswor_variance};
use lfgcn_core::rng;
use lfgcn_core::spectral::{self, FractionalOperatorSet, LaplacianKind};
use lfgcn_core::DenseMatrix;
use proptest::prelude::*;

/// A connected graph: a random spanning tree plus extra edges from `extra`.
fn connected_graph() -> impl Strategy<Value = Graph> {
    (3usize..12).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec(0usize..1000, n - 1),
            proptest::collection::vec((0..n, 0..n), 0..2 * n),
        )
            .prop_map(|(n, parents, extra)| {
                let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (parents[v - 1] % v, v)).collect();
                for (u, v) in extra {
                    let (a, b) = (u.min(v), u.max(v));
                    if a != b && !pairs.iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a, b)) {
                        pairs.push((a, b));
                    }
                }
                let edges = pairs.into_iter().map(|(u, v)| Edge { u, v, w: 1.0 }).collect();
                Graph::new(n, false, edges).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn srswor_variance_shrinks_with_sample_size(values in proptest::collection::vec(-5.0f64..5.0, 2..12)) {
        let big_n = values.len();
        let mut prev = f64::INFINITY;
        for n in 1..=big_n {
            let v = srswor_variance(&values, n).unwrap();
            prop_assert!(v >= -1e-12);
            prop_assert!(v <= prev + 1e-12);
            prev = v;
        }
        prop_assert!(srswor_variance(&values, big_n).unwrap().abs() < 1e-12);
    }

    #[test]
    fn reliability_grows_with_components(p in proptest::collection::vec(0.0f64..=1.0, 1..8), extra in 0.0f64..=1.0) {
        let r = parallel_reliability(&p).unwrap();
        let best = p.iter().cloned().fold(0.0, f64::max);
        prop_assert!(r >= best - 1e-12 && r <= 1.0 + 1e-12);
        let mut more = p.clone();
        more.push(extra);
        prop_assert!(parallel_reliability(&more).unwrap() >= r - 1e-12);
    }

    #[test]
    fn gated_pool_lies_between_mean_and_max(
        data in proptest::collection::vec(-3.0f64..3.0, 3 * 4 * 2),
        gate in proptest::collection::vec(-2.0f64..2.0, 2),
    ) {
        let branches: Vec<DenseMatrix> = data
            .chunks(4 * 2)
            .map(|c| DenseMatrix::from_row_major(4, 2, c.to_vec()).unwrap())
            .collect();
        let out = gated_pool(&branches, &gate).unwrap();
        for r in 0..4 {
            for c in 0..2 {
                let vals: Vec<f64> = branches.iter().map(|b| b[(r, c)]).collect();
                let mean = vals.iter().sum::<f64>() / 3.0;
                let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(out[(r, c)] >= mean - 1e-12 && out[(r, c)] <= max + 1e-12);
            }
        }
    }

    #[test]
    fn levy_transition_is_stochastic(g in connected_graph(), gamma in 0.1f64..=1.0) {
        let ops = FractionalOperatorSet::from_graph(&g, gamma, 0.5, LaplacianKind::Standard).unwrap();
        let m = spectral::levy_transition(&ops.l_gamma, &ops.d_gamma).unwrap();
        for s in m.row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-9);
        }
        prop_assert!(m.as_slice().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn fgs_filter_is_linear(g in connected_graph(), alpha in 0.05f64..0.95, a in -2.0f64..2.0, seed in any::<u64>()) {
        use rand::Rng;
        let ops = FractionalOperatorSet::from_graph(&g, 0.5, 0.5, LaplacianKind::Standard).unwrap();
        let n = g.num_nodes();
        let mut r = rng::stream(seed, "linearity", &[]);
        let x = DenseMatrix::from_fn(n, 2, |_, _| r.random_range(-1.0..1.0));
        let y = DenseMatrix::from_fn(n, 2, |_, _| r.random_range(-1.0..1.0));
        let spec = FilterSpec::with_default_order(alpha, &ops.l_tilde).unwrap();
        let lhs = fgs_apply(&spec, &x.scale(a).add(&y).unwrap()).unwrap();
        let rhs = fgs_apply(&spec, &x).unwrap().scale(a).add(&fgs_apply(&spec, &y).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn pdropedge_respects_counts_and_top_set(
        g in connected_graph(),
        p in 0.0f64..=1.0,
        tau in 0.05f64..=1.0,
        seed in any::<u64>(),
    ) {
        let table = edge_betweenness(&g);
        let cfg = DropConfig::new(p, tau, seed).unwrap();
        let m = table.len();
        let mut r = rng::stream(seed, "prop", &[]);
        let sample = pdropedge_sample(&g, &table, &cfg, &mut r).unwrap();
        prop_assert_eq!(sample.removed.len(), cfg.sample_size(m));
        let top = &table.order[m - cfg.top_set_size(m)..];
        prop_assert!(sample.removed.iter().all(|id| top.contains(id)));
        let mut sorted = sample.removed.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), sample.removed.len());
        prop_assert_eq!(sample.graph.num_edges(), m - sample.removed.len());
    }
}
