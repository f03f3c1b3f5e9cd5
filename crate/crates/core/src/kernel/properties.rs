use nalgebra::DMatrix;
use proptest::prelude::*;
use std::collections::BTreeMap;

use super::*;

// Naive WL over an adjacency matrix with explicit signature lists and a
// linear-scan dictionary.
fn naive_features(graphs: &[&EncodedGraph], h: usize) -> Vec<BTreeMap<(usize, u32), u64>> {
    let adjacency: Vec<Vec<Vec<bool>>> = graphs
        .iter()
        .map(|g| {
            let n = g.node_count();
            let mut m = vec![vec![false; n]; n];
            for &(a, b) in &g.edges {
                if a != b {
                    m[a][b] = true;
                    m[b][a] = true;
                }
            }
            m
        })
        .collect();
    let mut current: Vec<Vec<u32>> = graphs.iter().map(|g| g.node_labels.clone()).collect();
    let mut out: Vec<BTreeMap<(usize, u32), u64>> = vec![BTreeMap::new(); graphs.len()];
    for (gi, labels) in current.iter().enumerate() {
        for &l in labels {
            *out[gi].entry((0, l)).or_insert(0) += 1;
        }
    }
    for it in 1..=h {
        let mut seen: Vec<(u32, Vec<u32>)> = Vec::new();
        let mut next_all = Vec::new();
        for (gi, labels) in current.iter().enumerate() {
            let mut next = Vec::new();
            for v in 0..labels.len() {
                let mut neigh: Vec<u32> = (0..labels.len())
                    .filter(|&u| adjacency[gi][v][u])
                    .map(|u| labels[u])
                    .collect();
                neigh.sort();
                let sig = (labels[v], neigh);
                let id = match seen.iter().position(|s| *s == sig) {
                    Some(p) => p,
                    None => {
                        seen.push(sig);
                        seen.len() - 1
                    }
                } as u32;
                next.push(id);
                *out[gi].entry((it, id)).or_insert(0) += 1;
            }
            next_all.push(next);
        }
        current = next_all;
    }
    out
}

fn arb_graph(max_nodes: usize) -> impl Strategy<Value = EncodedGraph> {
    (0..=max_nodes).prop_flat_map(|n| {
        let labels = proptest::collection::vec(0u32..4, n);
        let edges = if n == 0 {
            Just(Vec::new()).boxed()
        } else {
            proptest::collection::vec((0..n, 0..n), 0..(2 * n + 1)).boxed()
        };
        (labels, edges).prop_map(|(l, e)| EncodedGraph::new(l, e))
    })
}

fn arb_permuted(max_nodes: usize) -> impl Strategy<Value = (EncodedGraph, Vec<usize>)> {
    arb_graph(max_nodes).prop_flat_map(|g| {
        let n = g.node_count();
        (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

// Multiset of count values per iteration: invariant under relabeling of
// compressed ids.
fn count_profile(f: &WlFeatureVector) -> BTreeMap<usize, Vec<u64>> {
    let mut out: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for (&(it, _), &c) in f.counts() {
        out.entry(it).or_default().push(c);
    }
    for v in out.values_mut() {
        v.sort();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_naive_oracle(g1 in arb_graph(12), g2 in arb_graph(12), h in 0usize..6) {
        let fast = wl_features_shared(&[&g1, &g2], &WlOptions::with_iterations(h));
        let slow = naive_features(&[&g1, &g2], h);
        prop_assert_eq!(fast[0].counts(), &slow[0]);
        prop_assert_eq!(fast[1].counts(), &slow[1]);
    }

    #[test]
    fn symmetric(g1 in arb_graph(10), g2 in arb_graph(10)) {
        let a = wl_kernel(&g1, &g2, 5);
        let b = wl_kernel(&g2, &g1, 5);
        prop_assert_eq!(a.raw, b.raw);
        prop_assert!((a.normalized - b.normalized).abs() < 1e-12);
    }

    #[test]
    fn self_normalized(g in arb_graph(12)) {
        prop_assume!(!g.is_empty());
        prop_assert!((wl_kernel(&g, &g, 5).normalized - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalized_in_unit_interval(g1 in arb_graph(10), g2 in arb_graph(10)) {
        let k = wl_kernel(&g1, &g2, 5);
        prop_assert!((0.0..=1.0).contains(&k.normalized));
    }

    #[test]
    fn isomorphism_invariant((g, perm) in arb_permuted(12), other in arb_graph(8)) {
        let p = g.permuted(&perm);
        prop_assert_eq!(count_profile(&wl_features(&g, 5)), count_profile(&wl_features(&p, 5)));
        prop_assert_eq!(wl_kernel(&g, &other, 5).raw, wl_kernel(&p, &other, 5).raw);
        prop_assert_eq!(wl_kernel(&g, &p, 5).normalized, 1.0);
    }

    #[test]
    fn counts_conserved(g in arb_graph(12), h in 0usize..7) {
        let f = wl_features(&g, h);
        for i in 0..=h {
            prop_assert_eq!(f.total_at(i), g.node_count() as u64);
        }
    }

    #[test]
    fn gram_is_psd(graphs in proptest::collection::vec(arb_graph(8), 1..=8)) {
        let refs: Vec<&EncodedGraph> = graphs.iter().collect();
        let gram = wl_gram(&refs, &WlOptions::default());
        let n = gram.len();
        let m = DMatrix::from_fn(n, n, |i, j| gram[i][j]);
        let min = m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-8, "min eigenvalue {}", min);
    }
}
