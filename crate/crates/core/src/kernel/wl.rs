//! Weisfeiler-Lehman subtree features and kernel.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::encode::EncodedGraph;

pub const DEFAULT_WL_ITERATIONS: usize = 5;

/// Whether neighborhood aggregation distinguishes edge direction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Directedness {
    #[default]
    Undirected,
    Directed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WlOptions {
    pub iterations: usize,
    pub directedness: Directedness,
}

impl Default for WlOptions {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_WL_ITERATIONS,
            directedness: Directedness::Undirected,
        }
    }
}

impl WlOptions {
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            iterations,
            ..Self::default()
        }
    }
}

/// Label counts keyed by `(iteration, compressed label)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WlFeatureVector {
    #[serde(with = "pair_keys")]
    counts: BTreeMap<(usize, u32), u64>,
}

mod pair_keys {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        iteration: usize,
        label: u32,
        count: u64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<(usize, u32), u64>, s: S) -> Result<S::Ok, S::Error> {
        map.iter()
            .map(|(&(iteration, label), &count)| Entry {
                iteration,
                label,
                count,
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, u32), u64>, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| ((e.iteration, e.label), e.count))
            .collect())
    }
}

impl WlFeatureVector {
    pub fn counts(&self) -> &BTreeMap<(usize, u32), u64> {
        &self.counts
    }

    pub fn get(&self, iteration: usize, label: u32) -> u64 {
        self.counts.get(&(iteration, label)).copied().unwrap_or(0)
    }

    /// Sum of counts recorded at `iteration`.
    pub fn total_at(&self, iteration: usize) -> u64 {
        self.counts
            .range((iteration, 0)..=(iteration, u32::MAX))
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn dot(&self, other: &WlFeatureVector) -> u64 {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(key, &c)| c * large.counts.get(key).copied().unwrap_or(0))
            .sum()
    }
}

/// Per-graph, per-iteration node labels produced by a shared refinement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WlRefinement {
    /// `labels[graph][iteration][node]`
    pub labels: Vec<Vec<Vec<u32>>>,
}

impl WlRefinement {
    pub fn features(&self) -> Vec<WlFeatureVector> {
        self.labels
            .iter()
            .map(|per_iter| {
                let mut counts = BTreeMap::new();
                for (iteration, labels) in per_iter.iter().enumerate() {
                    for &l in labels {
                        *counts.entry((iteration, l)).or_insert(0) += 1;
                    }
                }
                WlFeatureVector { counts }
            })
            .collect()
    }
}

/// Compressed-sparse adjacency: for each node, the neighbors that feed its
/// signature. Directed graphs store in-neighbors and out-neighbors
/// separately.
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    // Directed only: offsets/targets for in-neighbors; the main lists hold
    // out-neighbors.
    incoming: Option<(Vec<usize>, Vec<usize>)>,
}

fn csr(n: usize, pairs: impl Iterator<Item = (usize, usize)> + Clone) -> (Vec<usize>, Vec<usize>) {
    let mut degree = vec![0usize; n + 1];
    for (a, _) in pairs.clone() {
        degree[a + 1] += 1;
    }
    for i in 0..n {
        degree[i + 1] += degree[i];
    }
    let mut fill = degree.clone();
    let mut targets = vec![0usize; degree[n]];
    for (a, b) in pairs {
        targets[fill[a]] = b;
        fill[a] += 1;
    }
    (degree, targets)
}

impl Adjacency {
    fn build(g: &EncodedGraph, directedness: Directedness) -> Self {
        let n = g.node_count();
        match directedness {
            Directedness::Undirected => {
                let edges = g.undirected_edges();
                let pairs = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]);
                let (offsets, targets) = csr(n, pairs);
                Self {
                    offsets,
                    targets,
                    incoming: None,
                }
            }
            Directedness::Directed => {
                let mut edges: Vec<(usize, usize)> = g.edges.iter().copied().filter(|(a, b)| a != b).collect();
                edges.sort_unstable();
                edges.dedup();
                let (offsets, targets) = csr(n, edges.iter().copied());
                let incoming = csr(n, edges.iter().map(|&(a, b)| (b, a)));
                Self {
                    offsets,
                    targets,
                    incoming: Some(incoming),
                }
            }
        }
    }

    fn signature(&self, node: usize, prev: &[u32], key: &mut Vec<u32>) {
        key.clear();
        key.push(prev[node]);
        let start = key.len();
        key.extend(
            self.targets[self.offsets[node]..self.offsets[node + 1]]
                .iter()
                .map(|&m| prev[m]),
        );
        key[start..].sort_unstable();
        if let Some((offsets, targets)) = &self.incoming {
            // Marker separating out-neighbors from in-neighbors.
            key.push(u32::MAX);
            let start = key.len();
            key.extend(targets[offsets[node]..offsets[node + 1]].iter().map(|&m| prev[m]));
            key[start..].sort_unstable();
        }
    }
}

/// Runs `options.iterations` rounds of WL relabeling over all graphs with
/// one compression dictionary per iteration, shared across the graphs.
/// Compressed ids are assigned in first-encounter order, graphs in input
/// order and nodes in index order.
pub fn refine(graphs: &[&EncodedGraph], options: &WlOptions) -> WlRefinement {
    let adjacency: Vec<Adjacency> = graphs
        .iter()
        .map(|g| Adjacency::build(g, options.directedness))
        .collect();
    let mut labels: Vec<Vec<Vec<u32>>> = graphs
        .iter()
        .map(|g| {
            let mut v = Vec::with_capacity(options.iterations + 1);
            v.push(g.node_labels.clone());
            v
        })
        .collect();
    let mut key = Vec::new();
    for _ in 0..options.iterations {
        let mut dictionary: HashMap<Vec<u32>, u32> = HashMap::new();
        for (gi, adj) in adjacency.iter().enumerate() {
            let prev = labels[gi].last().expect("iteration 0 present");
            let mut next = Vec::with_capacity(prev.len());
            for node in 0..prev.len() {
                adj.signature(node, prev, &mut key);
                let fresh = dictionary.len() as u32;
                let id = match dictionary.get(key.as_slice()) {
                    Some(&id) => id,
                    None => {
                        dictionary.insert(key.clone(), fresh);
                        fresh
                    }
                };
                next.push(id);
            }
            labels[gi].push(next);
        }
    }
    WlRefinement { labels }
}

/// Features of a single graph with a private dictionary.
pub fn wl_features(g: &EncodedGraph, iterations: usize) -> WlFeatureVector {
    wl_features_with(g, &WlOptions::with_iterations(iterations))
}

pub fn wl_features_with(g: &EncodedGraph, options: &WlOptions) -> WlFeatureVector {
    refine(&[g], options).features().remove(0)
}

/// Features of several graphs over a shared dictionary, so they are
/// comparable.
pub fn wl_features_shared(graphs: &[&EncodedGraph], options: &WlOptions) -> Vec<WlFeatureVector> {
    refine(graphs, options).features()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelResult {
    pub raw: f64,
    pub self_g: f64,
    pub self_h: f64,
    pub normalized: f64,
}

impl KernelResult {
    fn from_counts(raw: u64, self_g: u64, self_h: u64, g_empty: bool, h_empty: bool) -> Self {
        let normalized = match (g_empty, h_empty) {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.0,
            _ if raw == self_g && raw == self_h => 1.0,
            _ => {
                let denom = (self_g as f64).sqrt() * (self_h as f64).sqrt();
                (raw as f64 / denom).clamp(0.0, 1.0)
            }
        };
        Self {
            raw: raw as f64,
            self_g: self_g as f64,
            self_h: self_h as f64,
            normalized,
        }
    }
}

/// Normalized WL subtree kernel. Two empty graphs score 1; an empty graph
/// against a non-empty one scores 0.
pub fn wl_kernel(g1: &EncodedGraph, g2: &EncodedGraph, iterations: usize) -> KernelResult {
    wl_kernel_with(g1, g2, &WlOptions::with_iterations(iterations))
}

pub fn wl_kernel_with(g1: &EncodedGraph, g2: &EncodedGraph, options: &WlOptions) -> KernelResult {
    let features = wl_features_shared(&[g1, g2], options);
    KernelResult::from_counts(
        features[0].dot(&features[1]),
        features[0].dot(&features[0]),
        features[1].dot(&features[1]),
        g1.is_empty(),
        g2.is_empty(),
    )
}

/// Raw kernel matrix over a shared dictionary.
pub fn wl_gram(graphs: &[&EncodedGraph], options: &WlOptions) -> Vec<Vec<f64>> {
    let features = wl_features_shared(graphs, options);
    features
        .iter()
        .map(|a| features.iter().map(|b| a.dot(b) as f64).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(labels: &[u32]) -> EncodedGraph {
        let edges = (1..labels.len()).map(|i| (i - 1, i)).collect();
        EncodedGraph::new(labels.to_vec(), edges)
    }

    fn table(entries: &[((usize, u32), u64)]) -> BTreeMap<(usize, u32), u64> {
        entries.iter().copied().collect()
    }

    // Hand-executed refinement of the path A-B-A-A (A=0, B=1), h=2.
    //   iter 1: (A,[B])->0  (B,[A,A])->1  (A,[A,B])->2  (A,[A])->3
    //   iter 2: (0,[1])->0  (1,[0,2])->1  (2,[1,3])->2  (3,[2])->3
    fn abaa_counts() -> BTreeMap<(usize, u32), u64> {
        table(&[
            ((0, 0), 3),
            ((0, 1), 1),
            ((1, 0), 1),
            ((1, 1), 1),
            ((1, 2), 1),
            ((1, 3), 1),
            ((2, 0), 1),
            ((2, 1), 1),
            ((2, 2), 1),
            ((2, 3), 1),
        ])
    }

    // Path A-B-A refined after A-B-A-A in the same dictionaries:
    //   iter 1: (A,[B])->0 (B,[A,A])->1 ; iter 2: (0,[1])->0 (1,[0,0])->4
    fn aba_counts() -> BTreeMap<(usize, u32), u64> {
        table(&[
            ((0, 0), 2),
            ((0, 1), 1),
            ((1, 0), 2),
            ((1, 1), 1),
            ((2, 0), 2),
            ((2, 4), 1),
        ])
    }

    fn brute_dot(a: &BTreeMap<(usize, u32), u64>, b: &BTreeMap<(usize, u32), u64>) -> u64 {
        let mut total = 0;
        for (ka, va) in a {
            for (kb, vb) in b {
                if ka == kb {
                    total += va * vb;
                }
            }
        }
        total
    }

    #[test]
    fn hand_refined_path_counts() {
        let f = wl_features(&path(&[0, 1, 0, 0]), 2);
        assert_eq!(f.counts(), &abaa_counts());
    }

    #[test]
    fn shared_dictionary_pair_counts_and_kernel() {
        let (g1, g2) = (path(&[0, 1, 0, 0]), path(&[0, 1, 0]));
        let f = wl_features_shared(&[&g1, &g2], &WlOptions::with_iterations(2));
        assert_eq!(f[0].counts(), &abaa_counts());
        assert_eq!(f[1].counts(), &aba_counts());
        let k = wl_kernel(&g1, &g2, 2);
        assert_eq!(k.raw as u64, brute_dot(&abaa_counts(), &aba_counts()));
        assert_eq!(k.raw, 12.0);
        assert_eq!(k.self_g, 18.0);
        assert_eq!(k.self_h, 15.0);
        assert!((k.normalized - 12.0 / 270f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn isolated_node_is_stable() {
        let f = wl_features(&EncodedGraph::new(vec![7], vec![]), 5);
        for i in 0..=5 {
            assert_eq!(f.total_at(i), 1);
        }
        assert_eq!(f.get(0, 7), 1);
        assert_eq!(f.counts().len(), 6);
    }

    #[test]
    fn identical_paths_identical_features() {
        let a = path(&[0, 5, 1]);
        assert_eq!(wl_features(&a, 5), wl_features(&a.clone(), 5));
        assert_eq!(wl_kernel(&a, &a, 5).normalized, 1.0);
    }

    #[test]
    fn disjoint_labels_score_zero() {
        let k = wl_kernel(&path(&[0, 1]), &path(&[2, 3, 4]), 5);
        assert_eq!(k.raw, 0.0);
        assert_eq!(k.normalized, 0.0);
    }

    #[test]
    fn empty_graph_conventions() {
        let empty = EncodedGraph::default();
        assert_eq!(wl_kernel(&empty, &empty, 5).normalized, 1.0);
        assert_eq!(wl_kernel(&empty, &path(&[0]), 5).normalized, 0.0);
        assert_eq!(wl_kernel(&path(&[0]), &empty, 5).normalized, 0.0);
    }

    #[test]
    fn h_zero_counts_labels_only() {
        let f = wl_features(&path(&[0, 1, 0]), 0);
        assert_eq!(f.counts(), &table(&[((0, 0), 2), ((0, 1), 1)]));
    }

    #[test]
    fn directed_mode_distinguishes_orientation() {
        let forward = EncodedGraph::new(vec![0, 1, 2], vec![(0, 1), (1, 2)]);
        let backward = EncodedGraph::new(vec![0, 1, 2], vec![(2, 1), (1, 0)]);
        assert_eq!(wl_kernel(&forward, &backward, 3).normalized, 1.0);
        let directed = WlOptions {
            iterations: 3,
            directedness: Directedness::Directed,
        };
        assert!(wl_kernel_with(&forward, &backward, &directed).normalized < 1.0);
        assert_eq!(wl_kernel_with(&forward, &forward, &directed).normalized, 1.0);
    }

    #[test]
    fn feature_vector_json_round_trip() {
        let f = wl_features(&path(&[0, 1]), 1);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<WlFeatureVector>(&json).unwrap(), f);
    }
}
