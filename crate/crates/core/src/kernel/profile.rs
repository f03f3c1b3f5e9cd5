//! Runtime profiling of the kernel on random graphs.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::EncodedGraph;
use super::wl::{wl_kernel_with, WlOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    /// Total edges across both graphs of the pair.
    pub edges: usize,
    pub nodes: usize,
    /// Count of label layers, `h + 1`.
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub repetitions: usize,
    pub seed: u64,
    pub label_count: u32,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            repetitions: 7,
            seed: 0x5eed,
            label_count: 16,
        }
    }
}

/// Random labeled graph with `edges` distinct edges over `nodes` nodes.
/// `edges` is capped at the number of possible distinct edges.
pub fn random_graph(nodes: usize, edges: usize, label_count: u32, rng: &mut impl Rng) -> EncodedGraph {
    if nodes == 0 {
        return EncodedGraph::default();
    }
    let label_count = label_count.max(1);
    let node_labels = (0..nodes).map(|_| rng.random_range(0..label_count)).collect();
    let max_edges = nodes * (nodes - 1) / 2;
    let target = edges.min(max_edges);
    let mut seen = std::collections::HashSet::with_capacity(target);
    let mut list = Vec::with_capacity(target);
    while list.len() < target {
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            list.push(key);
        }
    }
    EncodedGraph::new(node_labels, list)
}

/// Times the kernel on one random pair per requested total edge count. Each
/// graph of the pair gets half the edges and average degree near 2. The
/// reported time is the minimum across repetitions.
pub fn runtime_profile(sizes: &[usize], h: usize) -> Vec<ProfileRow> {
    runtime_profile_with(sizes, h, &ProfileOptions::default())
}

pub fn runtime_profile_with(sizes: &[usize], h: usize, options: &ProfileOptions) -> Vec<ProfileRow> {
    let wl = WlOptions::with_iterations(h);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    sizes
        .iter()
        .map(|&m| {
            let half = m / 2;
            let nodes = half.max(2);
            let g1 = random_graph(nodes, half, options.label_count, &mut rng);
            let g2 = random_graph(nodes, m - half, options.label_count, &mut rng);
            let mut best = Duration::MAX;
            for _ in 0..options.repetitions.max(1) {
                let start = Instant::now();
                std::hint::black_box(wl_kernel_with(
                    std::hint::black_box(&g1),
                    std::hint::black_box(&g2),
                    &wl,
                ));
                best = best.min(start.elapsed());
            }
            ProfileRow {
                edges: g1.edges.len() + g2.edges.len(),
                nodes: g1.node_count() + g2.node_count(),
                iterations: h + 1,
                seconds: best.as_secs_f64(),
            }
        })
        .collect()
}
