//! Graph encoding and the Weisfeiler-Lehman subtree kernel.

mod encode;
mod profile;
mod wl;

pub use encode::{encode_graph, encode_pair, EncodedGraph, EncodedPair, LabelDictionary, NodeKind};
pub use profile::{random_graph, runtime_profile, runtime_profile_with, ProfileOptions, ProfileRow};
pub use wl::{
    refine, wl_features, wl_features_shared, wl_features_with, wl_gram, wl_kernel, wl_kernel_with, Directedness,
    KernelResult, WlFeatureVector, WlOptions, WlRefinement, DEFAULT_WL_ITERATIONS,
};

use crate::kg::GraphPair;

/// Encodes a pair and scores it in one step.
pub fn pair_kernel(pair: &GraphPair, options: &WlOptions) -> KernelResult {
    let encoded = encode_pair(pair);
    wl_kernel_with(&encoded.claim, &encoded.truth, options)
}

#[cfg(test)]
mod properties;
