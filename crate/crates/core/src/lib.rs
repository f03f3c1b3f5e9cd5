pub mod bench;
pub mod cache;
pub mod explain;
pub mod extraction;
pub mod grounding;
pub mod kernel;
pub mod kg;
pub mod pipeline;
pub mod provider;
pub mod semantics;
pub mod sync;
