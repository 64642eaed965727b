//! Erasure-resilient labeling schemes on top of a deterministic CONGEST
//! simulator.

pub mod bits;
pub mod codec;
pub mod congest;
pub mod graph;
pub mod oracle;
pub mod partition;
pub mod restore;
pub mod rulingset;
pub mod scheme;
