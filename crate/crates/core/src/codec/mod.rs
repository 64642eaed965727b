//! Group-level erasure coding.
//!
//! A group of `s` nodes with labels of `ℓ` bits is encoded column by column:
//! column `j` collects bit `j` of every member in id order, is encoded to a
//! codeword, and the codeword is cut into `s` consecutive blocks. Node `i`
//! stores the concatenation of its blocks over all columns.

mod justesen;
mod mds;
mod repetition;

use std::fmt::Debug;
use std::ops::RangeInclusive;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::graph::NodeId;

pub use justesen::{
    choose_m, default_rho, growth_within_five, justesen_k, justesen_n, params, per_node_overhead_bound, JustesenParams,
};
pub use mds::{MdsCodec, MdsLayout};
pub use repetition::RepetitionCodec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("members are not sorted by increasing id")]
    UnsortedMembers,
    #[error("label of {node} has {got} bits, expected {expected}")]
    LengthMismatch { node: NodeId, expected: usize, got: usize },
    #[error("codec cannot handle a group of {s} with {budget} erasures")]
    IntolerantCodec { s: usize, budget: usize },
    #[error("{erased} blocks erased, budget is {budget}")]
    TooManyErasures { erased: usize, budget: usize },
    #[error("block {index} has {got} bits, expected {expected}")]
    CorruptBlockSize { index: usize, expected: usize, got: usize },
    #[error("decode failed: {0}")]
    Decode(String),
}

pub trait GroupCodec: Debug + Send + Sync {
    fn name(&self) -> &str;

    /// Whether any `erasures` of the `s` blocks can be lost.
    fn tolerates(&self, s: usize, erasures: usize) -> bool;

    /// Codeword length `|w|` for one column of a group of size `s`.
    fn codeword_len(&self, s: usize) -> usize;

    /// One codeword per column; each column has `s` bits.
    fn encode_columns(&self, s: usize, columns: &[Bits]) -> Vec<Bits>;

    /// `blocks[i]` holds node `i`'s per-column blocks, `None` when erased.
    fn decode_columns(&self, s: usize, ell: usize, blocks: &[Option<Vec<Bits>>]) -> Result<Vec<Bits>, CodecError>;

    /// Largest block a node receives per label bit, `⌈|w|/s⌉`.
    fn block_bits(&self, s: usize) -> usize {
        self.codeword_len(s).div_ceil(s)
    }

    /// Largest block a node receives for `ℓ`-bit labels.
    fn per_node_overhead(&self, s: usize, ell: usize) -> usize {
        ell * self.block_bits(s)
    }
}

/// Codec selection as it appears in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecSpec {
    Repetition,
    Mds,
}

impl CodecSpec {
    pub fn build(self, budget: usize) -> Arc<dyn GroupCodec> {
        match self {
            CodecSpec::Repetition => Arc::new(RepetitionCodec),
            CodecSpec::Mds => Arc::new(MdsCodec::new(budget)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecSpec::Repetition => "repetition",
            CodecSpec::Mds => "mds",
        }
    }
}

impl std::str::FromStr for CodecSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "repetition" => Ok(CodecSpec::Repetition),
            "mds" => Ok(CodecSpec::Mds),
            other => Err(format!("unknown codec `{other}`")),
        }
    }
}

/// Sizes of the `s` consecutive blocks of a `len`-bit codeword: the first
/// `len mod s` blocks get one extra bit.
pub fn block_sizes(len: usize, s: usize) -> Vec<usize> {
    (0..s).map(|i| len / s + usize::from(i < len % s)).collect()
}

/// Length in bits of node `i`'s stored block for `ℓ`-bit labels.
pub fn node_block_len(codec: &dyn GroupCodec, s: usize, ell: usize, i: usize) -> usize {
    ell * block_sizes(codec.codeword_len(s), s)[i]
}

/// `max ⌈|w|/s⌉` over the given group sizes.
pub fn max_block_bits(codec: &dyn GroupCodec, sizes: RangeInclusive<usize>) -> usize {
    sizes.map(|s| codec.block_bits(s)).max().unwrap_or(0)
}

/// Every node's stored block, in member order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockVector {
    pub ell: usize,
    pub blocks: Vec<Option<Bits>>,
}

impl BlockVector {
    pub fn s(&self) -> usize {
        self.blocks.len()
    }

    pub fn erase(&mut self, i: usize) {
        self.blocks[i] = None;
    }

    pub fn erased(&self) -> usize {
        self.blocks.iter().filter(|b| b.is_none()).count()
    }
}

pub fn encode_group(
    codec: &dyn GroupCodec,
    members: &[(NodeId, Bits)],
    budget: usize,
) -> Result<BlockVector, CodecError> {
    let s = members.len();
    if members.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(CodecError::UnsortedMembers);
    }
    if !codec.tolerates(s, budget) {
        return Err(CodecError::IntolerantCodec { s, budget });
    }
    let ell = members.first().map_or(0, |m| m.1.len());
    if let Some((node, label)) = members.iter().find(|m| m.1.len() != ell) {
        return Err(CodecError::LengthMismatch { node: *node, expected: ell, got: label.len() });
    }
    let columns: Vec<Bits> = (0..ell).map(|j| members.iter().map(|(_, l)| l[j]).collect()).collect();
    let codewords = codec.encode_columns(s, &columns);
    let sizes = block_sizes(codec.codeword_len(s), s);
    let mut blocks = vec![Bits::new(); s];
    for w in &codewords {
        let mut at = 0;
        for (block, &size) in blocks.iter_mut().zip(&sizes) {
            block.extend_from_bitslice(&w[at..at + size]);
            at += size;
        }
    }
    Ok(BlockVector { ell, blocks: blocks.into_iter().map(Some).collect() })
}

pub fn decode_group(
    codec: &dyn GroupCodec,
    bv: &BlockVector,
    member_ids: &[NodeId],
    budget: usize,
) -> Result<Vec<(NodeId, Bits)>, CodecError> {
    let s = bv.s();
    if member_ids.len() != s || member_ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CodecError::UnsortedMembers);
    }
    let erased = bv.erased();
    if erased > budget || !codec.tolerates(s, erased) {
        return Err(CodecError::TooManyErasures { erased, budget });
    }
    let sizes = block_sizes(codec.codeword_len(s), s);
    let mut per_node = Vec::with_capacity(s);
    for (i, block) in bv.blocks.iter().enumerate() {
        let Some(block) = block else {
            per_node.push(None);
            continue;
        };
        let expected = bv.ell * sizes[i];
        if block.len() != expected {
            return Err(CodecError::CorruptBlockSize { index: i, expected, got: block.len() });
        }
        let sz = sizes[i];
        per_node.push(Some((0..bv.ell).map(|j| block[j * sz..(j + 1) * sz].to_bitvec()).collect()));
    }
    let columns = if bv.ell == 0 { Vec::new() } else { codec.decode_columns(s, bv.ell, &per_node)? };
    Ok(member_ids.iter().enumerate().map(|(i, &v)| (v, columns.iter().map(|c| c[i]).collect())).collect())
}
