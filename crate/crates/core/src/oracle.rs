//! The oracle: turns an `ℓ`-bit labeling `φ` into the erasure-resilient
//! labeling `ψ(v) = b(v) ∥ distS(v) ∥ block(v)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_rational::Ratio;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bits::{ceil_log2, from_hex, push_uint, read_uint, to_hex, BitStr, Bits};
use crate::codec::{encode_group, max_block_bits, CodecError, GroupCodec};
use crate::graph::{Graph, NodeId};
use crate::partition::{partition_centralized, PartitionError, PartitionResult};
use crate::rulingset::{greedy_ruling_set, RulingSet, RulingSetError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("F must be at least 1")]
    ZeroBudget,
    #[error("f_factor must be at least 1")]
    ZeroFactor,
    #[error("graph has {n} nodes, need at least f+1 = {need}")]
    GraphTooSmall { n: usize, need: usize },
    #[error("codec cannot tolerate {budget} erasures in a group of {s}")]
    IntolerantCodec { s: usize, budget: usize },
    #[error("node {0} has no input label")]
    MissingLabel(NodeId),
    #[error("label of node {node} has {got} bits, expected {expected}")]
    LabelLength { node: NodeId, expected: usize, got: usize },
    #[error("label has {len} bits, need at least {need}")]
    TooShort { len: usize, need: usize },
    #[error("label file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    RulingSet(#[from] RulingSetError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// An input labeling `φ` with every label `ell` bits long.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Labeling {
    pub ell: usize,
    pub bits: BTreeMap<NodeId, Bits>,
}

impl Labeling {
    pub fn new(ell: usize, bits: BTreeMap<NodeId, Bits>) -> Result<Self, OracleError> {
        if let Some((&node, b)) = bits.iter().find(|(_, b)| b.len() != ell) {
            return Err(OracleError::LabelLength { node, expected: ell, got: b.len() });
        }
        Ok(Labeling { ell, bits })
    }

    /// Uniformly random labels, a deterministic function of `seed`.
    pub fn random(g: &Graph, ell: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits =
            g.sorted_nodes().into_iter().map(|v| (v, (0..ell).map(|_| rng.random_bool(0.5)).collect())).collect();
        Labeling { ell, bits }
    }

    pub fn get(&self, v: NodeId) -> Option<&BitStr> {
        self.bits.get(&v).map(|b| b.as_bitslice())
    }

    /// Header `n ell`, then `ID hex` per node.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.bits.len(), self.ell);
        for (v, b) in &self.bits {
            let _ = writeln!(out, "{v} {}", hex_or_dash(b));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, OracleError> {
        let mut lines = numbered_lines(text);
        let (_, header) = lines.next().ok_or(OracleError::Parse { line: 1, msg: "missing header".into() })?;
        let [n, ell] = parse_header(header, 1)?;
        let mut bits = BTreeMap::new();
        for (line, fields) in lines {
            let [v, hex] = fields[..] else { return Err(parse_err(line, "expected `ID hex`")) };
            let v = parse_id(v, line)?;
            let b = if hex == "-" && ell == 0 { Some(Bits::new()) } else { from_hex(hex, ell) };
            let b = b.ok_or_else(|| parse_err(line, "bad hex label"))?;
            if bits.insert(v, b).is_some() {
                return Err(parse_err(line, "duplicate node"));
            }
        }
        if bits.len() != n {
            return Err(parse_err(0, &format!("header says {n} nodes, found {}", bits.len())));
        }
        Ok(Labeling { ell, bits })
    }
}

/// Field widths shared by the oracle and every node: `b` is one bit and
/// `distS` takes `D = ⌈log2(2f+2)⌉` bits; the block is the rest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub f: usize,
    pub dist_bits: usize,
}

impl Layout {
    pub fn new(f: usize) -> Self {
        Layout { f, dist_bits: ceil_log2(2 * f as u64 + 2) }
    }

    pub fn header_bits(&self) -> usize {
        1 + self.dist_bits
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedLabel {
    pub b: bool,
    pub dist: u32,
    pub block: Bits,
}

pub fn pack_label(layout: Layout, b: bool, dist: u32, block: &BitStr) -> Bits {
    let mut out = Bits::with_capacity(layout.header_bits() + block.len());
    out.push(b);
    push_uint(&mut out, u64::from(dist), layout.dist_bits);
    out.extend_from_bitslice(block);
    out
}

pub fn parse_label(psi: &BitStr, layout: Layout) -> Result<ParsedLabel, OracleError> {
    let need = layout.header_bits();
    if psi.len() < need {
        return Err(OracleError::TooShort { len: psi.len(), need });
    }
    Ok(ParsedLabel {
        b: psi[0],
        dist: read_uint(psi, 1, layout.dist_bits).expect("length checked") as u32,
        block: psi[need..].to_bitvec(),
    })
}

/// `ψ`, with `None` for erased labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResilientLabeling {
    pub layout: Layout,
    pub labels: BTreeMap<NodeId, Option<Bits>>,
}

impl ResilientLabeling {
    pub fn erase(&mut self, nodes: &BTreeSet<NodeId>) {
        for v in nodes {
            if let Some(l) = self.labels.get_mut(v) {
                *l = None;
            }
        }
    }

    pub fn erased(&self) -> BTreeSet<NodeId> {
        self.labels.iter().filter(|(_, l)| l.is_none()).map(|(&v, _)| v).collect()
    }

    pub fn max_label_bits(&self) -> usize {
        self.labels.values().flatten().map(|l| l.len()).max().unwrap_or(0)
    }

    /// Header `n f`, then `ID len hex` per node or `ID -` when erased.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.labels.len(), self.layout.f);
        for (v, l) in &self.labels {
            match l {
                Some(b) => {
                    let _ = writeln!(out, "{v} {} {}", b.len(), hex_or_dash(b));
                }
                None => {
                    let _ = writeln!(out, "{v} -");
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, OracleError> {
        let mut lines = numbered_lines(text);
        let (_, header) = lines.next().ok_or(OracleError::Parse { line: 1, msg: "missing header".into() })?;
        let [n, f] = parse_header(header, 1)?;
        let mut labels = BTreeMap::new();
        for (line, fields) in lines {
            let (v, label) = match fields[..] {
                [v, "-"] => (v, None),
                [v, len, hex] => {
                    let len: usize = len.parse().map_err(|_| parse_err(line, "bad length"))?;
                    let b = if len == 0 && hex == "-" { Some(Bits::new()) } else { from_hex(hex, len) };
                    (v, Some(b.ok_or_else(|| parse_err(line, "bad hex label"))?))
                }
                _ => return Err(parse_err(line, "expected `ID len hex` or `ID -`")),
            };
            if labels.insert(parse_id(v, line)?, label).is_some() {
                return Err(parse_err(line, "duplicate node"));
            }
        }
        if labels.len() != n {
            return Err(parse_err(0, &format!("header says {n} nodes, found {}", labels.len())));
        }
        Ok(ResilientLabeling { layout: Layout::new(f), labels })
    }
}

/// Label growth `ℓ' ≤ A·ℓ + B_add`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OverheadReport {
    pub ell: usize,
    pub max_label_bits: usize,
    pub max_block_bits: usize,
    /// Observed `max block / ℓ` (0 when `ℓ = 0`).
    #[serde(serialize_with = "ratio_str")]
    pub a: Ratio<u64>,
    /// The codec's own bound on block bits per label bit over all group sizes.
    pub declared_a: u64,
    pub b_add: u64,
}

impl OverheadReport {
    pub fn within_declared(&self) -> bool {
        self.max_label_bits as u64 <= self.declared_a * self.ell as u64 + self.b_add
    }
}

fn ratio_str<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

#[derive(Clone, Debug)]
pub struct Assignment {
    pub psi: ResilientLabeling,
    pub partition: PartitionResult,
    pub ruling_set: RulingSet,
    pub overhead: OverheadReport,
}

/// Preconditions shared by the oracle and the scheme runner.
pub fn check_params(g: &Graph, big_f: usize, codec: &dyn GroupCodec, f_factor: usize) -> Result<usize, OracleError> {
    if big_f == 0 {
        return Err(OracleError::ZeroBudget);
    }
    if f_factor == 0 {
        return Err(OracleError::ZeroFactor);
    }
    let f = f_factor * big_f;
    if g.node_count() < f + 1 {
        return Err(OracleError::GraphTooSmall { n: g.node_count(), need: f + 1 });
    }
    if let Some(s) = (f + 1..=3 * f + 1).find(|&s| !codec.tolerates(s, big_f)) {
        return Err(OracleError::IntolerantCodec { s, budget: big_f });
    }
    Ok(f)
}

pub fn assign_labels(
    g: &Graph,
    big_f: usize,
    phi: &Labeling,
    codec: &dyn GroupCodec,
    f_factor: usize,
) -> Result<Assignment, OracleError> {
    let f = check_params(g, big_f, codec, f_factor)?;
    for v in g.sorted_nodes() {
        let b = phi.bits.get(&v).ok_or(OracleError::MissingLabel(v))?;
        if b.len() != phi.ell {
            return Err(OracleError::LabelLength { node: v, expected: phi.ell, got: b.len() });
        }
    }
    let rs = greedy_ruling_set(g, f)?;
    let pr = partition_centralized(g, &rs, f)?;
    let layout = Layout::new(f);

    let mut labels = BTreeMap::new();
    let mut max_block = 0;
    for members in pr.groups().into_values() {
        let group: Vec<(NodeId, Bits)> = members.iter().map(|&v| (v, phi.bits[&v].clone())).collect();
        let bv = encode_group(codec, &group, big_f)?;
        for (&v, block) in members.iter().zip(&bv.blocks) {
            let block = block.as_ref().expect("fresh encoding has no erasures");
            max_block = max_block.max(block.len());
            let dist = rs.dist(v).expect("ruling set covers every node");
            labels.insert(v, Some(pack_label(layout, rs.contains(v), dist, block)));
        }
    }
    let psi = ResilientLabeling { layout, labels };
    let overhead = OverheadReport {
        ell: phi.ell,
        max_label_bits: psi.max_label_bits(),
        max_block_bits: max_block,
        a: if phi.ell == 0 { Ratio::from_integer(0) } else { Ratio::new(max_block as u64, phi.ell as u64) },
        declared_a: max_block_bits(codec, f + 1..=3 * f + 1) as u64,
        b_add: layout.header_bits() as u64,
    };
    Ok(Assignment { psi, partition: pr, ruling_set: rs, overhead })
}

fn hex_or_dash(b: &BitStr) -> String {
    if b.is_empty() {
        "-".to_string()
    } else {
        to_hex(b)
    }
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, f)| !f.is_empty() && !f[0].starts_with('#'))
}

fn parse_err(line: usize, msg: &str) -> OracleError {
    OracleError::Parse { line, msg: msg.to_string() }
}

fn parse_header(fields: Vec<&str>, line: usize) -> Result<[usize; 2], OracleError> {
    match fields[..] {
        [a, b] => Ok([
            a.parse().map_err(|_| parse_err(line, "bad header"))?,
            b.parse().map_err(|_| parse_err(line, "bad header"))?,
        ]),
        _ => Err(parse_err(line, "expected header with two numbers")),
    }
}

fn parse_id(s: &str, line: usize) -> Result<NodeId, OracleError> {
    s.parse().map(NodeId).map_err(|_| parse_err(line, "bad node id"))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::bits::from_str01;
    use crate::codec::{decode_group, BlockVector, MdsCodec, RepetitionCodec};
    use crate::graph::{generate, GraphKind};

    fn p10() -> Graph {
        generate(&GraphKind::Path { n: 10 }, 0).unwrap()
    }

    #[test]
    fn pack_example() {
        let layout = Layout { f: 3, dist_bits: 3 };
        let packed = pack_label(layout, true, 3, &from_str01("0110").unwrap());
        assert_eq!(packed, from_str01("10110110").unwrap());
        let parsed = parse_label(&packed, layout).unwrap();
        assert_eq!(parsed, ParsedLabel { b: true, dist: 3, block: from_str01("0110").unwrap() });
        assert_eq!(pack_label(layout, false, 0, &Bits::new()), from_str01("0000").unwrap());
        assert_eq!(parse_label(&Bits::new(), layout), Err(OracleError::TooShort { len: 0, need: 4 }));
    }

    #[test]
    fn dist_width() {
        assert_eq!(Layout::new(1).dist_bits, 2);
        assert_eq!(Layout::new(3).dist_bits, 3);
        assert_eq!(Layout::new(80).dist_bits, 8);
    }

    proptest! {
        #[test]
        fn pack_parse_roundtrip(f in 1usize..200, b: bool, seed: u64, len in 0usize..300) {
            let layout = Layout::new(f);
            let dist = (seed % (2 * f as u64 + 2)) as u32;
            let block: Bits = (0..len).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
            let parsed = parse_label(&pack_label(layout, b, dist, &block), layout).unwrap();
            prop_assert_eq!(parsed, ParsedLabel { b, dist, block });
        }
    }

    #[test]
    fn p10_assignment_parses_back() {
        let g = p10();
        let phi = Labeling::random(&g, 4, 7);
        let a = assign_labels(&g, 1, &phi, &RepetitionCodec, 1).unwrap();
        let members: BTreeSet<NodeId> = [1, 5, 9].map(NodeId).into();
        for (v, psi) in &a.psi.labels {
            let p = parse_label(psi.as_ref().unwrap(), a.psi.layout).unwrap();
            assert_eq!(p.b, members.contains(v));
            assert_eq!(Some(p.dist), a.ruling_set.dist(*v));
        }
        assert_eq!(a.psi.layout.dist_bits, 2);
        assert!(a.overhead.within_declared());
    }

    #[test]
    fn empty_payload() {
        let g = p10();
        let phi = Labeling::random(&g, 0, 0);
        let a = assign_labels(&g, 1, &phi, &MdsCodec::new(1), 1).unwrap();
        assert!(a.psi.labels.values().all(|l| l.as_ref().unwrap().len() == 3));
        assert_eq!(a.overhead.a, Ratio::from_integer(0));
    }

    #[test]
    fn default_factor_80_mds() {
        let g = generate(&GraphKind::RandomTree { n: 400 }, 3).unwrap();
        for ell in [1, 8, 32] {
            let phi = Labeling::random(&g, ell, ell as u64);
            let a = assign_labels(&g, 1, &phi, &MdsCodec::new(1), 80).unwrap();
            let d = a.psi.layout.dist_bits;
            assert_eq!(d, 8);
            assert!(a.overhead.max_block_bits <= 80 * ell);
            assert!(a.overhead.max_label_bits <= 80 * ell + 1 + d);
            assert!(a.overhead.a <= Ratio::from_integer(a.overhead.declared_a));
            assert!(a.overhead.within_declared());
        }
    }

    #[test]
    fn blocks_decode_back_to_phi() {
        let g = generate(&GraphKind::Grid { rows: 6, cols: 7 }, 0).unwrap();
        let phi = Labeling::random(&g, 9, 1);
        let codec = MdsCodec::new(2);
        let a = assign_labels(&g, 2, &phi, &codec, 1).unwrap();
        for (_, members) in a.partition.groups() {
            let blocks = members
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let p = parse_label(a.psi.labels[v].as_ref().unwrap(), a.psi.layout).unwrap();
                    (i >= 2).then_some(p.block)
                })
                .collect();
            let bv = BlockVector { ell: 9, blocks };
            for (v, label) in decode_group(&codec, &bv, &members, 2).unwrap() {
                assert_eq!(label, phi.bits[&v]);
            }
        }
    }

    #[test]
    fn precondition_errors() {
        let g = p10();
        let phi = Labeling::random(&g, 2, 0);
        assert_eq!(assign_labels(&g, 0, &phi, &RepetitionCodec, 1).unwrap_err(), OracleError::ZeroBudget);
        assert_eq!(
            assign_labels(&g, 4, &phi, &RepetitionCodec, 3).unwrap_err(),
            OracleError::GraphTooSmall { n: 10, need: 13 }
        );
        assert_eq!(
            assign_labels(&g, 2, &phi, &MdsCodec::new(1), 1).unwrap_err(),
            OracleError::IntolerantCodec { s: 3, budget: 2 }
        );
        let mut short = phi.clone();
        short.bits.remove(&NodeId(4));
        assert_eq!(
            assign_labels(&g, 1, &short, &RepetitionCodec, 1).unwrap_err(),
            OracleError::MissingLabel(NodeId(4))
        );
    }

    #[test]
    fn file_roundtrips() {
        let g = p10();
        for ell in [0, 5, 17] {
            let phi = Labeling::random(&g, ell, 3);
            assert_eq!(Labeling::from_text(&phi.to_text()).unwrap(), phi);
            let mut a = assign_labels(&g, 1, &phi, &RepetitionCodec, 1).unwrap();
            a.psi.erase(&[NodeId(2)].into());
            let text = a.psi.to_text();
            assert!(text.contains("\n2 -\n"));
            assert_eq!(ResilientLabeling::from_text(&text).unwrap(), a.psi);
        }
        assert!(Labeling::from_text("3 4\n1 f\n").is_err());
        assert!(Labeling::from_text("").is_err());
    }
}
