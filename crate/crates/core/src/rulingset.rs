//! Greedy `(2f+2, 2f+1)`-ruling sets and the brute-force oracles around them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RulingSetError {
    #[error("graph has {n} nodes, need at least f+1 = {need}")]
    GraphTooSmall { n: usize, need: usize },
    #[error("f must be at least 1")]
    ZeroF,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("dump parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RulingSet {
    pub f: usize,
    members: BTreeSet<NodeId>,
    dist_to_s: BTreeMap<NodeId, u32>,
}

impl RulingSet {
    /// Builds a set from explicit members; distances come from a
    /// multi-source BFS (`u32::MAX` where `members` is empty).
    pub fn from_members(
        g: &Graph,
        f: usize,
        members: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self, RulingSetError> {
        let members: BTreeSet<NodeId> = members.into_iter().collect();
        let src: Vec<usize> = members.iter().map(|&m| g.idx(m)).collect::<Result<_, _>>()?;
        let d = g.multi_bfs_idx(&src, u32::MAX);
        let dist_to_s = g.nodes().iter().copied().zip(d).collect();
        Ok(RulingSet { f, members, dist_to_s })
    }

    /// Raw constructor, used when reading dumps. Nothing is checked.
    pub fn from_parts(f: usize, entries: BTreeMap<NodeId, (bool, u32)>) -> Self {
        let members = entries.iter().filter(|(_, (b, _))| *b).map(|(&v, _)| v).collect();
        let dist_to_s = entries.into_iter().map(|(v, (_, d))| (v, d)).collect();
        RulingSet { f, members, dist_to_s }
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.contains(&v)
    }

    pub fn dist(&self, v: NodeId) -> Option<u32> {
        self.dist_to_s.get(&v).copied()
    }

    /// `(id, b, distS)` for every node, in id order.
    pub fn entries(&self) -> impl Iterator<Item = (NodeId, bool, u32)> + '_ {
        self.dist_to_s.iter().map(|(&v, &d)| (v, self.members.contains(&v), d))
    }

    /// One line `ID b distS` per node.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (v, b, d) in self.entries() {
            let _ = writeln!(out, "{v} {} {d}", u8::from(b));
        }
        out
    }

    pub fn parse_dump(f: usize, text: &str) -> Result<Self, RulingSetError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: &str| RulingSetError::Parse { line: i + 1, msg: msg.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [id, b, d] = fields[..] else {
                return Err(err("expected `ID b distS`"));
            };
            let id: u64 = id.parse().map_err(|_| err("bad id"))?;
            let b = match b {
                "0" => false,
                "1" => true,
                _ => return Err(err("b must be 0 or 1")),
            };
            let d: u32 = d.parse().map_err(|_| err("bad distS"))?;
            if entries.insert(NodeId(id), (b, d)).is_some() {
                return Err(err("duplicate node"));
            }
        }
        Ok(Self::from_parts(f, entries))
    }
}

/// Scans nodes by increasing id; every node not yet excluded joins `S` and
/// excludes its ball of radius `2f+1`.
pub fn greedy_ruling_set(g: &Graph, f: usize) -> Result<RulingSet, RulingSetError> {
    if f == 0 {
        return Err(RulingSetError::ZeroF);
    }
    if g.node_count() < f + 1 {
        return Err(RulingSetError::GraphTooSmall { n: g.node_count(), need: f + 1 });
    }
    let radius = 2 * f as u32 + 1;
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by_key(|&i| g.id_at(i));
    let mut excluded = vec![false; g.node_count()];
    let mut members = Vec::new();
    for i in order {
        if excluded[i] {
            continue;
        }
        members.push(g.id_at(i));
        for (j, d) in g.bfs_idx(i, radius).into_iter().enumerate() {
            if d <= radius {
                excluded[j] = true;
            }
        }
    }
    RulingSet::from_members(g, f, members)
}

/// What `verify_ruling_set` found; every field `None` means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RulingSetReport {
    /// Two members closer than `2f+2`.
    pub separation: Option<(NodeId, NodeId, u32)>,
    /// A node farther than `2f+1` from every member (`u32::MAX`: no member).
    pub domination: Option<(NodeId, u32)>,
    /// A node whose stored distS differs from the true one.
    pub dist_mismatch: Option<(NodeId, Option<u32>, u32)>,
    /// A member that is not a node of the graph.
    pub unknown_member: Option<NodeId>,
}

impl RulingSetReport {
    pub fn is_valid(&self) -> bool {
        *self == RulingSetReport::default()
    }
}

pub fn verify_ruling_set(g: &Graph, rs: &RulingSet) -> RulingSetReport {
    let mut report = RulingSetReport::default();
    let alpha = 2 * rs.f as u32 + 2;
    let beta = 2 * rs.f as u32 + 1;
    let mut src = Vec::new();
    for &m in rs.members() {
        match g.idx(m) {
            Ok(i) => src.push(i),
            Err(_) => {
                report.unknown_member.get_or_insert(m);
            }
        }
    }
    'outer: for &i in &src {
        let d = g.bfs_idx(i, alpha - 1);
        for &j in &src {
            if j != i && d[j] < alpha {
                let (a, b) = (g.id_at(i).min(g.id_at(j)), g.id_at(i).max(g.id_at(j)));
                report.separation = Some((a, b, d[j]));
                break 'outer;
            }
        }
    }
    let d = g.multi_bfs_idx(&src, u32::MAX);
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by_key(|&i| g.id_at(i));
    for &i in &order {
        let v = g.id_at(i);
        if d[i] > beta && report.domination.is_none() {
            report.domination = Some((v, d[i]));
        }
        if rs.dist(v) != Some(d[i]) && report.dist_mismatch.is_none() {
            report.dist_mismatch = Some((v, rs.dist(v), d[i]));
        }
    }
    report
}

/// Which nodes count toward the "at most f−2 differing nodes" budget of an
/// alternative pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlternativeReading {
    /// `u` and `v` themselves are counted (each always differs).
    IncludeEndpoints,
    /// Only nodes other than `u` and `v` are counted.
    ExcludeEndpoints,
}

/// Number of `q ∈ B_{f+1}(v) ∪ B_{f+1}(u)` with `dist(q,v) ≠ dist(q,u)`.
pub fn differing_count(
    g: &Graph,
    v: NodeId,
    u: NodeId,
    f: usize,
    reading: AlternativeReading,
) -> Result<usize, GraphError> {
    let dv = g.bfs_idx(g.idx(v)?, u32::MAX);
    let du = g.bfs_idx(g.idx(u)?, u32::MAX);
    let r = f as u32 + 1;
    let (iu, iv) = (g.idx(u)?, g.idx(v)?);
    Ok((0..g.node_count())
        .filter(|&q| dv[q] <= r || du[q] <= r)
        .filter(|&q| dv[q] != du[q])
        .filter(|&q| reading == AlternativeReading::IncludeEndpoints || (q != iu && q != iv))
        .count())
}

pub fn is_alternative_with(
    g: &Graph,
    v: NodeId,
    u: NodeId,
    f: usize,
    reading: AlternativeReading,
) -> Result<bool, GraphError> {
    if u == v {
        return Ok(false);
    }
    if g.distance(u, v)? > f as u32 {
        return Ok(false);
    }
    let count = differing_count(g, v, u, f, reading)?;
    Ok((count as i64) <= f as i64 - 2)
}

/// `u` is an alternative node for `v`: within distance `f`, and at most
/// `f−2` nodes of their `(f+1)`-balls (counting `u` and `v`) see them at
/// different distances.
pub fn is_alternative(g: &Graph, v: NodeId, u: NodeId, f: usize) -> Result<bool, GraphError> {
    is_alternative_with(g, v, u, f, AlternativeReading::IncludeEndpoints)
}

/// First `(v, u)` with `v ∈ S`, `u ∉ S`, `ID(u) < ID(v)` and `u` alternative
/// for `v`.
pub fn lemma_violation(g: &Graph, rs: &RulingSet, f: usize, reading: AlternativeReading) -> Option<(NodeId, NodeId)> {
    for &v in rs.members() {
        let Ok(iv) = g.idx(v) else { continue };
        let near = g.bfs_idx(iv, f as u32);
        for (j, d) in near.into_iter().enumerate() {
            let u = g.id_at(j);
            if d <= f as u32 && u < v && !rs.contains(u) && is_alternative_with(g, v, u, f, reading).unwrap_or(false) {
                return Some((v, u));
            }
        }
    }
    None
}

/// No member of `rs` has a smaller-id alternative node outside `rs`.
pub fn check_lemma_greedy(g: &Graph, rs: &RulingSet, f: usize) -> bool {
    lemma_violation(g, rs, f, AlternativeReading::IncludeEndpoints).is_none()
}
