//! Partition into groups of `f+1..=3f+1` nodes with low-congestion
//! shortcuts, computed from a ruling set.
//!
//! Every ruling-set member roots a BFS tree of depth at most `2f+1`. Inside
//! each tree, subtree remainders are grouped bottom-up, group identifiers are
//! relayed down, and a root left with a remainder joins the first group
//! identifier that reaches it from below.

mod centralized;
mod collect;
mod local;
mod program;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::congest::SimError;
use crate::graph::{Graph, NodeId};

pub use centralized::partition_centralized;
pub use collect::{collect_schedule, group_collect, CollectNode, CollectOutput};
pub use local::{compute_groups_local, relay_groups_local, ComputeOutcome, GroupSpec};
pub use program::{assemble, partition_distributed, partition_schedule, PartitionNode, PartitionNodeOutput};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("graph has {n} nodes, need at least f+1 = {need}")]
    GraphTooSmall { n: usize, need: usize },
    #[error("ruling set is empty")]
    EmptyRulingSet,
    #[error("node {0} ended without a group")]
    Incomplete(NodeId),
    #[error("dump parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionResult {
    pub f: usize,
    pub group_of: BTreeMap<NodeId, NodeId>,
    /// Root of the BFS tree each node joined.
    pub leader: BTreeMap<NodeId, NodeId>,
    pub tree_parent: BTreeMap<NodeId, Option<NodeId>>,
    /// `H_group(u)`: the children `w` with `(u, w)` a shortcut edge of `group`.
    pub shortcuts: BTreeMap<NodeId, BTreeMap<NodeId, BTreeSet<NodeId>>>,
}

impl PartitionResult {
    /// Members of every group, sorted by id.
    pub fn groups(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&v, &g) in &self.group_of {
            out.entry(g).or_default().push(v);
        }
        out
    }

    pub fn members(&self, group: NodeId) -> Vec<NodeId> {
        self.group_of.iter().filter(|e| *e.1 == group).map(|e| *e.0).collect()
    }

    /// All shortcut edges `(u, w)` of `group`.
    pub fn shortcut_edges(&self, group: NodeId) -> Vec<(NodeId, NodeId)> {
        self.shortcuts
            .iter()
            .filter_map(|(&u, hs)| hs.get(&group).map(|ws| ws.iter().map(move |&w| (u, w))))
            .flatten()
            .collect()
    }

    /// Groups for which the edge from `tree_parent(w)` down to `w` is a
    /// shortcut edge.
    pub fn up_groups(&self, w: NodeId) -> BTreeSet<NodeId> {
        let Some(Some(p)) = self.tree_parent.get(&w) else { return BTreeSet::new() };
        self.shortcuts
            .get(p)
            .map(|hs| hs.iter().filter(|(_, ws)| ws.contains(&w)).map(|(&g, _)| g).collect())
            .unwrap_or_default()
    }

    /// Lines `ID group leader tree_parent`, then `H u v group`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (&v, &g) in &self.group_of {
            let parent = match self.tree_parent.get(&v).copied().flatten() {
                Some(p) => p.to_string(),
                None => "-".to_string(),
            };
            let leader = self.leader.get(&v).map_or("-".to_string(), |l| l.to_string());
            let _ = writeln!(out, "{v} {g} {leader} {parent}");
        }
        for (&u, hs) in &self.shortcuts {
            for (&g, ws) in hs {
                for &w in ws {
                    let _ = writeln!(out, "H {u} {w} {g}");
                }
            }
        }
        out
    }

    pub fn parse_dump(f: usize, text: &str) -> Result<Self, PartitionError> {
        let mut pr = PartitionResult { f, ..Default::default() };
        for (i, line) in text.lines().enumerate() {
            let err = |msg: &str| PartitionError::Parse { line: i + 1, msg: msg.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<u64>().map(NodeId).map_err(|_| err("bad id"));
            match fields[..] {
                [] => continue,
                ["H", u, w, g] => {
                    pr.shortcuts.entry(num(u)?).or_default().entry(num(g)?).or_default().insert(num(w)?);
                }
                [v, g, l, p] => {
                    let v = num(v)?;
                    if pr.group_of.insert(v, num(g)?).is_some() {
                        return Err(err("duplicate node"));
                    }
                    pr.leader.insert(v, num(l)?);
                    pr.tree_parent.insert(v, if p == "-" { None } else { Some(num(p)?) });
                }
                _ => return Err(err("expected `ID group leader parent` or `H u v group`")),
            }
        }
        Ok(pr)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionReport {
    pub missing: Vec<NodeId>,
    pub unknown: Vec<NodeId>,
    /// `(group, size)` outside `[f+1, 3f+1]`.
    pub size_violations: Vec<(NodeId, usize)>,
    /// Group identifiers that do not name one of their own members.
    pub foreign_names: Vec<NodeId>,
    /// Shortcut pairs that are not graph edges.
    pub non_edges: Vec<(NodeId, NodeId)>,
    pub max_edge_load: usize,
    pub disconnected: Vec<NodeId>,
    pub max_diameter: u32,
    pub diameter_violations: Vec<(NodeId, u32)>,
}

impl PartitionReport {
    pub fn is_valid(&self) -> bool {
        self.missing.is_empty()
            && self.unknown.is_empty()
            && self.size_violations.is_empty()
            && self.foreign_names.is_empty()
            && self.non_edges.is_empty()
            && self.max_edge_load <= 2
            && self.disconnected.is_empty()
            && self.diameter_violations.is_empty()
    }
}

pub fn verify_partition(g: &Graph, pr: &PartitionResult, f: usize) -> PartitionReport {
    let mut rep = PartitionReport {
        missing: g.sorted_nodes().into_iter().filter(|v| !pr.group_of.contains_key(v)).collect(),
        unknown: pr.group_of.keys().copied().filter(|&v| !g.contains(v)).collect(),
        ..Default::default()
    };
    let groups = pr.groups();
    let mut load: BTreeMap<(NodeId, NodeId), usize> = BTreeMap::new();
    for (&gid, members) in &groups {
        if !(f + 1..=3 * f + 1).contains(&members.len()) {
            rep.size_violations.push((gid, members.len()));
        }
        if members.binary_search(&gid).is_err() {
            rep.foreign_names.push(gid);
        }
        // Subgraph G[Q] ∪ H_gid as adjacency over its node set.
        let member_set: BTreeSet<NodeId> = members.iter().copied().collect();
        let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for &u in members {
            for w in g.neighbors(u).unwrap_or_default() {
                if u < w && member_set.contains(&w) {
                    edges.insert((u, w));
                }
            }
        }
        for (u, w) in pr.shortcut_edges(gid) {
            if !g.has_edge(u, w) {
                rep.non_edges.push((u, w));
            }
            edges.insert((u.min(w), u.max(w)));
        }
        for &e in &edges {
            *load.entry(e).or_default() += 1;
        }
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = member_set.iter().map(|&v| (v, Vec::new())).collect();
        for &(u, w) in &edges {
            adj.entry(u).or_default().push(w);
            adj.entry(w).or_default().push(u);
        }
        let mut diameter = 0;
        for &s in adj.keys() {
            let mut dist: BTreeMap<NodeId, u32> = BTreeMap::from([(s, 0)]);
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[&x] {
                    if !dist.contains_key(&y) {
                        dist.insert(y, dist[&x] + 1);
                        queue.push_back(y);
                    }
                }
            }
            if dist.len() < adj.len() {
                rep.disconnected.push(gid);
                diameter = u32::MAX;
                break;
            }
            diameter = diameter.max(*dist.values().max().unwrap());
        }
        if diameter != u32::MAX {
            rep.max_diameter = rep.max_diameter.max(diameter);
            if diameter > 4 * f as u32 {
                rep.diameter_violations.push((gid, diameter));
            }
        }
    }
    rep.max_edge_load = load.values().copied().max().unwrap_or(0);
    rep
}
