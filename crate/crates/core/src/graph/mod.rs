//! Undirected connected graphs with arbitrary positive node identifiers.
//!
//! Nodes are stored densely (`0..n`) in construction order; the dense index
//! never leaks out of the public API, which speaks [`NodeId`] only.

mod generate;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{gadget_roles, generate, GadgetRoles, GraphKind};
pub use io::{read_graph, write_graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("graph is disconnected: node {0} unreachable from {1}")]
    DisconnectedGraph(NodeId, NodeId),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("node id 0 is not allowed")]
    ZeroId,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("generation failed: {0}")]
    GenerationFailed(String),
    #[error("relabeling map is not a bijection: {0}")]
    NotBijective(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    /// Neighbor indices, sorted by neighbor id.
    adj: Vec<Vec<usize>>,
}

/// Hop distances from one source to every node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMap {
    pub source: NodeId,
    dist: Vec<u32>,
    ids: Vec<NodeId>,
}

impl DistanceMap {
    pub fn get(&self, v: NodeId) -> Option<u32> {
        self.ids.iter().position(|&x| x == v).map(|i| self.dist[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.ids.iter().copied().zip(self.dist.iter().copied())
    }

    pub fn max(&self) -> u32 {
        self.dist.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Relabel {
    /// 1..n in construction order.
    Sequential,
    /// A seeded random permutation of 1..n.
    RandomPerm { seed: u64 },
    /// Explicit old → new map; must cover every node.
    Custom { map: BTreeMap<NodeId, NodeId> },
}

impl Graph {
    /// Graph on ids `1..=n` from an edge list.
    pub fn from_edges(n: usize, edges: &[(u64, u64)]) -> Result<Self, GraphError> {
        let ids: Vec<NodeId> = (1..=n as u64).map(NodeId).collect();
        let edges: Vec<(NodeId, NodeId)> = edges.iter().map(|&(a, b)| (NodeId(a), NodeId(b))).collect();
        Self::with_ids(ids, &edges)
    }

    /// Graph with an explicit node list. Duplicate edges are merged.
    pub fn with_ids(ids: Vec<NodeId>, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        if ids.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, &id) in ids.iter().enumerate() {
            if id.0 == 0 {
                return Err(GraphError::ZeroId);
            }
            if index.insert(id, i).is_some() {
                return Err(GraphError::DuplicateNode(id));
            }
        }
        let mut sets = vec![BTreeSet::new(); ids.len()];
        for &(a, b) in edges {
            let ia = *index.get(&a).ok_or(GraphError::UnknownNode(a))?;
            let ib = *index.get(&b).ok_or(GraphError::UnknownNode(b))?;
            if ia == ib {
                return Err(GraphError::SelfLoop(a));
            }
            sets[ia].insert(ib);
            sets[ib].insert(ia);
        }
        let adj = sets
            .into_iter()
            .map(|s| {
                let mut v: Vec<usize> = s.into_iter().collect();
                v.sort_by_key(|&j| ids[j]);
                v
            })
            .collect();
        let g = Graph { ids, index, adj };
        g.check_connected()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let d = self.bfs_idx(0, u32::MAX);
        match d.iter().position(|&x| x == u32::MAX) {
            Some(i) => Err(GraphError::DisconnectedGraph(self.ids[i], self.ids[0])),
            None => Ok(()),
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Node ids in construction order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.ids
    }

    /// Node ids in increasing order.
    pub fn sorted_nodes(&self) -> Vec<NodeId> {
        let mut v = self.ids.clone();
        v.sort();
        v
    }

    pub fn max_id(&self) -> NodeId {
        *self.ids.iter().max().expect("graph is never empty")
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.index.contains_key(&v)
    }

    /// Each undirected edge once, as `(smaller id, larger id)`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, nbrs) in self.adj.iter().enumerate() {
            for &j in nbrs {
                if self.ids[i] < self.ids[j] {
                    out.push((self.ids[i], self.ids[j]));
                }
            }
        }
        out.sort();
        out
    }

    /// Neighbors of `v`, sorted by id.
    pub fn neighbors(&self, v: NodeId) -> Result<Vec<NodeId>, GraphError> {
        let i = self.idx(v)?;
        Ok(self.adj[i].iter().map(|&j| self.ids[j]).collect())
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&ia), Some(&ib)) => self.adj[ia].contains(&ib),
            _ => false,
        }
    }

    pub fn bfs_distances(&self, source: NodeId) -> Result<DistanceMap, GraphError> {
        let s = self.idx(source)?;
        Ok(DistanceMap { source, dist: self.bfs_idx(s, u32::MAX), ids: self.ids.clone() })
    }

    /// Distance between two nodes.
    pub fn distance(&self, u: NodeId, v: NodeId) -> Result<u32, GraphError> {
        let iu = self.idx(u)?;
        let iv = self.idx(v)?;
        Ok(self.bfs_idx(iu, u32::MAX)[iv])
    }

    /// All nodes within distance `t` of `v`.
    pub fn ball(&self, v: NodeId, t: u32) -> Result<BTreeSet<NodeId>, GraphError> {
        let i = self.idx(v)?;
        let d = self.bfs_idx(i, t);
        Ok(d.iter().enumerate().filter(|(_, &x)| x <= t).map(|(j, _)| self.ids[j]).collect())
    }

    /// A shortest path from `u` to `v`, inclusive. Walking back from `v`,
    /// each step picks the smallest-id neighbor one hop closer to `u`.
    pub fn shortest_path(&self, u: NodeId, v: NodeId) -> Result<Vec<NodeId>, GraphError> {
        let iu = self.idx(u)?;
        let iv = self.idx(v)?;
        let d = self.bfs_idx(iu, u32::MAX);
        let mut path = vec![iv];
        let mut cur = iv;
        while cur != iu {
            // adjacency lists are id-sorted, so the first hit is the smallest id
            cur = *self.adj[cur]
                .iter()
                .find(|&&w| d[w] + 1 == d[cur])
                .expect("BFS predecessor exists in a connected graph");
            path.push(cur);
        }
        path.reverse();
        Ok(path.into_iter().map(|i| self.ids[i]).collect())
    }

    pub fn relabel_ids(&self, strategy: &Relabel) -> Result<Graph, GraphError> {
        let n = self.node_count() as u64;
        let new_ids: Vec<NodeId> = match strategy {
            Relabel::Sequential => (1..=n).map(NodeId).collect(),
            Relabel::RandomPerm { seed } => {
                let mut v: Vec<NodeId> = (1..=n).map(NodeId).collect();
                v.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                v
            }
            Relabel::Custom { map } => {
                if map.len() != self.node_count() {
                    return Err(GraphError::NotBijective(format!("map has {} entries for {} nodes", map.len(), n)));
                }
                let mut seen = BTreeSet::new();
                let mut out = Vec::with_capacity(self.ids.len());
                for id in &self.ids {
                    let new =
                        *map.get(id).ok_or_else(|| GraphError::NotBijective(format!("node {id} is not mapped")))?;
                    if !seen.insert(new) {
                        return Err(GraphError::NotBijective(format!("id {new} used twice")));
                    }
                    out.push(new);
                }
                out
            }
        };
        let edges: Vec<(NodeId, NodeId)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .map(|(i, j)| (new_ids[i], new_ids[j]))
            .collect();
        Graph::with_ids(new_ids, &edges)
    }

    // ---- dense-index helpers shared inside the crate ----

    pub(crate) fn idx(&self, v: NodeId) -> Result<usize, GraphError> {
        self.index.get(&v).copied().ok_or(GraphError::UnknownNode(v))
    }

    pub(crate) fn id_at(&self, i: usize) -> NodeId {
        self.ids[i]
    }

    pub(crate) fn adj_idx(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// BFS from a dense index, not expanding beyond `cap`. Unreached nodes
    /// (or those farther than `cap`) hold `u32::MAX`.
    pub(crate) fn bfs_idx(&self, s: usize, cap: u32) -> Vec<u32> {
        self.multi_bfs_idx(&[s], cap)
    }

    pub(crate) fn multi_bfs_idx(&self, sources: &[usize], cap: u32) -> Vec<u32> {
        let mut d = vec![u32::MAX; self.ids.len()];
        let mut q = VecDeque::new();
        for &s in sources {
            if d[s] != 0 {
                d[s] = 0;
                q.push_back(s);
            }
        }
        while let Some(x) = q.pop_front() {
            if d[x] >= cap {
                continue;
            }
            for &y in &self.adj[x] {
                if d[y] == u32::MAX {
                    d[y] = d[x] + 1;
                    q.push_back(y);
                }
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(n: usize) -> Graph {
        generate(&GraphKind::Path { n }, 0).unwrap()
    }

    fn ids(v: &[u64]) -> BTreeSet<NodeId> {
        v.iter().map(|&x| NodeId(x)).collect()
    }

    #[test]
    fn build_smallest_and_disconnected() {
        let g = Graph::from_edges(2, &[(1, 2)]).unwrap();
        assert_eq!(g.neighbors(NodeId(1)).unwrap(), vec![NodeId(2)]);
        assert!(matches!(Graph::from_edges(3, &[(1, 2)]), Err(GraphError::DisconnectedGraph(..))));
        assert_eq!(Graph::from_edges(2, &[(1, 1), (1, 2)]), Err(GraphError::SelfLoop(NodeId(1))));
        assert_eq!(Graph::with_ids(vec![NodeId(4), NodeId(4)], &[]), Err(GraphError::DuplicateNode(NodeId(4))));
        assert_eq!(Graph::from_edges(2, &[(1, 3)]), Err(GraphError::UnknownNode(NodeId(3))));
        assert!(Graph::from_edges(1, &[]).is_ok());
    }

    #[test]
    fn bfs_examples() {
        let g = path(5);
        assert_eq!(g.bfs_distances(NodeId(1)).unwrap().get(NodeId(5)), Some(4));
        let c6 = generate(&GraphKind::Cycle { n: 6 }, 0).unwrap();
        assert_eq!(c6.bfs_distances(NodeId(1)).unwrap().get(NodeId(4)), Some(3));
        let star = generate(&GraphKind::Star { n: 7 }, 0).unwrap();
        let d = star.bfs_distances(NodeId(1)).unwrap();
        assert!(d.iter().all(|(v, x)| if v == NodeId(1) { x == 0 } else { x == 1 }));
        assert_eq!(g.bfs_distances(NodeId(9)), Err(GraphError::UnknownNode(NodeId(9))));
    }

    #[test]
    fn ball_examples() {
        let g = path(10);
        assert_eq!(g.ball(NodeId(3), 2).unwrap(), ids(&[1, 2, 3, 4, 5]));
        assert_eq!(g.ball(NodeId(7), 0).unwrap(), ids(&[7]));
        assert_eq!(g.ball(NodeId(1), 100).unwrap().len(), 10);
    }

    #[test]
    fn shortest_path_examples() {
        let g = path(10);
        let p: Vec<u64> = g.shortest_path(NodeId(2), NodeId(6)).unwrap().iter().map(|v| v.0).collect();
        assert_eq!(p, vec![2, 3, 4, 5, 6]);
        assert_eq!(g.shortest_path(NodeId(4), NodeId(4)).unwrap(), vec![NodeId(4)]);
        // C4 = 1-2-3-4-1: the two candidates are [1,2,3] and [1,4,3]; the
        // predecessor of 3 is chosen as the smaller id, 2.
        let c4 = generate(&GraphKind::Cycle { n: 4 }, 0).unwrap();
        let p = c4.shortest_path(NodeId(1), NodeId(3)).unwrap();
        assert_eq!(p, vec![NodeId(1), NodeId(2), NodeId(3)]);
        assert_eq!(c4.shortest_path(NodeId(1), NodeId(3)).unwrap(), p);
    }

    #[test]
    fn relabel_strategies() {
        let g = generate(&GraphKind::Grid { rows: 3, cols: 4 }, 0).unwrap();
        let s = g.relabel_ids(&Relabel::Sequential).unwrap();
        assert_eq!(s.nodes(), (1..=12).map(NodeId).collect::<Vec<_>>().as_slice());
        let a = g.relabel_ids(&Relabel::RandomPerm { seed: 1 }).unwrap();
        let b = g.relabel_ids(&Relabel::RandomPerm { seed: 1 }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), g.edge_count());

        let mut map: BTreeMap<NodeId, NodeId> = g.nodes().iter().map(|&v| (v, v)).collect();
        map.insert(NodeId(1), NodeId(2));
        assert!(matches!(g.relabel_ids(&Relabel::Custom { map }), Err(GraphError::NotBijective(_))));
    }

    #[test]
    fn large_ids_are_fine() {
        let g = Graph::with_ids(
            vec![NodeId(1000), NodeId(7), NodeId(55)],
            &[(NodeId(1000), NodeId(7)), (NodeId(7), NodeId(55))],
        )
        .unwrap();
        assert_eq!(g.sorted_nodes(), vec![NodeId(7), NodeId(55), NodeId(1000)]);
        assert_eq!(g.distance(NodeId(1000), NodeId(55)).unwrap(), 2);
        assert_eq!(g.max_id(), NodeId(1000));
    }

    fn small_graph() -> impl Strategy<Value = Graph> {
        (2usize..30, any::<u64>(), 0.05f64..0.5).prop_map(|(n, seed, p)| {
            generate(&GraphKind::GnpConnected { n, p: p.max(2.5 / n as f64).min(1.0) }, seed).unwrap()
        })
    }

    proptest! {
        #[test]
        fn edge_distances_differ_by_at_most_one(g in small_graph(), s in 0usize..30) {
            let src = g.nodes()[s % g.node_count()];
            let d = g.bfs_distances(src).unwrap();
            for (a, b) in g.edges() {
                let (da, db) = (d.get(a).unwrap(), d.get(b).unwrap());
                prop_assert!(da.abs_diff(db) <= 1);
            }
        }

        #[test]
        fn balls_are_nested(g in small_graph(), s in 0usize..30) {
            let v = g.nodes()[s % g.node_count()];
            let ecc = g.bfs_distances(v).unwrap().max();
            let mut prev = g.ball(v, 0).unwrap();
            for t in 1..=ecc + 1 {
                let cur = g.ball(v, t).unwrap();
                prop_assert!(prev.is_subset(&cur));
                prev = cur;
            }
            prop_assert_eq!(prev.len(), g.node_count());
        }
    }

    #[test]
    fn shortest_paths_match_bfs_exhaustively() {
        for seed in 0..6 {
            let g = generate(&GraphKind::GnpConnected { n: 50, p: 0.08 }, seed).unwrap();
            for &u in g.nodes() {
                let d = g.bfs_distances(u).unwrap();
                for &v in g.nodes() {
                    let p = g.shortest_path(u, v).unwrap();
                    assert_eq!(p.len() as u32 - 1, d.get(v).unwrap());
                    assert!(p.windows(2).all(|w| g.has_edge(w[0], w[1])));
                }
            }
        }
    }
}
