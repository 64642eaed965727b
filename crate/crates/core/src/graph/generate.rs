use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, GraphError, NodeId};

const GNP_MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Path {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Star {
        n: usize,
    },
    Grid {
        rows: usize,
        cols: usize,
    },
    /// Random recursive tree: node `i` hangs off a uniform earlier node.
    RandomTree {
        n: usize,
    },
    /// G(n, p) resampled until connected.
    GnpConnected {
        n: usize,
        p: f64,
    },
    /// Path `w_0..w_{2f+1}` with `u`, `v` hanging off `w_{2f+1}` and a path
    /// of `tail` extra nodes hanging off `w_0`; `ID(v) < ID(w_0) < ID(u)`.
    IntroGadget {
        f: usize,
        #[serde(default)]
        tail: usize,
    },
}

impl GraphKind {
    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::Path { .. } => "path",
            GraphKind::Cycle { .. } => "cycle",
            GraphKind::Star { .. } => "star",
            GraphKind::Grid { .. } => "grid",
            GraphKind::RandomTree { .. } => "random_tree",
            GraphKind::GnpConnected { .. } => "gnp_connected",
            GraphKind::IntroGadget { .. } => "intro_gadget",
        }
    }

    pub fn node_count(&self) -> usize {
        match *self {
            GraphKind::Path { n }
            | GraphKind::Cycle { n }
            | GraphKind::Star { n }
            | GraphKind::RandomTree { n }
            | GraphKind::GnpConnected { n, .. } => n,
            GraphKind::Grid { rows, cols } => rows * cols,
            GraphKind::IntroGadget { f, tail } => 2 * f + 4 + tail,
        }
    }
}

/// Node roles in the intro gadget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetRoles {
    pub v: NodeId,
    pub u: NodeId,
    /// `w[i]` is `w_i` for `0 ≤ i ≤ 2f+1`.
    pub w: Vec<NodeId>,
    pub tail: Vec<NodeId>,
}

pub fn gadget_roles(f: usize, tail: usize) -> GadgetRoles {
    let path_len = 2 * f + 2;
    GadgetRoles {
        v: NodeId(1),
        w: (0..path_len as u64).map(|i| NodeId(i + 2)).collect(),
        u: NodeId(path_len as u64 + 2),
        tail: (0..tail as u64).map(|i| NodeId(path_len as u64 + 3 + i)).collect(),
    }
}

fn invalid(msg: impl Into<String>) -> GraphError {
    GraphError::InvalidParams(msg.into())
}

pub fn generate(kind: &GraphKind, seed: u64) -> Result<Graph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *kind {
        GraphKind::Path { n } => {
            if n == 0 {
                return Err(invalid("path needs n >= 1"));
            }
            let edges: Vec<(u64, u64)> = (1..n as u64).map(|i| (i, i + 1)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Cycle { n } => {
            if n < 3 {
                return Err(invalid("cycle needs n >= 3"));
            }
            let mut edges: Vec<(u64, u64)> = (1..n as u64).map(|i| (i, i + 1)).collect();
            edges.push((n as u64, 1));
            Graph::from_edges(n, &edges)
        }
        GraphKind::Star { n } => {
            if n == 0 {
                return Err(invalid("star needs n >= 1"));
            }
            let edges: Vec<(u64, u64)> = (2..=n as u64).map(|i| (1, i)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(invalid("grid needs rows, cols >= 1"));
            }
            let id = |r: usize, c: usize| (r * cols + c + 1) as u64;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Graph::from_edges(rows * cols, &edges)
        }
        GraphKind::RandomTree { n } => {
            if n == 0 {
                return Err(invalid("tree needs n >= 1"));
            }
            let edges: Vec<(u64, u64)> = (2..=n as u64).map(|i| (rng.random_range(1..i), i)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::GnpConnected { n, p } => {
            if n == 0 || !(0.0..=1.0).contains(&p) {
                return Err(invalid("gnp needs n >= 1 and 0 <= p <= 1"));
            }
            for _ in 0..GNP_MAX_ATTEMPTS {
                let mut edges = Vec::new();
                for a in 1..=n as u64 {
                    for b in a + 1..=n as u64 {
                        if rng.random_bool(p) {
                            edges.push((a, b));
                        }
                    }
                }
                match Graph::from_edges(n, &edges) {
                    Ok(g) => return Ok(g),
                    Err(GraphError::DisconnectedGraph(..)) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(GraphError::GenerationFailed(format!("G({n}, {p}) not connected after {GNP_MAX_ATTEMPTS} attempts")))
        }
        GraphKind::IntroGadget { f, tail } => {
            if f == 0 {
                return Err(invalid("gadget needs f >= 1"));
            }
            let roles = gadget_roles(f, tail);
            let mut edges: Vec<(NodeId, NodeId)> = roles.w.windows(2).map(|w| (w[0], w[1])).collect();
            let end = *roles.w.last().unwrap();
            edges.push((end, roles.u));
            edges.push((end, roles.v));
            let mut prev = roles.w[0];
            for &t in &roles.tail {
                edges.push((prev, t));
                prev = t;
            }
            let mut ids = vec![roles.v];
            ids.extend(&roles.w);
            ids.push(roles.u);
            ids.extend(&roles.tail);
            Graph::with_ids(ids, &edges)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_and_determinism() {
        let g = generate(&GraphKind::Path { n: 10 }, 3).unwrap();
        assert_eq!(g.node_count(), 10);
        assert_eq!(g.edge_count(), 9);
        let a = generate(&GraphKind::GnpConnected { n: 50, p: 0.1 }, 7).unwrap();
        let b = generate(&GraphKind::GnpConnected { n: 50, p: 0.1 }, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
        let c = generate(&GraphKind::RandomTree { n: 40 }, 7).unwrap();
        assert_eq!(c.edge_count(), 39);
    }

    #[test]
    fn gadget_core_distances() {
        for f in 1..5 {
            let g = generate(&GraphKind::IntroGadget { f, tail: 0 }, 0).unwrap();
            assert_eq!(g.node_count(), 2 * f + 4);
            let r = gadget_roles(f, 0);
            let d = g.bfs_distances(r.w[0]).unwrap();
            assert_eq!(d.get(r.u), Some(2 * f as u32 + 2));
            assert_eq!(d.get(r.v), Some(2 * f as u32 + 2));
            assert!(r.v < r.w[0] && r.w[0] < r.u);
        }
        assert_eq!(generate(&GraphKind::IntroGadget { f: 2, tail: 0 }, 0).unwrap().node_count(), 8);
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(generate(&GraphKind::Cycle { n: 2 }, 0), Err(GraphError::InvalidParams(_))));
        assert!(matches!(
            generate(&GraphKind::GnpConnected { n: 40, p: 0.0 }, 0),
            Err(GraphError::GenerationFailed(_))
        ));
    }
}
