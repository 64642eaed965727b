use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::congest::default_bandwidth;
use crate::graph::{generate, GraphKind, Relabel};
use crate::rulingset::{greedy_ruling_set, is_alternative_with, AlternativeReading, RulingSet};

fn cfg(g: &Graph, f: usize) -> SimConfig {
    SimConfig::new(default_bandwidth(g.max_id().0.max(g.node_count() as u64), f), 10_000)
}

fn zeta(rs: &RulingSet, erased: &BTreeSet<NodeId>) -> BTreeMap<NodeId, Option<(bool, u32)>> {
    rs.entries().map(|(v, b, d)| (v, (!erased.contains(&v)).then_some((b, d)))).collect()
}

/// Runs restore and checks every property that does not depend on the
/// alternative-node reading. Returns the outputs.
fn check(g: &Graph, f: usize, rs: &RulingSet, erased: &BTreeSet<NodeId>) -> BTreeMap<NodeId, RestoreOutput> {
    let (outs, m) = restore_distributed(g, f, &zeta(rs, erased), &cfg(g, f))
        .unwrap_or_else(|e| panic!("erased {erased:?} f {f}: {e}"));
    assert!(m.rounds_used <= restore_round_bound(f));
    assert_eq!(restored_set(&outs).as_ref(), Some(rs.members()), "erased {erased:?} f {f}");
    for (v, o) in &outs {
        assert_eq!(o.decided == Some(Decision::Input), !erased.contains(v));
    }
    // Step-6 distances are exact for every node still undecided then.
    let late: Vec<NodeId> = erased
        .iter()
        .copied()
        .filter(|u| matches!(outs[u].decided, Some(Decision::Refuted | Decision::NearestMin)))
        .collect();
    for &u in &late {
        let d = g.bfs_distances(u).unwrap();
        for (w, o) in &outs {
            let want = d.get(*w).filter(|&x| x <= f as u32 + 1);
            assert_eq!(o.dist_u.get(&u).copied(), want, "dist_{u}({w})");
        }
    }
    outs
}

fn subsets(nodes: &[NodeId], k: usize) -> Vec<BTreeSet<NodeId>> {
    let mut out = vec![BTreeSet::new()];
    for size in 1..=k {
        let mut idx: Vec<usize> = (0..size).collect();
        if size > nodes.len() {
            break;
        }
        loop {
            out.push(idx.iter().map(|&i| nodes[i]).collect());
            let Some(p) = (0..size).rev().find(|&p| idx[p] < nodes.len() - size + p) else { break };
            idx[p] += 1;
            for q in p + 1..size {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    out
}

fn small_suite() -> Vec<Graph> {
    let mut out = Vec::new();
    let kinds = [
        GraphKind::Path { n: 10 },
        GraphKind::Path { n: 12 },
        GraphKind::Cycle { n: 9 },
        GraphKind::Cycle { n: 12 },
        GraphKind::Star { n: 8 },
        GraphKind::Grid { rows: 3, cols: 4 },
        GraphKind::RandomTree { n: 12 },
        GraphKind::GnpConnected { n: 11, p: 0.25 },
        GraphKind::IntroGadget { f: 2, tail: 4 },
    ];
    for kind in &kinds {
        for seed in 0..2 {
            let g = generate(kind, seed).unwrap();
            out.push(g.relabel_ids(&Relabel::RandomPerm { seed }).unwrap());
            if seed == 0 {
                out.push(g);
            }
        }
    }
    out
}

#[test]
fn bound_formula() {
    assert_eq!(restore_round_bound(1), 25);
    assert_eq!(restore_round_bound(2), 36);
    for f in 1..20 {
        assert_eq!(restore_round_bound(f), 11 * f as u64 + 14);
    }
}

#[test]
fn p10_hand_traces() {
    let g = generate(&GraphKind::Path { n: 10 }, 0).unwrap();
    let rs = greedy_ruling_set(&g, 1).unwrap();
    let outs = check(&g, 1, &rs, &[NodeId(5)].into());
    assert_eq!(outs[&NodeId(5)].decided, Some(Decision::Alone));
    let outs = check(&g, 1, &rs, &[NodeId(4)].into());
    assert_eq!(outs[&NodeId(4)].decided, Some(Decision::HeardOne));
    assert_eq!(outs[&NodeId(4)].b, Some(false));
}

#[test]
fn exhaustive_small_suite() {
    let mut runs = 0;
    for g in small_suite() {
        let nodes = g.sorted_nodes();
        for f in 1..=2 {
            let rs = greedy_ruling_set(&g, f).unwrap();
            for erased in subsets(&nodes, f) {
                check(&g, f, &rs, &erased);
                runs += 1;
            }
        }
    }
    assert!(runs > 1000);
}

#[test]
fn step10_pairs_are_alternative() {
    // Every pair (u, v ∈ X(u)) left for the last step must be alternative;
    // checked in the reading that leaves u and v out of the count.
    for g in small_suite() {
        let nodes = g.sorted_nodes();
        for f in 1..=2 {
            let rs = greedy_ruling_set(&g, f).unwrap();
            for erased in subsets(&nodes, f) {
                let outs = check(&g, f, &rs, &erased);
                for u in &erased {
                    for &v in &outs[u].x {
                        assert!(
                            is_alternative_with(&g, *u, v, f, AlternativeReading::ExcludeEndpoints).unwrap(),
                            "u {u} v {v} f {f}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn larger_graphs_random_and_near_members() {
    let kinds = [
        GraphKind::Path { n: 300 },
        GraphKind::Grid { rows: 15, cols: 15 },
        GraphKind::RandomTree { n: 250 },
        GraphKind::GnpConnected { n: 200, p: 0.02 },
        GraphKind::IntroGadget { f: 4, tail: 30 },
    ];
    for kind in &kinds {
        let g = generate(kind, 9).unwrap().relabel_ids(&Relabel::RandomPerm { seed: 9 }).unwrap();
        for f in [1, 2, 4, 8] {
            let rs = greedy_ruling_set(&g, f).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(f as u64);
            for trial in 0..6 {
                let erased: BTreeSet<NodeId> = if trial % 2 == 0 {
                    g.nodes().iter().copied().sample(&mut rng, f).into_iter().collect()
                } else {
                    // Members of S and their nearest neighbors.
                    let mut set = BTreeSet::new();
                    for &v in rs.members().iter().sample(&mut rng, f.div_ceil(2)) {
                        set.insert(v);
                        if let Some(&w) = g.neighbors(v).unwrap().first() {
                            set.insert(w);
                        }
                    }
                    set.into_iter().take(f).collect()
                };
                check(&g, f, &rs, &erased);
            }
        }
    }
}
