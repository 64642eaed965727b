use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::local::{compute_groups_local, relay_groups_local, ComputeOutcome};
use super::{PartitionError, PartitionResult};
use crate::graph::{Graph, NodeId};
use crate::rulingset::RulingSet;

/// Sequential simulation of the partitioning algorithm.
pub fn partition_centralized(g: &Graph, rs: &RulingSet, f: usize) -> Result<PartitionResult, PartitionError> {
    let n = g.node_count();
    if n < f + 1 {
        return Err(PartitionError::GraphTooSmall { n, need: f + 1 });
    }
    let in_s: Vec<bool> = (0..n).map(|i| rs.contains(g.id_at(i))).collect();
    let roots: Vec<usize> = (0..n).filter(|&i| in_s[i]).collect();
    if roots.is_empty() {
        return Err(PartitionError::EmptyRulingSet);
    }
    let dist = g.multi_bfs_idx(&roots, 2 * f as u32 + 1);
    if let Some(i) = (0..n).find(|&i| dist[i] == u32::MAX) {
        return Err(PartitionError::Incomplete(g.id_at(i)));
    }
    let id = |i: usize| g.id_at(i);

    let mut by_depth: Vec<usize> = (0..n).collect();
    by_depth.sort_by_key(|&i| (dist[i], id(i)));

    let mut leader = vec![usize::MAX; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for &i in &by_depth {
        if in_s[i] {
            leader[i] = i;
            continue;
        }
        let preds = || g.adj_idx(i).iter().copied().filter(|&j| dist[j] + 1 == dist[i]);
        let l = preds().map(|j| leader[j]).min_by_key(|&l| id(l)).expect("BFS predecessor");
        leader[i] = l;
        parent[i] = preds().filter(|&j| leader[j] == l).min_by_key(|&j| id(j));
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &i in &by_depth {
        if let Some(p) = parent[i] {
            children[p].push(i);
        }
    }
    for c in &mut children {
        c.sort_by_key(|&j| id(j));
    }

    let mut remain = vec![0usize; n];
    let mut outcome: Vec<Option<ComputeOutcome>> = vec![None; n];
    let mut group: Vec<Option<NodeId>> = vec![None; n];
    let mut from_parent: Vec<Option<NodeId>> = vec![None; n];
    let mut h: Vec<BTreeMap<NodeId, BTreeSet<NodeId>>> = vec![BTreeMap::new(); n];
    let kids = |i: usize, remain: &[usize]| -> Vec<(NodeId, usize)> {
        children[i].iter().map(|&c| (id(c), remain[c])).collect()
    };

    for &i in by_depth.iter().rev() {
        let out = compute_groups_local(id(i), in_s[i], &kids(i, &remain), f);
        remain[i] = out.remain;
        group[i] = out.own_group;
        for &(pos, gid) in &out.messages {
            let c = children[i][pos - 1];
            from_parent[c] = Some(gid);
            h[i].entry(gid).or_default().insert(id(c));
        }
        outcome[i] = Some(out);
    }

    for &i in &by_depth {
        let Some(gid) = from_parent[i] else { continue };
        if group[i].is_some() {
            continue;
        }
        group[i] = Some(gid);
        let last_end = outcome[i].as_ref().unwrap().last_end;
        for (pos, gid) in relay_groups_local(gid, last_end, &kids(i, &remain)) {
            let c = children[i][pos - 1];
            from_parent[c] = Some(gid);
            h[i].entry(gid).or_default().insert(id(c));
        }
    }

    // Root remainder. `up[i] = (send round, group)` of the first identifier
    // node `i` learns about from below, `via[i]` the child it came from.
    let mut up: Vec<Option<(u64, NodeId)>> = vec![None; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    for &i in by_depth.iter().rev() {
        if !in_s[i] && group[i].is_some() {
            up[i] = Some((1, group[i].unwrap()));
            continue;
        }
        let best = children[i].iter().filter_map(|&c| up[c].map(|u| (u, id(c), c))).min();
        if let Some(((t, gid), _, c)) = best {
            up[i] = Some((t + 1, gid));
            via[i] = Some(c);
        }
    }
    let mut queue = VecDeque::new();
    for &v in &roots {
        if group[v].is_some() {
            continue;
        }
        let (_, gid) = up[v].ok_or(PartitionError::Incomplete(id(v)))?;
        group[v] = Some(gid);
        queue.push_back(v);
    }
    while let Some(u) = queue.pop_front() {
        let gid = group[u].unwrap();
        let mut targets: Vec<usize> = children[u].iter().copied().filter(|&c| group[c].is_none()).collect();
        if let Some(c) = via[u] {
            if up[u].map(|x| x.1) == Some(gid) && !targets.contains(&c) {
                targets.push(c);
            }
        }
        for c in targets {
            h[u].entry(gid).or_default().insert(id(c));
            if group[c].is_none() {
                group[c] = Some(gid);
                queue.push_back(c);
            }
        }
    }

    let mut pr = PartitionResult { f, ..Default::default() };
    for i in 0..n {
        let v = id(i);
        pr.group_of.insert(v, group[i].ok_or(PartitionError::Incomplete(v))?);
        pr.leader.insert(v, id(leader[i]));
        pr.tree_parent.insert(v, parent[i].map(id));
        let hi = std::mem::take(&mut h[i]);
        if !hi.is_empty() {
            pr.shortcuts.insert(v, hi);
        }
    }
    Ok(pr)
}
