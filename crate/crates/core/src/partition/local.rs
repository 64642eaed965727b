//! The two per-node procedures that turn subtree remainders into groups.

use crate::graph::NodeId;

/// Positions are 1-based into `order(u) = (w_1, …, w_r, u)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupSpec {
    pub start: usize,
    pub end: usize,
    pub group: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComputeOutcome {
    pub groups: Vec<GroupSpec>,
    /// `(child position, group)` for every grouped child with a positive
    /// remainder; each is also a shortcut edge `(u, child)`.
    pub messages: Vec<(usize, NodeId)>,
    pub remain: usize,
    /// Set when `u` belongs to one of its own groups.
    pub own_group: Option<NodeId>,
    /// End of the last group before any root extension (0 without groups).
    pub last_end: usize,
}

/// Scans `order(u)` accumulating remainders and closes a group whenever the
/// count reaches `f+1`. A group is named after its first member with a
/// positive remainder, so the name always belongs to the group.
///
/// `children` are `(id, remain)` sorted by id; `u` itself counts 1.
pub fn compute_groups_local(u: NodeId, in_s: bool, children: &[(NodeId, usize)], f: usize) -> ComputeOutcome {
    let r = children.len();
    let entry = |i: usize| if i <= r { children[i - 1] } else { (u, 1) };
    let mut groups = Vec::new();
    let mut count = 0;
    let mut start = 1;
    for i in 1..=r + 1 {
        count += entry(i).1;
        if count > f {
            let name = (start..=i).map(entry).find(|e| e.1 > 0).expect("positive count").0;
            groups.push(GroupSpec { start, end: i, group: name });
            count = 0;
            start = i + 1;
        }
    }
    let last_end = groups.last().map_or(0, |g| g.end);
    if in_s {
        if let Some(last) = groups.last_mut() {
            last.end = r + 1;
        }
    }
    let own_group = groups.last().filter(|g| g.end == r + 1).map(|g| g.group);
    let remain = if own_group.is_some() { 0 } else { children[last_end..].iter().map(|c| c.1).sum::<usize>() + 1 };
    let messages = groups
        .iter()
        .flat_map(|g| (g.start..=g.end.min(r)).map(move |i| (i, g.group)))
        .filter(|&(i, _)| children[i - 1].1 > 0)
        .collect();
    ComputeOutcome { groups, messages, remain, own_group, last_end }
}

/// Children `last_end+1 ..= r` with a positive remainder inherit `group`.
pub fn relay_groups_local(group: NodeId, last_end: usize, children: &[(NodeId, usize)]) -> Vec<(usize, NodeId)> {
    (last_end + 1..=children.len()).filter(|&i| children[i - 1].1 > 0).map(|i| (i, group)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(x: u64) -> NodeId {
        NodeId(x)
    }

    #[test]
    fn inner_path_node() {
        let out = compute_groups_local(n(2), false, &[(n(3), 1)], 1);
        assert_eq!(out.groups, vec![GroupSpec { start: 1, end: 2, group: n(3) }]);
        assert_eq!(out.messages, vec![(1, n(3))]);
        assert_eq!(out.remain, 0);
        assert_eq!(out.own_group, Some(n(3)));
    }

    #[test]
    fn root_with_finished_child() {
        let out = compute_groups_local(n(5), true, &[(n(4), 1), (n(6), 0)], 1);
        assert_eq!(out.groups, vec![GroupSpec { start: 1, end: 3, group: n(4) }]);
        assert_eq!(out.messages, vec![(1, n(4))]);
        assert_eq!(out.remain, 0);
    }

    #[test]
    fn leaf() {
        let out = compute_groups_local(n(7), false, &[], 3);
        assert!(out.groups.is_empty());
        assert_eq!(out.remain, 1);
        assert_eq!(out.own_group, None);
    }

    #[test]
    fn leftovers_and_naming() {
        // f = 2: (0, 2, 1) closes a group at position 3 named after 11, then
        // 12 and u stay behind.
        let kids = [(n(10), 0), (n(11), 2), (n(12), 1), (n(13), 1)];
        let out = compute_groups_local(n(1), false, &kids, 2);
        assert_eq!(out.groups, vec![GroupSpec { start: 1, end: 3, group: n(11) }]);
        assert_eq!(out.messages, vec![(2, n(11)), (3, n(11))]);
        assert_eq!(out.last_end, 3);
        assert_eq!(out.remain, 2);
        assert_eq!(relay_groups_local(n(40), out.last_end, &kids), vec![(4, n(40))]);

        let root = compute_groups_local(n(1), true, &kids, 2);
        assert_eq!(root.groups, vec![GroupSpec { start: 1, end: 5, group: n(11) }]);
        assert_eq!(root.messages, vec![(2, n(11)), (3, n(11)), (4, n(11))]);
        assert_eq!(root.own_group, Some(n(11)));
    }

    #[test]
    fn relay_cases() {
        assert!(relay_groups_local(n(9), 0, &[]).is_empty());
        let kids = [(n(2), 2), (n(3), 1), (n(4), 1), (n(5), 1)];
        assert_eq!(relay_groups_local(n(9), 2, &kids), vec![(3, n(9)), (4, n(9))]);
    }
}
