//! The partitioning algorithm as a node program.
//!
//! Phases and their lengths:
//!
//! | phase      | rounds | work                                           |
//! |------------|--------|------------------------------------------------|
//! | `bfs`      | 2f+1   | BFS waves from ruling-set members              |
//! | `children` | 1      | every node tells its parent                    |
//! | `groups`   | 3f+2   | remainders up, group identifiers down          |
//! | `upgroup`  | f+1    | first identifier seen from below goes up       |
//! | `rootdown` | f+1    | roots with a remainder hand their group down   |

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::local::{compute_groups_local, relay_groups_local, ComputeOutcome};
use super::{PartitionError, PartitionResult};
use crate::bits::{ceil_log2, width_for};
use crate::congest::{
    message, run, Inbox, NodeContext, Outbox, Phased, PhasedProgram, ProgramError, Reader, RunMetrics, Schedule,
    SimConfig,
};
use crate::graph::{Graph, NodeId};
use crate::rulingset::RulingSet;

const BFS: u8 = 0;
const NOTIFY: u8 = 1;
const REMAIN: u8 = 2;
const GROUP: u8 = 3;
const UP: u8 = 4;
const DOWN: u8 = 5;

pub const PHASE_BFS: usize = 0;
pub const PHASE_CHILDREN: usize = 1;
pub const PHASE_GROUPS: usize = 2;
pub const PHASE_UPGROUP: usize = 3;
pub const PHASE_ROOTDOWN: usize = 4;

pub fn partition_schedule(f: usize) -> Schedule {
    let f = f as u64;
    let mut s = Schedule::new();
    s.push("bfs", 2 * f + 1);
    s.push("children", 1);
    s.push("groups", 3 * f + 2);
    s.push("upgroup", f + 1);
    s.push("rootdown", f + 1);
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionNodeOutput {
    pub group: Option<NodeId>,
    pub leader: Option<NodeId>,
    pub parent: Option<NodeId>,
    pub shortcuts: BTreeMap<NodeId, BTreeSet<NodeId>>,
    /// Groups whose identifier arrived from the parent, i.e. the groups for
    /// which the edge to the parent is a shortcut edge.
    pub up_groups: BTreeSet<NodeId>,
}

#[derive(Clone, Debug)]
pub struct PartitionNode {
    id: NodeId,
    f: usize,
    id_bits: usize,
    remain_bits: usize,
    in_s: bool,
    root: Option<NodeId>,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    child_remain: BTreeMap<NodeId, usize>,
    outcome: Option<ComputeOutcome>,
    group: Option<NodeId>,
    shortcuts: BTreeMap<NodeId, BTreeSet<NodeId>>,
    /// Children that received an identifier while groups were formed.
    assigned: BTreeSet<NodeId>,
    /// First identifier learned from below and the child it came from.
    up: Option<(NodeId, NodeId)>,
    up_groups: BTreeSet<NodeId>,
}

fn fault(msg: &str) -> ProgramError {
    ProgramError(format!("partition: {msg}"))
}

impl PartitionNode {
    /// `id_bits` must fit every node id.
    pub fn new(id: NodeId, f: usize, id_bits: usize, in_s: bool) -> Self {
        PartitionNode {
            id,
            f,
            id_bits,
            remain_bits: ceil_log2(2 * f as u64 + 2),
            in_s,
            root: None,
            parent: None,
            children: Vec::new(),
            child_remain: BTreeMap::new(),
            outcome: None,
            group: None,
            shortcuts: BTreeMap::new(),
            assigned: BTreeSet::new(),
            up: None,
            up_groups: BTreeSet::new(),
        }
    }

    fn id_msg(&self, tag: u8, v: NodeId) -> crate::bits::Bits {
        message(tag, &[(v.0, self.id_bits)])
    }

    fn read_id(&self, m: &crate::bits::BitStr) -> Option<NodeId> {
        Reader::body(m).uint(self.id_bits).map(NodeId)
    }

    /// `(sender, id)` for every message with `tag`.
    fn ids_with_tag(&self, inbox: &Inbox, tag: u8) -> Vec<(NodeId, NodeId)> {
        inbox
            .iter()
            .filter(|(_, m)| Reader::tag(m) == Some(tag))
            .filter_map(|(from, m)| self.read_id(m).map(|v| (from, v)))
            .collect()
    }

    fn adopt_tree(&mut self, inbox: &Inbox) -> bool {
        let waves = self.ids_with_tag(inbox, BFS);
        let Some(root) = waves.iter().map(|w| w.1).min() else { return false };
        self.root = Some(root);
        self.parent = waves.iter().filter(|w| w.1 == root).map(|w| w.0).min();
        true
    }

    fn kids(&self) -> Vec<(NodeId, usize)> {
        self.children.iter().map(|c| (*c, self.child_remain[c])).collect()
    }

    fn send_group(&mut self, out: &mut Outbox, tag: u8, child: NodeId, group: NodeId) {
        out.send(child, self.id_msg(tag, group));
        self.shortcuts.entry(group).or_default().insert(child);
    }

    fn compute(&mut self, out: &mut Outbox) {
        let res = compute_groups_local(self.id, self.in_s, &self.kids(), self.f);
        if !self.in_s {
            let p = self.parent.expect("non-root has a parent");
            out.send(p, message(REMAIN, &[(res.remain as u64, self.remain_bits)]));
        }
        for &(pos, g) in &res.messages {
            let c = self.children[pos - 1];
            self.assigned.insert(c);
            self.send_group(out, GROUP, c, g);
        }
        self.group = res.own_group;
        self.outcome = Some(res);
    }

    fn relay_targets(&self, group: NodeId) -> Vec<NodeId> {
        let last_end = self.outcome.as_ref().map_or(0, |o| o.last_end);
        relay_groups_local(group, last_end, &self.kids()).into_iter().map(|(pos, _)| self.children[pos - 1]).collect()
    }

    fn group_from_parent(&self, inbox: &Inbox, tag: u8) -> Option<NodeId> {
        let p = self.parent?;
        self.ids_with_tag(inbox, tag).into_iter().find(|m| m.0 == p).map(|m| m.1)
    }

    fn note_from_parent(&mut self, inbox: &Inbox) {
        for tag in [GROUP, DOWN] {
            if let Some(g) = self.group_from_parent(inbox, tag) {
                self.up_groups.insert(g);
            }
        }
    }

    fn record_remains(&mut self, inbox: &Inbox) -> Result<(), ProgramError> {
        for (from, m) in inbox.iter() {
            if Reader::tag(m) == Some(REMAIN) {
                let r = Reader::body(m).uint(self.remain_bits).ok_or_else(|| fault("short remain"))?;
                self.child_remain.insert(from, r as usize);
            }
        }
        Ok(())
    }

    fn first_from_below(&self, inbox: &Inbox) -> Option<(NodeId, NodeId)> {
        let ups = self.ids_with_tag(inbox, UP);
        let g = ups.iter().map(|u| u.1).min()?;
        let via = ups.iter().filter(|u| u.1 == g).map(|u| u.0).min()?;
        Some((g, via))
    }

    fn down_targets(&self, group: NodeId) -> Vec<NodeId> {
        let mut t: Vec<NodeId> =
            self.children.iter().copied().filter(|c| self.child_remain[c] > 0 && !self.assigned.contains(c)).collect();
        if let Some((g, via)) = self.up {
            if g == group && !t.contains(&via) {
                t.push(via);
            }
        }
        t
    }

    pub fn output(&self) -> PartitionNodeOutput {
        PartitionNodeOutput {
            group: self.group,
            leader: self.root,
            parent: self.parent,
            shortcuts: self.shortcuts.clone(),
            up_groups: self.up_groups.clone(),
        }
    }
}

impl PhasedProgram for PartitionNode {
    type Output = PartitionNodeOutput;

    fn round(&mut self, phase: usize, k: u64, inbox: &Inbox, out: &mut Outbox) -> Result<(), ProgramError> {
        self.note_from_parent(inbox);
        match phase {
            PHASE_BFS => {
                if self.in_s {
                    if k == 1 {
                        self.root = Some(self.id);
                        out.broadcast(&self.id_msg(BFS, self.id));
                    }
                } else if self.root.is_none() && self.adopt_tree(inbox) && k - 1 < 2 * self.f as u64 + 1 {
                    out.broadcast(&self.id_msg(BFS, self.root.unwrap()));
                }
            }
            PHASE_CHILDREN => {
                if let Some(p) = self.parent {
                    out.send(p, message(NOTIFY, &[]));
                }
            }
            PHASE_GROUPS => {
                self.record_remains(inbox)?;
                if self.outcome.is_none() && self.child_remain.len() == self.children.len() {
                    self.compute(out);
                }
                if let Some(g) = self.group_from_parent(inbox, GROUP) {
                    if self.group.is_some() || self.outcome.is_none() {
                        return Err(fault("identifier for a node that needs none"));
                    }
                    self.group = Some(g);
                    for c in self.relay_targets(g) {
                        self.assigned.insert(c);
                        self.send_group(out, GROUP, c, g);
                    }
                }
            }
            PHASE_UPGROUP => {
                if let (Some(g), false) = (self.group, self.in_s) {
                    if k == 1 {
                        out.send(self.parent.unwrap(), self.id_msg(UP, g));
                    }
                } else if self.group.is_none() && self.up.is_none() {
                    self.up = self.first_from_below(inbox);
                    if let (Some((g, _)), false) = (self.up, self.in_s) {
                        out.send(self.parent.unwrap(), self.id_msg(UP, g));
                    }
                }
            }
            PHASE_ROOTDOWN => {
                let g = if self.in_s && self.group.is_none() && k == 1 {
                    Some(self.up.ok_or_else(|| fault("root heard no identifier"))?.0)
                } else if self.group.is_none() {
                    self.group_from_parent(inbox, DOWN)
                } else {
                    None
                };
                if let Some(g) = g {
                    self.group = Some(g);
                    for c in self.down_targets(g) {
                        self.send_group(out, DOWN, c, g);
                    }
                }
            }
            _ => return Err(fault("unknown phase")),
        }
        Ok(())
    }

    fn end_phase(&mut self, phase: usize, inbox: &Inbox) -> Result<(), ProgramError> {
        self.note_from_parent(inbox);
        match phase {
            PHASE_BFS => {
                if self.root.is_none() && !self.adopt_tree(inbox) {
                    return Err(fault("no BFS tree reached this node"));
                }
            }
            PHASE_CHILDREN => {
                self.children = inbox.iter().filter(|(_, m)| Reader::tag(m) == Some(NOTIFY)).map(|(v, _)| v).collect();
            }
            PHASE_GROUPS => {
                self.record_remains(inbox)?;
                if self.outcome.is_none() {
                    return Err(fault("phase overrun: remainders incomplete"));
                }
                if let Some(g) = self.group_from_parent(inbox, GROUP) {
                    if !self.relay_targets(g).is_empty() {
                        return Err(fault("phase overrun: relay pending"));
                    }
                    self.group = Some(g);
                }
            }
            PHASE_UPGROUP => {
                if self.group.is_none() && self.up.is_none() {
                    self.up = self.first_from_below(inbox);
                    if self.up.is_some() && !self.in_s {
                        return Err(fault("phase overrun: identifier not forwarded"));
                    }
                }
            }
            PHASE_ROOTDOWN => {
                if self.group.is_none() {
                    if let Some(g) = self.group_from_parent(inbox, DOWN) {
                        if !self.down_targets(g).is_empty() {
                            return Err(fault("phase overrun: root group not relayed"));
                        }
                        self.group = Some(g);
                    }
                }
                if self.group.is_none() {
                    return Err(fault("ended without a group"));
                }
            }
            _ => return Err(fault("unknown phase")),
        }
        Ok(())
    }

    fn output(&self) -> PartitionNodeOutput {
        PartitionNode::output(self)
    }
}

/// Collects per-node outputs into a [`PartitionResult`].
pub fn assemble(
    f: usize,
    outputs: impl IntoIterator<Item = (NodeId, PartitionNodeOutput)>,
) -> Result<PartitionResult, PartitionError> {
    let mut pr = PartitionResult { f, ..Default::default() };
    for (v, o) in outputs {
        pr.group_of.insert(v, o.group.ok_or(PartitionError::Incomplete(v))?);
        pr.leader.insert(v, o.leader.ok_or(PartitionError::Incomplete(v))?);
        pr.tree_parent.insert(v, o.parent);
        if !o.shortcuts.is_empty() {
            pr.shortcuts.insert(v, o.shortcuts);
        }
    }
    Ok(pr)
}

/// Runs the program on its own, with ruling-set bits taken from `rs`.
pub fn partition_distributed(
    g: &Graph,
    rs: &RulingSet,
    f: usize,
    cfg: &SimConfig,
) -> Result<(PartitionResult, RunMetrics), PartitionError> {
    let schedule = Arc::new(partition_schedule(f));
    let id_bits = width_for(g.max_id().0);
    let make =
        |ctx: &NodeContext| Phased::new(PartitionNode::new(ctx.id, f, id_bits, rs.contains(ctx.id)), schedule.clone());
    let outcome = run(g, cfg, make)?;
    let mut metrics = outcome.metrics;
    metrics.phases = schedule.phases().to_vec();
    Ok((assemble(f, outcome.outputs)?, metrics))
}
