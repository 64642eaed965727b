//! Every node learns `(id, payload)` for all members of its group.
//!
//! Each group communicates over its shortcut tree `H_g`, a subtree of the
//! BFS tree. Three phases run on all trees in parallel:
//!
//! 1. `collect-count`: member counts are convergecast to the tree's top.
//! 2. `collect-up`: items stream to the top, each node forwarding its own
//!    item followed by its children's streams in id order (cut-through).
//! 3. `collect-down`: the top streams the member count and all items back
//!    down every tree edge.
//!
//! A directed edge serves at most two trees; messages carry a one-bit tree
//! selector and the edge alternates between trees with pending data.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{PartitionNodeOutput, PartitionResult};
use crate::bits::{push_uint, read_uint, width_for, BitStr, Bits};
use crate::congest::{
    message, run, Inbox, NodeContext, Outbox, Phased, PhasedProgram, ProgramError, Reader, RunMetrics, Schedule,
    SimConfig, SimError, TAG_BITS,
};
use crate::graph::{Graph, NodeId};

const COUNT: u8 = 0;
const UPC: u8 = 1;
const DOWNC: u8 = 2;

pub const PHASE_COUNT: usize = 0;
pub const PHASE_UP: usize = 1;
pub const PHASE_DOWN: usize = 2;

/// Header bits in front of every chunk: tag and tree selector.
const CHUNK_HEADER: usize = TAG_BITS + 1;

fn count_bits(f: usize) -> usize {
    width_for(3 * f as u64 + 1)
}

/// Phase lengths for items of `item_bits` and bandwidth `bandwidth`.
pub fn collect_schedule(f: usize, item_bits: usize, bandwidth: usize) -> Schedule {
    let c = bandwidth.saturating_sub(CHUNK_HEADER).max(1) as u64;
    let f64_ = f as u64;
    let total = (3 * f64_ + 1) * item_bits as u64;
    let mut s = Schedule::new();
    s.push("collect-count", 2 * f64_ + 2);
    s.push("collect-up", 2 * f64_ + 2 * total.div_ceil(c) + 2);
    s.push("collect-down", 2 * f64_ + 2 * (total + count_bits(f) as u64).div_ceil(c) + 2);
    s
}

#[derive(Clone, Debug)]
struct Tree {
    group: NodeId,
    member: bool,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    child_counts: BTreeMap<NodeId, usize>,
    count: Option<usize>,
    count_sent: bool,
    child_streams: BTreeMap<NodeId, Bits>,
    /// Own item then children's streams in order, as far as contiguous.
    up: Bits,
    /// Child whose stream is being appended to `up`, and bits taken from it.
    cursor: (usize, usize),
    up_sent: usize,
    down: Bits,
    down_sent: BTreeMap<NodeId, usize>,
}

impl Tree {
    fn new(group: NodeId, member: bool, parent: Option<NodeId>, children: Vec<NodeId>) -> Self {
        Tree {
            group,
            member,
            parent,
            down_sent: children.iter().map(|&c| (c, 0)).collect(),
            children,
            child_counts: BTreeMap::new(),
            count: None,
            count_sent: false,
            child_streams: BTreeMap::new(),
            up: Bits::new(),
            cursor: (0, 0),
            up_sent: 0,
            down: Bits::new(),
        }
    }
}

pub type CollectOutput = Option<Vec<(NodeId, Bits)>>;

/// Per-node state of the collection program.
#[derive(Clone, Debug)]
pub struct CollectNode {
    id: NodeId,
    id_bits: usize,
    payload_bits: usize,
    count_bits: usize,
    chunk_bits: usize,
    item: Bits,
    trees: Vec<Tree>,
    /// Per neighbor: indices into `trees` in group order, and a rotation.
    edges: BTreeMap<NodeId, (Vec<usize>, usize)>,
    result: CollectOutput,
    setup_error: Option<String>,
}

fn fault(msg: impl std::fmt::Display) -> ProgramError {
    ProgramError(format!("collect: {msg}"))
}

impl CollectNode {
    /// `trees` lists `(group, member, parent, children)` for every shortcut
    /// tree this node belongs to.
    pub fn new(
        id: NodeId,
        f: usize,
        id_bits: usize,
        bandwidth: usize,
        payload: Bits,
        trees: Vec<(NodeId, bool, Option<NodeId>, Vec<NodeId>)>,
    ) -> Self {
        let mut item = Bits::new();
        push_uint(&mut item, id.0, id_bits);
        let payload_bits = payload.len();
        item.extend_from_bitslice(&payload);
        let mut trees: Vec<Tree> = trees.into_iter().map(|(g, m, p, c)| Tree::new(g, m, p, c)).collect();
        for t in trees.iter_mut().filter(|t| t.member) {
            t.up.extend_from_bitslice(&item);
        }
        trees.sort_by_key(|t| t.group);
        let mut edges: BTreeMap<NodeId, (Vec<usize>, usize)> = BTreeMap::new();
        for (i, t) in trees.iter().enumerate() {
            for v in t.parent.iter().chain(&t.children) {
                edges.entry(*v).or_default().0.push(i);
            }
        }
        let mut setup_error = None;
        if let Some((v, _)) = edges.iter().find(|(_, e)| e.0.len() > 2) {
            setup_error = Some(format!("edge to {v} serves more than two trees"));
        }
        if bandwidth <= CHUNK_HEADER || bandwidth < TAG_BITS + 1 + count_bits(f) {
            setup_error = Some(format!("bandwidth {bandwidth} too small"));
        }
        CollectNode {
            id,
            id_bits,
            payload_bits,
            count_bits: count_bits(f),
            chunk_bits: bandwidth.saturating_sub(CHUNK_HEADER),
            item,
            trees,
            edges,
            result: None,
            setup_error,
        }
    }

    /// Builds the per-node inputs from a partition result.
    pub fn from_partition(pr: &PartitionResult, id: NodeId, id_bits: usize, bandwidth: usize, payload: Bits) -> Self {
        let view = PartitionNodeOutput {
            group: pr.group_of.get(&id).copied(),
            leader: pr.leader.get(&id).copied(),
            parent: pr.tree_parent.get(&id).copied().flatten(),
            shortcuts: pr.shortcuts.get(&id).cloned().unwrap_or_default(),
            up_groups: pr.up_groups(id),
        };
        CollectNode::from_local(&view, id, pr.f, id_bits, bandwidth, payload)
    }

    /// Builds the inputs from what the partition program left at this node.
    pub fn from_local(
        local: &PartitionNodeOutput,
        id: NodeId,
        f: usize,
        id_bits: usize,
        bandwidth: usize,
        payload: Bits,
    ) -> Self {
        let mut groups: BTreeSet<NodeId> = local.up_groups.clone();
        groups.extend(local.group);
        groups.extend(local.shortcuts.keys());
        let trees = groups
            .into_iter()
            .map(|g| {
                let children = local.shortcuts.get(&g).map(|ws| ws.iter().copied().collect()).unwrap_or_default();
                let parent = if local.up_groups.contains(&g) { local.parent } else { None };
                (g, Some(g) == local.group, parent, children)
            })
            .collect();
        CollectNode::new(id, f, id_bits, bandwidth, payload, trees)
    }

    fn item_bits(&self) -> usize {
        self.id_bits + self.payload_bits
    }

    /// Selector of tree `t` on the edge to `v`.
    fn selector(&self, v: NodeId, t: usize) -> u64 {
        self.edges[&v].0.iter().position(|&i| i == t).unwrap() as u64
    }

    fn tree_on_edge(&self, v: NodeId, sel: u64) -> Result<usize, ProgramError> {
        self.edges
            .get(&v)
            .and_then(|e| e.0.get(sel as usize))
            .copied()
            .ok_or_else(|| fault(format!("message from {v} for an unknown tree")))
    }

    fn absorb(&mut self, inbox: &Inbox) -> Result<(), ProgramError> {
        for (from, m) in inbox.iter() {
            let tag = Reader::tag(m).ok_or_else(|| fault("empty message"))?;
            let mut r = Reader::body(m);
            let sel = r.uint(1).ok_or_else(|| fault("short message"))?;
            let t = self.tree_on_edge(from, sel)?;
            match tag {
                COUNT => {
                    let c = r.uint(self.count_bits).ok_or_else(|| fault("short count"))?;
                    self.trees[t].child_counts.insert(from, c as usize);
                }
                UPC => self.trees[t].child_streams.entry(from).or_default().extend_from_bitslice(r.rest()),
                DOWNC => self.trees[t].down.extend_from_bitslice(r.rest()),
                _ => return Err(fault("unknown tag")),
            }
        }
        Ok(())
    }

    fn settle_counts(&mut self) {
        for t in &mut self.trees {
            if t.count.is_none() && t.children.iter().all(|c| t.child_counts.contains_key(c)) {
                t.count = Some(usize::from(t.member) + t.child_counts.values().sum::<usize>());
            }
        }
    }

    /// Moves newly received child bits onto each tree's upward stream.
    fn advance(&mut self) {
        let ib = self.item_bits();
        for t in &mut self.trees {
            while let Some(&c) = t.children.get(t.cursor.0) {
                let expected = t.child_counts.get(&c).copied().unwrap_or(0) * ib;
                if let Some(buf) = t.child_streams.get_mut(&c) {
                    t.cursor.1 += buf.len();
                    t.up.extend_from_bitslice(buf);
                    buf.clear();
                }
                if t.cursor.1 < expected {
                    break;
                }
                t.cursor = (t.cursor.0 + 1, 0);
            }
        }
    }

    fn up_len(&self, t: usize) -> usize {
        self.trees[t].count.unwrap_or(0) * self.item_bits()
    }

    /// Sends one chunk per edge, rotating among the trees with data pending.
    fn pump(&mut self, out: &mut Outbox, tag: u8) {
        let neighbors: Vec<NodeId> = self.edges.keys().copied().collect();
        for v in neighbors {
            let (ids, rot) = self.edges[&v].clone();
            for k in 0..ids.len() {
                let t = ids[(rot + k) % ids.len()];
                let chunk = match tag {
                    UPC if self.trees[t].parent == Some(v) => {
                        let from = self.trees[t].up_sent;
                        let to = self.trees[t].up.len().min(from + self.chunk_bits);
                        (to > from).then(|| {
                            self.trees[t].up_sent = to;
                            self.trees[t].up[from..to].to_bitvec()
                        })
                    }
                    DOWNC if self.trees[t].down_sent.contains_key(&v) => {
                        let from = self.trees[t].down_sent[&v];
                        let to = self.trees[t].down.len().min(from + self.chunk_bits);
                        (to > from).then(|| {
                            self.trees[t].down_sent.insert(v, to);
                            self.trees[t].down[from..to].to_bitvec()
                        })
                    }
                    _ => None,
                };
                if let Some(chunk) = chunk {
                    let mut m = message(tag, &[(self.selector(v, t), 1)]);
                    m.extend_from_bitslice(&chunk);
                    out.send(v, m);
                    self.edges.get_mut(&v).unwrap().1 = (rot + k + 1) % ids.len();
                    break;
                }
            }
        }
    }

    fn send_counts(&mut self, out: &mut Outbox) {
        let mut used: BTreeSet<NodeId> = BTreeSet::new();
        for t in 0..self.trees.len() {
            let tree = &self.trees[t];
            let (Some(c), Some(p), false) = (tree.count, tree.parent, tree.count_sent) else { continue };
            if used.insert(p) {
                let m = message(COUNT, &[(self.selector(p, t), 1), (c as u64, self.count_bits)]);
                out.send(p, m);
                self.trees[t].count_sent = true;
            }
        }
    }

    fn tops_start_down(&mut self) -> Result<(), ProgramError> {
        for t in 0..self.trees.len() {
            if self.trees[t].parent.is_some() {
                continue;
            }
            let stream = self.trees[t].up.clone();
            if stream.len() != self.up_len(t) {
                return Err(fault(format!("phase overrun: group {} incomplete at its top", self.trees[t].group)));
            }
            let mut down = Bits::new();
            push_uint(&mut down, self.trees[t].count.unwrap() as u64, self.count_bits);
            down.extend_from_bitslice(&stream);
            self.trees[t].down = down;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), ProgramError> {
        let Some(t) = self.trees.iter().position(|t| t.member) else {
            return Err(fault("node is in no group"));
        };
        let down = &self.trees[t].down;
        let s = read_uint(down, 0, self.count_bits).ok_or_else(|| fault("phase overrun: no header"))? as usize;
        let ib = self.item_bits();
        if down.len() != self.count_bits + s * ib {
            return Err(fault(format!("phase overrun: {} of {} bits", down.len(), self.count_bits + s * ib)));
        }
        let items: &BitStr = &down[self.count_bits..];
        let mut list: Vec<(NodeId, Bits)> = items
            .chunks(ib.max(1))
            .take(s)
            .map(|it| (NodeId(read_uint(it, 0, self.id_bits).unwrap()), it[self.id_bits..].to_bitvec()))
            .collect();
        list.sort_by_key(|e| e.0);
        let own = list.binary_search_by_key(&self.id, |e| e.0).map(|i| &list[i].1);
        if own.ok() != Some(&self.item[self.id_bits..].to_bitvec()) {
            return Err(fault("own item missing from the group list"));
        }
        self.result = Some(list);
        Ok(())
    }
}

impl PhasedProgram for CollectNode {
    type Output = CollectOutput;

    fn round(&mut self, phase: usize, _k: u64, inbox: &Inbox, out: &mut Outbox) -> Result<(), ProgramError> {
        if let Some(e) = &self.setup_error {
            return Err(fault(e));
        }
        self.absorb(inbox)?;
        match phase {
            PHASE_COUNT => {
                self.settle_counts();
                self.send_counts(out);
            }
            PHASE_UP => {
                self.advance();
                self.pump(out, UPC);
            }
            PHASE_DOWN => self.pump(out, DOWNC),
            _ => return Err(fault("unknown phase")),
        }
        Ok(())
    }

    fn end_phase(&mut self, phase: usize, inbox: &Inbox) -> Result<(), ProgramError> {
        self.absorb(inbox)?;
        match phase {
            PHASE_COUNT => {
                self.settle_counts();
                if self.trees.iter().any(|t| t.count.is_none() || (t.parent.is_some() && !t.count_sent)) {
                    return Err(fault("phase overrun: counts incomplete"));
                }
                Ok(())
            }
            PHASE_UP => {
                self.advance();
                self.tops_start_down()
            }
            PHASE_DOWN => self.finish(),
            _ => Err(fault("unknown phase")),
        }
    }

    fn output(&self) -> CollectOutput {
        self.result.clone()
    }
}

/// Runs the collection on its own. `payloads` must all have the same length.
pub fn group_collect(
    g: &Graph,
    pr: &PartitionResult,
    payloads: &BTreeMap<NodeId, Bits>,
    cfg: &SimConfig,
) -> Result<(BTreeMap<NodeId, CollectOutput>, RunMetrics), SimError> {
    let id_bits = width_for(g.max_id().0);
    let y = payloads.values().next().map_or(0, |p| p.len());
    let schedule = Arc::new(collect_schedule(pr.f, id_bits + y, cfg.bandwidth));
    let make = |ctx: &NodeContext| {
        let node = CollectNode::from_partition(pr, ctx.id, id_bits, cfg.bandwidth, payloads[&ctx.id].clone());
        Phased::new(node, schedule.clone())
    };
    let outcome = run(g, cfg, make)?;
    let mut metrics = outcome.metrics;
    metrics.phases = schedule.phases().to_vec();
    Ok((outcome.outputs.into_iter().collect(), metrics))
}
