//! Restoring the greedy ruling-set bit `b(v)` at every node when at most `f`
//! nodes lost their `b ∥ distS` input.
//!
//! Five phases, each a distance-capped flood:
//!
//! | phase   | rounds | cap  | origin                                        |
//! |---------|--------|------|-----------------------------------------------|
//! | `ones`  | 2f+1   | 2f+1 | intact ruling-set members, a bare "1"         |
//! | `ids`   | 3f+1   | 2f+1 | undecided faulty nodes, own id                |
//! | `dist`  | 2f+2   | f+1  | undecided faulty nodes, own id with hop count |
//! | `check` | 2f+2   | f+1  | intact `w` with `distS(w) ≠ dist_u(w)`, id u  |
//! | `near`  | 2f     | f    | undecided faulty nodes, own id                |
//!
//! Floods of several ids share edges by always sending the pending
//! `(hop, id)` pair that is smallest in lexicographic order. A node sends an
//! id again only when it later learns a strictly shorter hop count for it,
//! which keeps the distances of the `dist` phase exact.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::bits::width_for;
use crate::congest::{
    message, run, Inbox, NodeContext, Outbox, Phased, PhasedProgram, ProgramError, Reader, RunMetrics, Schedule,
    SimConfig, SimError,
};
use crate::graph::{Graph, NodeId};

const ONE: u8 = 0;
const FLOOD: u8 = 1;

pub const PHASE_ONES: usize = 0;
pub const PHASE_IDS: usize = 1;
pub const PHASE_DIST: usize = 2;
pub const PHASE_CHECK: usize = 3;
pub const PHASE_NEAR: usize = 4;

/// Slack added on top of the schedule in the published bound.
pub const ROUND_SLACK: u64 = 8;

pub fn restore_schedule(f: usize) -> Schedule {
    let f = f as u64;
    let mut s = Schedule::new();
    s.push("ones", 2 * f + 1);
    s.push("ids", 3 * f + 1);
    s.push("dist", 2 * f + 2);
    s.push("check", 2 * f + 2);
    s.push("near", 2 * f);
    s
}

/// `(2f+1) + (3f+1) + (2f+2) + (2f+2) + 2f + 8`.
pub fn restore_round_bound(f: usize) -> u64 {
    restore_schedule(f).total() + ROUND_SLACK
}

fn cap(phase: usize, f: usize) -> u32 {
    match phase {
        PHASE_IDS => 2 * f as u32 + 1,
        PHASE_DIST | PHASE_CHECK => f as u32 + 1,
        _ => f as u32,
    }
}

/// Where a node got its bit from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Decision {
    Input,
    HeardOne,
    Alone,
    Refuted,
    NearestMin,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RestoreOutput {
    pub b: Option<bool>,
    pub decided: Option<Decision>,
    /// `dist_u(w)` for every faulty `u` heard in the `dist` phase.
    pub dist_u: BTreeMap<NodeId, u32>,
    /// Faulty ids other than this node's heard in the `near` phase; empty
    /// unless the node was still undecided then.
    pub x: BTreeSet<NodeId>,
    /// Times an id was sent again with a shorter hop count.
    pub resends: u64,
}

/// Shortest hop count per id, and what has been sent so far.
#[derive(Clone, Debug, Default)]
struct Flood {
    cap: u32,
    best: BTreeMap<NodeId, u32>,
    sent: BTreeMap<NodeId, u32>,
    resends: u64,
}

impl Flood {
    fn new(cap: u32) -> Self {
        Flood { cap, ..Default::default() }
    }

    fn offer(&mut self, id: NodeId, hop: u32) {
        if hop <= self.cap && self.best.get(&id).is_none_or(|&h| hop < h) {
            self.best.insert(id, hop);
        }
    }

    fn pending(&self) -> Option<(u32, NodeId)> {
        self.best
            .iter()
            .filter(|&(id, &h)| h < self.cap && self.sent.get(id).is_none_or(|&s| h < s))
            .map(|(&id, &h)| (h, id))
            .min()
    }

    fn take(&mut self) -> Option<(u32, NodeId)> {
        let (h, id) = self.pending()?;
        if self.sent.insert(id, h).is_some() {
            self.resends += 1;
        }
        Some((h, id))
    }
}

#[derive(Clone, Debug)]
pub struct RestoreNode {
    id: NodeId,
    f: usize,
    id_bits: usize,
    hop_bits: usize,
    zeta: Option<(bool, u32)>,
    b: Option<bool>,
    decided: Option<Decision>,
    heard_one: bool,
    flood: Flood,
    dist_u: BTreeMap<NodeId, u32>,
    x: BTreeSet<NodeId>,
    resends: u64,
}

fn fault(msg: &str) -> ProgramError {
    ProgramError(format!("restore: {msg}"))
}

impl RestoreNode {
    /// `zeta` is `(b, distS)`, `None` for a faulty node.
    pub fn new(id: NodeId, f: usize, id_bits: usize, zeta: Option<(bool, u32)>) -> Self {
        RestoreNode {
            id,
            f,
            id_bits,
            hop_bits: width_for(2 * f as u64 + 1),
            zeta,
            b: zeta.map(|z| z.0),
            decided: zeta.map(|_| Decision::Input),
            heard_one: false,
            flood: Flood::default(),
            dist_u: BTreeMap::new(),
            x: BTreeSet::new(),
            resends: 0,
        }
    }

    fn undecided(&self) -> bool {
        self.b.is_none()
    }

    fn decide(&mut self, b: bool, how: Decision) {
        debug_assert!(self.b.is_none());
        self.b = Some(b);
        self.decided = Some(how);
    }

    fn absorb(&mut self, inbox: &Inbox) -> Result<(), ProgramError> {
        for (_, m) in inbox.iter() {
            match Reader::tag(m) {
                Some(ONE) => self.heard_one = true,
                Some(FLOOD) => {
                    let mut r = Reader::body(m);
                    let id = r.uint(self.id_bits).ok_or_else(|| fault("short flood message"))?;
                    let hop = r.uint(self.hop_bits).ok_or_else(|| fault("short flood message"))? as u32;
                    self.flood.offer(NodeId(id), hop + 1);
                }
                _ => return Err(fault("unknown message")),
            }
        }
        Ok(())
    }

    fn start_flood(&mut self, phase: usize) {
        self.resends += self.flood.resends;
        self.flood = Flood::new(cap(phase, self.f));
        match phase {
            PHASE_IDS | PHASE_DIST | PHASE_NEAR if self.undecided() => self.flood.offer(self.id, 0),
            PHASE_CHECK => {
                if let Some((_, dist_s)) = self.zeta {
                    for (&u, &d) in &self.dist_u {
                        if d != dist_s {
                            self.flood.offer(u, 0);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn end_flood(&mut self) -> Result<(), ProgramError> {
        if self.flood.pending().is_some() {
            return Err(fault("phase overrun: flood still pending"));
        }
        Ok(())
    }

    pub fn output(&self) -> RestoreOutput {
        RestoreOutput {
            b: self.b,
            decided: self.decided,
            dist_u: self.dist_u.clone(),
            x: self.x.clone(),
            resends: self.resends + self.flood.resends,
        }
    }
}

impl PhasedProgram for RestoreNode {
    type Output = RestoreOutput;

    fn round(&mut self, phase: usize, k: u64, inbox: &Inbox, out: &mut Outbox) -> Result<(), ProgramError> {
        if phase > PHASE_NEAR {
            return Err(fault("unknown phase"));
        }
        if k == 1 && phase != PHASE_ONES {
            self.start_flood(phase);
        }
        let had_one = self.heard_one;
        self.absorb(inbox)?;
        if phase == PHASE_ONES {
            let origin = k == 1 && self.zeta.is_some_and(|z| z.0);
            if origin || (!had_one && self.heard_one) {
                self.heard_one = true;
                out.broadcast(&message(ONE, &[]));
            }
            return Ok(());
        }
        if let Some((hop, id)) = self.flood.take() {
            out.broadcast(&message(FLOOD, &[(id.0, self.id_bits), (u64::from(hop), self.hop_bits)]));
        }
        Ok(())
    }

    fn end_phase(&mut self, phase: usize, inbox: &Inbox) -> Result<(), ProgramError> {
        self.absorb(inbox)?;
        if phase != PHASE_ONES {
            self.end_flood()?;
        }
        match phase {
            PHASE_ONES => {
                if self.undecided() && self.heard_one {
                    self.decide(false, Decision::HeardOne);
                }
            }
            PHASE_IDS => {
                if self.undecided() && self.flood.best.keys().all(|&u| u == self.id) {
                    self.decide(true, Decision::Alone);
                }
            }
            PHASE_DIST => {
                self.dist_u = self.flood.best.clone();
            }
            PHASE_CHECK => {
                if self.undecided() && self.flood.best.contains_key(&self.id) {
                    self.decide(false, Decision::Refuted);
                }
            }
            PHASE_NEAR => {
                if self.undecided() {
                    self.x = self.flood.best.keys().copied().filter(|&u| u != self.id).collect();
                    let lowest = self.x.first().is_none_or(|&u| self.id < u);
                    self.decide(lowest, Decision::NearestMin);
                }
            }
            _ => return Err(fault("unknown phase")),
        }
        Ok(())
    }

    fn output(&self) -> RestoreOutput {
        RestoreNode::output(self)
    }
}

/// Runs restore on its own. `zeta` maps every node to its `(b, distS)`
/// input, `None` when erased.
pub fn restore_distributed(
    g: &Graph,
    f: usize,
    zeta: &BTreeMap<NodeId, Option<(bool, u32)>>,
    cfg: &SimConfig,
) -> Result<(BTreeMap<NodeId, RestoreOutput>, RunMetrics), SimError> {
    let schedule = Arc::new(restore_schedule(f));
    let id_bits = width_for(g.max_id().0);
    let make = |ctx: &NodeContext| {
        let z = zeta.get(&ctx.id).copied().flatten();
        Phased::new(RestoreNode::new(ctx.id, f, id_bits, z), schedule.clone())
    };
    let outcome = run(g, cfg, make)?;
    let mut metrics = outcome.metrics;
    metrics.phases = schedule.phases().to_vec();
    Ok((outcome.outputs.into_iter().collect(), metrics))
}

/// The restored set `{v | b(v) = 1}`; `None` if some node stayed undecided.
pub fn restored_set(outputs: &BTreeMap<NodeId, RestoreOutput>) -> Option<BTreeSet<NodeId>> {
    let mut set = BTreeSet::new();
    for (&v, o) in outputs {
        if o.b? {
            set.insert(v);
        }
    }
    Some(set)
}

#[cfg(test)]
mod tests;
