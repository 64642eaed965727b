//! Deterministic synchronous CONGEST simulator.
//!
//! Step `r` hands every running program the messages its neighbors sent at
//! step `r − 1`. Each directed edge carries at most one message of at most
//! `B` bits per step.

mod phased;
mod wire;

use std::collections::HashMap;

use thiserror::Error;

use crate::bits::{ceil_log2, to_hex, BitStr, Bits};
use crate::graph::{Graph, NodeId};

pub use phased::{Phase, Phased, PhasedProgram, Schedule};
pub use wire::{message, Reader, TAG_BITS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("{node} sent {bits} bits to {neighbor} in round {round}, bandwidth is {bandwidth}")]
    BandwidthExceeded { node: NodeId, neighbor: NodeId, round: u64, bits: usize, bandwidth: usize },
    #[error("still running after {max_rounds} rounds")]
    MaxRoundsExceeded { max_rounds: u64 },
    #[error("{node} faulted in round {round}: {msg}")]
    ProgramFault { node: NodeId, round: u64, msg: String },
    #[error("{node} sent to non-neighbor {to} in round {round}")]
    NotNeighbor { node: NodeId, to: NodeId, round: u64 },
    #[error("{node} sent twice to {to} in round {round}")]
    DuplicateSend { node: NodeId, to: NodeId, round: u64 },
}

/// A program-reported failure; the engine attaches node and round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramError(pub String);

impl<T: Into<String>> From<T> for ProgramError {
    fn from(msg: T) -> Self {
        ProgramError(msg.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub bandwidth: usize,
    pub max_rounds: u64,
    pub trace: bool,
}

impl SimConfig {
    pub fn new(bandwidth: usize, max_rounds: u64) -> Self {
        assert!(bandwidth >= 1, "bandwidth must be positive");
        SimConfig { bandwidth, max_rounds, trace: false }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = true;
        self
    }
}

/// `⌈log2(n+1)⌉ + ⌈log2(2f+2)⌉ + 8`.
pub fn default_bandwidth(n: u64, f: usize) -> usize {
    ceil_log2(n + 1) + ceil_log2(2 * f as u64 + 2) + 8
}

/// Runaway guard `64(f+1) + 8⌈s_max·ℓ·80/B⌉`.
pub fn default_max_rounds(f: usize, s_max: usize, ell: usize, bandwidth: usize) -> u64 {
    (64 * (f + 1) + 8 * (s_max * ell * 80).div_ceil(bandwidth)) as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeContext {
    pub id: NodeId,
    /// Sorted by id.
    pub neighbors: Vec<NodeId>,
}

/// Messages received in one step, sorted by sender id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Inbox {
    msgs: Vec<(NodeId, Bits)>,
}

impl Inbox {
    pub fn new(mut msgs: Vec<(NodeId, Bits)>) -> Self {
        msgs.sort_by_key(|m| m.0);
        Inbox { msgs }
    }

    pub fn get(&self, from: NodeId) -> Option<&BitStr> {
        self.msgs.binary_search_by_key(&from, |m| m.0).ok().map(|i| self.msgs[i].1.as_bitslice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &BitStr)> {
        self.msgs.iter().map(|(v, b)| (*v, b.as_bitslice()))
    }

    pub fn len(&self) -> usize {
        self.msgs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.msgs.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum OutboxFault {
    NotNeighbor(NodeId),
    Duplicate(NodeId),
}

pub struct Outbox<'a> {
    neighbors: &'a [NodeId],
    msgs: Vec<(NodeId, Bits)>,
    fault: Option<OutboxFault>,
}

impl<'a> Outbox<'a> {
    pub fn new(neighbors: &'a [NodeId]) -> Self {
        Outbox { neighbors, msgs: Vec::new(), fault: None }
    }

    pub fn send(&mut self, to: NodeId, bits: Bits) {
        if self.neighbors.binary_search(&to).is_err() {
            self.fault.get_or_insert(OutboxFault::NotNeighbor(to));
        } else if self.msgs.iter().any(|m| m.0 == to) {
            self.fault.get_or_insert(OutboxFault::Duplicate(to));
        } else {
            self.msgs.push((to, bits));
        }
    }

    pub fn broadcast(&mut self, bits: &BitStr) {
        for &v in self.neighbors {
            self.send(v, bits.to_bitvec());
        }
    }

    pub fn neighbors(&self) -> &[NodeId] {
        self.neighbors
    }

    pub fn has_sent_to(&self, to: NodeId) -> bool {
        self.msgs.iter().any(|m| m.0 == to)
    }

    pub fn into_messages(self) -> Vec<(NodeId, Bits)> {
        self.msgs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Running,
    Halted,
}

pub trait NodeProgram {
    type Output;

    /// Step `round ≥ 1`; `inbox` holds what neighbors sent at `round − 1`.
    fn on_round(&mut self, round: u64, inbox: &Inbox, out: &mut Outbox) -> Result<Status, ProgramError>;

    fn output(&self) -> Self::Output;
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunMetrics {
    /// Rounds in which messages could have been in flight: the halting step,
    /// minus one when nothing was sent in it.
    pub rounds_used: u64,
    pub peak_edge_bits: usize,
    pub total_messages: u64,
    pub total_bits: u64,
    /// Published phase schedule, when the programs follow one.
    pub phases: Vec<Phase>,
    /// `round u→v bits hex` lines when tracing is on.
    pub trace: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome<O> {
    /// Indexed like `Graph::nodes`.
    pub outputs: Vec<(NodeId, O)>,
    pub metrics: RunMetrics,
}

impl<O> RunOutcome<O> {
    pub fn output_map(self) -> HashMap<NodeId, O> {
        self.outputs.into_iter().collect()
    }
}

pub fn run<P: NodeProgram>(
    g: &Graph,
    cfg: &SimConfig,
    mut make: impl FnMut(&NodeContext) -> P,
) -> Result<RunOutcome<P::Output>, SimError> {
    let n = g.node_count();
    let contexts: Vec<NodeContext> = (0..n)
        .map(|i| NodeContext { id: g.id_at(i), neighbors: g.adj_idx(i).iter().map(|&j| g.id_at(j)).collect() })
        .collect();
    let mut programs: Vec<P> = contexts.iter().map(&mut make).collect();
    let mut halted = vec![false; n];
    let mut inboxes: Vec<Vec<(NodeId, Bits)>> = vec![Vec::new(); n];
    let mut metrics = RunMetrics::default();
    let mut round = 0u64;
    loop {
        round += 1;
        if round > cfg.max_rounds + 1 {
            return Err(SimError::MaxRoundsExceeded { max_rounds: cfg.max_rounds });
        }
        let mut next: Vec<Vec<(NodeId, Bits)>> = vec![Vec::new(); n];
        let mut sent_any = false;
        for i in 0..n {
            let msgs = std::mem::take(&mut inboxes[i]);
            if halted[i] {
                continue;
            }
            let ctx = &contexts[i];
            let inbox = Inbox::new(msgs);
            let mut out = Outbox::new(&ctx.neighbors);
            let status = programs[i].on_round(round, &inbox, &mut out).map_err(|e| SimError::ProgramFault {
                node: ctx.id,
                round,
                msg: e.0,
            })?;
            match out.fault {
                Some(OutboxFault::NotNeighbor(to)) => return Err(SimError::NotNeighbor { node: ctx.id, to, round }),
                Some(OutboxFault::Duplicate(to)) => return Err(SimError::DuplicateSend { node: ctx.id, to, round }),
                None => {}
            }
            for (to, bits) in out.msgs {
                if bits.len() > cfg.bandwidth {
                    return Err(SimError::BandwidthExceeded {
                        node: ctx.id,
                        neighbor: to,
                        round,
                        bits: bits.len(),
                        bandwidth: cfg.bandwidth,
                    });
                }
                if round > cfg.max_rounds {
                    return Err(SimError::MaxRoundsExceeded { max_rounds: cfg.max_rounds });
                }
                sent_any = true;
                metrics.peak_edge_bits = metrics.peak_edge_bits.max(bits.len());
                metrics.total_messages += 1;
                metrics.total_bits += bits.len() as u64;
                if cfg.trace {
                    metrics.trace.push(format!("{round} {}→{to} {} {}", ctx.id, bits.len(), to_hex(&bits)));
                }
                let j = g.idx(to).expect("neighbor is a node");
                next[j].push((ctx.id, bits));
            }
            if status == Status::Halted {
                halted[i] = true;
            }
        }
        inboxes = next;
        if halted.iter().all(|&h| h) {
            metrics.rounds_used = if sent_any { round } else { round - 1 };
            break;
        }
    }
    let outputs = contexts.iter().zip(&programs).map(|(c, p)| (c.id, p.output())).collect();
    Ok(RunOutcome { outputs, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::from_str01;
    use crate::graph::{generate, GraphKind};

    /// Source sends one bit; everyone else forwards it once, away from the
    /// senders, and halts.
    struct Flood {
        source: bool,
        marked_at: Option<u64>,
    }

    impl NodeProgram for Flood {
        type Output = Option<u64>;
        fn on_round(&mut self, round: u64, inbox: &Inbox, out: &mut Outbox) -> Result<Status, ProgramError> {
            if self.marked_at.is_none() && (self.source || !inbox.is_empty()) {
                self.marked_at = Some(round - 1);
                for v in out.neighbors().to_vec() {
                    if inbox.get(v).is_none() {
                        out.send(v, from_str01("1").unwrap());
                    }
                }
                return Ok(Status::Halted);
            }
            Ok(Status::Running)
        }
        fn output(&self) -> Option<u64> {
            self.marked_at
        }
    }

    struct Shout(usize);

    impl NodeProgram for Shout {
        type Output = ();
        fn on_round(&mut self, _: u64, _: &Inbox, out: &mut Outbox) -> Result<Status, ProgramError> {
            out.broadcast(&Bits::repeat(true, self.0));
            Ok(Status::Halted)
        }
        fn output(&self) {}
    }

    fn flood_p5(cfg: &SimConfig) -> RunOutcome<Option<u64>> {
        let g = generate(&GraphKind::Path { n: 5 }, 0).unwrap();
        run(&g, cfg, |ctx| Flood { source: ctx.id == NodeId(1), marked_at: None }).unwrap()
    }

    #[test]
    fn flood_on_path() {
        let out = flood_p5(&SimConfig::new(8, 100));
        assert_eq!(out.metrics.rounds_used, 4);
        assert_eq!(out.outputs.iter().map(|o| o.1.unwrap()).max(), Some(4));
        assert_eq!(out.outputs[4], (NodeId(5), Some(4)));
        assert_eq!(out.metrics.total_messages, 4);
    }

    #[test]
    fn bandwidth_enforced() {
        let g = generate(&GraphKind::Path { n: 3 }, 0).unwrap();
        let err = run(&g, &SimConfig::new(8, 10), |_| Shout(9)).unwrap_err();
        assert!(matches!(err, SimError::BandwidthExceeded { round: 1, bits: 9, .. }));
        assert!(run(&g, &SimConfig::new(8, 10), |_| Shout(8)).is_ok());
    }

    #[test]
    fn deterministic_with_trace() {
        let cfg = SimConfig::new(8, 100).with_trace();
        let a = flood_p5(&cfg);
        let b = flood_p5(&cfg);
        assert_eq!(a, b);
        assert_eq!(a.metrics.trace[0], "1 1→2 1 80");
        assert_eq!(a.metrics.trace.len(), 4);
    }

    #[test]
    fn max_rounds() {
        let g = generate(&GraphKind::Path { n: 5 }, 0).unwrap();
        let err = run(&g, &SimConfig::new(8, 3), |ctx| Flood { source: ctx.id == NodeId(1), marked_at: None });
        assert_eq!(err.unwrap_err(), SimError::MaxRoundsExceeded { max_rounds: 3 });
        assert!(run(&g, &SimConfig::new(8, 4), |ctx| Flood { source: ctx.id == NodeId(1), marked_at: None }).is_ok());
    }

    struct Misbehave(u8);

    impl NodeProgram for Misbehave {
        type Output = ();
        fn on_round(&mut self, _: u64, _: &Inbox, out: &mut Outbox) -> Result<Status, ProgramError> {
            match self.0 {
                0 => out.send(NodeId(99), Bits::new()),
                1 => {
                    let v = out.neighbors()[0];
                    out.send(v, Bits::new());
                    out.send(v, Bits::new());
                }
                _ => return Err("boom".into()),
            }
            Ok(Status::Halted)
        }
        fn output(&self) {}
    }

    #[test]
    fn faults() {
        let g = generate(&GraphKind::Path { n: 2 }, 0).unwrap();
        let cfg = SimConfig::new(8, 5);
        assert!(matches!(run(&g, &cfg, |_| Misbehave(0)), Err(SimError::NotNeighbor { .. })));
        assert!(matches!(run(&g, &cfg, |_| Misbehave(1)), Err(SimError::DuplicateSend { .. })));
        assert!(matches!(run(&g, &cfg, |_| Misbehave(2)), Err(SimError::ProgramFault { round: 1, .. })));
    }

    #[test]
    fn bandwidth_formula() {
        assert_eq!(default_bandwidth(10, 1), 14);
        assert_eq!(default_bandwidth(1000, 8), 23);
        assert_eq!(default_bandwidth(2, 1), 2 + 2 + 8);
        assert_eq!(default_bandwidth(2, 3), 2 + 3 + 8);
    }
}
