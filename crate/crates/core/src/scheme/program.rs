//! One node program running every distributed stage back to back: restore,
//! partition, group collection, decode.

use std::sync::Arc;

use crate::bits::Bits;
use crate::codec::{decode_group, node_block_len, BlockVector, GroupCodec};
use crate::congest::{Inbox, Outbox, PhasedProgram, ProgramError, Schedule};
use crate::graph::NodeId;
use crate::oracle::{parse_label, Layout};
use crate::partition::{collect_schedule, partition_schedule, CollectNode, PartitionNode, PartitionNodeOutput};
use crate::restore::{restore_schedule, RestoreNode, RestoreOutput};

const RESTORE_PHASES: usize = 5;
const PARTITION_PHASES: usize = 5;
const COLLECT_PHASES: usize = 3;

/// Everything every node knows before the run.
#[derive(Debug)]
pub struct SchemeParams {
    pub big_f: usize,
    pub f: usize,
    pub ell: usize,
    pub layout: Layout,
    pub id_bits: usize,
    pub bandwidth: usize,
    pub codec: Arc<dyn GroupCodec>,
    /// Longest block over all group sizes; collected payloads are padded
    /// to it after a presence bit.
    pub max_block: usize,
}

impl SchemeParams {
    pub fn item_bits(&self) -> usize {
        self.id_bits + 1 + self.max_block
    }

    pub fn schedule(&self) -> Schedule {
        let mut s = Schedule::new();
        let parts = [
            restore_schedule(self.f),
            partition_schedule(self.f),
            collect_schedule(self.f, self.item_bits(), self.bandwidth),
        ];
        for part in &parts {
            for p in part.phases() {
                s.push(p.name.clone(), p.rounds);
            }
        }
        debug_assert_eq!(s.len(), RESTORE_PHASES + PARTITION_PHASES + COLLECT_PHASES);
        s
    }
}

#[derive(Clone, Debug)]
pub struct SchemeNodeOutput {
    pub restore: RestoreOutput,
    pub partition: Option<PartitionNodeOutput>,
    /// The decoded label, or why decoding failed.
    pub recovered: Result<Bits, String>,
}

#[derive(Debug)]
enum Stage {
    Restore(RestoreNode),
    Partition(PartitionNode),
    Collect(Box<CollectNode>),
    Done,
}

#[derive(Debug)]
pub struct SchemeNode {
    id: NodeId,
    params: Arc<SchemeParams>,
    block: Option<Bits>,
    stage: Stage,
    restore_out: RestoreOutput,
    partition_out: Option<PartitionNodeOutput>,
    recovered: Result<Bits, String>,
}

fn fault(msg: impl std::fmt::Display) -> ProgramError {
    ProgramError(format!("scheme: {msg}"))
}

impl SchemeNode {
    /// `psi` is this node's label, `None` when erased.
    pub fn new(id: NodeId, params: Arc<SchemeParams>, psi: Option<&Bits>) -> Result<Self, ProgramError> {
        let parsed = psi.map(|l| parse_label(l, params.layout)).transpose().map_err(fault)?;
        let zeta = parsed.as_ref().map(|p| (p.b, p.dist));
        let restore = RestoreNode::new(id, params.f, params.id_bits, zeta);
        Ok(SchemeNode {
            id,
            block: parsed.map(|p| p.block),
            stage: Stage::Restore(restore),
            restore_out: RestoreOutput::default(),
            partition_out: None,
            recovered: Err("not finished".into()),
            params,
        })
    }

    fn payload(&self) -> Result<Bits, ProgramError> {
        let mut p = Bits::with_capacity(1 + self.params.max_block);
        p.push(self.block.is_some());
        if let Some(b) = &self.block {
            if b.len() > self.params.max_block {
                return Err(fault(format!("block of {} bits exceeds {}", b.len(), self.params.max_block)));
            }
            p.extend_from_bitslice(b);
        }
        p.resize(1 + self.params.max_block, false);
        Ok(p)
    }

    fn decode(&self, items: &[(NodeId, Bits)]) -> Result<Bits, String> {
        let p = &self.params;
        let s = items.len();
        let blocks = items
            .iter()
            .enumerate()
            .map(|(i, (_, payload))| {
                payload[0].then(|| payload[1..1 + node_block_len(&*p.codec, s, p.ell, i)].to_bitvec())
            })
            .collect();
        let ids: Vec<NodeId> = items.iter().map(|e| e.0).collect();
        let decoded =
            decode_group(&*p.codec, &BlockVector { ell: p.ell, blocks }, &ids, p.big_f).map_err(|e| e.to_string())?;
        decoded.into_iter().find(|e| e.0 == self.id).map(|e| e.1).ok_or_else(|| "own label missing".to_string())
    }

    fn advance(&mut self, phase: usize) -> Result<(), ProgramError> {
        let stage = std::mem::replace(&mut self.stage, Stage::Done);
        self.stage = match stage {
            Stage::Restore(r) if phase == RESTORE_PHASES - 1 => {
                self.restore_out = r.output();
                let b = self.restore_out.b.ok_or_else(|| fault("restore left b unset"))?;
                Stage::Partition(PartitionNode::new(self.id, self.params.f, self.params.id_bits, b))
            }
            Stage::Partition(pn) if phase == RESTORE_PHASES + PARTITION_PHASES - 1 => {
                let local = pn.output();
                let p = &self.params;
                let node = CollectNode::from_local(&local, self.id, p.f, p.id_bits, p.bandwidth, self.payload()?);
                self.partition_out = Some(local);
                Stage::Collect(Box::new(node))
            }
            Stage::Collect(c) if phase == RESTORE_PHASES + PARTITION_PHASES + COLLECT_PHASES - 1 => {
                self.recovered = match PhasedProgram::output(&*c) {
                    Some(items) => self.decode(&items),
                    None => Err("group collection incomplete".into()),
                };
                Stage::Done
            }
            other => other,
        };
        Ok(())
    }
}

impl PhasedProgram for SchemeNode {
    type Output = SchemeNodeOutput;

    fn round(&mut self, phase: usize, k: u64, inbox: &Inbox, out: &mut Outbox) -> Result<(), ProgramError> {
        match &mut self.stage {
            Stage::Restore(r) => r.round(phase, k, inbox, out),
            Stage::Partition(p) => p.round(phase - RESTORE_PHASES, k, inbox, out),
            Stage::Collect(c) => c.round(phase - RESTORE_PHASES - PARTITION_PHASES, k, inbox, out),
            Stage::Done => Err(fault("round after the last phase")),
        }
    }

    fn end_phase(&mut self, phase: usize, inbox: &Inbox) -> Result<(), ProgramError> {
        match &mut self.stage {
            Stage::Restore(r) => r.end_phase(phase, inbox)?,
            Stage::Partition(p) => p.end_phase(phase - RESTORE_PHASES, inbox)?,
            Stage::Collect(c) => c.end_phase(phase - RESTORE_PHASES - PARTITION_PHASES, inbox)?,
            Stage::Done => return Err(fault("phase end after the last phase")),
        }
        self.advance(phase)
    }

    fn output(&self) -> SchemeNodeOutput {
        SchemeNodeOutput {
            restore: match &self.stage {
                Stage::Restore(r) => r.output(),
                _ => self.restore_out.clone(),
            },
            partition: self.partition_out.clone(),
            recovered: self.recovered.clone(),
        }
    }
}
