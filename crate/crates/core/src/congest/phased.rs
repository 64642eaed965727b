use std::sync::Arc;

use serde::Serialize;

use super::{Inbox, NodeProgram, Outbox, ProgramError, Status};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phase {
    pub name: String,
    pub rounds: u64,
}

/// Fixed phase lengths every node agrees on before the run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    phases: Vec<Phase>,
}

impl Schedule {
    pub fn new() -> Self {
        Schedule::default()
    }

    pub fn push(&mut self, name: impl Into<String>, rounds: u64) -> usize {
        self.phases.push(Phase { name: name.into(), rounds });
        self.phases.len() - 1
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.phases.iter().map(|p| p.rounds).sum()
    }
}

/// A program split into phases of known length.
///
/// Messages sent in the last round of a phase are handed to `end_phase`,
/// in the same step that runs round 1 of the next phase with an empty inbox.
pub trait PhasedProgram {
    type Output;

    /// Round `round` (1-based) of phase `phase`.
    fn round(&mut self, phase: usize, round: u64, inbox: &Inbox, out: &mut Outbox) -> Result<(), ProgramError>;

    fn end_phase(&mut self, phase: usize, inbox: &Inbox) -> Result<(), ProgramError>;

    fn output(&self) -> Self::Output;
}

/// Drives a [`PhasedProgram`] through a schedule; halts one step after the
/// last phase, so a run takes exactly `schedule.total()` rounds.
pub struct Phased<P> {
    inner: P,
    schedule: Arc<Schedule>,
    phase: usize,
    done_in_phase: u64,
}

impl<P> Phased<P> {
    pub fn new(inner: P, schedule: Arc<Schedule>) -> Self {
        Phased { inner, schedule, phase: 0, done_in_phase: 0 }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: PhasedProgram> NodeProgram for Phased<P> {
    type Output = P::Output;

    fn on_round(&mut self, _: u64, inbox: &Inbox, out: &mut Outbox) -> Result<Status, ProgramError> {
        let phases = self.schedule.phases();
        let empty = Inbox::default();
        let mut inbox = inbox;
        while self.phase < phases.len() && self.done_in_phase == phases[self.phase].rounds {
            self.inner.end_phase(self.phase, inbox)?;
            self.phase += 1;
            self.done_in_phase = 0;
            inbox = &empty;
        }
        if self.phase == phases.len() {
            return Ok(Status::Halted);
        }
        self.done_in_phase += 1;
        self.inner.round(self.phase, self.done_in_phase, inbox, out)?;
        Ok(Status::Running)
    }

    fn output(&self) -> P::Output {
        self.inner.output()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bits;
    use crate::congest::{run, SimConfig};
    use crate::graph::{generate, GraphKind, NodeId};

    /// Logs every callback and sends one message per round to each neighbor.
    #[derive(Default)]
    struct Log(Vec<String>);

    impl PhasedProgram for Log {
        type Output = Vec<String>;
        fn round(&mut self, phase: usize, round: u64, inbox: &Inbox, out: &mut Outbox) -> Result<(), ProgramError> {
            self.0.push(format!("r{phase}.{round}:{}", inbox.len()));
            for v in out.neighbors().to_vec() {
                out.send(v, Bits::repeat(false, 2));
            }
            Ok(())
        }
        fn end_phase(&mut self, phase: usize, inbox: &Inbox) -> Result<(), ProgramError> {
            self.0.push(format!("e{phase}:{}", inbox.len()));
            Ok(())
        }
        fn output(&self) -> Vec<String> {
            self.0.clone()
        }
    }

    #[test]
    fn phase_boundaries() {
        let g = generate(&GraphKind::Path { n: 2 }, 0).unwrap();
        let mut s = Schedule::new();
        s.push("a", 2);
        s.push("skip", 0);
        s.push("b", 1);
        let s = Arc::new(s);
        let out = run(&g, &SimConfig::new(4, 10), |_| Phased::new(Log::default(), s.clone())).unwrap();
        assert_eq!(out.metrics.rounds_used, 3);
        assert_eq!(out.outputs[0].0, NodeId(1));
        assert_eq!(out.outputs[0].1, vec!["r0.1:0", "r0.2:1", "e0:1", "e1:0", "r2.1:0", "e2:1"]);
    }
}
