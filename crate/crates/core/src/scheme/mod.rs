//! The full scheme: the oracle assigns `ψ`, an adversary erases labels, and
//! one engine run restores the ruling set, repartitions, exchanges blocks
//! inside groups and decodes `φ`.

mod program;
mod sweep;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{width_for, Bits};
use crate::codec::{max_block_bits, GroupCodec};
use crate::congest::{default_bandwidth, run, Phased, RunMetrics, SimConfig, SimError};
use crate::graph::{Graph, NodeId};
use crate::oracle::{assign_labels, Assignment, Labeling, OracleError, OverheadReport};
use crate::partition::{assemble, partition_schedule};
use crate::restore::restore_round_bound;
use crate::rulingset::RulingSet;

pub use program::{SchemeNode, SchemeNodeOutput, SchemeParams};
pub use sweep::{mean_rounds_series, sweep, write_csv, SeriesPoint, SweepCell, SweepConfig, SweepRow, SWEEP_SCHEMA};

/// Multiplier on the collection term of [`round_budget`].
pub const COLLECT_CONSTANT: u64 = 8;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("adversary: {0}")]
    Adversary(String),
    #[error("node {0} failed to decode its label")]
    DecodeFailed(NodeId),
}

/// How erased labels are chosen. `k` may exceed the scheme's budget `F` to
/// provoke failures on purpose.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Adversary {
    None,
    /// `k` uniformly random nodes.
    RandomK {
        k: usize,
    },
    /// `k` consecutive nodes of a simple path starting at a random node.
    ConsecutiveOnPath {
        k: usize,
    },
    /// Ruling-set members together with their smallest-id neighbor.
    NearRulingSet {
        k: usize,
    },
    /// Every subset of size at most `k` of `sample` random nodes.
    Exhaustive {
        k: usize,
        sample: usize,
    },
    Explicit {
        nodes: Vec<u64>,
    },
}

impl Adversary {
    pub fn label(&self) -> String {
        match self {
            Adversary::None => "none".into(),
            Adversary::RandomK { k } => format!("random_k({k})"),
            Adversary::ConsecutiveOnPath { k } => format!("consecutive_on_path({k})"),
            Adversary::NearRulingSet { k } => format!("near_ruling_set({k})"),
            Adversary::Exhaustive { k, sample } => format!("exhaustive({k};{sample})"),
            Adversary::Explicit { nodes } => {
                format!("explicit({})", nodes.iter().map(u64::to_string).collect::<Vec<_>>().join(";"))
            }
        }
    }

    /// The erasure sets to run; one set for every strategy but `exhaustive`.
    pub fn erasure_sets(&self, g: &Graph, rs: &RulingSet, seed: u64) -> Result<Vec<BTreeSet<NodeId>>, SchemeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xad5e_25a1);
        let nodes = g.sorted_nodes();
        let too_many = |k: usize| {
            (k > nodes.len()).then(|| SchemeError::Adversary(format!("cannot erase {k} of {} nodes", nodes.len())))
        };
        let one = |set: BTreeSet<NodeId>| Ok(vec![set]);
        match self {
            Adversary::None => one(BTreeSet::new()),
            Adversary::RandomK { k } => {
                if let Some(e) = too_many(*k) {
                    return Err(e);
                }
                one(nodes.iter().copied().sample(&mut rng, *k).into_iter().collect())
            }
            Adversary::ConsecutiveOnPath { k } => {
                if let Some(e) = too_many(*k) {
                    return Err(e);
                }
                let start =
                    *nodes.iter().choose(&mut rng).ok_or_else(|| SchemeError::Adversary("empty graph".into()))?;
                let path = simple_path(g, start, *k);
                if path.len() < *k {
                    return Err(SchemeError::Adversary(format!("no simple path of {k} nodes from {start}")));
                }
                one(path.into_iter().collect())
            }
            Adversary::NearRulingSet { k } => {
                if let Some(e) = too_many(*k) {
                    return Err(e);
                }
                let mut members: Vec<NodeId> = rs.members().iter().copied().collect();
                members.shuffle(&mut rng);
                let mut set = BTreeSet::new();
                for v in members {
                    for w in std::iter::once(v).chain(g.neighbors(v).unwrap_or_default().into_iter().take(1)) {
                        if set.len() < *k {
                            set.insert(w);
                        }
                    }
                }
                for v in nodes.iter().copied().sample(&mut rng, nodes.len()) {
                    if set.len() < *k {
                        set.insert(v);
                    }
                }
                one(set)
            }
            Adversary::Exhaustive { k, sample } => {
                let pool: Vec<NodeId> = {
                    let mut p: Vec<NodeId> = nodes.iter().copied().sample(&mut rng, (*sample).min(nodes.len()));
                    p.sort();
                    p
                };
                Ok(subsets_up_to(&pool, *k))
            }
            Adversary::Explicit { nodes: list } => {
                let set: BTreeSet<NodeId> = list.iter().map(|&x| NodeId(x)).collect();
                if let Some(v) = set.iter().find(|v| !g.contains(**v)) {
                    return Err(SchemeError::Adversary(format!("unknown node {v}")));
                }
                one(set)
            }
        }
    }
}

/// Simple path through `start` of at most `k` nodes, grown at either end
/// by the smallest-id unvisited neighbor.
fn simple_path(g: &Graph, start: NodeId, k: usize) -> Vec<NodeId> {
    let mut path = std::collections::VecDeque::from([start]);
    let mut seen = BTreeSet::from([start]);
    let fresh =
        |v: NodeId, seen: &BTreeSet<NodeId>| g.neighbors(v).unwrap_or_default().into_iter().find(|w| !seen.contains(w));
    while path.len() < k {
        if let Some(next) = fresh(*path.back().unwrap(), &seen) {
            seen.insert(next);
            path.push_back(next);
        } else if let Some(next) = fresh(*path.front().unwrap(), &seen) {
            seen.insert(next);
            path.push_front(next);
        } else {
            break;
        }
    }
    path.into()
}

/// All subsets of `pool` with at most `k` elements, smallest first.
pub fn subsets_up_to(pool: &[NodeId], k: usize) -> Vec<BTreeSet<NodeId>> {
    let mut out = vec![BTreeSet::new()];
    let mut frontier = vec![(BTreeSet::new(), 0usize)];
    for _ in 0..k {
        let mut next = Vec::new();
        for (set, from) in &frontier {
            for (i, &v) in pool.iter().enumerate().skip(*from) {
                let mut s: BTreeSet<NodeId> = set.clone();
                s.insert(v);
                out.push(s.clone());
                next.push((s, i + 1));
            }
        }
        frontier = next;
    }
    out
}

/// `restore_round_bound(f) + partition rounds + 8·(f + 1 + ⌈(3f+1)·item/B⌉)`
/// where `item = id bits + 1 + ℓ·max_s ⌈|w|/s⌉` is one collected entry.
///
/// `id_max` is the largest node id (`n` for ids `1..=n`).
pub fn round_budget(
    id_max: u64,
    big_f: usize,
    f_factor: usize,
    ell: usize,
    bandwidth: usize,
    codec: &dyn GroupCodec,
) -> u64 {
    let f = big_f * f_factor;
    let item = (width_for(id_max) + 1 + ell * max_block_bits(codec, f + 1..=3 * f + 1)) as u64;
    let collect = (3 * f as u64 + 1) * item;
    restore_round_bound(f)
        + partition_schedule(f).total()
        + COLLECT_CONSTANT * (f as u64 + 1 + collect.div_ceil(bandwidth.max(1) as u64))
}

/// Per-stage outcome of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub erasures_within_budget: bool,
    pub restore_ok: bool,
    pub partition_ok: bool,
    pub recovered_ok: bool,
    pub rounds_ok: bool,
    pub label_size_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct SchemeResult {
    pub erased: BTreeSet<NodeId>,
    /// `None` where decoding failed.
    pub recovered: BTreeMap<NodeId, Option<Bits>>,
    pub decode_failures: BTreeMap<NodeId, String>,
    pub metrics: RunMetrics,
    pub budget: u64,
    pub overhead: OverheadReport,
    pub verdict: Verdict,
}

impl SchemeResult {
    /// Turns the first decode failure into an error.
    pub fn into_checked(self) -> Result<Self, SchemeError> {
        match self.decode_failures.keys().next() {
            Some(&v) => Err(SchemeError::DecodeFailed(v)),
            None => Ok(self),
        }
    }
}

/// The oracle's side of a run, reusable across erasure sets.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub big_f: usize,
    pub f_factor: usize,
    pub phi: Labeling,
    pub codec: Arc<dyn GroupCodec>,
    pub assignment: Assignment,
}

pub fn prepare(
    g: &Graph,
    big_f: usize,
    phi: &Labeling,
    codec: Arc<dyn GroupCodec>,
    f_factor: usize,
) -> Result<Prepared, SchemeError> {
    let assignment = assign_labels(g, big_f, phi, &*codec, f_factor)?;
    Ok(Prepared { big_f, f_factor, phi: phi.clone(), codec, assignment })
}

/// Default bandwidth for a graph: `default_bandwidth` over the larger of `n`
/// and the largest id.
pub fn graph_bandwidth(g: &Graph, f: usize) -> usize {
    default_bandwidth(g.max_id().0.max(g.node_count() as u64), f)
}

/// Runs the distributed stages with `erased` labels removed.
pub fn execute(
    g: &Graph,
    prep: &Prepared,
    erased: &BTreeSet<NodeId>,
    cfg: &SimConfig,
) -> Result<SchemeResult, SchemeError> {
    let a = &prep.assignment;
    let f = prep.big_f * prep.f_factor;
    let id_max = g.max_id().0.max(g.node_count() as u64);
    let params = Arc::new(SchemeParams {
        big_f: prep.big_f,
        f,
        ell: prep.phi.ell,
        layout: a.psi.layout,
        id_bits: width_for(id_max),
        bandwidth: cfg.bandwidth,
        codec: prep.codec.clone(),
        max_block: prep.phi.ell * max_block_bits(&*prep.codec, f + 1..=3 * f + 1),
    });
    let schedule = Arc::new(params.schedule());
    let mut psi = a.psi.clone();
    psi.erase(erased);

    let mut setup_error = None;
    let outcome = run(g, cfg, |ctx| {
        let label = psi.labels.get(&ctx.id).and_then(|l| l.as_ref());
        let node = SchemeNode::new(ctx.id, params.clone(), label).unwrap_or_else(|e| {
            setup_error.get_or_insert((ctx.id, e));
            SchemeNode::new(ctx.id, params.clone(), None).expect("erased labels always parse")
        });
        Phased::new(node, schedule.clone())
    })?;
    if let Some((node, e)) = setup_error {
        return Err(SimError::ProgramFault { node, round: 0, msg: e.0 }.into());
    }
    let mut metrics = outcome.metrics;
    metrics.phases = schedule.phases().to_vec();
    let outputs: BTreeMap<NodeId, SchemeNodeOutput> = outcome.outputs.into_iter().collect();

    let restored: Option<BTreeSet<NodeId>> = outputs
        .iter()
        .map(|(&v, o)| o.restore.b.map(|b| (v, b)))
        .collect::<Option<Vec<_>>>()
        .map(|bs| bs.into_iter().filter(|e| e.1).map(|e| e.0).collect());
    let partition = assemble(f, outputs.iter().filter_map(|(&v, o)| o.partition.clone().map(|p| (v, p)))).ok();

    let mut recovered = BTreeMap::new();
    let mut decode_failures = BTreeMap::new();
    for (&v, o) in &outputs {
        match &o.recovered {
            Ok(b) => {
                recovered.insert(v, Some(b.clone()));
            }
            Err(e) => {
                recovered.insert(v, None);
                decode_failures.insert(v, e.clone());
            }
        }
    }
    let budget = round_budget(id_max, prep.big_f, prep.f_factor, prep.phi.ell, cfg.bandwidth, &*prep.codec);
    let mut verdict = Verdict {
        erasures_within_budget: erased.len() <= prep.big_f,
        restore_ok: restored.as_ref() == Some(a.ruling_set.members()),
        partition_ok: partition.as_ref() == Some(&a.partition),
        recovered_ok: prep.phi.bits.iter().all(|(v, b)| recovered.get(v) == Some(&Some(b.clone()))),
        rounds_ok: metrics.rounds_used <= budget,
        label_size_ok: a.overhead.within_declared(),
        pass: false,
    };
    verdict.pass = verdict.erasures_within_budget
        && verdict.restore_ok
        && verdict.partition_ok
        && verdict.recovered_ok
        && verdict.rounds_ok
        && verdict.label_size_ok;
    Ok(SchemeResult {
        erased: erased.clone(),
        recovered,
        decode_failures,
        metrics,
        budget,
        overhead: a.overhead.clone(),
        verdict,
    })
}

/// Assigns labels, erases per `adv`, and runs every distributed stage.
/// `seed` drives the adversary; `exhaustive` is rejected here (use
/// [`Adversary::erasure_sets`] with [`execute`]).
#[allow(clippy::too_many_arguments)]
pub fn run_scheme(
    g: &Graph,
    big_f: usize,
    phi: &Labeling,
    codec: Arc<dyn GroupCodec>,
    f_factor: usize,
    adv: &Adversary,
    seed: u64,
    cfg: &SimConfig,
) -> Result<SchemeResult, SchemeError> {
    let prep = prepare(g, big_f, phi, codec, f_factor)?;
    let sets = adv.erasure_sets(g, &prep.assignment.ruling_set, seed)?;
    let [erased] = &sets[..] else {
        return Err(SchemeError::Adversary(format!("{} yields {} erasure sets", adv.label(), sets.len())));
    };
    execute(g, &prep, erased, cfg)
}
