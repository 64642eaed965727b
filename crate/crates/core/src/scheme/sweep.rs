use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{execute, graph_bandwidth, prepare, Adversary, SchemeError};
use crate::codec::CodecSpec;
use crate::congest::{default_max_rounds, SimConfig};
use crate::graph::{generate, GraphKind};
use crate::oracle::Labeling;

pub const SWEEP_SCHEMA: &str = "reslab.sweep.v1";

fn one() -> Vec<usize> {
    vec![1]
}

/// Ranges of a sweep; every combination is one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub graphs: Vec<GraphKind>,
    #[serde(rename = "F")]
    pub big_f: Vec<usize>,
    #[serde(default = "one")]
    pub f_factor: Vec<usize>,
    pub ell: Vec<usize>,
    pub codec: Vec<CodecSpec>,
    pub adversary: Vec<Adversary>,
    pub seeds: Vec<u64>,
    /// Overrides the default bandwidth of every cell.
    #[serde(default)]
    pub bandwidth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub graph: GraphKind,
    pub big_f: usize,
    pub f_factor: usize,
    pub ell: usize,
    pub codec: CodecSpec,
    pub adversary: Adversary,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema: String,
    pub graph: String,
    pub n: usize,
    #[serde(rename = "F")]
    pub big_f: usize,
    pub f: usize,
    pub ell: usize,
    pub codec: String,
    pub adversary: String,
    pub seed: u64,
    pub rounds: u64,
    pub budget: u64,
    pub max_label_bits: usize,
    pub pass: bool,
    pub error: String,
}

impl SweepConfig {
    /// Cells in declaration order: graphs outermost, seeds innermost.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for graph in &self.graphs {
            for &big_f in &self.big_f {
                for &f_factor in &self.f_factor {
                    for &ell in &self.ell {
                        for &codec in &self.codec {
                            for adversary in &self.adversary {
                                for &seed in &self.seeds {
                                    out.push(SweepCell {
                                        graph: graph.clone(),
                                        big_f,
                                        f_factor,
                                        ell,
                                        codec,
                                        adversary: adversary.clone(),
                                        seed,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn graph_label(kind: &GraphKind) -> String {
    match *kind {
        GraphKind::Path { n } | GraphKind::Cycle { n } | GraphKind::Star { n } | GraphKind::RandomTree { n } => {
            format!("{}:{n}", kind.name())
        }
        GraphKind::Grid { rows, cols } => format!("grid:{rows}x{cols}"),
        GraphKind::GnpConnected { n, p } => format!("gnp_connected:{n}:{p}"),
        GraphKind::IntroGadget { f, tail } => format!("intro_gadget:{f}:{tail}"),
    }
}

impl SweepCell {
    pub fn run(&self, bandwidth: Option<usize>) -> SweepRow {
        let f = self.big_f * self.f_factor;
        let mut row = SweepRow {
            schema: SWEEP_SCHEMA.to_string(),
            graph: graph_label(&self.graph),
            n: self.graph.node_count(),
            big_f: self.big_f,
            f,
            ell: self.ell,
            codec: self.codec.name().to_string(),
            adversary: self.adversary.label(),
            seed: self.seed,
            rounds: 0,
            budget: 0,
            max_label_bits: 0,
            pass: false,
            error: String::new(),
        };
        if let Err(e) = self.fill(&mut row, bandwidth) {
            row.pass = false;
            row.error = e.to_string();
        }
        row
    }

    fn fill(&self, row: &mut SweepRow, bandwidth: Option<usize>) -> Result<(), SchemeError> {
        let g = generate(&self.graph, self.seed).map_err(|e| SchemeError::Adversary(format!("graph: {e}")))?;
        let f = row.f;
        let phi = Labeling::random(&g, self.ell, self.seed);
        let prep = prepare(&g, self.big_f, &phi, self.codec.build(self.big_f), self.f_factor)?;
        row.max_label_bits = prep.assignment.overhead.max_label_bits;
        let b = bandwidth.unwrap_or_else(|| graph_bandwidth(&g, f));
        let cfg = SimConfig::new(b, default_max_rounds(f, 3 * f + 1, self.ell, b));
        let sets = self.adversary.erasure_sets(&g, &prep.assignment.ruling_set, self.seed)?;
        row.pass = true;
        for erased in &sets {
            let res = execute(&g, &prep, erased, &cfg)?;
            row.rounds = row.rounds.max(res.metrics.rounds_used);
            row.budget = res.budget;
            row.pass &= res.verdict.pass;
        }
        Ok(())
    }
}

/// Runs every cell, in parallel, and returns rows in cell order.
pub fn sweep(config: &SweepConfig) -> Vec<SweepRow> {
    config.cells().par_iter().map(|c| c.run(config.bandwidth)).collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "schema",
        "graph",
        "n",
        "F",
        "f",
        "ell",
        "codec",
        "adversary",
        "seed",
        "rounds",
        "budget",
        "max_label_bits",
        "pass",
        "error",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    #[serde(rename = "F")]
    pub big_f: usize,
    pub ell: usize,
    pub cells: usize,
    pub mean_rounds: f64,
}

/// Mean measured rounds per `(F, ℓ)` over passing cells.
pub fn mean_rounds_series(rows: &[SweepRow]) -> Vec<SeriesPoint> {
    let mut acc: BTreeMap<(usize, usize), (usize, u64)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.pass) {
        let e = acc.entry((r.big_f, r.ell)).or_default();
        e.0 += 1;
        e.1 += r.rounds;
    }
    acc.into_iter()
        .map(|((big_f, ell), (cells, total))| SeriesPoint {
            big_f,
            ell,
            cells,
            mean_rounds: total as f64 / cells as f64,
        })
        .collect()
}
