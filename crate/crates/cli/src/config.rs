use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use reslab::codec::CodecSpec;
use reslab::graph::{generate, read_graph, Graph, GraphKind};
use reslab::oracle::Labeling;
use reslab::scheme::{Adversary, SweepConfig};
use serde::{Deserialize, Serialize};

/// A generated graph or a graph file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File { file: PathBuf },
    Kind(GraphKind),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub psi: Option<PathBuf>,
    pub ruling_set: Option<PathBuf>,
    pub partition: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    #[serde(rename = "F")]
    pub big_f: usize,
    #[serde(default = "one")]
    pub f_factor: usize,
    pub ell: usize,
    pub codec: CodecSpec,
    pub adversary: Adversary,
    #[serde(default)]
    pub seed: u64,
    pub bandwidth: Option<usize>,
    pub max_rounds: Option<u64>,
    /// Labeling file; random labels from `seed` when absent.
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputPaths,
}

/// Relative paths in a config file are resolved against its directory.
fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let GraphSource::File { file } = &mut cfg.graph {
            *file = resolve(base, file);
        }
        if let Some(l) = &mut cfg.labels {
            *l = resolve(base, l);
        }
        let out = &mut cfg.output;
        for p in [&mut out.json, &mut out.psi, &mut out.ruling_set, &mut out.partition].into_iter().flatten() {
            *p = resolve(base, p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.big_f == 0 {
            bail!("F must be at least 1");
        }
        if self.f_factor == 0 {
            bail!("f_factor must be at least 1");
        }
        if self.bandwidth == Some(0) {
            bail!("bandwidth must be positive");
        }
        Ok(())
    }

    pub fn f(&self) -> usize {
        self.big_f * self.f_factor
    }

    pub fn build_graph(&self) -> Result<Graph> {
        match &self.graph {
            GraphSource::Kind(kind) => Ok(generate(kind, self.seed)?),
            GraphSource::File { file } => {
                let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
                Ok(read_graph(&text).with_context(|| format!("parsing {}", file.display()))?)
            }
        }
    }

    pub fn labeling(&self, g: &Graph) -> Result<Labeling> {
        let Some(path) = &self.labels else { return Ok(Labeling::random(g, self.ell, self.seed)) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let phi = Labeling::from_text(&text).with_context(|| format!("parsing {}", path.display()))?;
        if phi.ell != self.ell {
            bail!("labels have {} bits, config says ell = {}", phi.ell, self.ell);
        }
        if g.nodes().iter().any(|&v| phi.get(v).is_none()) || phi.bits.len() != g.node_count() {
            bail!("labels do not cover exactly the nodes of the graph");
        }
        Ok(phi)
    }
}

pub fn load_sweep(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: SweepConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if cfg.big_f.contains(&0) || cfg.f_factor.contains(&0) || cfg.bandwidth == Some(0) {
        bail!("F, f_factor and bandwidth must be positive");
    }
    Ok(cfg)
}

pub const RUN_KEYS: &str = "\
Config keys (TOML):
  F            erasure budget, >= 1
  f_factor     f = f_factor * F (default 1)
  ell          label length in bits
  codec        \"mds\" or \"repetition\"
  seed         drives graph generation, random labels and the adversary (default 0)
  bandwidth    bits per edge per round (default ceil(log2(n+1)) + ceil(log2(2f+2)) + 8)
  max_rounds   runaway guard for the simulator
  labels       labeling file (`n ell` header, then `ID hex` lines); random when absent
  [graph]      kind = path|cycle|star|random_tree (n), grid (rows, cols),
               gnp_connected (n, p), intro_gadget (f, tail); or file = \"graph.txt\"
  [adversary]  strategy = none | random_k (k) | consecutive_on_path (k)
               | near_ruling_set (k) | exhaustive (k, sample) | explicit (nodes)
  [output]     json, psi, ruling_set, partition: optional output files
Relative paths are resolved against the config file's directory.";

pub const SWEEP_KEYS: &str = "\
Config keys (TOML); every combination of the lists is one cell:
  graphs       array of graph tables, as [graph] of `run`
  F            array of erasure budgets
  f_factor     array (default [1])
  ell          array of label lengths
  codec        array of \"mds\" / \"repetition\"
  adversary    array of adversary tables, as [adversary] of `run`
  seeds        array of seeds
  bandwidth    optional override for every cell";
