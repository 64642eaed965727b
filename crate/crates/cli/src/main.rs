//! `reslab`: generate graphs, run the resilient labeling scheme, verify
//! ruling-set and partition dumps, and run parameter sweeps.
//!
//! Exit codes: 0 pass, 1 verdict failure, 2 usage, config or IO error.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{debug, info};
use reslab::bits::to_hex;
use reslab::congest::{default_max_rounds, SimConfig};
use reslab::graph::{generate, read_graph, write_graph, Graph, GraphKind};
use reslab::partition::{verify_partition, PartitionResult};
use reslab::rulingset::{verify_ruling_set, RulingSet};
use reslab::scheme::{
    execute, graph_bandwidth, mean_rounds_series, prepare, round_budget, sweep, write_csv, SchemeError, SchemeResult,
    SWEEP_SCHEMA,
};
use serde_json::{json, Value};

use config::{load_sweep, ExperimentConfig, RUN_KEYS, SWEEP_KEYS};

const RUN_SCHEMA: &str = "reslab.run.v1";
const VERIFY_SCHEMA: &str = "reslab.verify.v1";
const SERIES_SCHEMA: &str = "reslab.series.v1";

#[derive(Parser, Debug)]
#[command(name = "reslab", version, about = "Resilient labeling simulator", long_about = None)]
#[command(after_help = "Set RUST_LOG=debug (or info, warn) for progress logging on stderr.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Path,
    Cycle,
    Star,
    Grid,
    RandomTree,
    Gnp,
    Gadget,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as `n m` followed by `u v` edge lines.
    Gen {
        kind: Kind,
        /// Node count (path, cycle, star, random-tree, gnp).
        n: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        /// Edge probability for gnp.
        #[arg(long)]
        p: Option<f64>,
        /// Gadget parameter.
        #[arg(long)]
        f: Option<usize>,
        /// Extra path nodes hung off the gadget's w_0.
        #[arg(long, default_value_t = 0)]
        tail: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment and print a JSON report.
    #[command(after_help = RUN_KEYS)]
    Run {
        config: PathBuf,
        /// Overrides `output.json` of the config.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check ruling-set and partition dumps against a graph file.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        f: usize,
        #[arg(long)]
        ruling_set: Option<PathBuf>,
        #[arg(long)]
        partition: Option<PathBuf>,
    },
    /// Run every cell of a sweep config; CSV rows plus a mean-rounds series.
    #[command(after_help = SWEEP_KEYS)]
    Sweep {
        config: PathBuf,
        /// CSV output; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// JSON file for the per-(F, ell) mean-rounds series.
        #[arg(long)]
        series: Option<PathBuf>,
    },
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn gen_kind(
    kind: Kind,
    n: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
    p: Option<f64>,
    f: Option<usize>,
    tail: usize,
) -> Result<GraphKind> {
    let need = |v: Option<usize>, what: &str| v.with_context(|| format!("{kind:?} needs {what}"));
    Ok(match kind {
        Kind::Path => GraphKind::Path { n: need(n, "n")? },
        Kind::Cycle => GraphKind::Cycle { n: need(n, "n")? },
        Kind::Star => GraphKind::Star { n: need(n, "n")? },
        Kind::RandomTree => GraphKind::RandomTree { n: need(n, "n")? },
        Kind::Grid => GraphKind::Grid { rows: need(rows, "--rows")?, cols: need(cols, "--cols")? },
        Kind::Gnp => GraphKind::GnpConnected { n: need(n, "n")?, p: p.context("gnp needs --p")? },
        Kind::Gadget => GraphKind::IntroGadget { f: need(f, "--f")?, tail },
    })
}

fn read_graph_file(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_graph(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run_json(res: &SchemeResult) -> Value {
    let m = &res.metrics;
    json!({
        "erased": res.erased.iter().map(|v| v.0).collect::<Vec<_>>(),
        "verdict": res.verdict,
        "rounds_used": m.rounds_used,
        "budget": res.budget,
        "peak_edge_bits": m.peak_edge_bits,
        "total_messages": m.total_messages,
        "total_bits": m.total_bits,
        "phases": m.phases.iter().map(|p| json!({"name": p.name, "rounds": p.rounds})).collect::<Vec<_>>(),
        "decode_failures": res.decode_failures.iter().map(|(v, e)| (v.to_string(), json!(e))).collect::<serde_json::Map<_, _>>(),
        "recovered": res.recovered.iter()
            .map(|(v, l)| (v.to_string(), l.as_ref().map_or(Value::Null, |b| json!(to_hex(b)))))
            .collect::<serde_json::Map<_, _>>(),
    })
}

/// `Ok(false)` is a verdict failure; `Err` is a config or IO problem.
fn cmd_run(config: &Path, out: Option<&Path>) -> Result<bool> {
    let cfg = ExperimentConfig::load(config)?;
    let g = cfg.build_graph()?;
    let phi = cfg.labeling(&g)?;
    let f = cfg.f();
    let codec = cfg.codec.build(cfg.big_f);
    let prep = prepare(&g, cfg.big_f, &phi, codec.clone(), cfg.f_factor)?;
    let a = &prep.assignment;
    let sets = cfg.adversary.erasure_sets(&g, &a.ruling_set, cfg.seed)?;
    let bandwidth = cfg.bandwidth.unwrap_or_else(|| graph_bandwidth(&g, f));
    let max_rounds = cfg.max_rounds.unwrap_or_else(|| default_max_rounds(f, 3 * f + 1, cfg.ell, bandwidth));
    let sim = SimConfig::new(bandwidth, max_rounds);
    info!("n={} F={} f={f} ell={} B={bandwidth}: {} erasure set(s)", g.node_count(), cfg.big_f, cfg.ell, sets.len());

    let o = &cfg.output;
    for (path, text) in
        [(&o.psi, a.psi.to_text()), (&o.ruling_set, a.ruling_set.dump()), (&o.partition, a.partition.dump())]
    {
        if let Some(p) = path {
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
        }
    }

    let mut pass = true;
    let mut runs = Vec::with_capacity(sets.len());
    for erased in &sets {
        debug!("erasing {erased:?}");
        match execute(&g, &prep, erased, &sim) {
            Ok(res) => {
                pass &= res.verdict.pass;
                runs.push(run_json(&res));
            }
            Err(e @ SchemeError::Sim(_)) => {
                pass = false;
                runs.push(json!({"erased": erased.iter().map(|v| v.0).collect::<Vec<_>>(), "error": e.to_string()}));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let id_max = g.max_id().0.max(g.node_count() as u64);
    let doc = json!({
        "schema": RUN_SCHEMA,
        "config": cfg,
        "graph": {"n": g.node_count(), "m": g.edge_count()},
        "f": f,
        "bandwidth": bandwidth,
        "round_budget": round_budget(id_max, cfg.big_f, cfg.f_factor, cfg.ell, bandwidth, &*codec),
        "overhead": a.overhead,
        "ruling_set_size": a.ruling_set.members().len(),
        "groups": a.partition.groups().len(),
        "runs": runs,
        "pass": pass,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    emit(out.or(o.json.as_deref()), &text)?;
    Ok(pass)
}

fn line(out: &mut String, pass: bool, what: &str, witness: Option<String>) {
    let tag = if pass { "PASS" } else { "FAIL" };
    out.push_str(&format!("{tag} {what}"));
    if let Some(w) = witness {
        out.push_str(&format!(": {w}"));
    }
    out.push('\n');
}

fn cmd_verify(graph: &Path, f: usize, ruling_set: Option<&Path>, partition: Option<&Path>) -> Result<bool> {
    let g = read_graph_file(graph)?;
    let mut out = format!("schema {VERIFY_SCHEMA}\n");
    let mut pass = true;
    if let Some(p) = ruling_set {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let rs = RulingSet::parse_dump(f, &text).with_context(|| format!("parsing {}", p.display()))?;
        let r = verify_ruling_set(&g, &rs);
        pass &= r.is_valid();
        line(
            &mut out,
            r.unknown_member.is_none(),
            "ruling_set members",
            r.unknown_member.map(|v| format!("{v} is not a node")),
        );
        line(
            &mut out,
            r.separation.is_none(),
            "ruling_set separation",
            r.separation.map(|(a, b, d)| format!("members {a} and {b} at distance {d}")),
        );
        line(
            &mut out,
            r.domination.is_none(),
            "ruling_set domination",
            r.domination.map(|(v, d)| match d {
                u32::MAX => format!("node {v} reaches no member"),
                d => format!("node {v} at distance {d}"),
            }),
        );
        line(
            &mut out,
            r.dist_mismatch.is_none(),
            "ruling_set distances",
            r.dist_mismatch.map(|(v, got, want)| {
                format!("node {v} stores {}, true distance {want}", got.map_or("nothing".into(), |d| d.to_string()))
            }),
        );
    }
    if let Some(p) = partition {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let pr = PartitionResult::parse_dump(f, &text).with_context(|| format!("parsing {}", p.display()))?;
        let r = verify_partition(&g, &pr, f);
        pass &= r.is_valid();
        let coverage = r
            .missing
            .first()
            .map(|v| format!("node {v} has no group"))
            .or_else(|| r.unknown.first().map(|v| format!("{v} is not a node")));
        line(&mut out, coverage.is_none(), "partition coverage", coverage);
        line(
            &mut out,
            r.size_violations.is_empty(),
            "partition sizes",
            r.size_violations
                .first()
                .map(|(q, s)| format!("group {q} has {s} members, allowed {}..={}", f + 1, 3 * f + 1)),
        );
        line(
            &mut out,
            r.foreign_names.is_empty(),
            "partition names",
            r.foreign_names.first().map(|q| format!("group {q} is not one of its members")),
        );
        line(
            &mut out,
            r.non_edges.is_empty(),
            "partition shortcuts",
            r.non_edges.first().map(|(u, w)| format!("{u}-{w} is not an edge")),
        );
        line(
            &mut out,
            r.max_edge_load <= 2,
            "partition edge load",
            (r.max_edge_load > 2).then(|| format!("an edge serves {} groups", r.max_edge_load)),
        );
        line(
            &mut out,
            r.disconnected.is_empty(),
            "partition connectivity",
            r.disconnected.first().map(|q| format!("group {q} is disconnected")),
        );
        line(
            &mut out,
            r.diameter_violations.is_empty(),
            "partition diameter",
            r.diameter_violations.first().map(|(q, d)| format!("group {q} has diameter {d} > {}", 4 * f)),
        );
    }
    emit(None, &out)?;
    Ok(pass)
}

fn cmd_sweep(config: &Path, out: Option<&Path>, series: Option<&Path>) -> Result<bool> {
    let cfg = load_sweep(config)?;
    info!("{} cells", cfg.cells().len());
    let rows = sweep(&cfg);
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv)?;
    emit(out, std::str::from_utf8(&csv)?)?;
    if let Some(p) = series {
        let doc = json!({"schema": SERIES_SCHEMA, "series": mean_rounds_series(&rows)});
        fs::write(p, serde_json::to_string_pretty(&doc)? + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    eprintln!("{SWEEP_SCHEMA}: {passed}/{} cells pass", rows.len());
    for r in rows.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {} F={} ell={} {} seed {} {}", r.graph, r.big_f, r.ell, r.adversary, r.seed, r.error);
    }
    Ok(passed == rows.len())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { kind, n, rows, cols, p, f, tail, seed, out } => {
            let g = generate(&gen_kind(kind, n, rows, cols, p, f, tail)?, seed)?;
            emit(out.as_deref(), &write_graph(&g))?;
            Ok(true)
        }
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Verify { graph, f, ruling_set, partition } => {
            cmd_verify(&graph, f, ruling_set.as_deref(), partition.as_deref())
        }
        Command::Sweep { config, out, series } => cmd_sweep(&config, out.as_deref(), series.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
