//! `quasicap` command-line front end.
//!
//! Every subcommand writes one report, JSON by default or CSV with
//! `--format csv`. Exit codes: 0 success, 1 solver did not meet its
//! tolerance (report still written), 2 usage error, 3 invariant failure.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use quasicap::capacity::{capacity_profile, hyperbolicity_probe, resolve_labels, solve_condenser, CondenserProblem};
use quasicap::covering::{
    block_partition, build_cell_set, build_grid_model, certificate_check, covering_value, scaling_study,
    CellSet, CoveringStrategy, NormKind, ShapeKind, Weighting,
};
use quasicap::graph::{cayley_ball, GradientCombiner, Group, LabeledGraph};
use quasicap::modulus::{solve_modulus, transfer_compare, truncated_shift_tuple, ProjectionPair};
use quasicap::{Error, NormingFunction, SolveOptions, StepRule};

use report::{Outcome, Status, Table};

#[derive(Parser)]
#[command(name = "quasicap", version, about = "Nonlinear capacities on graphs, operator tuples and cell sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Include wall-clock timing (makes reports non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Condenser capacity of a graph or Cayley ball.
    CapGraph {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        condenser: CondenserArgs,
        #[arg(long, default_value = "max")]
        combiner: GradientCombiner,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Capacity of a fixed source set on balls of growing radius.
    CapProfile {
        #[arg(long)]
        group: Group,
        #[arg(long = "source", required = true)]
        sources: Vec<String>,
        #[arg(long, default_value = "l2")]
        phi: NormingFunction,
        #[arg(long, default_value = "max")]
        combiner: GradientCombiner,
        #[arg(long)]
        radii: IndexList,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Reads the singleton capacity profile for signs of p-hyperbolicity.
    Probe {
        #[arg(long)]
        group: Group,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 6)]
        rmax: usize,
        #[arg(long, default_value = "max")]
        combiner: GradientCombiner,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Condenser modulus of the truncated shift tuple, `P` on the sources, `Q` on sinks and halo.
    Modulus {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        condenser: CondenserArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Graph capacity against matrix modulus, with both sandwich checks.
    Transfer {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        condenser: CondenserArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Upper bound on the covering functional at scale `eps`.
    Cover {
        #[command(flatten)]
        cells: CellArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "l1")]
        phi: NormingFunction,
        #[arg(long, default_value = "dyadic")]
        strategy: CoveringStrategy,
    },
    /// Commutator bound for the covering projection of a block partition.
    Certify {
        #[command(flatten)]
        cells: CellArgs,
        /// Cells per axis in each block of the partition.
        #[arg(long)]
        parts: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "l1")]
        phi: NormingFunction,
    },
    /// Covering values and certificates over a range of levels.
    Scale {
        #[arg(long)]
        shape: ShapeKind,
        #[arg(long)]
        p: String,
        #[arg(long)]
        levels: IndexList,
        #[arg(long, default_value = "lorentz")]
        norm: NormKind,
    },
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, requires = "radius", conflicts_with = "graph_file")]
    group: Option<Group>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long, required_unless_present = "group")]
    graph_file: Option<PathBuf>,
}

#[derive(Args)]
struct CondenserArgs {
    #[arg(long = "source", required = true)]
    sources: Vec<String>,
    #[arg(long = "sink")]
    sinks: Vec<String>,
    #[arg(long, default_value = "l2")]
    phi: NormingFunction,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = SolveOptions::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value = "polyak")]
    step: StepRule,
    #[arg(long, default_value_t = SolveOptions::default().tol)]
    tol: f64,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> SolveOptions {
        SolveOptions {
            max_iters: self.max_iters,
            step_rule: self.step,
            tol: self.tol,
            seed,
            ..SolveOptions::default()
        }
    }
}

#[derive(Args)]
struct CellArgs {
    #[arg(long, required_unless_present = "cell_file", conflicts_with = "cell_file")]
    shape: Option<ShapeKind>,
    #[arg(long, requires = "shape")]
    level: Option<usize>,
    #[arg(long, default_value = "uniform")]
    weights: Weighting,
    #[arg(long)]
    cell_file: Option<PathBuf>,
}

impl CellArgs {
    fn load(&self) -> quasicap::Result<CellSet> {
        match (&self.cell_file, self.shape) {
            (Some(path), _) => CellSet::from_text(&read_file(path)?),
            (None, Some(shape)) => build_cell_set(shape, self.level.unwrap_or(0), self.weights),
            (None, None) => Err(Error::Input("either --shape or --cell-file is required".into())),
        }
    }
}

/// `a..b` (inclusive) or `a,b,c`.
#[derive(Clone)]
struct IndexList(Vec<usize>);

impl std::str::FromStr for IndexList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((a, b)) = s.split_once("..") {
            let a: usize = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
            let b: usize = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
            if a > b {
                return Err(format!("empty range {s}"));
            }
            return Ok(IndexList((a..=b).collect()));
        }
        s.split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|e| format!("bad entry `{v}`: {e}")))
            .collect::<Result<_, _>>()
            .map(IndexList)
    }
}

fn read_file(path: &PathBuf) -> quasicap::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

struct Loaded {
    graph: LabeledGraph,
    group: Option<Group>,
}

impl GraphArgs {
    fn load(&self) -> quasicap::Result<Loaded> {
        match (&self.graph_file, self.group, self.radius) {
            (Some(path), _, _) => Ok(Loaded {
                graph: LabeledGraph::from_text(&read_file(path)?)?,
                group: None,
            }),
            (None, Some(group), Some(radius)) => Ok(Loaded {
                graph: cayley_ball(group, radius)?,
                group: Some(group),
            }),
            _ => Err(Error::Input("need --group with --radius, or --graph-file".into())),
        }
    }
}

fn sets(loaded: &Loaded, c: &CondenserArgs) -> quasicap::Result<(Vec<usize>, Vec<usize>)> {
    Ok((
        resolve_labels(&loaded.graph, loaded.group, &c.sources)?,
        resolve_labels(&loaded.graph, loaded.group, &c.sinks)?,
    ))
}

fn converged(ok: bool) -> Status {
    if ok {
        Status::Ok
    } else {
        Status::NotConverged
    }
}

/// Shortest round-trip form, switching to exponent notation for tiny values.
fn fmt(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| v.to_string())
}

fn run(command: &Command, seed: u64) -> quasicap::Result<Outcome> {
    match command {
        Command::CapGraph {
            graph,
            condenser,
            combiner,
            solver,
        } => {
            let loaded = graph.load()?;
            let (src, snk) = sets(&loaded, condenser)?;
            let problem = CondenserProblem::new(&loaded.graph, &src, &snk, condenser.phi.clone(), *combiner)?;
            let r = solve_condenser(&problem, &solver.options(seed))?;
            let f = r.minimizer.values();
            let minimizer: Vec<_> = (0..loaded.graph.vertex_count())
                .map(|v| json!({"vertex": loaded.graph.label(v), "value": f[v]}))
                .collect();
            let table = Table::new(
                &["vertex", "value"],
                (0..loaded.graph.vertex_count())
                    .map(|v| vec![loaded.graph.label(v).to_string(), fmt(f[v])])
                    .collect(),
            );
            Ok(Outcome {
                results: json!({
                    "value": r.value,
                    "iterations": r.iterations,
                    "feasibility_residual": r.feasibility_residual,
                    "tolerance_met": r.tolerance_met,
                    "minimizer": minimizer,
                }),
                table,
                status: converged(r.tolerance_met),
            })
        }
        Command::CapProfile {
            group,
            sources,
            phi,
            combiner,
            radii,
            solver,
        } => {
            let profile = capacity_profile(*group, sources, phi, *combiner, &radii.0, &solver.options(seed))?;
            let table = Table::new(
                &["R", "value", "iterations", "tolerance_met"],
                profile
                    .iter()
                    .map(|p| vec![p.radius.to_string(), fmt(p.value), p.iterations.to_string(), p.tolerance_met.to_string()])
                    .collect(),
            );
            Ok(Outcome {
                status: converged(profile.iter().all(|p| p.tolerance_met)),
                results: json!({ "profile": profile }),
                table,
            })
        }
        Command::Probe {
            group,
            p,
            rmax,
            combiner,
            solver,
        } => {
            let r = hyperbolicity_probe(*group, *p, *rmax, *combiner, &solver.options(seed))?;
            let table = Table::new(
                &["R", "value"],
                r.profile.iter().map(|q| vec![q.radius.to_string(), fmt(q.value)]).collect(),
            );
            Ok(Outcome {
                status: converged(r.profile.iter().all(|q| q.tolerance_met)),
                results: serde_json::to_value(&r).map_err(|e| Error::Numerical(e.to_string()))?,
                table,
            })
        }
        Command::Modulus {
            graph,
            condenser,
            solver,
        } => {
            let loaded = graph.load()?;
            let (src, mut snk) = sets(&loaded, condenser)?;
            snk.extend(loaded.graph.halo_vertices());
            let tuple = truncated_shift_tuple(&loaded.graph)?;
            let pq = ProjectionPair::coordinates(loaded.graph.vertex_count(), &src, &snk)?;
            let r = solve_modulus(&tuple, &pq, &condenser.phi, &solver.options(seed))?;
            let diagonal: Vec<f64> = r.minimizer.diagonal().iter().copied().collect();
            let table = Table::new(
                &["value", "iterations", "feasibility_residual", "tolerance_met"],
                vec![vec![
                    fmt(r.value),
                    r.iterations.to_string(),
                    fmt(r.feasibility_residual),
                    r.tolerance_met.to_string(),
                ]],
            );
            Ok(Outcome {
                results: json!({
                    "value": r.value,
                    "iterations": r.iterations,
                    "feasibility_residual": r.feasibility_residual,
                    "tolerance_met": r.tolerance_met,
                    "diagonal": diagonal,
                }),
                table,
                status: converged(r.tolerance_met),
            })
        }
        Command::Transfer {
            graph,
            condenser,
            solver,
        } => {
            let loaded = graph.load()?;
            let (src, snk) = sets(&loaded, condenser)?;
            let r = transfer_compare(&loaded.graph, &src, &snk, &condenser.phi, &solver.options(seed))?;
            let table = Table::new(
                &["cap_graph", "k_matrix", "gap", "relative_gap", "diag_roundtrip_ok"],
                vec![vec![
                    fmt(r.cap_graph),
                    fmt(r.k_matrix),
                    fmt(r.gap),
                    fmt(r.relative_gap),
                    r.diag_roundtrip_ok.to_string(),
                ]],
            );
            let status = if !r.diag_roundtrip_ok {
                Status::InvariantFailed
            } else {
                converged(r.tolerance_met)
            };
            Ok(Outcome {
                results: serde_json::to_value(&r).map_err(|e| Error::Numerical(e.to_string()))?,
                table,
                status,
            })
        }
        Command::Cover {
            cells,
            eps,
            phi,
            strategy,
        } => {
            let set = cells.load()?;
            let r = covering_value(&set, *eps, phi, *strategy)?;
            let table = Table::new(
                &["part", "cells", "radius"],
                r.covering
                    .parts
                    .iter()
                    .zip(&r.covering.radii)
                    .enumerate()
                    .map(|(j, (p, rad))| vec![j.to_string(), p.len().to_string(), fmt(*rad)])
                    .collect(),
            );
            Ok(Outcome {
                results: json!({
                    "value": r.value,
                    "cells": set.len(),
                    "parts": r.covering.parts.len(),
                    "radii": r.covering.radii,
                }),
                table,
                status: Status::Ok,
            })
        }
        Command::Certify { cells, parts, eps, phi } => {
            let set = cells.load()?;
            let cover = block_partition(&set, *parts)?;
            let model = build_grid_model(&set)?;
            let c = certificate_check(&model, &cover, phi, *eps)?;
            let table = Table::new(
                &["lhs_ideal", "rhs_ideal", "lhs_op", "rhs_op", "ok"],
                vec![vec![fmt(c.lhs_ideal), fmt(c.rhs_ideal), fmt(c.lhs_op), fmt(c.rhs_op), c.ok.to_string()]],
            );
            Ok(Outcome {
                status: if c.ok { Status::Ok } else { Status::InvariantFailed },
                results: json!({
                    "lhs": c.lhs_ideal,
                    "rhs": c.rhs_ideal,
                    "lhs_op": c.lhs_op,
                    "rhs_op": c.rhs_op,
                    "ok": c.ok,
                    "parts": cover.parts.len(),
                }),
                table,
            })
        }
        Command::Scale { shape, p, levels, norm } => {
            let p = parse_exponent(p)?;
            let study = scaling_study(*shape, p, &levels.0, *norm)?;
            let table = Table::new(
                &["level", "parts", "eps", "covering_value", "lhs_ideal", "rhs_ideal", "ok"],
                study
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.level.to_string(),
                            r.parts.to_string(),
                            fmt(r.eps),
                            fmt(r.covering_value),
                            fmt(r.lhs_ideal),
                            fmt(r.rhs_ideal),
                            r.ok.to_string(),
                        ]
                    })
                    .collect(),
            );
            Ok(Outcome {
                status: if study.rows.iter().all(|r| r.ok) {
                    Status::Ok
                } else {
                    Status::InvariantFailed
                },
                results: serde_json::to_value(&study).map_err(|e| Error::Numerical(e.to_string()))?,
                table,
            })
        }
    }
}

/// A plain number or `log8/log3`.
fn parse_exponent(s: &str) -> quasicap::Result<f64> {
    match format!("lp:{s}").parse::<NormingFunction>()? {
        NormingFunction::Lp(p) => Ok(p),
        _ => unreachable!("lp argument parses to Lp"),
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let started = Instant::now();
    let outcome = match run(&cli.command, cli.common.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    let timing = cli.common.timing.then(|| started.elapsed().as_secs_f64());
    let body = match cli.common.format {
        Format::Json => report::json_report(&argv[1..], &outcome, timing, cli.common.seed),
        Format::Csv => report::csv_report(&outcome.table),
    };
    let body = match body {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if let Err(e) = report::emit(cli.common.output.as_deref(), &body) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.status.code())
}
