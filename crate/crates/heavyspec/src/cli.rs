//! Command-line driver.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use heavyspec_core::expander::{expose_ports_with, sample_wiring_with};
use heavyspec_core::harness::{example_013, network_spectrum, ratio_report, sweep_convergence_with, ConvergenceReport, Verdict};
use heavyspec_core::homogenization::{assemble_network, BlockModel};
use heavyspec_core::inverse::{pad_targets, prescribe_complete_graph_with, PrescribeOptions, SpectralTarget};
use heavyspec_core::surface::{pinch_schedule, PinchRow};
use heavyspec_core::topology::{walecki_decomposition, SurfaceModel};
use heavyspec_core::{derive_seed, inverse::solve_p3_closed_form, Config};

use crate::formats::{self, read_json, write_graph, write_json, write_network};
use crate::report::{verdict_table, Cell, Emitter, Metadata, OutputFormat, Table};
use crate::settings::load_config;

#[derive(Parser, Debug)]
#[command(name = "heavyspec", version, about = "Prescribe, assemble and check heavy-vertex networks")]
pub struct Cli {
    /// Master seed; overrides the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Exit with status 3 when any verdict fails.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct TargetArgs {
    /// Target file (JSON, or TOML for other extensions).
    #[arg(long, conflicts_with_all = ["targets", "vertices", "epsilon", "padding"])]
    pub target: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,3")]
    pub targets: Vec<f64>,
    /// Carrier size; the smallest odd size >= 5 above the target count by default.
    #[arg(long)]
    pub vertices: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Explicit padding eigenvalues instead of the default ramp.
    #[arg(long, value_delimiter = ',')]
    pub padding: Option<Vec<f64>>,
}

impl TargetArgs {
    pub fn resolve(&self) -> anyhow::Result<SpectralTarget> {
        if let Some(path) = &self.target {
            return Ok(formats::read_target(path)?);
        }
        let n = self.vertices.unwrap_or_else(|| SpectralTarget::minimal_vertices(self.targets.len(), true));
        let t = SpectralTarget::new(self.targets.clone(), self.epsilon, n)?;
        Ok(match &self.padding {
            Some(p) => t.with_padding(p.clone())?,
            None => t,
        })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Weights on K_N whose spectrum is the padded target list.
    Prescribe(TargetArgs),
    /// Assemble the heavy-vertex network at one scale.
    Assemble {
        /// Weight solution written by `prescribe`.
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        m: usize,
        /// `single`, `diamond`, or a JSON block file.
        #[arg(long, default_value = "single")]
        block: String,
        /// Coloring file; a seeded Walecki decomposition by default.
        #[arg(long)]
        coloring: Option<PathBuf>,
    },
    /// Lowest eigenvalues of a graph file.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        /// Number of eigenpairs; all of them up to the dense threshold by default.
        #[arg(long)]
        k: Option<usize>,
        /// Also write the measure-normalized eigenvectors.
        #[arg(long)]
        vectors: bool,
    },
    /// Convergence sweep over scales.
    Sweep {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,12,16")]
        ms: Vec<usize>,
        #[arg(long, default_value = "single")]
        block: String,
    },
    /// Spectra of a pinched surface model along a delta schedule.
    Surface {
        /// Surface model JSON; the three-piece torus chain with spectrum {0, 1, 3} by default.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
        deltas: Vec<f64>,
    },
    /// Sample cluster wirings and report gap and Cheeger certificates.
    ClusterGap {
        #[arg(long, value_delimiter = ',', default_value = "64,125,216,343,512")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        colors: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// The three-piece surface with spectrum {0, 1, 3}.
    #[command(name = "example-013")]
    Example013,
    /// Eigenvalue-ratio table of a sweep report.
    Ratios {
        /// `sweep_report.json` written by `sweep`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Write the default configuration as TOML.
    Defaults,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prescribe(_) => "prescribe",
            Command::Assemble { .. } => "assemble",
            Command::Spectrum { .. } => "spectrum",
            Command::Sweep { .. } => "sweep",
            Command::Surface { .. } => "surface",
            Command::ClusterGap { .. } => "cluster-gap",
            Command::Example013 => "example-013",
            Command::Ratios { .. } => "ratios",
            Command::Defaults => "defaults",
        }
    }
}

/// Text for stdout and whether every verdict passed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub text: String,
    pub all_passed: bool,
}

struct Run {
    config: Config,
    seeds: BTreeMap<String, u64>,
    emit: Emitter,
    text: String,
    all_passed: bool,
}

impl Run {
    fn seed(&mut self, name: &str, stream: u64) -> u64 {
        let s = derive_seed(self.config.seed, stream);
        self.seeds.insert(name.to_string(), s);
        s
    }

    fn verdicts(&mut self, verdicts: &[Verdict]) {
        for v in verdicts {
            let tag = if v.passed { "PASS" } else { "FAIL" };
            let kind = if v.guard { "guard" } else { "exact" };
            writeln!(self.text, "{tag} {:<20} value {:<24} threshold {} ({kind})", v.name, fmt(v.value), fmt(v.threshold)).unwrap();
            self.all_passed &= v.passed;
        }
    }
}

fn fmt(x: f64) -> String {
    formats::fmt_f64(x)
}

pub fn block_model(spec: &str, colors: usize, volume: f64) -> anyhow::Result<BlockModel> {
    Ok(match spec {
        "single" => BlockModel::single_node(colors, volume)?,
        "diamond" => BlockModel::diamond(colors, volume)?,
        path => {
            let b: BlockModel = read_json(Path::new(path))?;
            b.validate()?;
            if b.colors() != colors {
                bail!("block {path} has {} ports, the coloring needs {colors}", b.colors());
            }
            b
        }
    })
}

pub fn run(cli: &Cli, arguments: Vec<String>) -> anyhow::Result<Outcome> {
    let mut config = match &cli.config {
        Some(p) => load_config(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let emit = Emitter::new(&cli.out, cli.format).with_context(|| format!("creating {}", cli.out.display()))?;
    let mut run = Run { config, seeds: BTreeMap::new(), emit, text: String::new(), all_passed: true };
    match &cli.command {
        Command::Prescribe(t) => prescribe(&mut run, t)?,
        Command::Assemble { weights, m, block, coloring } => assemble(&mut run, weights, *m, block, coloring.as_deref())?,
        Command::Spectrum { graph, k, vectors } => spectrum(&mut run, graph, *k, *vectors)?,
        Command::Sweep { target, ms, block } => sweep(&mut run, target, ms, block)?,
        Command::Surface { model, deltas } => surface(&mut run, model.as_deref(), deltas)?,
        Command::ClusterGap { sizes, colors, samples } => cluster_gap(&mut run, sizes, colors, *samples)?,
        Command::Example013 => example(&mut run)?,
        Command::Ratios { report, epsilon } => ratios(&mut run, report, *epsilon)?,
        Command::Defaults => {
            let path = run.emit.artifact("config.toml");
            fs::write(&path, crate::settings::config_to_toml(&run.config)?)?;
            writeln!(run.text, "wrote {}", path.display()).unwrap();
        }
    }
    let meta = Metadata {
        tool: "heavyspec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: heavyspec_core::VERSION.into(),
        command: cli.command.name().into(),
        arguments,
        seed: run.config.seed,
        derived_seeds: run.seeds,
        format: cli.format,
        config: run.config,
        files: Vec::new(),
    };
    let meta_path = run.emit.finish(meta)?;
    writeln!(run.text, "metadata {}", meta_path.display()).unwrap();
    Ok(Outcome { text: run.text, all_passed: run.all_passed })
}

fn prescribe(run: &mut Run, args: &TargetArgs) -> anyhow::Result<()> {
    let t = args.resolve()?;
    let mu = pad_targets(&t, run.config.block_volume)?;
    let seed = run.seed("prescribe", 1);
    let ws = prescribe_complete_graph_with(t.vertices, 1.0, &mu, &PrescribeOptions { seed, ..run.config.prescribe.clone() })?;
    write_json(&run.emit.artifact("weights.json"), &ws)?;
    write_graph(&run.emit.artifact("prescribed.graph"), &ws.to_graph()?)?;
    let mut w = Table::new(&["u", "v", "weight"]);
    for p in &ws.weights {
        w.push(vec![p.u.into(), p.v.into(), p.weight.into()]);
    }
    run.emit.table("weights", &w)?;
    let mut s = Table::new(&["k", "mu", "achieved", "deviation"]);
    for (k, (a, b)) in mu.iter().zip(&ws.achieved_spectrum).enumerate() {
        s.push(vec![(k + 1).into(), (*a).into(), (*b).into(), (b - a).abs().into()]);
    }
    run.emit.table("spectrum", &s)?;
    writeln!(run.text, "prescribed K_{} spectrum {:?}: mismatch {:e} after {} restarts", t.vertices, mu, ws.mismatch, ws.restarts_used)
        .unwrap();
    Ok(())
}

fn assemble(run: &mut Run, weights: &Path, m: usize, block: &str, coloring: Option<&Path>) -> anyhow::Result<()> {
    let ws = formats::read_weights(weights)?;
    let n = ws.measures.len();
    let ca = match coloring {
        Some(p) => formats::read_coloring(p)?,
        None => {
            let s = run.seed("coloring", 2);
            walecki_decomposition(n, s)?
        }
    };
    let b = block_model(block, ca.color_count(), run.config.block_volume)?;
    let seed = run.seed("assembly", 1000 + m as u64);
    let net = assemble_network(&ws, &b, &ca, m, seed, &run.config.wiring)?;
    let graph_path = run.emit.artifact("network.graph");
    let sidecar_path = run.emit.artifact("network.json");
    write_network(&graph_path, &sidecar_path, &net)?;
    formats::write_coloring(&run.emit.artifact("coloring.txt"), &net.color_assignment)?;
    let mut c = Table::new(&["edge", "tail", "head", "color", "length", "w_star"]);
    for (e, k) in net.corridors.iter().enumerate() {
        c.push(vec![e.into(), k.tail.into(), k.head.into(), k.color.into(), k.length.into(), k.w_star.into()]);
    }
    run.emit.table("corridors", &c)?;
    let mut w = Table::new(&[
        "vertex",
        "size",
        "resamples",
        "adjacency_lambda2",
        "ramanujan_bound",
        "laplacian_lambda1",
        "cheeger_lower",
        "post_lambda1",
        "post_cheeger_lower",
    ]);
    for (v, x) in net.wirings.iter().enumerate() {
        let g = &x.gap_certificate;
        let post = x.post_deletion.as_ref();
        w.push(vec![
            v.into(),
            x.size.into(),
            x.resamples.into(),
            g.adjacency_lambda2.into(),
            g.ramanujan_bound.into(),
            g.laplacian_lambda1.into(),
            g.cheeger_lower.into(),
            post.map(|p| p.laplacian_lambda1).into(),
            post.map(|p| p.lower).into(),
        ]);
    }
    run.emit.table("clusters", &w)?;
    writeln!(
        run.text,
        "assembled m = {m}: {} nodes, {} edges, corridor lengths {:?}",
        net.graph.vertex_count(),
        net.graph.edge_count(),
        net.corridor_lengths()
    )
    .unwrap();
    Ok(())
}

fn spectrum(run: &mut Run, graph: &Path, k: Option<usize>, vectors: bool) -> anyhow::Result<()> {
    let g = formats::read_graph(graph)?;
    let n = g.vertex_count();
    let k = match k {
        Some(k) => k,
        None if n <= run.config.dense_threshold => n,
        None => bail!("{n} vertices exceed the dense threshold {}; pass --k", run.config.dense_threshold),
    };
    let seed = run.seed("eigen", 2000);
    let eig = network_spectrum(&g, k, &run.config, seed)?;
    let mut t = Table::new(&["k", "eigenvalue", "residual"]);
    for (i, (l, r)) in eig.eigenvalues.iter().zip(&eig.residuals).enumerate() {
        t.push(vec![i.into(), (*l).into(), (*r).into()]);
    }
    run.emit.table("spectrum", &t)?;
    if vectors {
        let vs = eig.eigenvectors.as_ref().context("solver returned no eigenvectors")?;
        let mut cols = vec!["node".to_string()];
        cols.extend((0..vs.len()).map(|i| format!("u{i}")));
        let mut t = Table { columns: cols, rows: Vec::new() };
        for x in 0..n {
            let mut row = vec![Cell::from(x)];
            row.extend(vs.iter().map(|v| Cell::from(v[x])));
            t.push(row);
        }
        run.emit.table("eigenvectors", &t)?;
    }
    writeln!(run.text, "{k} eigenvalues by {:?} solver, max residual {:e}", eig.method, eig.max_residual()).unwrap();
    Ok(())
}

pub fn sweep_tables(r: &ConvergenceReport) -> (Table, Table) {
    let mut rows =
        Table::new(&["m", "nodes", "reduction_error", "parasitic", "flatness_guard", "max_residual", "corridor_lengths", "error"]);
    let mut modes = Table::new(&["m", "k", "nu", "macro_lambda", "ratio", "rescaled", "corridor_mass", "cluster_flatness"]);
    for row in &r.rows {
        let lengths = row.corridor_lengths.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
        let err = if row.ok() { Some(row.reduction_error(r.vertices - 1)) } else { None };
        rows.push(vec![
            row.m.into(),
            row.nodes.into(),
            err.into(),
            row.parasitic.into(),
            row.flatness_guard.into(),
            row.max_residual.into(),
            lengths.into(),
            row.error.clone().into(),
        ]);
        for k in 0..row.eigenvalues.len() {
            modes.push(vec![
                row.m.into(),
                k.into(),
                row.eigenvalues[k].into(),
                row.macro_eigenvalues.get(k).copied().into(),
                k.checked_sub(1).and_then(|i| row.ratios.get(i)).copied().into(),
                row.rescaled[k].into(),
                row.corridor_mass.get(k).copied().into(),
                row.cluster_flatness.get(k).copied().into(),
            ]);
        }
    }
    (rows, modes)
}

fn sweep(run: &mut Run, args: &TargetArgs, ms: &[usize], block: &str) -> anyhow::Result<()> {
    let t = args.resolve()?;
    let b = block_model(block, (t.vertices - 1) / 2, run.config.block_volume)?;
    run.seed("prescribe", 1);
    run.seed("coloring", 2);
    for &m in ms {
        run.seed(&format!("assembly_m{m}"), 1000 + m as u64);
        run.seed(&format!("eigen_m{m}"), 2000 + m as u64);
    }
    let report = sweep_convergence_with(&t, &b, ms, &run.config)?;
    write_json(&run.emit.artifact("sweep_report.json"), &report)?;
    let (rows, modes) = sweep_tables(&report);
    run.emit.table("sweep", &rows)?;
    run.emit.table("sweep_modes", &modes)?;
    run.emit.table("verdicts", &verdict_table(&report.verdicts))?;
    for row in &report.rows {
        match &row.error {
            None => writeln!(
                run.text,
                "m = {:>3}: {:>6} nodes, max |nu_k / lambda_k - 1| = {:.4}",
                row.m,
                row.nodes,
                row.reduction_error(t.vertices - 1)
            ),
            Some(e) => writeln!(run.text, "m = {:>3}: failed: {e}", row.m),
        }
        .unwrap();
    }
    run.verdicts(&report.verdicts);
    Ok(())
}

fn schedule_table(rows: &[PinchRow]) -> Table {
    let mut t = Table::new(&["delta", "k", "eigenvalue", "rescaled", "curvature"]);
    for r in rows {
        for k in 0..r.eigenvalues.len() {
            t.push(vec![r.delta.into(), k.into(), r.eigenvalues[k].into(), r.rescaled[k].into(), r.curvature.into()]);
        }
    }
    t
}

fn surface(run: &mut Run, model: Option<&Path>, deltas: &[f64]) -> anyhow::Result<()> {
    let s = match model {
        Some(p) => formats::read_surface(p)?,
        None => {
            let (a, b) = solve_p3_closed_form(1.0, 3.0)?;
            SurfaceModel::torus_chain(a, b)?
        }
    };
    let rows = pinch_schedule(&s, deltas)?;
    run.emit.table("surface", &schedule_table(&rows))?;
    for r in &rows {
        writeln!(run.text, "delta = {:e}: rescaled {:?}", r.delta, r.rescaled).unwrap();
    }
    Ok(())
}

fn cluster_gap(run: &mut Run, sizes: &[usize], colors: &[usize], samples: usize) -> anyhow::Result<()> {
    let mut t = Table::new(&[
        "size",
        "colors",
        "sample",
        "resamples",
        "adjacency_lambda2",
        "ramanujan_bound",
        "slack",
        "laplacian_lambda1",
        "cheeger_lower",
        "post_lambda1",
        "post_cheeger_lower",
        "post_cheeger_upper",
    ]);
    let mut index = 0u64;
    for &d in colors {
        for &size in sizes {
            for sample in 0..samples {
                let ws = run.seed(&format!("wiring_{index}"), 4000 + index);
                let ps = run.seed(&format!("ports_{index}"), 5000 + index);
                index += 1;
                let w = sample_wiring_with(size, d, ws, &run.config.wiring)?;
                let w = expose_ports_with(&w, ps, &run.config.wiring)?;
                let g = &w.gap_certificate;
                let post = w.post_deletion.as_ref();
                t.push(vec![
                    size.into(),
                    d.into(),
                    sample.into(),
                    w.resamples.into(),
                    g.adjacency_lambda2.into(),
                    g.ramanujan_bound.into(),
                    g.slack.into(),
                    g.laplacian_lambda1.into(),
                    g.cheeger_lower.into(),
                    post.map(|p| p.laplacian_lambda1).into(),
                    post.map(|p| p.lower).into(),
                    post.map(|p| p.upper).into(),
                ]);
                writeln!(
                    run.text,
                    "size {size:>5} D = {d}: adjacency lambda2 {:.4} <= {:.4}, post-deletion Cheeger lower {:.4}",
                    g.adjacency_lambda2,
                    g.ramanujan_bound + g.slack,
                    post.map_or(f64::NAN, |p| p.lower)
                )
                .unwrap();
            }
        }
    }
    run.emit.table("cluster_gap", &t)?;
    Ok(())
}

fn example(run: &mut Run) -> anyhow::Result<()> {
    let r = example_013()?;
    write_json(&run.emit.artifact("example_013.json"), &r)?;
    run.emit.table("example_013", &verdict_table(&r.verdicts))?;
    run.emit.table("example_013_schedule", &schedule_table(&r.schedule))?;
    writeln!(run.text, "w12 = {}, w23 = {}, genus {}", fmt(r.w12), fmt(r.w23), r.genus).unwrap();
    run.verdicts(&r.verdicts);
    Ok(())
}

fn ratios(run: &mut Run, path: &Path, epsilon: Option<f64>) -> anyhow::Result<()> {
    let report: ConvergenceReport = read_json(path)?;
    let t = SpectralTarget::new(report.targets.clone(), epsilon.unwrap_or(0.1), report.vertices)?;
    let rr = ratio_report(&t, &report);
    let mut table =
        Table::new(&["m", "i", "ratio", "target_ratio", "delta", "max_ratio_error", "bound", "bound_holds", "epsilon_qualified"]);
    for row in &rr.rows {
        for (i, (r, target)) in row.ratios.iter().zip(&rr.target_ratios).enumerate() {
            table.push(vec![
                row.m.into(),
                (i + 1).into(),
                (*r).into(),
                (*target).into(),
                row.delta.into(),
                row.max_ratio_error.into(),
                row.bound.into(),
                row.bound_holds.into(),
                row.epsilon_qualified.into(),
            ]);
        }
        let holds = match row.bound_holds {
            Some(true) => "holds",
            Some(false) => "VIOLATED",
            None => "n/a",
        };
        writeln!(run.text, "m = {:>3}: ratios {:?}, delta {:.4}, bound {holds}", row.m, row.ratios, row.delta).unwrap();
        run.all_passed &= row.bound_holds != Some(false);
    }
    run.emit.table("ratios", &table)?;
    Ok(())
}
