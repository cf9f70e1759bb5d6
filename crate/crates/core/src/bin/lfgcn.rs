use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lfgcn_core::config::{self, RunConfig};
use lfgcn_core::dataset::{self, LabeledDataset};
use lfgcn_core::dropedge::{self, DropConfig, PathMetric};
use lfgcn_core::error::{Error, ErrorKind, Result};
use lfgcn_core::graph::{self, Graph};
use lfgcn_core::gssl::{self, classify_from_scores};
use lfgcn_core::harness;
use lfgcn_core::model;
use lfgcn_core::rng;
use lfgcn_core::spectral::{self, LaplacianKind};

#[derive(Parser, Debug)]
#[command(name = "lfgcn", version, about = "Lévy-flight graph convolutional networks and fractional graph tools")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Edge-list file; overrides `graph` in the config.
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true)]
    features: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    #[arg(long, global = true)]
    split: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form (fractional) G-SSL classification from the train labels.
    Gssl {
        /// Use the plain graph instead of its fractional power.
        #[arg(long)]
        standard: bool,
    },
    /// Train one model; writes history.csv, model.lfgc and predictions.csv.
    Train,
    /// Grid sweep over alpha/sigma/gamma; writes sweep.csv and summary.csv.
    Sweep,
    /// Ablation table; writes ablation.csv.
    Ablate,
    /// Edge betweenness and ranks; writes betweenness.csv.
    Betweenness {
        /// Shortest paths by edge weight instead of hop count.
        #[arg(long)]
        weighted: bool,
    },
    /// One P-DropEdge round; writes removed.csv and sampled.edges.
    DropedgeSample {
        /// Uniform baseline: drop the same number of edges from all edges.
        #[arg(long)]
        uniform: bool,
    },
    /// Eigenvalues and the fractional Laplacian; writes eigenvalues.csv and l_gamma.csv.
    SpectralDump {
        /// Power the normalized Laplacian instead of the standard one.
        #[arg(long)]
        normalized: bool,
    },
}

struct Context {
    run: RunConfig,
    out: PathBuf,
}

impl Context {
    fn new(g: &Global) -> Result<Self> {
        let mut run = match &g.config {
            Some(p) => config::load_run_config(p)?,
            None => RunConfig::default(),
        };
        for pair in &g.set {
            run.set_pair(pair)?;
        }
        if let Some(s) = g.seed {
            run.model.seed = s;
        }
        for (slot, flag) in [
            (&mut run.graph, &g.graph),
            (&mut run.features, &g.features),
            (&mut run.labels, &g.labels),
            (&mut run.split, &g.split),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        run.validate()?;
        let out = g.out.clone().or_else(|| run.out.clone()).unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).map_err(|e| Error::Io {
            path: out.clone(),
            source: e,
        })?;
        Ok(Context { run, out })
    }

    fn graph(&self) -> Result<Graph> {
        let p = self
            .run
            .graph
            .as_ref()
            .ok_or_else(|| Error::Config("no graph given (use --graph or `graph =`)".into()))?;
        graph::load_graph(p)
    }

    fn dataset(&self) -> Result<(Graph, LabeledDataset)> {
        dataset::load_dataset(&self.run.dataset_paths()?, self.run.num_classes)
    }

    fn write(&self, name: &str, content: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.out.join(name);
        std::fs::write(&p, content).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
        Ok(p)
    }
}

fn show(p: &Path) {
    println!("wrote {}", p.display());
}

fn predictions_csv(probs: &lfgcn_core::DenseMatrix) -> String {
    let pred = classify_from_scores(probs);
    let mut out = String::from("node,predicted");
    for k in 0..probs.cols() {
        let _ = write!(out, ",score_{k}");
    }
    out.push('\n');
    for (v, p) in pred.iter().enumerate() {
        let _ = write!(out, "{v},{p}");
        for s in probs.row(v) {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    out
}

fn cmd_gssl(ctx: &Context, standard: bool) -> Result<()> {
    let (g, ds) = ctx.dataset()?;
    let m = &ctx.run.model;
    let y = ds.labels.restricted_to(&ds.train);
    let f = if standard {
        let w = spectral::symmetric_adjacency(&g);
        let deg = graph::degree_matrix(&w)?;
        gssl::gssl_classify(&w, deg.require_positive()?, &y, m.alpha, m.sigma)?
    } else {
        let ops = spectral::FractionalOperatorSet::from_graph(&g, m.gamma, m.sigma, m.laplacian)?;
        gssl::fractional_gssl_classify(&ops, &y, m.alpha)?
    };
    show(&ctx.write("predictions.csv", predictions_csv(f.scores()))?);
    if !ds.test.is_empty() {
        let acc = dataset::accuracy(&classify_from_scores(f.scores()), &ds.labels, &ds.test)?;
        println!("test_acc={acc}");
    }
    Ok(())
}

fn cmd_train(ctx: &Context) -> Result<()> {
    let (g, ds) = ctx.dataset()?;
    let cfg = ctx.run.model_for(g.num_nodes());
    let outcome = harness::run_once(&cfg, &g, &ds)?;
    show(&ctx.write("history.csv", outcome.history.to_csv())?);
    let ck = ctx.out.join("model.lfgc");
    model::save_checkpoint(&ck, &outcome.model, &cfg)?;
    show(&ck);
    let probs = model::predict(&outcome.model, &cfg, &g, &ds.features)?;
    show(&ctx.write("predictions.csv", predictions_csv(&probs))?);
    println!("best_epoch={} test_acc={}", outcome.history.best_epoch, outcome.test_acc);
    Ok(())
}

fn cmd_sweep(ctx: &Context) -> Result<()> {
    let (g, ds) = ctx.dataset()?;
    let report = harness::run_sweep(&ctx.run, &g, &ds)?;
    show(&ctx.write("sweep.csv", report.rows_csv())?);
    show(&ctx.write("summary.csv", report.summary_csv())?);
    Ok(())
}

fn cmd_ablate(ctx: &Context) -> Result<()> {
    let (g, ds) = ctx.dataset()?;
    let report = harness::run_ablation(&ctx.run, &g, &ds)?;
    show(&ctx.write("ablation.csv", report.to_csv())?);
    Ok(())
}

fn cmd_betweenness(ctx: &Context, weighted: bool) -> Result<()> {
    let g = ctx.graph()?;
    let metric = if weighted { PathMetric::Weighted } else { PathMetric::Hops };
    let table = dropedge::edge_betweenness_with(&g, metric);
    let ranks = table.ranks();
    let mut out = String::from("edge_id,u,v,score,rank\n");
    for (e, r) in table.entries.iter().zip(ranks) {
        let _ = writeln!(out, "{},{},{},{},{}", e.id, e.u, e.v, e.score, r);
    }
    show(&ctx.write("betweenness.csv", out)?);
    Ok(())
}

fn cmd_dropedge(ctx: &Context, uniform: bool) -> Result<()> {
    let g = ctx.graph()?;
    let base = ctx
        .run
        .model_for(g.num_nodes())
        .drop
        .unwrap_or_else(|| DropConfig::recommended(g.num_nodes(), 0));
    let cfg = DropConfig {
        uniform: uniform || base.uniform,
        ..base
    };
    let table = dropedge::edge_betweenness(&g);
    let mut r = rng::stream(ctx.run.model.seed, "dropedge-sample", &[cfg.seed]);
    let sample = dropedge::pdropedge_sample(&g, &table, &cfg, &mut r)?;
    let mut out = String::from("draw,edge_id,u,v,score\n");
    for (i, &id) in sample.removed.iter().enumerate() {
        let e = &table.entries[id];
        let _ = writeln!(out, "{i},{id},{},{},{}", e.u, e.v, e.score);
    }
    show(&ctx.write("removed.csv", out)?);
    show(&ctx.write("sampled.edges", sample.graph.to_edge_list())?);
    println!(
        "removed={} top_set={} edges={}",
        sample.removed.len(),
        cfg.top_set_size(table.len()),
        table.len()
    );
    Ok(())
}

fn cmd_spectral(ctx: &Context, normalized: bool) -> Result<()> {
    let g = ctx.graph()?;
    let kind = if normalized { LaplacianKind::Normalized } else { ctx.run.model.laplacian };
    let dec = spectral::decompose_graph(&g, kind)?;
    let mut ev = String::from("index,value\n");
    for (i, l) in dec.eigenvalues.iter().enumerate() {
        let _ = writeln!(ev, "{i},{l:.16e}");
    }
    show(&ctx.write("eigenvalues.csv", ev)?);
    let lg = spectral::fractional_laplacian(&dec, ctx.run.model.gamma)?;
    let mut out = String::from("row,col,value\n");
    for r in 0..lg.rows() {
        for c in 0..lg.cols() {
            let _ = writeln!(out, "{r},{c},{:.16e}", lg[(r, c)]);
        }
    }
    show(&ctx.write("l_gamma.csv", out)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(&cli.global)?;
    match cli.command {
        Command::Gssl { standard } => cmd_gssl(&ctx, standard),
        Command::Train => cmd_train(&ctx),
        Command::Sweep => cmd_sweep(&ctx),
        Command::Ablate => cmd_ablate(&ctx),
        Command::Betweenness { weighted } => cmd_betweenness(&ctx, weighted),
        Command::DropedgeSample { uniform } => cmd_dropedge(&ctx, uniform),
        Command::SpectralDump { normalized } => cmd_spectral(&ctx, normalized),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}
