//! Command-line front end. Every subcommand reads its inputs from explicit
//! paths and writes only below the output directory.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::backbone::{self, cooccurrence_weights, degree_preserving_null, BackboneReport, ModularityResult};
use crate::dynamics::{EmbeddingSeries, Period};
use crate::error::{Error, Result};
use crate::eval::{evaluate_embeddings, Metrics};
use crate::graph::{split_edges, EdgeSplit, Graph, SplitPart};
use crate::io::{self, SavedModel};
use crate::optim::{
    analyze, sweep, threshold_curve, train_with_policy, CellSummary, EpochRecord, SparsityReport, SweepGrid,
    TrainConfig, TrainedModel, TrainingData, Variant,
};
use crate::synth::{generate_planted, PlantedConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CONCEPT_GAE_OUT";
const DEFAULT_OUT_DIR: &str = "out";
const DEFAULT_DELTAS: [f64; 9] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0];

#[derive(Debug, Parser)]
#[command(name = "concept-gae", version, about = "Select the concepts that best explain a network's edges")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output directory [default: $CONCEPT_GAE_OUT or ./out]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Random seed; overrides the config file [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file overriding training defaults; unknown keys are rejected
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More logging (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weighted network -> significant unweighted graph plus polarization report
    Backbone(BackboneArgs),
    /// Split a graph's edges into train/dev/test with frozen negatives
    Split(SplitArgs),
    /// Generate a planted benchmark graph and feature directory
    Synth(SynthArgs),
    /// Train one configuration
    Train(TrainArgs),
    /// Grid search under a cap on surviving concepts
    Sweep(SweepArgs),
    /// Score saved models on the dev and test pairs
    Eval(EvalArgs),
    /// Report the surviving concepts of a saved model
    Analyze(AnalyzeArgs),
    /// Align per-period embeddings and rank nodes by drift
    Dynamics(DynamicsArgs),
    /// Turn JSON reports into plain TSV series
    PlotData(PlotDataArgs),
}

#[derive(Debug, Args)]
pub struct BackboneArgs {
    /// TSV of node_i, node_j, weight
    #[arg(long, conflicts_with = "activity", required_unless_present = "activity")]
    pub weights: Option<PathBuf>,
    /// TSV of user, node, comment count
    #[arg(long)]
    pub activity: Option<PathBuf>,
    #[arg(long, default_value_t = backbone::MIN_COMMENTS)]
    pub min_comments: u64,
    /// Candidate significance thresholds, increasing
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100)]
    pub null_shuffles: usize,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.6, 0.2, 0.2])]
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Planted,
    TwoCliques,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::Planted)]
    pub preset: Preset,
    /// JSON generator settings; unknown keys are rejected
    #[arg(long)]
    pub planted_config: Option<PathBuf>,
    /// Train/dev/test ratios for the split written alongside the graph
    #[arg(long, value_delimiter = ',', default_values_t = [0.6, 0.2, 0.2])]
    pub split: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Maximum number of surviving concepts [default: config or 150]
    #[arg(long, conflicts_with = "unconstrained")]
    pub theta: Option<usize>,
    /// Select without a cap on surviving concepts
    #[arg(long)]
    pub unconstrained: bool,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub learning_rates: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Parallel grid cells
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Checkpoint directories to score
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// LABEL=CHECKPOINT_DIR, in period order; the first is the reference
    #[arg(long = "period", required = true, num_args = 1)]
    pub periods: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    /// Sweep leaderboard -> threshold_curve.tsv
    #[arg(long)]
    pub leaderboard: Option<PathBuf>,
    /// Analysis report -> beta_rank.tsv, gamma_hist.tsv, foundations.tsv
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    /// Drift ranking -> drift_series.tsv
    #[arg(long)]
    pub drift: Option<PathBuf>,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 3,
        Error::Format { .. } => 4,
        Error::Infeasible { .. } => 5,
        Error::Divergence { .. } | Error::NonFinite(_) | Error::ProxNonConvergence { .. } | Error::StaleCache => 6,
        _ => 7,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Format { .. } => "format",
        Error::Infeasible { .. } => "infeasible",
        Error::Divergence { .. } | Error::NonFinite(_) | Error::ProxNonConvergence { .. } | Error::StaleCache => {
            "numerical"
        }
        _ => "invalid-input",
    }
}

/// One-line machine-readable description of an error.
pub fn error_line(e: &Error) -> String {
    serde_json::json!({
        "error": error_kind(e),
        "exit_code": exit_code(e),
        "message": e.to_string(),
    })
    .to_string()
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("RUST_LOG").try_init();
    match run(&cli) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let ctx = Context::new(&cli.global)?;
    eprintln!("seed = {}", ctx.seed);
    match &cli.command {
        Command::Backbone(a) => run_backbone(&ctx, a),
        Command::Split(a) => run_split(&ctx, a),
        Command::Synth(a) => run_synth(&ctx, a),
        Command::Train(a) => run_train(&ctx, a),
        Command::Sweep(a) => run_sweep(&ctx, a),
        Command::Eval(a) => run_eval(&ctx, a),
        Command::Analyze(a) => run_analyze(&ctx, a),
        Command::Dynamics(a) => run_dynamics(&ctx, a),
        Command::PlotData(a) => run_plot_data(&ctx, a),
    }
}

struct Context {
    out_dir: PathBuf,
    seed: u64,
    config: TrainConfig,
}

impl Context {
    fn new(global: &GlobalArgs) -> Result<Self> {
        let mut config: TrainConfig = match &global.config {
            Some(path) => io::read_json(path)?,
            None => TrainConfig::default(),
        };
        if let Some(seed) = global.seed {
            config.seed = seed;
        }
        let out_dir = global
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(Context {
            out_dir,
            seed: config.seed,
            config,
        })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn model_config(&self, m: &ModelArgs) -> TrainConfig {
        let mut c = self.config.clone();
        if let Some(v) = m.variant {
            c.variant = v;
        }
        if let Some(s) = m.standardize {
            c.standardize = s;
        }
        if let Some(h) = m.hidden_dim {
            c.hidden_dim = h;
        }
        if let Some(h) = m.embed_dim {
            c.embed_dim = h;
        }
        c
    }
}

fn write_text(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    io::write_atomic(&path, text.as_bytes())?;
    written.push(path);
    Ok(())
}

fn write_report<T: Serialize>(path: PathBuf, value: &T, written: &mut Vec<PathBuf>) -> Result<()> {
    io::write_json(&path, value)?;
    written.push(path);
    Ok(())
}

#[derive(Serialize)]
struct BackboneOutput<'a> {
    seed: u64,
    backbone: &'a BackboneReport,
    modularity: &'a ModularityResult,
}

fn run_backbone(ctx: &Context, a: &BackboneArgs) -> Result<Vec<PathBuf>> {
    let network = match (&a.weights, &a.activity) {
        (Some(w), _) => io::read_weighted_tsv(w)?,
        (None, Some(act)) => cooccurrence_weights(&io::read_activity_tsv(act)?, a.min_comments),
        (None, None) => return Err(Error::InvalidArgument("need --weights or --activity".into())),
    };
    let deltas = a.deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
    let (graph, report) = backbone::backbone(&network, &deltas)?;
    let modularity = degree_preserving_null(&graph, a.null_shuffles, ctx.seed)?;
    let mut written = Vec::new();
    let graph_path = ctx.out("graph.json");
    io::write_graph(&graph_path, &graph)?;
    written.push(graph_path);
    write_report(
        ctx.out("backbone.json"),
        &BackboneOutput {
            seed: ctx.seed,
            backbone: &report,
            modularity: &modularity,
        },
        &mut written,
    )?;
    Ok(written)
}

fn ratios(v: &[f64]) -> Result<[f64; 3]> {
    v.try_into()
        .map_err(|_| Error::InvalidArgument(format!("need three split ratios, got {}", v.len())))
}

fn run_split(ctx: &Context, a: &SplitArgs) -> Result<Vec<PathBuf>> {
    let graph = io::read_graph(&a.graph)?;
    let split = split_edges(&graph, ratios(&a.ratios)?, ctx.seed)?;
    let path = ctx.out("split.json");
    io::write_split(&path, &split)?;
    Ok(vec![path])
}

fn run_synth(ctx: &Context, a: &SynthArgs) -> Result<Vec<PathBuf>> {
    let mut cfg = match (&a.planted_config, a.preset) {
        (Some(path), _) => io::read_json(path)?,
        (None, Preset::Planted) => PlantedConfig::default(),
        (None, Preset::TwoCliques) => PlantedConfig::two_cliques(10, ctx.seed),
    };
    cfg.seed = ctx.seed;
    let split_ratios = ratios(&a.split)?;
    let (graph, bundle, truth) = generate_planted(&cfg)?;
    let split = split_edges(&graph, split_ratios, ctx.seed)?;

    let mut written = Vec::new();
    let graph_path = ctx.out("graph.json");
    io::write_graph(&graph_path, &graph)?;
    written.push(graph_path);
    let features_path = ctx.out("features");
    io::write_features(&features_path, &bundle)?;
    written.push(features_path);
    write_report(
        ctx.out("truth.json"),
        &serde_json::json!({ "seed": ctx.seed, "config": cfg, "truth": truth }),
        &mut written,
    )?;
    let split_path = ctx.out("split.json");
    io::write_split(&split_path, &split)?;
    written.push(split_path);
    Ok(written)
}

struct Loaded {
    data: TrainingData,
    concepts: Vec<String>,
}

fn load(d: &DataArgs, standardize: bool) -> Result<Loaded> {
    let graph = io::read_graph(&d.graph)?;
    let features = io::read_features(&d.features)?;
    let split = io::read_split(&d.split, &graph)?;
    let concepts = features.concepts().to_vec();
    Ok(Loaded {
        data: TrainingData::new(&graph, &features, &split, standardize)?,
        concepts,
    })
}

fn history_tsv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch\tloss_pred\tloss_reg\tloss_total\tdev_auc\tdev_ap\tn_active\n");
    for r in history {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.epoch, r.loss_pred, r.loss_reg, r.loss_total, r.dev_auc, r.dev_ap, r.n_active
        );
    }
    out
}

fn save_model(
    ctx: &Context,
    loaded: &Loaded,
    model: &TrainedModel,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let z = loaded.data.embed(&model.params, &model.config)?;
    let saved = SavedModel::new(model, loaded.data.graph.node_names().to_vec(), loaded.concepts.clone(), z);
    let path = ctx.out("model");
    io::write_checkpoint(&path, &saved)?;
    written.push(path);
    Ok(())
}

#[derive(Serialize)]
struct ModelSummary {
    seed: u64,
    variant: Variant,
    epoch: usize,
    learning_rate: f64,
    lambda: f64,
    n_active: usize,
    active_concepts: Vec<String>,
    dev: Metrics,
    test: Metrics,
}

fn summarize(loaded: &Loaded, model: &TrainedModel) -> Result<ModelSummary> {
    let data = &loaded.data;
    Ok(ModelSummary {
        seed: model.config.seed,
        variant: model.config.variant,
        epoch: model.epoch,
        learning_rate: model.config.learning_rate,
        lambda: model.config.lambda,
        n_active: model.active_concepts.len(),
        active_concepts: model.active_concepts.iter().map(|&c| loaded.concepts[c].clone()).collect(),
        dev: data.evaluate(&model.params, &model.config, SplitPart::Dev)?,
        test: data.evaluate(&model.params, &model.config, SplitPart::Test)?,
    })
}

fn run_train(ctx: &Context, a: &TrainArgs) -> Result<Vec<PathBuf>> {
    let mut config = ctx.model_config(&a.model);
    if let Some(e) = a.epochs {
        config.epochs = e;
    }
    if let Some(r) = a.learning_rate {
        config.learning_rate = r;
    }
    if let Some(l) = a.lambda {
        config.lambda = l;
    }
    let loaded = load(&a.data, config.standardize)?;
    let (model, _) = train_with_policy(&loaded.data, &config, None)?;
    let mut written = Vec::new();
    save_model(ctx, &loaded, &model, &mut written)?;
    write_text(ctx.out("history.tsv"), &history_tsv(&model.history), &mut written)?;
    write_report(ctx.out("train.json"), &summarize(&loaded, &model)?, &mut written)?;
    Ok(written)
}

#[derive(Serialize, Deserialize)]
struct SweepLeaderboard {
    seed: u64,
    variant: Variant,
    theta: Option<usize>,
    grid: SweepGrid,
    n_concepts: usize,
    best_cell: usize,
    cells: Vec<CellSummary>,
}

fn run_sweep(ctx: &Context, a: &SweepArgs) -> Result<Vec<PathBuf>> {
    let config = ctx.model_config(&a.model);
    let theta = if a.unconstrained {
        None
    } else {
        Some(a.theta.unwrap_or(ctx.config.theta))
    };
    let defaults = SweepGrid::default();
    let grid = SweepGrid {
        max_epochs: a.max_epochs.unwrap_or(defaults.max_epochs),
        learning_rates: a.learning_rates.clone().unwrap_or(defaults.learning_rates),
        lambdas: a.lambdas.clone().unwrap_or(defaults.lambdas),
    };
    let loaded = load(&a.data, config.standardize)?;
    let outcome = sweep(&loaded.data, &config, &grid, theta, a.jobs)?;
    let mut written = Vec::new();
    save_model(ctx, &loaded, &outcome.best, &mut written)?;
    write_text(ctx.out("history.tsv"), &history_tsv(&outcome.best.history), &mut written)?;
    write_report(ctx.out("best.json"), &summarize(&loaded, &outcome.best)?, &mut written)?;
    write_report(
        ctx.out("leaderboard.json"),
        &SweepLeaderboard {
            seed: ctx.seed,
            variant: config.variant,
            theta,
            grid,
            n_concepts: loaded.data.n_concepts(),
            best_cell: outcome.best_cell,
            cells: outcome.cells,
        },
        &mut written,
    )?;
    Ok(written)
}

#[derive(Serialize)]
struct EvalEntry {
    model: String,
    variant: Variant,
    seed: u64,
    epoch: usize,
    n_active: usize,
    dev: Metrics,
    test: Metrics,
}

fn run_eval(ctx: &Context, a: &EvalArgs) -> Result<Vec<PathBuf>> {
    let graph = io::read_graph(&a.graph)?;
    let split: EdgeSplit = io::read_split(&a.split, &graph)?;
    let mut entries = Vec::new();
    for dir in &a.models {
        let saved = io::read_checkpoint(dir)?;
        let z = align_rows(&saved, &graph, dir)?;
        let (dp, dn) = split.part(SplitPart::Dev);
        let (tp, tn) = split.part(SplitPart::Test);
        entries.push(EvalEntry {
            model: dir.display().to_string(),
            variant: saved.config.variant,
            seed: saved.config.seed,
            epoch: saved.epoch,
            n_active: saved.active_concepts.len(),
            dev: evaluate_embeddings(&z, dp, dn)?,
            test: evaluate_embeddings(&z, tp, tn)?,
        });
    }
    // stable: equal dev AUC keeps the command-line order
    entries.sort_by(|x, y| y.dev.auc.total_cmp(&x.dev.auc));
    let mut written = Vec::new();
    write_report(
        ctx.out("leaderboard.json"),
        &serde_json::json!({ "seed": ctx.seed, "entries": entries }),
        &mut written,
    )?;
    Ok(written)
}

/// Embedding rows of `saved` reordered to the graph's node order.
fn align_rows(saved: &SavedModel, graph: &Graph, dir: &Path) -> Result<ndarray::Array2<f64>> {
    if saved.nodes.len() != graph.n_nodes() {
        return Err(Error::format(dir, "checkpoint nodes differ from the graph"));
    }
    let mut z = ndarray::Array2::zeros(saved.z.raw_dim());
    for (row, name) in saved.nodes.iter().enumerate() {
        let i = graph
            .index_of(name)
            .ok_or_else(|| Error::format(dir, format!("checkpoint node `{name}` is not in the graph")))?;
        z.row_mut(i).assign(&saved.z.row(row));
    }
    Ok(z)
}

fn run_analyze(ctx: &Context, a: &AnalyzeArgs) -> Result<Vec<PathBuf>> {
    let saved = io::read_checkpoint(&a.model)?;
    let features = io::read_features(&a.features)?;
    if features.concepts() != saved.concepts.as_slice() {
        return Err(Error::format(&a.features, "concepts differ from the checkpoint"));
    }
    let model = TrainedModel {
        params: saved.params,
        history: Vec::new(),
        active_concepts: saved.active_concepts,
        config: saved.config,
        epoch: saved.epoch,
    };
    let report = analyze(&model, &features);
    let mut written = Vec::new();
    write_report(
        ctx.out("analysis.json"),
        &serde_json::json!({ "seed": model.config.seed, "report": report }),
        &mut written,
    )?;
    let mut gamma = String::from("concept\tgamma\tclass\tdominant_foundation\n");
    for c in &report.concepts {
        let class = serde_json::to_value(c.gamma_class).expect("serializable");
        let _ = writeln!(gamma, "{}\t{}\t{}\t{}", c.concept, c.gamma, class.as_str().unwrap_or(""), c.dominant_foundation);
    }
    write_text(ctx.out("gamma.tsv"), &gamma, &mut written)?;
    let mut strength = String::from("node\tconcept\tfoundation\tstrength\n");
    for s in &report.framing_strength {
        let _ = writeln!(strength, "{}\t{}\t{}\t{}", s.node, s.concept, s.foundation, s.strength);
    }
    write_text(ctx.out("framing_strength.tsv"), &strength, &mut written)?;
    Ok(written)
}

fn run_dynamics(ctx: &Context, a: &DynamicsArgs) -> Result<Vec<PathBuf>> {
    let mut periods = Vec::with_capacity(a.periods.len());
    for entry in &a.periods {
        let (label, dir) = entry
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("period `{entry}` is not LABEL=DIR")))?;
        let saved = io::read_checkpoint(Path::new(dir))?;
        periods.push(Period::new(label, saved.nodes, saved.z)?);
    }
    let series = EmbeddingSeries::new(periods)?;
    let ranking = series.ranking();
    let mut tsv = String::from("node\tperiod\tcosine\n");
    for s in &ranking.series {
        for (p, c) in s.periods.iter().zip(&s.cosines) {
            let _ = writeln!(tsv, "{}\t{}\t{}", s.node, p, c);
        }
    }
    let mut written = Vec::new();
    write_text(ctx.out("drift.tsv"), &tsv, &mut written)?;
    write_report(
        ctx.out("drift_ranking.json"),
        &serde_json::json!({ "seed": ctx.seed, "ranking": ranking }),
        &mut written,
    )?;
    Ok(written)
}

fn run_plot_data(ctx: &Context, a: &PlotDataArgs) -> Result<Vec<PathBuf>> {
    if a.leaderboard.is_none() && a.analysis.is_none() && a.drift.is_none() {
        return Err(Error::InvalidArgument("nothing to convert; pass --leaderboard, --analysis or --drift".into()));
    }
    let mut written = Vec::new();
    if let Some(path) = &a.leaderboard {
        let board: SweepLeaderboard = io::read_json(path)?;
        let mut tsv = String::from("theta\tbest_dev_auc\n");
        for (theta, auc) in threshold_curve(&board.cells, 1..=board.n_concepts) {
            let _ = writeln!(tsv, "{theta}\t{}", auc.map_or_else(|| "NA".to_string(), |v| v.to_string()));
        }
        write_text(ctx.out("threshold_curve.tsv"), &tsv, &mut written)?;
    }
    if let Some(path) = &a.analysis {
        #[derive(Deserialize)]
        struct AnalysisFile {
            report: SparsityReport,
        }
        let file: AnalysisFile = io::read_json(path)?;
        let report = file.report;
        let mut beta = String::from("concept\trank\tbeta\n");
        for c in &report.concepts {
            for (r, b) in c.beta_ranked.iter().enumerate() {
                let _ = writeln!(beta, "{}\t{}\t{}", c.concept, r + 1, b);
            }
        }
        write_text(ctx.out("beta_rank.tsv"), &beta, &mut written)?;
        let mut hist = String::from("bin_low\tbin_high\tcount\n");
        let bins = report.gamma_histogram.bins.len();
        for (i, count) in report.gamma_histogram.bins.iter().enumerate() {
            let _ = writeln!(hist, "{}\t{}\t{count}", i as f64 / bins as f64, (i + 1) as f64 / bins as f64);
        }
        write_text(ctx.out("gamma_hist.tsv"), &hist, &mut written)?;
        let mut tally = String::from("foundation\tcount\tpercent\n");
        for f in &report.foundation_tally {
            let _ = writeln!(tally, "{}\t{}\t{}", f.foundation, f.count, f.percent);
        }
        write_text(ctx.out("foundations.tsv"), &tally, &mut written)?;
    }
    if let Some(path) = &a.drift {
        #[derive(Deserialize)]
        struct DriftFile {
            ranking: crate::dynamics::DriftRanking,
        }
        let file: DriftFile = io::read_json(path)?;
        let mut tsv = String::from("rank\tnode\tperiod\tcosine\tpearson_r\n");
        for (rank, s) in file.ranking.series.iter().enumerate() {
            let r = s.pearson_r.map_or_else(|| "NA".to_string(), |v| v.to_string());
            for (p, c) in s.periods.iter().zip(&s.cosines) {
                let _ = writeln!(tsv, "{}\t{}\t{}\t{}\t{}", rank + 1, s.node, p, c, r);
            }
        }
        write_text(ctx.out("drift_series.tsv"), &tsv, &mut written)?;
    }
    Ok(written)
}
