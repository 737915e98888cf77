use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use hhea_core::analysis::HeterogeneityReport;
use hhea_core::encoders::{EmbeddingSet, Time2VecParams};
use hhea_core::harness::{self, ExperimentConfig, Precision};
use hhea_core::kg::{load_anchors, load_kg, AnchorSet, CalendarConfig, EntityId};
use hhea_core::matching::{evaluate, CandidatePool, EvalConfig, RankingReport};
use hhea_core::rng::seeded;
use hhea_core::sampling::{ids_sample, IdsConfig};
use hhea_core::synthetic::{toy_alignment, ToyConfig};
use hhea_core::training::{
    forward_all, load_checkpoint, save_checkpoint, train, Checkpoint, Components, GraphSide, ModelParams, TimeBlock,
};
use hhea_core::Scalar;

#[derive(Parser)]
#[command(
    name = "hhea",
    version,
    about = "Entity alignment across heterogeneous temporal knowledge graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset statistics and heterogeneity report.
    Analyze(AnalyzeArgs),
    /// Degree-preserving subsample of an aligned pair of graphs.
    Sample(SampleArgs),
    /// Random-walk skip-gram embeddings of both graphs.
    EncodeStructure(EncodeArgs),
    /// Time embeddings (summed Time2Vec, projected when a checkpoint is given).
    EncodeTime(EncodeTimeArgs),
    /// Train the fusion model and write a checkpoint.
    Train(TrainArgs),
    /// Rank test anchors with CSLS and report Hits@k / MRR.
    Evaluate(EvaluateArgs),
    /// Mask facts of a graph or rows of a name-embedding file.
    Mask(MaskArgs),
    /// Full pipeline (including mask grids) from a config file.
    Run(ConfigArgs),
    /// Write a synthetic aligned dataset and a matching config.
    Toy(ToyArgs),
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Experiment config (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let cwd = Path::new(".");
        for pair in &self.set {
            cfg.set_pair(pair, cwd)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    kg1: Option<PathBuf>,
    #[arg(long)]
    kg2: Option<PathBuf>,
    #[arg(long)]
    anchors: Option<PathBuf>,
    /// Treat the fact files as temporal (4th/5th columns are dates).
    #[arg(long)]
    temporal: Option<bool>,
    /// Write the key-value report here (the table always goes to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    kg1: Option<PathBuf>,
    #[arg(long)]
    kg2: Option<PathBuf>,
    #[arg(long)]
    anchors: Option<PathBuf>,
    #[arg(long)]
    temporal: Option<bool>,
    #[arg(long)]
    target1: usize,
    #[arg(long)]
    target2: usize,
    /// Fraction of the current entities removed per round.
    #[arg(long, default_value_t = 0.05)]
    batch_fraction: f64,
    /// Maximum Jensen-Shannon divergence between degree distributions.
    #[arg(long, default_value_t = 0.05)]
    max_js: f64,
    /// Swap moves after deletion, as a multiple of the number of deleted entities.
    #[arg(long, default_value_t = 2.0)]
    refine_steps: f64,
    /// Independent runs per graph before giving up on the divergence bound.
    #[arg(long, default_value_t = 5)]
    attempts: usize,
    /// Directory for kg1_facts.tsv, kg2_facts.tsv and anchors.tsv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory for kg1.emb and kg2.emb (default: output_dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeTimeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Use trained Time2Vec parameters and projection from this checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Checkpoint path (default: <output_dir>/model.ckpt).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Candidates {
    Test,
    All,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Trained checkpoint; features are rebuilt from the config.
    #[arg(long, conflicts_with_all = ["kg1_emb", "kg2_emb"])]
    checkpoint: Option<PathBuf>,
    /// Precomputed KG1 embeddings (instead of a checkpoint).
    #[arg(long, requires = "kg2_emb")]
    kg1_emb: Option<PathBuf>,
    #[arg(long, requires = "kg1_emb")]
    kg2_emb: Option<PathBuf>,
    /// Test anchors by name; defaults to the config's split.
    #[arg(long)]
    test_anchors: Option<PathBuf>,
    #[arg(long)]
    csls_k: Option<usize>,
    /// Comma-separated cut-offs, e.g. 1,10.
    #[arg(long, value_delimiter = ',')]
    hits: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    candidates: Option<Candidates>,
    /// Also rank KG2 -> KG1.
    #[arg(long)]
    reverse: bool,
    /// Write the report CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskTarget {
    Structure,
    Name,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long, value_enum)]
    kind: MaskTarget,
    /// Fact TSV (structure) or embedding file (name).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    temporal: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long, default_value_t = 20)]
    shared: usize,
    #[arg(long, default_value_t = 0)]
    only1: usize,
    #[arg(long, default_value_t = 0)]
    only2: usize,
    #[arg(long, default_value_t = 0.0)]
    name_noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

/// `print!` that reports a failed write instead of panicking, so output piped
/// into `head` ends quietly.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        write!(std::io::stdout(), $($t)*)?
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout(), $($t)*)?
    }};
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Analyze(a) => analyze(a).context("analyze"),
        Command::Sample(a) => sample(a).context("sample"),
        Command::EncodeStructure(a) => encode_structure(a).context("encode-structure"),
        Command::EncodeTime(a) => encode_time(a).context("encode-time"),
        Command::Train(a) => with_precision(&a.config, |cfg| match cfg.precision {
            Precision::F32 => train_cmd::<f32>(cfg, &a),
            Precision::F64 => train_cmd::<f64>(cfg, &a),
        })
        .context("train"),
        Command::Evaluate(a) => with_precision(&a.config, |cfg| match cfg.precision {
            Precision::F32 => evaluate_cmd::<f32>(cfg, &a),
            Precision::F64 => evaluate_cmd::<f64>(cfg, &a),
        })
        .context("evaluate"),
        Command::Mask(a) => mask(a).context("mask"),
        Command::Run(a) => run(a).context("run"),
        Command::Toy(a) => toy(a).context("toy"),
    }
}

fn with_precision(args: &ConfigArgs, f: impl FnOnce(&ExperimentConfig) -> Result<()>) -> Result<()> {
    let cfg = args.load()?;
    f(&cfg)
}

/// Graph paths from explicit flags, falling back to the config.
fn graph_inputs(
    cfg: &mut ExperimentConfig,
    kg1: &Option<PathBuf>,
    kg2: &Option<PathBuf>,
    anchors: &Option<PathBuf>,
    temporal: Option<bool>,
) {
    if kg1.is_some() {
        cfg.kg1_facts = kg1.clone();
    }
    if kg2.is_some() {
        cfg.kg2_facts = kg2.clone();
    }
    if anchors.is_some() {
        cfg.anchors = anchors.clone();
    }
    if let Some(t) = temporal {
        cfg.temporal = t;
    }
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    graph_inputs(&mut cfg, &a.kg1, &a.kg2, &a.anchors, a.temporal);
    let data = harness::load_dataset(&cfg)?;
    let report = HeterogeneityReport::compute(&data.kg1, &data.kg2, &data.anchors)?;
    out!("{}", report.to_table());
    if let Some(out) = a.out {
        std::fs::write(&out, report.to_key_values()).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn sample(a: SampleArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    graph_inputs(&mut cfg, &a.kg1, &a.kg2, &a.anchors, a.temporal);
    let data = harness::load_dataset(&cfg)?;
    let ids = IdsConfig {
        batch_fraction: a.batch_fraction,
        max_js_divergence: a.max_js,
        refine_steps: a.refine_steps,
        attempts: a.attempts,
        ..IdsConfig::new(a.target1, a.target2, cfg.seed)
    };
    let s = ids_sample(&data.kg1, &data.kg2, &data.anchors, &ids)?;
    std::fs::create_dir_all(&a.out_dir)?;
    s.kg1.save_tsv(&a.out_dir.join("kg1_facts.tsv"))?;
    s.kg2.save_tsv(&a.out_dir.join("kg2_facts.tsv"))?;
    s.anchors.save_tsv(&a.out_dir.join("anchors.tsv"), &s.kg1, &s.kg2)?;
    outln!(
        "sampled {} / {} entities, {} anchors, JS divergence {:.4} / {:.4}",
        s.kg1.entity_count(),
        s.kg2.entity_count(),
        s.anchors.len(),
        s.js_divergence[0],
        s.js_divergence[1]
    );
    Ok(())
}

fn encode_structure(a: EncodeArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    cfg.components = Components {
        name: false,
        time: false,
        structure: true,
    };
    let data = harness::load_dataset(&cfg)?;
    let (train_anchors, _) = harness::split(&cfg, &data.anchors)?;
    let out = a.out_dir.unwrap_or(cfg.output_dir.clone());
    let write = |prepared: (Array2<f64>, Array2<f64>)| -> Result<()> {
        std::fs::create_dir_all(&out)?;
        EmbeddingSet::new(prepared.0)?.save_text(&out.join("kg1.emb"), data.kg1.entity_names())?;
        EmbeddingSet::new(prepared.1)?.save_text(&out.join("kg2.emb"), data.kg2.entity_names())?;
        Ok(())
    };
    let p = harness::prepare_inputs::<f64>(&cfg, &data.kg1, &data.kg2, None, &train_anchors)?;
    write((p.inputs.kg1.structure.unwrap(), p.inputs.kg2.structure.unwrap()))
}

fn encode_time(a: EncodeTimeArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    cfg.components = Components {
        name: false,
        time: true,
        structure: false,
    };
    let data = harness::load_dataset(&cfg)?;
    let (train_anchors, _) = harness::split(&cfg, &data.anchors)?;
    let prepared = harness::prepare_inputs::<f64>(&cfg, &data.kg1, &data.kg2, None, &train_anchors)?;
    let block = match &a.checkpoint {
        Some(p) => load_checkpoint::<f64>(p)?
            .params
            .time
            .context("checkpoint has no time parameters")?,
        None => {
            // untrained parameters with an identity projection: raw summed encodings
            let t2v = Time2VecParams::random(cfg.time_k, cfg.calendar.months, &mut seeded(cfg.seeds().init));
            let weight = Array2::eye(t2v.dim());
            TimeBlock { t2v, weight }
        }
    };
    let model = ModelParams {
        name: None,
        time: Some(block),
        structure: None,
    };
    let out = a.out_dir.unwrap_or(cfg.output_dir.clone());
    std::fs::create_dir_all(&out)?;
    let h1 = forward_all(&model, &prepared.inputs, GraphSide::Kg1)?;
    let h2 = forward_all(&model, &prepared.inputs, GraphSide::Kg2)?;
    EmbeddingSet::new(h1)?.save_text(&out.join("kg1.emb"), data.kg1.entity_names())?;
    EmbeddingSet::new(h2)?.save_text(&out.join("kg2.emb"), data.kg2.entity_names())?;
    Ok(())
}

/// Name features, encoded inputs and splits for the configured (unmasked) run.
fn prepare<T: Scalar>(
    cfg: &ExperimentConfig,
) -> Result<(harness::Dataset, AnchorSet, AnchorSet, harness::Prepared<T>)> {
    cfg.validate()?;
    let data = harness::load_dataset(cfg)?;
    let (train_anchors, test_anchors) = harness::split(cfg, &data.anchors)?;
    let names = if cfg.components.name {
        let (a, b) = harness::raw_names::<T>(cfg, &data.kg1, &data.kg2)?;
        Some(harness::whiten_names(cfg, &a, &b)?)
    } else {
        None
    };
    let prepared = harness::prepare_inputs(cfg, &data.kg1, &data.kg2, names, &train_anchors)?;
    Ok((data, train_anchors, test_anchors, prepared))
}

fn train_cmd<T: Scalar>(cfg: &ExperimentConfig, a: &TrainArgs) -> Result<()> {
    let (_, train_anchors, _, prepared) = prepare::<T>(cfg)?;
    let model = ModelParams::init(&prepared.dims, cfg.components, cfg.seeds().init)?;
    let out = train(
        model,
        &prepared.inputs,
        train_anchors.pairs(),
        &harness::train_config(cfg),
    )?;
    let path = a.out.clone().unwrap_or_else(|| cfg.output_dir.join("model.ckpt"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let meta = cfg
        .resolved()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim_start_matches("# ").to_string(), v.to_string()))
        .collect();
    save_checkpoint(
        &path,
        &Checkpoint {
            params: out.params,
            meta,
        },
    )?;
    let loss_path = path.with_extension("loss.csv");
    std::fs::write(&loss_path, harness::loss_csv(&out.epoch_loss, &prepared.structure_loss))?;
    if let Some(last) = out.epoch_loss.last() {
        outln!("trained {} epochs, final loss {last:.6}", out.epoch_loss.len());
    }
    outln!("checkpoint written to {}", path.display());
    Ok(())
}

fn eval_config(cfg: &ExperimentConfig, a: &EvaluateArgs) -> EvalConfig {
    let mut e = cfg.eval.clone();
    if let Some(k) = a.csls_k {
        e.csls_k = k;
    }
    if let Some(h) = &a.hits {
        e.hits = h.clone();
    }
    match a.candidates {
        Some(Candidates::Test) => e.candidates = CandidatePool::TestOnly,
        Some(Candidates::All) => e.candidates = CandidatePool::AllEntities,
        None => {}
    }
    e.reverse |= a.reverse;
    e
}

fn print_reports(reports: &[RankingReport], out: &Option<PathBuf>) -> Result<()> {
    for r in reports {
        out!("{}", r.to_table());
    }
    if let Some(path) = out {
        std::fs::write(path, harness::report_csv(reports)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn evaluate_cmd<T: Scalar>(cfg: &ExperimentConfig, a: &EvaluateArgs) -> Result<()> {
    let eval = eval_config(cfg, a);
    if let (Some(p1), Some(p2)) = (&a.kg1_emb, &a.kg2_emb) {
        let (names1, e1) = EmbeddingSet::<T>::load_text(p1)?;
        let (names2, e2) = EmbeddingSet::<T>::load_text(p2)?;
        let test_path = a
            .test_anchors
            .as_ref()
            .context("--test-anchors is required with --kg1-emb/--kg2-emb")?;
        let index = |names: Vec<String>| {
            let map: std::collections::HashMap<String, EntityId> =
                names.into_iter().enumerate().map(|(i, n)| (n, i as EntityId)).collect();
            map
        };
        let (i1, i2) = (index(names1), index(names2));
        let file = std::fs::File::open(test_path).with_context(|| format!("opening {}", test_path.display()))?;
        let test = AnchorSet::parse_with(
            std::io::BufReader::new(file),
            test_path,
            |n| i1.get(n).copied(),
            |n| i2.get(n).copied(),
        )?;
        let reports = evaluate(e1.matrix(), e2.matrix(), test.pairs(), &eval)?;
        return print_reports(&reports, &a.out);
    }
    let Some(ckpt_path) = &a.checkpoint else {
        bail!("give either --checkpoint or --kg1-emb/--kg2-emb");
    };
    let (data, _, split_test, prepared) = prepare::<T>(cfg)?;
    let params = load_checkpoint::<T>(ckpt_path)?.params;
    if params.components() != cfg.components {
        bail!("checkpoint components differ from the config's use_name/use_time/use_structure");
    }
    let test = match &a.test_anchors {
        Some(p) => load_anchors(p, &data.kg1, &data.kg2)?,
        None => split_test,
    };
    let mut run_cfg = cfg.clone();
    run_cfg.eval = eval;
    let reports = harness::evaluate_model(&run_cfg, &params, &prepared.inputs, &test)?;
    print_reports(&reports, &a.out)
}

fn mask(a: MaskArgs) -> Result<()> {
    match a.kind {
        MaskTarget::Structure => {
            let kg = load_kg(&a.input, a.temporal, CalendarConfig::default())?;
            let masked = harness::mask_structure(&kg, a.ratio, a.seed)?;
            masked.save_tsv(&a.out)?;
            outln!("kept {} of {} facts", masked.fact_count(), kg.fact_count());
        }
        MaskTarget::Name => {
            let (names, emb) = EmbeddingSet::<f64>::load_text(&a.input)?;
            let (masked, rows) = harness::mask_names(&emb, a.ratio, a.seed)?;
            masked.save_text(&a.out, &names)?;
            outln!("replaced {} of {} rows", rows.len(), emb.len());
        }
    }
    Ok(())
}

fn run(a: ConfigArgs) -> Result<()> {
    let cfg = a.load()?;
    let points = harness::run_experiment(&cfg)?;
    for p in &points {
        for r in &p.reports {
            let hits: Vec<String> = r.hits.iter().map(|(k, h)| format!("hits@{k} {h:.4}")).collect();
            outln!("ratio {} {}: {} mrr {:.4}", p.ratio, r.direction, hits.join(" "), r.mrr);
        }
    }
    outln!("reports written to {}", cfg.output_dir.display());
    Ok(())
}

fn toy(a: ToyArgs) -> Result<()> {
    let cfg = ToyConfig {
        shared: a.shared,
        only1: a.only1,
        only2: a.only2,
        name_noise: a.name_noise,
        seed: a.seed,
        ..ToyConfig::default()
    };
    let ds = toy_alignment(&cfg);
    std::fs::create_dir_all(&a.out_dir)?;
    ds.kg1.save_tsv(&a.out_dir.join("kg1_facts.tsv"))?;
    ds.kg2.save_tsv(&a.out_dir.join("kg2_facts.tsv"))?;
    ds.anchors.save_tsv(&a.out_dir.join("anchors.tsv"), &ds.kg1, &ds.kg2)?;
    let negatives = (ds.kg2.entity_count() - 1).min(20);
    let config = format!(
        "kg1_facts = kg1_facts.tsv\nkg2_facts = kg2_facts.tsv\nanchors = anchors.tsv\ncalendar_months = {}\nnegatives = {negatives}\noutput_dir = out\n",
        cfg.months
    );
    std::fs::write(a.out_dir.join("experiment.conf"), config)?;
    outln!("toy dataset written to {}", a.out_dir.display());
    Ok(())
}
