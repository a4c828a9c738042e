//! `tvrec`: synthesize data, ingest it, train, evaluate, re-rank and report.
//!
//! Every subcommand writes into one output directory (`--out` or
//! `TVREC_OUT`). Files are staged in a hidden directory and moved into place
//! only when the whole subcommand succeeds, together with the fully
//! resolved configuration as `run_config.toml`.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tvrec::domain::UserId;
use tvrec::eval::{
    build_queries, cross_validate, read_report_csv, render_table, train_ranker, training_groups, write_report_csv,
    Algorithm, EvalConfig, FeedbackSource, FoldModels, Prepared, Recommender, Reference, Scenario, ScenarioKind,
    UserView,
};
use tvrec::features::export_dataset;
use tvrec::ingestion::{build_interactions, Dataset};
use tvrec::rerank::ObjectiveWeights;
use tvrec::synthgen::{generate, SynthFiles, SynthParams};

#[derive(Parser, Debug)]
#[command(name = "tvrec", version, about = "Live and Catch-up TV recommendation experiments")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "TVREC_OUT", default_value = "out")]
    out: PathBuf,
    /// Root seed for every random choice; overrides the synth and eval seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic guide and view log.
    Synth(SynthArgs),
    /// Validate a dataset and summarize it.
    Ingest(DataArgs),
    /// Train WRMF and the ranker on one fold and save them.
    Train(TrainArgs),
    /// Cross-validate every algorithm and write report.csv.
    Evaluate(EvalArgs),
    /// Write GreedyRec lists for one fold's target week.
    Rerank(RerankArgs),
    /// Render a report.csv as tables.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
struct SynthArgs {
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    programs_per_week: Option<usize>,
    #[arg(long)]
    weeks: Option<usize>,
    #[arg(long)]
    channel_loyalty: Option<f64>,
    #[arg(long)]
    series_repeat_prob: Option<f64>,
    #[arg(long)]
    daypart_regularity: Option<f64>,
    #[arg(long)]
    catchup_share: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
struct DataArgs {
    /// Guide CSV; defaults to `epg.csv` in the output directory.
    #[arg(long)]
    epg: Option<PathBuf>,
    /// View log JSONL; defaults to `views.jsonl` in the output directory.
    #[arg(long)]
    views: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct ScenarioArgs {
    /// Scenario kind to run (live or catchup); repeatable.
    #[arg(long = "scenario")]
    scenarios: Vec<ScenarioKind>,
    /// Feedback the models learn from (live+catchup or catchup).
    #[arg(long)]
    feedback: Option<FeedbackSource>,
    /// Catch-up queries at fixed weekly reference points instead of per
    /// session.
    #[arg(long)]
    weekly_reference: bool,
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Fold to train on; defaults to the last.
    #[arg(long)]
    fold: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Objective weights `acc,div,nov,ser`.
    #[arg(long)]
    objective: Option<ObjectiveWeights>,
    /// Re-rank only the ranker's top m candidates.
    #[arg(long)]
    rerank_pool: Option<usize>,
    /// Comma-separated fold indices; all when absent.
    #[arg(long, value_delimiter = ',')]
    folds: Vec<usize>,
    /// Comma-separated algorithm names; all when absent.
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
}

#[derive(Args, Debug, Default)]
struct RerankArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    objective: Option<ObjectiveWeights>,
    #[arg(long)]
    rerank_pool: Option<usize>,
    /// List length.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    fold: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ReportArgs {
    /// Report to render; defaults to `report.csv` in the output directory.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DataConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    epg: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    views: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RerankConfig {
    k: usize,
}

impl Default for RerankConfig {
    fn default() -> Self {
        RerankConfig { k: 10 }
    }
}

/// Everything a run reads. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Fold for train and rerank; the last when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    fold: Option<usize>,
    data: DataConfig,
    synth: SynthParams,
    eval: EvalConfig,
    rerank: RerankConfig,
}

impl RunConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed.or(self.seed) {
            self.seed = Some(s);
            self.synth.seed = s;
            self.eval.seed = s;
        }
    }

    fn apply_data(&mut self, d: &DataArgs, out: &Path) {
        if let Some(p) = &d.epg {
            self.data.epg = Some(p.clone());
        }
        if let Some(p) = &d.views {
            self.data.views = Some(p.clone());
        }
        self.data.epg.get_or_insert_with(|| SynthFiles::in_dir(out).epg);
        self.data.views.get_or_insert_with(|| SynthFiles::in_dir(out).views);
    }

    fn apply_scenarios(&mut self, s: &ScenarioArgs) {
        if !s.scenarios.is_empty() || s.feedback.is_some() {
            let mut kinds = s.scenarios.clone();
            if kinds.is_empty() {
                kinds = self.eval.scenarios.iter().map(|x| x.kind).collect();
            }
            kinds.dedup();
            let feedback = s.feedback.unwrap_or(FeedbackSource::LiveAndCatchup);
            self.eval.scenarios = kinds.into_iter().map(|kind| Scenario { kind, feedback }).collect();
        }
        if s.weekly_reference {
            self.eval.catchup_reference = Reference::Weekly;
        }
    }

    fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.eval.validate()?;
        if self.rerank.k == 0 {
            bail!("rerank.k must be at least 1");
        }
        Ok(())
    }

    fn dataset(&self) -> Result<Dataset> {
        let (Some(epg), Some(views)) = (&self.data.epg, &self.data.views) else {
            bail!("no dataset paths configured");
        };
        Dataset::load(epg, views).with_context(|| format!("loading {} and {}", epg.display(), views.display()))
    }
}

/// A hidden directory next to the outputs. Its files move into the output
/// directory on [`Staging::commit`]; dropping it uncommitted deletes it.
struct Staging {
    dir: PathBuf,
    out: PathBuf,
    committed: bool,
}

impl Staging {
    fn new(out: &Path, command: &str) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let dir = out.join(format!(".staging-{command}-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Staging {
            dir,
            out: out.to_path_buf(),
            committed: false,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    }

    fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut names: Vec<_> = fs::read_dir(&self.dir)?.collect::<std::io::Result<Vec<_>>>()?;
        names.sort_by_key(|e| e.file_name());
        let mut moved = Vec::new();
        for e in names {
            let to = self.out.join(e.file_name());
            fs::rename(e.path(), &to).with_context(|| format!("moving output to {}", to.display()))?;
            moved.push(to);
        }
        fs::remove_dir(&self.dir)?;
        self.committed = true;
        Ok(moved)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.verbose {
        "info"
    } else {
        "warn"
    }))
    .init();
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply_seed(cli.seed);
    let name = match &cli.command {
        Command::Synth(_) => "synth",
        Command::Ingest(_) => "ingest",
        Command::Train(_) => "train",
        Command::Evaluate(_) => "evaluate",
        Command::Rerank(_) => "rerank",
        Command::Report(_) => "report",
    };
    match &cli.command {
        Command::Synth(a) => apply_synth(&mut cfg, a),
        Command::Ingest(d) => cfg.apply_data(d, &cli.out),
        Command::Train(a) => {
            cfg.apply_data(&a.data, &cli.out);
            cfg.apply_scenarios(&a.scenario);
            cfg.fold = a.fold.or(cfg.fold);
        }
        Command::Evaluate(a) => {
            cfg.apply_data(&a.data, &cli.out);
            cfg.apply_scenarios(&a.scenario);
            if let Some(w) = a.objective {
                cfg.eval.objective = w;
            }
            if a.rerank_pool.is_some() {
                cfg.eval.rerank_pool = a.rerank_pool;
            }
            if !a.folds.is_empty() {
                cfg.eval.folds = a.folds.clone();
            }
            if !a.algorithms.is_empty() {
                cfg.eval.algorithms = a.algorithms.clone();
            }
        }
        Command::Rerank(a) => {
            cfg.apply_data(&a.data, &cli.out);
            cfg.apply_scenarios(&a.scenario);
            if let Some(w) = a.objective {
                cfg.eval.objective = w;
            }
            if a.rerank_pool.is_some() {
                cfg.eval.rerank_pool = a.rerank_pool;
            }
            if let Some(k) = a.k {
                cfg.rerank.k = k;
            }
            cfg.fold = a.fold.or(cfg.fold);
        }
        Command::Report(_) => {}
    }
    cfg.validate()?;

    let staging = Staging::new(&cli.out, name)?;
    let resolved = toml::to_string(&cfg).context("serializing the resolved config")?;
    staging.write("run_config.toml", resolved.as_bytes())?;
    match &cli.command {
        Command::Synth(_) => synth(&cfg, &staging)?,
        Command::Ingest(_) => ingest(&cfg, &staging)?,
        Command::Train(_) => train(&cfg, &staging)?,
        Command::Evaluate(_) => evaluate(&cfg, &staging)?,
        Command::Rerank(_) => rerank(&cfg, &staging)?,
        Command::Report(a) => {
            let path = a.report.clone().unwrap_or_else(|| cli.out.join("report.csv"));
            report(&path, &staging)?
        }
    }
    for p in staging.commit()? {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn apply_synth(cfg: &mut RunConfig, a: &SynthArgs) {
    let s = &mut cfg.synth;
    let set = |dst: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut s.n_users, a.users);
    set(&mut s.n_channels, a.channels);
    set(&mut s.programs_per_week, a.programs_per_week);
    set(&mut s.n_weeks, a.weeks);
    let setf = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    setf(&mut s.channel_loyalty, a.channel_loyalty);
    setf(&mut s.series_repeat_prob, a.series_repeat_prob);
    setf(&mut s.daypart_regularity, a.daypart_regularity);
    setf(&mut s.catchup_share, a.catchup_share);
}

fn synth(cfg: &RunConfig, staging: &Staging) -> Result<()> {
    let s = generate(&cfg.synth)?;
    s.write(&staging.dir)?;
    println!(
        "synthesized {} users, {} programs ({} simulcast twins), {} airings, {} view events",
        cfg.synth.n_users,
        s.manifest.programs,
        s.manifest.twins.len(),
        s.manifest.airings,
        s.manifest.events
    );
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    users: usize,
    programs: usize,
    simulcast_aliases: usize,
    channels: usize,
    airings: usize,
    events: usize,
    dropped_unknown_program: usize,
    dropped_unavailable: usize,
    quadruples: usize,
    positive: usize,
    negative: usize,
}

fn ingest(cfg: &RunConfig, staging: &Staging) -> Result<()> {
    let d = cfg.dataset()?;
    let inter = build_interactions(&d.log, &d.catalog, cfg.eval.rule);
    let positive = inter.iter().filter(|r| r.preference > 0).count();
    let s = IngestSummary {
        users: d.log.users().len(),
        programs: d.catalog.num_programs(),
        simulcast_aliases: d.catalog.aliases().len(),
        channels: d.catalog.channels().len(),
        airings: d.catalog.airings().len(),
        events: d.report.kept,
        dropped_unknown_program: d.report.dropped_unknown_program,
        dropped_unavailable: d.report.dropped_unavailable,
        quadruples: inter.len(),
        positive,
        negative: inter.len() - positive,
    };
    staging.write("ingest.json", &serde_json::to_vec_pretty(&s)?)?;
    println!(
        "{} users, {} programs, {} channels, {} view events ({} dropped)",
        s.users,
        s.programs,
        s.channels,
        s.events,
        s.dropped_unknown_program + s.dropped_unavailable
    );
    println!(
        "{} <user, program, preference> quadruples: {} positive, {} negative",
        s.quadruples, s.positive, s.negative
    );
    Ok(())
}

/// The fold's models, its ranker for the first configured scenario, and
/// the training groups it was fitted on.
struct Trained {
    fold: usize,
    scenario: Scenario,
    models: FoldModels,
    train: Vec<tvrec::features::QueryGroup>,
    validation: Vec<tvrec::features::QueryGroup>,
    ranker: tvrec::ltr::GbmModel,
}

fn fit_fold(cfg: &RunConfig, prep: &Prepared<'_>) -> Result<Trained> {
    let fold = match cfg.fold {
        Some(f) if f >= prep.folds.len() => bail!("fold {f} requested, data has {} folds", prep.folds.len()),
        Some(f) => f,
        None => prep.folds.len() - 1,
    };
    let scenario = cfg.eval.scenarios[0];
    let (flog, inter) = prep.feedback(scenario.feedback);
    let models = FoldModels::fit(
        prep.folds[fold],
        scenario.feedback,
        inter,
        flog,
        prep.catalog,
        &cfg.eval,
    )?;
    let (train, validation) = training_groups(&models, scenario.kind, flog, prep.catalog, &prep.index, &cfg.eval)?;
    if train.is_empty() {
        bail!("fold {fold} has no {scenario} training query with a positive");
    }
    let ranker = train_ranker(&train, &validation, &cfg.eval)?;
    Ok(Trained {
        fold,
        scenario,
        models,
        train,
        validation,
        ranker,
    })
}

fn train(cfg: &RunConfig, staging: &Staging) -> Result<()> {
    let d = cfg.dataset()?;
    let prep = Prepared::new(&d.catalog, &d.log, &cfg.eval)?;
    let t = fit_fold(cfg, &prep)?;
    t.ranker.save(&staging.path("ranker.json"))?;
    t.models.target.wrmf.save(&staging.path("wrmf.json"))?;
    export_dataset(&staging.dir, "train", &t.train)?;
    export_dataset(&staging.dir, "validation", &t.validation)?;
    let v = &t.ranker.validation_ndcg;
    println!(
        "fold {} {}: {} training and {} validation queries, {} trees, validation nDCG@{} {:.4} -> {:.4}",
        t.fold,
        t.scenario,
        t.train.len(),
        t.validation.len(),
        t.ranker.trees.len(),
        t.ranker.params.truncation_k,
        v.first().copied().unwrap_or(0.0),
        v.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

fn evaluate(cfg: &RunConfig, staging: &Staging) -> Result<()> {
    let d = cfg.dataset()?;
    let cv = cross_validate(&d.catalog, &d.log, &cfg.eval)?;
    let mut csv = Vec::new();
    write_report_csv(&cv.average, &mut csv)?;
    staging.write("report.csv", &csv)?;
    let table = render_table(&cv.average);
    staging.write("report.txt", table.as_bytes())?;
    staging.write("folds.json", &serde_json::to_vec_pretty(&cv.folds)?)?;
    print!("{table}");
    Ok(())
}

fn rerank(cfg: &RunConfig, staging: &Staging) -> Result<()> {
    let d = cfg.dataset()?;
    let prep = Prepared::new(&d.catalog, &d.log, &cfg.eval)?;
    let t = fit_fold(cfg, &prep)?;
    let kind = t.scenario.kind;
    let reference = match kind {
        ScenarioKind::CatchUp => cfg.eval.catchup_reference,
        ScenarioKind::LiveTv => Reference::PerSession,
    };
    let week = t.models.fold.target_week;
    let (queries, _) = build_queries(prep.sessions_of(kind), &d.catalog, week, kind, reference, cfg.eval.rule);
    let rec = Recommender {
        catalog: &d.catalog,
        index: &prep.index,
        models: &t.models.target,
        ranker: Some(&t.ranker),
        objective: cfg.eval.objective,
        rerank_pool: cfg.eval.rerank_pool,
        history_cap: cfg.eval.history_cap,
    };
    let mut views: HashMap<UserId, UserView> = HashMap::new();
    let mut out = Vec::new();
    writeln!(out, "user,time,rank,program,title")?;
    for q in &queries {
        let view = views.entry(q.user).or_insert_with(|| rec.user_view(q.user));
        let list = rec.rerank(q, view, cfg.rerank.k, None)?;
        for (rank, p) in list.iter().enumerate() {
            let title = d.catalog.program(*p).map_or("", |x| x.title.as_str());
            writeln!(
                out,
                "{},{},{},{},\"{}\"",
                q.user,
                q.time,
                rank + 1,
                p,
                title.replace('"', "\"\"")
            )?;
        }
    }
    staging.write("rerank.csv", &out)?;
    println!(
        "{} GreedyRec lists of up to {} programs for week {week} ({}, objective {})",
        queries.len(),
        cfg.rerank.k,
        t.scenario,
        cfg.eval.objective
    );
    Ok(())
}

fn report(path: &Path, staging: &Staging) -> Result<()> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = read_report_csv(file)?;
    if rows.is_empty() {
        bail!("{} has no rows", path.display());
    }
    let table = render_table(&rows);
    staging.write("report.txt", table.as_bytes())?;
    print!("{table}");
    Ok(())
}
