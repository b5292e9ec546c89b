use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use vtt_core::{
    generate_dataset, replay, run_session, skewed_prevalence, ConfidenceDistribution, Dataset,
    ModelSettings, SessionConfig, StrategyKind,
};

use vtt::config::{parse_band_measure, ConfigFile};
use vtt::experiment::{run_experiment, DatasetSource, ExperimentSpec, MueSource, SyntheticProfile};
use vtt::formats::dataset::write_dataset;
use vtt::formats::session::{read_session, recover_history, write_session};
use vtt::report::{concept_summaries, emit_concept_comparison, emit_gp_curve, gp_curve_svg, summarize_models};

#[derive(Parser)]
#[command(name = "vtt", version, about = "Concept-centric adaptive interrogation of a classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one questioning session.
    Run(RunArgs),
    /// Run every strategy several times and aggregate the uncertainty curves.
    Experiment(ExperimentArgs),
    /// Write a synthetic labeled pool.
    GenDataset(GenDatasetArgs),
    /// Rebuild the performance models from a session log.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct SessionArgs {
    /// Settings file (JSON object or key = value lines); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Question budget.
    #[arg(long)]
    max_questions: Option<usize>,
    /// Stop once the summed band area reaches this value.
    #[arg(long)]
    uncertainty_stop: Option<f64>,
    /// Unpredictability threshold.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    length_scale: Option<f64>,
    #[arg(long)]
    signal_variance: Option<f64>,
    #[arg(long)]
    noise_variance: Option<f64>,
    /// Fit bin frequencies instead of raw counts.
    #[arg(long)]
    frequency_mode: bool,
    /// `std` (band area) or `variance`.
    #[arg(long)]
    band_measure: Option<String>,
}

impl SessionArgs {
    /// Defaults, then the config file, then flags.
    fn resolve(&self) -> Result<(SessionConfig, ConfigFile)> {
        let mut config = SessionConfig::default();
        let file = match &self.config {
            Some(path) => ConfigFile::read(path)?,
            None => ConfigFile::default(),
        };
        file.apply(&mut config)?;
        if let Some(v) = self.max_questions {
            config.max_questions = v;
        }
        if let Some(v) = self.uncertainty_stop {
            config.uncertainty_stop = Some(v);
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.length_scale {
            config.kernel.length_scale = v;
        }
        if let Some(v) = self.signal_variance {
            config.kernel.signal_variance = v;
        }
        if let Some(v) = self.noise_variance {
            config.kernel.noise_variance = v;
        }
        if self.frequency_mode {
            config.frequency_mode = true;
        }
        if let Some(m) = &self.band_measure {
            config.band_measure = parse_band_measure(m)?;
        }
        Ok((config, file))
    }
}

#[derive(Args)]
struct DatasetArgs {
    /// Labeled pool CSV; without it a synthetic pool is generated.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    n_samples: usize,
    #[arg(long)]
    n_concepts: Option<usize>,
    /// Per-concept prevalence, comma-separated; default decays from 0.6 to 0.05.
    #[arg(long, value_delimiter = ',')]
    prevalence: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    dataset_seed: u64,
}

impl DatasetArgs {
    fn prevalence(&self) -> Result<Vec<f64>> {
        match (&self.prevalence, self.n_concepts) {
            (Some(p), Some(n)) if p.len() != n => {
                bail!("--prevalence has {} values but --n-concepts is {n}", p.len())
            }
            (Some(p), _) => Ok(p.clone()),
            (None, n) => Ok(skewed_prevalence(n.unwrap_or(11), 0.6, 0.05)),
        }
    }

    fn source(&self) -> Result<DatasetSource> {
        Ok(match &self.dataset {
            Some(path) => DatasetSource::File(path.clone()),
            None => DatasetSource::Synthetic {
                n_samples: self.n_samples,
                prevalence: self.prevalence()?,
                seed: self.dataset_seed,
            },
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MueKind {
    /// 90% accurate on the most common concept, 50% elsewhere.
    Biased,
    /// 50% on the most common concept, 90% elsewhere.
    NegativelyBiased,
    /// 70% everywhere.
    Unbiased,
    /// Per-concept accuracies from `--accuracies`.
    Accuracies,
    /// Probabilities read from `--matrix`.
    Matrix,
    /// External process given by `--command`.
    Subprocess,
}

#[derive(Args)]
struct MueArgs {
    #[arg(long, value_enum, default_value = "biased")]
    mue: MueKind,
    #[arg(long, value_delimiter = ',')]
    accuracies: Option<Vec<f64>>,
    /// `uniform`, `fixed:<v>` or `beta:<alpha>,<beta>`.
    #[arg(long, default_value = "uniform")]
    confidence: String,
    #[arg(long, default_value_t = 0)]
    mue_seed: u64,
    /// CSV `sample_id,<concept>...` of Yes-probabilities.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Shell command answering `sample_id,concept_id` lines.
    #[arg(long)]
    command: Option<String>,
    /// Seconds to wait for each subprocess reply.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
}

fn parse_confidence(text: &str) -> Result<ConfidenceDistribution> {
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    Ok(match kind {
        "uniform" => ConfidenceDistribution::UniformHalf,
        "fixed" => ConfidenceDistribution::Fixed(arg.parse().context("fixed:<v> needs a number")?),
        "beta" => {
            let (a, b) = arg.split_once(',').context("beta:<alpha>,<beta>")?;
            ConfidenceDistribution::FoldedBeta {
                alpha: a.trim().parse()?,
                beta: b.trim().parse()?,
            }
        }
        other => bail!("unknown confidence `{other}`"),
    })
}

impl MueArgs {
    fn source(&self) -> Result<MueSource> {
        let synthetic = |profile| -> Result<MueSource> {
            Ok(MueSource::Synthetic {
                profile,
                confidence: parse_confidence(&self.confidence)?,
                seed: self.mue_seed,
            })
        };
        match self.mue {
            MueKind::Biased => synthetic(SyntheticProfile::Biased),
            MueKind::NegativelyBiased => synthetic(SyntheticProfile::NegativelyBiased),
            MueKind::Unbiased => synthetic(SyntheticProfile::Unbiased),
            MueKind::Accuracies => match &self.accuracies {
                Some(acc) => synthetic(SyntheticProfile::Accuracies(acc.clone())),
                None => bail!("--mue accuracies needs --accuracies"),
            },
            MueKind::Matrix => match &self.matrix {
                Some(path) => Ok(MueSource::Matrix(path.clone())),
                None => bail!("--mue matrix needs --matrix"),
            },
            MueKind::Subprocess => match &self.command {
                Some(command) => Ok(MueSource::Subprocess {
                    command: command.clone(),
                    timeout: Duration::try_from_secs_f64(self.timeout).context("bad --timeout")?,
                }),
                None => bail!("--mue subprocess needs --command"),
            },
        }
    }
}

fn parse_strategy(text: &str) -> std::result::Result<StrategyKind, String> {
    StrategyKind::from_str(text).map_err(|e| e.to_string())
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    mue: MueArgs,
    /// random, unpredictability, uncertainty or combined.
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also render SVG curves.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    mue: MueArgs,
    #[arg(long, value_parser = parse_strategy, value_delimiter = ',',
          default_value = "random,unpredictability,uncertainty,combined")]
    strategies: Vec<StrategyKind>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Question counts at which uncertainty is aggregated; default every 10.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct GenDatasetArgs {
    #[arg(long, default_value_t = 200)]
    n_samples: usize,
    #[arg(long)]
    n_concepts: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    prevalence: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Session CSV written by `run` or `experiment`.
    #[arg(long)]
    session: PathBuf,
    /// Pool the session was drawn from; checks ids and fixes concept order.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    settings: SessionArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: bool,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn write_curves(
    out: &Path,
    models: &mut [vtt_core::ConceptModel],
    concept_ids: &[String],
    svg: bool,
) -> Result<()> {
    let dir = out.join("curves");
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for model in models {
        let id = &concept_ids[model.concept()];
        emit_gp_curve(model, create(&dir.join(format!("{id}.csv")))?)?;
        if svg {
            let path = dir.join(format!("{id}.svg"));
            fs::write(&path, gp_curve_svg(model, id)?)?;
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (mut config, _) = args.session.resolve()?;
    if let Some(s) = args.strategy {
        config.strategy = s;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let dataset = args.dataset.source()?.load()?;
    let mut mue = args.mue.source()?.prepare(&dataset)?.instantiate(&dataset, 0)?;
    let mut log = run_session(&config, &dataset, mue.as_mut())?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    write_session(&log, &dataset, create(&args.out.join("session.csv"))?)?;
    emit_concept_comparison(&concept_summaries(&log, &dataset), create(&args.out.join("comparison.csv"))?)?;
    write_curves(&args.out, &mut log.models, dataset.concept_ids(), args.svg)?;
    if let Some(e) = &log.error {
        bail!("session stopped after {} questions: {e}", log.len());
    }
    println!(
        "{} questions ({}), total uncertainty {:.4} -> {:.4}",
        log.len(),
        log.stop.name(),
        log.initial.total,
        log.snapshot_after(log.len()).total
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let (mut session, file) = args.session.resolve()?;
    if args.session.max_questions.is_none() && file.max_questions.is_none() {
        // Ask every question in the pool.
        session.max_questions = usize::MAX;
    }
    let spec = ExperimentSpec {
        dataset: args.dataset.source()?,
        mue: args.mue.source()?,
        strategies: args.strategies,
        repeats: args.repeats,
        checkpoints: args.checkpoints,
        out_dir: args.out,
        session,
        seed: args.seed,
        svg: args.svg,
    };
    let report = run_experiment(&spec)?;
    println!(
        "{} sessions written to {}",
        report.sessions.len(),
        spec.out_dir.join("sessions").display()
    );
    Ok(())
}

fn cmd_gen_dataset(args: GenDatasetArgs) -> Result<()> {
    let prevalence = DatasetArgs {
        dataset: None,
        n_samples: args.n_samples,
        n_concepts: args.n_concepts,
        prevalence: args.prevalence,
        dataset_seed: args.seed,
    }
    .prevalence()?;
    let dataset = generate_dataset(args.n_samples, &prevalence, args.seed)?;
    write_dataset(&dataset, create(&args.out)?)?;
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let (config, _) = args.settings.resolve()?;
    let settings: ModelSettings = config.model_settings();
    let rows = read_session(&args.session)?;
    let dataset: Option<Dataset> = args
        .dataset
        .as_ref()
        .map(vtt::formats::dataset::read_dataset)
        .transpose()?;
    let history = recover_history(&rows, dataset.as_ref())?;
    let mut models = replay(&history.records, history.concepts.len(), settings)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let summaries = summarize_models(&mut models, &history.records, &history.concepts)?;
    emit_concept_comparison(&summaries, create(&args.out.join("comparison.csv"))?)?;
    write_curves(&args.out, &mut models, &history.concepts, args.svg)?;
    let total: f64 = summaries.iter().map(|s| s.u_minus + s.u_plus).sum();
    println!("{} answers replayed, total uncertainty {total:.4}", history.records.len());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::GenDataset(args) => cmd_gen_dataset(args),
        Command::Replay(args) => cmd_replay(args),
    }
}
