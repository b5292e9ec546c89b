//! Repeated sessions over a grid of strategies, with per-session logs and
//! the aggregate uncertainty table.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use vtt_core::mue::mix_seed;
use vtt_core::{
    generate_dataset, run_session, session_seed, ConfidenceDistribution, Dataset, Mue,
    ProbabilityMatrix, SessionConfig, SessionLog, StrategyKind, SyntheticMue, SyntheticMueSpec,
};

use crate::error::{Result, VttError};
use crate::formats::dataset::read_dataset;
use crate::formats::matrix::read_matrix;
use crate::formats::session::write_session;
use crate::report::{
    aggregate_strategy, aggregate_svg, concept_summaries, default_checkpoints,
    emit_experiment_comparison, write_aggregate, AggregateRow, UncertaintySeries,
};
use crate::subprocess::SubprocessMue;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    File(PathBuf),
    Synthetic {
        n_samples: usize,
        prevalence: Vec<f64>,
        seed: u64,
    },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::File(path) => read_dataset(path),
            DatasetSource::Synthetic {
                n_samples,
                prevalence,
                seed,
            } => Ok(generate_dataset(*n_samples, prevalence, *seed)?),
        }
    }
}

/// Accuracy profile of a synthetic answer source.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticProfile {
    /// 0.9 on the most common concept, 0.5 elsewhere.
    Biased,
    /// 0.5 on the most common concept, 0.9 elsewhere.
    NegativelyBiased,
    /// 0.7 everywhere.
    Unbiased,
    /// One accuracy per concept, in dataset order.
    Accuracies(Vec<f64>),
}

impl SyntheticProfile {
    pub fn spec(&self, dataset: &Dataset, confidence: ConfidenceDistribution, seed: u64) -> Result<SyntheticMueSpec> {
        let mut spec = match self {
            SyntheticProfile::Biased => SyntheticMueSpec::biased(dataset, seed)?,
            SyntheticProfile::NegativelyBiased => SyntheticMueSpec::negatively_biased(dataset, seed)?,
            SyntheticProfile::Unbiased => SyntheticMueSpec::unbiased(dataset, seed)?,
            SyntheticProfile::Accuracies(acc) => {
                if acc.len() != dataset.n_concepts() {
                    return Err(VttError::Config(format!(
                        "{} accuracies given for {} concepts",
                        acc.len(),
                        dataset.n_concepts()
                    )));
                }
                SyntheticMueSpec::new(acc.clone(), confidence, seed)?
            }
        };
        spec.confidence = confidence;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MueSource {
    Synthetic {
        profile: SyntheticProfile,
        confidence: ConfidenceDistribution,
        seed: u64,
    },
    Matrix(PathBuf),
    /// Shell command speaking the line protocol; one child per session.
    Subprocess { command: String, timeout: Duration },
}

/// A ready-to-use answer source. Matrices are read once and cloned per session.
#[derive(Debug, Clone)]
pub enum PreparedMue {
    Synthetic(SyntheticMueSpec),
    Matrix(ProbabilityMatrix),
    Subprocess { command: String, timeout: Duration },
}

impl MueSource {
    pub fn prepare(&self, dataset: &Dataset) -> Result<PreparedMue> {
        Ok(match self {
            MueSource::Synthetic {
                profile,
                confidence,
                seed,
            } => PreparedMue::Synthetic(profile.spec(dataset, *confidence, *seed)?),
            MueSource::Matrix(path) => PreparedMue::Matrix(read_matrix(path, dataset)?),
            MueSource::Subprocess { command, timeout } => PreparedMue::Subprocess {
                command: command.clone(),
                timeout: *timeout,
            },
        })
    }
}

impl PreparedMue {
    /// Answer source for repeat `repeat`. Synthetic sources get a fresh seed
    /// per repeat; every strategy of one repeat faces the same answers.
    pub fn instantiate(&self, dataset: &Dataset, repeat: usize) -> Result<Box<dyn Mue + Send>> {
        Ok(match self {
            PreparedMue::Synthetic(spec) => {
                let mut spec = spec.clone();
                spec.seed = mix_seed(spec.seed, repeat as u64);
                Box::new(SyntheticMue::new(spec)?)
            }
            PreparedMue::Matrix(m) => Box::new(m.clone()),
            PreparedMue::Subprocess { command, timeout } => {
                Box::new(SubprocessMue::shell(command, dataset, *timeout)?)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub dataset: DatasetSource,
    pub mue: MueSource,
    pub strategies: Vec<StrategyKind>,
    pub repeats: usize,
    /// Defaults to every 10 questions plus the budget.
    pub checkpoints: Option<Vec<usize>>,
    pub out_dir: PathBuf,
    /// Template for every session; strategy and seed are filled in per run.
    pub session: SessionConfig,
    pub seed: u64,
    pub svg: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(VttError::Config("repeats must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(VttError::Config("no strategies selected".into()));
        }
        if let Some(points) = &self.checkpoints {
            if points.is_empty() || points.windows(2).any(|w| w[0] >= w[1]) {
                return Err(VttError::Config("checkpoints must be strictly increasing".into()));
            }
        }
        self.session.validate()?;
        Ok(())
    }
}

/// One finished session of an experiment.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub strategy: StrategyKind,
    pub repeat: usize,
    pub path: PathBuf,
    pub log: SessionLog,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dataset: Dataset,
    pub sessions: Vec<SessionOutcome>,
    pub aggregate: Vec<AggregateRow>,
    pub aggregate_path: PathBuf,
    pub comparison_path: PathBuf,
}

pub fn session_file_name(strategy: StrategyKind, repeat: usize) -> String {
    format!("{}_r{repeat:02}.csv", strategy.name())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| VttError::io(path, e))
}

/// Runs every (strategy, repeat) pair in parallel and writes
/// `sessions/<strategy>_rNN.csv`, `aggregate.csv` and `comparison.csv`
/// under the output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let dataset = spec.dataset.load()?;
    let mue = spec.mue.prepare(&dataset)?;
    let session_dir = spec.out_dir.join("sessions");
    fs::create_dir_all(&session_dir).map_err(|e| VttError::io(&session_dir, e))?;

    let jobs: Vec<(StrategyKind, usize)> = spec
        .strategies
        .iter()
        .flat_map(|&s| (0..spec.repeats).map(move |r| (s, r)))
        .collect();

    let results: Vec<Result<SessionOutcome>> = jobs
        .par_iter()
        .map(|&(strategy, repeat)| {
            let config = SessionConfig {
                strategy,
                seed: session_seed(spec.seed, repeat as u64, strategy),
                ..spec.session
            };
            let mut source = mue.instantiate(&dataset, repeat)?;
            let log = run_session(&config, &dataset, source.as_mut())?;
            let path = session_dir.join(session_file_name(strategy, repeat));
            write_session(&log, &dataset, create(&path)?)?;
            if let Some(e) = &log.error {
                return Err(VttError::Session {
                    context: format!(
                        "{} repeat {repeat} stopped after {} questions",
                        strategy.name(),
                        log.len()
                    ),
                    source: e.clone(),
                });
            }
            Ok(SessionOutcome {
                strategy,
                repeat,
                path,
                log,
            })
        })
        .collect();
    let sessions = results.into_iter().collect::<Result<Vec<_>>>()?;

    let budget = spec.session.max_questions.min(dataset.n_samples() * dataset.n_concepts());
    let checkpoints = spec
        .checkpoints
        .clone()
        .unwrap_or_else(|| default_checkpoints(budget));
    let mut aggregate = Vec::new();
    for &strategy in &spec.strategies {
        let series: Vec<UncertaintySeries> = sessions
            .iter()
            .filter(|s| s.strategy == strategy)
            .map(|s| UncertaintySeries::from_log(&s.log))
            .collect();
        aggregate.extend(aggregate_strategy(
            strategy.name(),
            &series,
            dataset.n_concepts(),
            &checkpoints,
        ));
    }
    let aggregate_path = spec.out_dir.join("aggregate.csv");
    write_aggregate(&aggregate, create(&aggregate_path)?)?;

    let comparison: Vec<_> = sessions
        .iter()
        .map(|s| (s.strategy, s.repeat, concept_summaries(&s.log, &dataset)))
        .collect();
    let comparison_path = spec.out_dir.join("comparison.csv");
    emit_experiment_comparison(&comparison, create(&comparison_path)?)?;

    if spec.svg {
        let path = spec.out_dir.join("aggregate.svg");
        fs::write(&path, aggregate_svg(&aggregate, "Mean total uncertainty"))
            .map_err(|e| VttError::io(&path, e))?;
    }

    Ok(ExperimentReport {
        dataset,
        sessions,
        aggregate,
        aggregate_path,
        comparison_path,
    })
}
