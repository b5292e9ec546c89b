//! Questioning strategies and the sequential questioning loop.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gp::{prior_split, BandMeasure, KernelParams, UncertaintySplit};
use crate::model::{AnswerRecord, ConceptModel, ModelSettings, ObservationMode};
use crate::mue::{mix_seed, Mue};
use crate::pool::{build_pool, candidate_set, Dataset, Question, QuestionPool, TIE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Random,
    Unpredictability,
    Uncertainty,
    UncertaintyAndUnpredictability,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Random,
        StrategyKind::Unpredictability,
        StrategyKind::Uncertainty,
        StrategyKind::UncertaintyAndUnpredictability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Unpredictability => "unpredictability",
            StrategyKind::Uncertainty => "uncertainty",
            StrategyKind::UncertaintyAndUnpredictability => "combined",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(StrategyKind::Random),
            "unpredictability" => Ok(StrategyKind::Unpredictability),
            "uncertainty" => Ok(StrategyKind::Uncertainty),
            "combined" | "uncertainty-unpredictability" => {
                Ok(StrategyKind::UncertaintyAndUnpredictability)
            }
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub strategy: StrategyKind,
    /// Question budget τ.
    pub max_questions: usize,
    /// Stop once the summed band area drops to this level.
    pub uncertainty_stop: Option<f64>,
    /// Unpredictability threshold ε on `|p̂ − 0.5|`.
    pub epsilon: f64,
    pub kernel: KernelParams,
    pub seed: u64,
    pub frequency_mode: bool,
    pub band_measure: BandMeasure,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            strategy: StrategyKind::Uncertainty,
            max_questions: 100,
            uncertainty_stop: None,
            epsilon: 0.15,
            kernel: KernelParams::default(),
            seed: 0,
            frequency_mode: false,
            band_measure: BandMeasure::StdDev,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_questions == 0 {
            return Err(Error::InvalidConfig("max_questions must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        if let Some(stop) = self.uncertainty_stop {
            if !(stop.is_finite() && stop >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "uncertainty_stop must be a non-negative number, got {stop}"
                )));
            }
        }
        self.kernel.validate()
    }

    pub fn model_settings(&self) -> ModelSettings {
        ModelSettings {
            kernel: self.kernel,
            mode: if self.frequency_mode {
                ObservationMode::Frequency
            } else {
                ObservationMode::Count
            },
            measure: self.band_measure,
        }
    }
}

/// Seed of repeat `repeat` of `strategy` in an experiment seeded with `base`.
pub fn session_seed(base: u64, repeat: u64, strategy: StrategyKind) -> u64 {
    mix_seed(mix_seed(base, repeat), strategy.index())
}

/// Laplace-smoothed Yes-frequency among past answers sharing `q`'s concept
/// and ground truth: `(n_yes + 1) / (n + 2)`.
pub fn predictability(q: &Question, history: &[AnswerRecord]) -> f64 {
    let (n, yes) = history
        .iter()
        .filter(|r| r.question.concept == q.concept && r.question.gt == q.gt)
        .fold((0u64, 0u64), |(n, yes), r| (n + 1, yes + (r.prob >= 0.5) as u64));
    smoothed(n, yes)
}

fn smoothed(n: u64, yes: u64) -> f64 {
    (yes + 1) as f64 / (n + 2) as f64
}

/// Running `(answers, yes answers)` per `(concept, gt)`; the incremental form
/// of [`predictability`].
#[derive(Debug, Clone)]
pub struct YesTally {
    counts: Vec<[(u64, u64); 2]>,
}

impl YesTally {
    pub fn new(n_concepts: usize) -> Self {
        Self {
            counts: alloc::vec![[(0, 0); 2]; n_concepts],
        }
    }

    pub fn record(&mut self, r: &AnswerRecord) {
        let cell = &mut self.counts[r.question.concept][r.question.gt as usize];
        cell.0 += 1;
        cell.1 += (r.prob >= 0.5) as u64;
    }

    pub fn predictability(&self, concept: usize, gt: bool) -> f64 {
        let (n, yes) = self.counts[concept][gt as usize];
        smoothed(n, yes)
    }
}

fn unpredictable(p: f64, epsilon: f64) -> bool {
    (p - 0.5).abs() < epsilon
}

fn pick<R: Rng + ?Sized>(pool: &QuestionPool, buckets: &[(usize, bool)], rng: &mut R) -> Result<Question> {
    let total: usize = buckets.iter().map(|&(c, gt)| pool.bucket(c, gt).len()).sum();
    if total == 0 {
        return Err(Error::PoolExhausted);
    }
    let mut index = rng.random_range(0..total);
    for &(concept, gt) in buckets {
        let bucket = pool.bucket(concept, gt);
        if index < bucket.len() {
            return Ok(Question {
                sample: bucket[index],
                concept,
                gt,
            });
        }
        index -= bucket.len();
    }
    unreachable!("index drawn below bucket total")
}

fn nonempty_buckets(pool: &QuestionPool) -> Vec<(usize, bool)> {
    (0..pool.n_concepts())
        .flat_map(|c| [(c, false), (c, true)])
        .filter(|&(c, gt)| !pool.bucket(c, gt).is_empty())
        .collect()
}

/// Picks the next question for `strategy`.
///
/// * `Random`: uniform over the pool.
/// * `Unpredictability`: uniform over questions with `|p̂ − 0.5| < ε`, or over
///   those closest to 0.5 when none qualifies.
/// * `Uncertainty`: uniform over [`candidate_set`].
/// * `UncertaintyAndUnpredictability`: the candidate set filtered by
///   `|p̂ − 0.5| < ε`, or the whole candidate set when the filter is empty.
pub fn select_question<R: Rng + ?Sized>(
    strategy: StrategyKind,
    pool: &QuestionPool,
    tally: &YesTally,
    splits: &[UncertaintySplit],
    epsilon: f64,
    rng: &mut R,
) -> Result<Question> {
    if pool.is_empty() {
        return Err(Error::PoolExhausted);
    }
    match strategy {
        StrategyKind::Random => {
            let index = rng.random_range(0..pool.len());
            pool.nth(index).ok_or(Error::PoolExhausted)
        }
        StrategyKind::Unpredictability => {
            let buckets = nonempty_buckets(pool);
            let score = |&(c, gt): &(usize, bool)| (tally.predictability(c, gt) - 0.5).abs();
            let eligible: Vec<_> = buckets
                .iter()
                .copied()
                .filter(|b| unpredictable(tally.predictability(b.0, b.1), epsilon))
                .collect();
            if !eligible.is_empty() {
                return pick(pool, &eligible, rng);
            }
            let best = buckets.iter().map(score).fold(f64::INFINITY, f64::min);
            let closest: Vec<_> = buckets
                .iter()
                .copied()
                .filter(|b| score(b) - best <= TIE_TOLERANCE)
                .collect();
            pick(pool, &closest, rng)
        }
        StrategyKind::Uncertainty => {
            let candidates = candidate_set(pool, splits)?;
            pick(pool, &candidates.buckets, rng)
        }
        StrategyKind::UncertaintyAndUnpredictability => {
            let candidates = candidate_set(pool, splits)?;
            let eligible: Vec<_> = candidates
                .buckets
                .iter()
                .copied()
                .filter(|&(c, gt)| unpredictable(tally.predictability(c, gt), epsilon))
                .collect();
            if eligible.is_empty() {
                pick(pool, &candidates.buckets, rng)
            } else {
                pick(pool, &eligible, rng)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    Exhausted,
    UncertaintyReached,
    AdapterFailure,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Exhausted => "exhausted",
            StopReason::UncertaintyReached => "uncertainty",
            StopReason::AdapterFailure => "adapter-failure",
        }
    }
}

/// Model uncertainty after a given number of questions.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySnapshot {
    pub step: usize,
    pub per_concept: Vec<UncertaintySplit>,
    pub total: f64,
}

impl UncertaintySnapshot {
    fn new(step: usize, per_concept: Vec<UncertaintySplit>) -> Self {
        let total = per_concept.iter().map(UncertaintySplit::total).sum();
        Self {
            step,
            per_concept,
            total,
        }
    }

    /// Total divided by the number of concepts.
    pub fn per_concept_mean(&self) -> f64 {
        self.total / self.per_concept.len().max(1) as f64
    }
}

/// Everything a session produced: the history, the uncertainty after every
/// step and the final per-concept models.
#[derive(Debug, Clone)]
pub struct SessionLog {
    pub config: SessionConfig,
    pub records: Vec<AnswerRecord>,
    /// Uncertainty before the first question.
    pub initial: UncertaintySnapshot,
    /// `trace[k]` is the uncertainty after `records[k]`.
    pub trace: Vec<UncertaintySnapshot>,
    pub models: Vec<ConceptModel>,
    pub stop: StopReason,
    /// Set when the answer source failed; the log is then incomplete.
    pub error: Option<Error>,
}

impl SessionLog {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Uncertainty after `k` questions; the final value once `k` exceeds the
    /// session length.
    pub fn snapshot_after(&self, k: usize) -> &UncertaintySnapshot {
        if k == 0 {
            &self.initial
        } else {
            self.trace.get(k - 1).or(self.trace.last()).unwrap_or(&self.initial)
        }
    }

    pub fn questions_per_concept(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.models.len()];
        for r in &self.records {
            counts[r.question.concept] += 1;
        }
        counts
    }
}

/// Rebuilds per-concept models from a recorded history.
pub fn replay(
    records: &[AnswerRecord],
    n_concepts: usize,
    settings: ModelSettings,
) -> Result<Vec<ConceptModel>> {
    let mut models: Vec<ConceptModel> = (0..n_concepts)
        .map(|c| ConceptModel::new(c, settings))
        .collect();
    for r in records {
        let model = models
            .get_mut(r.question.concept)
            .ok_or(Error::UnknownConcept(r.question.concept))?;
        model.record(&r.question, r.prob, r.step)?;
    }
    Ok(models)
}

/// Runs the questioning loop: select, ask, record, refresh the answered
/// concept's posterior, remove the question. Stops when the band area falls
/// to `uncertainty_stop`, after `max_questions`, or when the pool runs dry.
pub fn run_session<M: Mue + ?Sized>(
    config: &SessionConfig,
    dataset: &Dataset,
    mue: &mut M,
) -> Result<SessionLog> {
    config.validate()?;
    let settings = config.model_settings();
    let n_concepts = dataset.n_concepts();
    let mut pool = build_pool(dataset);
    let mut models: Vec<ConceptModel> = (0..n_concepts)
        .map(|c| ConceptModel::new(c, settings))
        .collect();
    let prior = prior_split(&config.kernel, config.band_measure)?;
    let mut splits = alloc::vec![prior; n_concepts];
    let mut tally = YesTally::new(n_concepts);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let initial = UncertaintySnapshot::new(0, splits.clone());
    let mut records = Vec::new();
    let mut trace = Vec::new();
    let mut error = None;

    let stop = loop {
        let current = trace.last().unwrap_or(&initial).total;
        if config.uncertainty_stop.is_some_and(|u| current <= u) {
            break StopReason::UncertaintyReached;
        }
        if records.len() >= config.max_questions {
            break StopReason::Budget;
        }
        if pool.is_empty() {
            break StopReason::Exhausted;
        }
        let q = select_question(config.strategy, &pool, &tally, &splits, config.epsilon, &mut rng)?;
        let prob = match mue.answer(&q) {
            Ok(p) => p,
            Err(e) => {
                error = Some(e);
                break StopReason::AdapterFailure;
            }
        };
        let model = &mut models[q.concept];
        let record = match model.record(&q, prob, records.len() + 1) {
            Ok(r) => r,
            Err(e) => {
                error = Some(Error::Adapter(format!("{e}")));
                break StopReason::AdapterFailure;
            }
        };
        splits[q.concept] = model.split()?;
        tally.record(&record);
        pool.remove(&q);
        records.push(record);
        trace.push(UncertaintySnapshot::new(records.len(), splits.clone()));
    };

    Ok(SessionLog {
        config: *config,
        records,
        initial,
        trace,
        models,
        stop,
        error,
    })
}
