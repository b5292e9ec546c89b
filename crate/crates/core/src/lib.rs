//! Adaptive, concept-centric interrogation of multi-label classifiers.
//!
//! A method under evaluation (MuE) answers questions of the form "is concept
//! `c` present in sample `s`?" with a Yes-probability. Each answer is mapped
//! to `a = (prob + gt) / 2 ∈ [0, 1]`, binned at 0.01 resolution, and the
//! per-concept bin counts are modeled with an exact Gaussian process. The
//! area of the ±2σ posterior band over `[0, 0.5]` and `[0.5, 1]` measures how
//! little is known about the MuE on negative and positive samples of the
//! concept, and the questioning strategies use it to decide what to ask next.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the
//! subprocess adapter and the command-line front end live in the `vtt` crate.
#![no_std]

extern crate alloc;

pub mod error;
pub mod gp;
pub mod model;
pub mod mue;
pub mod pool;
pub mod strategy;
pub mod synthetic;

pub use error::{Error, Result};
pub use gp::{
    answer_grid, band_integrals, gp_posterior, kernel_eval, BandMeasure, KernelParams,
    Observation, PosteriorCurve, UncertaintySplit,
};
pub use model::{
    bin_index, classify_outcome, confusion_counts, encode_answer, AnswerRecord, ConceptModel,
    ConfusionCounts, ModelSettings, ObservationMode, Outcome,
};
pub use mue::{
    matrix_answer, most_common_concept, synthetic_answer, ConfidenceDistribution, Mue,
    ProbabilityMatrix, SyntheticMue, SyntheticMueSpec,
};
pub use pool::{build_pool, candidate_set, CandidateSet, Dataset, Question, QuestionPool};
pub use strategy::{
    predictability, replay, run_session, select_question, session_seed, SessionConfig, SessionLog,
    StopReason, StrategyKind, UncertaintySnapshot,
};
pub use synthetic::{generate_dataset, skewed_prevalence};
