//! Answer sources for the method under evaluation (MuE): synthetic oracles
//! with a prescribed per-concept accuracy and a pre-scored probability table.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::pool::{Dataset, Question};

/// Anything that answers "Is concept c present in sample s?" with a
/// Yes-probability in `[0, 1]`.
pub trait Mue {
    fn answer(&mut self, q: &Question) -> Result<f64>;
}

impl<M: Mue + ?Sized> Mue for &mut M {
    fn answer(&mut self, q: &Question) -> Result<f64> {
        (**self).answer(q)
    }
}

impl<M: Mue + ?Sized> Mue for alloc::boxed::Box<M> {
    fn answer(&mut self, q: &Question) -> Result<f64> {
        (**self).answer(q)
    }
}

/// Concept with the most positive labels; ties go to the lowest index.
pub fn most_common_concept(dataset: &Dataset) -> usize {
    let mut best = 0;
    let mut best_count = 0;
    for c in 0..dataset.n_concepts() {
        let n = dataset.positives(c);
        if n > best_count {
            best = c;
            best_count = n;
        }
    }
    best
}

/// How confident a synthetic answer is once its correctness is decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfidenceDistribution {
    /// Uniform over the chosen half: `(0.5, 1]` for Yes, `[0, 0.5)` for No.
    UniformHalf,
    /// Always answer `v` for Yes and `1 − v` for No; `v ∈ (0.5, 1]`.
    Fixed(f64),
    /// A `Beta(α, β)` draw `x` folded onto the half: `0.5 ± x / 2`.
    FoldedBeta { alpha: f64, beta: f64 },
}

impl ConfidenceDistribution {
    fn validate(&self) -> Result<()> {
        match *self {
            ConfidenceDistribution::UniformHalf => Ok(()),
            ConfidenceDistribution::Fixed(v) if v > 0.5 && v <= 1.0 => Ok(()),
            ConfidenceDistribution::Fixed(v) => Err(Error::InvalidConfig(format!(
                "fixed confidence must lie in (0.5, 1], got {v}"
            ))),
            ConfidenceDistribution::FoldedBeta { alpha, beta } => Beta::new(alpha, beta)
                .map(|_| ())
                .map_err(|e| Error::InvalidConfig(format!("beta({alpha}, {beta}): {e}"))),
        }
    }

    /// A Yes-probability inside the half selected by `yes`.
    fn draw<R: Rng + ?Sized>(&self, yes: bool, rng: &mut R) -> f64 {
        match *self {
            ConfidenceDistribution::UniformHalf => {
                let u: f64 = rng.random();
                if yes {
                    1.0 - 0.5 * u
                } else {
                    0.5 * u
                }
            }
            ConfidenceDistribution::Fixed(v) => {
                if yes {
                    v
                } else {
                    1.0 - v
                }
            }
            ConfidenceDistribution::FoldedBeta { alpha, beta } => {
                let x = Beta::new(alpha, beta).expect("validated").sample(rng);
                if yes {
                    let p = 0.5 + 0.5 * x;
                    if p > 0.5 {
                        p.min(1.0)
                    } else {
                        0.5 + f64::EPSILON
                    }
                } else {
                    let p = 0.5 - 0.5 * x;
                    if p < 0.5 {
                        p.max(0.0)
                    } else {
                        0.5 - f64::EPSILON
                    }
                }
            }
        }
    }
}

/// A synthetic MuE defined by its accuracy on each concept.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMueSpec {
    pub accuracy_by_concept: Vec<f64>,
    pub confidence: ConfidenceDistribution,
    pub seed: u64,
}

impl SyntheticMueSpec {
    pub fn new(
        accuracy_by_concept: Vec<f64>,
        confidence: ConfidenceDistribution,
        seed: u64,
    ) -> Result<Self> {
        let spec = Self {
            accuracy_by_concept,
            confidence,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self
            .accuracy_by_concept
            .iter()
            .find(|a| !(**a > 0.0 && **a <= 1.0))
        {
            return Err(Error::InvalidConfig(format!(
                "accuracy must lie in (0, 1], got {a}"
            )));
        }
        self.confidence.validate()
    }

    /// Same accuracy on every concept.
    pub fn uniform(n_concepts: usize, accuracy: f64, seed: u64) -> Result<Self> {
        Self::new(
            vec![accuracy; n_concepts],
            ConfidenceDistribution::UniformHalf,
            seed,
        )
    }

    /// `common` accuracy on the dataset's most common concept, `others` on the
    /// rest. `(0.9, 0.5)` is the biased MuE, `(0.5, 0.9)` its mirror.
    pub fn common_vs_rest(dataset: &Dataset, common: f64, others: f64, seed: u64) -> Result<Self> {
        let mut acc = vec![others; dataset.n_concepts()];
        acc[most_common_concept(dataset)] = common;
        Self::new(acc, ConfidenceDistribution::UniformHalf, seed)
    }

    pub fn biased(dataset: &Dataset, seed: u64) -> Result<Self> {
        Self::common_vs_rest(dataset, 0.9, 0.5, seed)
    }

    pub fn negatively_biased(dataset: &Dataset, seed: u64) -> Result<Self> {
        Self::common_vs_rest(dataset, 0.5, 0.9, seed)
    }

    pub fn unbiased(dataset: &Dataset, seed: u64) -> Result<Self> {
        Self::uniform(dataset.n_concepts(), 0.7, seed)
    }
}

/// Draws one synthetic answer: correct with probability `accuracy(c)`, then
/// a confidence in the half implied by the correctness bit.
pub fn synthetic_answer<R: Rng + ?Sized>(
    spec: &SyntheticMueSpec,
    q: &Question,
    rng: &mut R,
) -> Result<f64> {
    let accuracy = *spec
        .accuracy_by_concept
        .get(q.concept)
        .ok_or(Error::UnknownConcept(q.concept))?;
    let correct = rng.random::<f64>() < accuracy;
    let yes = correct == q.gt;
    Ok(spec.confidence.draw(yes, rng))
}

/// Synthetic MuE whose answer to a question depends only on the spec seed
/// and the question, so it does not depend on the order of asking.
#[derive(Debug, Clone)]
pub struct SyntheticMue {
    spec: SyntheticMueSpec,
}

impl SyntheticMue {
    pub fn new(spec: SyntheticMueSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &SyntheticMueSpec {
        &self.spec
    }

    fn question_rng(&self, q: &Question) -> ChaCha8Rng {
        let key = mix_seed(
            mix_seed(self.spec.seed, q.sample as u64),
            q.concept as u64,
        );
        ChaCha8Rng::seed_from_u64(key)
    }
}

impl Mue for SyntheticMue {
    fn answer(&mut self, q: &Question) -> Result<f64> {
        let mut rng = self.question_rng(q);
        synthetic_answer(&self.spec, q, &mut rng)
    }
}

/// SplitMix64 finalizer over `seed ⊕ f(value)`; used to derive independent
/// stream seeds.
pub fn mix_seed(seed: u64, value: u64) -> u64 {
    let mut z = seed ^ value.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pre-computed Yes-probabilities per `(sample, concept)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    n_concepts: usize,
    probs: Vec<Option<f64>>,
}

impl ProbabilityMatrix {
    pub fn new(n_samples: usize, n_concepts: usize) -> Self {
        Self {
            n_concepts,
            probs: vec![None; n_samples * n_concepts],
        }
    }

    pub fn set(&mut self, sample: usize, concept: usize, prob: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::OutOfRange {
                what: "stored probability",
                value: prob,
            });
        }
        let slot = self
            .slot(sample, concept)
            .ok_or(Error::MissingEntry { sample, concept })?;
        self.probs[slot] = Some(prob);
        Ok(())
    }

    pub fn get(&self, sample: usize, concept: usize) -> Option<f64> {
        self.slot(sample, concept).and_then(|i| self.probs[i])
    }

    pub fn is_complete(&self) -> bool {
        self.probs.iter().all(Option::is_some)
    }

    fn slot(&self, sample: usize, concept: usize) -> Option<usize> {
        let i = sample * self.n_concepts + concept;
        (concept < self.n_concepts && i < self.probs.len()).then_some(i)
    }
}

/// Looks up the stored answer for `q`.
pub fn matrix_answer(matrix: &ProbabilityMatrix, q: &Question) -> Result<f64> {
    matrix.get(q.sample, q.concept).ok_or(Error::MissingEntry {
        sample: q.sample,
        concept: q.concept,
    })
}

impl Mue for ProbabilityMatrix {
    fn answer(&mut self, q: &Question) -> Result<f64> {
        matrix_answer(self, q)
    }
}
