//! Validation pool, the question set `D × C` and the uncertainty-driven
//! candidate set.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gp::UncertaintySplit;

/// Labeled validation samples: one binary ground-truth column per concept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    samples: Vec<String>,
    concepts: Vec<String>,
    /// Row-major `samples × concepts`.
    labels: Vec<bool>,
}

impl Dataset {
    pub fn new(samples: Vec<String>, concepts: Vec<String>, labels: Vec<bool>) -> Result<Self> {
        if concepts.is_empty() {
            return Err(Error::InvalidDataset("no concepts".into()));
        }
        if labels.len() != samples.len() * concepts.len() {
            return Err(Error::InvalidDataset(format!(
                "expected {} labels for {} samples x {} concepts, got {}",
                samples.len() * concepts.len(),
                samples.len(),
                concepts.len(),
                labels.len()
            )));
        }
        if let Some(dup) = first_duplicate(&samples) {
            return Err(Error::InvalidDataset(format!("duplicate sample id `{dup}`")));
        }
        if let Some(dup) = first_duplicate(&concepts) {
            return Err(Error::InvalidDataset(format!("duplicate concept id `{dup}`")));
        }
        Ok(Self {
            samples,
            concepts,
            labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.samples
    }

    pub fn concept_ids(&self) -> &[String] {
        &self.concepts
    }

    pub fn sample_id(&self, sample: usize) -> &str {
        &self.samples[sample]
    }

    pub fn concept_id(&self, concept: usize) -> &str {
        &self.concepts[concept]
    }

    pub fn sample_index(&self, id: &str) -> Option<usize> {
        self.samples.iter().position(|s| s == id)
    }

    pub fn concept_index(&self, id: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c == id)
    }

    pub fn label(&self, sample: usize, concept: usize) -> bool {
        self.labels[sample * self.concepts.len() + concept]
    }

    /// Number of samples labeled positive for `concept`.
    pub fn positives(&self, concept: usize) -> usize {
        (0..self.samples.len())
            .filter(|&s| self.label(s, concept))
            .count()
    }

    pub fn question(&self, sample: usize, concept: usize) -> Question {
        Question {
            sample,
            concept,
            gt: self.label(sample, concept),
        }
    }
}

fn first_duplicate(ids: &[String]) -> Option<&str> {
    let mut seen = BTreeSet::new();
    ids.iter().find(|id| !seen.insert(id.as_str())).map(String::as_str)
}

/// "Is concept `concept` present in sample `sample`?", with its true answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Question {
    pub sample: usize,
    pub concept: usize,
    pub gt: bool,
}

/// The questions not yet asked, bucketed by `(concept, gt)`.
///
/// Buckets hold sample indices; removal is `O(1)` through a position table.
#[derive(Debug, Clone)]
pub struct QuestionPool {
    n_concepts: usize,
    /// `buckets[2 * concept + gt]`.
    buckets: Vec<Vec<usize>>,
    /// Position of `(sample, concept)` inside its bucket, `usize::MAX` once asked.
    position: Vec<usize>,
    gt: Vec<bool>,
    remaining: usize,
}

const ASKED: usize = usize::MAX;

/// Materializes every `(sample, concept)` pair of `dataset`.
pub fn build_pool(dataset: &Dataset) -> QuestionPool {
    let n_concepts = dataset.n_concepts();
    let mut buckets = alloc::vec![Vec::new(); 2 * n_concepts];
    let mut position = alloc::vec![0; dataset.n_samples() * n_concepts];
    let mut gt = alloc::vec![false; dataset.n_samples() * n_concepts];
    for sample in 0..dataset.n_samples() {
        for concept in 0..n_concepts {
            let label = dataset.label(sample, concept);
            let bucket = &mut buckets[2 * concept + label as usize];
            position[sample * n_concepts + concept] = bucket.len();
            gt[sample * n_concepts + concept] = label;
            bucket.push(sample);
        }
    }
    QuestionPool {
        n_concepts,
        buckets,
        position,
        gt,
        remaining: dataset.n_samples() * n_concepts,
    }
}

impl QuestionPool {
    pub fn len(&self) -> usize {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    pub fn n_concepts(&self) -> usize {
        self.n_concepts
    }

    /// Remaining sample indices for `(concept, gt)`.
    pub fn bucket(&self, concept: usize, gt: bool) -> &[usize] {
        &self.buckets[2 * concept + gt as usize]
    }

    pub fn concept_len(&self, concept: usize) -> usize {
        self.bucket(concept, false).len() + self.bucket(concept, true).len()
    }

    pub fn contains(&self, q: &Question) -> bool {
        self.slot(q).is_some_and(|i| self.position[i] != ASKED && self.gt[i] == q.gt)
    }

    /// Removes `q`; returns whether it was still present.
    pub fn remove(&mut self, q: &Question) -> bool {
        if !self.contains(q) {
            return false;
        }
        let slot = q.sample * self.n_concepts + q.concept;
        let pos = self.position[slot];
        let bucket = &mut self.buckets[2 * q.concept + q.gt as usize];
        bucket.swap_remove(pos);
        if let Some(&moved) = bucket.get(pos) {
            self.position[moved * self.n_concepts + q.concept] = pos;
        }
        self.position[slot] = ASKED;
        self.remaining -= 1;
        true
    }

    /// The `index`-th remaining question in bucket order.
    pub fn nth(&self, mut index: usize) -> Option<Question> {
        for (b, bucket) in self.buckets.iter().enumerate() {
            if index < bucket.len() {
                return Some(Question {
                    sample: bucket[index],
                    concept: b / 2,
                    gt: b % 2 == 1,
                });
            }
            index -= bucket.len();
        }
        None
    }

    pub fn questions(&self) -> impl Iterator<Item = Question> + '_ {
        self.buckets.iter().enumerate().flat_map(|(b, bucket)| {
            bucket.iter().map(move |&sample| Question {
                sample,
                concept: b / 2,
                gt: b % 2 == 1,
            })
        })
    }

    fn slot(&self, q: &Question) -> Option<usize> {
        (q.concept < self.n_concepts)
            .then(|| q.sample * self.n_concepts + q.concept)
            .filter(|&i| i < self.position.len())
    }
}

/// A union of `(concept, gt)` buckets of the pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub buckets: Vec<(usize, bool)>,
    /// The exact argmax buckets were empty and a fallback bucket was used.
    pub fallback: bool,
}

impl CandidateSet {
    pub fn len(&self, pool: &QuestionPool) -> usize {
        self.buckets.iter().map(|&(c, gt)| pool.bucket(c, gt).len()).sum()
    }

    pub fn is_empty(&self, pool: &QuestionPool) -> bool {
        self.len(pool) == 0
    }

    pub fn nth(&self, pool: &QuestionPool, mut index: usize) -> Option<Question> {
        for &(concept, gt) in &self.buckets {
            let bucket = pool.bucket(concept, gt);
            if index < bucket.len() {
                return Some(Question {
                    sample: bucket[index],
                    concept,
                    gt,
                });
            }
            index -= bucket.len();
        }
        None
    }

    pub fn questions<'a>(&'a self, pool: &'a QuestionPool) -> impl Iterator<Item = Question> + 'a {
        self.buckets.iter().flat_map(move |&(concept, gt)| {
            pool.bucket(concept, gt).iter().map(move |&sample| Question {
                sample,
                concept,
                gt,
            })
        })
    }
}

/// Concepts whose dominant uncertainty is within this distance of the maximum
/// are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Remaining questions on the concept(s) with the largest `max(u⁻, u⁺)`,
/// restricted to the ground truth of the dominant half.
///
/// When that bucket is empty the same concept's other half is used; when the
/// concept is exhausted the next concept by descending `max(u⁻, u⁺)` is tried.
pub fn candidate_set(pool: &QuestionPool, splits: &[UncertaintySplit]) -> Result<CandidateSet> {
    if pool.is_empty() {
        return Err(Error::PoolExhausted);
    }
    let live: Vec<usize> = (0..pool.n_concepts())
        .filter(|&c| pool.concept_len(c) > 0)
        .collect();
    for &c in &live {
        if c >= splits.len() {
            return Err(Error::MissingSplit(c));
        }
    }

    // The argmax runs over all concepts, exhausted ones included; the
    // fallback only applies when its buckets are all empty.
    let best = (0..pool.n_concepts().min(splits.len()))
        .map(|c| splits[c].dominant())
        .fold(f64::NEG_INFINITY, f64::max);
    let exact: Vec<(usize, bool)> = (0..pool.n_concepts().min(splits.len()))
        .filter(|&c| best - splits[c].dominant() <= TIE_TOLERANCE)
        .map(|c| (c, splits[c].dominant_gt()))
        .filter(|&(c, gt)| !pool.bucket(c, gt).is_empty())
        .collect();
    if !exact.is_empty() {
        return Ok(CandidateSet {
            buckets: exact,
            fallback: false,
        });
    }

    let mut ranked = live;
    ranked.sort_by(|&a, &b| splits[b].dominant().total_cmp(&splits[a].dominant()).then(a.cmp(&b)));
    let mut start = 0;
    while start < ranked.len() {
        let head = splits[ranked[start]].dominant();
        let end = ranked[start..]
            .iter()
            .position(|&c| head - splits[c].dominant() > TIE_TOLERANCE)
            .map_or(ranked.len(), |off| start + off);
        let group = &ranked[start..end];
        for prefer_dominant in [true, false] {
            let buckets: Vec<(usize, bool)> = group
                .iter()
                .map(|&c| {
                    let gt = splits[c].dominant_gt();
                    (c, if prefer_dominant { gt } else { !gt })
                })
                .filter(|&(c, gt)| !pool.bucket(c, gt).is_empty())
                .collect();
            if !buckets.is_empty() {
                return Ok(CandidateSet {
                    buckets,
                    fallback: true,
                });
            }
        }
        start = end;
    }
    Err(Error::PoolExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn two_concept(labels: Vec<bool>) -> Dataset {
        let n = labels.len() / 2;
        Dataset::new(ids("s", n), vec!["A".to_string(), "B".to_string()], labels).unwrap()
    }

    #[test]
    fn all_zero_dataset() {
        let d = two_concept(vec![false; 6]);
        assert_eq!(d.n_samples(), 3);
        assert_eq!((0..3).flat_map(|s| (0..2).map(move |c| (s, c))).filter(|&(s, c)| !d.label(s, c)).count(), 6);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(ids("s", 2), ids("c", 2), vec![false; 3]).is_err());
        assert!(Dataset::new(vec!["x".into(), "x".into()], ids("c", 1), vec![false; 2]).is_err());
        assert!(Dataset::new(ids("s", 1), vec![], vec![]).is_err());
    }

    #[test]
    fn pool_sizes() {
        let d = Dataset::new(ids("s", 143), ids("c", 4), vec![false; 572]).unwrap();
        assert_eq!(build_pool(&d).len(), 572);
        let one = Dataset::new(ids("s", 1), ids("c", 1), vec![true]).unwrap();
        assert_eq!(build_pool(&one).len(), 1);
    }

    #[test]
    fn removal_contract() {
        let d = two_concept(vec![true, false, false, true, true, true]);
        let mut pool = build_pool(&d);
        let all: Vec<Question> = pool.questions().collect();
        assert_eq!(all.len(), 6);
        for (k, q) in all.iter().enumerate() {
            assert!(pool.remove(q));
            assert!(!pool.remove(q));
            assert_eq!(pool.len(), 6 - k - 1);
            assert!(pool.questions().all(|r| r != *q));
        }
        assert!(pool.is_empty());
    }

    #[test]
    fn contains_checks_ground_truth() {
        let d = two_concept(vec![true, false]);
        let pool = build_pool(&d);
        assert!(pool.contains(&Question { sample: 0, concept: 0, gt: true }));
        assert!(!pool.contains(&Question { sample: 0, concept: 0, gt: false }));
        assert!(!pool.contains(&Question { sample: 5, concept: 0, gt: true }));
    }

    fn split(lower: f64, upper: f64) -> UncertaintySplit {
        UncertaintySplit { lower, upper }
    }

    #[test]
    fn candidates_negative_half() {
        let d = two_concept(vec![true, false, false, true, false, false]);
        let pool = build_pool(&d);
        let c = candidate_set(&pool, &[split(2.1, 1.3), split(1.0, 1.0)]).unwrap();
        assert_eq!(c.buckets, vec![(0, false)]);
        assert!(!c.fallback);
        assert!(c.questions(&pool).all(|q| q.concept == 0 && !q.gt));
        assert_eq!(c.len(&pool), 2);
    }

    #[test]
    fn candidates_positive_half() {
        let d = two_concept(vec![true, false, false, true, true, false]);
        let pool = build_pool(&d);
        let c = candidate_set(&pool, &[split(1.0, 1.9), split(0.2, 0.3)]).unwrap();
        assert_eq!(c.buckets, vec![(0, true)]);
    }

    #[test]
    fn candidates_include_ties() {
        let d = two_concept(vec![false; 4]);
        let pool = build_pool(&d);
        let c = candidate_set(&pool, &[split(2.0, 2.0), split(2.0, 2.0 - 1e-13)]).unwrap();
        assert_eq!(c.buckets, vec![(0, false), (1, false)]);
    }

    #[test]
    fn fallback_chain() {
        // A: one positive, one negative. B: two negatives.
        let d = two_concept(vec![true, false, false, false]);
        let mut pool = build_pool(&d);
        let splits = [split(2.1, 1.3), split(1.0, 1.0)];
        pool.remove(&Question { sample: 1, concept: 0, gt: false });
        let c = candidate_set(&pool, &splits).unwrap();
        assert_eq!(c.buckets, vec![(0, true)]);
        assert!(c.fallback);
        pool.remove(&Question { sample: 0, concept: 0, gt: true });
        let c = candidate_set(&pool, &splits).unwrap();
        assert_eq!(c.buckets, vec![(1, false)]);
        assert!(c.fallback);
        for s in 0..2 {
            pool.remove(&Question { sample: s, concept: 1, gt: false });
        }
        assert_eq!(candidate_set(&pool, &splits), Err(Error::PoolExhausted));
    }

    #[test]
    fn missing_split_is_an_error() {
        let d = two_concept(vec![false; 2]);
        let pool = build_pool(&d);
        assert_eq!(candidate_set(&pool, &[split(1.0, 1.0)]), Err(Error::MissingSplit(1)));
    }
}
