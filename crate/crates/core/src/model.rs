//! Per-concept performance model: answer encoding, binning, outcome
//! tallies and the cached GP posterior.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gp::{
    answer_grid, band_integrals, gp_posterior, BandMeasure, KernelParams, Observation,
    PosteriorCurve, UncertaintySplit, GRID_LEN,
};
use crate::pool::Question;

/// Maps a Yes-probability and the ground truth onto the answer axis:
/// `(prob + gt) / 2`. Negative samples land in `[0, 0.5]`, positive ones in
/// `[0.5, 1]`.
pub fn encode_answer(prob: f64, gt: bool) -> Result<f64> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::OutOfRange {
            what: "answer probability",
            value: prob,
        });
    }
    Ok((prob + if gt { 1.0 } else { 0.0 }) / 2.0)
}

/// Nearest bin centre index, `round(a / 0.01)`.
pub fn bin_index(a: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::OutOfRange {
            what: "answer encoding",
            value: a,
        });
    }
    Ok((libm::round(a / 0.01) as usize).min(GRID_LEN - 1))
}

pub fn bin_center(index: usize) -> f64 {
    index as f64 / 100.0
}

/// Confusion-matrix cell of one answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    TrueNegative,
    FalsePositive,
    FalseNegative,
    TruePositive,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::TrueNegative,
        Outcome::FalsePositive,
        Outcome::FalseNegative,
        Outcome::TruePositive,
    ];

    /// "Yes" iff `prob >= 0.5`.
    pub fn from_answer(prob: f64, gt: bool) -> Self {
        match (gt, prob >= 0.5) {
            (false, false) => Outcome::TrueNegative,
            (false, true) => Outcome::FalsePositive,
            (true, false) => Outcome::FalseNegative,
            (true, true) => Outcome::TruePositive,
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            Outcome::TrueNegative => "TN",
            Outcome::FalsePositive => "FP",
            Outcome::FalseNegative => "FN",
            Outcome::TruePositive => "TP",
        }
    }

    pub fn from_abbrev(s: &str) -> Option<Self> {
        Outcome::ALL.into_iter().find(|o| o.abbrev() == s)
    }

    /// Inclusive range of bin indices assigned to this subregion.
    pub fn bins(self) -> core::ops::RangeInclusive<usize> {
        match self {
            Outcome::TrueNegative => 0..=24,
            Outcome::FalsePositive => 25..=50,
            Outcome::FalseNegative => 51..=74,
            Outcome::TruePositive => 75..=100,
        }
    }
}

/// Subregion of the answer axis: TN `[0, 0.25)`, FP `[0.25, 0.5]`,
/// FN `(0.5, 0.75)`, TP `[0.75, 1]`.
///
/// `a = 0.5` is shared by a negative sample answered 1.0 and a positive
/// sample answered 0.0; it resolves to FP here. [`Outcome::from_answer`]
/// disambiguates using the ground truth.
pub fn classify_outcome(a: f64) -> Outcome {
    if a < 0.25 {
        Outcome::TrueNegative
    } else if a <= 0.5 {
        Outcome::FalsePositive
    } else if a < 0.75 {
        Outcome::FalseNegative
    } else {
        Outcome::TruePositive
    }
}

/// Bin for an answer: the nearest centre, kept inside the answer's outcome
/// subregion so that bin 25, 50 and 75 never mix outcomes.
pub fn answer_bin(prob: f64, gt: bool) -> Result<usize> {
    let a = encode_answer(prob, gt)?;
    let bins = Outcome::from_answer(prob, gt).bins();
    Ok(bin_index(a)?.clamp(*bins.start(), *bins.end()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn add(&mut self, outcome: Outcome, n: u64) {
        match outcome {
            Outcome::TrueNegative => self.tn += n,
            Outcome::FalsePositive => self.fp += n,
            Outcome::FalseNegative => self.fn_ += n,
            Outcome::TruePositive => self.tp += n,
        }
    }

    pub fn get(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::TrueNegative => self.tn,
            Outcome::FalsePositive => self.fp,
            Outcome::FalseNegative => self.fn_,
            Outcome::TruePositive => self.tp,
        }
    }
}

impl core::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            tn: self.tn + rhs.tn,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
            tp: self.tp + rhs.tp,
        }
    }
}

/// One entry of the question history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnswerRecord {
    pub question: Question,
    pub prob: f64,
    pub a: f64,
    /// 1-based position in the session.
    pub step: usize,
}

impl AnswerRecord {
    pub fn outcome(&self) -> Outcome {
        Outcome::from_answer(self.prob, self.question.gt)
    }
}

/// Tallies the outcome of every record.
pub fn confusion_counts(history: &[AnswerRecord]) -> ConfusionCounts {
    let mut counts = ConfusionCounts::default();
    for r in history {
        counts.add(r.outcome(), 1);
    }
    counts
}

/// What a GP observation carries for an occupied bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObservationMode {
    #[default]
    Count,
    /// Count divided by the number of answers recorded for the concept.
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelSettings {
    pub kernel: KernelParams,
    pub mode: ObservationMode,
    pub measure: BandMeasure,
}

/// Binned answer counts for one concept plus its lazily refreshed posterior.
#[derive(Debug, Clone)]
pub struct ConceptModel {
    concept: usize,
    counts: [u64; GRID_LEN],
    total: u64,
    settings: ModelSettings,
    curve: Option<PosteriorCurve>,
    /// Posterior variance depends on occupied locations only, so the split
    /// survives records that land in an already occupied bin.
    split: Option<UncertaintySplit>,
}

impl PartialEq for ConceptModel {
    fn eq(&self, other: &Self) -> bool {
        self.concept == other.concept
            && self.counts == other.counts
            && self.settings == other.settings
    }
}

impl ConceptModel {
    pub fn new(concept: usize, settings: ModelSettings) -> Self {
        Self {
            concept,
            counts: [0; GRID_LEN],
            total: 0,
            settings,
            curve: None,
            split: None,
        }
    }

    pub fn concept(&self) -> usize {
        self.concept
    }

    pub fn settings(&self) -> &ModelSettings {
        &self.settings
    }

    pub fn bin_counts(&self) -> &[u64; GRID_LEN] {
        &self.counts
    }

    /// Number of answers recorded.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Records the MuE answer `prob` to `q` as the `step`-th question.
    pub fn record(&mut self, q: &Question, prob: f64, step: usize) -> Result<AnswerRecord> {
        if q.concept != self.concept {
            return Err(Error::ConceptMismatch {
                expected: self.concept,
                found: q.concept,
            });
        }
        let a = encode_answer(prob, q.gt)?;
        let bin = answer_bin(prob, q.gt)?;
        if self.counts[bin] == 0 {
            self.split = None;
        }
        self.counts[bin] += 1;
        self.total += 1;
        self.curve = None;
        Ok(AnswerRecord {
            question: *q,
            prob,
            a,
            step,
        })
    }

    /// One observation per occupied bin.
    pub fn observations(&self) -> Vec<Observation> {
        let scale = match self.settings.mode {
            ObservationMode::Count => 1.0,
            ObservationMode::Frequency => 1.0 / self.total.max(1) as f64,
        };
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(bin, &n)| Observation {
                location: bin_center(bin),
                value: n as f64 * scale,
            })
            .collect()
    }

    pub fn curve(&mut self) -> Result<&PosteriorCurve> {
        if self.curve.is_none() {
            let curve = gp_posterior(&self.observations(), &answer_grid(), &self.settings.kernel)?;
            if self.split.is_none() {
                self.split = Some(band_integrals(&curve, self.settings.measure)?);
            }
            self.curve = Some(curve);
        }
        Ok(self.curve.as_ref().expect("curve filled above"))
    }

    pub fn split(&mut self) -> Result<UncertaintySplit> {
        if let Some(split) = self.split {
            return Ok(split);
        }
        // A missing split always comes with a missing curve, which refits both.
        self.curve = None;
        self.curve()?;
        Ok(self.split.expect("split filled by curve()"))
    }

    /// Counts summed over each outcome subregion of the axis.
    pub fn confusion(&self) -> ConfusionCounts {
        let mut counts = ConfusionCounts::default();
        for outcome in Outcome::ALL {
            counts.add(outcome, self.counts[outcome.bins()].iter().sum());
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(concept: usize, gt: bool) -> Question {
        Question {
            sample: 0,
            concept,
            gt,
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_answer(0.8, true).unwrap(), 0.9);
        assert_eq!(encode_answer(0.0, false).unwrap(), 0.0);
        assert_eq!(encode_answer(0.5, false).unwrap(), 0.25);
        assert!(encode_answer(1.2, true).is_err());
        assert!(encode_answer(f64::NAN, false).is_err());
    }

    #[test]
    fn bin_examples() {
        assert_eq!(bin_index(0.0).unwrap(), 0);
        assert_eq!(bin_index(0.254).unwrap(), 25);
        assert_eq!(bin_index(1.0).unwrap(), 100);
        assert!(bin_index(-0.01).is_err());
    }

    #[test]
    fn outcome_examples() {
        assert_eq!(classify_outcome(0.9), Outcome::TruePositive);
        assert_eq!(classify_outcome(0.1), Outcome::TrueNegative);
        assert_eq!(classify_outcome(0.25), Outcome::FalsePositive);
        assert_eq!(classify_outcome(0.6), Outcome::FalseNegative);
        assert_eq!(classify_outcome(0.75), Outcome::TruePositive);
        assert_eq!(Outcome::from_answer(0.5, false), Outcome::FalsePositive);
        assert_eq!(Outcome::from_answer(0.0, true), Outcome::FalseNegative);
    }

    #[test]
    fn boundary_bins_stay_in_their_subregion() {
        // a = 0.246 rounds to bin 25 but is a true negative.
        assert_eq!(answer_bin(0.492, false).unwrap(), 24);
        assert_eq!(answer_bin(0.5, false).unwrap(), 25);
        assert_eq!(answer_bin(1.0, false).unwrap(), 50);
        assert_eq!(answer_bin(0.0, true).unwrap(), 51);
        assert_eq!(answer_bin(0.49, true).unwrap(), 74);
        assert_eq!(answer_bin(0.5, true).unwrap(), 75);
    }

    #[test]
    fn record_increments_bin() {
        let mut m = ConceptModel::new(0, ModelSettings::default());
        m.record(&q(0, true), 0.9, 1).unwrap();
        assert_eq!(m.bin_counts()[95], 1);
        m.record(&q(0, true), 0.9, 2).unwrap();
        assert_eq!(m.bin_counts()[95], 2);
        assert_eq!(m.bin_counts().iter().sum::<u64>(), 2);
        assert_eq!(m.total(), 2);
    }

    #[test]
    fn record_rejects_other_concept() {
        let mut m = ConceptModel::new(0, ModelSettings::default());
        assert_eq!(
            m.record(&q(1, true), 0.9, 1),
            Err(Error::ConceptMismatch {
                expected: 0,
                found: 1
            })
        );
    }

    #[test]
    fn frequency_mode_normalizes() {
        let settings = ModelSettings {
            mode: ObservationMode::Frequency,
            ..ModelSettings::default()
        };
        let mut m = ConceptModel::new(0, settings);
        m.record(&q(0, true), 0.9, 1).unwrap();
        assert_eq!(m.observations(), [Observation { location: 0.95, value: 1.0 }]);
        m.record(&q(0, false), 0.1, 2).unwrap();
        m.record(&q(0, false), 0.1, 3).unwrap();
        let obs = m.observations();
        assert_eq!(obs[0], Observation { location: 0.05, value: 2.0 / 3.0 });
        assert_eq!(obs[1], Observation { location: 0.95, value: 1.0 / 3.0 });
    }

    #[test]
    fn cache_refreshes_on_record() {
        let mut m = ConceptModel::new(0, ModelSettings::default());
        assert_eq!(m.split().unwrap().total(), 4.0);
        m.record(&q(0, true), 0.9, 1).unwrap();
        let s = m.split().unwrap();
        assert!(s.upper < 2.0);
        assert!(s.lower <= 2.0);
    }

    #[test]
    fn cached_split_matches_fresh_fit() {
        let mut m = ConceptModel::new(0, ModelSettings::default());
        for (i, prob) in [0.9, 0.9, 0.3, 0.91, 0.9, 0.3].into_iter().enumerate() {
            m.record(&q(0, i % 3 != 2), prob, i + 1).unwrap();
            let cached = m.split().unwrap();
            let curve = gp_posterior(&m.observations(), &answer_grid(), &KernelParams::default()).unwrap();
            assert_eq!(cached, band_integrals(&curve, BandMeasure::StdDev).unwrap());
        }
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(confusion_counts(&[]), ConfusionCounts::default());
        let rec = |prob, gt| AnswerRecord {
            question: q(0, gt),
            prob,
            a: encode_answer(prob, gt).unwrap(),
            step: 1,
        };
        // a = 0.9, 0.1, 0.6
        let history = [rec(0.8, true), rec(0.2, false), rec(0.2, true)];
        assert_eq!(
            confusion_counts(&history),
            ConfusionCounts { tn: 1, fp: 0, fn_: 1, tp: 1 }
        );
        for r in &history {
            assert_eq!(r.outcome(), classify_outcome(r.a));
        }
    }
}
