//! Plot data for the three figure families: per-concept GP curves, concept
//! comparisons after a session, and uncertainty against questions asked
//! averaged over repeats.

use std::io::{Read, Write};

use vtt_core::model::bin_center;
use vtt_core::{AnswerRecord, ConceptModel, Dataset, SessionLog, StrategyKind, UncertaintySplit};

use crate::error::{Result, VttError};
use crate::formats::{line_of, reader};
use crate::svg::{Band, Line, Plot, Points, BAND_FILLS, PALETTE};

/// One grid row of a concept's performance model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub a: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
}

pub fn gp_curve_rows(model: &mut ConceptModel) -> Result<Vec<CurveRow>> {
    let counts = *model.bin_counts();
    let curve = model.curve()?;
    Ok(curve
        .grid
        .iter()
        .zip(&curve.mean)
        .zip(curve.std_dev())
        .enumerate()
        .map(|(i, ((&a, &mean), sd))| CurveRow {
            a,
            mean,
            lower: mean - 2.0 * sd,
            upper: mean + 2.0 * sd,
            count: counts[i],
        })
        .collect())
}

/// CSV `a,mean,lower,upper,count` with `lower/upper = mean ∓ 2σ`.
pub fn emit_gp_curve<W: Write>(model: &mut ConceptModel, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["a", "mean", "lower", "upper", "count"])?;
    for r in gp_curve_rows(model)? {
        wtr.write_record([
            r.a.to_string(),
            r.mean.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.count.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| VttError::io("<curve output>", e))?;
    Ok(())
}

pub fn parse_gp_curve<R: Read>(input: R) -> Result<Vec<CurveRow>> {
    let mut rdr = reader(input);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let num = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| VttError::format(line, format!("bad cell {i}")))
        };
        rows.push(CurveRow {
            a: num(0)?,
            mean: num(1)?,
            lower: num(2)?,
            upper: num(3)?,
            count: num(4)? as u64,
        });
    }
    Ok(rows)
}

/// Mean curve, ±2σ band, and the observed counts as points.
pub fn gp_curve_svg(model: &mut ConceptModel, title: &str) -> Result<String> {
    let rows = gp_curve_rows(model)?;
    let x: Vec<f64> = rows.iter().map(|r| r.a).collect();
    let mut plot = Plot::new(title, "a = (f(q) + gt) / 2", "answer count");
    plot.bands.push(Band {
        x: x.clone(),
        lower: rows.iter().map(|r| r.lower).collect(),
        upper: rows.iter().map(|r| r.upper).collect(),
        fill: BAND_FILLS[0],
    });
    plot.lines.push(Line {
        x,
        y: rows.iter().map(|r| r.mean).collect(),
        stroke: PALETTE[0],
        dashed: true,
        label: None,
    });
    let occupied: Vec<&CurveRow> = rows.iter().filter(|r| r.count > 0).collect();
    plot.points.push(Points {
        x: occupied.iter().map(|r| r.a).collect(),
        y: occupied.iter().map(|r| r.count as f64).collect(),
        fill: "black",
    });
    plot.x_guides = vec![0.25, 0.5, 0.75];
    Ok(plot.render())
}

/// Per-concept state after a session.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSummary {
    pub concept_id: String,
    pub questions: usize,
    pub positive_questions: usize,
    pub negative_questions: usize,
    pub u_minus: f64,
    pub u_plus: f64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tp: u64,
}

pub const COMPARISON_HEADER: [&str; 11] = [
    "concept_id",
    "questions",
    "positive_questions",
    "negative_questions",
    "u_minus",
    "u_plus",
    "u_total",
    "tn",
    "fp",
    "fn",
    "tp",
];

pub fn concept_summaries(log: &SessionLog, dataset: &Dataset) -> Vec<ConceptSummary> {
    let final_state = log.snapshot_after(log.len());
    log.models
        .iter()
        .map(|model| summary(model, &log.records, dataset.concept_id(model.concept()), final_state.per_concept[model.concept()]))
        .collect()
}

/// Same table from bare models, e.g. rebuilt from a session file.
pub fn summarize_models(
    models: &mut [ConceptModel],
    records: &[AnswerRecord],
    concept_ids: &[String],
) -> Result<Vec<ConceptSummary>> {
    models
        .iter_mut()
        .map(|model| {
            let split = model.split()?;
            Ok(summary(model, records, &concept_ids[model.concept()], split))
        })
        .collect()
}

fn summary(model: &ConceptModel, records: &[AnswerRecord], concept_id: &str, split: UncertaintySplit) -> ConceptSummary {
    let c = model.concept();
    let asked = records.iter().filter(|r| r.question.concept == c);
    let positives = asked.clone().filter(|r| r.question.gt).count();
    let questions = asked.count();
    let confusion = model.confusion();
    ConceptSummary {
        concept_id: concept_id.to_owned(),
        questions,
        positive_questions: positives,
        negative_questions: questions - positives,
        u_minus: split.lower,
        u_plus: split.upper,
        tn: confusion.tn,
        fp: confusion.fp,
        fn_: confusion.fn_,
        tp: confusion.tp,
    }
}

fn summary_cells(s: &ConceptSummary) -> [String; 11] {
    [
        s.concept_id.clone(),
        s.questions.to_string(),
        s.positive_questions.to_string(),
        s.negative_questions.to_string(),
        s.u_minus.to_string(),
        s.u_plus.to_string(),
        (s.u_minus + s.u_plus).to_string(),
        s.tn.to_string(),
        s.fp.to_string(),
        s.fn_.to_string(),
        s.tp.to_string(),
    ]
}

/// CSV with one row per concept: questions asked, `u⁻`, `u⁺` and confusion counts.
pub fn emit_concept_comparison<W: Write>(summaries: &[ConceptSummary], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(COMPARISON_HEADER)?;
    for s in summaries {
        wtr.write_record(summary_cells(s))?;
    }
    wtr.flush().map_err(|e| VttError::io("<comparison output>", e))?;
    Ok(())
}

/// Comparison rows for many sessions, prefixed with `strategy,repeat`.
pub fn emit_experiment_comparison<W: Write>(
    sessions: &[(StrategyKind, usize, Vec<ConceptSummary>)],
    out: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["strategy", "repeat"];
    header.extend(COMPARISON_HEADER);
    wtr.write_record(&header)?;
    for (strategy, repeat, summaries) in sessions {
        for s in summaries {
            let mut row = vec![strategy.name().to_owned(), repeat.to_string()];
            row.extend(summary_cells(s));
            wtr.write_record(&row)?;
        }
    }
    wtr.flush().map_err(|e| VttError::io("<comparison output>", e))?;
    Ok(())
}

/// Multiples of ten up to `len`, plus `len` itself.
pub fn default_checkpoints(len: usize) -> Vec<usize> {
    let mut points: Vec<usize> = (1..=len / 10).map(|k| k * 10).collect();
    if len > 0 && points.last() != Some(&len) {
        points.push(len);
    }
    points
}

/// Uncertainty trajectory of one session: `after[k-1]` is `u_total` after
/// `k` questions.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySeries {
    pub initial: f64,
    pub after: Vec<f64>,
}

impl UncertaintySeries {
    pub fn from_log(log: &SessionLog) -> Self {
        Self {
            initial: log.initial.total,
            after: log.trace.iter().map(|s| s.total).collect(),
        }
    }

    /// Value after `k` questions, holding the last value past the end.
    pub fn at(&self, k: usize) -> f64 {
        if k == 0 {
            self.initial
        } else {
            self.after.get(k - 1).or(self.after.last()).copied().unwrap_or(self.initial)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub strategy: String,
    pub question: usize,
    pub mean_u_total: f64,
    pub std_u_total: f64,
    pub mean_u_per_concept: f64,
    pub std_u_per_concept: f64,
    pub repeats: usize,
}

pub const AGGREGATE_HEADER: [&str; 7] = [
    "strategy",
    "question",
    "mean_u_total",
    "std_u_total",
    "mean_u_per_concept",
    "std_u_per_concept",
    "repeats",
];

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Mean ± std of `u_total` (and of `u_total / n_concepts`) across the
/// repeats of one strategy at each checkpoint.
pub fn aggregate_strategy(
    strategy: &str,
    series: &[UncertaintySeries],
    n_concepts: usize,
    checkpoints: &[usize],
) -> Vec<AggregateRow> {
    checkpoints
        .iter()
        .map(|&k| {
            let totals: Vec<f64> = series.iter().map(|s| s.at(k)).collect();
            let per_concept: Vec<f64> = totals.iter().map(|t| t / n_concepts as f64).collect();
            let (mean_u_total, std_u_total) = mean_std(&totals);
            let (mean_u_per_concept, std_u_per_concept) = mean_std(&per_concept);
            AggregateRow {
                strategy: strategy.to_owned(),
                question: k,
                mean_u_total,
                std_u_total,
                mean_u_per_concept,
                std_u_per_concept,
                repeats: series.len(),
            }
        })
        .collect()
}

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.strategy.clone(),
            r.question.to_string(),
            r.mean_u_total.to_string(),
            r.std_u_total.to_string(),
            r.mean_u_per_concept.to_string(),
            r.std_u_per_concept.to_string(),
            r.repeats.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| VttError::io("<aggregate output>", e))?;
    Ok(())
}

pub fn parse_aggregate<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut rdr = reader(input);
    if !rdr.headers()?.iter().eq(AGGREGATE_HEADER) {
        return Err(VttError::format(1, "unexpected aggregate header"));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let bad = |i: usize| VttError::format(line, format!("bad cell {i}"));
        let num = |i: usize| -> Result<f64> { record.get(i).and_then(|c| c.parse().ok()).ok_or_else(|| bad(i)) };
        let int = |i: usize| -> Result<usize> { record.get(i).and_then(|c| c.parse().ok()).ok_or_else(|| bad(i)) };
        rows.push(AggregateRow {
            strategy: record.get(0).ok_or_else(|| bad(0))?.to_owned(),
            question: int(1)?,
            mean_u_total: num(2)?,
            std_u_total: num(3)?,
            mean_u_per_concept: num(4)?,
            std_u_per_concept: num(5)?,
            repeats: int(6)?,
        });
    }
    Ok(rows)
}

/// Mean uncertainty per strategy against questions asked, with ±1 std bands.
pub fn aggregate_svg(rows: &[AggregateRow], title: &str) -> String {
    let mut plot = Plot::new(title, "questions asked", "mean total uncertainty");
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.strategy.as_str()) {
            names.push(&r.strategy);
        }
    }
    for (i, name) in names.iter().enumerate() {
        let series: Vec<&AggregateRow> = rows.iter().filter(|r| r.strategy == *name).collect();
        let x: Vec<f64> = series.iter().map(|r| r.question as f64).collect();
        plot.bands.push(Band {
            x: x.clone(),
            lower: series.iter().map(|r| r.mean_u_total - r.std_u_total).collect(),
            upper: series.iter().map(|r| r.mean_u_total + r.std_u_total).collect(),
            fill: BAND_FILLS[i % BAND_FILLS.len()],
        });
        plot.lines.push(Line {
            x,
            y: series.iter().map(|r| r.mean_u_total).collect(),
            stroke: PALETTE[i % PALETTE.len()],
            dashed: false,
            label: Some((*name).to_owned()),
        });
    }
    plot.render()
}

/// Bin centre of each occupied bin with its count; handy for quick checks.
pub fn occupied_bins(model: &ConceptModel) -> Vec<(f64, u64)> {
    model
        .bin_counts()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(i, &n)| (bin_center(i), n))
        .collect()
}
