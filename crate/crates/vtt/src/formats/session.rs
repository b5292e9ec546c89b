//! Session log: one row per asked question,
//! `step,sample_id,concept_id,gt,prob,a,outcome,u_total_after`.
//!
//! Floats are written in their shortest round-trip form, so a log read back
//! reproduces the recorded values bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use vtt_core::{AnswerRecord, Dataset, Outcome, Question, SessionLog};

use super::{line_of, reader};
use crate::error::{Result, VttError};

pub const SESSION_HEADER: [&str; 8] = [
    "step",
    "sample_id",
    "concept_id",
    "gt",
    "prob",
    "a",
    "outcome",
    "u_total_after",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRow {
    pub step: usize,
    pub sample_id: String,
    pub concept_id: String,
    pub gt: bool,
    pub prob: f64,
    pub a: f64,
    pub outcome: Outcome,
    pub u_total_after: f64,
}

pub fn session_rows(log: &SessionLog, dataset: &Dataset) -> Vec<SessionRow> {
    log.records
        .iter()
        .zip(&log.trace)
        .map(|(r, snap)| SessionRow {
            step: r.step,
            sample_id: dataset.sample_id(r.question.sample).to_owned(),
            concept_id: dataset.concept_id(r.question.concept).to_owned(),
            gt: r.question.gt,
            prob: r.prob,
            a: r.a,
            outcome: r.outcome(),
            u_total_after: snap.total,
        })
        .collect()
}

pub fn write_session<W: Write>(log: &SessionLog, dataset: &Dataset, out: W) -> Result<()> {
    write_rows(&session_rows(log, dataset), out)
}

pub fn write_rows<W: Write>(rows: &[SessionRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SESSION_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.step.to_string(),
            r.sample_id.clone(),
            r.concept_id.clone(),
            (r.gt as u8).to_string(),
            r.prob.to_string(),
            r.a.to_string(),
            r.outcome.abbrev().to_owned(),
            r.u_total_after.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| VttError::io("<session output>", e))?;
    Ok(())
}

pub fn read_session(path: impl AsRef<Path>) -> Result<Vec<SessionRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| VttError::io(path, e))?;
    parse_session(file)
}

pub fn parse_session<R: Read>(input: R) -> Result<Vec<SessionRow>> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if !header.iter().eq(SESSION_HEADER) {
        return Err(VttError::format(
            1,
            format!("expected header `{}`", SESSION_HEADER.join(",")),
        ));
    }
    let mut rows: Vec<SessionRow> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != SESSION_HEADER.len() {
            return Err(VttError::format(line, "wrong number of cells"));
        }
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| VttError::format(line, format!("`{}` is not a number", &record[i])))
        };
        let step: usize = record[0]
            .parse()
            .map_err(|_| VttError::format(line, format!("bad step `{}`", &record[0])))?;
        let gt = match &record[3] {
            "0" => false,
            "1" => true,
            other => return Err(VttError::format(line, format!("gt must be 0 or 1, got `{other}`"))),
        };
        let outcome = Outcome::from_abbrev(&record[6])
            .ok_or_else(|| VttError::format(line, format!("unknown outcome `{}`", &record[6])))?;
        let row = SessionRow {
            step,
            sample_id: record[1].to_owned(),
            concept_id: record[2].to_owned(),
            gt,
            prob: num(4)?,
            a: num(5)?,
            outcome,
            u_total_after: num(7)?,
        };
        if rows.last().is_some_and(|prev| prev.step >= row.step) {
            return Err(VttError::format(line, "steps must be strictly increasing"));
        }
        let expected_a = vtt_core::encode_answer(row.prob, row.gt)
            .map_err(|e| VttError::format(line, e.to_string()))?;
        if expected_a != row.a {
            return Err(VttError::format(line, format!("a = {} but (prob + gt) / 2 = {expected_a}", row.a)));
        }
        if Outcome::from_answer(row.prob, row.gt) != row.outcome {
            return Err(VttError::format(line, "outcome does not match prob and gt"));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Answer records recovered from a log, with the concept ids in index order.
#[derive(Debug, Clone)]
pub struct RecoveredHistory {
    pub concepts: Vec<String>,
    pub records: Vec<AnswerRecord>,
}

/// Maps row ids to indices: through `dataset` when given (checking the
/// ground truth), otherwise in order of first appearance.
pub fn recover_history(rows: &[SessionRow], dataset: Option<&Dataset>) -> Result<RecoveredHistory> {
    let mut samples: Vec<String> = Vec::new();
    let mut concepts: Vec<String> = dataset.map(|d| d.concept_ids().to_vec()).unwrap_or_default();
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let line = i as u64 + 2;
        let (sample, concept) = match dataset {
            Some(d) => {
                let s = d
                    .sample_index(&row.sample_id)
                    .ok_or_else(|| VttError::format(line, format!("unknown sample `{}`", row.sample_id)))?;
                let c = d
                    .concept_index(&row.concept_id)
                    .ok_or_else(|| VttError::format(line, format!("unknown concept `{}`", row.concept_id)))?;
                if d.label(s, c) != row.gt {
                    return Err(VttError::format(line, "gt disagrees with the dataset label"));
                }
                (s, c)
            }
            None => (intern(&mut samples, &row.sample_id), intern(&mut concepts, &row.concept_id)),
        };
        records.push(AnswerRecord {
            question: Question {
                sample,
                concept,
                gt: row.gt,
            },
            prob: row.prob,
            a: row.a,
            step: row.step,
        });
    }
    Ok(RecoveredHistory { concepts, records })
}

fn intern(ids: &mut Vec<String>, id: &str) -> usize {
    match ids.iter().position(|x| x == id) {
        Some(i) => i,
        None => {
            ids.push(id.to_owned());
            ids.len() - 1
        }
    }
}
