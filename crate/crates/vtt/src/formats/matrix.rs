//! Pre-scored MuE outputs: `sample_id,<concept>...` with decimals in [0, 1].
//!
//! Columns may appear in any order; rows and cells may be missing, in which
//! case the lookup fails when that question is asked.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use vtt_core::{Dataset, ProbabilityMatrix};

use super::{line_of, reader};
use crate::error::{Result, VttError};

pub fn read_matrix(path: impl AsRef<Path>, dataset: &Dataset) -> Result<ProbabilityMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| VttError::io(path, e))?;
    parse_matrix(file, dataset)
}

pub fn parse_matrix<R: Read>(input: R, dataset: &Dataset) -> Result<ProbabilityMatrix> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("sample_id") {
        return Err(VttError::format(1, "first column must be `sample_id`"));
    }
    let columns: Vec<usize> = header
        .iter()
        .skip(1)
        .map(|name| {
            dataset
                .concept_index(name)
                .ok_or_else(|| VttError::format(1, format!("unknown concept `{name}`")))
        })
        .collect::<Result<_>>()?;

    let mut matrix = ProbabilityMatrix::new(dataset.n_samples(), dataset.n_concepts());
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let sample = dataset
            .sample_index(&record[0])
            .ok_or_else(|| VttError::format(line, format!("unknown sample `{}`", &record[0])))?;
        for (cell, &concept) in record.iter().skip(1).zip(&columns) {
            if cell.is_empty() {
                continue;
            }
            let prob: f64 = cell
                .parse()
                .map_err(|_| VttError::format(line, format!("`{cell}` is not a decimal")))?;
            matrix
                .set(sample, concept, prob)
                .map_err(|e| VttError::format(line, e.to_string()))?;
        }
    }
    Ok(matrix)
}
