//! `sample_id,<concept_1>,...,<concept_Nc>` with one 0/1 cell per concept.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use vtt_core::Dataset;

use super::{line_of, reader};
use crate::error::{Result, VttError};

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| VttError::io(path, e))?;
    parse_dataset(file)
}

pub fn parse_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("sample_id") {
        return Err(VttError::format(1, "first column must be `sample_id`"));
    }
    let concepts: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if concepts.is_empty() {
        return Err(VttError::format(1, "no concept columns"));
    }

    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != concepts.len() + 1 {
            return Err(VttError::format(
                line,
                format!("expected {} cells, found {}", concepts.len() + 1, record.len()),
            ));
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(VttError::format(line, "empty sample id"));
        }
        if samples.iter().any(|s| s == id) {
            return Err(VttError::format(line, format!("duplicate sample id `{id}`")));
        }
        samples.push(id.to_owned());
        for (cell, concept) in record.iter().skip(1).zip(&concepts) {
            labels.push(match cell {
                "0" => false,
                "1" => true,
                "" => return Err(VttError::format(line, format!("missing label for `{concept}`"))),
                other => {
                    return Err(VttError::format(
                        line,
                        format!("label for `{concept}` must be 0 or 1, got `{other}`"),
                    ))
                }
            });
        }
    }
    Ok(Dataset::new(samples, concepts, labels)?)
}

pub fn write_dataset<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["sample_id"];
    header.extend(dataset.concept_ids().iter().map(String::as_str));
    wtr.write_record(&header)?;
    for s in 0..dataset.n_samples() {
        let mut row = vec![dataset.sample_id(s)];
        row.extend((0..dataset.n_concepts()).map(|c| if dataset.label(s, c) { "1" } else { "0" }));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| VttError::io("<dataset output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_pool() {
        let d = parse_dataset("sample_id,A,B\nx,0,0\ny,0,0\nz,0,0\n".as_bytes()).unwrap();
        assert_eq!((d.n_samples(), d.n_concepts()), (3, 2));
        assert!((0..3).all(|s| (0..2).all(|c| !d.label(s, c))));
    }

    #[test]
    fn non_binary_cell_names_the_row() {
        let err = parse_dataset("sample_id,A\nx,0\ny,2\n".as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 3:"), "{msg}");
        assert!(msg.contains("`2`"));
    }

    #[test]
    fn missing_and_duplicate_rows() {
        let err = parse_dataset("sample_id,A,B\nx,0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 2:"));
        let err = parse_dataset("sample_id,A\nx,0\nx,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        let err = parse_dataset("sample_id,A\nx,\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("missing"));
        assert!(parse_dataset("id,A\nx,1\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_read() {
        let d = vtt_core::generate_dataset(20, &[0.3, 0.5], 1).unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        assert_eq!(parse_dataset(buf.as_slice()).unwrap(), d);
    }
}
