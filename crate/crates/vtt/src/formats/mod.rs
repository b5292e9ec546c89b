//! On-disk formats: the labeled pool, pre-scored probabilities and session
//! logs. All are comma-separated with a header row.

pub mod dataset;
pub mod matrix;
pub mod session;

pub(crate) fn reader<R: std::io::Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

pub(crate) fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}
