use crate::error::{io_error, CliError, CliResult};
use medgtest::MediationData;
use std::path::Path;

/// Reads the named numeric columns from a headed CSV file.
pub fn read_columns(path: &Path, names: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(io_error(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?
        .clone();
    let index: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| CliError::Csv(format!("{}: no column named {n:?}", path.display())))
        })
        .collect::<CliResult<_>>()?;
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
        for ((col, &i), name) in columns.iter_mut().zip(&index).zip(names) {
            let field = record.get(i).unwrap_or("");
            let value: f64 = field.parse().map_err(|_| {
                CliError::Csv(format!(
                    "{}: row {}, column {name}: {field:?} is not a number",
                    path.display(),
                    row + 2
                ))
            })?;
            col.push(value);
        }
    }
    Ok(columns)
}

pub fn read_mediation(
    path: &Path,
    y: &str,
    m: &str,
    x: &str,
    controls: &[String],
) -> CliResult<MediationData> {
    let mut names = vec![y, m, x];
    names.extend(controls.iter().map(String::as_str));
    let mut cols = read_columns(path, &names)?.into_iter();
    let (y, m, x) = (
        cols.next().unwrap(),
        cols.next().unwrap(),
        cols.next().unwrap(),
    );
    Ok(MediationData {
        y,
        m,
        x,
        controls: cols.collect(),
    })
}
