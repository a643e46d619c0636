use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::percentize::{Column, ColumnData, Dataset};

/// Cells that mean "missing".
pub fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

/// Locale-independent decimal parse; rejects NaN and infinities.
fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a delimited file with a header row.
///
/// Columns named in `categorical` keep their raw text. Any other column is
/// numeric when every non-missing cell parses as a number and categorical
/// when none does; a mix is a parse error naming the first offending cell.
/// Data rows in errors are 1-based. The dataset is identified by file name.
pub fn load_csv(path: &Path, delimiter: u8, categorical: &HashSet<String>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => Error::Parse {
                row: i + 1,
                column: String::new(),
                message: e.to_string(),
            },
            _ => csv_error(path, e),
        })?;
        for (j, cell) in record.iter().enumerate() {
            cells[j].push((!is_missing(cell)).then(|| cell.trim().to_string()));
        }
    }

    let columns = headers
        .into_iter()
        .zip(cells)
        .map(|(name, raw)| {
            let data = if categorical.contains(&name) {
                ColumnData::Categorical(raw)
            } else {
                infer(&name, raw)?
            };
            Ok(Column { name, data })
        })
        .collect::<Result<Vec<_>>>()?;
    let source = path
        .file_name()
        .map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
    Dataset::new(source, columns)
}

fn infer(name: &str, raw: Vec<Option<String>>) -> Result<ColumnData> {
    let parsed: Vec<Option<Option<f64>>> = raw
        .iter()
        .map(|c| c.as_deref().map(parse_number))
        .collect();
    let numeric = parsed.iter().flatten().filter(|v| v.is_some()).count();
    let text = parsed.iter().flatten().filter(|v| v.is_none()).count();
    if text == 0 {
        return Ok(ColumnData::Numeric(parsed.into_iter().map(Option::flatten).collect()));
    }
    if numeric == 0 {
        return Ok(ColumnData::Categorical(raw));
    }
    let row = parsed
        .iter()
        .position(|v| matches!(v, Some(None)))
        .expect("text cell exists");
    Err(Error::Parse {
        row: row + 1,
        column: name.to_string(),
        message: format!(
            "`{}` is not a number in a numeric column; declare the variable nominal or binary to read it as text",
            raw[row].as_deref().unwrap_or_default()
        ),
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            row: 0,
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}
