//! Dataset interchange CSV: header `f0,...,f{M-1},label`, one row per
//! sample, every cell exactly `0` or `1`. The format is deliberately rigid
//! so that a round-trip is byte-identical and any deviation is reported
//! with its row and column.

use std::fs;
use std::path::Path;

use malgan_core::dataset::LabeledDataset;
use malgan_core::matrix::Matrix;

use crate::error::{LabError, Result};

fn expected_header(num_features: usize) -> String {
    let mut header = String::new();
    for i in 0..num_features {
        header.push('f');
        header.push_str(&i.to_string());
        header.push(',');
    }
    header.push_str("label");
    header
}

/// Renders a dataset in the interchange format. Deterministic: the same
/// dataset always yields the same bytes.
pub fn render_dataset(data: &LabeledDataset) -> String {
    let mut out = expected_header(data.num_features());
    out.push('\n');
    for (i, &label) in data.labels().iter().enumerate() {
        for &v in data.features().row(i) {
            out.push(if v > 0.5 { '1' } else { '0' });
            out.push(',');
        }
        out.push(if label == 1 { '1' } else { '0' });
        out.push('\n');
    }
    out
}

/// Writes a dataset to `path`. Binarity is already guaranteed by
/// `LabeledDataset`'s constructor.
pub fn save_dataset(path: &Path, data: &LabeledDataset) -> Result<()> {
    fs::write(path, render_dataset(data)).map_err(|e| LabError::io(path, e))
}

fn cell_error(location: &str, line: usize, col_name: &str, message: &str) -> LabError {
    LabError::format(
        format!("{location}:{line} column {col_name}"),
        message,
    )
}

/// Parses the interchange format. `location` labels errors, usually the
/// file path; `line` in messages is 1-based counting the header.
pub fn parse_dataset(text: &str, location: &str) -> Result<LabeledDataset> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| LabError::format(location, "empty file, expected a header line"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 2 || fields[fields.len() - 1] != "label" {
        return Err(LabError::format(
            format!("{location}:1"),
            "header must be f0,...,f{M-1},label",
        ));
    }
    let num_features = fields.len() - 1;
    if header != expected_header(num_features) {
        return Err(LabError::format(
            format!("{location}:1"),
            format!(
                "header does not match the expected {}",
                expected_header(num_features)
            ),
        ));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (index, line) in lines.enumerate() {
        let line_no = index + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != num_features + 1 {
            return Err(LabError::format(
                format!("{location}:{line_no}"),
                format!(
                    "ragged row: {} cells where the header has {}",
                    cells.len(),
                    num_features + 1
                ),
            ));
        }
        for (col, cell) in cells.iter().enumerate() {
            let col_name = if col < num_features {
                format!("f{col}")
            } else {
                "label".to_string()
            };
            let bit = match *cell {
                "0" => 0.0,
                "1" => 1.0,
                other => {
                    return Err(cell_error(
                        location,
                        line_no,
                        &col_name,
                        &format!("cell value {other:?} is not 0 or 1"),
                    ))
                }
            };
            if col < num_features {
                values.push(bit);
            } else {
                labels.push(bit as u8);
            }
        }
    }
    if labels.is_empty() {
        return Err(LabError::format(
            location,
            "no data rows after the header",
        ));
    }
    let features = Matrix::from_vec(labels.len(), num_features, values)?;
    Ok(LabeledDataset::new(features, labels)?)
}

/// Reads a dataset file.
pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}
