use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::DataMatrix;
use crate::error::{Error, Result};

/// Reads a comma-separated file with a header row.
///
/// When `label_column` is given that column is split off as the label vector.
/// Labels that all parse as non-negative integers are used as-is; anything
/// else is mapped to `0..` in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };

    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let label_idx = match label_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::MissingLabelColumn {
                path: path.to_path_buf(),
                column: name.to_owned(),
            }
        })?),
        None => None,
    };

    let width = headers.len();
    let m = width - usize::from(label_idx.is_some());
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut n = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // header is line 1
        let row = r + 2;
        if record.len() != width {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                expected: width,
                found: record.len(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_idx {
                raw_labels.push(cell.to_owned());
                continue;
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    path: path.to_path_buf(),
                    row,
                    column: headers[c].clone(),
                    value: cell.to_owned(),
                })?;
            values.push(v);
        }
        n += 1;
    }
    if n == 0 || m == 0 {
        return Err(Error::EmptyData(format!("{} has no data", path.display())));
    }

    let labels = label_idx.map(|_| encode_labels(&raw_labels));
    let values = Array2::from_shape_vec((n, m), values)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    DataMatrix::new(values, labels, name)
}

fn encode_labels(raw: &[String]) -> Vec<usize> {
    if let Some(ints) = raw
        .iter()
        .map(|s| s.parse::<usize>().ok())
        .collect::<Option<Vec<_>>>()
    {
        return ints;
    }
    let mut codes = HashMap::new();
    raw.iter()
        .map(|s| {
            let next = codes.len();
            *codes.entry(s.as_str()).or_insert(next)
        })
        .collect()
}

/// Writes `data` with a header. Columns are named `x0..x{m-1}` unless
/// `columns` is given; labels, if present, go last under `label_column`.
pub fn write_csv(
    data: &DataMatrix,
    path: impl AsRef<Path>,
    columns: Option<&[String]>,
    label_column: &str,
) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(data, &mut file, columns, label_column).map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(
    data: &DataMatrix,
    out: &mut W,
    columns: Option<&[String]>,
    label_column: &str,
) -> std::io::Result<()> {
    let m = data.cols();
    let mut header: Vec<String> = match columns {
        Some(c) if c.len() == m => c.to_vec(),
        _ => (0..m).map(|j| format!("x{j}")).collect(),
    };
    if data.labels().is_some() {
        header.push(label_column.to_owned());
    }
    let mut buf = String::new();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for i in 0..data.rows() {
        let row = data.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                buf.push(',');
            }
            buf.push_str(&v.to_string());
        }
        if let Some(l) = data.labels() {
            buf.push(',');
            buf.push_str(&l[i].to_string());
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())
}
