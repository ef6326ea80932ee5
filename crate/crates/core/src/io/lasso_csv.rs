use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::samplers::LassoData;

/// Comma-separated numeric rows. A first line on which no field parses as a
/// number is taken as a header. Blank lines are skipped.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if first && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            first = false;
            continue;
        }
        first = false;
        let row = fields
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    line: i + 1,
                    message: format!("`{f}` is not a finite number"),
                }),
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(prev) = rows.first().map(Vec::len) {
            if row.len() != prev {
                return Err(Error::DimensionMismatch(format!(
                    "line {} has {} fields, expected {prev}",
                    i + 1,
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Response (one value per row) and design matrix (one observation per row).
pub fn read_lasso_csv(
    y_path: impl AsRef<Path>,
    x_path: impl AsRef<Path>,
    lambda: f64,
) -> Result<LassoData> {
    let y_rows = parse_matrix(&read(y_path.as_ref())?)?;
    if y_rows.first().is_some_and(|r| r.len() != 1) {
        return Err(Error::DimensionMismatch(format!(
            "response file has {} columns, expected 1",
            y_rows[0].len()
        )));
    }
    let y: Vec<f64> = y_rows.into_iter().map(|r| r[0]).collect();
    let x_rows = parse_matrix(&read(x_path.as_ref())?)?;
    if x_rows.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} rows, design matrix has {}",
            y.len(),
            x_rows.len()
        )));
    }
    let p = x_rows.first().map_or(0, Vec::len);
    let x = DMatrix::from_row_iterator(x_rows.len(), p, x_rows.into_iter().flatten());
    LassoData::new(y, x, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn small_files_standardize() {
        let y = file("y\n1.0\n2.5\n-0.5\n");
        let x = file("a,b\n1,10\n2,-4\n6,3\n");
        let data = read_lasso_csv(y.path(), x.path(), 0.5).unwrap();
        assert_eq!((data.m(), data.p()), (3, 2));
        for col in data.x().column_iter() {
            assert!(col.mean().abs() < 1e-12);
        }
        assert_eq!(data.standardization().column_means, vec![3.0, 3.0]);
    }

    #[test]
    fn mismatched_rows() {
        let y = file("1\n2\n3\n");
        let x = file("1,2\n3,4\n");
        assert!(matches!(
            read_lasso_csv(y.path(), x.path(), 1.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_matrix("1,2\n3,x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_matrix("1,2\n3\n"), Err(Error::DimensionMismatch(_))));
        assert!(matches!(parse_matrix("1,NaN\n"), Err(Error::Parse { line: 1, .. })));
    }
}
