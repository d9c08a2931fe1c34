//! JSON matrix files: `{"n": 2, "real": [[..], [..]], "imag": [[..], [..]]}`.
//!
//! `real` and `imag` are row-major, either nested rows or a flat list of
//! `n*n` numbers. `imag` may be omitted.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::linalg::{Complex64, ComplexMatrix};

#[derive(Debug, Error)]
pub enum MatrixFileError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

fn field_err(field: &'static str, message: impl Into<String>) -> MatrixFileError {
    MatrixFileError::Field {
        field,
        message: message.into(),
    }
}

/// Serialized form written by [`write_matrix`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixFile {
    pub n: usize,
    pub real: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        let has_imag = m.iter().any(|z| z.im != 0.0);
        Self {
            n: m.nrows(),
            real: rows(|z| z.re),
            imag: has_imag.then(|| rows(|z| z.im)),
        }
    }
}

fn entries(obj: &Map<String, Value>, field: &'static str, n: usize) -> Result<Option<Vec<f64>>, MatrixFileError> {
    let Some(v) = obj.get(field) else {
        return Ok(None);
    };
    let Value::Array(items) = v else {
        return Err(field_err(field, "expected an array"));
    };
    let number = |x: &Value| -> Result<f64, MatrixFileError> {
        let f = x
            .as_f64()
            .ok_or_else(|| field_err(field, format!("expected a number, got {x}")))?;
        if f.is_finite() {
            Ok(f)
        } else {
            Err(field_err(field, "entries must be finite"))
        }
    };
    let flat: Vec<f64> = if items.iter().all(Value::is_array) && !items.is_empty() {
        if items.len() != n {
            return Err(field_err(field, format!("expected {n} rows, got {}", items.len())));
        }
        let mut out = Vec::with_capacity(n * n);
        for (i, row) in items.iter().enumerate() {
            let row = row.as_array().expect("checked above");
            if row.len() != n {
                return Err(field_err(
                    field,
                    format!("row {i} has {} entries, expected {n}", row.len()),
                ));
            }
            for x in row {
                out.push(number(x)?);
            }
        }
        out
    } else {
        if items.len() != n * n {
            return Err(field_err(
                field,
                format!("expected {} entries, got {}", n * n, items.len()),
            ));
        }
        items.iter().map(number).collect::<Result<_, _>>()?
    };
    Ok(Some(flat))
}

/// Parses a matrix file.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix, MatrixFileError> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(obj) = value else {
        return Err(field_err("n", "top level must be an object with field `n`"));
    };
    let n = obj
        .get("n")
        .ok_or_else(|| field_err("n", "missing"))?
        .as_u64()
        .filter(|&n| n > 0)
        .ok_or_else(|| field_err("n", "expected a positive integer"))? as usize;
    let real = entries(&obj, "real", n)?.ok_or_else(|| field_err("real", "missing"))?;
    let imag = entries(&obj, "imag", n)?;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let k = i * n + j;
        Complex64::new(real[k], imag.as_ref().map_or(0.0, |v| v[k]))
    }))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix, MatrixFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MatrixFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix(&text)
}

pub fn to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string_pretty(&MatrixFile::from_matrix(m)).expect("matrix serializes")
}

pub fn write_matrix(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<(), MatrixFileError> {
    let path = path.as_ref();
    std::fs::write(path, to_json(m) + "\n").map_err(|source| MatrixFileError::Io {
        path: path.display().to_string(),
        source,
    })
}
