//! Dataset representation, CSV ingestion, synthetic generators and
//! preprocessing transforms.

mod csv_io;
mod generate;
mod preprocess;

pub use csv_io::{load_csv, write_csv, write_csv_to};
pub use generate::{generate, GeneratorFamily, GeneratorSpec};
pub use preprocess::{pca_fit, preprocess, PcaFit, PreprocessSpec};

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// An `n x m` matrix of finite observations with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    labels: Option<Vec<usize>>,
    name: String,
}

impl DataMatrix {
    pub fn new(
        values: Array2<f64>,
        labels: Option<Vec<usize>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        let (n, m) = values.dim();
        if n == 0 || m == 0 {
            return Err(Error::EmptyData(format!("matrix is {n}x{m}")));
        }
        if let Some((idx, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value {v} at row {}, column {}",
                idx / m,
                idx % m
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: l.len(),
                });
            }
        }
        Ok(Self {
            values,
            labels,
            name: name.into(),
        })
    }

    /// Builds a matrix from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>, name: &str) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let values = Array2::from_shape_vec((n, m), flat)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::new(values, labels, name)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_labels(self, labels: Option<Vec<usize>>) -> Result<Self> {
        Self::new(self.values, labels, self.name)
    }

    /// Replaces the values, keeping labels and name. Shape may change in `m`.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        Self::new(values, self.labels.clone(), self.name.clone())
    }

    /// Number of distinct ground-truth labels, if labelled.
    pub fn label_count(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let mut seen: Vec<usize> = l.clone();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        })
    }

    /// Selects rows in the given order; labels follow.
    pub fn select_rows(&self, order: &[usize]) -> Result<Self> {
        let m = self.cols();
        let mut out = Array2::zeros((order.len(), m));
        for (dst, &src) in order.iter().enumerate() {
            out.row_mut(dst).assign(&self.values.row(src));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&i| l[i]).collect());
        Self::new(out, labels, self.name.clone())
    }

    /// Shifts every column whose minimum is `<= 0` by `1 - min`, so all
    /// coordinates are at least 1. Returns the per-column shifts applied.
    pub fn shift_positive(&self) -> (Self, Vec<f64>) {
        let mut values = self.values.clone();
        let shifts: Vec<f64> = values
            .columns_mut()
            .into_iter()
            .map(|mut col| {
                let min = col.iter().copied().fold(f64::INFINITY, f64::min);
                if min <= 0.0 {
                    let s = 1.0 - min;
                    col.mapv_inplace(|v| v + s);
                    s
                } else {
                    0.0
                }
            })
            .collect();
        let out = Self {
            values,
            labels: self.labels.clone(),
            name: self.name.clone(),
        };
        (out, shifts)
    }
}
