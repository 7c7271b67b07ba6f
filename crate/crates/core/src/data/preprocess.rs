use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};

use super::DataMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreprocessSpec {
    /// Leaves the data unchanged.
    Identity,
    /// Column mean 0, sample standard deviation (n - 1) 1. Constant columns become 0.
    Standardize,
    /// Min-max scaling of each column onto `[lower, upper]`.
    Normalize { lower: f64, upper: f64 },
    /// Projection onto the leading `target_dims` principal axes.
    Pca { target_dims: usize },
}

impl PreprocessSpec {
    pub fn normalize_unit() -> Self {
        PreprocessSpec::Normalize {
            lower: 0.0,
            upper: 1.0,
        }
    }

    /// Parses `none`, `standardize`, `normalize`, `normalize:lo:hi` or `pca:dims`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::InvalidParameter(format!("bad preprocessing recipe '{s}'"));
        match parts.as_slice() {
            ["none"] => Ok(PreprocessSpec::Identity),
            ["standardize"] => Ok(PreprocessSpec::Standardize),
            ["normalize"] => Ok(PreprocessSpec::normalize_unit()),
            ["normalize", lo, hi] => Ok(PreprocessSpec::Normalize {
                lower: lo.parse().map_err(|_| bad())?,
                upper: hi.parse().map_err(|_| bad())?,
            }),
            ["pca", dims] => Ok(PreprocessSpec::Pca {
                target_dims: dims.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl std::str::FromStr for PreprocessSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl std::fmt::Display for PreprocessSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PreprocessSpec::Identity => write!(f, "none"),
            PreprocessSpec::Standardize => write!(f, "standardize"),
            PreprocessSpec::Normalize { lower, upper } => write!(f, "normalize:{lower}:{upper}"),
            PreprocessSpec::Pca { target_dims } => write!(f, "pca:{target_dims}"),
        }
    }
}

pub fn preprocess(data: &DataMatrix, spec: &PreprocessSpec) -> Result<DataMatrix> {
    let x = data.values();
    let out = match *spec {
        PreprocessSpec::Identity => x.clone(),
        PreprocessSpec::Standardize => standardize(x),
        PreprocessSpec::Normalize { lower, upper } => {
            if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "normalize range must satisfy lower < upper, got [{lower}, {upper}]"
                )));
            }
            normalize(x, lower, upper)
        }
        PreprocessSpec::Pca { target_dims } => pca_fit(data)?.transform(x, target_dims)?,
    };
    data.with_values(out)
}

fn standardize(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut out = x.clone();
    for mut col in out.columns_mut() {
        let mean = col.sum() / n as f64;
        let var = if n > 1 {
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        if sd > 0.0 {
            col.mapv_inplace(|v| (v - mean) / sd);
        } else {
            col.fill(0.0);
        }
    }
    out
}

fn normalize(x: &Array2<f64>, lower: f64, upper: f64) -> Array2<f64> {
    let mut out = x.clone();
    for mut col in out.columns_mut() {
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        if span > 0.0 {
            col.mapv_inplace(|v| lower + (v - min) / span * (upper - lower));
        } else {
            col.fill(lower);
        }
    }
    out
}

/// Eigendecomposition of the sample covariance, components sorted by
/// decreasing eigenvalue. Each component's largest-magnitude loading is positive.
#[derive(Debug, Clone)]
pub struct PcaFit {
    pub mean: Array1<f64>,
    pub eigenvalues: Array1<f64>,
    /// Column `j` is the `j`-th principal axis.
    pub components: Array2<f64>,
}

pub fn pca_fit(data: &DataMatrix) -> Result<PcaFit> {
    let x = data.values();
    let (n, m) = x.dim();
    if n < 2 {
        return Err(Error::InvalidParameter("pca needs at least 2 rows".into()));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centered = x - &mean;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let cov = DMatrix::from_fn(m, m, |i, j| 0.5 * (cov[[i, j]] + cov[[j, i]]));
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut components = Array2::zeros((m, m));
    let mut eigenvalues = Array1::zeros(m);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = eig.eigenvalues[src];
        let v = eig.eigenvectors.column(src);
        let pivot = (0..m)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..m {
            components[[r, dst]] = sign * v[r];
        }
    }
    Ok(PcaFit {
        mean,
        eigenvalues,
        components,
    })
}

impl PcaFit {
    pub fn transform(&self, x: &Array2<f64>, target_dims: usize) -> Result<Array2<f64>> {
        let m = self.components.nrows();
        if target_dims == 0 || target_dims > m {
            return Err(Error::InvalidParameter(format!(
                "pca target_dims must be in 1..={m}, got {target_dims}"
            )));
        }
        if x.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: x.ncols(),
            });
        }
        let centered = x - &self.mean;
        Ok(centered.dot(&self.components.slice(ndarray::s![.., ..target_dims])))
    }

    pub fn explained_variance_ratio(&self) -> Array1<f64> {
        let total: f64 = self.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        self.eigenvalues.mapv(|v| v.max(0.0) / total)
    }
}
