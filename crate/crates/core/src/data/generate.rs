use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Poisson};

use super::DataMatrix;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorFamily {
    Gaussian,
    Binomial,
    Poisson,
    Gamma,
}

impl GeneratorFamily {
    pub const ALL: [GeneratorFamily; 4] = [
        GeneratorFamily::Gaussian,
        GeneratorFamily::Binomial,
        GeneratorFamily::Poisson,
        GeneratorFamily::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorFamily::Gaussian => "gaussian",
            GeneratorFamily::Binomial => "binomial",
            GeneratorFamily::Poisson => "poisson",
            GeneratorFamily::Gamma => "gamma",
        }
    }

    pub fn positive_support(self) -> bool {
        !matches!(self, GeneratorFamily::Gaussian)
    }
}

impl fmt::Display for GeneratorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(GeneratorFamily::Gaussian),
            "binomial" => Ok(GeneratorFamily::Binomial),
            "poisson" => Ok(GeneratorFamily::Poisson),
            "gamma" => Ok(GeneratorFamily::Gamma),
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution family '{other}'"
            ))),
        }
    }
}

/// Simulation design: one cluster per center, each cluster's population mean
/// equal to its center.
///
/// * gaussian: `N(c, noise_scale^2)` per coordinate
/// * poisson: `Poisson(c)`
/// * binomial: `Binomial(binomial_trials, c / binomial_trials)`
/// * gamma: `Gamma(shape = gamma_shape, scale = c / gamma_shape)`
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: GeneratorFamily,
    pub centers: Vec<Vec<f64>>,
    pub samples_per_center: usize,
    pub noise_scale: f64,
    pub binomial_trials: u64,
    pub gamma_shape: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub const DEFAULT_NOISE_SCALE: f64 = 0.5;
    pub const DEFAULT_BINOMIAL_TRIALS: u64 = 100;
    pub const DEFAULT_GAMMA_SHAPE: f64 = 15.0;

    pub fn new(family: GeneratorFamily, centers: Vec<Vec<f64>>, samples_per_center: usize, seed: u64) -> Self {
        Self {
            family,
            centers,
            samples_per_center,
            noise_scale: Self::DEFAULT_NOISE_SCALE,
            binomial_trials: Self::DEFAULT_BINOMIAL_TRIALS,
            gamma_shape: Self::DEFAULT_GAMMA_SHAPE,
            seed,
        }
    }

    /// The three planar centers of the simulation study.
    pub fn simulation_centers() -> Vec<Vec<f64>> {
        vec![vec![10.0, 10.0], vec![20.0, 20.0], vec![40.0, 40.0]]
    }

    pub fn validate(&self) -> Result<()> {
        let m = self
            .centers
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidParameter("no centers".into()))?;
        if m == 0 {
            return Err(Error::InvalidParameter("centers must have at least one coordinate".into()));
        }
        if self.samples_per_center == 0 {
            return Err(Error::InvalidParameter("samples_per_center must be >= 1".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_scale must be a finite non-negative number, got {}",
                self.noise_scale
            )));
        }
        for c in &self.centers {
            if c.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: c.len(),
                });
            }
            for &v in c {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("non-finite center coordinate {v}")));
                }
                if self.family.positive_support() && v <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "{} centers must be strictly positive, got {v}",
                        self.family
                    )));
                }
                if self.family == GeneratorFamily::Binomial && v >= self.binomial_trials as f64 {
                    return Err(Error::InvalidParameter(format!(
                        "binomial center {v} must be below the trial count {}",
                        self.binomial_trials
                    )));
                }
            }
        }
        if self.family == GeneratorFamily::Gamma && !(self.gamma_shape > 0.0) {
            return Err(Error::InvalidParameter("gamma_shape must be positive".into()));
        }
        Ok(())
    }
}

fn dist_err(e: impl fmt::Display) -> Error {
    Error::InvalidParameter(e.to_string())
}

fn sample_coordinate<R: Rng>(spec: &GeneratorSpec, c: f64, rng: &mut R) -> Result<f64> {
    Ok(match spec.family {
        GeneratorFamily::Gaussian => {
            if spec.noise_scale == 0.0 {
                c
            } else {
                Normal::new(c, spec.noise_scale).map_err(dist_err)?.sample(rng)
            }
        }
        GeneratorFamily::Poisson => Poisson::new(c).map_err(dist_err)?.sample(rng),
        GeneratorFamily::Binomial => {
            let p = c / spec.binomial_trials as f64;
            Binomial::new(spec.binomial_trials, p).map_err(dist_err)?.sample(rng) as f64
        }
        GeneratorFamily::Gamma => Gamma::new(spec.gamma_shape, c / spec.gamma_shape)
            .map_err(dist_err)?
            .sample(rng),
    })
}

/// Draws `|centers| * samples_per_center` points, labelled by center index.
pub fn generate(spec: &GeneratorSpec) -> Result<DataMatrix> {
    spec.validate()?;
    let m = spec.centers[0].len();
    let n = spec.centers.len() * spec.samples_per_center;
    let mut rng = seed::rng(spec.seed);
    let mut values = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    for (label, center) in spec.centers.iter().enumerate() {
        for _ in 0..spec.samples_per_center {
            for &c in center {
                values.push(sample_coordinate(spec, c, &mut rng)?);
            }
            labels.push(label);
        }
    }
    let values = Array2::from_shape_vec((n, m), values).map_err(dist_err)?;
    DataMatrix::new(values, Some(labels), spec.family.name())
}
