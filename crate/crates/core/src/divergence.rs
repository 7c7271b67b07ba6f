//! Bregman divergences generated by the four exponential-family potentials.
//!
//! | kind               | phi(x)                       | grad phi(y) | d(x, y)                                   |
//! |--------------------|------------------------------|-------------|-------------------------------------------|
//! | squared euclidean  | sum x^2                      | 2y          | sum (x - y)^2                             |
//! | binomial (KL)      | sum x log x                  | 1 + log y   | sum x log(x/y) - (x - y)                  |
//! | poisson            | sum x log x - x              | log y       | sum x log(x/y) - (x - y)                  |
//! | gamma              | sum alpha + alpha log(alpha/x) | -alpha / y | sum alpha [log(y/x) + x/y - 1]           |
//!
//! Vector inputs are coordinate sums.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Coordinates of positive-support families must exceed this.
pub const DOMAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DivergenceKind {
    SquaredEuclidean,
    BinomialKl,
    Poisson,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceFamily {
    kind: DivergenceKind,
    alpha: f64,
}

impl DivergenceFamily {
    pub const SQUARED_EUCLIDEAN: DivergenceFamily = DivergenceFamily {
        kind: DivergenceKind::SquaredEuclidean,
        alpha: 1.0,
    };

    pub fn new(kind: DivergenceKind) -> Self {
        Self { kind, alpha: 1.0 }
    }

    pub fn gamma(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma alpha must be > 0, got {alpha}")));
        }
        Ok(Self {
            kind: DivergenceKind::Gamma,
            alpha,
        })
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Name used in configs and on the command line.
    pub fn name(&self) -> &'static str {
        match self.kind {
            DivergenceKind::SquaredEuclidean => "gaussian",
            DivergenceKind::BinomialKl => "binomial",
            DivergenceKind::Poisson => "poisson",
            DivergenceKind::Gamma => "gamma",
        }
    }

    pub fn positive_support(&self) -> bool {
        self.kind != DivergenceKind::SquaredEuclidean
    }

    /// Checks that every coordinate is finite and, for positive-support
    /// families, greater than [`DOMAIN_EPS`].
    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        for (index, &value) in x.iter().enumerate() {
            if !value.is_finite() || (self.positive_support() && value <= DOMAIN_EPS) {
                return Err(Error::Domain {
                    family: self.name(),
                    index,
                    value,
                    eps: DOMAIN_EPS,
                });
            }
        }
        Ok(())
    }

    pub fn phi(&self, x: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        let a = self.alpha;
        Ok(match self.kind {
            DivergenceKind::SquaredEuclidean => x.iter().map(|v| v * v).sum(),
            DivergenceKind::BinomialKl => x.iter().map(|v| v * v.ln()).sum(),
            DivergenceKind::Poisson => x.iter().map(|v| v * v.ln() - v).sum(),
            DivergenceKind::Gamma => x.iter().map(|v| a + a * (a / v).ln()).sum(),
        })
    }

    pub fn grad_phi(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(y)?;
        let a = self.alpha;
        Ok(match self.kind {
            DivergenceKind::SquaredEuclidean => y.iter().map(|v| 2.0 * v).collect(),
            DivergenceKind::BinomialKl => y.iter().map(|v| 1.0 + v.ln()).collect(),
            DivergenceKind::Poisson => y.iter().map(|v| v.ln()).collect(),
            DivergenceKind::Gamma => y.iter().map(|v| -a / v).collect(),
        })
    }

    /// Closed-form `d_phi(x, y)`, with domain checks on both arguments.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        self.check_domain(x)?;
        self.check_domain(y)?;
        Ok(self.divergence(x, y))
    }

    /// Closed-form `d_phi(x, y)` without validation. Callers must have checked
    /// the domain; results are clamped at zero against rounding.
    #[inline]
    pub fn divergence(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let a = self.alpha;
        let sum: f64 = match self.kind {
            DivergenceKind::SquaredEuclidean => {
                x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum()
            }
            DivergenceKind::BinomialKl | DivergenceKind::Poisson => x
                .iter()
                .zip(y)
                .map(|(&p, &q)| p * (p / q).ln() - (p - q))
                .sum(),
            DivergenceKind::Gamma => x
                .iter()
                .zip(y)
                .map(|(&p, &q)| a * ((q / p).ln() + p / q - 1.0))
                .sum(),
        };
        sum.max(0.0)
    }
}

/// Prints the family name, with `:alpha` appended for a gamma family whose
/// shape is not 1 (the form accepted by `FromStr`).
impl fmt::Display for DivergenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DivergenceKind::Gamma if self.alpha != 1.0 => write!(f, "{}:{}", self.name(), self.alpha),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for DivergenceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(alpha) = s.strip_prefix("gamma:") {
            let alpha: f64 = alpha
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("invalid gamma shape in '{s}'")))?;
            return Self::gamma(alpha);
        }
        let kind = match s {
            "gaussian" | "squared_euclidean" => DivergenceKind::SquaredEuclidean,
            "binomial" | "binomial_kl" => DivergenceKind::BinomialKl,
            "poisson" => DivergenceKind::Poisson,
            "gamma" => DivergenceKind::Gamma,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown divergence family '{other}' (expected gaussian|binomial|poisson|gamma[:alpha])"
                )))
            }
        };
        Ok(Self::new(kind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fam(s: &str) -> DivergenceFamily {
        s.parse().unwrap()
    }

    #[test]
    fn phi_examples() {
        assert_eq!(fam("gaussian").phi(&[3.0, 4.0]).unwrap(), 25.0);
        assert_eq!(fam("poisson").phi(&[1.0]).unwrap(), -1.0);
        assert_eq!(fam("binomial").phi(&[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn bregman_examples() {
        assert_eq!(fam("gaussian").bregman(&[3.0, 0.0], &[0.0, 4.0]).unwrap(), 25.0);
        for f in ["gaussian", "binomial", "poisson", "gamma"] {
            assert_eq!(fam(f).bregman(&[2.0, 7.0], &[2.0, 7.0]).unwrap(), 0.0, "{f}");
        }
        let expected = 2.0 * 2f64.ln() - 1.0;
        assert_relative_eq!(fam("poisson").bregman(&[2.0], &[1.0]).unwrap(), expected, max_relative = 1e-15);
        assert_relative_eq!(expected, 0.386_294_361_1, max_relative = 1e-9);
    }

    #[test]
    fn grad_examples() {
        assert_eq!(fam("gaussian").grad_phi(&[1.0, 2.0]).unwrap(), vec![2.0, 4.0]);
        assert_eq!(fam("poisson").grad_phi(&[1.0]).unwrap(), vec![0.0]);
        assert_eq!(fam("gamma").grad_phi(&[2.0]).unwrap(), vec![-0.5]);
    }

    #[test]
    fn domain_violations() {
        for f in ["binomial", "poisson", "gamma"] {
            assert!(matches!(fam(f).phi(&[1.0, 0.0]), Err(Error::Domain { index: 1, .. })));
            assert!(fam(f).bregman(&[1.0], &[-2.0]).is_err());
            assert!(fam(f).grad_phi(&[0.0]).is_err());
        }
        assert!(fam("gaussian").phi(&[-3.0, 0.0]).is_ok());
        assert!(fam("gaussian").phi(&[f64::NAN]).is_err());
        assert!(DivergenceFamily::gamma(0.0).is_err());
        assert!("itakura".parse::<DivergenceFamily>().is_err());
    }

    #[test]
    fn asymmetry_witness() {
        let x = [1.0, 3.0];
        let y = [4.0, 2.0];
        let g = fam("gaussian");
        assert_eq!(g.bregman(&x, &y).unwrap(), g.bregman(&y, &x).unwrap());
        for f in ["binomial", "poisson", "gamma"] {
            let d1 = fam(f).bregman(&x, &y).unwrap();
            let d2 = fam(f).bregman(&y, &x).unwrap();
            assert!((d1 - d2).abs() > 1e-3, "{f}: {d1} vs {d2}");
        }
    }
}
