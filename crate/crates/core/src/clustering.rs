//! Centroid clusterers: k-means, Bregman hard clustering, power k-means and
//! Bregman power k-means (majorization-minimization with annealing of `s`).
//!
//! Hard methods alternate nearest-centroid assignment with the mean update,
//! which is the exact minimizer of `sum_i d_phi(x_i, theta)` for any Bregman
//! divergence. Power methods replace the hard minimum with the power mean
//! `M_s` of the `k` divergences and update each centroid as the MM-weighted
//! mean of all points, driving `s` towards `s_min` after every step.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::Rng;

use crate::data::DataMatrix;
use crate::divergence::{DivergenceFamily, DOMAIN_EPS};
use crate::error::{Error, Result};
use crate::power_mean::{ln_power_mean_neg, log_weights_row, PowerMeanConfig};
use crate::{par, seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClusterMethod {
    KMeans,
    BregmanHard,
    KMeansPower,
    BregmanPower,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 4] = [
        ClusterMethod::KMeans,
        ClusterMethod::BregmanHard,
        ClusterMethod::KMeansPower,
        ClusterMethod::BregmanPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::KMeans => "kmeans",
            ClusterMethod::BregmanHard => "bregman_hard",
            ClusterMethod::KMeansPower => "kmeans_power",
            ClusterMethod::BregmanPower => "bregman_power",
        }
    }

    pub fn is_power(self) -> bool {
        matches!(self, ClusterMethod::KMeansPower | ClusterMethod::BregmanPower)
    }

    /// k-means variants always use the squared Euclidean divergence.
    pub fn uses_family(self) -> bool {
        matches!(self, ClusterMethod::BregmanHard | ClusterMethod::BregmanPower)
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClusterMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown method '{s}' (expected kmeans|bregman_hard|kmeans_power|bregman_power)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    pub centroids: Array2<f64>,
    /// Annealing power at which the set was produced (power methods only).
    pub power_s: Option<f64>,
}

impl CentroidSet {
    pub fn new(centroids: Array2<f64>) -> Self {
        Self {
            centroids,
            power_s: None,
        }
    }

    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub method: ClusterMethod,
    pub family: DivergenceFamily,
    pub k: usize,
    pub power: PowerMeanConfig,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl ClusterConfig {
    pub const DEFAULT_MAX_ITERS: usize = 100;
    pub const DEFAULT_TOL: f64 = 1e-6;

    pub fn new(method: ClusterMethod, family: DivergenceFamily, k: usize, seed: u64) -> Self {
        Self {
            method,
            family,
            k,
            power: PowerMeanConfig::default(),
            max_iters: Self::DEFAULT_MAX_ITERS,
            tol: Self::DEFAULT_TOL,
            seed,
            restarts: 1,
        }
    }

    pub fn effective_family(&self) -> DivergenceFamily {
        if self.method.uses_family() {
            self.family
        } else {
            DivergenceFamily::SQUARED_EUCLIDEAN
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be >= 0, got {}", self.tol)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if self.method.is_power() {
            self.power.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub centroids: CentroidSet,
    /// The method's own objective: the hard minimum-divergence sum, or for
    /// power methods the power-mean sum at `centroids.power_s`.
    pub objective: f64,
    /// `sum_i min_j d(x_i, theta_j)` at the final centroids (the `s -> -inf`
    /// limit for power methods).
    pub hard_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn row_slice(data: &Array2<f64>) -> std::borrow::Cow<'_, [f64]> {
    match data.as_slice() {
        Some(s) => std::borrow::Cow::Borrowed(s),
        None => std::borrow::Cow::Owned(data.iter().copied().collect()),
    }
}

/// `n x k` matrix of `d_phi(x_i, theta_j)`.
pub fn divergence_matrix(data: &Array2<f64>, centroids: &Array2<f64>, family: DivergenceFamily) -> Array2<f64> {
    let (n, m) = data.dim();
    let k = centroids.nrows();
    let x = row_slice(data);
    let c = row_slice(centroids);
    let mut buf = vec![0.0; n * k];
    par::fill_rows(&mut buf, k, |i, row| {
        let xi = &x[i * m..(i + 1) * m];
        for (j, out) in row.iter_mut().enumerate() {
            *out = family.divergence(xi, &c[j * m..(j + 1) * m]);
        }
    });
    Array2::from_shape_vec((n, k), buf).expect("shape matches buffer")
}

fn argmin_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v < row[best] {
            best = j;
        }
    }
    best
}

fn hard_objective_of(distances: &Array2<f64>) -> f64 {
    distances
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .sum()
}

fn power_objective_of(distances: &Array2<f64>, s: f64) -> f64 {
    let k = distances.ncols();
    let d = row_slice(distances);
    d.chunks(k).map(|row| ln_power_mean_neg(row, s).exp()).sum()
}

fn check_data_domain(data: &Array2<f64>, family: DivergenceFamily) -> Result<()> {
    for row in data.rows() {
        family.check_domain(&row.to_vec())?;
    }
    Ok(())
}

fn check_shapes(data: &DataMatrix, centroids: &CentroidSet) -> Result<()> {
    if centroids.k() == 0 {
        return Err(Error::InvalidParameter("centroid set is empty".into()));
    }
    if centroids.centroids.ncols() != data.cols() {
        return Err(Error::DimensionMismatch {
            expected: data.cols(),
            found: centroids.centroids.ncols(),
        });
    }
    Ok(())
}

/// Evaluates the objective of `method` at the given centroids from scratch.
pub fn objective(
    data: &DataMatrix,
    centroids: &CentroidSet,
    family: DivergenceFamily,
    method: ClusterMethod,
) -> Result<f64> {
    check_shapes(data, centroids)?;
    let d = divergence_matrix(data.values(), &centroids.centroids, family);
    if method.is_power() {
        let s = centroids
            .power_s
            .ok_or_else(|| Error::InvalidParameter("power objective needs power_s".into()))?;
        Ok(power_objective_of(&d, s))
    } else {
        Ok(hard_objective_of(&d))
    }
}

/// Draws `k` centroids uniformly from the per-dimension bounding box of the
/// data. Positive-support families clamp coordinates into their domain.
pub fn init_centroids(data: &DataMatrix, k: usize, family: DivergenceFamily, seed: u64) -> Result<CentroidSet> {
    let n = data.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must be in 1..={n}, got {k}")));
    }
    let x = data.values();
    let lo: Vec<f64> = x.columns().into_iter().map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = x.columns().into_iter().map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut rng = seed::rng(seed);
    let m = data.cols();
    let mut c = Array2::zeros((k, m));
    for j in 0..k {
        for d in 0..m {
            let mut v = if hi[d] > lo[d] {
                rng.random_range(lo[d]..=hi[d])
            } else {
                lo[d]
            };
            if family.positive_support() {
                v = v.max(2.0 * DOMAIN_EPS);
            }
            c[[j, d]] = v;
        }
    }
    Ok(CentroidSet::new(c))
}

/// Nearest centroid under `d_phi`; ties go to the lowest index.
pub fn assign(data: &DataMatrix, centroids: &CentroidSet, family: DivergenceFamily) -> Result<Vec<usize>> {
    check_shapes(data, centroids)?;
    check_data_domain(data.values(), family)?;
    check_data_domain(&centroids.centroids, family)?;
    let d = divergence_matrix(data.values(), &centroids.centroids, family);
    Ok(d.rows().into_iter().map(|r| argmin_row(r.as_slice().expect("row-major"))).collect())
}

/// Moves each listed centroid onto the point farthest (in `d_phi`) from its
/// nearest remaining centroid, one at a time in index order.
fn reseed(x: &Array2<f64>, centroids: &mut Array2<f64>, empty: &[usize], family: DivergenceFamily) {
    let n = x.nrows();
    let live: Vec<usize> = (0..centroids.nrows()).filter(|j| !empty.contains(j)).collect();
    let mut nearest = vec![f64::INFINITY; n];
    let update = |nearest: &mut [f64], c: &[f64]| {
        for (i, best) in nearest.iter_mut().enumerate() {
            let xi = x.row(i);
            let d = family.divergence(xi.as_slice().expect("row-major"), c);
            if d < *best {
                *best = d;
            }
        }
    };
    for &j in &live {
        let c = centroids.row(j).to_vec();
        update(&mut nearest, &c);
    }
    for &j in empty {
        let mut far = 0;
        for i in 1..n {
            if nearest[i] > nearest[far] {
                far = i;
            }
        }
        let point = x.row(far).to_owned();
        centroids.row_mut(j).assign(&point);
        update(&mut nearest, point.as_slice().expect("owned row"));
    }
}

/// One assignment + mean update. Empty clusters are re-seeded at the point
/// farthest from its nearest centroid.
pub fn lloyd_step(data: &DataMatrix, centroids: &CentroidSet, family: DivergenceFamily) -> Result<CentroidSet> {
    let assignments = assign(data, centroids, family)?;
    let x = data.values();
    let (k, m) = centroids.centroids.dim();
    let mut sums = Array2::<f64>::zeros((k, m));
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        sums.row_mut(a).scaled_add(1.0, &x.row(i));
        counts[a] += 1;
    }
    let mut empty = Vec::new();
    for (j, &c) in counts.iter().enumerate() {
        if c == 0 {
            empty.push(j);
        } else {
            sums.row_mut(j).mapv_inplace(|v| v / c as f64);
        }
    }
    if !empty.is_empty() {
        reseed(x, &mut sums, &empty, family);
    }
    Ok(CentroidSet {
        centroids: sums,
        power_s: centroids.power_s,
    })
}

/// One majorization-minimization step at power `s < 0`:
/// `theta_j = sum_i w_ij x_i / sum_i w_ij`.
///
/// Weights are formed in log space and each column is shifted by its maximum
/// before exponentiation, which leaves the ratio unchanged.
pub fn bpk_step(data: &DataMatrix, centroids: &CentroidSet, family: DivergenceFamily, s: f64) -> Result<CentroidSet> {
    if !(s < 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("power step needs finite s < 0, got {s}")));
    }
    check_shapes(data, centroids)?;
    check_data_domain(data.values(), family)?;
    check_data_domain(&centroids.centroids, family)?;
    let x = data.values();
    let (k, m) = centroids.centroids.dim();
    let n = x.nrows();
    let d = divergence_matrix(x, &centroids.centroids, family);
    let dflat = row_slice(&d);
    let mut logw = vec![0.0; n * k];
    par::fill_rows(&mut logw, k, |i, row| log_weights_row(&dflat[i * k..(i + 1) * k], s, row));

    let mut col_max = vec![f64::NEG_INFINITY; k];
    for row in logw.chunks(k) {
        for (mx, &v) in col_max.iter_mut().zip(row) {
            if v > *mx {
                *mx = v;
            }
        }
    }
    let mut sums = Array2::<f64>::zeros((k, m));
    let mut totals = vec![0.0; k];
    for (i, row) in logw.chunks(k).enumerate() {
        let xi = x.row(i);
        for j in 0..k {
            if !col_max[j].is_finite() {
                continue;
            }
            let w = (row[j] - col_max[j]).exp();
            totals[j] += w;
            sums.row_mut(j).scaled_add(w, &xi);
        }
    }
    let mut empty = Vec::new();
    for j in 0..k {
        if totals[j] > 0.0 && totals[j].is_finite() {
            let t = totals[j];
            sums.row_mut(j).mapv_inplace(|v| v / t);
        } else {
            empty.push(j);
        }
    }
    if !empty.is_empty() {
        reseed(x, &mut sums, &empty, family);
    }
    Ok(CentroidSet {
        centroids: sums,
        power_s: Some(s),
    })
}

/// Runs `config.method` from the given initial centroids.
pub fn fit_from(data: &DataMatrix, config: &ClusterConfig, init: CentroidSet) -> Result<ClusterResult> {
    config.validate()?;
    check_shapes(data, &init)?;
    let family = config.effective_family();
    check_data_domain(data.values(), family)?;
    let power = config.method.is_power();
    let x = data.values();

    let mut s = config.power.s0;
    let mut current = init.centroids;
    let eval = |c: &Array2<f64>, s: f64| {
        let d = divergence_matrix(x, c, family);
        if power {
            power_objective_of(&d, s)
        } else {
            hard_objective_of(&d)
        }
    };
    let mut prev = eval(&current, s);
    let mut last_s = s;
    let mut iterations = config.max_iters;
    let mut converged = false;

    // A step that leaves the centroids (or the objective, to within `tol`)
    // unchanged confirms the fixed point and is not counted.
    for it in 1..=config.max_iters {
        let set = CentroidSet::new(current.clone());
        let next = if power {
            bpk_step(data, &set, family, s)?
        } else {
            lloyd_step(data, &set, family)?
        };
        last_s = s;
        let moved = next.centroids != current;
        current = next.centroids;
        let obj = eval(&current, s);
        if !obj.is_finite() {
            return Err(Error::NonFiniteObjective {
                method: config.method.name(),
                iteration: it,
            });
        }
        let rel = (prev - obj).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = obj;
        if !moved || rel < config.tol {
            converged = true;
            iterations = it - 1;
            break;
        }
        if power {
            s = config.power.next(s);
        }
    }

    let d = divergence_matrix(x, &current, family);
    let assignments = d.rows().into_iter().map(|r| argmin_row(r.as_slice().expect("row-major"))).collect();
    let hard_objective = hard_objective_of(&d);
    let objective = if power {
        power_objective_of(&d, last_s)
    } else {
        hard_objective
    };
    if !objective.is_finite() {
        return Err(Error::NonFiniteObjective {
            method: config.method.name(),
            iteration: iterations,
        });
    }
    Ok(ClusterResult {
        assignments,
        centroids: CentroidSet {
            centroids: current,
            power_s: power.then_some(last_s),
        },
        objective,
        hard_objective,
        iterations,
        converged,
    })
}

/// Fits with `config.restarts` independent random initializations and keeps
/// the run with the lowest hard objective (earliest restart on ties).
pub fn fit(data: &DataMatrix, config: &ClusterConfig) -> Result<ClusterResult> {
    config.validate()?;
    if config.k > data.rows() {
        return Err(Error::InvalidParameter(format!(
            "k = {} exceeds the number of points {}",
            config.k,
            data.rows()
        )));
    }
    let family = config.effective_family();
    check_data_domain(data.values(), family)?;
    let runs = par::map_range(config.restarts, |r| {
        let init = init_centroids(data, config.k, family, seed::derive(config.seed, &[r as u64]))?;
        fit_from(data, config, init)
    });
    let mut best: Option<ClusterResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.hard_objective < b.hard_objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Per-cluster means for an arbitrary labelling (`k` clusters). Empty
/// clusters get the global mean.
pub fn cluster_means(data: &Array2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let m = data.ncols();
    let mut sums = Array2::<f64>::zeros((k, m));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        sums.row_mut(l).scaled_add(1.0, &data.row(i));
        counts[l] += 1;
    }
    let global = data.mean_axis(Axis(0));
    for j in 0..k {
        if counts[j] > 0 {
            let c = counts[j] as f64;
            sums.row_mut(j).mapv_inplace(|v| v / c);
        } else if let Some(g) = &global {
            sums.row_mut(j).assign(g);
        }
    }
    sums
}
