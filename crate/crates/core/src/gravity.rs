//! KNN-gravity dataset improvement.
//!
//! Every point is pulled towards its `K` nearest neighbours for `d`
//! iterations. At iteration `z` point `i` moves by
//!
//! ```text
//! eta * G_i(z) * sum_j ||o_i1 - x_i|| * (o_ij - x_i) / ||o_ij - x_i||
//! G_i(z) = mean_j ||o_ij - x_i|| * exp(-alpha * z / d)
//! ```
//!
//! with `o_i1` the nearest neighbour. Neighbours and `G` are recomputed from
//! the moved data before every iteration, all points move simultaneously from
//! the iteration snapshot, and `eta * G_i * K < 2` must hold for every point
//! (under that bound the simplified update contracts each point towards its
//! neighbour mean).

use ndarray::Array2;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::par;

/// Decay factor of the gravitational coefficient.
pub const ALPHA: f64 = 1.0;
/// Softening constant of the pairwise force law; it cancels out of the
/// simplified displacement and is kept for the run manifest.
pub const EPSILON: f64 = 0.01;
/// Upper bound on `eta * G * K`.
pub const GUARD_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// Direction-weighted pull: neighbour `j` contributes with ratio
    /// `||o_i1 - x_i|| / ||o_ij - x_i||`.
    Full,
    /// Every neighbour contributes with ratio 1: `x + eta G sum_j (o_ij - x)`.
    Simplified,
}

impl UpdateRule {
    pub fn name(self) -> &'static str {
        match self {
            UpdateRule::Full => "full",
            UpdateRule::Simplified => "simplified",
        }
    }
}

impl std::fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(UpdateRule::Full),
            "simplified" => Ok(UpdateRule::Simplified),
            other => Err(Error::InvalidParameter(format!(
                "unknown update rule '{other}' (expected full|simplified)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityConfig {
    pub eta: f64,
    pub k_neighbors: usize,
    pub iterations: usize,
    pub rule: UpdateRule,
}

impl GravityConfig {
    pub fn new(eta: f64, k_neighbors: usize, iterations: usize) -> Self {
        Self {
            eta,
            k_neighbors,
            iterations,
            rule: UpdateRule::Full,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.k_neighbors == 0 || self.k_neighbors >= n {
            return Err(Error::InvalidParameter(format!(
                "K must be in 1..{n}, got {}",
                self.k_neighbors
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("d (iterations) must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per point, the `K` nearest other points in ascending Euclidean distance
/// (ties by lower index).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub k: usize,
    /// Row-major `n * k`.
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.indices.len() / self.k.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices_of(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances_of(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn knn_values(x: &Array2<f64>, k: usize) -> Result<NeighborSet> {
    let (n, m) = x.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("K must be in 1..{n}, got {k}")));
    }
    let flat = x.as_standard_layout();
    let flat = flat.as_slice().expect("standard layout");
    let rows: Vec<(Vec<usize>, Vec<f64>)> = par::map_range(n, |i| {
        let xi = &flat[i * m..(i + 1) * m];
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(xi, &flat[j * m..(j + 1) * m]), j))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
        }
        cand.sort_by(cmp);
        (
            cand.iter().map(|c| c.1).collect(),
            cand.iter().map(|c| c.0.sqrt()).collect(),
        )
    });
    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for (idx, dist) in rows {
        indices.extend(idx);
        distances.extend(dist);
    }
    Ok(NeighborSet { k, indices, distances })
}

/// Exact brute-force K nearest neighbours. Requires `K < n`.
pub fn knn(data: &DataMatrix, k: usize) -> Result<NeighborSet> {
    knn_values(data.values(), k)
}

/// `G_i(z) = mean_j ||o_ij - x_i|| * exp(-alpha z / d)` for every point.
pub fn gravity_coefficient(neighbors: &NeighborSet, z: usize, d: usize) -> Result<Vec<f64>> {
    if d == 0 || z == 0 || z > d {
        return Err(Error::InvalidParameter(format!("need 1 <= z <= d, got z={z}, d={d}")));
    }
    let decay = (-ALPHA * z as f64 / d as f64).exp();
    let k = neighbors.k as f64;
    Ok((0..neighbors.len())
        .map(|i| neighbors.distances_of(i).iter().sum::<f64>() / k * decay)
        .collect())
}

/// Checks `eta * G_i * K < 2` for every point.
pub fn check_guard(eta: f64, g: &[f64], k: usize, iteration: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for (point, &gi) in g.iter().enumerate() {
        let value = eta * gi * k as f64;
        if !(value < GUARD_LIMIT) {
            return Err(Error::GuardViolation {
                iteration,
                point,
                value,
            });
        }
        worst = worst.max(value);
    }
    Ok(worst)
}

/// One simultaneous displacement of all points from the snapshot `x`.
pub fn displace(x: &Array2<f64>, neighbors: &NeighborSet, g: &[f64], eta: f64, rule: UpdateRule) -> Array2<f64> {
    let (n, m) = x.dim();
    let flat = x.as_standard_layout();
    let flat = flat.as_slice().expect("standard layout");
    let mut out = flat.to_vec();
    par::fill_rows(&mut out, m, |i, row| {
        let xi = &flat[i * m..(i + 1) * m];
        let idx = neighbors.indices_of(i);
        let dist = neighbors.distances_of(i);
        let nearest = dist[0];
        let step = eta * g[i];
        if step == 0.0 {
            return;
        }
        for (&j, &dj) in idx.iter().zip(dist) {
            let coeff = match rule {
                UpdateRule::Simplified => step,
                UpdateRule::Full => {
                    // coincident neighbour: no direction, no pull
                    if dj == 0.0 {
                        continue;
                    }
                    step * nearest / dj
                }
            };
            let oj = &flat[j * m..(j + 1) * m];
            for ((r, &o), &xv) in row.iter_mut().zip(oj).zip(xi) {
                *r += coeff * (o - xv);
            }
        }
    });
    Array2::from_shape_vec((n, m), out).expect("shape matches buffer")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    /// Largest `eta * G_i * K` over points.
    pub max_guard: f64,
    pub mean_displacement: f64,
}

/// Runs the full `d`-iteration improvement, returning the moved data (same
/// shape and labels) and per-iteration statistics.
pub fn improve_traced(data: &DataMatrix, config: &GravityConfig) -> Result<(DataMatrix, Vec<IterationStats>)> {
    config.validate(data.rows())?;
    let mut x = data.values().as_standard_layout().into_owned();
    let mut stats = Vec::with_capacity(config.iterations);
    for z in 1..=config.iterations {
        let neighbors = knn_values(&x, config.k_neighbors)?;
        let g = gravity_coefficient(&neighbors, z, config.iterations)?;
        let max_guard = check_guard(config.eta, &g, config.k_neighbors, z)?;
        let next = displace(&x, &neighbors, &g, config.eta, config.rule);
        let n = x.nrows() as f64;
        let mean_displacement = (&next - &x)
            .rows()
            .into_iter()
            .map(|r| r.dot(&r).sqrt())
            .sum::<f64>()
            / n;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coordinates after iteration {z}")));
        }
        stats.push(IterationStats {
            iteration: z,
            max_guard,
            mean_displacement,
        });
        x = next;
    }
    Ok((data.with_values(x)?, stats))
}

pub fn improve(data: &DataMatrix, config: &GravityConfig) -> Result<DataMatrix> {
    improve_traced(data, config).map(|(d, _)| d)
}
