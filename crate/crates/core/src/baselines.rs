//! Comparison clusterers: average-linkage agglomerative clustering and
//! density-peak clustering. Both are deterministic.

use ndarray::Array2;

use crate::clustering::{cluster_means, CentroidSet, ClusterResult};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakConfig {
    pub k: usize,
    /// Quantile of the pairwise distances used as the density cutoff.
    pub dc_percentile: f64,
}

impl PeakConfig {
    pub const DEFAULT_DC_PERCENTILE: f64 = 0.02;

    pub fn new(k: usize) -> Self {
        Self {
            k,
            dc_percentile: Self::DEFAULT_DC_PERCENTILE,
        }
    }
}

/// Dense symmetric Euclidean distance matrix, row-major `n * n`.
pub fn pairwise_distances(x: &Array2<f64>) -> Vec<f64> {
    let n = x.nrows();
    let mut buf = vec![0.0; n * n];
    par::fill_rows(&mut buf, n, |i, row| {
        let xi = x.row(i);
        for (j, out) in row.iter_mut().enumerate() {
            *out = xi
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
    });
    buf
}

fn finish(data: &DataMatrix, labels: Vec<usize>, k: usize, iterations: usize) -> ClusterResult {
    let means = cluster_means(data.values(), &labels, k);
    let objective = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            data.row(i)
                .iter()
                .zip(means.row(l).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    ClusterResult {
        assignments: labels,
        centroids: CentroidSet::new(means),
        objective,
        hard_objective: objective,
        iterations,
        converged: true,
    }
}

/// Relabels so clusters are numbered by their smallest member index.
fn canonical_labels(raw: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    raw.iter()
        .map(|r| {
            let next = map.len();
            *map.entry(*r).or_insert(next)
        })
        .collect()
}

/// Bottom-up average-linkage merging on Euclidean distance until `k` clusters
/// remain. Equal linkage distances merge the pair with the smallest `(i, j)`.
pub fn agglomerative(data: &DataMatrix, k: usize) -> Result<ClusterResult> {
    let n = data.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must be in 1..={n}, got {k}")));
    }
    let mut dist = pairwise_distances(data.values());
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    // owner[i]: the representative cluster that point i currently belongs to
    let mut owner: Vec<usize> = (0..n).collect();
    // cached nearest (distance, index) per active cluster, lexicographic minimum
    let mut nearest: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); n];

    let scan = |dist: &[f64], active: &[bool], i: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if j != i && active[j] {
                let d = dist[i * n + j];
                if d < best.0 || (d == best.0 && j < best.1) {
                    best = (d, j);
                }
            }
        }
        best
    };
    for i in 0..n {
        nearest[i] = scan(&dist, &active, i);
    }

    let mut clusters = n;
    let mut merges = 0;
    while clusters > k {
        // smallest (d, min(i, j), max(i, j)) over active rows
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            let (d, j) = nearest[i];
            let cand = (d, i.min(j), i.max(j));
            let better = match pick {
                None => true,
                Some(p) => cand.0 < p.0 || (cand.0 == p.0 && (cand.1, cand.2) < (p.1, p.2)),
            };
            if better {
                pick = Some(cand);
            }
        }
        let (_, a, b) = pick.expect("at least two active clusters");

        let (sa, sb) = (size[a] as f64, size[b] as f64);
        for c in 0..n {
            if active[c] && c != a && c != b {
                let d = (sa * dist[a * n + c] + sb * dist[b * n + c]) / (sa + sb);
                dist[a * n + c] = d;
                dist[c * n + a] = d;
            }
        }
        active[b] = false;
        size[a] += size[b];
        for o in owner.iter_mut() {
            if *o == b {
                *o = a;
            }
        }
        clusters -= 1;
        merges += 1;

        nearest[a] = scan(&dist, &active, a);
        for c in 0..n {
            if !active[c] || c == a {
                continue;
            }
            let (cd, cj) = nearest[c];
            if cj == a || cj == b {
                nearest[c] = scan(&dist, &active, c);
            } else {
                let d = dist[c * n + a];
                if d < cd || (d == cd && a < cj) {
                    nearest[c] = (d, a);
                }
            }
        }
    }

    Ok(finish(data, canonical_labels(&owner), k, merges))
}

/// Density-peak clustering.
///
/// Density is the Gaussian kernel sum `rho_i = sum_j exp(-(d_ij / d_c)^2)`
/// with `d_c` the `dc_percentile` quantile of the pairwise distances. Points
/// are ranked by density (ties by index); `delta_i` is the distance to the nearest higher-ranked point, or the
/// largest distance from the top-ranked point. The `k` largest `rho * delta`
/// are centers (the top-ranked point is always one), and every other point
/// joins the cluster of its nearest higher-ranked neighbour.
pub fn density_peak(data: &DataMatrix, config: &PeakConfig) -> Result<ClusterResult> {
    let n = data.rows();
    let k = config.k;
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must be in 1..={n}, got {k}")));
    }
    if !(config.dc_percentile > 0.0 && config.dc_percentile < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "dc_percentile must be in (0, 1), got {}",
            config.dc_percentile
        )));
    }
    if n == 1 {
        return Ok(finish(data, vec![0], 1, 0));
    }
    let dist = pairwise_distances(data.values());
    let mut upper: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| dist[i * n + j])
        .collect();
    if upper.iter().all(|&d| d == 0.0) {
        return Err(Error::DegenerateDistances);
    }
    upper.sort_by(f64::total_cmp);
    let pos = (config.dc_percentile * (upper.len() - 1) as f64).round() as usize;
    let dc = upper[pos];

    // all-zero cutoff (many duplicates) falls back to the smallest positive gap
    let dc = if dc > 0.0 {
        dc
    } else {
        upper.iter().copied().find(|&d| d > 0.0).unwrap_or(1.0)
    };
    let rho: Vec<f64> = par::map_range(n, |i| {
        (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let r = dist[i * n + j] / dc;
                (-r * r).exp()
            })
            .sum()
    });
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let top = order[0];
    let mut delta = vec![0.0; n];
    let mut parent = vec![usize::MAX; n];
    delta[top] = (0..n).map(|j| dist[top * n + j]).fold(0.0, f64::max);
    for r in 1..n {
        let i = order[r];
        let mut best = (f64::INFINITY, usize::MAX);
        for &j in &order[..r] {
            let d = dist[i * n + j];
            if d < best.0 || (d == best.0 && j < best.1) {
                best = (d, j);
            }
        }
        delta[i] = best.0;
        parent[i] = best.1;
    }

    let gamma: Vec<f64> = (0..n).map(|i| rho[i] * delta[i]).collect();
    let mut by_gamma: Vec<usize> = (0..n).collect();
    by_gamma.sort_by(|&a, &b| gamma[b].total_cmp(&gamma[a]).then(a.cmp(&b)));
    let mut centers: Vec<usize> = by_gamma[..k].to_vec();
    if !centers.contains(&top) {
        centers[k - 1] = top;
    }

    let mut labels = vec![usize::MAX; n];
    for (c, &p) in centers.iter().enumerate() {
        labels[p] = c;
    }
    for &i in &order {
        if labels[i] == usize::MAX {
            // parent has a higher rank, so it is already labelled
            labels[i] = labels[parent[i]];
        }
    }
    debug_assert!(rank[top] == 0);
    Ok(finish(data, labels, k, 0))
}
