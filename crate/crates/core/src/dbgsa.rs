//! Exhaustive guarded grid search over the gravity parameters `(eta, K, d)`.
//!
//! Each candidate improves the dataset, fits Bregman power k-means on the
//! improved data to obtain centroids `Theta`, and is scored by
//! `sum_i min_j ||x'_i - theta_j||` (plain Euclidean distance). The lowest
//! score wins; ties within [`TIE_TOLERANCE`] go to smaller `K`, then smaller
//! `d`, then larger `eta`.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::clustering::{self, ClusterConfig, ClusterMethod};
use crate::data::DataMatrix;
use crate::divergence::DivergenceFamily;
use crate::error::{Error, Result};
use crate::gravity::{self, GravityConfig};
use crate::{par, seed};

/// Objectives closer than this are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub eta0: f64,
    pub delta_eta: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub delta_k: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub delta_d: usize,
    /// Sweep `eta` independently of `(K, d)` instead of `eta0 - K d delta_eta`.
    pub decoupled_eta: bool,
    /// Number of `eta` values in decoupled mode: `eta0 * t / eta_steps` for
    /// `t = eta_steps, ..., 1`.
    pub eta_steps: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            eta0: 1.0,
            delta_eta: 0.01,
            k_min: 1,
            k_max: 10,
            delta_k: 1,
            d_min: 1,
            d_max: 10,
            delta_d: 1,
            decoupled_eta: false,
            eta_steps: 10,
        }
    }
}

impl SearchGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !self.eta0.is_finite() || !self.delta_eta.is_finite() || self.delta_eta < 0.0 {
            return bad(format!("invalid eta0={} / delta_eta={}", self.eta0, self.delta_eta));
        }
        if self.k_min == 0 || self.d_min == 0 {
            return bad("K and d ranges must start at 1 or above".into());
        }
        if self.delta_k == 0 || self.delta_d == 0 {
            return bad("delta_K and delta_d must be >= 1".into());
        }
        if self.k_min > self.k_max || self.d_min > self.d_max {
            return Err(Error::InvalidParameter("empty grid".into()));
        }
        if self.decoupled_eta && self.eta_steps == 0 {
            return Err(Error::InvalidParameter("empty grid: eta_steps = 0".into()));
        }
        Ok(())
    }

    fn k_values(&self) -> impl Iterator<Item = usize> + '_ {
        (self.k_min..=self.k_max).step_by(self.delta_k)
    }

    fn d_values(&self) -> impl Iterator<Item = usize> + '_ {
        (self.d_min..=self.d_max).step_by(self.delta_d)
    }
}

/// Where the centroids of the score come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaSource {
    /// Bregman power k-means on each candidate's improved data.
    Improved,
    /// One Bregman power k-means run on the unimproved data, shared by all
    /// candidates.
    Raw,
}

impl ThetaSource {
    pub fn name(self) -> &'static str {
        match self {
            ThetaSource::Improved => "improved",
            ThetaSource::Raw => "raw",
        }
    }
}

impl fmt::Display for ThetaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThetaSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "improved" => Ok(ThetaSource::Improved),
            "raw" => Ok(ThetaSource::Raw),
            other => Err(Error::InvalidParameter(format!("unknown theta source '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub eta: f64,
    pub k: usize,
    pub d: usize,
}

impl GridPoint {
    pub fn gravity(&self) -> GravityConfig {
        GravityConfig::new(self.eta, self.k, self.d)
    }
}

/// Lists all candidates, `K` ascending then `d` ascending (then `eta`
/// descending in decoupled mode). Points with `eta <= 0` are kept; scoring
/// marks them infeasible.
pub fn enumerate_grid(grid: &SearchGrid) -> Result<Vec<GridPoint>> {
    grid.validate()?;
    let mut out = Vec::new();
    for k in grid.k_values() {
        for d in grid.d_values() {
            if grid.decoupled_eta {
                for t in (1..=grid.eta_steps).rev() {
                    let eta = grid.eta0 * t as f64 / grid.eta_steps as f64;
                    out.push(GridPoint { eta, k, d });
                }
            } else {
                let eta = grid.eta0 - (k * d) as f64 * grid.delta_eta;
                out.push(GridPoint { eta, k, d });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCandidate {
    pub eta: f64,
    pub k: usize,
    pub d: usize,
    pub objective: Option<f64>,
    pub feasible: bool,
    pub rejection_reason: Option<String>,
}

impl ParamCandidate {
    fn rejected(p: &GridPoint, reason: String) -> Self {
        Self {
            eta: p.eta,
            k: p.k,
            d: p.d,
            objective: None,
            feasible: false,
            rejection_reason: Some(reason),
        }
    }
}

/// The Bregman power k-means run that supplied the winning `Theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSource {
    pub source: ThetaSource,
    pub family: DivergenceFamily,
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub centroids: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: ParamCandidate,
    pub improved_data: DataMatrix,
    pub all_candidates: Vec<ParamCandidate>,
    pub centroid_source: CentroidSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub grid: SearchGrid,
    /// Number of clusters for `Theta`.
    pub k: usize,
    pub family: DivergenceFamily,
    pub seed: u64,
    pub theta_source: ThetaSource,
    /// Restarts of each Bregman power k-means fit.
    pub restarts: usize,
}

impl SearchOptions {
    pub fn new(k: usize, family: DivergenceFamily, seed: u64) -> Self {
        Self {
            grid: SearchGrid::default(),
            k,
            family,
            seed,
            theta_source: ThetaSource::Improved,
            restarts: 1,
        }
    }
}

/// `sum_i min_j ||x_i - theta_j||`.
pub fn centroid_distance_objective(data: &Array2<f64>, centroids: &Array2<f64>) -> f64 {
    data.rows()
        .into_iter()
        .map(|x| {
            centroids
                .rows()
                .into_iter()
                .map(|t| x.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum()
}

fn theta_fit(data: &DataMatrix, k: usize, family: DivergenceFamily, seed: u64, restarts: usize, source: ThetaSource) -> Result<CentroidSource> {
    let mut cfg = ClusterConfig::new(ClusterMethod::BregmanPower, family, k, seed);
    cfg.restarts = restarts;
    let res = clustering::fit(data, &cfg)?;
    Ok(CentroidSource {
        source,
        family,
        k,
        seed,
        restarts,
        centroids: res.centroids.centroids,
        iterations: res.iterations,
        converged: res.converged,
    })
}

fn rejection(e: &Error) -> String {
    match e {
        Error::GuardViolation { .. } => format!("guard: {e}"),
        Error::Domain { .. } => format!("domain: {e}"),
        other => other.to_string(),
    }
}

fn evaluate(
    data: &DataMatrix,
    p: &GridPoint,
    opts: &SearchOptions,
    cand_seed: u64,
    shared: Option<&CentroidSource>,
) -> std::result::Result<(f64, DataMatrix, CentroidSource), String> {
    if !(p.eta > 0.0) {
        return Err(format!("eta <= 0 ({})", p.eta));
    }
    if p.k >= data.rows() {
        return Err(format!("K={} >= n={}", p.k, data.rows()));
    }
    let improved = gravity::improve(data, &p.gravity()).map_err(|e| rejection(&e))?;
    let source = match shared {
        Some(s) => s.clone(),
        None => theta_fit(&improved, opts.k, opts.family, cand_seed, opts.restarts, ThetaSource::Improved)
            .map_err(|e| rejection(&e))?,
    };
    let objective = centroid_distance_objective(improved.values(), &source.centroids);
    if !objective.is_finite() {
        return Err("non-finite objective".into());
    }
    Ok((objective, improved, source))
}

/// Scores one candidate with an explicit seed for its centroid fit.
pub fn score_candidate(
    data: &DataMatrix,
    candidate: GridPoint,
    k: usize,
    family: DivergenceFamily,
    seed: u64,
) -> ParamCandidate {
    let opts = SearchOptions::new(k, family, seed);
    match evaluate(data, &candidate, &opts, seed, None) {
        Ok((obj, _, _)) => ParamCandidate {
            eta: candidate.eta,
            k: candidate.k,
            d: candidate.d,
            objective: Some(obj),
            feasible: true,
            rejection_reason: None,
        },
        Err(reason) => ParamCandidate::rejected(&candidate, reason),
    }
}

/// True when `a` beats `b` under the objective and tie rules.
pub fn better(a: &ParamCandidate, b: &ParamCandidate) -> bool {
    let (Some(oa), Some(ob)) = (a.objective, b.objective) else {
        return a.objective.is_some();
    };
    if (oa - ob).abs() > TIE_TOLERANCE {
        return oa < ob;
    }
    (a.k, a.d).cmp(&(b.k, b.d)).then(b.eta.total_cmp(&a.eta)).is_lt()
}

/// Default-options search: `theta` from each improved dataset, one fit per
/// candidate.
pub fn search(data: &DataMatrix, grid: &SearchGrid, k: usize, family: DivergenceFamily, seed: u64) -> Result<SearchResult> {
    let mut opts = SearchOptions::new(k, family, seed);
    opts.grid = grid.clone();
    search_with(data, &opts)
}

pub fn search_with(data: &DataMatrix, opts: &SearchOptions) -> Result<SearchResult> {
    let points = enumerate_grid(&opts.grid)?;
    if opts.k == 0 || opts.k > data.rows() {
        return Err(Error::InvalidParameter(format!("k must be in 1..={}, got {}", data.rows(), opts.k)));
    }
    let shared = match opts.theta_source {
        ThetaSource::Raw => Some(theta_fit(
            data,
            opts.k,
            opts.family,
            seed::derive(opts.seed, &[u64::MAX]),
            opts.restarts,
            ThetaSource::Raw,
        )?),
        ThetaSource::Improved => None,
    };
    let scored: Vec<(ParamCandidate, Option<CentroidSource>)> = par::map_range(points.len(), |i| {
        let p = &points[i];
        let cand_seed = seed::derive(opts.seed, &[i as u64]);
        match evaluate(data, p, opts, cand_seed, shared.as_ref()) {
            Ok((obj, _, source)) => (
                ParamCandidate {
                    eta: p.eta,
                    k: p.k,
                    d: p.d,
                    objective: Some(obj),
                    feasible: true,
                    rejection_reason: None,
                },
                Some(source),
            ),
            Err(reason) => (ParamCandidate::rejected(p, reason), None),
        }
    });

    let mut best: Option<usize> = None;
    for (i, (c, _)) in scored.iter().enumerate() {
        if c.feasible && best.is_none_or(|b| better(c, &scored[b].0)) {
            best = Some(i);
        }
    }
    let Some(b) = best else {
        return Err(Error::NoFeasibleCandidate(points.len()));
    };
    let winner = &points[b];
    let improved_data = gravity::improve(data, &winner.gravity())?;
    let (all_candidates, mut sources): (Vec<_>, Vec<_>) = scored.into_iter().unzip();
    let centroid_source = sources[b].take().expect("feasible candidate has a centroid source");
    Ok(SearchResult {
        best: all_candidates[b].clone(),
        improved_data,
        all_candidates,
        centroid_source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[(f64, f64)], per: usize, sd: f64, seed: u64) -> DataMatrix {
        let mut rng = seed::rng(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &(x, y)) in centers.iter().enumerate() {
            for _ in 0..per {
                rows.push(vec![x + noise.sample(&mut rng), y + noise.sample(&mut rng)]);
                labels.push(c);
            }
        }
        DataMatrix::from_rows(&rows, Some(labels), "blobs").unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let pts = enumerate_grid(&SearchGrid::default()).unwrap();
        assert_eq!(pts.len(), 100);
        assert_eq!((pts[0].k, pts[0].d), (1, 1));
        assert!((pts[0].eta - 0.99).abs() < 1e-15);
        assert_eq!((pts[1].k, pts[1].d), (1, 2));
        let last = pts.last().unwrap();
        assert_eq!((last.k, last.d), (10, 10));
        assert!(last.eta <= 1e-12);
    }

    #[test]
    fn decoupled_grid_shape() {
        let grid = SearchGrid {
            decoupled_eta: true,
            eta_steps: 4,
            k_max: 2,
            d_max: 3,
            ..SearchGrid::default()
        };
        let pts = enumerate_grid(&grid).unwrap();
        assert_eq!(pts.len(), 2 * 3 * 4);
        assert_eq!(pts[0].eta, 1.0);
        assert_eq!(pts[3].eta, 0.25);
        assert!(pts.iter().all(|p| p.eta > 0.0));
    }

    #[test]
    fn empty_grid_is_error() {
        let grid = SearchGrid {
            k_min: 3,
            k_max: 2,
            ..SearchGrid::default()
        };
        assert!(enumerate_grid(&grid).is_err());
    }

    #[test]
    fn nonpositive_eta_is_infeasible() {
        let data = blobs(&[(0.0, 0.0), (5.0, 5.0)], 10, 0.3, 1);
        let c = score_candidate(&data, GridPoint { eta: 0.0, k: 10, d: 10 }, 2, DivergenceFamily::SQUARED_EUCLIDEAN, 0);
        assert!(!c.feasible);
        assert!(c.objective.is_none());
        assert!(c.rejection_reason.unwrap().contains("eta"));
    }

    #[test]
    fn guard_trip_is_infeasible() {
        let data = blobs(&[(0.0, 0.0), (50.0, 50.0)], 10, 5.0, 2);
        let c = score_candidate(&data, GridPoint { eta: 0.9, k: 5, d: 1 }, 2, DivergenceFamily::SQUARED_EUCLIDEAN, 0);
        assert!(!c.feasible);
        assert!(c.rejection_reason.unwrap().starts_with("guard"));
    }

    #[test]
    fn tiny_eta_matches_unimproved_objective() {
        let data = blobs(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)], 15, 0.4, 3);
        let c = score_candidate(&data, GridPoint { eta: 1e-14, k: 3, d: 2 }, 3, DivergenceFamily::SQUARED_EUCLIDEAN, 9);
        let cfg = ClusterConfig::new(ClusterMethod::BregmanPower, DivergenceFamily::SQUARED_EUCLIDEAN, 3, 9);
        let fit = clustering::fit(&data, &cfg).unwrap();
        let direct = centroid_distance_objective(data.values(), &fit.centroids.centroids);
        assert!((c.objective.unwrap() - direct).abs() < 1e-9 * direct.max(1.0));
    }

    #[test]
    fn collapsed_blobs_score_near_zero() {
        let data = blobs(&[(0.0, 0.0), (10.0, 10.0)], 8, 1e-7, 4);
        let c = score_candidate(&data, GridPoint { eta: 0.5, k: 3, d: 4 }, 2, DivergenceFamily::SQUARED_EUCLIDEAN, 1);
        assert!(c.objective.unwrap() < 1e-5);
    }

    #[test]
    fn contraction_lowers_score() {
        let data = blobs(&[(0.0, 0.0), (10.0, 10.0)], 8, 0.4, 4);
        let raw = score_candidate(&data, GridPoint { eta: 1e-14, k: 3, d: 1 }, 2, DivergenceFamily::SQUARED_EUCLIDEAN, 1);
        let moved = score_candidate(&data, GridPoint { eta: 0.7, k: 3, d: 10 }, 2, DivergenceFamily::SQUARED_EUCLIDEAN, 1);
        assert!(moved.objective.unwrap() < 0.8 * raw.objective.unwrap());
    }

    #[test]
    fn tie_rule() {
        let mk = |eta, k, d, o| ParamCandidate {
            eta,
            k,
            d,
            objective: Some(o),
            feasible: true,
            rejection_reason: None,
        };
        assert!(better(&mk(0.5, 2, 5, 1.0), &mk(0.5, 3, 1, 1.0 + 1e-13)));
        assert!(better(&mk(0.5, 2, 1, 1.0), &mk(0.5, 2, 3, 1.0)));
        assert!(better(&mk(0.6, 2, 1, 1.0), &mk(0.5, 2, 1, 1.0)));
        assert!(better(&mk(0.5, 9, 9, 0.5), &mk(0.5, 1, 1, 1.0)));
        let infeasible = ParamCandidate::rejected(&GridPoint { eta: 0.0, k: 1, d: 1 }, "x".into());
        assert!(better(&mk(0.5, 9, 9, 0.5), &infeasible));
        assert!(!better(&infeasible, &mk(0.5, 9, 9, 0.5)));
    }

    #[test]
    fn search_is_optimal_and_reproducible() {
        let data = blobs(&[(0.0, 0.0), (4.0, 0.0), (2.0, 3.0)], 12, 0.5, 5);
        let grid = SearchGrid {
            k_max: 4,
            d_max: 4,
            ..SearchGrid::default()
        };
        let a = search(&data, &grid, 3, DivergenceFamily::SQUARED_EUCLIDEAN, 77).unwrap();
        let b = search(&data, &grid, 3, DivergenceFamily::SQUARED_EUCLIDEAN, 77).unwrap();
        assert_eq!(a.all_candidates, b.all_candidates);
        assert_eq!(a.improved_data.values(), b.improved_data.values());
        assert_eq!(a.all_candidates.len(), 16);
        let best = a.best.objective.unwrap();
        for c in &a.all_candidates {
            assert!(c.feasible || c.rejection_reason.is_some());
            if let Some(o) = c.objective {
                assert!(best <= o + TIE_TOLERANCE);
            }
        }
        let expect = gravity::improve(&data, &GravityConfig::new(a.best.eta, a.best.k, a.best.d)).unwrap();
        assert_eq!(expect.values(), a.improved_data.values());
    }

    #[test]
    fn single_feasible_candidate_wins() {
        let data = blobs(&[(0.0, 0.0), (4.0, 0.0)], 6, 0.5, 6);
        let grid = SearchGrid {
            eta0: 0.02,
            delta_eta: 0.01,
            k_min: 1,
            k_max: 2,
            d_min: 1,
            d_max: 1,
            ..SearchGrid::default()
        };
        let r = search(&data, &grid, 2, DivergenceFamily::SQUARED_EUCLIDEAN, 3).unwrap();
        assert_eq!((r.best.k, r.best.d), (1, 1));
        assert!(!r.all_candidates[1].feasible);
    }

    #[test]
    fn all_infeasible_is_error() {
        let data = blobs(&[(0.0, 0.0)], 5, 0.5, 7);
        let grid = SearchGrid {
            eta0: 0.0,
            k_max: 2,
            d_max: 2,
            ..SearchGrid::default()
        };
        assert!(matches!(
            search(&data, &grid, 1, DivergenceFamily::SQUARED_EUCLIDEAN, 0),
            Err(Error::NoFeasibleCandidate(4))
        ));
    }

    #[test]
    fn raw_theta_mode_shares_one_fit() {
        let data = blobs(&[(0.0, 0.0), (4.0, 4.0)], 10, 0.4, 8);
        let mut opts = SearchOptions::new(2, DivergenceFamily::SQUARED_EUCLIDEAN, 11);
        opts.theta_source = ThetaSource::Raw;
        opts.grid.k_max = 3;
        opts.grid.d_max = 3;
        let r = search_with(&data, &opts).unwrap();
        assert_eq!(r.centroid_source.source, ThetaSource::Raw);
        let cfg = ClusterConfig::new(ClusterMethod::BregmanPower, opts.family, 2, seed::derive(11, &[u64::MAX]));
        let fit = clustering::fit(&data, &cfg).unwrap();
        assert_eq!(fit.centroids.centroids, r.centroid_source.centroids);
    }
}
