//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use gravclust::clustering::{self, CentroidSet, ClusterMethod};
use gravclust::data::{load_csv, preprocess, write_csv_to, DataMatrix, PreprocessSpec};
use gravclust::dbgsa::{self, SearchGrid, SearchOptions};
use gravclust::divergence::DivergenceFamily;
use gravclust::experiments::{self, ImprovementConfig, SimulationConfig};
use gravclust::gravity::{self, GravityConfig, UpdateRule};
use gravclust::metrics;
use gravclust::power_mean::{power_mean, power_mean_grad};
use gravclust::{seed, Error};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const FAMILIES: [&str; 4] = ["gaussian", "binomial", "poisson", "gamma"];
const PAPER_BPK_ARI: [f64; 4] = [0.927, 0.961, 0.916, 0.879];

fn fam(name: &str) -> DivergenceFamily {
    name.parse().unwrap()
}

fn iris() -> DataMatrix {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", "iris.csv"].iter().collect();
    load_csv(p, Some("label")).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(lo..hi)).collect()
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn simulation_table(out: &experiments::SimulationOutput, method: ClusterMethod) -> Vec<f64> {
    FAMILIES
        .iter()
        .map(|f| {
            let row = out
                .report
                .rows
                .iter()
                .find(|r| r[0] == method.name() && r[1] == *f)
                .unwrap();
            row[2].parse().unwrap()
        })
        .collect()
}

fn criteria_1_2() -> (Outcome, Outcome) {
    let cfg = SimulationConfig {
        replicates: 50,
        seed: 20_240_101,
        ..SimulationConfig::default()
    };
    let t0 = Instant::now();
    let out = experiments::simulation_study(&cfg).unwrap();
    let elapsed = t0.elapsed();
    let bpk = simulation_table(&out, ClusterMethod::BregmanPower);
    let km = simulation_table(&out, ClusterMethod::KMeans);

    let mut ok1 = elapsed <= Duration::from_secs(300);
    let mut parts = Vec::new();
    for i in 0..4 {
        let within = (bpk[i] - PAPER_BPK_ARI[i]).abs() <= 0.08;
        ok1 &= within;
        parts.push(format!("{} {:.3} (paper {:.3})", FAMILIES[i], bpk[i], PAPER_BPK_ARI[i]));
    }
    let c1 = outcome(ok1, format!("{}; {:.1}s", parts.join(", "), elapsed.as_secs_f64()));

    let mut ok2 = true;
    let mut parts = Vec::new();
    for i in 0..4 {
        ok2 &= bpk[i] >= km[i];
        parts.push(format!("{} {:.3}>={:.3}", FAMILIES[i], bpk[i], km[i]));
    }
    let gap = bpk[3] - km[3];
    ok2 &= gap >= 0.2;
    let c2 = outcome(ok2, format!("{}; gamma gap {:.3}", parts.join(", "), gap));
    (c1, c2)
}

fn positive_data(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DataMatrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_point(rng, m, 0.2, 20.0)).collect();
    DataMatrix::from_rows(&rows, None, "mm").unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = seed::rng(3);
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for f in FAMILIES {
        let family = fam(f);
        for _ in 0..100 {
            let n = rng.random_range(5..60);
            let m = rng.random_range(1..5);
            let k = rng.random_range(2..5);
            let data = positive_data(&mut rng, n, m);
            let s = -rng.random_range(0.1..10.0);
            let c: Vec<f64> = (0..k).flat_map(|_| random_point(&mut rng, m, 0.2, 20.0)).collect();
            let mut theta = CentroidSet::new(Array2::from_shape_vec((k, m), c).unwrap());
            theta.power_s = Some(s);
            let before = clustering::objective(&data, &theta, family, ClusterMethod::BregmanPower).unwrap();
            let next = clustering::bpk_step(&data, &theta, family, s).unwrap();
            let after = clustering::objective(&data, &next, family, ClusterMethod::BregmanPower).unwrap();
            worst = worst.max(after - before);
            checked += 1;
        }
    }
    outcome(
        worst <= 1e-8,
        format!("{checked} instances, max objective increase {worst:.3e} (limit 1e-8)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = seed::rng(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.random_range(1..7);
        let y = random_point(&mut rng, len, 0.1, 10.0);
        let s = -rng.random_range(0.1..5.0);
        let g = power_mean_grad(&y, s).unwrap();
        let fd: Vec<f64> = (0..len)
            .map(|j| {
                let h = 1e-5 * y[j];
                let mut up = y.clone();
                let mut dn = y.clone();
                up[j] += h;
                dn[j] -= h;
                (power_mean(&up, s).unwrap() - power_mean(&dn, s).unwrap()) / (2.0 * h)
            })
            .collect();
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    outcome(worst <= 1e-5, format!("100 draws, max relative error {worst:.3e} (limit 1e-5)"))
}

fn criterion_5() -> Outcome {
    let mut rng = seed::rng(5);
    let mut worst_rel = 0.0f64;
    let mut violations = 0;
    for f in FAMILIES {
        let family = fam(f);
        for _ in 0..1000 {
            let m = rng.random_range(1..6);
            let x = random_point(&mut rng, m, 0.05, 10.0);
            let y = random_point(&mut rng, m, 0.05, 10.0);
            let closed = family.bregman(&x, &y).unwrap();
            let grad = family.grad_phi(&y).unwrap();
            let inner: f64 = grad.iter().zip(x.iter().zip(&y)).map(|(g, (a, b))| g * (a - b)).sum();
            let def = family.phi(&x).unwrap() - family.phi(&y).unwrap() - inner;
            worst_rel = worst_rel.max((closed - def).abs() / closed.abs());
            if closed <= 0.0 || family.bregman(&x, &x).unwrap() != 0.0 {
                violations += 1;
            }
        }
    }
    outcome(
        worst_rel <= 1e-9 && violations == 0,
        format!("4000 pairs, max relative error {worst_rel:.3e} (limit 1e-9), {violations} nonnegativity/identity violations"),
    )
}

fn neighbour_means(x: &Array2<f64>, nb: &gravity::NeighborSet) -> Array2<f64> {
    let (n, m) = x.dim();
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        for &j in nb.indices_of(i) {
            out.row_mut(i).scaled_add(1.0 / nb.k as f64, &x.row(j));
        }
    }
    out
}

fn dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn two_blobs(seed_value: u64, per: usize, sd: f64) -> DataMatrix {
    let mut rng = seed::rng(seed_value);
    let noise = Normal::new(0.0, sd).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in [[0.0, 0.0], [6.0, 6.0]].iter().enumerate() {
        for _ in 0..per {
            rows.push(vec![centre[0] + noise.sample(&mut rng), centre[1] + noise.sample(&mut rng)]);
            labels.push(c);
        }
    }
    DataMatrix::from_rows(&rows, Some(labels), "two_blobs").unwrap()
}

fn criterion_6() -> Outcome {
    let mut rng = seed::rng(6);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let n = rng.random_range(4..40);
        let m = rng.random_range(1..4);
        let k = rng.random_range(1..n.min(11));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| random_point(&mut rng, m, -5.0, 5.0)).collect();
        let x = Array2::from_shape_vec((n, m), rows.concat()).unwrap();
        let nb = gravity::knn(&DataMatrix::new(x.clone(), None, "c6").unwrap(), k).unwrap();
        // any eta * G with eta * G * K < 2
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0) / k as f64).collect();
        let moved = gravity::displace(&x, &nb, &g, 1.0, UpdateRule::Simplified);
        let means = neighbour_means(&x, &nb);
        for i in 0..n {
            let before = dist(x.row(i), means.row(i));
            let after = dist(moved.row(i), means.row(i));
            worst = worst.max(after - before);
        }
    }
    let simplified_ok = worst <= 1e-9;

    let data = two_blobs(66, 100, 1.0);
    let x = data.values().clone();
    let cfg = GravityConfig::new(0.5, 5, 1);
    let nb = gravity::knn(&data, cfg.k_neighbors).unwrap();
    let g = gravity::gravity_coefficient(&nb, 1, 1).unwrap();
    gravity::check_guard(cfg.eta, &g, cfg.k_neighbors, 1).unwrap();
    let moved = gravity::displace(&x, &nb, &g, cfg.eta, UpdateRule::Full);
    let means = neighbour_means(&x, &nb);
    let closer = (0..x.nrows())
        .filter(|&i| dist(moved.row(i), means.row(i)) < dist(x.row(i), means.row(i)))
        .count();
    let frac = closer as f64 / x.nrows() as f64;
    outcome(
        simplified_ok && frac >= 0.95,
        format!(
            "simplified: max increase {worst:.3e} (limit 1e-9); full update: {:.1}% of points closer to neighbour mean (need 95%)",
            100.0 * frac
        ),
    )
}

fn criterion_7() -> Outcome {
    // wide spread so that the guard trips for many large-K candidates
    let data = two_blobs(77, 40, 1.5);
    let grid = SearchGrid::default();
    let points = dbgsa::enumerate_grid(&grid).unwrap();
    let res = dbgsa::search(&data, &grid, 2, DivergenceFamily::SQUARED_EUCLIDEAN, 7).unwrap();
    let mut ok = points.len() == 100 && res.all_candidates.len() == 100;
    let (mut eta_rejects, mut guard_rejects, mut feasible) = (0, 0, 0);
    for c in &res.all_candidates {
        let cfg = GravityConfig::new(c.eta, c.k, c.d);
        if c.eta <= 0.0 {
            ok &= !c.feasible;
            eta_rejects += 1;
            continue;
        }
        // independent replay of the trajectory
        match gravity::improve_traced(&data, &cfg) {
            Ok((_, stats)) => {
                ok &= c.feasible && stats.iter().all(|s| s.max_guard < 2.0);
                feasible += 1;
            }
            Err(Error::GuardViolation { value, .. }) => {
                ok &= !c.feasible && value >= 2.0;
                guard_rejects += 1;
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }
    ok &= guard_rejects > 0 && eta_rejects > 0;
    outcome(
        ok,
        format!("{} candidates: {feasible} feasible, {guard_rejects} guard-rejected, {eta_rejects} eta<=0", res.all_candidates.len()),
    )
}

fn criterion_8() -> (Outcome, experiments::ImprovementOutput) {
    let t0 = Instant::now();
    let cfg = ImprovementConfig {
        seed: 8,
        ..ImprovementConfig::default()
    };
    let out = experiments::improvement_study(&[(iris(), PreprocessSpec::normalize_unit())], &cfg).unwrap();
    let elapsed = t0.elapsed();
    let o = &out.datasets[0];
    let (raw, improved) = (o.raw_nmi[0], o.improved_nmi[0]);
    let ok = improved >= raw + 0.05 && improved >= 0.80 && elapsed <= Duration::from_secs(600);
    (
        outcome(
            ok,
            format!(
                "normalized iris k-means NMI {raw:.3} -> {improved:.3} (need +0.05 and >= 0.80; paper 0.748 -> 0.931); winner eta={} K={} d={}; {:.1}s",
                o.best.eta,
                o.best.k,
                o.best.d,
                elapsed.as_secs_f64()
            ),
        ),
        out,
    )
}

fn brute_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut in_a, mut in_b, mut pairs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            pairs += 1.0;
            if sa && sb {
                both += 1.0;
            }
            if sa {
                in_a += 1.0;
            }
            if sb {
                in_b += 1.0;
            }
        }
    }
    let expected = in_a * in_b / pairs;
    let max = 0.5 * (in_a + in_b);
    if max == expected {
        return if a_equiv(a, b) { 1.0 } else { 0.0 };
    }
    (both - expected) / (max - expected)
}

fn a_equiv(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Restricted growth strings: every partition of `n` points into at most `k` blocks.
fn partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let max = cur.iter().copied().max().map_or(0, |m| m + 1);
        for b in 0..=max.min(k - 1) {
            cur.push(b);
            rec(cur, n, k, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, k, &mut out);
    out
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for n in 2..=6 {
        let ps = partitions(n, 3);
        for a in &ps {
            for b in &ps {
                let diff = (metrics::ari(a, b).unwrap() - brute_ari(a, b)).abs();
                worst = worst.max(diff);
                pairs += 1;
            }
        }
    }
    let ex_ari = metrics::ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
    let ex_nmi = metrics::nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
    let ok = worst <= 1e-12 && (ex_ari + 0.5).abs() <= 1e-12 && ex_nmi.abs() <= 1e-12;
    outcome(
        ok,
        format!("{pairs} partition pairs, max |ari - oracle| {worst:.1e}; example ARI {ex_ari}, NMI {ex_nmi}"),
    )
}

fn dbgsa_bytes(data: &DataMatrix, opts: &SearchOptions) -> Vec<u8> {
    let r = dbgsa::search_with(data, opts).unwrap();
    let mut out = experiments::candidates_csv(&r.all_candidates).into_bytes();
    write_csv_to(&r.improved_data, &mut out, None, "label").unwrap();
    out
}

fn criterion_10() -> Outcome {
    let cfg = SimulationConfig {
        replicates: 6,
        seed: 10,
        ..SimulationConfig::default()
    };
    let replay = SimulationConfig::from_manifest(&gravclust::manifest::Manifest::parse(&cfg.to_manifest().to_string()).unwrap()).unwrap();
    let sim = |c: &SimulationConfig| {
        let o = experiments::simulation_study(c).unwrap();
        (experiments::records_to_csv(&o.records), o.report.to_csv())
    };
    let a = pool(1).install(|| sim(&cfg));
    let b = pool(8).install(|| sim(&replay));
    let c = sim(&replay);
    let sim_ok = a == b && b == c;

    let data = preprocess(&iris(), &PreprocessSpec::normalize_unit()).unwrap();
    let opts = SearchOptions::new(3, DivergenceFamily::SQUARED_EUCLIDEAN, 10);
    let x = pool(1).install(|| dbgsa_bytes(&data, &opts));
    let y = pool(8).install(|| dbgsa_bytes(&data, &opts));
    let z = dbgsa_bytes(&data, &opts);
    let dbgsa_ok = x == y && y == z;
    outcome(
        sim_ok && dbgsa_ok,
        format!(
            "simulation outputs identical across 1/8/default threads: {sim_ok}; dbgsa outputs identical: {dbgsa_ok} (parallel feature: {})",
            gravclust::par::is_parallel()
        ),
    )
}

fn criterion_11(out: &experiments::ImprovementOutput) -> Outcome {
    let text = out.comparison.to_text();
    let cited_rows: Vec<&Vec<String>> = out.comparison.rows.iter().filter(|r| r[0] == "cited").collect();
    let has = |s: &str| text.contains(s);
    let ok = has("63.8%")
        && ["herd", "sbca", "hibog"].iter().all(|m| cited_rows.iter().any(|r| r[1] == *m))
        && out.comparison.rows.iter().any(|r| r[0] == "measured")
        && has("cited herd")
        && has("not reproduced");
    for line in text.lines() {
        println!("    | {line}");
    }
    outcome(ok, format!("{} cited rows printed next to the measured DBGSA increments", cited_rows.len()))
}

fn main() {
    // libtest-style flags (e.g. from `cargo test -- --nocapture`) are ignored
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n:>2}: {} : {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };
    let (c1, c2) = criteria_1_2();
    report(1, c1);
    report(2, c2);
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    let (c8, improvement) = criterion_8();
    report(8, c8);
    report(9, criterion_9());
    report(10, criterion_10());
    report(11, criterion_11(&improvement));

    let failed: Vec<String> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| n.to_string()).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" (criteria {})", failed.join(", "))
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
