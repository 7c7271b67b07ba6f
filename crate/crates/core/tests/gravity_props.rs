use gravclust::data::DataMatrix;
use gravclust::gravity::{self, GravityConfig, UpdateRule};
use ndarray::Array2;
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

fn cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
    (1usize..4, 3usize..30).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, m), n),
            1usize..n.min(8),
        )
    })
}

fn blobs(seed: u64, per: usize) -> DataMatrix {
    let mut rng = gravclust::seed::rng(seed);
    let noise = Normal::new(0.0, 0.6).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in [[0.0, 0.0], [5.0, 0.0], [2.5, 4.0]].iter().enumerate() {
        for _ in 0..per {
            rows.push(vec![centre[0] + noise.sample(&mut rng), centre[1] + noise.sample(&mut rng)]);
            labels.push(c);
        }
    }
    DataMatrix::from_rows(&rows, Some(labels), "blobs").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn simplified_update_contracts_towards_neighbour_mean(
        (rows, k) in cloud(),
        factors in prop::collection::vec(0.0f64..1.999, 30),
    ) {
        let n = rows.len();
        let m = rows[0].len();
        let data = DataMatrix::from_rows(&rows, None, "c").unwrap();
        let x = data.values().clone();
        let nb = gravity::knn(&data, k).unwrap();
        let g: Vec<f64> = (0..n).map(|i| factors[i] / k as f64).collect();
        let moved = gravity::displace(&x, &nb, &g, 1.0, UpdateRule::Simplified);
        for i in 0..n {
            let mut mean = vec![0.0; m];
            for &j in nb.indices_of(i) {
                for c in 0..m {
                    mean[c] += x[[j, c]] / k as f64;
                }
            }
            let before: f64 = (0..m).map(|c| (x[[i, c]] - mean[c]).powi(2)).sum::<f64>().sqrt();
            let after: f64 = (0..m).map(|c| (moved[[i, c]] - mean[c]).powi(2)).sum::<f64>().sqrt();
            prop_assert!(after <= before + 1e-9, "point {i}: {before} -> {after}");
            // the proof's equality: distance scales by |1 - eta G K|
            prop_assert!((after - (1.0 - factors[i]).abs() * before).abs() <= 1e-9 * (1.0 + before));
        }
    }

    #[test]
    fn improve_preserves_shape_labels_and_is_deterministic((rows, k) in cloud(), eta in 1e-4f64..0.05, d in 1usize..6) {
        let n = rows.len();
        let data = DataMatrix::from_rows(&rows, Some((0..n).map(|i| i % 3).collect()), "c").unwrap();
        let cfg = GravityConfig::new(eta, k, d);
        match gravity::improve(&data, &cfg) {
            Ok(a) => {
                let b = gravity::improve(&data, &cfg).unwrap();
                prop_assert_eq!(a.values().dim(), data.values().dim());
                prop_assert_eq!(a.labels(), data.labels());
                prop_assert_eq!(a.values(), b.values());
            }
            Err(gravclust::Error::GuardViolation { value, .. }) => prop_assert!(value >= 2.0),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn knn_is_sorted_and_exact((rows, k) in cloud()) {
        let data = DataMatrix::from_rows(&rows, None, "c").unwrap();
        let nb = gravity::knn(&data, k).unwrap();
        let n = rows.len();
        for i in 0..n {
            let mut all: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d2: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2.sqrt(), j)
                })
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expect: Vec<usize> = all[..k].iter().map(|p| p.1).collect();
            prop_assert_eq!(nb.indices_of(i), expect.as_slice());
        }
    }
}

#[test]
fn full_update_moves_most_points_towards_neighbour_mean() {
    let data = blobs(11, 60);
    let x = data.values().clone();
    let k = 6;
    let nb = gravity::knn(&data, k).unwrap();
    let g = gravity::gravity_coefficient(&nb, 1, 1).unwrap();
    let eta = 0.5;
    gravity::check_guard(eta, &g, k, 1).unwrap();
    let moved = gravity::displace(&x, &nb, &g, eta, UpdateRule::Full);
    let n = x.nrows();
    let mut closer = 0;
    for i in 0..n {
        let mut mean = [0.0; 2];
        for &j in nb.indices_of(i) {
            mean[0] += x[[j, 0]] / k as f64;
            mean[1] += x[[j, 1]] / k as f64;
        }
        let d = |a: &Array2<f64>| ((a[[i, 0]] - mean[0]).powi(2) + (a[[i, 1]] - mean[1]).powi(2)).sqrt();
        if d(&moved) < d(&x) {
            closer += 1;
        }
    }
    assert!(closer as f64 >= 0.95 * n as f64, "{closer}/{n}");
}

#[test]
fn displacement_decays_over_iterations() {
    let data = blobs(12, 50);
    let (_, stats) = gravity::improve_traced(&data, &GravityConfig::new(0.3, 5, 8)).unwrap();
    for w in stats.windows(2) {
        assert!(
            w[1].mean_displacement <= 1.05 * w[0].mean_displacement,
            "z={}: {} -> {}",
            w[1].iteration,
            w[0].mean_displacement,
            w[1].mean_displacement
        );
    }
    assert!(stats.iter().all(|s| s.max_guard < 2.0));
}
