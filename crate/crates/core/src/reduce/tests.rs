use super::*;
use rand::Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // correlated columns so the spectrum is not flat
    let mix: Vec<Vec<f64>> = (0..cols)
        .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..rows)
        .map(|_| {
            let z: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..cols)
                .map(|j| 3.0 + (0..cols).map(|k| z[k] * mix[k][j]).sum::<f64>())
                .collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormality_error(m: &PcaModel) -> f64 {
    let q = m.n_components();
    let mut worst: f64 = 0.0;
    for a in 0..q {
        for b in 0..q {
            let expect = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot(m.component(a), m.component(b)) - expect).abs());
        }
    }
    worst
}

/// Independent oracle: residual energy after projecting and reconstructing.
fn reconstruction_ratio(m: &PcaModel, data: &[Vec<f64>]) -> f64 {
    let mut resid = 0.0;
    let mut total = 0.0;
    for x in data {
        let z = m.transform(x).unwrap();
        let xh = m.inverse_transform(&z).unwrap();
        resid += x.iter().zip(&xh).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        total += x.iter().zip(m.mean()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    resid / total
}

fn cfg(target: f64) -> PcaConfig {
    PcaConfig {
        variance_target: target,
        ..Default::default()
    }
}

#[test]
fn single_axis() {
    let data = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![4.0, 0.0]];
    let m = fit_pca(&data, &cfg(0.999)).unwrap();
    assert_eq!(m.n_components(), 1);
    assert_eq!(m.mean(), [2.0, 0.0]);
    assert!((m.component(0)[0] - 1.0).abs() < 1e-12);
    assert!(m.component(0)[1].abs() < 1e-12);
}

#[test]
fn isotropic_needs_both_axes() {
    let data = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
    let m = fit_pca(&data, &cfg(0.999)).unwrap();
    assert_eq!(m.n_components(), 2);
}

#[test]
fn reconstruction_oracle_random_50x10() {
    let data = random_matrix(50, 10, 11);
    for target in [0.5, 0.9, 0.999] {
        let m = fit_pca(&data, &cfg(target)).unwrap();
        let ratio = reconstruction_ratio(&m, &data);
        assert!(ratio <= 1.0 - target + 1e-6, "target {target}: residual {ratio}");
        assert!((1.0 - ratio - m.retained_fraction()).abs() < 1e-6);
        assert!(orthonormality_error(&m) < 1e-8);
    }
}

#[test]
fn transform_of_mean_is_zero() {
    let data = random_matrix(30, 6, 3);
    let m = fit_pca(&data, &cfg(0.99)).unwrap();
    let z = m.transform(&m.mean().to_vec()).unwrap();
    assert!(z.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn projected_training_data_is_uncorrelated() {
    let data = random_matrix(80, 8, 5);
    let m = fit_pca(&data, &cfg(0.999)).unwrap();
    let z: Vec<Vec<f64>> = data.iter().map(|x| m.transform(x).unwrap()).collect();
    let q = m.n_components();
    let n = z.len() as f64;
    for a in 0..q {
        for b in 0..q {
            let cov = z.iter().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1.0);
            if a == b {
                let ev = m.explained_variance()[a];
                assert!((cov - ev).abs() <= 1e-6 * ev, "variance {a}: {cov} vs {ev}");
            } else {
                assert!(cov.abs() < 1e-6, "cov({a},{b}) = {cov}");
            }
        }
    }
}

#[test]
fn q_is_minimal_and_eigenvalues_sorted() {
    let data = random_matrix(60, 12, 8);
    let m = fit_pca(&data, &cfg(0.95)).unwrap();
    let ev = m.explained_variance();
    assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    assert!(ev.iter().all(|&v| v >= 0.0));
    assert!(m.retained_fraction() >= 0.95);
    let without_last: f64 = ev[..ev.len() - 1].iter().sum();
    assert!(without_last / m.total_variance() < 0.95);
}

#[test]
fn sign_convention() {
    let data = random_matrix(40, 5, 21);
    let m = fit_pca(&data, &cfg(0.999)).unwrap();
    for k in 0..m.n_components() {
        let c = m.component(k);
        let big = c.iter().cloned().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        assert!(big >= 0.0);
    }
}

#[test]
fn gram_side_matches_covariance_side() {
    // 12 rows in 40 dimensions forces the Gram path; the same data with its
    // dimensions padded below the row count must agree on the spectrum.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let wide: Vec<FeatureVector> = (0..12)
        .map(|_| {
            let pairs: Vec<(usize, u32)> = (0..40)
                .filter_map(|j| rng.random_bool(0.3).then(|| (j, rng.random_range(1..5))))
                .collect();
            FeatureVector::from_pairs(40, pairs)
        })
        .collect();
    let m = fit_pca(&wide, &cfg(0.999)).unwrap();
    assert!(orthonormality_error(&m) < 1e-8);
    let dense: Vec<Vec<f64>> = wide.iter().map(|f| f.to_dense()).collect();
    let ratio = reconstruction_ratio(&m, &dense);
    assert!((1.0 - ratio - m.retained_fraction()).abs() < 1e-6);
    // tall version: duplicate each row 5 times so rows (distinct = 12) < d but n = 60
    // goes through the same Gram path with weights; spectrum scales by (n-1) ratio.
    let tall: Vec<FeatureVector> = wide.iter().flat_map(|f| std::iter::repeat_n(f.clone(), 5)).collect();
    let mt = fit_pca(&tall, &cfg(0.999)).unwrap();
    assert_eq!(mt.n_components(), m.n_components());
    for k in 0..m.n_components() {
        let c = dot(m.component(k), mt.component(k)).abs();
        assert!((c - 1.0).abs() < 1e-6, "component {k} alignment {c}");
    }
}

#[test]
fn dedup_weights_are_exact() {
    // duplicated rows through the covariance path vs explicit dense rows
    let base = random_matrix(10, 3, 4);
    let mut data = base.clone();
    data.extend(base.iter().take(4).cloned());
    let m = fit_pca(&data, &cfg(1.0)).unwrap();
    let n = data.len() as f64;
    let mean: Vec<f64> = (0..3).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    for (a, b) in m.mean().iter().zip(&mean) {
        assert!((a - b).abs() < 1e-12);
    }
    let total: f64 = data
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| (x - m).powi(2)).sum::<f64>())
        .sum::<f64>()
        / (n - 1.0);
    assert!((m.total_variance() - total).abs() < 1e-9 * total);
}

#[test]
fn standardize_uses_unit_variance_features() {
    let data: Vec<Vec<f64>> = random_matrix(40, 4, 2)
        .into_iter()
        .map(|mut r| {
            r[0] *= 1000.0;
            r
        })
        .collect();
    let plain = fit_pca(&data, &cfg(0.5)).unwrap();
    let std = fit_pca(
        &data,
        &PcaConfig {
            standardize: true,
            ..cfg(0.999)
        },
    )
    .unwrap();
    // plain PCA is dominated by the scaled column
    assert!(plain.component(0)[0].abs() > 0.99);
    // standardized total variance equals the number of features
    assert!((std.total_variance() - 4.0).abs() < 1e-9);
    let z = std.transform(&std.mean().to_vec()).unwrap();
    assert!(z.iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn subsampling_is_deterministic() {
    let data = random_matrix(100, 5, 6);
    let c = PcaConfig {
        max_fit_samples: Some(30),
        seed: 4,
        ..cfg(0.9)
    };
    assert_eq!(fit_pca(&data, &c).unwrap(), fit_pca(&data, &c).unwrap());
}

#[test]
fn errors() {
    assert!(matches!(fit_pca(&[vec![1.0, 2.0]], &cfg(0.9)), Err(Error::Fit(_))));
    let same = vec![vec![1.0, 2.0]; 4];
    assert!(matches!(fit_pca(&same, &cfg(0.9)), Err(Error::Fit(_))));
    assert!(fit_pca(&[vec![1.0], vec![1.0, 2.0]], &cfg(0.9)).is_err());
    assert!(matches!(fit_pca(&random_matrix(5, 2, 1), &cfg(0.0)), Err(Error::Config { .. })));
    let m = fit_pca(&random_matrix(5, 2, 1), &cfg(0.9)).unwrap();
    assert!(matches!(m.transform(&vec![1.0; 3]), Err(Error::Contract(_))));
}
