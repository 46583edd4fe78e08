use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_analysis::tsne::kl_divergence;
use swarm_analysis::{effective_perplexity, tsne, TsneParams};

fn gaussian_clusters(centers: &[[f64; 3]], per: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    centers
        .iter()
        .flat_map(|c| {
            (0..per)
                .map(|_| c.iter().map(|x| x + spread * (rng.random::<f64>() - 0.5)).collect())
                .collect::<Vec<Vec<f64>>>()
        })
        .collect()
}

#[test]
fn perplexity_follows_row_count() {
    for (n, want) in [(5, 1.0), (10, 3.0), (91, 30.0), (500, 30.0)] {
        assert_eq!(effective_perplexity(n, 30.0), want);
    }
    let rows = gaussian_clusters(&[[0.0; 3]], 10, 1.0, 1);
    let r = tsne(
        &rows,
        &TsneParams {
            max_iter: 10,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.perplexity, 3.0);
}

#[test]
fn kl_does_not_rise_after_exaggeration() {
    let rows = gaussian_clusters(&[[0.0, 0.0, 0.0], [5.0, 5.0, 0.0], [0.0, 5.0, 5.0]], 20, 2.0, 7);
    let r = tsne(&rows, &TsneParams::default()).unwrap();
    assert_eq!(r.kl_history.len(), 1000);
    assert!(
        r.kl_history[999] <= r.kl_history[299] + 1e-3,
        "{} vs {}",
        r.kl_history[999],
        r.kl_history[299]
    );
    assert!(r.embedding.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn separated_clusters_stay_apart() {
    let rows = gaussian_clusters(&[[0.0; 3], [10.0, 10.0, 10.0]], 3, 0.5, 3);
    let r = tsne(
        &rows,
        &TsneParams {
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let centroid = |pts: &[[f64; 2]]| {
        let k = pts.len() as f64;
        [
            pts.iter().map(|p| p[0]).sum::<f64>() / k,
            pts.iter().map(|p| p[1]).sum::<f64>() / k,
        ]
    };
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let (a, b) = r.embedding.split_at(3);
    let (ca, cb) = (centroid(a), centroid(b));
    let radius = a
        .iter()
        .map(|p| dist(*p, ca))
        .chain(b.iter().map(|p| dist(*p, cb)))
        .fold(0.0, f64::max);
    let ratio = dist(ca, cb) / radius;
    assert!(ratio > 2.0, "separation ratio {ratio}");
}

#[test]
fn output_is_finite_for_duplicate_rows() {
    let rows = vec![vec![1.0, 2.0]; 6];
    let r = tsne(
        &rows,
        &TsneParams {
            max_iter: 200,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.embedding.len(), 6);
    assert!(r.embedding.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn history_matches_recomputed_kl() {
    let rows = gaussian_clusters(&[[0.0; 3], [3.0, 0.0, 0.0]], 5, 1.0, 4);
    let r = tsne(
        &rows,
        &TsneParams {
            max_iter: 50,
            ..Default::default()
        },
    )
    .unwrap();
    let p = swarm_analysis::tsne::joint_affinities(&rows, r.perplexity);
    let kl = kl_divergence(&p, &r.embedding);
    assert!((kl - r.kl_history[49]).abs() < 1e-12, "{kl} vs {}", r.kl_history[49]);
}
