use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_analysis::features::{feature_names, FEATURE_DIMS};
use swarm_analysis::{euclidean_distances, features, preprocess, FeatureMatrix, SourceLabel};
use swarm_core::{AminoAcid, ProteinSequence};

fn label() -> SourceLabel {
    SourceLabel("p".into())
}

fn sequence() -> impl Strategy<Value = ProteinSequence> {
    prop::collection::vec(0usize..20, 1..80)
        .prop_map(|ix| ProteinSequence::new(ix.into_iter().map(|i| AminoAcid::ALL[i]).collect()).unwrap())
}

proptest! {
    #[test]
    fn composition_sums_to_one(s in sequence()) {
        let f = features(&s, label());
        prop_assert!((f.composition.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&f.aromaticity));
        prop_assert_eq!(f.values().len(), FEATURE_DIMS);
    }

    #[test]
    fn shuffling_leaves_features_unchanged(s in sequence(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut residues = s.residues().to_vec();
        residues.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let t = ProteinSequence::new(residues).unwrap();
        let (a, b) = (features(&s, label()), features(&t, label()));
        prop_assert_eq!(a.composition, b.composition);
        prop_assert!((a.mol_weight - b.mol_weight).abs() < 1e-9);
        prop_assert_eq!(a.aromaticity, b.aromaticity);
    }
}

#[test]
fn mass_oracle_for_a_dipeptide() {
    // Trp + Gly + water, averaged over two residues.
    let f = features(&ProteinSequence::parse("WG").unwrap(), label());
    assert!((f.mol_weight - (186.2132 + 57.0519 + 18.01528) / 2.0).abs() < 1e-12);
    assert_eq!(feature_names()[AminoAcid::Trp.index()], "comp_W");
}

#[test]
fn planted_constant_and_duplicate_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|_| {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            let c: f64 = rng.random();
            // Columns: a, constant, b, duplicate of a, c.
            vec![a, 7.0, b, a, c]
        })
        .collect();
    let m = FeatureMatrix {
        labels: vec![label(); rows.len()],
        rows,
        kept_dims: (0..5).collect(),
    };
    let p = preprocess(&m).unwrap();
    assert_eq!(p.kept_dims, [0, 2, 4]);
}

#[test]
fn euclidean_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..7).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let d = euclidean_distances(&rows);
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            let mut s = 0.0;
            for k in 0..7 {
                let diff = rows[i][k] - rows[j][k];
                s += diff * diff;
            }
            assert!((d[i][j] - s.sqrt()).abs() <= 1e-12);
        }
    }
}
