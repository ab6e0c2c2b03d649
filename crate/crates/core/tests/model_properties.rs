mod common;

use arbor_core::model::{parse_model, to_json, Forest, ModelKind, Node, Tree};
use arbor_core::synth::{random_data, random_forest, DataSpec, ForestSpec};
use arbor_core::{predict_naive, SampleBlock};
use proptest::prelude::*;

fn forest_strategy() -> impl Strategy<Value = Forest> {
    (1usize..24, 0usize..=8, 1usize..10, any::<bool>(), any::<u64>()).prop_map(|(trees, depth, features, rf, seed)| {
        random_forest(&ForestSpec {
            trees,
            max_depth: depth,
            num_features: features,
            kind: if rf { ModelKind::RandomForest } else { ModelKind::GradientBoosting },
            seed,
            ..Default::default()
        })
    })
}

fn samples(forest: &Forest, rows: usize, seed: u64) -> Vec<SampleBlock> {
    random_data(&DataSpec { rows, num_features: forest.num_features, missing_rate: 0.1, seed, ..Default::default() })
        .blocks(rows)
        .unwrap()
}

/// Rounds every leaf to a multiple of 2^-10 so sums are exact.
fn dyadic(mut forest: Forest) -> Forest {
    for tree in &mut forest.trees {
        for node in &mut tree.nodes {
            if let Node::Leaf { value } = node {
                *value = (*value * 1024.0).round() / 1024.0;
            }
        }
    }
    forest.base_score = (forest.base_score * 1024.0).round() / 1024.0;
    forest
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn json_round_trip_preserves_predictions(forest in forest_strategy(), seed in any::<u64>()) {
        let back = parse_model(to_json(&forest).as_bytes()).unwrap();
        prop_assert_eq!(&back, &forest);
        for block in samples(&forest, 1000, seed) {
            for row in block.rows() {
                prop_assert_eq!(
                    predict_naive(&back, row).unwrap().raw_score.to_bits(),
                    predict_naive(&forest, row).unwrap().raw_score.to_bits()
                );
            }
        }
    }

    #[test]
    fn zero_leaves_give_one_half(forest in forest_strategy(), seed in any::<u64>()) {
        let mut forest = forest;
        forest.base_score = 0.0;
        for tree in &mut forest.trees {
            for node in &mut tree.nodes {
                if let Node::Leaf { value } = node { *value = 0.0; }
            }
        }
        for block in samples(&forest, 50, seed) {
            for row in block.rows() {
                prop_assert_eq!(predict_naive(&forest, row).unwrap().probability, 0.5);
            }
        }
    }

    #[test]
    fn constant_tree_shifts_boosted_score(forest in forest_strategy(), steps in -64i32..64, seed in any::<u64>()) {
        let mut forest = dyadic(forest);
        forest.kind = ModelKind::GradientBoosting;
        let c = f64::from(steps) / 64.0;
        let mut shifted = forest.clone();
        // Same shape as an existing tree, every leaf equal to c.
        let mut extra = forest.trees[0].clone();
        for node in &mut extra.nodes {
            if let Node::Leaf { value } = node { *value = c; }
        }
        shifted.trees.push(extra);
        for block in samples(&forest, 100, seed) {
            for row in block.rows() {
                let before = predict_naive(&forest, row).unwrap().raw_score;
                let after = predict_naive(&shifted, row).unwrap().raw_score;
                prop_assert_eq!(after, before + c);
            }
        }
    }

    #[test]
    fn naive_is_deterministic(forest in forest_strategy(), seed in any::<u64>()) {
        let blocks = samples(&forest, 64, seed);
        let first: Vec<u64> = blocks[0].rows().map(|r| predict_naive(&forest, r).unwrap().raw_score.to_bits()).collect();
        let threaded = std::thread::scope(|s| {
            s.spawn(|| blocks[0].rows().map(|r| predict_naive(&forest, r).unwrap().raw_score.to_bits()).collect::<Vec<_>>())
                .join()
                .unwrap()
        });
        prop_assert_eq!(first, threaded);
    }
}

#[test]
fn exported_style_model_loads() {
    // A 10-tree depth-8 boosted model on 28 features, as produced by an exporter.
    let forest = random_forest(&ForestSpec { trees: 10, max_depth: 8, num_features: 28, ..Default::default() });
    let json = to_json(&forest);
    let back = parse_model(json.as_bytes()).unwrap();
    assert_eq!(back.trees.len(), 10);
    assert!(back.trees.iter().all(|t| t.depth() <= 8));
    assert!(back.trees.iter().all(|t: &Tree| !t.is_empty()));
}
