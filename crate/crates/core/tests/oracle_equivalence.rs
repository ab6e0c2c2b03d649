//! Every engine against the brute-force path oracle and against each other.

mod common;

use arbor_core::engine::compiled::{compile_forest, interpret};
use arbor_core::engine::predicated::PredicatedEngine;
use arbor_core::engine::quickscorer::lower_quickscorer;
use arbor_core::engine::tensor::lower_tensor;
use arbor_core::model::{Direction, Forest, ModelKind, Node, Tree};
use arbor_core::{lower, predict_naive, Engine, EngineKind, Sample};
use common::{brute_force_raw, sweep_data, sweep_forests};

#[test]
fn naive_matches_brute_force_paths() {
    for (i, forest) in sweep_forests(40, 8, 64).iter().enumerate() {
        let data = sweep_data(forest, i, 50, 0.15);
        for block in data.blocks(50).unwrap() {
            for row in block.rows() {
                let naive = predict_naive(forest, row).unwrap().raw_score;
                assert_eq!(naive.to_bits(), brute_force_raw(forest, row).to_bits(), "forest {i}");
            }
        }
    }
}

#[test]
fn hand_traced_two_tree_forest() {
    let trees = vec![
        Tree::new(vec![Node::internal(0, 1.0, 1, 2, Direction::Left), Node::leaf(0.3), Node::leaf(-0.2)]),
        Tree::new(vec![Node::leaf(0.5)]),
    ];
    let boosted = Forest { trees, num_features: 1, kind: ModelKind::GradientBoosting, base_score: 0.0 };
    let averaged = Forest { kind: ModelKind::RandomForest, ..boosted.clone() };
    let at_tie = Sample::dense(vec![1.0]);
    assert_eq!(brute_force_raw(&boosted, at_tie.row()), 0.3 + 0.5);
    assert_eq!(brute_force_raw(&averaged, at_tie.row()), (0.3 + 0.5) / 2.0);
    for kind in EngineKind::ALL {
        let b = lower(kind, &boosted).unwrap().predict_block(&single_block(&at_tie)).unwrap();
        assert_eq!(b.predictions[0].raw_score, 0.8, "{kind}");
        let r = lower(kind, &averaged).unwrap().predict_block(&single_block(&at_tie)).unwrap();
        assert_eq!(r.predictions[0].raw_score, 0.4, "{kind}");
    }
}

fn single_block(sample: &Sample) -> arbor_core::SampleBlock {
    let row = sample.row();
    let entries: Vec<Option<f64>> = (0..row.len()).map(|f| row.get(f)).collect();
    arbor_core::SampleBlock::from_rows(0, 0, &[entries]).unwrap()
}

#[test]
fn predicated_and_compiled_are_bitwise_naive_with_missing() {
    for (i, forest) in sweep_forests(100, 8, 64).iter().enumerate() {
        let data = sweep_data(forest, i, 100, if i % 2 == 0 { 0.2 } else { 0.0 });
        let predicated = PredicatedEngine::new(forest);
        let compiled = compile_forest(forest, 1 + i % 9).parse().unwrap();
        for block in data.blocks(100).unwrap() {
            for row in block.rows() {
                let naive = predict_naive(forest, row).unwrap().raw_score.to_bits();
                assert_eq!(predicated.predict(row).unwrap().raw_score.to_bits(), naive, "predicated forest {i}");
                assert_eq!(interpret(&compiled, row).unwrap().raw_score.to_bits(), naive, "compiled forest {i}");
            }
        }
    }
}

#[test]
fn quickscorer_is_bitwise_naive_on_dense_inputs() {
    for (i, forest) in sweep_forests(100, 6, 32).iter().enumerate() {
        let model = lower_quickscorer(forest).unwrap();
        let data = sweep_data(forest, i, 200, 0.0);
        for block in data.blocks(200).unwrap() {
            for row in block.rows() {
                let naive = predict_naive(forest, row).unwrap().raw_score.to_bits();
                assert_eq!(model.score(row).unwrap().raw_score.to_bits(), naive, "forest {i}");
            }
        }
    }
}

#[test]
fn quickscorer_ignores_order_of_equal_thresholds() {
    let forest = &sweep_forests(30, 6, 32)[27]; // quantized thresholds
    let mut model = lower_quickscorer(forest).unwrap();
    let data = sweep_data(forest, 27, 200, 0.0);
    let block = &data.blocks(200).unwrap()[0];
    let before = model.predict_block(block).unwrap();
    for f in 0..forest.num_features {
        let group = model.group_mut(f);
        // Reverse every run of equal thresholds.
        let mut start = 0;
        while start < group.len() {
            let end = start + group[start..].iter().take_while(|e| e.threshold == group[start].threshold).count();
            group[start..end].reverse();
            start = end;
        }
    }
    assert_eq!(model.predict_block(block).unwrap(), before);
}

#[test]
fn tensor_matches_naive_within_tolerance() {
    for (i, forest) in sweep_forests(100, 8, 64).iter().enumerate() {
        let model = lower_tensor(forest);
        let data = sweep_data(forest, i, 200, 0.0);
        for block in data.blocks(64).unwrap() {
            let got = model.predict_block(&block).unwrap();
            for (row, p) in block.rows().zip(&got.predictions) {
                let naive = predict_naive(forest, row).unwrap().raw_score;
                assert!((p.raw_score - naive).abs() <= 1e-12 * (1.0 + naive.abs()), "forest {i}");
            }
        }
    }
}

#[test]
fn block_prediction_equals_row_by_row() {
    let forest = &sweep_forests(8, 8, 64)[7];
    let data = sweep_data(forest, 7, 256, 0.0);
    let block = &data.blocks(256).unwrap()[0];
    for kind in EngineKind::ALL {
        let Ok(engine) = lower(kind, forest) else { continue };
        let got = engine.predict_block(block).unwrap();
        assert_eq!(got.len(), 256);
        for (row, p) in block.rows().zip(&got.predictions) {
            assert_eq!(p.raw_score.to_bits(), predict_naive(forest, row).unwrap().raw_score.to_bits(), "{kind}");
        }
        let empty = arbor_core::SampleBlock::dense(0, 0, forest.num_features, vec![]).unwrap();
        assert!(engine.predict_block(&empty).unwrap().is_empty());
        let same = arbor_core::SampleBlock::dense(1, 0, forest.num_features, block.row(3).values().repeat(3)).unwrap();
        let p = engine.predict_block(&same).unwrap().predictions;
        assert!(p[0] == p[1] && p[1] == p[2]);
    }
}

#[test]
fn missing_values_follow_defaults_or_are_rejected() {
    let forest = Forest {
        trees: vec![Tree::new(vec![Node::internal(0, 0.5, 1, 2, Direction::Right), Node::leaf(1.0), Node::leaf(2.0)])],
        num_features: 1,
        kind: ModelKind::GradientBoosting,
        base_score: 0.0,
    };
    let block = arbor_core::SampleBlock::from_rows(0, 0, &[vec![None]]).unwrap();
    for kind in EngineKind::ALL {
        let engine = lower(kind, &forest).unwrap();
        let result = engine.predict_block(&block);
        if kind.supports_missing() {
            assert_eq!(result.unwrap().predictions[0].raw_score, 2.0, "{kind}");
        } else {
            assert!(matches!(result, Err(arbor_core::Error::MissingValueUnsupported { .. })), "{kind}");
        }
    }
}
