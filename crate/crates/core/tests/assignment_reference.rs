mod common;

use pass_core::assignment::{
    assign_scene, AssignMode, AssignOptions, AssignmentResult, LabelKind, SelectionParams,
};
use pass_core::pointcloud::{build_index, EmptyUnionPolicy};
use pass_core::stats::crossing_matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params_for(seed: u64) -> SelectionParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SelectionParams {
        k: rng.random_range(1.0..20.0),
        empty_union_policy: if rng.random_bool(0.5) {
            EmptyUnionPolicy::Zero
        } else {
            EmptyUnionPolicy::Skip
        },
        ..Default::default()
    }
}

fn run(
    scene: &common::SmallScene,
    params: &SelectionParams,
    indexed: bool,
    options: AssignOptions,
) -> Vec<AssignmentResult> {
    let index = build_index(&scene.cloud, 1.0).unwrap();
    assign_scene(
        &scene.cloud,
        indexed.then_some(&index),
        &scene.gts,
        &scene.groups,
        &scene.specs,
        params,
        options,
    )
    .unwrap()
}

#[test]
fn matches_brute_force_reference() {
    let mut in_band = 0usize;
    for seed in 0..300u64 {
        let scene = common::small_scene(seed, 10, 200, 2000);
        let params = params_for(seed);
        let expected = common::reference_assign(
            &scene.cloud,
            &scene.gts,
            &scene.groups,
            &scene.specs,
            &params,
        );
        for indexed in [false, true] {
            let got = run(&scene, &params, indexed, AssignOptions::default());
            assert_eq!(got.len(), expected.len());
            for (i, (g, e)) in got.iter().zip(&expected).enumerate() {
                assert_eq!(g.anchor_index, i);
                assert_eq!(g.s, e.s, "seed {seed} anchor {i}");
                assert_eq!(g.s_prime, e.s_prime, "seed {seed} anchor {i}");
                assert_eq!(g.best_gt, e.best_gt, "seed {seed} anchor {i}");
                assert_eq!(g.legacy_label.kind(), e.legacy, "seed {seed} anchor {i}");
                assert_eq!(g.pass_label.kind(), e.pass, "seed {seed} anchor {i}");
                if g.s_prime != g.s {
                    in_band += 1;
                }
            }
        }
    }
    assert!(
        in_band > 1000,
        "too few rescored anchors ({in_band}) to be meaningful"
    );
}

#[test]
fn positive_labels_name_their_gt() {
    for seed in 0..50u64 {
        let scene = common::small_scene(seed, 8, 150, 1500);
        for r in run(
            &scene,
            &SelectionParams::default(),
            true,
            AssignOptions::default(),
        ) {
            if let pass_core::assignment::SampleLabel::Positive(g) = r.pass_label {
                assert_eq!(Some(g), r.best_gt);
                assert_eq!(
                    scene.gts[g].class_name,
                    scene.specs[r.class_index].class_name
                );
            }
        }
    }
}

#[test]
fn plain_weights_reproduce_threshold_labels() {
    let params = SelectionParams {
        alpha: 1.0,
        beta: 0.0,
        ..Default::default()
    };
    for seed in 0..100u64 {
        let scene = common::small_scene(seed, 10, 200, 2000);
        for r in run(&scene, &params, true, AssignOptions::default()) {
            assert_eq!(r.pass_label.kind(), r.legacy_label.kind());
            assert_eq!(r.s_prime, r.s);
        }
    }
}

#[test]
fn threshold_mode_evaluates_no_point_iou() {
    let options = AssignOptions {
        mode: AssignMode::Legacy,
        record_best_point_iou: false,
    };
    for seed in 0..30u64 {
        let scene = common::small_scene(seed, 10, 200, 2000);
        for r in run(&scene, &SelectionParams::default(), false, options) {
            assert_eq!(r.pass_label, r.legacy_label);
            assert_eq!(r.iou_point, None);
        }
    }
}

#[test]
fn diagnostics_leave_labels_alone() {
    let options = AssignOptions {
        mode: AssignMode::Pass,
        record_best_point_iou: true,
    };
    for seed in 0..40u64 {
        let scene = common::small_scene(seed, 10, 200, 2000);
        let params = params_for(seed);
        let plain = run(&scene, &params, true, AssignOptions::default());
        let recorded = run(&scene, &params, true, options);
        for (p, r) in plain.iter().zip(&recorded) {
            assert_eq!(
                (p.s, p.s_prime, p.best_gt, p.pass_label),
                (r.s, r.s_prime, r.best_gt, r.pass_label)
            );
            if p.iou_point.is_some() {
                assert_eq!(p.iou_point, r.iou_point);
            }
        }
    }
}

#[test]
fn no_crossings_between_positive_and_negative() {
    for seed in 0..200u64 {
        let scene = common::small_scene(seed, 10, 200, 2000);
        let results = run(&scene, &params_for(seed), true, AssignOptions::default());
        let m = crossing_matrix(&results);
        assert_eq!(
            m.get(LabelKind::Negative, LabelKind::Positive),
            0,
            "seed {seed}"
        );
        assert_eq!(
            m.get(LabelKind::Positive, LabelKind::Negative),
            0,
            "seed {seed}"
        );
        assert_eq!(m.total() as usize, results.len());
    }
}

#[test]
fn deterministic_across_runs() {
    let scene = common::small_scene(7, 10, 200, 2000);
    let params = SelectionParams::default();
    let a = run(&scene, &params, true, AssignOptions::default());
    let b = run(&scene, &params, true, AssignOptions::default());
    assert_eq!(a, b);
}

#[test]
fn scene_without_gts_is_all_negative() {
    let mut scene = common::small_scene(3, 0, 50, 100);
    scene.gts.clear();
    for r in run(
        &scene,
        &SelectionParams::default(),
        true,
        AssignOptions::default(),
    ) {
        assert_eq!(r.best_gt, None);
        assert_eq!(r.pass_label.kind(), LabelKind::Negative);
        assert_eq!(r.legacy_label.kind(), LabelKind::Negative);
    }
}

#[test]
fn unknown_gt_class_is_an_input_error() {
    let mut scene = common::small_scene(5, 3, 20, 100);
    let b = common::random_box(&mut ChaCha8Rng::seed_from_u64(0), 2.0);
    scene
        .gts
        .push(pass_core::assignment::GroundTruth::new(b, "Tram"));
    let err = assign_scene(
        &scene.cloud,
        None,
        &scene.gts,
        &scene.groups,
        &scene.specs,
        &SelectionParams::default(),
        AssignOptions::default(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("Tram"), "{err}");
}
