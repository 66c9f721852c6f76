//! Timing of threshold-rule versus point-assisted assignment on synthetic
//! scenes.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::{Duration, Instant};

use crate::assignment::{assign_scene, AssignMode, AssignOptions, AssignmentResult};
use crate::config::RunConfig;
use crate::ground::remove_ground;
use crate::pointcloud::build_index;
use crate::stats::{crossing_matrix, CrossingMatrix};
use crate::synth::{synthetic_scene, SyntheticSpec};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSpec {
    pub scenes: usize,
    pub n_gts: usize,
    pub n_points: usize,
    pub seed: u64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            scenes: 1,
            n_gts: 20,
            n_points: 120_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub scenes: usize,
    pub anchors_per_scene: usize,
    pub ground: Duration,
    /// Threshold-rule assignment only.
    pub legacy: Duration,
    /// Index construction plus point-assisted assignment.
    pub pass: Duration,
    pub crossing: CrossingMatrix,
    /// Hash of every label and score bit pattern, for determinism checks.
    pub digest: u64,
}

impl BenchReport {
    pub fn overhead_ratio(&self) -> f64 {
        self.pass.as_secs_f64() / self.legacy.as_secs_f64().max(1e-12)
    }

    pub fn anchors_per_second(&self, d: Duration) -> f64 {
        (self.scenes * self.anchors_per_scene) as f64 / d.as_secs_f64().max(1e-12)
    }
}

fn digest(hasher: &mut DefaultHasher, results: &[AssignmentResult]) {
    for r in results {
        (r.anchor_index, r.best_gt, r.legacy_label, r.pass_label).hash(hasher);
        (
            r.s.to_bits(),
            r.s_prime.to_bits(),
            r.iou_point.map(f64::to_bits),
        )
            .hash(hasher);
    }
}

pub fn run_bench(config: &RunConfig, spec: &BenchSpec) -> Result<BenchReport> {
    config.validate()?;
    let anchors = config.anchors()?;
    let mut report = BenchReport {
        scenes: spec.scenes,
        anchors_per_scene: anchors.iter().map(|g| g.anchors.len()).sum(),
        ground: Duration::ZERO,
        legacy: Duration::ZERO,
        pass: Duration::ZERO,
        crossing: CrossingMatrix::default(),
        digest: 0,
    };
    let mut hasher = DefaultHasher::new();
    for i in 0..spec.scenes {
        let synth = SyntheticSpec {
            n_gts: spec.n_gts,
            n_points: spec.n_points,
            seed: spec.seed.wrapping_add(i as u64),
            ..Default::default()
        };
        let scene = synthetic_scene(&synth, &config.classes, &config.range);

        let t = Instant::now();
        let cloud = if config.ground_removal_enabled && scene.cloud.len() >= 3 {
            remove_ground(&scene.cloud, &config.ground)?.cloud
        } else {
            scene.cloud.clone()
        };
        report.ground += t.elapsed();

        let t = Instant::now();
        let legacy = assign_scene(
            &cloud,
            None,
            &scene.gts,
            &anchors,
            &config.classes,
            &config.selection,
            AssignOptions {
                mode: AssignMode::Legacy,
                record_best_point_iou: false,
            },
        )?;
        report.legacy += t.elapsed();

        let t = Instant::now();
        let index = build_index(&cloud, config.cell_size)?;
        let pass = assign_scene(
            &cloud,
            Some(&index),
            &scene.gts,
            &anchors,
            &config.classes,
            &config.selection,
            AssignOptions::default(),
        )?;
        report.pass += t.elapsed();

        debug_assert!(legacy
            .iter()
            .zip(&pass)
            .all(|(l, p)| l.legacy_label == p.legacy_label));
        report.crossing.merge(&crossing_matrix(&pass));
        digest(&mut hasher, &pass);
    }
    report.digest = hasher.finish();
    Ok(report)
}
