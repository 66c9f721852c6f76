//! Seeded synthetic scenes: a noisy ground plane, point-populated objects
//! and uniform clutter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::anchors::{BevRange, ClassAnchorSpec};
use crate::assignment::GroundTruth;
use crate::geom3d::Box3D;
use crate::pointcloud::{Point, PointCloud};

/// Height of the synthetic ground plane, meters.
pub const GROUND_Z: f64 = -1.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_gts: usize,
    pub n_points: usize,
    /// Share of points on the ground plane.
    pub ground_fraction: f64,
    /// Share of points inside objects; the rest is clutter.
    pub object_fraction: f64,
    pub ground_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_gts: 20,
            n_points: 120_000,
            ground_fraction: 0.5,
            object_fraction: 0.3,
            ground_noise: 0.03,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub cloud: PointCloud,
    pub gts: Vec<GroundTruth>,
}

/// Ground truths take a class uniformly from `classes`, that class's anchor
/// size scaled by up to +-15%, its anchor height, and a random yaw.
pub fn synthetic_scene(
    spec: &SyntheticSpec,
    classes: &[ClassAnchorSpec],
    range: &BevRange,
) -> SyntheticScene {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gts: Vec<GroundTruth> = if classes.is_empty() {
        Vec::new()
    } else {
        (0..spec.n_gts)
            .map(|_| {
                let c = &classes[rng.random_range(0..classes.len())];
                let mut scale = || rng.random_range(0.85..1.15);
                let [l, w, h] = c.size;
                let (l, w, h) = (l * scale(), w * scale(), h * scale());
                let b = Box3D {
                    cx: rng.random_range(range.x_min..range.x_max),
                    cy: rng.random_range(range.y_min..range.y_max),
                    cz: c.z_center + rng.random_range(-0.1..0.1),
                    l,
                    w,
                    h,
                    yaw: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                };
                GroundTruth::new(b, c.class_name.clone())
            })
            .collect()
    };

    let n_ground = (spec.n_points as f64 * spec.ground_fraction).round() as usize;
    let n_object = if gts.is_empty() {
        0
    } else {
        ((spec.n_points as f64 * spec.object_fraction).round() as usize)
            .min(spec.n_points - n_ground)
    };
    let n_clutter = spec.n_points - n_ground - n_object;
    let noise = Normal::new(0.0, spec.ground_noise.max(0.0)).expect("finite noise");

    let mut points = Vec::with_capacity(spec.n_points);
    for _ in 0..n_ground {
        points.push(Point::new(
            rng.random_range(range.x_min..range.x_max) as f32,
            rng.random_range(range.y_min..range.y_max) as f32,
            (GROUND_Z + noise.sample(&mut rng)) as f32,
            rng.random_range(0.0..0.3),
        ));
    }
    for k in 0..n_object {
        let b = &gts[k % gts.len()].bbox;
        let (sin, cos) = b.yaw.sin_cos();
        // Shrink slightly so f32 rounding keeps points inside.
        let u = rng.random_range(-0.49..0.49) * b.l;
        let v = rng.random_range(-0.49..0.49) * b.w;
        let z = b.cz + rng.random_range(-0.49..0.49) * b.h;
        points.push(Point::new(
            (b.cx + cos * u - sin * v) as f32,
            (b.cy + sin * u + cos * v) as f32,
            z as f32,
            rng.random_range(0.2..1.0),
        ));
    }
    for _ in 0..n_clutter {
        points.push(Point::new(
            rng.random_range(range.x_min..range.x_max) as f32,
            rng.random_range(range.y_min..range.y_max) as f32,
            (GROUND_Z + rng.random_range(0.0..3.0)) as f32,
            rng.random_range(0.0..1.0),
        ));
    }

    SyntheticScene {
        cloud: PointCloud::new(points),
        gts,
    }
}
