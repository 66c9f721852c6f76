#![allow(dead_code)]

use pass_core::anchors::ClassAnchorSpec;
use pass_core::assignment::{
    compute_bounds, legacy_assign, pass_score, ClassAnchors, GroundTruth, LabelKind,
    SelectionParams,
};
use pass_core::geom3d::{contains_point, iou_box, Box3D};
use pass_core::pointcloud::{EmptyUnionPolicy, Point, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-anchor outcome computed the slow way.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub s: f64,
    pub s_prime: f64,
    pub best_gt: Option<usize>,
    pub legacy: LabelKind,
    pub pass: LabelKind,
}

pub fn count_linear(cloud: &PointCloud, b: &Box3D) -> usize {
    cloud
        .points
        .iter()
        .filter(|p| contains_point(b, &p.position()))
        .count()
}

/// Point IoU by scanning every point against both boxes.
pub fn iou_point_linear(
    cloud: &PointCloud,
    gt: &Box3D,
    anchor: &Box3D,
    policy: EmptyUnionPolicy,
) -> (Option<f64>, usize, usize) {
    let (mut both, mut either) = (0, 0);
    for p in &cloud.points {
        let q = p.position();
        let (g, a) = (contains_point(gt, &q), contains_point(anchor, &q));
        both += (g && a) as usize;
        either += (g || a) as usize;
    }
    let ratio = if either > 0 {
        Some(both as f64 / either as f64)
    } else {
        match policy {
            EmptyUnionPolicy::Zero => Some(0.0),
            EmptyUnionPolicy::Skip => None,
        }
    };
    (ratio, both, either)
}

/// Every anchor against every same-class GT, no index and no prefilter.
pub fn reference_assign(
    cloud: &PointCloud,
    gts: &[GroundTruth],
    groups: &[ClassAnchors],
    specs: &[ClassAnchorSpec],
    params: &SelectionParams,
) -> Vec<Reference> {
    let mut out = Vec::new();
    for group in groups {
        let spec = specs
            .iter()
            .find(|s| s.class_name == group.class_name)
            .unwrap();
        let bounds = compute_bounds(spec.t_pos, spec.t_neg, params.k).unwrap();
        for anchor in &group.anchors {
            let mut s_max = 0.0f64;
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in gts.iter().enumerate() {
                if gt.class_name != spec.class_name {
                    continue;
                }
                let s = iou_box(&gt.bbox, anchor);
                s_max = s_max.max(s);
                let mut sp = s;
                if bounds.b_lower <= s && s <= bounds.b_upper {
                    let (ratio, _, _) =
                        iou_point_linear(cloud, &gt.bbox, anchor, params.empty_union_policy);
                    if let Some(r) = ratio {
                        sp = pass_score(s, r, &bounds, params.alpha, params.beta);
                    }
                }
                if best.is_none_or(|(_, b)| sp > b) {
                    best = Some((g, sp));
                }
            }
            let s_prime = best.map_or(0.0, |b| b.1);
            out.push(Reference {
                s: s_max,
                s_prime,
                best_gt: best.map(|b| b.0),
                legacy: legacy_assign(s_max, spec.t_pos, spec.t_neg),
                pass: legacy_assign(s_prime, spec.t_pos, spec.t_neg),
            });
        }
    }
    out
}

pub fn random_box(rng: &mut ChaCha8Rng, span: f64) -> Box3D {
    Box3D {
        cx: rng.random_range(-span..span),
        cy: rng.random_range(-span..span),
        cz: rng.random_range(-1.0..1.0),
        l: rng.random_range(0.5..5.0),
        w: rng.random_range(0.5..3.0),
        h: rng.random_range(0.5..2.5),
        yaw: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    }
}

/// A copy of `b` shifted, resized and turned by small random amounts.
pub fn jitter(rng: &mut ChaCha8Rng, b: &Box3D, amount: f64) -> Box3D {
    let mut scale = || 1.0 + rng.random_range(-0.3..0.3) * amount;
    let (l, w, h) = (b.l * scale(), b.w * scale(), b.h * scale());
    Box3D {
        cx: b.cx + rng.random_range(-1.0..1.0) * amount * b.l,
        cy: b.cy + rng.random_range(-1.0..1.0) * amount * b.w,
        cz: b.cz + rng.random_range(-0.5..0.5) * amount * b.h,
        l,
        w,
        h,
        yaw: b.yaw + rng.random_range(-0.8..0.8) * amount,
    }
}

/// Uniform point inside `b`, shrunk by `margin` of each extent.
pub fn point_in(rng: &mut ChaCha8Rng, b: &Box3D, margin: f64) -> Point {
    let half = 0.5 - margin;
    let u = rng.random_range(-half..half) * b.l;
    let v = rng.random_range(-half..half) * b.w;
    let z = b.cz + rng.random_range(-half..half) * b.h;
    let (sin, cos) = b.yaw.sin_cos();
    Point::new(
        (b.cx + cos * u - sin * v) as f32,
        (b.cy + sin * u + cos * v) as f32,
        z as f32,
        0.5,
    )
}

pub struct SmallScene {
    pub cloud: PointCloud,
    pub gts: Vec<GroundTruth>,
    pub groups: Vec<ClassAnchors>,
    pub specs: Vec<ClassAnchorSpec>,
}

/// A scene with up to `max_gts` boxes, anchors clustered around them so
/// that many pairs land in the band, and points both inside boxes and
/// scattered around.
pub fn small_scene(seed: u64, max_gts: usize, max_anchors: usize, max_points: usize) -> SmallScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = ClassAnchorSpec::kitti_defaults();
    let span = 12.0;
    let n_gts = rng.random_range(0..=max_gts);
    let gts: Vec<GroundTruth> = (0..n_gts)
        .map(|_| {
            let c = &specs[rng.random_range(0..specs.len())];
            let mut b = random_box(&mut rng, span);
            b.l = c.size[0] * rng.random_range(0.8..1.2);
            b.w = c.size[1] * rng.random_range(0.8..1.2);
            b.h = c.size[2] * rng.random_range(0.8..1.2);
            GroundTruth::new(b, c.class_name.clone())
        })
        .collect();

    let n_anchors = rng.random_range(1..=max_anchors);
    let mut groups: Vec<ClassAnchors> = specs
        .iter()
        .map(|c| ClassAnchors {
            class_name: c.class_name.clone(),
            anchors: Vec::new(),
        })
        .collect();
    for _ in 0..n_anchors {
        let gi = rng.random_range(0..groups.len());
        let same: Vec<&GroundTruth> = gts
            .iter()
            .filter(|g| g.class_name == groups[gi].class_name)
            .collect();
        let a = if !same.is_empty() && rng.random_bool(0.8) {
            let g = same[rng.random_range(0..same.len())];
            let amount = rng.random_range(0.0..0.6);
            jitter(&mut rng, &g.bbox, amount)
        } else {
            random_box(&mut rng, span)
        };
        groups[gi].anchors.push(a);
    }

    let n_points = rng.random_range(0..=max_points);
    let mut points = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        if !gts.is_empty() && rng.random_bool(0.6) {
            let g = &gts[rng.random_range(0..gts.len())];
            // Slightly oversized so some points fall just outside.
            let mut b = g.bbox;
            b.l *= 1.2;
            b.w *= 1.2;
            b.h *= 1.2;
            points.push(point_in(&mut rng, &b, 0.0));
        } else {
            points.push(Point::new(
                rng.random_range(-span..span) as f32,
                rng.random_range(-span..span) as f32,
                rng.random_range(-2.0..2.0) as f32,
                0.1,
            ));
        }
    }
    SmallScene {
        cloud: PointCloud::new(points),
        gts,
        groups,
        specs,
    }
}

/// Volume IoU by sampling `n` points in each box.
pub fn monte_carlo_iou(a: &Box3D, b: &Box3D, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hit = |src: &Box3D, dst: &Box3D| {
        let (sin, cos) = src.yaw.sin_cos();
        let mut k = 0usize;
        for _ in 0..n {
            let u = rng.random_range(-0.5..0.5) * src.l;
            let v = rng.random_range(-0.5..0.5) * src.w;
            let p = pass_core::geom3d::Vec3::new(
                src.cx + cos * u - sin * v,
                src.cy + sin * u + cos * v,
                src.cz + rng.random_range(-0.5..0.5) * src.h,
            );
            k += contains_point(dst, &p) as usize;
        }
        k as f64 / n as f64
    };
    // Average the two estimates of the intersection volume.
    let inter = 0.5 * (hit(a, b) * a.volume() + hit(b, a) * b.volume());
    inter / (a.volume() + b.volume() - inter)
}
