//! RANSAC ground-plane fitting and removal.
//!
//! Ground returns fall inside almost every object and anchor box and inflate
//! point-count IoU, so they are removed once per scene before any point IoU
//! is computed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pointcloud::PointCloud;
use crate::{Error, Result};

/// Plane `a*x + b*y + c*z + d = 0` with a unit normal oriented towards +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Plane {
    /// Plane through three points, or `None` when they are (nearly) collinear.
    pub fn through(p0: [f64; 3], p1: [f64; 3], p2: [f64; 3]) -> Option<Plane> {
        let u = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
        let v = [p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]];
        let mut n = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let scale = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
            * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !norm.is_finite() || norm <= 1e-12 * scale {
            return None;
        }
        if n[2] < 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
        let (a, b, c) = (n[0] / norm, n[1] / norm, n[2] / norm);
        Some(Plane {
            a,
            b,
            c,
            d: -(a * p0[0] + b * p0[1] + c * p0[2]),
        })
    }

    #[inline]
    pub fn signed_distance(&self, x: f64, y: f64, z: f64) -> f64 {
        self.a * x + self.b * y + self.c * z + self.d
    }

    /// Angle between the normal and +z, radians.
    pub fn tilt(&self) -> f64 {
        self.c.abs().clamp(0.0, 1.0).acos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundRemovalParams {
    /// Inlier band half-width, meters.
    pub dist_thresh: f64,
    pub iterations: usize,
    /// Largest accepted angle between the plane normal and +z, radians.
    pub max_normal_tilt: f64,
    pub seed: u64,
    pub min_inlier_fraction: f64,
}

impl Default for GroundRemovalParams {
    fn default() -> Self {
        Self {
            dist_thresh: 0.2,
            iterations: 100,
            max_normal_tilt: 30f64.to_radians(),
            seed: 0,
            min_inlier_fraction: 0.2,
        }
    }
}

impl GroundRemovalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dist_thresh > 0.0 && self.dist_thresh.is_finite()) {
            return Err(Error::Param(format!(
                "ground.dist_thresh must be positive, got {}",
                self.dist_thresh
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Param("ground.iterations must be at least 1".into()));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.max_normal_tilt) {
            return Err(Error::Param(format!(
                "ground.max_normal_tilt must lie in [0, pi/2], got {}",
                self.max_normal_tilt
            )));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(Error::Param(format!(
                "ground.min_inlier_fraction must lie in [0, 1], got {}",
                self.min_inlier_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlaneFit {
    Found {
        plane: Plane,
        /// Parallel to the input cloud; `true` marks a plane inlier.
        inliers: Vec<bool>,
        inlier_count: usize,
    },
    NoPlaneFound,
}

/// Fits the dominant near-horizontal plane by RANSAC over random 3-point
/// samples. The result depends only on the cloud and `params` (including
/// the seed).
pub fn ransac_plane(cloud: &PointCloud, params: &GroundRemovalParams) -> Result<PlaneFit> {
    params.validate()?;
    let n = cloud.len();
    if n < 3 {
        return Err(Error::Input(format!(
            "need ≥3 points for a ground fit, cloud has {n}"
        )));
    }
    let pts: Vec<[f64; 3]> = cloud
        .points
        .iter()
        .map(|p| [p.x as f64, p.y as f64, p.z as f64])
        .collect();
    let count_inliers = |plane: &Plane| {
        pts.iter()
            .filter(|p| plane.signed_distance(p[0], p[1], p[2]).abs() <= params.dist_thresh)
            .count()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Plane, usize)> = None;
    for _ in 0..params.iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let mut k = rng.random_range(0..n - 2);
        for taken in [i.min(j), i.max(j)] {
            if k >= taken {
                k += 1;
            }
        }
        let Some(plane) = Plane::through(pts[i], pts[j], pts[k]) else {
            continue;
        };
        if plane.tilt() > params.max_normal_tilt {
            continue;
        }
        let count = count_inliers(&plane);
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((plane, count));
        }
    }

    match best {
        Some((plane, count)) if count as f64 >= params.min_inlier_fraction * n as f64 => {
            let inliers: Vec<bool> = pts
                .iter()
                .map(|p| plane.signed_distance(p[0], p[1], p[2]).abs() <= params.dist_thresh)
                .collect();
            Ok(PlaneFit::Found {
                plane,
                inliers,
                inlier_count: count,
            })
        }
        _ => Ok(PlaneFit::NoPlaneFound),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundRemoval {
    pub cloud: PointCloud,
    /// `kept_indices[i]` is the original index of `cloud.points[i]`.
    pub kept_indices: Vec<usize>,
    /// The removed plane; `None` when no plane was found.
    pub plane: Option<Plane>,
    /// Set when no plane qualified and the cloud was returned unchanged.
    pub no_plane_warning: bool,
}

impl GroundRemoval {
    pub fn removed_count(&self, original_len: usize) -> usize {
        original_len - self.kept_indices.len()
    }
}

/// Drops the inliers of the fitted ground plane.
pub fn remove_ground(cloud: &PointCloud, params: &GroundRemovalParams) -> Result<GroundRemoval> {
    match ransac_plane(cloud, params)? {
        PlaneFit::Found { plane, inliers, .. } => {
            let kept_indices: Vec<usize> = inliers
                .iter()
                .enumerate()
                .filter(|(_, &is_ground)| !is_ground)
                .map(|(i, _)| i)
                .collect();
            Ok(GroundRemoval {
                cloud: cloud.select(&kept_indices),
                kept_indices,
                plane: Some(plane),
                no_plane_warning: false,
            })
        }
        PlaneFit::NoPlaneFound => {
            log::warn!(
                "no ground plane found in {} points; cloud left unchanged",
                cloud.len()
            );
            Ok(GroundRemoval {
                cloud: cloud.clone(),
                kept_indices: (0..cloud.len()).collect(),
                plane: None,
                no_plane_warning: true,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::Point;
    use rand_distr::{Distribution, Normal};

    fn flat_plus_outliers() -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                pts.push(Point::new(i as f32, j as f32, 0.0, 0.0));
            }
        }
        for i in 0..10 {
            pts.push(Point::new(i as f32 * 0.5, 1.0, 5.0, 0.0));
        }
        PointCloud::new(pts)
    }

    #[test]
    fn exact_plane_recovered() {
        let cloud = flat_plus_outliers();
        let params = GroundRemovalParams::default();
        let PlaneFit::Found {
            plane,
            inlier_count,
            inliers,
        } = ransac_plane(&cloud, &params).unwrap()
        else {
            panic!("expected a plane");
        };
        assert_eq!(inlier_count, 100);
        assert_eq!(inliers.iter().filter(|&&b| b).count(), 100);
        assert!(plane.a.abs() < 1e-9 && plane.b.abs() < 1e-9);
        assert!((plane.c - 1.0).abs() < 1e-9 && plane.d.abs() < 1e-9);
        let norm = (plane.a * plane.a + plane.b * plane.b + plane.c * plane.c).sqrt();
        assert!((norm - 1.0).abs() < 1e-9);

        let removed = remove_ground(&cloud, &params).unwrap();
        assert_eq!(removed.cloud.len(), 10);
        assert_eq!(removed.kept_indices, (100..110).collect::<Vec<_>>());
        assert!(!removed.no_plane_warning);
    }

    #[test]
    fn vertical_wall_is_rejected() {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                pts.push(Point::new(0.0, i as f32, j as f32, 0.0));
            }
        }
        let cloud = PointCloud::new(pts);
        let params = GroundRemovalParams::default();
        assert_eq!(
            ransac_plane(&cloud, &params).unwrap(),
            PlaneFit::NoPlaneFound
        );
        let out = remove_ground(&cloud, &params).unwrap();
        assert!(out.no_plane_warning);
        assert_eq!(out.cloud, cloud);
        assert_eq!(out.kept_indices, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_points() {
        let cloud = PointCloud::new(vec![Point::default(); 2]);
        assert!(matches!(
            ransac_plane(&cloud, &GroundRemovalParams::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn collinear_samples_are_skipped() {
        let cloud = PointCloud::new(
            (0..20)
                .map(|i| Point::new(i as f32, 0.0, 0.0, 0.0))
                .collect(),
        );
        assert_eq!(
            ransac_plane(&cloud, &GroundRemovalParams::default()).unwrap(),
            PlaneFit::NoPlaneFound
        );
    }

    #[test]
    fn noisy_plane_with_outliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut pts = Vec::new();
        for _ in 0..800 {
            let x = rng.random_range(-30.0..30.0);
            let y = rng.random_range(-30.0..30.0);
            pts.push(Point::new(
                x,
                y,
                (-1.7 + noise.sample(&mut rng)) as f32,
                0.0,
            ));
        }
        for _ in 0..200 {
            pts.push(Point::new(
                rng.random_range(-30.0..30.0),
                rng.random_range(-30.0..30.0),
                rng.random_range(-1.0..3.0),
                0.0,
            ));
        }
        let cloud = PointCloud::new(pts);
        let PlaneFit::Found { plane, .. } =
            ransac_plane(&cloud, &GroundRemovalParams::default()).unwrap()
        else {
            panic!("expected a plane");
        };
        assert!((plane.d - 1.7).abs() <= 0.1, "{plane:?}");
    }

    #[test]
    fn deterministic_for_seed() {
        let cloud = flat_plus_outliers();
        let params = GroundRemovalParams {
            seed: 1234,
            ..Default::default()
        };
        assert_eq!(
            ransac_plane(&cloud, &params).unwrap(),
            ransac_plane(&cloud, &params).unwrap()
        );
    }

    #[test]
    fn params_validated() {
        let bad = [
            GroundRemovalParams {
                dist_thresh: 0.0,
                ..Default::default()
            },
            GroundRemovalParams {
                iterations: 0,
                ..Default::default()
            },
            GroundRemovalParams {
                max_normal_tilt: 2.0,
                ..Default::default()
            },
            GroundRemovalParams {
                min_inlier_fraction: 1.5,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(Error::Param(_))), "{p:?}");
        }
    }
}
