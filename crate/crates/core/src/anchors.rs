//! Dense per-class anchor grids.

use serde::{Deserialize, Serialize};

use crate::geom3d::Box3D;
use crate::{Error, Result};

/// Shape, rotations and selection thresholds of one object class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassAnchorSpec {
    pub class_name: String,
    /// `(l, w, h)` in meters.
    pub size: [f64; 3],
    pub z_center: f64,
    pub rotations: Vec<f64>,
    pub t_pos: f64,
    pub t_neg: f64,
}

impl ClassAnchorSpec {
    pub fn validate(&self) -> Result<()> {
        let name = &self.class_name;
        if !self.size.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::Param(format!("class {name}: size must be positive")));
        }
        if !self.z_center.is_finite() {
            return Err(Error::Param(format!(
                "class {name}: z_center must be finite"
            )));
        }
        if self.rotations.is_empty() || !self.rotations.iter().all(|r| r.is_finite()) {
            return Err(Error::Param(format!(
                "class {name}: rotations must be a non-empty list of finite angles"
            )));
        }
        if !(self.t_neg > 0.0 && self.t_pos > self.t_neg && self.t_pos < 1.0) {
            return Err(Error::Param(format!(
                "class {name}: thresholds need 0 < t_neg < t_pos < 1, got t_pos={} t_neg={}",
                self.t_pos, self.t_neg
            )));
        }
        Ok(())
    }

    pub fn car() -> Self {
        Self {
            class_name: "Car".into(),
            size: [3.9, 1.6, 1.56],
            z_center: -1.0,
            rotations: vec![0.0, std::f64::consts::FRAC_PI_2],
            t_pos: 0.6,
            t_neg: 0.45,
        }
    }

    pub fn pedestrian() -> Self {
        Self {
            class_name: "Pedestrian".into(),
            size: [0.8, 0.6, 1.73],
            z_center: -0.6 + 0.5 * 1.73,
            rotations: vec![0.0, std::f64::consts::FRAC_PI_2],
            t_pos: 0.5,
            t_neg: 0.35,
        }
    }

    pub fn cyclist() -> Self {
        Self {
            class_name: "Cyclist".into(),
            size: [1.76, 0.6, 1.73],
            z_center: -0.6 + 0.5 * 1.73,
            rotations: vec![0.0, std::f64::consts::FRAC_PI_2],
            t_pos: 0.5,
            t_neg: 0.35,
        }
    }

    /// Car, Pedestrian and Cyclist with their usual anchor shapes.
    pub fn kitti_defaults() -> Vec<Self> {
        vec![Self::car(), Self::pedestrian(), Self::cyclist()]
    }
}

/// BEV rectangle tiled by square cells of edge `stride`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BevRange {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub stride: f64,
}

impl Default for BevRange {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 70.4,
            y_min: -40.0,
            y_max: 40.0,
            stride: 0.4,
        }
    }
}

impl BevRange {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max, self.stride]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.y_max <= self.y_min || self.stride <= 0.0 {
            return Err(Error::Param(format!("invalid anchor range {self:?}")));
        }
        Ok(())
    }

    /// Whole cells along x and y.
    pub fn grid_dims(&self) -> (usize, usize) {
        (
            whole_cells(self.x_max - self.x_min, self.stride),
            whole_cells(self.y_max - self.y_min, self.stride),
        )
    }
}

// 70.4 / 0.4 evaluates to 175.99999999999997 in binary floating point.
fn whole_cells(span: f64, stride: f64) -> usize {
    let ratio = span / stride;
    (ratio + 1e-9 * ratio.max(1.0)).floor() as usize
}

/// One anchor per (cell center, rotation); row-major over y then x, with
/// rotations innermost.
pub fn generate_anchors(spec: &ClassAnchorSpec, range: &BevRange) -> Result<Vec<Box3D>> {
    spec.validate()?;
    range.validate()?;
    let (nx, ny) = range.grid_dims();
    if nx == 0 || ny == 0 {
        return Err(Error::Param(format!(
            "stride {} leaves no whole cell in range {range:?}",
            range.stride
        )));
    }
    let [l, w, h] = spec.size;
    let mut out = Vec::with_capacity(nx * ny * spec.rotations.len());
    for j in 0..ny {
        let y = range.y_min + (j as f64 + 0.5) * range.stride;
        for i in 0..nx {
            let x = range.x_min + (i as f64 + 0.5) * range.stride;
            for &yaw in &spec.rotations {
                out.push(Box3D {
                    cx: x,
                    cy: y,
                    cz: spec.z_center,
                    l,
                    w,
                    h,
                    yaw,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn spec(rotations: Vec<f64>) -> ClassAnchorSpec {
        ClassAnchorSpec {
            rotations,
            ..ClassAnchorSpec::car()
        }
    }

    #[test]
    fn small_grid_count_and_order() {
        let range = BevRange {
            x_min: 0.0,
            x_max: 4.0,
            y_min: 0.0,
            y_max: 4.0,
            stride: 2.0,
        };
        let anchors = generate_anchors(&spec(vec![0.0, FRAC_PI_2]), &range).unwrap();
        assert_eq!(anchors.len(), 8);
        let centers: Vec<(f64, f64, f64)> = anchors.iter().map(|a| (a.cx, a.cy, a.yaw)).collect();
        assert_eq!(
            centers,
            vec![
                (1.0, 1.0, 0.0),
                (1.0, 1.0, FRAC_PI_2),
                (3.0, 1.0, 0.0),
                (3.0, 1.0, FRAC_PI_2),
                (1.0, 3.0, 0.0),
                (1.0, 3.0, FRAC_PI_2),
                (3.0, 3.0, 0.0),
                (3.0, 3.0, FRAC_PI_2),
            ]
        );
    }

    #[test]
    fn single_cell() {
        let range = BevRange {
            x_min: -1.0,
            x_max: 1.0,
            y_min: 2.0,
            y_max: 3.5,
            stride: 1.5,
        };
        let s = spec(vec![0.3]);
        let anchors = generate_anchors(&s, &range).unwrap();
        assert_eq!(anchors.len(), 1);
        let a = anchors[0];
        assert_eq!((a.cx, a.cy, a.cz, a.yaw), (-0.25, 2.75, s.z_center, 0.3));
        assert_eq!([a.l, a.w, a.h], s.size);
    }

    #[test]
    fn kitti_range_count() {
        let range = BevRange::default();
        assert_eq!(range.grid_dims(), (176, 200));
        let anchors = generate_anchors(&spec(vec![0.0, FRAC_PI_2]), &range).unwrap();
        assert_eq!(anchors.len(), 70_400);
        assert!(anchors
            .iter()
            .all(|a| a.cx > 0.0 && a.cx < 70.4 && a.cy > -40.0 && a.cy < 40.0));
    }

    #[test]
    fn stride_larger_than_range() {
        let range = BevRange {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
            stride: 2.0,
        };
        assert!(matches!(
            generate_anchors(&spec(vec![0.0]), &range),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn invalid_specs() {
        let range = BevRange::default();
        let mut s = spec(vec![]);
        assert!(generate_anchors(&s, &range).is_err());
        s.rotations = vec![0.0];
        s.t_neg = 0.7;
        assert!(generate_anchors(&s, &range).is_err());
        s.t_neg = 0.45;
        s.size = [3.9, 0.0, 1.5];
        assert!(generate_anchors(&s, &range).is_err());
    }
}
