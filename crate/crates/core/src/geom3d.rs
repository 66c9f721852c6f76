//! Geometry kernels for yaw-rotated cuboids.
//!
//! Boxes are prisms along +z, so the volume intersection of two boxes is the
//! area of their bird's-eye-view (BEV) footprint intersection times the
//! overlap of their z intervals. Footprint intersection uses convex polygon
//! clipping (Sutherland-Hodgman); both footprints are rectangles, hence
//! convex.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Vertices closer than this (meters) are merged after clipping.
pub const VERTEX_EPS: f64 = 1e-9;

/// Tolerance on the signed edge function when classifying a vertex as
/// inside a clipping half-plane.
const HALF_PLANE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// A cuboid rotated about +z: center, extents along its local x (length),
/// y (width) and z (height) axes, and yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub yaw: f64,
}

impl Box3D {
    /// Builds a box, rejecting non-finite fields and non-positive extents.
    pub fn new(cx: f64, cy: f64, cz: f64, l: f64, w: f64, h: f64, yaw: f64) -> Result<Self> {
        let b = Self {
            cx,
            cy,
            cz,
            l,
            w,
            h,
            yaw,
        };
        b.validate()?;
        Ok(b)
    }

    /// Box from the `[x, y, z, l, w, h, yaw]` tuple order.
    pub fn from_array(v: [f64; 7]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6])
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.cx, self.cy, self.cz, self.l, self.w, self.h, self.yaw]
    }

    pub fn validate(&self) -> Result<()> {
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::Input(format!("box has non-finite field: {self:?}")));
        }
        if !(self.l > 0.0 && self.w > 0.0 && self.h > 0.0) {
            return Err(Error::Input(format!(
                "box extents must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(self.cx, self.cy, self.cz)
    }

    pub fn volume(&self) -> f64 {
        self.l * self.w * self.h
    }

    pub fn z_min(&self) -> f64 {
        self.cz - 0.5 * self.h
    }

    pub fn z_max(&self) -> f64 {
        self.cz + 0.5 * self.h
    }

    /// Precomputes the rotation for repeated containment tests.
    pub fn frame(&self) -> BoxFrame {
        let (sin, cos) = self.yaw.sin_cos();
        BoxFrame {
            cx: self.cx,
            cy: self.cy,
            cz: self.cz,
            half_l: 0.5 * self.l,
            half_w: 0.5 * self.w,
            half_h: 0.5 * self.h,
            cos,
            sin,
        }
    }

    /// Axis-aligned bounds of the BEV footprint.
    pub fn bev_aabb(&self) -> Aabb2 {
        let (sin, cos) = self.yaw.sin_cos();
        let ex = 0.5 * (self.l * cos.abs() + self.w * sin.abs());
        let ey = 0.5 * (self.l * sin.abs() + self.w * cos.abs());
        Aabb2 {
            min: [self.cx - ex, self.cy - ey],
            max: [self.cx + ex, self.cy + ey],
        }
    }
}

/// A box with its yaw rotation resolved, for containment tests in a loop.
#[derive(Debug, Clone, Copy)]
pub struct BoxFrame {
    cx: f64,
    cy: f64,
    cz: f64,
    half_l: f64,
    half_w: f64,
    half_h: f64,
    cos: f64,
    sin: f64,
}

impl BoxFrame {
    /// Boundary-inclusive containment of `(x, y, z)`.
    #[inline]
    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        let dz = z - self.cz;
        if dz.abs() > self.half_h {
            return false;
        }
        let tx = x - self.cx;
        let ty = y - self.cy;
        let dx = self.cos * tx + self.sin * ty;
        let dy = -self.sin * tx + self.cos * ty;
        dx.abs() <= self.half_l && dy.abs() <= self.half_w
    }
}

/// Axis-aligned rectangle in the BEV plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb2 {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Aabb2 {
    /// Closed-interval overlap test.
    pub fn intersects(&self, other: &Aabb2) -> bool {
        self.min[0] <= other.max[0]
            && other.min[0] <= self.max[0]
            && self.min[1] <= other.max[1]
            && other.min[1] <= self.max[1]
    }
}

/// Convex polygon in the BEV plane, counter-clockwise. Empty when two
/// footprints do not intersect in a region of positive area.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BevPolygon {
    pub vertices: Vec<[f64; 2]>,
}

impl BevPolygon {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; positive for counter-clockwise order.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let [x0, y0] = self.vertices[i];
            let [x1, y1] = self.vertices[(i + 1) % n];
            acc += x0 * y1 - x1 * y0;
        }
        0.5 * acc
    }

    pub fn area(&self) -> f64 {
        self.signed_area().max(0.0)
    }

    /// Checks that every turn is a left turn (collinear runs allowed up to
    /// `tol` in the cross product).
    pub fn is_convex_ccw(&self, tol: f64) -> bool {
        let n = self.vertices.len();
        if n == 0 {
            return true;
        }
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            cross(a, b, c) >= -tol
        }) && self.signed_area() > 0.0
    }
}

/// Signed area of the parallelogram spanned by `b - a` and `c - a`;
/// positive when `c` lies left of the directed line `a -> b`.
#[inline]
fn cross(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// The four footprint corners, counter-clockwise, starting at the
/// front-left corner in the box frame.
pub fn box_corners_bev(b: &Box3D) -> BevPolygon {
    let (sin, cos) = b.yaw.sin_cos();
    let hl = 0.5 * b.l;
    let hw = 0.5 * b.w;
    let local = [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]];
    BevPolygon {
        vertices: local
            .iter()
            .map(|&[x, y]| [b.cx + cos * x - sin * y, b.cy + sin * x + cos * y])
            .collect(),
    }
}

/// Boundary-inclusive point-in-box test.
pub fn contains_point(b: &Box3D, p: &Vec3) -> bool {
    b.frame().contains(p.x, p.y, p.z)
}

/// Clips `subject` against every edge of the convex, counter-clockwise
/// polygon `clip`.
pub fn clip_convex(subject: &BevPolygon, clip: &BevPolygon) -> BevPolygon {
    let mut output = subject.vertices.clone();
    let n = clip.vertices.len();
    let mut input = Vec::with_capacity(8);
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip.vertices[i];
        let b = clip.vertices[(i + 1) % n];
        std::mem::swap(&mut input, &mut output);
        output.clear();
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let next = input[(j + 1) % m];
            let dc = cross(a, b, cur);
            let dn = cross(a, b, next);
            let cur_in = dc >= -HALF_PLANE_EPS;
            let next_in = dn >= -HALF_PLANE_EPS;
            if cur_in {
                output.push(cur);
            }
            if cur_in != next_in {
                let t = dc / (dc - dn);
                output.push([
                    cur[0] + t * (next[0] - cur[0]),
                    cur[1] + t * (next[1] - cur[1]),
                ]);
            }
        }
    }
    dedup_vertices(&mut output);
    if output.len() < 3 {
        output.clear();
    }
    let poly = BevPolygon { vertices: output };
    if poly.signed_area() <= 0.0 {
        return BevPolygon::default();
    }
    poly
}

fn dedup_vertices(v: &mut Vec<[f64; 2]>) {
    let close = |p: [f64; 2], q: [f64; 2]| {
        (p[0] - q[0]).abs() <= VERTEX_EPS && (p[1] - q[1]).abs() <= VERTEX_EPS
    };
    v.dedup_by(|cur, prev| close(*cur, *prev));
    while v.len() > 1 && close(v[0], v[v.len() - 1]) {
        v.pop();
    }
}

/// BEV intersection polygon of two box footprints.
pub fn bev_intersection(a: &Box3D, b: &Box3D) -> BevPolygon {
    clip_convex(&box_corners_bev(a), &box_corners_bev(b))
}

/// Area of the intersection of the two BEV footprints.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    if !a.bev_aabb().intersects(&b.bev_aabb()) {
        return 0.0;
    }
    bev_intersection(a, b).area()
}

/// Length of the overlap of the two z intervals.
pub fn overlap_z(a: &Box3D, b: &Box3D) -> f64 {
    (a.z_max().min(b.z_max()) - a.z_min().max(b.z_min())).max(0.0)
}

/// Volume intersection-over-union of two cuboids.
pub fn iou_box(a: &Box3D, b: &Box3D) -> f64 {
    let dz = overlap_z(a, b);
    if dz <= 0.0 {
        return 0.0;
    }
    let area = bev_intersection_area(a, b);
    if area <= 0.0 {
        return 0.0;
    }
    let inter = area * dz;
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
