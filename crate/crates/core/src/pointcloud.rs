//! Point clouds, a uniform BEV grid index, and point-count IoU.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geom3d::{Box3D, BoxFrame, Vec3};
use crate::{Error, Result};

/// Default BEV grid cell edge, meters.
pub const DEFAULT_CELL_SIZE: f64 = 1.0;

/// A LiDAR return. Stored at the sensor's native 32-bit precision; all
/// geometry widens to `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
}

impl Point {
    pub const fn new(x: f32, y: f32, z: f32, intensity: f32) -> Self {
        Self { x, y, z, intensity }
    }

    #[inline]
    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x as f64, self.y as f64, self.z as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
    pub frame_id: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        Self {
            points,
            frame_id: None,
        }
    }

    pub fn with_frame_id(mut self, frame_id: impl Into<String>) -> Self {
        self.frame_id = Some(frame_id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subset of the cloud at the given original indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            frame_id: self.frame_id.clone(),
        }
    }
}

/// Immutable uniform-grid index over the BEV (x, y) projection of a cloud.
///
/// Point indices are grouped per occupied cell into one contiguous array;
/// `buckets` maps a cell to its slice of that array.
#[derive(Debug, Clone)]
pub struct BevGridIndex {
    cell_size: f64,
    origin: [f64; 2],
    point_count: usize,
    buckets: HashMap<(i64, i64), (u32, u32)>,
    indices: Vec<u32>,
}

impl BevGridIndex {
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// Number of points the index was built over.
    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    /// Point indices stored in cell `(i, j)`, ascending.
    pub fn bucket(&self, i: i64, j: i64) -> &[u32] {
        match self.buckets.get(&(i, j)) {
            Some(&(s, e)) => &self.indices[s as usize..e as usize],
            None => &[],
        }
    }

    fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin[0]) / self.cell_size).floor() as i64,
            ((y - self.origin[1]) / self.cell_size).floor() as i64,
        )
    }

    /// Calls `f` with every point index whose cell overlaps the BEV
    /// footprint bounds of `b`. Candidates still need an exact test.
    fn for_each_candidate(&self, b: &Box3D, mut f: impl FnMut(u32)) {
        if self.buckets.is_empty() {
            return;
        }
        let aabb = b.bev_aabb();
        let (i0, j0) = self.cell_of(aabb.min[0], aabb.min[1]);
        let (i1, j1) = self.cell_of(aabb.max[0], aabb.max[1]);
        let span = (i1 - i0 + 1).saturating_mul(j1 - j0 + 1);
        if span as usize > self.buckets.len() {
            for (&(i, j), &(s, e)) in &self.buckets {
                if i >= i0 && i <= i1 && j >= j0 && j <= j1 {
                    self.indices[s as usize..e as usize]
                        .iter()
                        .for_each(|&k| f(k));
                }
            }
            return;
        }
        for j in j0..=j1 {
            for i in i0..=i1 {
                self.bucket(i, j).iter().for_each(|&k| f(k));
            }
        }
    }
}

/// Buckets every point of `cloud` into square BEV cells of `cell_size`.
pub fn build_index(cloud: &PointCloud, cell_size: f64) -> Result<BevGridIndex> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::Param(format!(
            "index cell_size must be positive, got {cell_size}"
        )));
    }
    if cloud.len() > u32::MAX as usize {
        return Err(Error::Input("cloud too large to index".into()));
    }
    let origin = cloud
        .points
        .iter()
        .fold(None, |acc: Option<[f64; 2]>, p| {
            let (x, y) = (p.x as f64, p.y as f64);
            Some(match acc {
                None => [x, y],
                Some([ox, oy]) => [ox.min(x), oy.min(y)],
            })
        })
        .unwrap_or([0.0, 0.0]);
    let mut index = BevGridIndex {
        cell_size,
        origin,
        point_count: cloud.len(),
        buckets: HashMap::new(),
        indices: Vec::with_capacity(cloud.len()),
    };
    let mut keyed: Vec<((i64, i64), u32)> = cloud
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| (index.cell_of(p.x as f64, p.y as f64), k as u32))
        .collect();
    keyed.sort_unstable();
    let mut start = 0usize;
    while start < keyed.len() {
        let key = keyed[start].0;
        let mut end = start;
        while end < keyed.len() && keyed[end].0 == key {
            index.indices.push(keyed[end].1);
            end += 1;
        }
        index.buckets.insert(key, (start as u32, end as u32));
        start = end;
    }
    Ok(index)
}

fn check_index(cloud: &PointCloud, index: Option<&BevGridIndex>) -> Result<()> {
    match index {
        Some(ix) if ix.point_count != cloud.len() => Err(Error::Usage(format!(
            "index built over {} points used with a cloud of {}",
            ix.point_count,
            cloud.len()
        ))),
        _ => Ok(()),
    }
}

#[inline]
fn frame_contains(frame: &BoxFrame, p: &Point) -> bool {
    frame.contains(p.x as f64, p.y as f64, p.z as f64)
}

/// Ascending indices of the points inside `b` (boundary inclusive).
pub fn points_in_box(
    cloud: &PointCloud,
    index: Option<&BevGridIndex>,
    b: &Box3D,
) -> Result<Vec<usize>> {
    check_index(cloud, index)?;
    Ok(points_in_box_unchecked(cloud, index, b))
}

pub(crate) fn points_in_box_unchecked(
    cloud: &PointCloud,
    index: Option<&BevGridIndex>,
    b: &Box3D,
) -> Vec<usize> {
    let frame = b.frame();
    match index {
        None => cloud
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| frame_contains(&frame, p))
            .map(|(k, _)| k)
            .collect(),
        Some(ix) => {
            let mut out = Vec::new();
            ix.for_each_candidate(b, |k| {
                if frame_contains(&frame, &cloud.points[k as usize]) {
                    out.push(k as usize);
                }
            });
            out.sort_unstable();
            out
        }
    }
}

/// How to report point IoU when neither box holds any point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyUnionPolicy {
    /// Report a ratio of 0.
    #[default]
    Zero,
    /// Report no ratio; the assigner keeps the box-only score.
    Skip,
}

/// Point-count IoU of a box pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointIou {
    /// `None` only under [`EmptyUnionPolicy::Skip`] with an empty union.
    pub ratio: Option<f64>,
    pub intersection_count: usize,
    pub union_count: usize,
}

impl PointIou {
    pub(crate) fn from_counts(
        in_gt: usize,
        in_anchor: usize,
        both: usize,
        policy: EmptyUnionPolicy,
    ) -> Self {
        let union = in_gt + in_anchor - both;
        let ratio = if union > 0 {
            Some(both as f64 / union as f64)
        } else {
            match policy {
                EmptyUnionPolicy::Zero => Some(0.0),
                EmptyUnionPolicy::Skip => None,
            }
        };
        PointIou {
            ratio,
            intersection_count: both,
            union_count: union,
        }
    }
}

/// Number of points inside both boxes over the number inside either.
pub fn iou_point(
    cloud: &PointCloud,
    index: Option<&BevGridIndex>,
    gt: &Box3D,
    anchor: &Box3D,
    policy: EmptyUnionPolicy,
) -> Result<PointIou> {
    check_index(cloud, index)?;
    let in_gt = points_in_box_unchecked(cloud, index, gt);
    let anchor_frame = anchor.frame();
    let both = in_gt
        .iter()
        .filter(|&&k| frame_contains(&anchor_frame, &cloud.points[k]))
        .count();
    let in_anchor = points_in_box_unchecked(cloud, index, anchor).len();
    Ok(PointIou::from_counts(in_gt.len(), in_anchor, both, policy))
}

/// Counts points of `indices` (into `cloud`) that lie inside `b`.
pub(crate) fn count_inside(cloud: &PointCloud, indices: &[usize], b: &Box3D) -> usize {
    let frame = b.frame();
    indices
        .iter()
        .filter(|&&k| frame_contains(&frame, &cloud.points[k]))
        .count()
}

/// Counts points inside `b`, optionally through an index.
pub(crate) fn count_in_box(cloud: &PointCloud, index: Option<&BevGridIndex>, b: &Box3D) -> usize {
    let frame = b.frame();
    match index {
        None => cloud
            .points
            .iter()
            .filter(|p| frame_contains(&frame, p))
            .count(),
        Some(ix) => {
            let mut n = 0;
            ix.for_each_candidate(b, |k| {
                if frame_contains(&frame, &cloud.points[k as usize]) {
                    n += 1;
                }
            });
            n
        }
    }
}
