//! A small hand-built scene exercising every way the point-assisted score
//! can move an anchor's label.
//!
//! Two car ground truths (4 x 2 x 1.5 m) sit 20 m apart. Four anchors of
//! the same shape are offset from them so that the box IoUs are exactly
//! 0.58, 0.62, 0.46 and 0.43, and object points are placed so that the
//! point IoUs are 1.0, 0.1, 0.0 and 1.0. A flat patch of ground returns
//! lies below the boxes and touches none of them.
//!
//! | anchor | s    | iou_point | s' (k=5)  | threshold rule | point-assisted |
//! |--------|------|-----------|-----------|----------------|----------------|
//! | 0      | 0.58 | 1.0       | 0.605     | ignored        | positive       |
//! | 1      | 0.62 | 0.1       | 0.5305    | positive       | ignored        |
//! | 2      | 0.46 | 0.0       | 0.44      | ignored        | negative       |
//! | 3      | 0.43 | 1.0       | 0.53      | negative       | ignored        |

use crate::anchors::ClassAnchorSpec;
use crate::assignment::{
    assign_scene, AssignOptions, AssignmentResult, ClassAnchors, GroundTruth, LabelKind,
    SelectionParams,
};
use crate::geom3d::Box3D;
use crate::pointcloud::{build_index, Point, PointCloud, DEFAULT_CELL_SIZE};
use crate::Result;

const LENGTH: f64 = 4.0;
const WIDTH: f64 = 2.0;
const HEIGHT: f64 = 1.5;
/// z of the ground patch; boxes span z in [-0.75, 0.75].
pub const GROUND_Z: f32 = -1.5;

/// Expected per-anchor outcome of the four-case scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCase {
    pub name: &'static str,
    pub gt: usize,
    pub s: f64,
    pub iou_point: f64,
    pub s_prime: f64,
    pub legacy: LabelKind,
    pub pass: LabelKind,
}

#[derive(Debug, Clone)]
pub struct FourCaseScene {
    pub cloud: PointCloud,
    pub gts: Vec<GroundTruth>,
    pub anchors: ClassAnchors,
    pub spec: ClassAnchorSpec,
    pub cases: Vec<ExpectedCase>,
}

impl FourCaseScene {
    pub fn assign(
        &self,
        params: &SelectionParams,
        options: AssignOptions,
    ) -> Result<Vec<AssignmentResult>> {
        let index = build_index(&self.cloud, DEFAULT_CELL_SIZE)?;
        assign_scene(
            &self.cloud,
            Some(&index),
            &self.gts,
            std::slice::from_ref(&self.anchors),
            std::slice::from_ref(&self.spec),
            params,
            options,
        )
    }
}

/// Offset along one axis of extent `extent` giving IoU `target` for two
/// equal boxes: `(extent - d) / (extent + d) = target`.
fn offset_for_iou(extent: f64, target: f64) -> f64 {
    extent * (1.0 - target) / (1.0 + target)
}

fn car_box(x: f64, y: f64) -> Box3D {
    Box3D {
        cx: x,
        cy: y,
        cz: 0.0,
        l: LENGTH,
        w: WIDTH,
        h: HEIGHT,
        yaw: 0.0,
    }
}

fn p(x: f32, y: f32) -> Point {
    Point::new(x, y, 0.0, 0.5)
}

pub fn four_case_scene() -> FourCaseScene {
    let gt0 = car_box(0.0, 0.0);
    let gt1 = car_box(0.0, 20.0);

    let anchors = vec![
        car_box(offset_for_iou(LENGTH, 0.58), 0.0),
        car_box(offset_for_iou(LENGTH, 0.62), 20.0),
        car_box(-offset_for_iou(LENGTH, 0.46), 0.0),
        car_box(0.0, 20.0 - offset_for_iou(WIDTH, 0.43)),
    ];

    let mut points = Vec::new();
    // GT 0: five points with x in (0.52, 2]; inside anchor 0, outside anchor 2.
    points.extend([
        p(0.8, -0.5),
        p(1.0, 0.2),
        p(1.2, 0.0),
        p(1.4, 0.6),
        p(1.6, -0.3),
    ]);
    // GT 1: one point shared with anchor 1, six left of anchor 1; all seven
    // lie inside anchor 3 (y in [19, 20.2]).
    points.push(p(0.5, 19.5));
    points.extend([-1.9f32, -1.8, -1.7, -1.6, -1.5, -1.4].map(|x| p(x, 19.6)));
    // Anchor 1 only.
    points.extend([2.3f32, 2.5, 2.7].map(|x| p(x, 19.5)));
    // Ground patch.
    for i in 0..20 {
        for j in 0..15 {
            points.push(Point::new(
                -8.0 + i as f32,
                -4.0 + 2.0 * j as f32,
                GROUND_Z,
                0.1,
            ));
        }
    }

    let spec = ClassAnchorSpec::car();
    let cases = vec![
        ExpectedCase {
            name: "promotion",
            gt: 0,
            s: 0.58,
            iou_point: 1.0,
            s_prime: 0.605,
            legacy: LabelKind::Ignored,
            pass: LabelKind::Positive,
        },
        ExpectedCase {
            name: "demotion",
            gt: 1,
            s: 0.62,
            iou_point: 0.1,
            s_prime: 0.5305,
            legacy: LabelKind::Positive,
            pass: LabelKind::Ignored,
        },
        ExpectedCase {
            name: "negative",
            gt: 0,
            s: 0.46,
            iou_point: 0.0,
            s_prime: 0.44,
            legacy: LabelKind::Ignored,
            pass: LabelKind::Negative,
        },
        ExpectedCase {
            name: "rescued",
            gt: 1,
            s: 0.43,
            iou_point: 1.0,
            s_prime: 0.53,
            legacy: LabelKind::Negative,
            pass: LabelKind::Ignored,
        },
    ];

    FourCaseScene {
        cloud: PointCloud::new(points).with_frame_id("four_case"),
        gts: vec![
            GroundTruth::new(gt0, spec.class_name.clone()),
            GroundTruth::new(gt1, spec.class_name.clone()),
        ],
        anchors: ClassAnchors {
            class_name: spec.class_name.clone(),
            anchors,
        },
        spec,
        cases,
    }
}
