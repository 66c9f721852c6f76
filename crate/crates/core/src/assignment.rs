//! Anchor sample selection: the IoU-threshold rule and its point-assisted
//! refinement.
//!
//! For every (ground truth, anchor) pair the box IoU `s` is computed. Pairs
//! whose `s` falls inside the band `[b_lower, b_upper]` around the class
//! thresholds are rescored as
//!
//! ```text
//! s' = alpha * s + beta * (iou_point * b_upper + (1 - iou_point) * b_lower)
//! ```
//!
//! and all other pairs keep `s' = s`. With `alpha = beta = 1/2` and `k >= 1`
//! no anchor can move between the positive and negative sets; only moves to
//! or from the ignored set are possible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anchors::ClassAnchorSpec;
use crate::geom3d::{iou_box, Aabb2, Box3D};
use crate::pointcloud::{
    count_in_box, count_inside, points_in_box_unchecked, BevGridIndex, EmptyUnionPolicy,
    PointCloud, PointIou,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionParams {
    /// Band-width hyperparameter; larger values narrow the band.
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub empty_union_policy: EmptyUnionPolicy,
    /// Force each GT's highest-scoring anchor to positive, as some detector
    /// codebases do. Off by default; it can break the no-crossing guarantee.
    pub force_match_best_anchor: bool,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            k: 5.0,
            alpha: 0.5,
            beta: 0.5,
            empty_union_policy: EmptyUnionPolicy::Zero,
            force_match_best_anchor: false,
        }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<()> {
        if self.k.is_nan() || self.k < 1.0 {
            return Err(Error::Param(format!(
                "selection.k must be >= 1, got {}",
                self.k
            )));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::Param(format!(
                "selection weights must be non-negative, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if (self.alpha + self.beta - 1.0).abs() > 1e-12 {
            return Err(Error::Param(format!(
                "selection weights must sum to 1, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub b_upper: f64,
    pub b_lower: f64,
}

impl Bounds {
    /// Closed band membership.
    #[inline]
    pub fn contains(&self, s: f64) -> bool {
        self.b_lower <= s && s <= self.b_upper
    }
}

/// Widens `[t_neg, t_pos]` on both sides by `(t_pos - t_neg) / k`.
pub fn compute_bounds(t_pos: f64, t_neg: f64, k: f64) -> Result<Bounds> {
    if !(t_neg > 0.0 && t_pos > t_neg && t_pos < 1.0) {
        return Err(Error::Param(format!(
            "thresholds need 0 < t_neg < t_pos < 1, got t_pos={t_pos} t_neg={t_neg}"
        )));
    }
    if k.is_nan() || k < 1.0 {
        return Err(Error::Param(format!("k must be >= 1, got {k}")));
    }
    let margin = (t_pos - t_neg) / k;
    Ok(Bounds {
        b_upper: t_pos + margin,
        b_lower: t_neg - margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Positive,
    Negative,
    Ignored,
}

impl LabelKind {
    pub const ALL: [LabelKind; 3] = [LabelKind::Positive, LabelKind::Negative, LabelKind::Ignored];

    pub fn as_str(&self) -> &'static str {
        match self {
            LabelKind::Positive => "positive",
            LabelKind::Negative => "negative",
            LabelKind::Ignored => "ignored",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            LabelKind::Positive => 0,
            LabelKind::Negative => 1,
            LabelKind::Ignored => 2,
        }
    }
}

impl std::fmt::Display for LabelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LabelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(LabelKind::Positive),
            "negative" => Ok(LabelKind::Negative),
            "ignored" => Ok(LabelKind::Ignored),
            other => Err(Error::Input(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleLabel {
    /// Carries the index of the matched ground truth.
    Positive(usize),
    Negative,
    Ignored,
}

impl SampleLabel {
    pub fn kind(&self) -> LabelKind {
        match self {
            SampleLabel::Positive(_) => LabelKind::Positive,
            SampleLabel::Negative => LabelKind::Negative,
            SampleLabel::Ignored => LabelKind::Ignored,
        }
    }
}

/// Threshold rule with strict inequalities: scores equal to a threshold are
/// ignored.
pub fn legacy_assign(s: f64, t_pos: f64, t_neg: f64) -> LabelKind {
    if s > t_pos {
        LabelKind::Positive
    } else if s < t_neg {
        LabelKind::Negative
    } else {
        LabelKind::Ignored
    }
}

fn label_with_gt(kind: LabelKind, gt: usize) -> SampleLabel {
    match kind {
        LabelKind::Positive => SampleLabel::Positive(gt),
        LabelKind::Negative => SampleLabel::Negative,
        LabelKind::Ignored => SampleLabel::Ignored,
    }
}

/// Blends the box score with the point IoU mapped linearly onto the band.
#[inline]
pub fn pass_score(s: f64, iou_pt: f64, bounds: &Bounds, alpha: f64, beta: f64) -> f64 {
    alpha * s + beta * (iou_pt * bounds.b_upper + (1.0 - iou_pt) * bounds.b_lower)
}

/// Rescores `s` only inside the band. `point_iou` runs lazily and only for
/// in-band scores; a `None` from it (empty union under the skip policy)
/// keeps `s`.
pub fn pass_pair_score<F>(
    s: f64,
    point_iou: F,
    bounds: &Bounds,
    params: &SelectionParams,
) -> Result<f64>
where
    F: FnOnce() -> Result<Option<f64>>,
{
    if !bounds.contains(s) {
        return Ok(s);
    }
    Ok(match point_iou()? {
        Some(ip) => pass_score(s, ip, bounds, params.alpha, params.beta),
        None => s,
    })
}

/// An annotated object.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub bbox: Box3D,
    pub class_name: String,
}

impl GroundTruth {
    pub fn new(bbox: Box3D, class_name: impl Into<String>) -> Self {
        Self {
            bbox,
            class_name: class_name.into(),
        }
    }
}

/// Anchors of one class, in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAnchors {
    pub class_name: String,
    pub anchors: Vec<Box3D>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignMode {
    /// Box IoU only; no point IoU is evaluated and both labels agree.
    Legacy,
    /// Box IoU plus point-assisted rescoring inside the band.
    #[default]
    Pass,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssignOptions {
    pub mode: AssignMode,
    /// Also compute the best pair's point IoU when the band gate skipped it.
    /// Diagnostic only; scores and labels are unaffected.
    pub record_best_point_iou: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    /// Position in the concatenation of all anchor groups.
    pub anchor_index: usize,
    /// Index into the class specs.
    pub class_index: usize,
    /// Ground truth with the highest adjusted score (lowest index on ties).
    pub best_gt: Option<usize>,
    /// Box IoU of the `best_gt` pair.
    pub iou_box: f64,
    /// Point IoU of the `best_gt` pair, when it was evaluated.
    pub iou_point: Option<f64>,
    /// Highest box IoU over same-class ground truths.
    pub s: f64,
    /// Highest adjusted score over same-class ground truths.
    pub s_prime: f64,
    pub legacy_label: SampleLabel,
    pub pass_label: SampleLabel,
}

struct ClassContext {
    t_pos: f64,
    t_neg: f64,
    bounds: Bounds,
    gts: Vec<usize>,
}

struct GtContext {
    aabb: Aabb2,
    /// Points inside the GT, ascending; only filled in PASS mode.
    points: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct PairScore {
    gt: usize,
    s: f64,
    s_prime: f64,
    iou_point: Option<f64>,
}

/// Labels every anchor of a scene.
///
/// `cloud` is expected to be ground-removed already; `index`, when given,
/// must be built over `cloud`. Anchor indices in the output follow the order
/// of `anchors` flattened group by group.
pub fn assign_scene(
    cloud: &PointCloud,
    index: Option<&BevGridIndex>,
    gts: &[GroundTruth],
    anchors: &[ClassAnchors],
    specs: &[ClassAnchorSpec],
    params: &SelectionParams,
    options: AssignOptions,
) -> Result<Vec<AssignmentResult>> {
    params.validate()?;
    if let Some(ix) = index {
        if ix.point_count() != cloud.len() {
            return Err(Error::Usage(format!(
                "index built over {} points used with a cloud of {}",
                ix.point_count(),
                cloud.len()
            )));
        }
    }
    let class_of = |name: &str| {
        specs
            .iter()
            .position(|s| s.class_name == name)
            .ok_or_else(|| Error::Input(format!("unknown class label {name:?}")))
    };

    let mut classes = specs
        .iter()
        .map(|spec| {
            spec.validate()?;
            Ok(ClassContext {
                t_pos: spec.t_pos,
                t_neg: spec.t_neg,
                bounds: compute_bounds(spec.t_pos, spec.t_neg, params.k)?,
                gts: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (g, gt) in gts.iter().enumerate() {
        gt.bbox.validate()?;
        classes[class_of(&gt.class_name)?].gts.push(g);
    }
    let gt_ctx: Vec<GtContext> = gts
        .iter()
        .map(|gt| GtContext {
            aabb: gt.bbox.bev_aabb(),
            points: if options.mode == AssignMode::Pass {
                points_in_box_unchecked(cloud, index, &gt.bbox)
            } else {
                Vec::new()
            },
        })
        .collect();

    let mut jobs = Vec::new();
    let mut offset = 0usize;
    for group in anchors {
        let ci = class_of(&group.class_name)?;
        for (i, a) in group.anchors.iter().enumerate() {
            a.validate()?;
            jobs.push((offset + i, ci, *a));
        }
        offset += group.anchors.len();
    }

    let scorer = PairScorer {
        cloud,
        index,
        gts,
        gt_ctx: &gt_ctx,
        params,
        options,
    };
    let keep_pairs = params.force_match_best_anchor;
    let per_anchor: Vec<(AssignmentResult, Vec<PairScore>)> = jobs
        .par_iter()
        .map(|&(anchor_index, ci, anchor)| {
            scorer.assign_anchor(anchor_index, ci, &anchor, &classes[ci], keep_pairs)
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut results, pairs): (Vec<_>, Vec<_>) = per_anchor.into_iter().unzip();
    if keep_pairs {
        force_match(&mut results, &pairs, gts.len());
    }
    Ok(results)
}

struct PairScorer<'a> {
    cloud: &'a PointCloud,
    index: Option<&'a BevGridIndex>,
    gts: &'a [GroundTruth],
    gt_ctx: &'a [GtContext],
    params: &'a SelectionParams,
    options: AssignOptions,
}

impl PairScorer<'_> {
    fn assign_anchor(
        &self,
        anchor_index: usize,
        class_index: usize,
        anchor: &Box3D,
        class: &ClassContext,
        keep_pairs: bool,
    ) -> Result<(AssignmentResult, Vec<PairScore>)> {
        let aabb = anchor.bev_aabb();
        // Points inside the anchor, counted at most once across its pairs.
        let mut anchor_count: Option<usize> = None;
        let mut best: Option<PairScore> = None;
        let mut legacy_best: Option<(f64, usize)> = None;
        let mut pairs = Vec::new();

        for &g in &class.gts {
            let overlaps = self.gt_ctx[g].aabb.intersects(&aabb);
            let s = if overlaps {
                iou_box(&self.gts[g].bbox, anchor)
            } else {
                0.0
            };
            let mut iou_point = None;
            let s_prime = match self.options.mode {
                AssignMode::Legacy => s,
                AssignMode::Pass => pass_pair_score(
                    s,
                    || {
                        iou_point = self.point_iou(g, anchor, overlaps, &mut anchor_count);
                        Ok(iou_point)
                    },
                    &class.bounds,
                    self.params,
                )?,
            };
            let pair = PairScore {
                gt: g,
                s,
                s_prime,
                iou_point,
            };
            if legacy_best.is_none_or(|(best_s, _)| s > best_s) {
                legacy_best = Some((s, g));
            }
            if best.is_none_or(|b| s_prime > b.s_prime) {
                best = Some(pair);
            }
            if keep_pairs && s > 0.0 {
                pairs.push(pair);
            }
        }

        let result = match (best, legacy_best) {
            (Some(best), Some((max_s, legacy_gt))) => {
                let mut iou_point = best.iou_point;
                if iou_point.is_none()
                    && self.options.record_best_point_iou
                    && self.options.mode == AssignMode::Pass
                {
                    let overlaps = self.gt_ctx[best.gt].aabb.intersects(&aabb);
                    iou_point = self.point_iou(best.gt, anchor, overlaps, &mut anchor_count);
                }
                let legacy = legacy_assign(max_s, class.t_pos, class.t_neg);
                let pass = legacy_assign(best.s_prime, class.t_pos, class.t_neg);
                AssignmentResult {
                    anchor_index,
                    class_index,
                    best_gt: Some(best.gt),
                    iou_box: best.s,
                    iou_point,
                    s: max_s,
                    s_prime: best.s_prime,
                    legacy_label: label_with_gt(legacy, legacy_gt),
                    pass_label: label_with_gt(pass, best.gt),
                }
            }
            _ => AssignmentResult {
                anchor_index,
                class_index,
                best_gt: None,
                iou_box: 0.0,
                iou_point: None,
                s: 0.0,
                s_prime: 0.0,
                legacy_label: SampleLabel::Negative,
                pass_label: SampleLabel::Negative,
            },
        };
        Ok((result, pairs))
    }

    /// Point IoU of GT `g` and `anchor`; `None` only for an empty union
    /// under the skip policy.
    fn point_iou(
        &self,
        g: usize,
        anchor: &Box3D,
        overlaps: bool,
        anchor_count: &mut Option<usize>,
    ) -> Option<f64> {
        let in_gt = &self.gt_ctx[g].points;
        // Strictly disjoint footprints share no point.
        let both = if overlaps {
            count_inside(self.cloud, in_gt, anchor)
        } else {
            0
        };
        let policy = self.params.empty_union_policy;
        if both == 0 && (!in_gt.is_empty() || policy == EmptyUnionPolicy::Zero) {
            return Some(0.0);
        }
        let in_anchor =
            *anchor_count.get_or_insert_with(|| count_in_box(self.cloud, self.index, anchor));
        PointIou::from_counts(in_gt.len(), in_anchor, both, policy).ratio
    }
}

/// Promotes, per GT, the anchor with the highest score for that GT.
fn force_match(results: &mut [AssignmentResult], pairs: &[Vec<PairScore>], gt_count: usize) {
    // (score, anchor) of the best anchor per GT, for each scheme.
    let mut best_legacy: Vec<Option<(f64, usize)>> = vec![None; gt_count];
    let mut best_pass: Vec<Option<(f64, usize)>> = vec![None; gt_count];
    for (a, anchor_pairs) in pairs.iter().enumerate() {
        for p in anchor_pairs {
            if best_legacy[p.gt].is_none_or(|(s, _)| p.s > s) {
                best_legacy[p.gt] = Some((p.s, a));
            }
            if best_pass[p.gt].is_none_or(|(s, _)| p.s_prime > s) {
                best_pass[p.gt] = Some((p.s_prime, a));
            }
        }
    }
    for (g, slot) in best_legacy.iter().enumerate() {
        if let Some((_, a)) = slot {
            if !matches!(results[*a].legacy_label, SampleLabel::Positive(_)) {
                results[*a].legacy_label = SampleLabel::Positive(g);
            }
        }
    }
    for (g, slot) in best_pass.iter().enumerate() {
        if let Some((_, a)) = slot {
            if !matches!(results[*a].pass_label, SampleLabel::Positive(_)) {
                results[*a].pass_label = SampleLabel::Positive(g);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const CAR: (f64, f64) = (0.6, 0.45);

    fn car_bounds() -> Bounds {
        compute_bounds(CAR.0, CAR.1, 5.0).unwrap()
    }

    #[test]
    fn bounds_examples() {
        let b = car_bounds();
        assert!((b.b_upper - 0.63).abs() < 1e-12 && (b.b_lower - 0.42).abs() < 1e-12);
        let b = compute_bounds(0.5, 0.35, 5.0).unwrap();
        assert!((b.b_upper - 0.53).abs() < 1e-12 && (b.b_lower - 0.32).abs() < 1e-12);
        let b = compute_bounds(0.6, 0.45, 1e9).unwrap();
        assert!((b.b_upper - 0.6).abs() < 1e-9 && (b.b_lower - 0.45).abs() < 1e-9);
    }

    #[test]
    fn bounds_reject_bad_parameters() {
        assert!(compute_bounds(0.45, 0.6, 5.0).is_err());
        assert!(compute_bounds(0.6, 0.6, 5.0).is_err());
        assert!(compute_bounds(0.6, 0.0, 5.0).is_err());
        assert!(compute_bounds(1.0, 0.45, 5.0).is_err());
        assert!(compute_bounds(0.6, 0.45, 0.5).is_err());
        assert!(compute_bounds(0.6, 0.45, f64::NAN).is_err());
    }

    #[test]
    fn legacy_rule() {
        assert_eq!(legacy_assign(0.7, CAR.0, CAR.1), LabelKind::Positive);
        assert_eq!(legacy_assign(0.1, CAR.0, CAR.1), LabelKind::Negative);
        assert_eq!(legacy_assign(0.6, CAR.0, CAR.1), LabelKind::Ignored);
        assert_eq!(legacy_assign(0.45, CAR.0, CAR.1), LabelKind::Ignored);
    }

    #[test]
    fn pass_score_examples() {
        let b = car_bounds();
        for (s, ip) in [(0.1, 0.3), (0.58, 1.0), (0.99, 0.0)] {
            assert_eq!(pass_score(s, ip, &b, 1.0, 0.0), s);
        }
        assert!((pass_score(0.58, 1.0, &b, 0.5, 0.5) - 0.605).abs() < 1e-12);
        assert!((pass_score(0.62, 0.1, &b, 0.5, 0.5) - 0.5305).abs() < 1e-12);
        assert!((pass_score(0.46, 0.0, &b, 0.5, 0.5) - 0.44).abs() < 1e-12);
    }

    #[test]
    fn band_gate() {
        let b = car_bounds();
        let p = SelectionParams::default();
        let never = || -> Result<Option<f64>> { panic!("point IoU evaluated outside the band") };
        assert_eq!(pass_pair_score(0.2, never, &b, &p).unwrap(), 0.2);
        assert_eq!(pass_pair_score(0.9, never, &b, &p).unwrap(), 0.9);
        let v = pass_pair_score(0.5, || Ok(Some(0.9)), &b, &p).unwrap();
        assert!((v - 0.5545).abs() < 1e-12);
        assert_eq!(pass_pair_score(0.5, || Ok(None), &b, &p).unwrap(), 0.5);
        let err = pass_pair_score(0.5, || Err(Error::Data("boom".into())), &b, &p);
        assert!(err.is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SelectionParams::default().validate().is_ok());
        let bad = [
            SelectionParams {
                k: 0.9,
                ..Default::default()
            },
            SelectionParams {
                alpha: 0.7,
                beta: 0.4,
                ..Default::default()
            },
            SelectionParams {
                alpha: -0.5,
                beta: 1.5,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn zero_gts_all_negative() {
        let spec = ClassAnchorSpec::car();
        let anchors = ClassAnchors {
            class_name: "Car".into(),
            anchors: vec![Box3D::new(0.0, 0.0, 0.0, 3.9, 1.6, 1.56, 0.0).unwrap(); 3],
        };
        let out = assign_scene(
            &PointCloud::default(),
            None,
            &[],
            &[anchors],
            &[spec],
            &SelectionParams::default(),
            AssignOptions::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 3);
        for (i, r) in out.iter().enumerate() {
            assert_eq!(r.anchor_index, i);
            assert_eq!((r.s, r.s_prime, r.best_gt), (0.0, 0.0, None));
            assert_eq!(r.legacy_label, SampleLabel::Negative);
            assert_eq!(r.pass_label, SampleLabel::Negative);
        }
    }

    #[test]
    fn identical_anchor_is_positive() {
        let spec = ClassAnchorSpec::car();
        let gt = Box3D::new(10.0, 2.0, -1.0, 3.9, 1.6, 1.56, 0.0).unwrap();
        let cloud = PointCloud::new(vec![crate::pointcloud::Point::new(10.0, 2.0, -1.0, 0.5); 4]);
        let out = assign_scene(
            &cloud,
            None,
            &[GroundTruth::new(gt, "Car")],
            &[ClassAnchors {
                class_name: "Car".into(),
                anchors: vec![gt],
            }],
            &[spec],
            &SelectionParams::default(),
            AssignOptions::default(),
        )
        .unwrap();
        let r = &out[0];
        assert!((r.s - 1.0).abs() < 1e-12);
        assert_eq!(r.s, r.s_prime);
        assert_eq!(r.iou_point, None);
        assert_eq!(r.legacy_label, SampleLabel::Positive(0));
        assert_eq!(r.pass_label, SampleLabel::Positive(0));
    }

    #[test]
    fn unknown_class_is_rejected() {
        let gt = Box3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let err = assign_scene(
            &PointCloud::default(),
            None,
            &[GroundTruth::new(gt, "Tram")],
            &[],
            &[ClassAnchorSpec::car()],
            &SelectionParams::default(),
            AssignOptions::default(),
        );
        assert!(matches!(err, Err(Error::Input(_))));
        let err = assign_scene(
            &PointCloud::default(),
            None,
            &[],
            &[ClassAnchors {
                class_name: "Tram".into(),
                anchors: vec![gt],
            }],
            &[ClassAnchorSpec::car()],
            &SelectionParams::default(),
            AssignOptions::default(),
        );
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn four_case_fixture() {
        let fx = fixtures::four_case_scene();
        let out = fx
            .assign(&SelectionParams::default(), AssignOptions::default())
            .unwrap();
        assert_eq!(out.len(), 4);
        for (r, case) in out.iter().zip(&fx.cases) {
            assert!((r.s - case.s).abs() < 1e-12, "{}: s={}", case.name, r.s);
            assert!(
                (r.s_prime - case.s_prime).abs() < 1e-12,
                "{}: s'={}",
                case.name,
                r.s_prime
            );
            assert_eq!(r.iou_point, Some(case.iou_point), "{}", case.name);
            assert_eq!(r.best_gt, Some(case.gt));
            assert_eq!(r.legacy_label.kind(), case.legacy, "{}", case.name);
            assert_eq!(r.pass_label.kind(), case.pass, "{}", case.name);
        }
    }

    #[test]
    fn legacy_mode_skips_point_iou() {
        let fx = fixtures::four_case_scene();
        let opts = AssignOptions {
            mode: AssignMode::Legacy,
            ..Default::default()
        };
        let out = fx.assign(&SelectionParams::default(), opts).unwrap();
        for (r, case) in out.iter().zip(&fx.cases) {
            assert_eq!(r.iou_point, None);
            assert_eq!(r.s, r.s_prime);
            assert_eq!(r.pass_label, r.legacy_label);
            assert_eq!(r.legacy_label.kind(), case.legacy);
        }
    }

    #[test]
    fn record_best_point_iou_is_diagnostic_only() {
        let fx = fixtures::four_case_scene();
        let base = fx
            .assign(&SelectionParams::default(), AssignOptions::default())
            .unwrap();
        let opts = AssignOptions {
            record_best_point_iou: true,
            ..Default::default()
        };
        let with = fx.assign(&SelectionParams::default(), opts).unwrap();
        for (a, b) in base.iter().zip(&with) {
            assert_eq!(
                (a.s, a.s_prime, a.legacy_label, a.pass_label),
                (b.s, b.s_prime, b.legacy_label, b.pass_label)
            );
            assert!(b.iou_point.is_some());
        }
    }

    #[test]
    fn skip_policy_keeps_box_score_for_empty_union() {
        let gt = Box3D::new(0.0, 0.0, 0.0, 4.0, 2.0, 1.5, 0.0).unwrap();
        let anchor = Box3D::new(1.0, 0.0, 0.0, 4.0, 2.0, 1.5, 0.0).unwrap();
        let s = iou_box(&gt, &anchor);
        assert!(car_bounds().contains(s));
        let run = |policy| {
            let params = SelectionParams {
                empty_union_policy: policy,
                ..Default::default()
            };
            assign_scene(
                &PointCloud::default(),
                None,
                &[GroundTruth::new(gt, "Car")],
                &[ClassAnchors {
                    class_name: "Car".into(),
                    anchors: vec![anchor],
                }],
                &[ClassAnchorSpec::car()],
                &params,
                AssignOptions::default(),
            )
            .unwrap()
            .remove(0)
        };
        let skip = run(EmptyUnionPolicy::Skip);
        assert_eq!(skip.s_prime, s);
        assert_eq!(skip.iou_point, None);
        let zero = run(EmptyUnionPolicy::Zero);
        assert!((zero.s_prime - pass_score(s, 0.0, &car_bounds(), 0.5, 0.5)).abs() < 1e-15);
        assert_eq!(zero.iou_point, Some(0.0));
    }

    #[test]
    fn force_match_promotes_best_anchor() {
        let gt = Box3D::new(0.0, 0.0, 0.0, 4.0, 2.0, 1.5, 0.0).unwrap();
        let far = Box3D::new(3.0, 0.0, 0.0, 4.0, 2.0, 1.5, 0.0).unwrap();
        let farther = Box3D::new(3.5, 0.0, 0.0, 4.0, 2.0, 1.5, 0.0).unwrap();
        let params = SelectionParams {
            force_match_best_anchor: true,
            ..Default::default()
        };
        let out = assign_scene(
            &PointCloud::default(),
            None,
            &[GroundTruth::new(gt, "Car")],
            &[ClassAnchors {
                class_name: "Car".into(),
                anchors: vec![farther, far],
            }],
            &[ClassAnchorSpec::car()],
            &params,
            AssignOptions::default(),
        )
        .unwrap();
        assert_eq!(out[0].legacy_label, SampleLabel::Negative);
        assert_eq!(out[1].legacy_label, SampleLabel::Positive(0));
        assert_eq!(out[1].pass_label, SampleLabel::Positive(0));
    }
}
