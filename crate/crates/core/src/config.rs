//! Run configuration: a single JSON document with defaults for every field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anchors::{generate_anchors, BevRange, ClassAnchorSpec};
use crate::assignment::{ClassAnchors, SelectionParams};
use crate::geom3d::Box3D;
use crate::ground::GroundRemovalParams;
use crate::pointcloud::DEFAULT_CELL_SIZE;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsampleConfig {
    pub seed: u64,
    /// Maximum number of statistics records kept; `None` keeps all.
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub classes: Vec<ClassAnchorSpec>,
    pub range: BevRange,
    pub selection: SelectionParams,
    pub ground: GroundRemovalParams,
    pub ground_removal_enabled: bool,
    pub cell_size: f64,
    /// Fixed anchor lists (`[x, y, z, l, w, h, yaw]` rows) replacing the
    /// generated grid for the named classes.
    pub anchor_overrides: BTreeMap<String, Vec<[f64; 7]>>,
    /// Evaluate the best pair's point IoU even outside the band, for
    /// statistics. Scores and labels are unaffected.
    pub record_best_point_iou: bool,
    pub subsample: SubsampleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            classes: ClassAnchorSpec::kitti_defaults(),
            range: BevRange::default(),
            selection: SelectionParams::default(),
            ground: GroundRemovalParams::default(),
            ground_removal_enabled: true,
            cell_size: DEFAULT_CELL_SIZE,
            anchor_overrides: BTreeMap::new(),
            record_best_point_iou: false,
            subsample: SubsampleConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Param(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Param(msg) => Error::Param(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Param(
                "classes: at least one class is required".into(),
            ));
        }
        for (i, c) in self.classes.iter().enumerate() {
            c.validate()?;
            if self.classes[..i]
                .iter()
                .any(|o| o.class_name == c.class_name)
            {
                return Err(Error::Param(format!(
                    "classes: duplicate class {:?}",
                    c.class_name
                )));
            }
        }
        self.range.validate()?;
        self.selection.validate()?;
        self.ground.validate()?;
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::Param(format!(
                "cell_size must be positive, got {}",
                self.cell_size
            )));
        }
        for (name, boxes) in &self.anchor_overrides {
            if !self.classes.iter().any(|c| &c.class_name == name) {
                return Err(Error::Param(format!(
                    "anchor_overrides: unknown class {name:?}"
                )));
            }
            for b in boxes {
                Box3D::from_array(*b)
                    .map_err(|e| Error::Param(format!("anchor_overrides.{name}: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.class_name.as_str()).collect()
    }

    /// Anchor groups in class order.
    pub fn anchors(&self) -> Result<Vec<ClassAnchors>> {
        self.classes
            .iter()
            .map(|spec| {
                let anchors = match self.anchor_overrides.get(&spec.class_name) {
                    Some(rows) => rows
                        .iter()
                        .map(|r| Box3D::from_array(*r))
                        .collect::<Result<Vec<_>>>()?,
                    None => generate_anchors(spec, &self.range)?,
                };
                Ok(ClassAnchors {
                    class_name: spec.class_name.clone(),
                    anchors,
                })
            })
            .collect()
    }
}
