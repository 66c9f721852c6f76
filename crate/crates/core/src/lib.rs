//! Point assisted sample selection (PASS) for anchor-based LiDAR 3D detection.
//!
//! The crate covers the whole target-assignment path of an anchor-based
//! detector: exact rotated-cuboid IoU ([`geom3d`]), point-count IoU over an
//! indexed point cloud ([`pointcloud`]), RANSAC ground removal ([`ground`]),
//! anchor grids ([`anchors`]), the band-gated hybrid score and per-anchor
//! labelling ([`assignment`]), KITTI ingestion ([`kitti_io`]) and the
//! statistics used to inspect how labels move between the two schemes
//! ([`stats`]).

pub mod anchors;
pub mod assignment;
pub mod bench;
pub mod config;
mod error;
pub mod fixtures;
pub mod geom3d;
pub mod ground;
pub mod kitti_io;
pub mod pointcloud;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
