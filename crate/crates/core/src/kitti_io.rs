//! KITTI object-benchmark ingestion: Velodyne scans, label files and
//! calibration, and the camera-to-LiDAR box conversion.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};

use crate::assignment::GroundTruth;
use crate::geom3d::Box3D;
use crate::pointcloud::{Point, PointCloud};
use crate::{Error, Result};

const POINT_BYTES: usize = 16;
const LABEL_FIELDS: usize = 15;
const ORTHONORMAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct VelodyneScan {
    pub cloud: PointCloud,
    /// Records skipped because a coordinate was NaN or infinite.
    pub dropped_non_finite: usize,
}

/// Decodes packed little-endian `f32` quadruples `(x, y, z, intensity)`.
pub fn parse_velodyne(bytes: &[u8], path: &Path) -> Result<VelodyneScan> {
    let rem = bytes.len() % POINT_BYTES;
    if rem != 0 {
        return Err(Error::format(
            path,
            format!(
                "truncated point record at byte offset {} ({} trailing bytes; file length must be a multiple of {POINT_BYTES})",
                bytes.len() - rem,
                rem
            ),
        ));
    }
    let mut points = Vec::with_capacity(bytes.len() / POINT_BYTES);
    let mut dropped = 0;
    for rec in bytes.chunks_exact(POINT_BYTES) {
        let f = |i: usize| f32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().unwrap());
        let pt = Point::new(f(0), f(1), f(2), f(3));
        if pt.x.is_finite() && pt.y.is_finite() && pt.z.is_finite() {
            points.push(pt);
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::warn!(
            "{}: dropped {dropped} records with non-finite coordinates",
            path.display()
        );
    }
    Ok(VelodyneScan {
        cloud: PointCloud::new(points),
        dropped_non_finite: dropped,
    })
}

pub fn read_velodyne_bin(path: impl AsRef<Path>) -> Result<VelodyneScan> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_velodyne(&bytes, path)
}

pub fn encode_velodyne(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * POINT_BYTES);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_velodyne_bin(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_velodyne(cloud)).map_err(|e| Error::io(path, e))
}

/// One line of a KITTI label file. Dimensions keep the file's `(h, w, l)`
/// order; the location is the bottom-face center in the rectified camera
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub class_name: String,
    pub truncation: f64,
    pub occlusion: i32,
    pub observation_angle: f64,
    pub bbox2d: [f64; 4],
    pub h: f64,
    pub w: f64,
    pub l: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub ry: f64,
}

impl LabelRecord {
    pub fn is_dont_care(&self) -> bool {
        self.class_name == "DontCare"
    }

    /// Serializes in label-file field order. Values use the shortest
    /// representation that parses back to the same number.
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{} {} {} {}",
            self.class_name, self.truncation, self.occlusion, self.observation_angle
        );
        for v in self
            .bbox2d
            .iter()
            .chain(&[self.h, self.w, self.l, self.x, self.y, self.z, self.ry])
        {
            let _ = write!(s, " {v}");
        }
        s
    }
}

pub fn parse_label_str(text: &str, path: &Path) -> Result<Vec<LabelRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != LABEL_FIELDS {
            return Err(Error::format(
                path,
                format!(
                    "line {lineno}: expected {LABEL_FIELDS} fields, found {}",
                    fields.len()
                ),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse::<f64>().map_err(|_| {
                Error::format(
                    path,
                    format!(
                        "line {lineno}: field {} is not numeric: {:?}",
                        i + 1,
                        fields[i]
                    ),
                )
            })
        };
        let occlusion = fields[2].parse::<i32>().map_err(|_| {
            Error::format(
                path,
                format!("line {lineno}: field 3 is not an integer: {:?}", fields[2]),
            )
        })?;
        out.push(LabelRecord {
            class_name: fields[0].to_string(),
            truncation: num(1)?,
            occlusion,
            observation_angle: num(3)?,
            bbox2d: [num(4)?, num(5)?, num(6)?, num(7)?],
            h: num(8)?,
            w: num(9)?,
            l: num(10)?,
            x: num(11)?,
            y: num(12)?,
            z: num(13)?,
            ry: num(14)?,
        });
    }
    Ok(out)
}

pub fn parse_label_file(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_label_str(&text, path)
}

pub fn format_label_file(records: &[LabelRecord]) -> String {
    records.iter().map(|r| r.to_line() + "\n").collect()
}

/// Rectification rotation and rigid LiDAR-to-camera transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub rect_rotation: Matrix3<f64>,
    pub velo_rotation: Matrix3<f64>,
    pub velo_translation: Vector3<f64>,
}

fn is_orthonormal(m: &Matrix3<f64>) -> bool {
    (m * m.transpose() - Matrix3::identity()).abs().max() <= ORTHONORMAL_TOL
}

impl Calibration {
    pub fn new(rect: [f64; 9], velo_to_cam: [f64; 12]) -> Result<Self> {
        let rect_rotation = Matrix3::from_row_slice(&rect);
        let v = velo_to_cam;
        let velo_rotation = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let velo_translation = Vector3::new(v[3], v[7], v[11]);
        if !is_orthonormal(&rect_rotation) {
            return Err(Error::Data("R0_rect is not orthonormal".into()));
        }
        if !is_orthonormal(&velo_rotation) {
            return Err(Error::Data(
                "Tr_velo_to_cam rotation is not orthonormal".into(),
            ));
        }
        Ok(Self {
            rect_rotation,
            velo_rotation,
            velo_translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rect_rotation: Matrix3::identity(),
            velo_rotation: Matrix3::identity(),
            velo_translation: Vector3::zeros(),
        }
    }

    /// Calibration of KITTI object frame 000000.
    pub fn kitti_sample() -> Self {
        Self::new(
            [
                9.999239e-01,
                9.837760e-03,
                -7.445048e-03,
                -9.869795e-03,
                9.999421e-01,
                -4.278459e-03,
                7.402527e-03,
                4.351614e-03,
                9.999631e-01,
            ],
            [
                7.533745e-03,
                -9.999714e-01,
                -6.166020e-04,
                -4.069766e-03,
                1.480249e-02,
                7.280733e-04,
                -9.998902e-01,
                -7.631618e-02,
                9.998621e-01,
                7.523790e-03,
                1.480755e-02,
                -2.717806e-01,
            ],
        )
        .expect("sample calibration is orthonormal")
    }

    /// LiDAR point to rectified camera frame.
    pub fn lidar_to_rect(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rect_rotation * (self.velo_rotation * p + self.velo_translation)
    }

    /// Rectified camera point back to the LiDAR frame.
    pub fn rect_to_lidar(&self, p: Vector3<f64>) -> Result<Vector3<f64>> {
        let rect_inv = self
            .rect_rotation
            .try_inverse()
            .ok_or_else(|| Error::Data("R0_rect is singular".into()))?;
        let velo_inv = self
            .velo_rotation
            .try_inverse()
            .ok_or_else(|| Error::Data("Tr_velo_to_cam rotation is singular".into()))?;
        Ok(velo_inv * (rect_inv * p - self.velo_translation))
    }

    pub fn to_text(&self) -> String {
        let r = &self.rect_rotation;
        let v = &self.velo_rotation;
        let t = &self.velo_translation;
        let row = |vals: &[f64]| {
            vals.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "R0_rect: {}\nTr_velo_to_cam: {}\n",
            row(&[
                r[(0, 0)],
                r[(0, 1)],
                r[(0, 2)],
                r[(1, 0)],
                r[(1, 1)],
                r[(1, 2)],
                r[(2, 0)],
                r[(2, 1)],
                r[(2, 2)]
            ]),
            row(&[
                v[(0, 0)],
                v[(0, 1)],
                v[(0, 2)],
                t[0],
                v[(1, 0)],
                v[(1, 1)],
                v[(1, 2)],
                t[1],
                v[(2, 0)],
                v[(2, 1)],
                v[(2, 2)],
                t[2],
            ]),
        )
    }
}

pub fn parse_calib_str(text: &str, path: &Path) -> Result<Calibration> {
    let mut rect: Option<Vec<f64>> = None;
    let mut velo: Option<Vec<f64>> = None;
    for (n, line) in text.lines().enumerate() {
        let Some((key, rest)) = line.split_once(':') else {
            continue;
        };
        let slot = match key.trim() {
            "R0_rect" => &mut rect,
            "Tr_velo_to_cam" => &mut velo,
            _ => continue,
        };
        let values = rest
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| {
                Error::format(
                    path,
                    format!("line {}: non-numeric value for {}", n + 1, key.trim()),
                )
            })?;
        *slot = Some(values);
    }
    let rect = rect.ok_or_else(|| Error::format(path, "missing key R0_rect"))?;
    let velo = velo.ok_or_else(|| Error::format(path, "missing key Tr_velo_to_cam"))?;
    let rect: [f64; 9] = rect.try_into().map_err(|v: Vec<f64>| {
        Error::format(path, format!("R0_rect needs 9 values, found {}", v.len()))
    })?;
    let velo: [f64; 12] = velo.try_into().map_err(|v: Vec<f64>| {
        Error::format(
            path,
            format!("Tr_velo_to_cam needs 12 values, found {}", v.len()),
        )
    })?;
    Calibration::new(rect, velo).map_err(|e| Error::format(path, e.to_string()))
}

pub fn parse_calib_file(path: impl AsRef<Path>) -> Result<Calibration> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calib_str(&text, path)
}

/// Camera-frame label to LiDAR-frame box. The bottom-face center is mapped
/// into the LiDAR frame and lifted by `h / 2`; yaw becomes `-ry - pi/2`.
pub fn label_to_lidar_box(record: &LabelRecord, calib: &Calibration) -> Result<Box3D> {
    let bottom = calib.rect_to_lidar(Vector3::new(record.x, record.y, record.z))?;
    Box3D::new(
        bottom.x,
        bottom.y,
        bottom.z + 0.5 * record.h,
        record.l,
        record.w,
        record.h,
        -record.ry - FRAC_PI_2,
    )
    .map_err(|e| Error::Data(format!("label {:?}: {e}", record.class_name)))
}

/// Inverse of [`label_to_lidar_box`]; non-geometric fields are zeroed.
pub fn lidar_box_to_label(b: &Box3D, class_name: &str, calib: &Calibration) -> LabelRecord {
    let loc = calib.lidar_to_rect(Vector3::new(b.cx, b.cy, b.cz - 0.5 * b.h));
    LabelRecord {
        class_name: class_name.to_string(),
        truncation: 0.0,
        occlusion: 0,
        observation_angle: 0.0,
        bbox2d: [0.0; 4],
        h: b.h,
        w: b.w,
        l: b.l,
        x: loc.x,
        y: loc.y,
        z: loc.z,
        ry: -b.yaw - FRAC_PI_2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFrame {
    pub frame_id: String,
    pub cloud: PointCloud,
    pub gts: Vec<GroundTruth>,
    pub dropped_points: usize,
}

fn frame_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Reads one frame; `DontCare` labels are dropped.
pub fn load_scene(
    cloud_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
    calib_path: impl AsRef<Path>,
) -> Result<SceneFrame> {
    let cloud_path = cloud_path.as_ref();
    let frame_id = frame_id_of(cloud_path);
    let wrap = |e: Error| Error::Frame {
        frame_id: frame_id.clone(),
        source: Box::new(e),
    };
    let scan = read_velodyne_bin(cloud_path).map_err(wrap)?;
    let labels = parse_label_file(label_path).map_err(wrap)?;
    let calib = parse_calib_file(calib_path).map_err(wrap)?;
    let gts = labels
        .iter()
        .filter(|r| !r.is_dont_care())
        .map(|r| {
            Ok(GroundTruth::new(
                label_to_lidar_box(r, &calib)?,
                r.class_name.clone(),
            ))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(wrap)?;
    Ok(SceneFrame {
        cloud: scan.cloud.with_frame_id(frame_id.clone()),
        frame_id,
        gts,
        dropped_points: scan.dropped_non_finite,
    })
}

/// Paths of one frame in a KITTI object-dataset layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePaths {
    pub frame_id: String,
    pub cloud: PathBuf,
    pub label: PathBuf,
    pub calib: PathBuf,
}

/// Frames under `root/velodyne/*.bin` with matching `label_2/<id>.txt` and
/// `calib/<id>.txt`, sorted by frame id. A root without a `velodyne`
/// directory holds no frames.
pub fn discover_frames(root: impl AsRef<Path>) -> Result<Vec<FramePaths>> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "scene directory not found"),
        ));
    }
    let velodyne = root.join("velodyne");
    if !velodyne.is_dir() {
        return Ok(Vec::new());
    }
    let mut frames = Vec::new();
    for entry in fs::read_dir(&velodyne).map_err(|e| Error::io(&velodyne, e))? {
        let path = entry.map_err(|e| Error::io(&velodyne, e))?.path();
        if path.extension().is_some_and(|e| e == "bin") {
            let id = frame_id_of(&path);
            frames.push(FramePaths {
                label: root.join("label_2").join(format!("{id}.txt")),
                calib: root.join("calib").join(format!("{id}.txt")),
                cloud: path,
                frame_id: id,
            });
        }
    }
    frames.sort_by(|a, b| a.frame_id.cmp(&b.frame_id));
    Ok(frames)
}

/// Writes a frame in the layout [`discover_frames`] reads.
pub fn write_scene(
    root: impl AsRef<Path>,
    frame_id: &str,
    cloud: &PointCloud,
    gts: &[GroundTruth],
    calib: &Calibration,
) -> Result<FramePaths> {
    let root = root.as_ref();
    for sub in ["velodyne", "label_2", "calib"] {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let paths = FramePaths {
        frame_id: frame_id.to_string(),
        cloud: root.join("velodyne").join(format!("{frame_id}.bin")),
        label: root.join("label_2").join(format!("{frame_id}.txt")),
        calib: root.join("calib").join(format!("{frame_id}.txt")),
    };
    write_velodyne_bin(&paths.cloud, cloud)?;
    let labels: Vec<LabelRecord> = gts
        .iter()
        .map(|g| lidar_box_to_label(&g.bbox, &g.class_name, calib))
        .collect();
    fs::write(&paths.label, format_label_file(&labels)).map_err(|e| Error::io(&paths.label, e))?;
    fs::write(&paths.calib, calib.to_text()).map_err(|e| Error::io(&paths.calib, e))?;
    Ok(paths)
}
