//! Assignment statistics: (box IoU, point IoU) scatter data, point-IoU
//! histograms per threshold-rule label, and label crossing matrices, plus
//! their CSV forms.
//!
//! All tallies merge associatively so per-scene partial results can be
//! combined in any grouping.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{AssignmentResult, LabelKind};
use crate::{Error, Result};

pub const SCATTER_HEADER: [&str; 7] = [
    "frame_id",
    "anchor_index",
    "gt_index",
    "iou_box",
    "iou_point",
    "legacy_label",
    "pass_label",
];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_lo", "bin_hi", "count"];
pub const CROSSING_HEADER: [&str; 3] = ["legacy", "pass", "count"];
pub const ASSIGNMENT_HEADER: [&str; 10] = [
    "frame_id",
    "anchor_index",
    "class",
    "best_gt",
    "iou_box",
    "iou_point",
    "s",
    "s_prime",
    "legacy_label",
    "pass_label",
];

/// Default histogram resolution.
pub const DEFAULT_BINS: usize = 20;

/// One anchor of one frame as written to the assignment CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentRow {
    pub frame_id: String,
    pub anchor_index: usize,
    pub class_name: String,
    pub best_gt: Option<usize>,
    pub iou_box: f64,
    pub iou_point: Option<f64>,
    pub s: f64,
    pub s_prime: f64,
    pub legacy_label: LabelKind,
    pub pass_label: LabelKind,
}

impl AssignmentRow {
    pub fn from_result(frame_id: &str, class_name: &str, r: &AssignmentResult) -> Self {
        Self {
            frame_id: frame_id.to_string(),
            anchor_index: r.anchor_index,
            class_name: class_name.to_string(),
            best_gt: r.best_gt,
            iou_box: r.iou_box,
            iou_point: r.iou_point,
            s: r.s,
            s_prime: r.s_prime,
            legacy_label: r.legacy_label.kind(),
            pass_label: r.pass_label.kind(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRecord {
    pub frame_id: String,
    pub anchor_index: usize,
    pub gt_index: Option<usize>,
    pub iou_box: f64,
    /// Absent when the point IoU of the pair was never evaluated.
    pub iou_point: Option<f64>,
    pub legacy_label: LabelKind,
    pub pass_label: LabelKind,
}

/// One record per anchor, describing its best pair. With `near_gt_only`,
/// anchors that overlap no ground truth (`s == 0`) are dropped.
pub fn collect_scatter<'a>(
    rows: impl IntoIterator<Item = &'a AssignmentRow>,
    near_gt_only: bool,
) -> Vec<ScatterRecord> {
    rows.into_iter()
        .filter(|r| !near_gt_only || r.s > 0.0)
        .map(|r| ScatterRecord {
            frame_id: r.frame_id.clone(),
            anchor_index: r.anchor_index,
            gt_index: r.best_gt,
            iou_box: r.iou_box,
            iou_point: r.iou_point,
            legacy_label: r.legacy_label,
            pass_label: r.pass_label,
        })
        .collect()
}

/// Keeps at most `limit` items, chosen uniformly with a seeded RNG, in
/// their original order.
pub fn subsample<T: Clone>(items: &[T], limit: usize, seed: u64) -> Vec<T> {
    if items.len() <= limit {
        return items.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, items.len(), limit).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub label_filter: LabelKind,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.bin_edges != other.bin_edges || self.label_filter != other.label_filter {
            return Err(Error::Input(
                "cannot merge histograms with different bins or labels".into(),
            ));
        }
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }
}

/// `n` equal-width bins over `[0, 1]`.
pub fn uniform_edges(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::Param(
            "histogram needs at least two bin edges".into(),
        ));
    }
    if !edges.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Param(format!(
            "bin edges must be strictly ascending: {edges:?}"
        )));
    }
    if edges[0] > 0.0 || edges[edges.len() - 1] < 1.0 {
        return Err(Error::Param(format!(
            "bin edges must cover [0, 1]: {edges:?}"
        )));
    }
    Ok(())
}

/// Bin of `v`: values on an interior edge go to the upper bin, the last
/// edge belongs to the last bin.
fn bin_of(edges: &[f64], v: f64) -> Option<usize> {
    let last = edges.len() - 2;
    if v < edges[0] || v > edges[last + 1] || v.is_nan() {
        return None;
    }
    Some((edges.partition_point(|&e| e <= v) - 1).min(last))
}

/// Point-IoU histogram over the records whose threshold-rule label is
/// `label`. Records without a point IoU are not counted.
pub fn histogram_iou_point(
    records: &[ScatterRecord],
    label: LabelKind,
    bin_edges: &[f64],
) -> Result<Histogram> {
    check_edges(bin_edges)?;
    let mut counts = vec![0u64; bin_edges.len() - 1];
    for r in records.iter().filter(|r| r.legacy_label == label) {
        if let Some(b) = r.iou_point.and_then(|v| bin_of(bin_edges, v)) {
            counts[b] += 1;
        }
    }
    Ok(Histogram {
        bin_edges: bin_edges.to_vec(),
        counts,
        label_filter: label,
    })
}

/// Tally of (threshold-rule label, point-assisted label) pairs, indexed by
/// [`LabelKind::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CrossingMatrix {
    pub counts: [[u64; 3]; 3],
}

impl CrossingMatrix {
    pub fn add(&mut self, legacy: LabelKind, pass: LabelKind) {
        self.counts[legacy.index()][pass.index()] += 1;
    }

    pub fn get(&self, legacy: LabelKind, pass: LabelKind) -> u64 {
        self.counts[legacy.index()][pass.index()]
    }

    pub fn merge(&mut self, other: &CrossingMatrix) {
        for i in 0..3 {
            for j in 0..3 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Negative -> positive plus positive -> negative transitions.
    pub fn forbidden(&self) -> u64 {
        self.get(LabelKind::Negative, LabelKind::Positive)
            + self.get(LabelKind::Positive, LabelKind::Negative)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| i == j || self.counts[i][j] == 0))
    }
}

pub fn crossing_matrix<I, T>(records: I) -> CrossingMatrix
where
    I: IntoIterator<Item = T>,
    T: LabelPair,
{
    let mut m = CrossingMatrix::default();
    for r in records {
        let (l, p) = r.labels();
        m.add(l, p);
    }
    m
}

/// Anything carrying a (threshold-rule, point-assisted) label pair.
pub trait LabelPair {
    fn labels(&self) -> (LabelKind, LabelKind);
}

impl LabelPair for &ScatterRecord {
    fn labels(&self) -> (LabelKind, LabelKind) {
        (self.legacy_label, self.pass_label)
    }
}

impl LabelPair for &AssignmentRow {
    fn labels(&self) -> (LabelKind, LabelKind) {
        (self.legacy_label, self.pass_label)
    }
}

impl LabelPair for &AssignmentResult {
    fn labels(&self) -> (LabelKind, LabelKind) {
        (self.legacy_label.kind(), self.pass_label.kind())
    }
}

// ---------------------------------------------------------------------------
// CSV

fn ratio(v: f64) -> String {
    format!("{v:.6}")
}

fn opt_ratio(v: Option<f64>) -> String {
    v.map(ratio).unwrap_or_default()
}

fn opt_index(v: Option<usize>) -> String {
    v.map(|i| i.to_string()).unwrap_or_default()
}

fn to_csv_bytes<const N: usize>(
    header: [&str; N],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Data(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Data(format!("csv encoding failed: {e}")))
}

/// Writes `bytes` to `path`, removing any partially written file on failure.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| {
        let _ = fs::remove_file(path);
        Error::io(path, e)
    })
}

fn assignment_fields(r: &AssignmentRow) -> Vec<String> {
    vec![
        r.frame_id.clone(),
        r.anchor_index.to_string(),
        r.class_name.clone(),
        opt_index(r.best_gt),
        ratio(r.iou_box),
        opt_ratio(r.iou_point),
        ratio(r.s),
        ratio(r.s_prime),
        r.legacy_label.to_string(),
        r.pass_label.to_string(),
    ]
}

pub fn assignment_csv(rows: &[AssignmentRow]) -> Result<Vec<u8>> {
    to_csv_bytes(ASSIGNMENT_HEADER, rows.iter().map(assignment_fields))
}

/// Streams assignment rows into a hidden sibling of the target path, which
/// [`AssignmentCsvWriter::finish`] renames into place. A writer dropped
/// before `finish` deletes its temporary file, so failed runs leave no
/// partial output.
pub struct AssignmentCsvWriter {
    path: PathBuf,
    tmp: PathBuf,
    inner: Option<csv::Writer<BufWriter<fs::File>>>,
}

impl AssignmentCsvWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let name = path
            .file_name()
            .ok_or_else(|| Error::Usage(format!("{}: not a file path", path.display())))?;
        let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
        let file = fs::File::create(&tmp).map_err(|e| Error::io(&path, e))?;
        let mut w = Self {
            inner: Some(csv::Writer::from_writer(BufWriter::new(file))),
            path,
            tmp,
        };
        w.write_record(ASSIGNMENT_HEADER.iter().map(|s| s.to_string()).collect())?;
        Ok(w)
    }

    fn write_record(&mut self, fields: Vec<String>) -> Result<()> {
        let w = self.inner.as_mut().expect("writer is open until finish");
        w.write_record(&fields)
            .map_err(|e| Error::Data(format!("{}: {e}", self.path.display())))
    }

    pub fn write_rows(&mut self, rows: &[AssignmentRow]) -> Result<()> {
        rows.iter()
            .try_for_each(|r| self.write_record(assignment_fields(r)))
    }

    pub fn finish(mut self) -> Result<()> {
        let w = self.inner.take().expect("finish called once");
        let mut buf = w
            .into_inner()
            .map_err(|e| Error::io(&self.path, std::io::Error::other(e.to_string())))?;
        let result = buf
            .flush()
            .and_then(|_| fs::rename(&self.tmp, &self.path))
            .map_err(|e| Error::io(&self.path, e));
        if result.is_err() {
            let _ = fs::remove_file(&self.tmp);
        }
        result
    }
}

impl Drop for AssignmentCsvWriter {
    fn drop(&mut self) {
        if self.inner.take().is_some() {
            let _ = fs::remove_file(&self.tmp);
        }
    }
}

pub fn scatter_csv(records: &[ScatterRecord]) -> Result<Vec<u8>> {
    to_csv_bytes(
        SCATTER_HEADER,
        records.iter().map(|r| {
            vec![
                r.frame_id.clone(),
                r.anchor_index.to_string(),
                opt_index(r.gt_index),
                ratio(r.iou_box),
                opt_ratio(r.iou_point),
                r.legacy_label.to_string(),
                r.pass_label.to_string(),
            ]
        }),
    )
}

pub fn histogram_csv(h: &Histogram) -> Result<Vec<u8>> {
    to_csv_bytes(
        HISTOGRAM_HEADER,
        h.counts.iter().enumerate().map(|(i, c)| {
            vec![
                ratio(h.bin_edges[i]),
                ratio(h.bin_edges[i + 1]),
                c.to_string(),
            ]
        }),
    )
}

pub fn crossing_csv(m: &CrossingMatrix) -> Result<Vec<u8>> {
    to_csv_bytes(
        CROSSING_HEADER,
        LabelKind::ALL.iter().flat_map(|&l| {
            LabelKind::ALL
                .iter()
                .map(move |&p| vec![l.to_string(), p.to_string(), m.get(l, p).to_string()])
        }),
    )
}

pub fn write_assignment_csv(path: impl AsRef<Path>, rows: &[AssignmentRow]) -> Result<()> {
    write_file(path.as_ref(), &assignment_csv(rows)?)
}

pub fn write_scatter_csv(path: impl AsRef<Path>, records: &[ScatterRecord]) -> Result<()> {
    write_file(path.as_ref(), &scatter_csv(records)?)
}

pub fn write_histogram_csv(path: impl AsRef<Path>, h: &Histogram) -> Result<()> {
    write_file(path.as_ref(), &histogram_csv(h)?)
}

pub fn write_crossing_csv(path: impl AsRef<Path>, m: &CrossingMatrix) -> Result<()> {
    write_file(path.as_ref(), &crossing_csv(m)?)
}

struct CsvTable {
    path: std::path::PathBuf,
    rows: Vec<csv::StringRecord>,
}

impl CsvTable {
    fn read(path: &Path, header: &[&str]) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let got = rdr
            .headers()
            .map_err(|e| Error::format(path, e.to_string()))?
            .clone();
        if got.iter().ne(header.iter().copied()) {
            return Err(Error::format(
                path,
                format!(
                    "unexpected header {:?}, expected {:?}",
                    got.iter().collect::<Vec<_>>(),
                    header
                ),
            ));
        }
        let rows = rdr
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(Self {
            path: path.to_path_buf(),
            rows,
        })
    }

    fn field<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let raw = &self.rows[row][col];
        raw.parse().map_err(|_| {
            Error::format(
                &self.path,
                format!("line {}: bad value {raw:?} in column {}", row + 2, col + 1),
            )
        })
    }

    fn opt_field<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<Option<T>> {
        if self.rows[row][col].is_empty() {
            Ok(None)
        } else {
            self.field(row, col).map(Some)
        }
    }
}

pub fn read_assignment_csv(path: impl AsRef<Path>) -> Result<Vec<AssignmentRow>> {
    let t = CsvTable::read(path.as_ref(), &ASSIGNMENT_HEADER)?;
    (0..t.rows.len())
        .map(|i| {
            Ok(AssignmentRow {
                frame_id: t.rows[i][0].to_string(),
                anchor_index: t.field(i, 1)?,
                class_name: t.rows[i][2].to_string(),
                best_gt: t.opt_field(i, 3)?,
                iou_box: t.field(i, 4)?,
                iou_point: t.opt_field(i, 5)?,
                s: t.field(i, 6)?,
                s_prime: t.field(i, 7)?,
                legacy_label: t.field(i, 8)?,
                pass_label: t.field(i, 9)?,
            })
        })
        .collect()
}

pub fn read_scatter_csv(path: impl AsRef<Path>) -> Result<Vec<ScatterRecord>> {
    let t = CsvTable::read(path.as_ref(), &SCATTER_HEADER)?;
    (0..t.rows.len())
        .map(|i| {
            Ok(ScatterRecord {
                frame_id: t.rows[i][0].to_string(),
                anchor_index: t.field(i, 1)?,
                gt_index: t.opt_field(i, 2)?,
                iou_box: t.field(i, 3)?,
                iou_point: t.opt_field(i, 4)?,
                legacy_label: t.field(i, 5)?,
                pass_label: t.field(i, 6)?,
            })
        })
        .collect()
}

/// Reads bins back; the label filter is not part of the file and is
/// supplied by the caller.
pub fn read_histogram_csv(path: impl AsRef<Path>, label: LabelKind) -> Result<Histogram> {
    let t = CsvTable::read(path.as_ref(), &HISTOGRAM_HEADER)?;
    let mut bin_edges = Vec::new();
    let mut counts = Vec::new();
    for i in 0..t.rows.len() {
        if i == 0 {
            bin_edges.push(t.field(i, 0)?);
        }
        bin_edges.push(t.field(i, 1)?);
        counts.push(t.field(i, 2)?);
    }
    Ok(Histogram {
        bin_edges,
        counts,
        label_filter: label,
    })
}

pub fn read_crossing_csv(path: impl AsRef<Path>) -> Result<CrossingMatrix> {
    let t = CsvTable::read(path.as_ref(), &CROSSING_HEADER)?;
    let mut m = CrossingMatrix::default();
    for i in 0..t.rows.len() {
        let l: LabelKind = t.field(i, 0)?;
        let p: LabelKind = t.field(i, 1)?;
        m.counts[l.index()][p.index()] = t.field(i, 2)?;
    }
    Ok(m)
}
