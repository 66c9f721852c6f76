use std::fs;
use std::path::{Path, PathBuf};

use pass_core::assignment::{assign_scene, AssignMode, AssignOptions, ClassAnchors, LabelKind};
use pass_core::bench::{run_bench, BenchSpec};
use pass_core::config::RunConfig;
use pass_core::ground::{remove_ground, GroundRemovalParams};
use pass_core::kitti_io::{
    discover_frames, load_scene, read_velodyne_bin, write_velodyne_bin, FramePaths,
};
use pass_core::pointcloud::build_index;
use pass_core::stats::{
    collect_scatter, crossing_matrix, histogram_iou_point, read_assignment_csv, subsample,
    uniform_edges, write_crossing_csv, write_histogram_csv, write_scatter_csv, AssignmentCsvWriter,
    AssignmentRow, CrossingMatrix,
};
use rayon::prelude::*;

use crate::{AssignArgs, BenchArgs, GroundArgs, Mode, StatsArgs, StatsKind};

/// Exit 1 for bad configuration or arguments, exit 2 for bad data.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Data(String),
}

impl Failure {
    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) => m,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl From<pass_core::Error> for Failure {
    fn from(e: pass_core::Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

fn config_failure(e: pass_core::Error) -> Failure {
    Failure::Config(e.to_string())
}

fn load_config(path: Option<&Path>) -> CmdResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).map_err(config_failure),
        None => Ok(RunConfig::default()),
    }
}

/// Frames named on the command line: roots are searched, `.bin` files
/// resolve their label and calibration next to the `velodyne` directory.
fn collect_frames(inputs: &[PathBuf]) -> CmdResult<Vec<FramePaths>> {
    let mut frames = Vec::new();
    for input in inputs {
        if input.is_file() {
            let id = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let root = input
                .parent()
                .and_then(Path::parent)
                .unwrap_or(Path::new("."));
            frames.push(FramePaths {
                label: root.join("label_2").join(format!("{id}.txt")),
                calib: root.join("calib").join(format!("{id}.txt")),
                cloud: input.clone(),
                frame_id: id,
            });
        } else {
            frames.extend(discover_frames(input)?);
        }
    }
    Ok(frames)
}

struct FrameOutput {
    rows: Vec<AssignmentRow>,
    dropped_points: usize,
    skipped_gts: usize,
}

fn process_frame(
    frame: &FramePaths,
    cfg: &RunConfig,
    anchors: &[ClassAnchors],
    mode: AssignMode,
) -> pass_core::Result<FrameOutput> {
    let scene = load_scene(&frame.cloud, &frame.label, &frame.calib)?;
    let n_gts = scene.gts.len();
    let gts: Vec<_> = scene
        .gts
        .into_iter()
        .filter(|g| cfg.classes.iter().any(|c| c.class_name == g.class_name))
        .collect();
    let wrap = |e: pass_core::Error| pass_core::Error::Frame {
        frame_id: frame.frame_id.clone(),
        source: Box::new(e),
    };
    let cloud = if cfg.ground_removal_enabled && scene.cloud.len() >= 3 {
        remove_ground(&scene.cloud, &cfg.ground)
            .map_err(wrap)?
            .cloud
    } else {
        if cfg.ground_removal_enabled {
            log::warn!(
                "frame {}: too few points for ground removal",
                frame.frame_id
            );
        }
        scene.cloud
    };
    let index = match mode {
        AssignMode::Pass => Some(build_index(&cloud, cfg.cell_size).map_err(wrap)?),
        AssignMode::Legacy => None,
    };
    let options = AssignOptions {
        mode,
        record_best_point_iou: cfg.record_best_point_iou,
    };
    let results = assign_scene(
        &cloud,
        index.as_ref(),
        &gts,
        anchors,
        &cfg.classes,
        &cfg.selection,
        options,
    )
    .map_err(wrap)?;
    let rows = results
        .iter()
        .map(|r| {
            AssignmentRow::from_result(&frame.frame_id, &cfg.classes[r.class_index].class_name, r)
        })
        .collect();
    Ok(FrameOutput {
        rows,
        dropped_points: scene.dropped_points,
        skipped_gts: n_gts - gts.len(),
    })
}

fn label_counts(m: &CrossingMatrix, legacy: bool) -> [u64; 3] {
    let mut out = [0u64; 3];
    for l in LabelKind::ALL {
        for p in LabelKind::ALL {
            let k = if legacy { l } else { p };
            out[k.index()] += m.get(l, p);
        }
    }
    out
}

fn print_counts(name: &str, c: [u64; 3]) {
    println!(
        "{name}: positive {} negative {} ignored {}",
        c[0], c[1], c[2]
    );
}

pub fn assign(args: &AssignArgs) -> CmdResult {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(k) = args.k {
        cfg.selection.k = k;
    }
    if let Some(alpha) = args.alpha {
        cfg.selection.alpha = alpha;
        cfg.selection.beta = 1.0 - alpha;
    }
    if let Some(seed) = args.seed {
        cfg.ground.seed = seed;
    }
    if args.no_ground {
        cfg.ground_removal_enabled = false;
    }
    cfg.validate().map_err(config_failure)?;
    let anchors = cfg.anchors().map_err(config_failure)?;
    let mode = match args.mode {
        Mode::Legacy => AssignMode::Legacy,
        Mode::Pass | Mode::Both => AssignMode::Pass,
    };

    let mut frames = collect_frames(&args.inputs)?;
    if let Some(limit) = args.limit {
        frames.truncate(limit);
    }

    let mut writer = AssignmentCsvWriter::create(&args.out)?;
    let mut crossing = CrossingMatrix::default();
    let (mut dropped, mut skipped) = (0usize, 0usize);
    // Frames run concurrently in batches; rows are written in input order.
    let batch = rayon::current_num_threads().max(1);
    for chunk in frames.chunks(batch) {
        let outputs: Vec<_> = chunk
            .par_iter()
            .map(|f| process_frame(f, &cfg, &anchors, mode))
            .collect();
        for out in outputs {
            let out = out?;
            writer.write_rows(&out.rows)?;
            crossing.merge(&crossing_matrix(&out.rows));
            dropped += out.dropped_points;
            skipped += out.skipped_gts;
        }
    }
    writer.finish()?;

    println!("frames: {}, anchors: {}", frames.len(), crossing.total());
    if dropped > 0 {
        println!("non-finite points dropped: {dropped}");
    }
    if skipped > 0 {
        println!("ground truths of unconfigured classes skipped: {skipped}");
    }
    if matches!(args.mode, Mode::Legacy | Mode::Both) {
        print_counts("threshold rule", label_counts(&crossing, true));
    }
    if matches!(args.mode, Mode::Pass | Mode::Both) {
        print_counts("point assisted", label_counts(&crossing, false));
        println!("crossings (threshold rule -> point assisted):");
        for l in LabelKind::ALL {
            for p in LabelKind::ALL {
                if l != p {
                    println!("  {l} -> {p}: {}", crossing.get(l, p));
                }
            }
        }
    }
    Ok(())
}

pub fn stats(args: &StatsArgs) -> CmdResult {
    let cfg = load_config(args.config.as_deref())?;
    let limit = args.limit.or(cfg.subsample.limit);
    let seed = args.seed.unwrap_or(cfg.subsample.seed);
    let edges = uniform_edges(args.bins);
    let rows = read_assignment_csv(&args.input)?;
    let mut records = collect_scatter(&rows, args.near_gt_only);
    if let Some(limit) = limit {
        records = subsample(&records, limit, seed);
    }
    match args.kind {
        StatsKind::Scatter => write_scatter_csv(&args.out, &records)?,
        StatsKind::Hist => {
            let h =
                histogram_iou_point(&records, args.label.into(), &edges).map_err(config_failure)?;
            write_histogram_csv(&args.out, &h)?;
            println!("{} {} records binned", h.total(), h.label_filter);
        }
        StatsKind::Crossing => {
            let m = crossing_matrix(&records);
            write_crossing_csv(&args.out, &m)?;
            println!("forbidden crossings: {}", m.forbidden());
        }
    }
    println!("{} records -> {}", records.len(), args.out.display());
    Ok(())
}

pub fn ground(args: &GroundArgs) -> CmdResult {
    let defaults = GroundRemovalParams::default();
    let params = GroundRemovalParams {
        dist_thresh: args.dist_thresh.unwrap_or(defaults.dist_thresh),
        iterations: args.iterations.unwrap_or(defaults.iterations),
        max_normal_tilt: args
            .max_tilt_deg
            .map_or(defaults.max_normal_tilt, f64::to_radians),
        seed: args.seed.unwrap_or(defaults.seed),
        min_inlier_fraction: args
            .min_inlier_fraction
            .unwrap_or(defaults.min_inlier_fraction),
    };
    params.validate().map_err(config_failure)?;
    let scan = read_velodyne_bin(&args.input)?;
    let removal = remove_ground(&scan.cloud, &params)?;
    match removal.plane {
        Some(p) => {
            write_velodyne_bin(&args.out, &removal.cloud)?;
            println!(
                "{} {} {} {} {}",
                p.a,
                p.b,
                p.c,
                p.d,
                removal.removed_count(scan.cloud.len())
            );
        }
        None => {
            fs::copy(&args.input, &args.out)
                .map_err(|e| Failure::Data(format!("{}: {e}", args.out.display())))?;
            eprintln!("warning: no ground plane found; input copied unchanged");
        }
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> CmdResult {
    let cfg = load_config(args.config.as_deref())?;
    if args.scenes == 0 {
        println!("0 scenes requested; nothing to time");
        return Ok(());
    }
    let spec = BenchSpec {
        scenes: args.scenes,
        n_gts: args.gts,
        n_points: args.points,
        seed: args.seed,
    };
    let r = run_bench(&cfg, &spec)?;
    println!(
        "scenes {}, anchors/scene {}, gts {}, points {}, threads {}",
        r.scenes,
        r.anchors_per_scene,
        spec.n_gts,
        spec.n_points,
        rayon::current_num_threads()
    );
    println!("ground removal  {:>9.3} s", r.ground.as_secs_f64());
    println!(
        "threshold rule  {:>9.3} s  {:.3e} anchors/s",
        r.legacy.as_secs_f64(),
        r.anchors_per_second(r.legacy)
    );
    println!(
        "point assisted  {:>9.3} s  {:.3e} anchors/s",
        r.pass.as_secs_f64(),
        r.anchors_per_second(r.pass)
    );
    println!("overhead ratio  {:.2}", r.overhead_ratio());
    println!("forbidden crossings {}", r.crossing.forbidden());
    println!("digest {:016x}", r.digest);
    Ok(())
}
