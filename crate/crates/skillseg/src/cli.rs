//! Command-line pipeline: ingest keypoints, train and run the classifier,
//! smooth predictions into timelines, evaluate, synthesize test data, and
//! render timeline strips.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::error::{Error, Result};
use crate::files::{atomic_write, read_json, write_json};
use crate::heuristic::{heuristic_segment, HeuristicConfig};
use crate::metrics::{
    edge_distance_accuracy, frame_metrics, merge_edge_bins, seg_report, thresholds, EdgeBin,
    FrameReport, SegReport, DEFAULT_EDGE_BIN_WIDTH, DEFAULT_THRESHOLD_COUNT,
};
use crate::mlp::{LabeledFrame, MlpModel, ProbSequence, TrainConfig};
use crate::pose::{load_annotation, load_video_features, split_dataset, FeatureSequence, VideoMeta};
use crate::render::{render_svg, render_text};
use crate::synth::{gen_bundle, SynthConfig};
use crate::timeline::{
    labels_to_segments, segments_to_labels, LabelSequence, SkillClass, Timeline, DEFAULT_FPS,
};
use crate::viterbi::{decode_sequence, TransitionModel};

#[derive(Parser, Debug)]
#[command(name = "skillseg", version, about = "Temporal segmentation of calisthenics skills")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a directory of OpenPose keypoint files into a feature cache
    Ingest(IngestArgs),
    /// Train the per-frame classifier on feature caches plus annotations
    Train(TrainArgs),
    /// Run a trained model over feature caches, writing probability files
    Predict(PredictArgs),
    /// Turn per-frame probabilities into a segment timeline
    Segment(SegmentArgs),
    /// Score predicted timelines against ground truth
    Eval(EvalArgs),
    /// Generate synthetic ground truth and simulated classifier output
    Synth(SynthArgs),
    /// Render timelines as side-by-side strips (text or SVG)
    Render(RenderArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Directory holding one OpenPose JSON record per frame
    #[arg(long)]
    pub keypoints: PathBuf,
    /// Video id recorded in the cache (default: directory name)
    #[arg(long)]
    pub video_id: Option<String>,
    /// Frame width in pixels (overrides meta.json)
    #[arg(long)]
    pub width: Option<f64>,
    /// Frame height in pixels (overrides meta.json)
    #[arg(long)]
    pub height: Option<f64>,
    /// Frames per second (overrides meta.json)
    #[arg(long)]
    pub fps: Option<f64>,
    /// Output feature cache path
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Directory of feature cache files (*.json)
    #[arg(long)]
    pub features: PathBuf,
    /// Directory of annotation files named <video_id>.json
    #[arg(long)]
    pub annotations: PathBuf,
    /// Output model path
    #[arg(long, short)]
    pub out: PathBuf,
    /// Loss history CSV path (default: <out>.loss.csv)
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "leaky_relu")]
    pub activation: String,
    /// Hidden layer widths
    #[arg(long, default_value = "256,128,64", value_parser = parse_hidden)]
    pub hidden: HiddenDims,
    /// Train on a deterministic fraction of the videos (e.g. 0.8), holding
    /// the rest out; the split is written next to the model
    #[arg(long)]
    pub split_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct HiddenDims(pub [usize; 3]);

fn parse_hidden(s: &str) -> std::result::Result<HiddenDims, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated widths, got `{s}`"));
    }
    let mut dims = [0usize; 3];
    for (d, p) in dims.iter_mut().zip(&parts) {
        *d = p.trim().parse().map_err(|_| format!("bad width `{p}`"))?;
    }
    Ok(HiddenDims(dims))
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature cache file, or a directory of them
    #[arg(long)]
    pub features: PathBuf,
    /// Output file (single input) or directory
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Per-frame argmax, run-length encoded
    Raw,
    /// Sliding-window mode heuristic
    Heuristic,
    /// Markov-chain Viterbi decoding
    Viterbi,
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    /// Probability file, or a directory of them
    #[arg(long)]
    pub probs: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Switch probability for the viterbi method
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Window multiplier for the heuristic method
    #[arg(long, default_value_t = 32)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub stride: usize,
    #[arg(long, default_value_t = 2)]
    pub fnr_radius: usize,
    /// Output file (single input) or directory
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted timeline file or directory
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth timeline file or directory
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Edge-distance bin width in frames
    #[arg(long, default_value_t = DEFAULT_EDGE_BIN_WIDTH)]
    pub bins: usize,
    /// Number of SF1 thresholds
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_COUNT)]
    pub thresholds: usize,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub videos: usize,
    /// Total frames per video, as lo:hi
    #[arg(long, default_value = "300:600", value_parser = parse_range)]
    pub frames: FrameRange,
    /// Segment length range in frames, as lo:hi
    #[arg(long, default_value = "100:180", value_parser = parse_range)]
    pub segment_len: FrameRange,
    #[arg(long, default_value_t = 9)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    #[arg(long, default_value_t = false)]
    pub edge_bias: bool,
    #[arg(long, default_value_t = DEFAULT_FPS)]
    pub fps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct FrameRange(pub usize, pub usize);

fn parse_range(s: &str) -> std::result::Result<FrameRange, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo = lo.trim().parse().map_err(|_| format!("bad bound `{lo}`"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad bound `{hi}`"))?;
    if lo > hi {
        return Err(format!("empty range `{s}`"));
    }
    Ok(FrameRange(lo, hi))
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Timeline files to render side by side
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output path; `.svg` renders SVG, anything else (or stdout) text
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    info!("resolved config: {:?}", cli.command);
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Segment(args) => segment(args),
        Command::Eval(args) => eval(args),
        Command::Synth(args) => synth(args),
        Command::Render(args) => render(args),
    }
}

fn require_exists(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ));
    }
    Ok(())
}

/// Expands a file-or-directory argument into the JSON files underneath it.
fn json_inputs(path: &Path) -> Result<Vec<PathBuf>> {
    require_exists(path)?;
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no .json files"),
        ));
    }
    Ok(files)
}

fn ingest(args: IngestArgs) -> Result<()> {
    require_exists(&args.keypoints)?;
    let meta_path = args.keypoints.join("meta.json");
    let base: Option<VideoMeta> = if meta_path.is_file() {
        Some(read_json(&meta_path)?)
    } else {
        None
    };
    // corpus defaults: 960x540 at 24 fps
    let meta = VideoMeta {
        width: args.width.or(base.map(|m| m.width)).unwrap_or(960.0),
        height: args.height.or(base.map(|m| m.height)).unwrap_or(540.0),
        fps: args.fps.or(base.map(|m| m.fps)).unwrap_or(DEFAULT_FPS),
    };
    let video_id = args.video_id.clone().unwrap_or_else(|| {
        args.keypoints
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "video".into())
    });
    let seq = load_video_features(&args.keypoints, video_id, &meta)?;
    seq.save(&args.out)?;
    println!("ingested {} frames into {}", seq.len(), args.out.display());
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let feature_files = json_inputs(&args.features)?;
    require_exists(&args.annotations)?;

    let mut sequences = Vec::new();
    for path in &feature_files {
        sequences.push(FeatureSequence::load(path)?);
    }

    let mut selected_ids: Option<Vec<String>> = None;
    if let Some(ratio) = args.split_ratio {
        let ids: Vec<String> = sequences.iter().map(|s| s.video_id.clone()).collect();
        let split = split_dataset(&ids, ratio, args.seed)?;
        let split_path = args.out.with_extension("split.json");
        write_json(&split_path, &split)?;
        println!(
            "split {} videos into {} train / {} test ({})",
            ids.len(),
            split.train.len(),
            split.test.len(),
            split_path.display()
        );
        selected_ids = Some(split.train);
    }

    let mut data: Vec<LabeledFrame> = Vec::new();
    for seq in &sequences {
        if let Some(ids) = &selected_ids {
            if !ids.contains(&seq.video_id) {
                continue;
            }
        }
        let ann_path = args.annotations.join(format!("{}.json", seq.video_id));
        let gt = load_annotation(&ann_path)?;
        if gt.timeline.n_frames != seq.len() {
            return Err(Error::DimensionMismatch {
                expected: gt.timeline.n_frames,
                got: seq.len(),
            });
        }
        let labels = segments_to_labels(&gt.timeline)?;
        for (features, &label) in seq.frames.iter().zip(&labels.labels) {
            data.push(LabeledFrame {
                features: features.clone(),
                label,
            });
        }
    }

    let cfg = TrainConfig {
        batch_size: args.batch_size,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        seed: args.seed,
        activation: args.activation.parse()?,
        ..TrainConfig::default()
    };
    let mut model = MlpModel::new(args.hidden.0, cfg.activation, args.seed)?;
    info!("training on {} frames, {} params", data.len(), model.num_params());
    let history = model.train(&data, &cfg)?;
    model.save(&args.out)?;

    let loss_csv = args
        .loss_csv
        .clone()
        .unwrap_or_else(|| args.out.with_extension("loss.csv"));
    let mut csv = String::from("epoch,mean_loss\n");
    for (epoch, loss) in history.iter().enumerate() {
        writeln!(csv, "{},{loss}", epoch + 1).expect("string write");
    }
    atomic_write(&loss_csv, csv.as_bytes())?;

    let acc = model.accuracy(&data)?;
    println!(
        "trained {} epochs, final loss {:.6}, train accuracy {:.4}, model {}",
        history.len(),
        history.last().unwrap(),
        acc,
        args.out.display()
    );
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    require_exists(&args.model)?;
    let model = MlpModel::load(&args.model)?;
    let inputs = json_inputs(&args.features)?;
    let to_dir = inputs.len() > 1 || args.out.is_dir();
    for path in &inputs {
        let seq = FeatureSequence::load(path)?;
        let probs = model.predict_sequence(&seq)?;
        let out = if to_dir {
            args.out.join(format!("{}.probs.json", probs.video_id))
        } else {
            args.out.clone()
        };
        probs.save(&out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn segment_one(probs: &ProbSequence, args: &SegmentArgs) -> Result<Timeline> {
    probs.validate()?;
    let mut timeline = match args.method {
        Method::Raw => labels_to_segments(&probs.argmax_labels()?)?,
        Method::Heuristic => {
            let cfg = HeuristicConfig {
                m: args.m,
                stride: args.stride,
                fnr_radius: args.fnr_radius,
                ..HeuristicConfig::default()
            };
            heuristic_segment(&probs.argmax_labels()?, &cfg)?
        }
        Method::Viterbi => {
            let model = TransitionModel::new(crate::timeline::NUM_CLASSES, args.epsilon)?;
            labels_to_segments(&decode_sequence(probs, &model)?)?
        }
    };
    timeline.video_id = probs.video_id.clone();
    timeline.validate()?;
    Ok(timeline)
}

fn segment(args: SegmentArgs) -> Result<()> {
    let inputs = json_inputs(&args.probs)?;
    let to_dir = inputs.len() > 1 || args.out.is_dir();
    for path in &inputs {
        let probs = ProbSequence::load(path)?;
        let timeline = segment_one(&probs, &args)?;
        let out = if to_dir {
            args.out.join(format!("{}.timeline.json", timeline.video_id))
        } else {
            args.out.clone()
        };
        write_json(&out, &timeline)?;
        println!("wrote {} ({} segments)", out.display(), timeline.segments.len());
    }
    Ok(())
}

fn load_timelines(path: &Path, annotations: bool) -> Result<BTreeMap<String, Timeline>> {
    let mut map = BTreeMap::new();
    for file in json_inputs(path)? {
        let tl = if annotations {
            load_annotation(&file)?.timeline
        } else {
            let tl: Timeline = read_json(&file)?;
            tl.validate()?;
            tl
        };
        map.insert(tl.video_id.clone(), tl);
    }
    Ok(map)
}

fn eval(args: EvalArgs) -> Result<()> {
    let preds = load_timelines(&args.pred, false)?;
    let gts = load_timelines(&args.gt, true)?;

    let mut pred_list = Vec::new();
    let mut gt_list = Vec::new();
    let mut pred_labels: Vec<SkillClass> = Vec::new();
    let mut gt_labels: Vec<SkillClass> = Vec::new();
    let mut edge_bins: Vec<Vec<EdgeBin>> = Vec::new();
    for (id, pred) in &preds {
        let gt = gts
            .get(id)
            .ok_or_else(|| Error::InvalidConfig(format!("no ground truth for video `{id}`")))?;
        if pred.n_frames != gt.n_frames {
            return Err(Error::DimensionMismatch {
                expected: gt.n_frames,
                got: pred.n_frames,
            });
        }
        let p = segments_to_labels(pred)?;
        let g = segments_to_labels(gt)?;
        edge_bins.push(edge_distance_accuracy(&p, gt, args.bins)?);
        pred_labels.extend(p.labels);
        gt_labels.extend(g.labels);
        pred_list.push(pred.clone());
        gt_list.push(gt.clone());
    }

    let grid = thresholds(args.thresholds);
    let frame = frame_metrics(
        &LabelSequence::with_default_fps(pred_labels)?,
        &LabelSequence::with_default_fps(gt_labels)?,
    )?;
    let segs = seg_report(&pred_list, &gt_list, &grid);
    let edges = merge_edge_bins(&edge_bins);

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    write_frame_csv(&args.out_dir.join("frame_report.csv"), &frame)?;
    write_seg_csv(&args.out_dir.join("seg_report.csv"), &segs)?;
    write_curve_csv(&args.out_dir.join("sf1_curve.csv"), &segs)?;
    write_edge_csv(&args.out_dir.join("edge_accuracy.csv"), &edges)?;

    #[derive(serde::Serialize)]
    struct Summary<'a> {
        n_videos: usize,
        frame: &'a FrameReport,
        segments: &'a SegReport,
        edge_bins: &'a [EdgeBin],
    }
    write_json(
        &args.out_dir.join("summary.json"),
        &Summary {
            n_videos: pred_list.len(),
            frame: &frame,
            segments: &segs,
            edge_bins: &edges,
        },
    )?;

    println!(
        "evaluated {} videos: accuracy {:.4}, mASF1 {:.4}",
        pred_list.len(),
        frame.accuracy,
        segs.masf1
    );
    Ok(())
}

fn write_frame_csv(path: &Path, report: &FrameReport) -> Result<()> {
    let mut csv = String::from("class,precision,recall,f1,support\n");
    for m in &report.per_class {
        writeln!(csv, "{},{:.6},{:.6},{:.6},{}", m.class, m.precision, m.recall, m.f1, m.support)
            .expect("string write");
    }
    writeln!(
        csv,
        "macro,{:.6},{:.6},{:.6},\naccuracy,{:.6},,,",
        report.macro_precision, report.macro_recall, report.macro_f1, report.accuracy
    )
    .expect("string write");
    atomic_write(path, csv.as_bytes())
}

fn write_seg_csv(path: &Path, report: &SegReport) -> Result<()> {
    let mut csv = String::from("class,asf1\n");
    for c in &report.per_class {
        match c.asf1 {
            Some(v) => writeln!(csv, "{},{v:.6}", c.class).expect("string write"),
            None => writeln!(csv, "{},", c.class).expect("string write"),
        }
    }
    writeln!(csv, "mASF1,{:.6}", report.masf1).expect("string write");
    atomic_write(path, csv.as_bytes())
}

fn write_curve_csv(path: &Path, report: &SegReport) -> Result<()> {
    let mut csv = String::from("t,mean");
    for c in &report.per_class {
        write!(csv, ",{}", c.class).expect("string write");
    }
    csv.push('\n');
    for (i, t) in report.thresholds.iter().enumerate() {
        write!(csv, "{t:.2},{:.6}", report.mean_curve[i]).expect("string write");
        for c in &report.per_class {
            if c.asf1.is_some() {
                write!(csv, ",{:.6}", c.curve[i]).expect("string write");
            } else {
                csv.push(',');
            }
        }
        csv.push('\n');
    }
    atomic_write(path, csv.as_bytes())
}

fn write_edge_csv(path: &Path, bins: &[EdgeBin]) -> Result<()> {
    let mut csv = String::from("distance_lo,distance_hi,frames,correct,accuracy\n");
    for b in bins {
        writeln!(csv, "{},{},{},{},{:.6}", b.lo, b.hi, b.total, b.correct, b.accuracy())
            .expect("string write");
    }
    atomic_write(path, csv.as_bytes())
}

fn synth(args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_videos: args.videos,
        frames: (args.frames.0, args.frames.1),
        segment_len: (args.segment_len.0, args.segment_len.1),
        class_count: args.classes,
        noise: args.noise,
        alpha: args.alpha,
        edge_bias: args.edge_bias,
        fps: args.fps,
        seed: args.seed,
    };
    let bundle = gen_bundle(&cfg)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    for video in &bundle {
        write_json(
            &args.out_dir.join(format!("{}.gt.json", video.gt.video_id)),
            &video.gt,
        )?;
        video
            .probs
            .save(&args.out_dir.join(format!("{}.probs.json", video.gt.video_id)))?;
    }
    write_json(&args.out_dir.join("synth_config.json"), &cfg)?;
    println!("wrote {} synthetic videos to {}", bundle.len(), args.out_dir.display());
    Ok(())
}

fn render(args: RenderArgs) -> Result<()> {
    let mut timelines = Vec::new();
    for path in &args.inputs {
        let tl: Timeline = read_json(path)?;
        tl.validate()?;
        timelines.push(tl);
    }
    match &args.out {
        None => {
            print!("{}", render_text(&timelines));
        }
        Some(path) if path.extension().and_then(|e| e.to_str()) == Some("svg") => {
            atomic_write(path, render_svg(&timelines).as_bytes())?;
            println!("wrote {}", path.display());
        }
        Some(path) => {
            atomic_write(path, render_text(&timelines).as_bytes())?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
