//! Command implementations behind the `ghost` binary.
//!
//! Data goes to files or stdout; summaries and config echoes go to stderr so
//! outputs stay pipe-safe.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;

use ghost_core::analysis::{
    build_distance_histograms, compute_idf1, compute_mota, compute_rca, default_edges, find_intersection_point,
    match_to_gt, DistanceHistograms, DistanceMode, IntersectionPoint, Population, RcaBinning, RcaReport,
};
use ghost_core::appearance::RenormParams;
use ghost_core::io::{
    read_config, read_embeddings, read_mot, read_mot_filtered, read_renorm_params, read_seqinfo, write_mot_results,
    GtFilter, MotKind,
};
use ghost_core::synth::{generate, MotionLaw, SynthParams, SYNTH_PRESETS};
use ghost_core::{track_sequence, Detection, SequenceMeta, TrackerConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ghost_core::Error),
    #[error("unknown synthetic preset `{0}` (expected one of: {presets})", presets = SYNTH_PRESETS.join(", "))]
    UnknownSynthPreset(String),
    #[error("unknown tracker preset `{0}`")]
    UnknownConfigPreset(String),
    #[error("unknown metric `{0}` (expected mota, idf1 or rca)")]
    UnknownMetric(String),
    #[error("{0}")]
    MissingInput(&'static str),
    #[error("{path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn core<E: Into<ghost_core::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "ghost", version, about = "Tracking-by-detection association with active/inactive track handling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Associate detections into tracks and write a MOT results file.
    Track(TrackArgs),
    /// Generate a synthetic sequence (gt.txt, det.txt, embeddings.gemb, seqinfo.ini).
    Synth(SynthArgs),
    /// Score a results file against ground truth.
    Eval(EvalArgs),
    /// Build distance histograms and suggest matching thresholds.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    /// MOT detection file.
    #[arg(long)]
    pub det: PathBuf,
    /// GEMB embeddings keyed by (frame, row index within frame).
    #[arg(long)]
    pub emb: Option<PathBuf>,
    /// seqinfo.ini; its seqLength sets the number of frames.
    #[arg(long)]
    pub seqinfo: Option<PathBuf>,
    /// Flat key=value tracker config.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Named tracker parameters (mot17, crowded, erratic, moving-camera).
    #[arg(long)]
    pub preset: Option<String>,
    /// GBNP file with per-dimension renormalization gamma/beta.
    #[arg(long)]
    pub bn_params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "clean")]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub identities: Option<usize>,
    #[arg(long)]
    pub frames: Option<u32>,
    #[arg(long)]
    pub frame_rate: Option<f64>,
    #[arg(long)]
    pub box_noise: Option<f64>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub embedding_noise: Option<f64>,
    #[arg(long)]
    pub miss_rate: Option<f64>,
    #[arg(long)]
    pub fp_rate: Option<f64>,
    /// Use distinct basis vectors as identity prototypes.
    #[arg(long)]
    pub orthogonal: bool,
    /// Sinusoidal instead of linear motion.
    #[arg(long)]
    pub sinusoidal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinsArg {
    Visibility,
    Occlusion,
    Camera,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub res: PathBuf,
    #[arg(long)]
    pub seqinfo: Option<PathBuf>,
    /// Comma-separated subset of mota, idf1, rca.
    #[arg(long, default_value = "mota,idf1")]
    pub metrics: String,
    #[arg(long, value_enum, default_value = "occlusion")]
    pub bins: BinsArg,
    #[arg(long, default_value_t = 0.5)]
    pub iou_min: f64,
    /// Also write one JSON record per line (per metric / per bin).
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Last,
    Proxy,
    Motion,
}

impl From<ModeArg> for DistanceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Last => DistanceMode::Last,
            ModeArg::Proxy => DistanceMode::Proxy,
            ModeArg::Motion => DistanceMode::Motion,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub det: PathBuf,
    #[arg(long)]
    pub emb: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "proxy")]
    pub mode: ModeArg,
    /// Supplies inactive_patience, proxy method and renormalization settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub suggest_thresholds: bool,
    #[arg(long)]
    pub records: Option<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match &cli.command {
        Command::Track(a) => {
            let s = cmd_track(a)?;
            eprintln!("{s}");
        }
        Command::Synth(a) => {
            cmd_synth(a)?;
        }
        Command::Eval(a) => {
            let text = cmd_eval(a)?;
            let _ = stdout.write_all(text.as_bytes());
        }
        Command::Analyze(a) => {
            let text = cmd_analyze(a)?;
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    Ok(())
}

/// What `track` reports on stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSummary {
    pub tracks_born: usize,
    pub tracks_evicted: usize,
    pub frames: u32,
    pub elapsed_ms: f64,
}

impl std::fmt::Display for TrackSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "tracks born {}, evicted {}, frames {}, {:.1} ms",
            self.tracks_born, self.tracks_evicted, self.frames, self.elapsed_ms
        )
    }
}

fn load_tracker_config(config: Option<&Path>, preset: Option<&str>) -> Result<TrackerConfig, CliError> {
    match (config, preset) {
        (Some(p), _) => read_config(p).map_err(core),
        (None, Some(name)) => TrackerConfig::preset(name).ok_or_else(|| CliError::UnknownConfigPreset(name.into())),
        (None, None) => Ok(TrackerConfig::default()),
    }
}

fn load_detections(det: &Path, emb: Option<&Path>) -> Result<Vec<Detection>, CliError> {
    let mut dets = read_mot(det, MotKind::Detections).map_err(core)?;
    if let Some(path) = emb {
        let file = read_embeddings(path).map_err(core)?;
        let missing = file.attach(&mut dets);
        if missing > 0 {
            warn!("{missing} detections have no embedding in {}", path.display());
        }
    }
    Ok(dets)
}

pub fn cmd_track(args: &TrackArgs) -> Result<TrackSummary, CliError> {
    let start = Instant::now();
    let cfg = load_tracker_config(args.config.as_deref(), args.preset.as_deref())?;
    eprintln!("config: {}", cfg.to_kv_string().trim_end().replace('\n', " "));
    let dets = load_detections(&args.det, args.emb.as_deref())?;
    let num_frames = match &args.seqinfo {
        Some(p) => Some(read_seqinfo(p).map_err(core)?.seq_length),
        None => None,
    };
    let renorm: Option<RenormParams> = match &args.bn_params {
        Some(p) => Some(read_renorm_params(p, cfg.bn_eps).map_err(core)?),
        None => None,
    };
    info!("tracking {} detections", dets.len());
    let out = track_sequence(&dets, &cfg, num_frames, renorm).map_err(core)?;
    write_mot_results(&args.out, &out.tracks).map_err(core)?;
    Ok(TrackSummary {
        tracks_born: out.tracks_born(),
        tracks_evicted: out.tracks_evicted(),
        frames: out.num_frames,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn synth_params(args: &SynthArgs) -> Result<SynthParams, CliError> {
    let mut p = SynthParams::preset(&args.preset, args.seed).ok_or_else(|| CliError::UnknownSynthPreset(args.preset.clone()))?;
    if let Some(v) = args.identities {
        p.n_identities = v;
    }
    if let Some(v) = args.frames {
        p.n_frames = v;
        p.occlusion_episodes.retain(|e| e.start_frame + e.length <= v);
    }
    if let Some(v) = args.frame_rate {
        p.frame_rate = v;
    }
    if let Some(v) = args.box_noise {
        p.box_noise_std = v;
    }
    if let Some(v) = args.embedding_dim {
        p.embedding_dim = v;
    }
    if let Some(v) = args.embedding_noise {
        p.embedding_noise_std = v;
    }
    if let Some(v) = args.miss_rate {
        p.miss_rate = v;
    }
    if let Some(v) = args.fp_rate {
        p.false_positive_rate = v;
    }
    if args.orthogonal {
        p.orthogonal_prototypes = true;
    }
    if args.sinusoidal {
        p.motion = MotionLaw::Sinusoidal;
    }
    Ok(p)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let params = synth_params(args)?;
    let seq = generate(&params).map_err(core)?;
    seq.write_to_dir(&args.out).map_err(core)?;
    eprintln!(
        "wrote {} gt rows, {} detections over {} frames to {}",
        seq.gt.len(),
        seq.dets.len(),
        params.n_frames,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Mota,
    Idf1,
    Rca,
}

fn parse_metrics(list: &str) -> Result<Vec<Metric>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.to_ascii_lowercase().as_str() {
            "mota" => Ok(Metric::Mota),
            "idf1" => Ok(Metric::Idf1),
            "rca" => Ok(Metric::Rca),
            _ => Err(CliError::UnknownMetric(s.to_string())),
        })
        .collect()
}

fn write_records(path: &Path, records: &[serde_json::Value]) -> Result<(), CliError> {
    let mut text = String::new();
    for r in records {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(write_err(path))
}

fn rca_records(report: &RcaReport) -> Vec<serde_json::Value> {
    report
        .bins
        .iter()
        .map(|b| {
            json!({
                "metric": "rca",
                "binning": report.binning,
                "bin": b.label,
                "lo": b.lo,
                "hi": if b.hi.is_finite() { json!(b.hi) } else { json!("inf") },
                "tp_ass": b.tp_ass,
                "fp_ass": b.fp_ass,
                "rca": b.rca(),
            })
        })
        .collect()
}

/// Returns the metric table printed on stdout.
pub fn cmd_eval(args: &EvalArgs) -> Result<String, CliError> {
    let metrics = parse_metrics(&args.metrics)?;
    let gt = read_mot_filtered(&args.gt, MotKind::GroundTruth, &GtFilter::default()).map_err(core)?;
    let res = read_mot(&args.res, MotKind::Results).map_err(core)?;
    let meta: Option<SequenceMeta> = match &args.seqinfo {
        Some(p) => Some(read_seqinfo(p).map_err(core)?),
        None => None,
    };

    let mut out = String::new();
    let mut records = Vec::new();
    for m in metrics {
        match m {
            Metric::Mota => {
                let r = compute_mota(&gt, &res, args.iou_min).map_err(core)?;
                out.push_str(&format!(
                    "MOTA\t{:.4}\tFP\t{}\tFN\t{}\tIDSW\t{}\n",
                    r.mota, r.fp, r.fn_, r.idsw
                ));
                records.push(json!({"metric": "mota", "value": r.mota, "fp": r.fp, "fn": r.fn_, "idsw": r.idsw}));
            }
            Metric::Idf1 => {
                let r = compute_idf1(&gt, &res, args.iou_min).map_err(core)?;
                out.push_str(&format!(
                    "IDF1\t{:.4}\tIDTP\t{}\tIDFP\t{}\tIDFN\t{}\n",
                    r.idf1, r.idtp, r.idfp, r.idfn
                ));
                records.push(json!({"metric": "idf1", "value": r.idf1, "idtp": r.idtp, "idfp": r.idfp, "idfn": r.idfn}));
            }
            Metric::Rca => {
                let meta = meta
                    .as_ref()
                    .ok_or(CliError::MissingInput("rca needs --seqinfo for frame rate and camera motion"))?;
                let binning = match args.bins {
                    BinsArg::Visibility => RcaBinning::visibility(),
                    BinsArg::Occlusion => RcaBinning::occlusion(),
                    BinsArg::Camera => RcaBinning::Camera,
                };
                let table = match_to_gt(&res, &gt, args.iou_min);
                let report = compute_rca(&table, &gt, meta, &binning).map_err(core)?;
                out.push_str(&report.to_string());
                records.extend(rca_records(&report));
            }
        }
    }
    if let Some(path) = &args.records {
        write_records(path, &records)?;
    }
    Ok(out)
}

/// Suggested `(tau_act, tau_inact)` intersection points, where both
/// populations of a pair are nonempty.
pub fn suggest_thresholds(h: &DistanceHistograms) -> (Option<IntersectionPoint>, Option<IntersectionPoint>) {
    let act = find_intersection_point(h.get(Population::ActiveSame), h.get(Population::ActiveDiff)).ok();
    let inact = find_intersection_point(h.get(Population::InactiveSame), h.get(Population::InactiveDiff)).ok();
    (act, inact)
}

/// Returns the histogram table (and suggestions) printed on stdout.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let mode = DistanceMode::from(args.mode);
    if mode != DistanceMode::Motion && args.emb.is_none() {
        return Err(CliError::MissingInput("--emb is required unless --mode motion"));
    }
    let cfg = load_tracker_config(args.config.as_deref(), None)?;
    let gt = read_mot_filtered(&args.gt, MotKind::GroundTruth, &GtFilter::default()).map_err(core)?;
    let dets = load_detections(&args.det, args.emb.as_deref())?;
    let h = build_distance_histograms(&gt, &dets, &cfg, mode, &default_edges(), None).map_err(core)?;

    let mut out = h.to_string();
    let mut records: Vec<serde_json::Value> = Vec::new();
    for hist in &h.histograms {
        for (i, w) in hist.edges.windows(2).enumerate() {
            records.push(json!({
                "population": hist.population.name(),
                "lo": w[0],
                "hi": w[1],
                "count": hist.counts[i],
            }));
        }
    }
    if args.suggest_thresholds {
        let (act, inact) = suggest_thresholds(&h);
        for (name, p) in [("tau_act", act), ("tau_inact", inact)] {
            match p {
                Some(p) => {
                    out.push_str(&format!("suggested {name}\t{:.4}\tcost\t{:.4}\n", p.x, p.cost));
                    records.push(json!({"suggestion": name, "x": p.x, "cost": p.cost}));
                }
                None => out.push_str(&format!("suggested {name}\t-\t(empty population)\n")),
            }
        }
    }
    if let Some(path) = &args.records {
        write_records(path, &records)?;
    }
    Ok(out)
}
