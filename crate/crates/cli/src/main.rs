//! `crowd-psyche` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crowd_psyche::analysis::{
    density_plot_rows, density_series, pearson, write_density_csv, write_plot_csv, Roi,
    VideoSummary, DEFAULT_CONE_HALF_ANGLE, SUMMARY_SCHEMA_VERSION,
};
use crowd_psyche::emotion::EmotionMode;
use crowd_psyche::features::{write_features_csv, ProxemicsConfig};
use crowd_psyche::groups::GroupRuleConfig;
use crowd_psyche::homography::{estimate_homography, max_reprojection_error, rectify_dataset};
use crowd_psyche::ocean::OceanMode;
use crowd_psyche::pipeline::{analyze, Analysis, PipelineConfig, REPORT_SCHEMA_VERSION};
use crowd_psyche::synth::{generate, ScenarioKind, ScenarioSpec};
use crowd_psyche::trajectory::{
    parse_correspondences, parse_trajectories, write_trajectories, DatasetMeta, Point2,
    SceneDataset, Units,
};

#[derive(Parser)]
#[command(name = "crowd-psyche", version, about = "Personality and emotion estimates from pedestrian trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write every report into a directory.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Detected social groups.
    Groups(ReportArgs),
    /// OCEAN scores per frame, person and group.
    Ocean(ReportArgs),
    /// Emotion scores per frame, person and group.
    Emotion(ReportArgs),
    /// Preferred front distance.
    Distance(ReportArgs),
    /// Pearson coefficients between two video summaries.
    Correlate {
        a: PathBuf,
        b: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a synthetic scenario as trajectories.csv + meta.json.
    Synth {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        /// meters
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        /// meters per frame
        #[arg(long, default_value_t = 0.05)]
        speed: f64,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate summaries against crowd size (person count).
    Density {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    /// Trajectory CSV (person_id,frame,x,y).
    #[arg(long)]
    input: PathBuf,
    /// JSON sidecar with frame_rate, units and label.
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    frame_rate: Option<f64>,
    #[arg(long, value_enum)]
    units: Option<UnitsArg>,
    #[arg(long)]
    label: Option<String>,
    /// Correspondence CSV (img_x,img_y,world_x,world_y) used to rectify
    /// pixel coordinates.
    #[arg(long)]
    homography: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, value_enum, default_value = "normalized")]
    ocean_mode: OceanModeArg,
    #[arg(long, value_enum, default_value = "discrete")]
    emotion_mode: EmotionModeArg,
    /// Social-space radius, meters.
    #[arg(long)]
    d_hall: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    w1: Option<f64>,
    #[arg(long)]
    w2: Option<f64>,
    /// Largest pair distance for grouping, meters.
    #[arg(long)]
    group_distance: Option<f64>,
    /// Largest heading difference for grouping, degrees.
    #[arg(long)]
    group_angle: Option<f64>,
    #[arg(long)]
    group_speed_fraction: Option<f64>,
    #[arg(long)]
    group_min_together: Option<f64>,
    /// Region of interest as x,y,width,height in meters.
    #[arg(long, value_parser = parse_roi)]
    roi: Option<Roi>,
    /// Half-angle of the front-distance cone, degrees.
    #[arg(long, default_value_t = DEFAULT_CONE_HALF_ANGLE)]
    cone_angle: f64,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum UnitsArg {
    ImagePixels,
    WorldMeters,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum OceanModeArg {
    Normalized,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum EmotionModeArg {
    Discrete,
    Weighted,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum KindArg {
    LoneWalker,
    LockstepPair,
    Cluster,
    CorridorLoop,
}

impl From<KindArg> for ScenarioKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::LoneWalker => ScenarioKind::LoneWalker,
            KindArg::LockstepPair => ScenarioKind::LockstepPair,
            KindArg::Cluster => ScenarioKind::Cluster,
            KindArg::CorridorLoop => ScenarioKind::CorridorLoop,
        }
    }
}

fn parse_roi(s: &str) -> Result<Roi, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [x, y, w, h] = parts[..] else {
        return Err("expected x,y,width,height".into());
    };
    Roi::new(Point2::new(x, y), w, h).map_err(|e| e.to_string())
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        let mut proxemics = ProxemicsConfig::default();
        let mut group_rules = GroupRuleConfig::default();
        let overrides = [
            (&mut proxemics.d_hall, self.d_hall),
            (&mut proxemics.gamma, self.gamma),
            (&mut proxemics.beta, self.beta),
            (&mut proxemics.w1, self.w1),
            (&mut proxemics.w2, self.w2),
            (&mut group_rules.max_distance, self.group_distance),
            (&mut group_rules.max_orientation_diff, self.group_angle),
            (&mut group_rules.speed_fraction, self.group_speed_fraction),
            (&mut group_rules.min_together_fraction, self.group_min_together),
        ];
        for (field, value) in overrides {
            if let Some(v) = value {
                *field = v;
            }
        }
        PipelineConfig {
            proxemics,
            group_rules,
            ocean_mode: match self.ocean_mode {
                OceanModeArg::Normalized => OceanMode::Normalized,
                OceanModeArg::Literal => OceanMode::Literal,
            },
            emotion_mode: match self.emotion_mode {
                EmotionModeArg::Discrete => EmotionMode::Discrete,
                EmotionModeArg::Weighted => EmotionMode::Weighted,
            },
            roi: self.roi,
            cone_half_angle: self.cone_angle,
        }
    }
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

impl InputArgs {
    fn load(&self) -> Result<SceneDataset> {
        let mut meta = match &self.meta {
            Some(p) => DatasetMeta::from_json(open(p)?)
                .with_context(|| format!("bad metadata in {}", p.display()))?,
            None => DatasetMeta::default(),
        };
        if let Some(r) = self.frame_rate {
            meta.frame_rate = r;
        }
        if let Some(u) = self.units {
            meta.units = match u {
                UnitsArg::ImagePixels => Units::ImagePixels,
                UnitsArg::WorldMeters => Units::WorldMeters,
            };
        }
        if let Some(l) = &self.label {
            meta.label = l.clone();
        }
        if meta.label.is_empty() {
            meta.label = self
                .input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        meta.validate()?;

        let dataset = parse_trajectories(open(&self.input)?, meta)
            .with_context(|| format!("cannot read trajectories from {}", self.input.display()))?;

        match (&self.homography, dataset.units) {
            (Some(p), Units::ImagePixels) => {
                let pairs = parse_correspondences(open(p)?)
                    .with_context(|| format!("bad correspondences in {}", p.display()))?;
                let h = estimate_homography(&pairs)
                    .with_context(|| format!("cannot estimate homography from {}", p.display()))?;
                eprintln!(
                    "homography: {} correspondences, max reprojection error {:.3e} m",
                    pairs.len(),
                    max_reprojection_error(&h, &pairs)
                );
                Ok(rectify_dataset(&dataset, &h)?)
            }
            (Some(_), Units::WorldMeters) => {
                bail!("--homography given but the trajectories are already in world_meters")
            }
            (None, Units::ImagePixels) => {
                bail!("trajectories are in image_pixels; pass --homography to rectify them")
            }
            (None, Units::WorldMeters) => Ok(dataset),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes every file or none: anything already written is removed when a
/// later write fails.
fn write_all(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(e).with_context(|| format!("cannot write {}", path.display()));
        }
        written.push(path);
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_pipeline(input: &InputArgs, pipeline: &PipelineArgs) -> Result<Analysis> {
    let dataset = input.load()?;
    Ok(analyze(&dataset, &pipeline.config())?)
}

fn cmd_analyze(input: &InputArgs, pipeline: &PipelineArgs, out: &Path) -> Result<()> {
    let a = run_pipeline(input, pipeline)?;
    let mut features = Vec::new();
    write_features_csv(&a.features, &mut features)?;
    let files = [
        ("features.csv", features),
        ("groups.json", to_json(&a.groups_report())?.into_bytes()),
        ("ocean.json", to_json(&a.ocean_report())?.into_bytes()),
        ("emotions.json", to_json(&a.emotions_report())?.into_bytes()),
        ("summary.json", to_json(&a.summary_report())?.into_bytes()),
    ];
    write_all(out, &files)
}

#[derive(Serialize)]
struct Coefficient {
    coefficient: Option<f64>,
    error: Option<String>,
}

impl Coefficient {
    fn of(x: &[f64], y: &[f64]) -> Self {
        match pearson(x, y) {
            Ok(r) => Self {
                coefficient: Some(r),
                error: None,
            },
            Err(e) => Self {
                coefficient: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Serialize)]
struct CorrelationReport {
    schema_version: u32,
    a: String,
    b: String,
    ocean: Coefficient,
    emotion: Coefficient,
}

fn read_summary(path: &Path) -> Result<VideoSummary> {
    let summary: VideoSummary = serde_json::from_reader(open(path)?)
        .with_context(|| format!("{} is not a video summary", path.display()))?;
    if summary.schema_version != SUMMARY_SCHEMA_VERSION {
        bail!(
            "{} has schema_version {}, expected {}",
            path.display(),
            summary.schema_version,
            SUMMARY_SCHEMA_VERSION
        );
    }
    Ok(summary)
}

fn cmd_correlate(a: &Path, b: &Path, out: Option<&Path>) -> Result<()> {
    let (sa, sb) = (read_summary(a)?, read_summary(b)?);
    let report = CorrelationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        a: sa.label.clone(),
        b: sb.label.clone(),
        ocean: Coefficient::of(&sa.ocean.to_array(), &sb.ocean.to_array()),
        emotion: Coefficient::of(&sa.emotion.to_array(), &sb.emotion.to_array()),
    };
    emit(out, &to_json(&report)?)
}

fn cmd_density(paths: &[PathBuf], out: &Path) -> Result<()> {
    let summaries = paths
        .iter()
        .map(|p| read_summary(p))
        .collect::<Result<Vec<_>>>()?;
    let rows = density_series(&summaries);
    let mut table = Vec::new();
    write_density_csv(&rows, &mut table)?;
    let mut plot = Vec::new();
    write_plot_csv(&density_plot_rows(&rows), &mut plot)?;
    write_all(out, &[("density.csv", table), ("density_plot.csv", plot)])
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { input, pipeline, out } => cmd_analyze(&input, &pipeline, &out),
        Command::Groups(r) => {
            let a = run_pipeline(&r.input, &r.pipeline)?;
            emit(r.out.as_deref(), &to_json(&a.groups_report())?)
        }
        Command::Ocean(r) => {
            let a = run_pipeline(&r.input, &r.pipeline)?;
            emit(r.out.as_deref(), &to_json(&a.ocean_report())?)
        }
        Command::Emotion(r) => {
            let a = run_pipeline(&r.input, &r.pipeline)?;
            emit(r.out.as_deref(), &to_json(&a.emotions_report())?)
        }
        Command::Distance(r) => {
            let a = run_pipeline(&r.input, &r.pipeline)?;
            emit(r.out.as_deref(), &to_json(&a.distance_report())?)
        }
        Command::Correlate { a, b, out } => cmd_correlate(&a, &b, out.as_deref()),
        Command::Synth {
            kind,
            n,
            spacing,
            speed,
            frames,
            seed,
            out,
        } => {
            let spec = ScenarioSpec {
                kind: kind.into(),
                n,
                spacing,
                speed,
                frames,
                seed,
            };
            let dataset = generate(&spec)?;
            let mut csv = Vec::new();
            write_trajectories(&dataset, &mut csv)?;
            write_all(
                &out,
                &[
                    ("trajectories.csv", csv),
                    ("meta.json", to_json(&dataset.meta())?.into_bytes()),
                ],
            )
        }
        Command::Density { summaries, out } => cmd_density(&summaries, &out),
    }
}
