//! Command-line interface: `rank`, `evaluate`, `sweep`, `generate`.
//!
//! Exit codes: 0 success, 2 configuration error (also used by clap for
//! usage errors), 3 input-data parse error, 4 I/O error. Output files
//! are written atomically (temp file + rename); `--out` defaults to
//! stdout.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ingest::{self, IngestError, RankRecord};
use crate::metrics::{evaluate, EvalError, EvalThresholds, CLASS_FILTER_PRESET};
use crate::risk::{rank_frame, RiskError, RiskParams};
use crate::scenario::{self, ScenarioError, ScenarioKind, ScenarioSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 = configuration, 3 = data parse, 4 = I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RiskError> for CliError {
    fn from(e: RiskError) -> Self {
        match e {
            RiskError::InvalidParams { .. } | RiskError::InvalidGrid { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Ingest(inner) => inner.into(),
            EvalError::Risk(inner) => inner.into(),
            EvalError::InvalidSweep { .. } => CliError::Config(e.to_string()),
            EvalError::Match(_) | EvalError::DuplicateFrame { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "r3eval",
    version,
    about = "Risk-ranked recall evaluation for object detection in driving scenes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Assign a collision-risk rank to every labeled object.
    Rank(RankArgs),
    /// Score predictions: per-rank recall, overall recall, precision.
    Evaluate(EvaluateArgs),
    /// Like `evaluate`, but defaults to the CSV sweep table.
    Sweep(EvaluateArgs),
    /// Generate synthetic scenario fixtures with expected-rank sidecars.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RiskFlags {
    /// Maximum acceleration/deceleration magnitude [m/s^2].
    #[arg(long, default_value_t = 7.5)]
    pub a_max: f64,
    /// Compute latency from sensor input to actuation [s].
    #[arg(long, default_value_t = 0.1)]
    pub l_comp: f64,
    /// Time step of the collision-analysis grid [s].
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
}

impl RiskFlags {
    fn params(&self) -> Result<RiskParams, CliError> {
        let params = RiskParams {
            a_max: self.a_max,
            l_comp: self.l_comp,
            dt: self.dt,
        };
        params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }
}

#[derive(Args, Debug)]
pub struct RankArgs {
    /// Frames file (*.frames.jsonl).
    #[arg(long)]
    pub frames: PathBuf,
    /// Output path for rank records; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub risk: RiskFlags,
}

/// Confidence sweep given as `start:end:step`, inclusive of `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec(pub Vec<f64>);

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:end:step, got `{s}`"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        let (start, end, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || !step.is_finite() {
            return Err(format!("step must be > 0, got {step}"));
        }
        if start > end {
            return Err(format!("start {start} must be <= end {end}"));
        }
        let mut values = Vec::new();
        let mut k: u64 = 0;
        loop {
            let v = start + k as f64 * step;
            if v > end + step * 1e-9 {
                break;
            }
            // Snap away float dust so thresholds print cleanly.
            values.push(format!("{v:.10}").parse::<f64>().expect("rounded float"));
            k += 1;
        }
        for &v in &values {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("sweep value {v} outside (0, 1]"));
            }
        }
        Ok(SweepSpec(values))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassFilterArg {
    /// Keep every ground-truth class.
    None,
    /// Keep only Pedestrian, Cycle, Vehicle and Road Sign.
    Preset,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Frames file (*.frames.jsonl).
    #[arg(long)]
    pub frames: PathBuf,
    /// Predictions file (*.predictions.jsonl).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// IoG threshold for per-rank true positives.
    #[arg(long, default_value_t = 0.8)]
    pub iog: f64,
    /// IoU threshold for overall recall and precision.
    #[arg(long, default_value_t = 0.8)]
    pub iou: f64,
    /// Confidence sweep as start:end:step (inclusive).
    #[arg(long, default_value = "0.5:0.95:0.05")]
    pub sweep: SweepSpec,
    /// Ground-truth class filter.
    #[arg(long, value_enum, default_value_t = ClassFilterArg::None)]
    pub classes: ClassFilterArg,
    /// Report format; `evaluate` defaults to json, `sweep` to csv.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(flatten)]
    pub risk: RiskFlags,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Scenario kind: head_on, crossing, parked_near, parked_far, cut_in.
    #[arg(long, conflicts_with = "spec")]
    pub kind: Option<String>,
    /// JSON scenario spec file (alternative to --kind).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Directory for <kind>.frames.jsonl and <kind>.expected.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Jitter seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of frames to generate.
    #[arg(long, default_value_t = 5)]
    pub frames: usize,
    /// Front surface gap [m] (head_on, cut_in).
    #[arg(long)]
    pub gap_front: Option<f64>,
    /// Ego speed [m/s].
    #[arg(long)]
    pub ego_speed: Option<f64>,
    /// Object speed [m/s].
    #[arg(long)]
    pub obj_speed: Option<f64>,
    /// Time at which paths cross [s] (crossing).
    #[arg(long)]
    pub meet_time: Option<f64>,
    /// Center-to-center distance [m] (parked_near).
    #[arg(long)]
    pub center_distance: Option<f64>,
    /// Center-to-center distance [m] (parked_far).
    #[arg(long)]
    pub distance: Option<f64>,
    /// Lateral offset of the object [m] (cut_in).
    #[arg(long)]
    pub lateral_offset: Option<f64>,
    /// Lateral drift speed toward the ego lane [m/s] (cut_in).
    #[arg(long)]
    pub lateral_speed: Option<f64>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Rank(args) => cmd_rank(args),
        Command::Evaluate(args) => cmd_evaluate(args, OutputFormat::Json),
        Command::Sweep(args) => cmd_evaluate(args, OutputFormat::Csv),
        Command::Generate(args) => cmd_generate(args),
    }
}

fn cmd_rank(args: RankArgs) -> Result<(), CliError> {
    let params = args.risk.params()?;
    let stream = ingest::read_frames(&args.frames)?;
    let mut sink = OutputSink::open(args.out.as_deref())?;
    for item in stream {
        let loaded = item?;
        for warning in &loaded.warnings {
            eprintln!("warning: {warning}");
        }
        let ranks = rank_frame(&loaded.frame, &params)?;
        let records: Vec<RankRecord> = ranks
            .into_iter()
            .map(|(object_id, rank)| RankRecord {
                frame_id: loaded.frame.frame_id.clone(),
                object_id,
                rank,
            })
            .collect();
        ingest::write_rank_records(&mut sink, &records)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    sink.finish()
}

fn cmd_evaluate(args: EvaluateArgs, default_format: OutputFormat) -> Result<(), CliError> {
    let params = args.risk.params()?;
    for (name, v) in [("--iog", args.iog), ("--iou", args.iou)] {
        if !(v > 0.0 && v <= 1.0) || !v.is_finite() {
            return Err(CliError::Config(format!("{name} must be in (0, 1], got {v}")));
        }
    }
    let thresholds = EvalThresholds {
        tau_iog: args.iog,
        tau_iou: args.iou,
        sweep: args.sweep.0.clone(),
    };
    thresholds.validate().map_err(CliError::from)?;
    let class_filter: Option<BTreeSet<String>> = match args.classes {
        ClassFilterArg::None => None,
        ClassFilterArg::Preset => Some(
            CLASS_FILTER_PRESET
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
    };

    let predictions = ingest::load_predictions(&args.predictions)?;
    let stream = ingest::read_frames(&args.frames)?;
    let report = evaluate(stream, predictions, &params, &thresholds, class_filter.as_ref())?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    let content = match args.format.unwrap_or(default_format) {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    };
    write_output(args.out.as_deref(), content.as_bytes())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let spec = build_spec(&args)?;
    let generated = scenario::generate(&spec)?;
    let (frames_text, expected_text) = scenario::render(&generated);
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out_dir.display())))?;
    let name = spec.kind.name();
    let frames_path = args.out_dir.join(format!("{name}.frames.jsonl"));
    let expected_path = args.out_dir.join(format!("{name}.expected.jsonl"));
    write_output(Some(&frames_path), frames_text.as_bytes())?;
    write_output(Some(&expected_path), expected_text.as_bytes())?;
    eprintln!(
        "wrote {} frame(s) to {} (+ expected sidecar)",
        generated.len(),
        frames_path.display()
    );
    Ok(())
}

fn build_spec(args: &GenerateArgs) -> Result<ScenarioSpec, CliError> {
    if let Some(path) = &args.spec {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let spec: ScenarioSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return Ok(spec);
    }
    let Some(kind_name) = &args.kind else {
        return Err(CliError::Config("one of --kind or --spec is required".into()));
    };
    let mut kind = ScenarioKind::default_by_name(kind_name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown kind `{kind_name}` (expected head_on, crossing, parked_near, parked_far or cut_in)"
        ))
    })?;
    apply_overrides(&mut kind, args);
    Ok(ScenarioSpec {
        kind,
        seed: args.seed,
        frames: args.frames,
    })
}

fn apply_overrides(kind: &mut ScenarioKind, args: &GenerateArgs) {
    match kind {
        ScenarioKind::HeadOn {
            gap_front,
            ego_speed,
            obj_speed,
        } => {
            set(gap_front, args.gap_front);
            set(ego_speed, args.ego_speed);
            set(obj_speed, args.obj_speed);
        }
        ScenarioKind::Crossing {
            ego_speed,
            obj_speed,
            meet_time,
        } => {
            set(ego_speed, args.ego_speed);
            set(obj_speed, args.obj_speed);
            set(meet_time, args.meet_time);
        }
        ScenarioKind::ParkedNear { center_distance } => {
            set(center_distance, args.center_distance);
        }
        ScenarioKind::ParkedFar { distance } => {
            set(distance, args.distance);
        }
        ScenarioKind::CutIn {
            gap_front,
            lateral_offset,
            ego_speed,
            obj_speed,
            lateral_speed,
        } => {
            set(gap_front, args.gap_front);
            set(lateral_offset, args.lateral_offset);
            set(ego_speed, args.ego_speed);
            set(obj_speed, args.obj_speed);
            set(lateral_speed, args.lateral_speed);
        }
    }
}

fn set(slot: &mut f64, value: Option<f64>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Either stdout or a temp file that is atomically renamed on finish.
enum OutputSink {
    Stdout(std::io::Stdout),
    Temp {
        file: tempfile::NamedTempFile,
        target: PathBuf,
    },
}

impl OutputSink {
    fn open(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(OutputSink::Stdout(std::io::stdout())),
            Some(target) => {
                let dir = target.parent().filter(|p| !p.as_os_str().is_empty());
                let file = match dir {
                    Some(d) => tempfile::NamedTempFile::new_in(d),
                    None => tempfile::NamedTempFile::new_in("."),
                }
                .map_err(|e| CliError::Io(format!("{}: {e}", target.display())))?;
                Ok(OutputSink::Temp {
                    file,
                    target: target.to_path_buf(),
                })
            }
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self {
            OutputSink::Stdout(_) => Ok(()),
            OutputSink::Temp { file, target } => {
                file.persist(&target)
                    .map_err(|e| CliError::Io(format!("{}: {e}", target.display())))?;
                Ok(())
            }
        }
    }
}

impl Write for OutputSink {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        match self {
            OutputSink::Stdout(s) => s.write(buf),
            OutputSink::Temp { file, .. } => file.write(buf),
        }
    }

    fn flush(&mut self) -> std::io::Result<()> {
        match self {
            OutputSink::Stdout(s) => s.flush(),
            OutputSink::Temp { file, .. } => file.flush(),
        }
    }
}

fn write_output(path: Option<&Path>, content: &[u8]) -> Result<(), CliError> {
    let mut sink = OutputSink::open(path)?;
    sink.write_all(content)
        .map_err(|e| CliError::Io(e.to_string()))?;
    sink.flush().map_err(|e| CliError::Io(e.to_string()))?;
    sink.finish()
}
