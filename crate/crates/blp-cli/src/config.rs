//! Per-command configuration: defaults, overridden by an optional JSON
//! config file, overridden by command-line flags. Flags win. Every numeric
//! field is validated against the owning module's preconditions before any
//! work starts; violations name the field and exit with code 2.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use blp::eval::{default_recall_grid, EvalConfig};
use blp::pipeline::{DetectConfig, NmsConfig, NmsMode};
use blp::predictor::{ModelKind, TrainConfig};
use blp::synth::{GenerateConfig, ProposalConfig};

use crate::CliError;

/// Joins relative paths under `BLP_OUTPUT_ROOT` when the variable is set.
pub fn resolve_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(root) = env::var("BLP_OUTPUT_ROOT") {
            if !root.is_empty() {
                return PathBuf::from(root).join(path);
            }
        }
    }
    path.to_path_buf()
}

pub fn load_file_config<T: for<'de> Deserialize<'de> + Default>(
    path: Option<&Path>,
) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let path = resolve_path(path);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
}

fn invalid(field: &str, reason: &str) -> CliError {
    CliError::Config(format!("invalid `{field}`: {reason}"))
}

fn require_dir(field: &str, path: &Path) -> Result<PathBuf, CliError> {
    let path = resolve_path(path);
    if !path.is_dir() {
        return Err(invalid(
            field,
            &format!("{} is not a directory", path.display()),
        ));
    }
    Ok(path)
}

fn require_file(field: &str, path: &Path) -> Result<PathBuf, CliError> {
    let path = resolve_path(path);
    if !path.is_file() {
        return Err(invalid(field, &format!("{} is not a file", path.display())));
    }
    Ok(path)
}

fn parse_model(field: &str, value: &str) -> Result<ModelKind, CliError> {
    value
        .parse::<ModelKind>()
        .map_err(|e| invalid(field, &e.to_string()))
}

fn parse_grid(field: &str, value: &str) -> Result<Vec<f64>, CliError> {
    match value {
        "thumos" => Ok(EvalConfig::thumos_style().tiou_grid),
        "anet" => Ok(EvalConfig::activitynet_style().tiou_grid),
        list => list
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(field, &format!("`{tok}`: {e}")))
            })
            .collect(),
    }
}

macro_rules! merge_fields {
    ($file:expr, $flags:expr; $($field:ident),+ $(,)?) => {{
        let mut merged = $file;
        $(
            if $flags.$field.is_some() {
                merged.$field = $flags.$field.clone();
            }
        )+
        merged
    }};
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct GenerateOverrides {
    /// Output dataset directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub num_videos: Option<usize>,
    #[arg(long)]
    pub length_min: Option<usize>,
    #[arg(long)]
    pub length_max: Option<usize>,
    /// Number of event classes (labels 1..=classes).
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub events_min: Option<usize>,
    #[arg(long)]
    pub events_max: Option<usize>,
    #[arg(long)]
    pub duration_min: Option<f64>,
    #[arg(long)]
    pub duration_max: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub struct ResolvedGenerate {
    pub out: PathBuf,
    pub config: GenerateConfig,
}

pub fn resolve_generate(
    file: GenerateOverrides,
    flags: &GenerateOverrides,
) -> Result<ResolvedGenerate, CliError> {
    let o = merge_fields!(file, flags;
        out, num_videos, length_min, length_max, classes, events_min,
        events_max, duration_min, duration_max, noise_sigma, seed);
    let seed = o.seed.unwrap_or(0);
    let config = GenerateConfig {
        num_videos: o.num_videos.unwrap_or(100),
        length_range: (o.length_min.unwrap_or(360), o.length_max.unwrap_or(540)),
        num_classes: o.classes.unwrap_or(5),
        events_range: (o.events_min.unwrap_or(1), o.events_max.unwrap_or(2)),
        duration_range: (
            o.duration_min.unwrap_or(48.0),
            o.duration_max.unwrap_or(96.0),
        ),
        noise_sigma: o.noise_sigma.unwrap_or(0.15),
        seed: blp::predictor::derive_stream_seed(seed, "generate"),
    };
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ResolvedGenerate {
        out: resolve_path(&o.out.unwrap_or_else(|| PathBuf::from("dataset"))),
        config,
    })
}

// ---------------------------------------------------------------------------
// shared proposal flags
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct ProposalOverrides {
    /// Jitter scale as a fraction of the ground-truth duration.
    #[arg(long)]
    pub jitter_sigma: Option<f64>,
    #[arg(long)]
    pub proposals_per_gt: Option<usize>,
    /// Sliding-window lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub window_scales: Option<Vec<f64>>,
}

fn resolve_proposals(
    file: ProposalOverrides,
    flags: &ProposalOverrides,
) -> Result<ProposalConfig, CliError> {
    let o = merge_fields!(file, flags; jitter_sigma, proposals_per_gt, window_scales);
    let config = ProposalConfig {
        jitter_sigma: o.jitter_sigma.unwrap_or(0.1),
        proposals_per_gt: o.proposals_per_gt.unwrap_or(4),
        window_scales: o.window_scales.unwrap_or_else(|| vec![64.0, 128.0]),
    };
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// Trainer hyper-parameters shared by `train` and `ablate`. Defaults are
/// tuned for the stock synthetic benchmark; a single learning rate drives
/// every head, so `lambda` doubles as the localization step scale (keep it
/// near 0.0005 for the regression baseline, whose squared-error curvature
/// is much steeper).
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct TrainKnobs {
    /// in-out | boundary | regression.
    #[arg(long)]
    pub model: Option<String>,
    /// Units per search interval (M).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lr_initial: Option<f64>,
    #[arg(long)]
    pub lr_final: Option<f64>,
    #[arg(long)]
    pub lr_decay_epoch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub positive_tiou: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub proposals: ProposalOverrides,
}

impl TrainKnobs {
    fn merge(file: Self, flags: &Self) -> Result<(TrainConfig, u64), CliError> {
        let proposals = resolve_proposals(file.proposals.clone(), &flags.proposals)?;
        let o = merge_fields!(file, flags;
            model, m, gamma, classes, lambda, lr_initial, lr_final,
            lr_decay_epoch, epochs, positive_tiou, seed);
        let model_kind = parse_model("model", o.model.as_deref().unwrap_or("in-out"))?;
        let default_lambda = match model_kind {
            blp::predictor::ModelKind::Regression => 0.0005,
            _ => 0.01,
        };
        let seed = o.seed.unwrap_or(0);
        let config = TrainConfig {
            model_kind,
            num_units: o.m.unwrap_or(32),
            num_classes: o.classes.unwrap_or(5),
            gamma: o.gamma.unwrap_or(2.0),
            lambda: o.lambda.unwrap_or(default_lambda),
            lr_initial: o.lr_initial.unwrap_or(4.0),
            lr_final: o.lr_final.unwrap_or(0.4),
            lr_decay_epoch: o.lr_decay_epoch.unwrap_or(450),
            epochs: o.epochs.unwrap_or(600),
            seed: blp::predictor::derive_stream_seed(seed, "train"),
            positive_tiou: o.positive_tiou.unwrap_or(0.5),
            proposals,
        };
        config
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok((config, seed))
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct TrainOverrides {
    /// Input dataset directory.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output parameters file (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output per-epoch loss trace (CSV).
    #[arg(long)]
    pub loss_trace: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: TrainKnobs,
}

pub struct ResolvedTrain {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub loss_trace: PathBuf,
    pub config: TrainConfig,
}

pub fn resolve_train(
    file: TrainOverrides,
    flags: &TrainOverrides,
) -> Result<ResolvedTrain, CliError> {
    let (config, _) = TrainKnobs::merge(file.knobs.clone(), &flags.knobs)?;
    let o = merge_fields!(file, flags; dataset, out, loss_trace);
    let dataset = o
        .dataset
        .ok_or_else(|| invalid("dataset", "no dataset directory given"))?;
    let dataset = require_dir("dataset", &dataset)?;
    let out = resolve_path(&o.out.unwrap_or_else(|| PathBuf::from("params.json")));
    let loss_trace = resolve_path(
        &o.loss_trace
            .unwrap_or_else(|| out.with_extension("loss.csv")),
    );
    Ok(ResolvedTrain {
        dataset,
        out,
        loss_trace,
        config,
    })
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct DetectOverrides {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Trained parameters file.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output detections file (JSON lines).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// in-out | boundary | regression.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// none | hard | soft-gaussian.
    #[arg(long)]
    pub nms_mode: Option<String>,
    #[arg(long)]
    pub nms_tiou: Option<f64>,
    #[arg(long)]
    pub nms_sigma: Option<f64>,
    #[arg(long)]
    pub nms_score_floor: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub proposals: ProposalOverrides,
}

pub struct ResolvedDetect {
    pub dataset: PathBuf,
    pub params: PathBuf,
    pub out: PathBuf,
    pub model_kind: ModelKind,
    pub gamma: f64,
    pub nms: Option<NmsConfig>,
    pub proposals: ProposalConfig,
    pub proposal_seed: u64,
    pub workers: usize,
}

impl ResolvedDetect {
    pub fn detect_config(&self, num_units: usize) -> DetectConfig {
        DetectConfig {
            model_kind: self.model_kind,
            gamma: self.gamma,
            num_units,
            nms: self.nms.clone(),
        }
    }
}

fn resolve_nms(
    mode: Option<&str>,
    tiou: Option<f64>,
    sigma: Option<f64>,
    floor: Option<f64>,
) -> Result<Option<NmsConfig>, CliError> {
    let mode = match mode.unwrap_or("soft-gaussian") {
        "none" => return Ok(None),
        "hard" => NmsMode::Hard,
        "soft-gaussian" => NmsMode::SoftGaussian,
        other => {
            return Err(invalid(
                "nms_mode",
                &format!("expected none, hard, or soft-gaussian, got `{other}`"),
            ))
        }
    };
    let config = NmsConfig {
        mode,
        tiou_threshold: tiou.unwrap_or(0.5),
        sigma: sigma.unwrap_or(0.5),
        score_floor: floor.unwrap_or(0.001),
    };
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Some(config))
}

pub fn resolve_detect(
    file: DetectOverrides,
    flags: &DetectOverrides,
) -> Result<ResolvedDetect, CliError> {
    let proposals = resolve_proposals(file.proposals.clone(), &flags.proposals)?;
    let o = merge_fields!(file, flags;
        dataset, params, out, model, gamma, nms_mode, nms_tiou, nms_sigma,
        nms_score_floor, seed, workers);
    let dataset = o
        .dataset
        .ok_or_else(|| invalid("dataset", "no dataset directory given"))?;
    let params = o
        .params
        .ok_or_else(|| invalid("params", "no parameters file given"))?;
    let seed = o.seed.unwrap_or(0);
    let gamma = o.gamma.unwrap_or(2.0);
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(invalid("gamma", "extension factor must be >= 1.0"));
    }
    Ok(ResolvedDetect {
        dataset: require_dir("dataset", &dataset)?,
        params: require_file("params", &params)?,
        out: resolve_path(&o.out.unwrap_or_else(|| PathBuf::from("detections.jsonl"))),
        model_kind: parse_model("model", o.model.as_deref().unwrap_or("in-out"))?,
        gamma,
        nms: resolve_nms(
            o.nms_mode.as_deref(),
            o.nms_tiou,
            o.nms_sigma,
            o.nms_score_floor,
        )?,
        proposals,
        proposal_seed: blp::predictor::derive_stream_seed(seed, "detect"),
        workers: o.workers.unwrap_or(1).max(1),
    })
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct EvalOverrides {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Output report (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output per-class AP table (CSV).
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// thumos | anet | comma-separated thresholds.
    #[arg(long)]
    pub tiou_grid: Option<String>,
    /// Comma-separated recall thresholds.
    #[arg(long, value_delimiter = ',')]
    pub recall_grid: Option<Vec<f64>>,
}

pub struct ResolvedEval {
    pub dataset: PathBuf,
    pub detections: PathBuf,
    pub out: PathBuf,
    pub out_csv: PathBuf,
    pub config: EvalConfig,
}

pub fn resolve_eval(file: EvalOverrides, flags: &EvalOverrides) -> Result<ResolvedEval, CliError> {
    let o = merge_fields!(file, flags; dataset, detections, out, out_csv, tiou_grid, recall_grid);
    let dataset = o
        .dataset
        .ok_or_else(|| invalid("dataset", "no dataset directory given"))?;
    let detections = o
        .detections
        .ok_or_else(|| invalid("detections", "no detections file given"))?;
    let out = resolve_path(&o.out.unwrap_or_else(|| PathBuf::from("report.json")));
    let out_csv = resolve_path(&o.out_csv.unwrap_or_else(|| out.with_extension("csv")));
    let config = EvalConfig {
        tiou_grid: parse_grid("tiou_grid", o.tiou_grid.as_deref().unwrap_or("thumos"))?,
        recall_grid: o.recall_grid.unwrap_or_else(default_recall_grid),
    };
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ResolvedEval {
        dataset: require_dir("dataset", &dataset)?,
        detections: require_file("detections", &detections)?,
        out,
        out_csv,
        config,
    })
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default)]
pub struct AblateOverrides {
    #[arg(long)]
    pub train_dataset: Option<PathBuf>,
    #[arg(long)]
    pub test_dataset: Option<PathBuf>,
    /// Output sweep table (CSV).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// m | gamma.
    #[arg(long)]
    pub axis: Option<String>,
    /// Swept values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long)]
    pub tiou_grid: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: TrainKnobs,
}

pub struct ResolvedAblate {
    pub train_dataset: PathBuf,
    pub test_dataset: PathBuf,
    pub out: PathBuf,
    pub axis: blp::eval::SweepAxis,
    pub train: TrainConfig,
    pub detect: DetectConfig,
    pub eval: EvalConfig,
    pub test_proposals: ProposalConfig,
    pub detect_seed: u64,
}

pub fn resolve_ablate(
    file: AblateOverrides,
    flags: &AblateOverrides,
) -> Result<ResolvedAblate, CliError> {
    let (train, seed) = TrainKnobs::merge(file.knobs.clone(), &flags.knobs)?;
    let o = merge_fields!(file, flags; train_dataset, test_dataset, out, axis, values, tiou_grid);
    let train_dataset = o
        .train_dataset
        .ok_or_else(|| invalid("train_dataset", "no training dataset given"))?;
    let test_dataset = o
        .test_dataset
        .ok_or_else(|| invalid("test_dataset", "no test dataset given"))?;
    let values = o
        .values
        .ok_or_else(|| invalid("values", "no sweep values given"))?;
    if values.is_empty() {
        return Err(invalid("values", "need at least one sweep value"));
    }
    let axis = match o.axis.as_deref().unwrap_or("m") {
        "m" => {
            for v in &values {
                if v.fract() != 0.0 || *v < 2.0 {
                    return Err(invalid("values", &format!("unit count {v} is not valid")));
                }
            }
            blp::eval::SweepAxis::UnitCount(values.iter().map(|v| *v as usize).collect())
        }
        "gamma" => {
            if values.iter().any(|v| !(v.is_finite() && *v >= 1.0)) {
                return Err(invalid("values", "extension factors must be >= 1.0"));
            }
            blp::eval::SweepAxis::Gamma(values)
        }
        other => {
            return Err(invalid(
                "axis",
                &format!("expected m or gamma, got `{other}`"),
            ))
        }
    };

    let detect = DetectConfig {
        model_kind: train.model_kind,
        gamma: train.gamma,
        num_units: train.num_units,
        nms: Some(NmsConfig::default()),
    };
    let eval = EvalConfig {
        tiou_grid: parse_grid("tiou_grid", o.tiou_grid.as_deref().unwrap_or("thumos"))?,
        recall_grid: default_recall_grid(),
    };
    eval.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    Ok(ResolvedAblate {
        train_dataset: require_dir("train_dataset", &train_dataset)?,
        test_dataset: require_dir("test_dataset", &test_dataset)?,
        out: resolve_path(&o.out.unwrap_or_else(|| PathBuf::from("sweep.csv"))),
        axis,
        test_proposals: train.proposals.clone(),
        train,
        detect,
        eval,
        detect_seed: blp::predictor::derive_stream_seed(seed, "detect"),
    })
}
