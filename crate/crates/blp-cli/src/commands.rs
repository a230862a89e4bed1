//! Command implementations. Every command is idempotent for a fixed config
//! and seed; nothing written here contains a timestamp, so reruns are
//! byte-identical (wall-clock information goes to the optional sidecar
//! log only).

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use blp::eval::{self, GroundTruth};
use blp::pipeline::{self, DetectionRecord};
use blp::predictor::{self, PredictorParams};
use blp::synth;

use crate::config::{
    ResolvedAblate, ResolvedDetect, ResolvedEval, ResolvedGenerate, ResolvedTrain,
};
use crate::CliError;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| runtime(format!("creating {}: {e}", parent.display())))?;
        }
    }
    Ok(())
}

fn write_sidecar_log(path: &Path, command: &str, elapsed: Instant) -> Result<(), CliError> {
    let line = format!(
        "{command} finished in {:.1} ms\n",
        elapsed.elapsed().as_secs_f64() * 1e3
    );
    fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .and_then(|mut f| f.write_all(line.as_bytes()))
        .map_err(|e| runtime(format!("writing {}: {e}", path.display())))
}

pub fn run_generate(resolved: ResolvedGenerate, log: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let videos = synth::generate_dataset(&resolved.config).map_err(runtime)?;
    synth::save_dataset(&resolved.out, &videos).map_err(runtime)?;

    // Provenance copy of the fully resolved generation config.
    let provenance = serde_json::to_string_pretty(&resolved.config).map_err(runtime)?;
    let provenance_path = resolved.out.join("config.json");
    fs::write(&provenance_path, provenance)
        .map_err(|e| runtime(format!("writing {}: {e}", provenance_path.display())))?;

    if let Some(log) = log {
        write_sidecar_log(log, "generate", started)?;
    }
    println!(
        "generated {} videos into {}",
        videos.len(),
        resolved.out.display()
    );
    Ok(())
}

pub fn run_train(resolved: ResolvedTrain, log: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let videos = synth::load_dataset(&resolved.dataset).map_err(runtime)?;
    let report = predictor::train(&videos, &resolved.config).map_err(|e| match e {
        blp::Error::Diverged { .. } => CliError::Runtime(e.to_string()),
        other => runtime(other),
    })?;

    ensure_parent(&resolved.out)?;
    report.params.save_json(&resolved.out).map_err(runtime)?;

    ensure_parent(&resolved.loss_trace)?;
    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in report.loss_trace.iter().enumerate() {
        csv.push_str(&format!("{epoch},{loss}\n"));
    }
    fs::write(&resolved.loss_trace, csv)
        .map_err(|e| runtime(format!("writing {}: {e}", resolved.loss_trace.display())))?;

    if let Some(log) = log {
        write_sidecar_log(log, "train", started)?;
    }
    println!(
        "trained {} model ({} epochs, final loss {:.6}) -> {}",
        resolved.config.model_kind.as_str(),
        report.loss_trace.len(),
        report.loss_trace.last().copied().unwrap_or(f64::NAN),
        resolved.out.display()
    );
    Ok(())
}

fn validate_model_against_params(
    kind: blp::predictor::ModelKind,
    params: &PredictorParams,
) -> Result<(), CliError> {
    use blp::predictor::ModelKind;
    let ok = match kind {
        ModelKind::InOut => params.n == 1,
        ModelKind::Boundary => params.n == 2,
        ModelKind::Regression => true,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "invalid `model`: {} expects n={}, parameters carry n={}",
            kind.as_str(),
            kind.track_count(),
            params.n
        )))
    }
}

pub fn run_detect(resolved: ResolvedDetect, log: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let videos = synth::load_dataset(&resolved.dataset).map_err(runtime)?;
    let params = PredictorParams::load_json(&resolved.params).map_err(runtime)?;
    validate_model_against_params(resolved.model_kind, &params)?;
    let detect_config = resolved.detect_config(params.m);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolved.workers)
        .build()
        .map_err(runtime)?;
    // Per-video streams keep the output identical at any worker count;
    // results are merged in video order.
    let per_video: Result<Vec<Vec<DetectionRecord>>, _> = pool.install(|| {
        videos
            .par_iter()
            .enumerate()
            .map(|(index, video)| {
                eval::detect_video(
                    video,
                    index,
                    &params,
                    &detect_config,
                    &resolved.proposals,
                    resolved.proposal_seed,
                )
            })
            .collect()
    });
    let records: Vec<DetectionRecord> = per_video.map_err(runtime)?.into_iter().flatten().collect();

    ensure_parent(&resolved.out)?;
    pipeline::write_detections_jsonl(&resolved.out, &records).map_err(runtime)?;

    if let Some(log) = log {
        write_sidecar_log(log, "detect", started)?;
    }
    println!(
        "detected {} segments across {} videos -> {}",
        records.len(),
        videos.len(),
        resolved.out.display()
    );
    Ok(())
}

pub fn run_eval(resolved: ResolvedEval, log: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let videos = synth::load_dataset(&resolved.dataset).map_err(runtime)?;
    let records = pipeline::read_detections_jsonl(&resolved.detections).map_err(runtime)?;
    let ground_truth = GroundTruth::from_videos(&videos);
    let report = eval::evaluate(&records, &ground_truth, &resolved.config).map_err(runtime)?;

    ensure_parent(&resolved.out)?;
    eval::write_report_json(&resolved.out, &report).map_err(runtime)?;
    ensure_parent(&resolved.out_csv)?;
    eval::write_report_csv(&resolved.out_csv, &report).map_err(runtime)?;

    if let Some(log) = log {
        write_sidecar_log(log, "eval", started)?;
    }
    println!(
        "average mAP {:.4}, average recall {:.4} -> {}",
        report.average_map,
        report.average_recall,
        resolved.out.display()
    );
    Ok(())
}

pub fn run_ablate(resolved: ResolvedAblate, log: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let train_videos = synth::load_dataset(&resolved.train_dataset).map_err(runtime)?;
    let test_videos = synth::load_dataset(&resolved.test_dataset).map_err(runtime)?;

    let base = eval::AblationConfig {
        train: resolved.train.clone(),
        detect: resolved.detect.clone(),
        eval: resolved.eval.clone(),
        test_proposals: resolved.test_proposals.clone(),
        detect_seed: resolved.detect_seed,
    };
    let points = eval::ablation_sweep(&train_videos, &test_videos, &base, &resolved.axis)
        .map_err(runtime)?;

    ensure_parent(&resolved.out)?;
    eval::write_sweep_csv(&resolved.out, &points).map_err(runtime)?;

    if let Some(log) = log {
        write_sidecar_log(log, "ablate", started)?;
    }
    for point in &points {
        println!(
            "setting {}: average mAP {:.4}, AR {:.4}",
            point.setting, point.report.average_map, point.report.average_recall
        );
    }
    println!("sweep table -> {}", resolved.out.display());
    Ok(())
}
