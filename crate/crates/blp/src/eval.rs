//! Evaluation harness: greedy tIoU matching, per-class average precision,
//! mAP over threshold grids, class-averaged recall curves, and the
//! ablation sweep driver that retrains per setting.
//!
//! Matching is one-to-one in score order: a detection is a true positive
//! when its best-overlap unmatched ground truth of the same video reaches
//! the threshold, which that detection then consumes. AP integrates the
//! precision-recall step curve under the all-point monotone envelope.
//! Recall asks the weaker question of whether any same-class detection
//! covers a ground truth at the threshold, averaged over the classes
//! present in the ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{self, DetectConfig, DetectionRecord};
use crate::predictor::{self, TrainConfig};
use crate::synth::{self, ProposalConfig, SyntheticVideo};
use crate::types::{ClassLabel, TemporalSegment};

/// A detection reduced to what matching needs.
#[derive(Debug, Clone)]
pub struct ScoredSegment {
    pub video_id: String,
    pub segment: TemporalSegment,
    pub score: f64,
}

/// Ground-truth segments grouped by video and class.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    by_video: BTreeMap<String, Vec<(TemporalSegment, ClassLabel)>>,
}

impl GroundTruth {
    pub fn from_videos(videos: &[SyntheticVideo]) -> Self {
        let mut by_video = BTreeMap::new();
        for video in videos {
            by_video.insert(video.id.clone(), video.annotations.clone());
        }
        GroundTruth { by_video }
    }

    /// Classes present anywhere in the ground truth, ascending.
    pub fn classes(&self) -> Vec<usize> {
        let mut classes: Vec<usize> = self
            .by_video
            .values()
            .flatten()
            .map(|(_, c)| c.index())
            .collect();
        classes.sort_unstable();
        classes.dedup();
        classes
    }

    fn class_segments(&self, class: usize) -> BTreeMap<&str, Vec<TemporalSegment>> {
        let mut out: BTreeMap<&str, Vec<TemporalSegment>> = BTreeMap::new();
        for (video, annotations) in &self.by_video {
            for (seg, label) in annotations {
                if label.index() == class {
                    out.entry(video.as_str()).or_default().push(*seg);
                }
            }
        }
        out
    }

    pub fn num_instances(&self) -> usize {
        self.by_video.values().map(Vec::len).sum()
    }
}

/// Threshold grids for AP and recall.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub tiou_grid: Vec<f64>,
    pub recall_grid: Vec<f64>,
}

impl EvalConfig {
    /// tIoU thresholds 0.1..=0.7 in steps of 0.1.
    pub fn thumos_style() -> Self {
        EvalConfig {
            tiou_grid: (1..=7).map(|i| i as f64 / 10.0).collect(),
            recall_grid: default_recall_grid(),
        }
    }

    /// tIoU thresholds 0.5..=0.95 in steps of 0.05.
    pub fn activitynet_style() -> Self {
        EvalConfig {
            tiou_grid: (10..=19).map(|i| i as f64 / 20.0).collect(),
            recall_grid: default_recall_grid(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [
            ("tiou_grid", &self.tiou_grid),
            ("recall_grid", &self.recall_grid),
        ] {
            if grid.is_empty() {
                return Err(Error::parameter(name, "grid must be non-empty"));
            }
            if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(Error::parameter(name, "thresholds must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Recall thresholds 0.05..=0.95 in steps of 0.05.
pub fn default_recall_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

/// Per-class APs aligned to `tiou_grid`, their class means, and the
/// class-averaged recall curve with its mean (AR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tiou_grid: Vec<f64>,
    pub recall_grid: Vec<f64>,
    pub per_class_ap: BTreeMap<usize, Vec<f64>>,
    pub map_at: Vec<f64>,
    pub average_map: f64,
    pub recall_curve: Vec<f64>,
    pub average_recall: f64,
}

/// Average precision of one class at one threshold.
///
/// `gts` maps a video to its ground-truth segments of the class. Score
/// ties break toward the earlier segment start, then input order.
pub fn average_precision(
    detections: &[ScoredSegment],
    gts: &BTreeMap<&str, Vec<TemporalSegment>>,
    tiou_threshold: f64,
) -> f64 {
    let total_gts: usize = gts.values().map(Vec::len).sum();
    if total_gts == 0 || detections.is_empty() {
        return 0.0;
    }

    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .total_cmp(&detections[a].score)
            .then(
                detections[a]
                    .segment
                    .start()
                    .total_cmp(&detections[b].segment.start()),
            )
            .then(a.cmp(&b))
    });

    let mut consumed: BTreeMap<&str, Vec<bool>> = gts
        .iter()
        .map(|(video, segs)| (*video, vec![false; segs.len()]))
        .collect();

    let mut is_tp = Vec::with_capacity(order.len());
    for &idx in &order {
        let det = &detections[idx];
        let mut best: Option<(usize, f64)> = None;
        if let Some(segs) = gts.get(det.video_id.as_str()) {
            let used = &consumed[det.video_id.as_str()];
            for (gi, gt) in segs.iter().enumerate() {
                if used[gi] {
                    continue;
                }
                let overlap = det.segment.tiou(gt);
                if best.is_none_or(|(_, b)| overlap > b) {
                    best = Some((gi, overlap));
                }
            }
        }
        match best {
            Some((gi, overlap)) if overlap >= tiou_threshold => {
                consumed.get_mut(det.video_id.as_str()).unwrap()[gi] = true;
                is_tp.push(true);
            }
            _ => is_tp.push(false),
        }
    }

    // Precision at each rank, then the monotone envelope from the right;
    // recall only steps at true positives.
    let mut precisions = Vec::with_capacity(is_tp.len());
    let mut tp = 0usize;
    for (rank, &hit) in is_tp.iter().enumerate() {
        if hit {
            tp += 1;
        }
        precisions.push(tp as f64 / (rank + 1) as f64);
    }
    let mut envelope = precisions;
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }

    let recall_step = 1.0 / total_gts as f64;
    is_tp
        .iter()
        .zip(&envelope)
        .filter(|(hit, _)| **hit)
        .map(|(_, p)| recall_step * p)
        .sum()
}

fn class_recall(
    detections: &[ScoredSegment],
    gts: &BTreeMap<&str, Vec<TemporalSegment>>,
    tiou_threshold: f64,
) -> f64 {
    let total: usize = gts.values().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    let mut covered = 0usize;
    for (video, segs) in gts {
        for gt in segs {
            let hit = detections
                .iter()
                .any(|d| d.video_id == *video && d.segment.tiou(gt) >= tiou_threshold);
            if hit {
                covered += 1;
            }
        }
    }
    covered as f64 / total as f64
}

/// Full report over both threshold grids.
pub fn evaluate(
    detections: &[DetectionRecord],
    ground_truth: &GroundTruth,
    config: &EvalConfig,
) -> Result<EvalReport> {
    config.validate()?;

    let mut by_class: BTreeMap<usize, Vec<ScoredSegment>> = BTreeMap::new();
    for record in detections {
        by_class
            .entry(record.class)
            .or_default()
            .push(ScoredSegment {
                video_id: record.video_id.clone(),
                segment: record.segment()?,
                score: record.score,
            });
    }
    let empty: Vec<ScoredSegment> = Vec::new();

    let classes = ground_truth.classes();
    let mut per_class_ap = BTreeMap::new();
    let mut recall_by_class: Vec<Vec<f64>> = Vec::new();
    for &class in &classes {
        let gts = ground_truth.class_segments(class);
        let dets = by_class.get(&class).unwrap_or(&empty);
        let aps: Vec<f64> = config
            .tiou_grid
            .iter()
            .map(|&t| average_precision(dets, &gts, t))
            .collect();
        per_class_ap.insert(class, aps);
        recall_by_class.push(
            config
                .recall_grid
                .iter()
                .map(|&t| class_recall(dets, &gts, t))
                .collect(),
        );
    }

    let class_count = classes.len().max(1) as f64;
    let map_at: Vec<f64> = (0..config.tiou_grid.len())
        .map(|ti| per_class_ap.values().map(|aps| aps[ti]).sum::<f64>() / class_count)
        .collect();
    let recall_curve: Vec<f64> = (0..config.recall_grid.len())
        .map(|ri| recall_by_class.iter().map(|r| r[ri]).sum::<f64>() / class_count)
        .collect();

    Ok(EvalReport {
        tiou_grid: config.tiou_grid.clone(),
        recall_grid: config.recall_grid.clone(),
        average_map: mean(&map_at),
        map_at,
        average_recall: mean(&recall_curve),
        recall_curve,
        per_class_ap,
    })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Detects one video with proposals drawn from its per-video stream.
/// Self-contained so callers may fan videos out across workers and merge
/// in index order without changing a byte of the output.
pub fn detect_video(
    video: &SyntheticVideo,
    video_index: usize,
    params: &predictor::PredictorParams,
    detect_config: &DetectConfig,
    proposal_config: &ProposalConfig,
    proposal_seed: u64,
) -> Result<Vec<DetectionRecord>> {
    let mut rng = synth::proposal_rng(proposal_seed, video_index);
    let proposals = synth::generate_proposals(video, proposal_config, &mut rng);
    let detections = pipeline::detect(video, &proposals, params, detect_config)?;
    Ok(detections
        .iter()
        .map(|d| DetectionRecord::from_detection(&video.id, d))
        .collect())
}

/// Sequential detection over a split, in video order.
pub fn run_detection(
    videos: &[SyntheticVideo],
    params: &predictor::PredictorParams,
    detect_config: &DetectConfig,
    proposal_config: &ProposalConfig,
    proposal_seed: u64,
) -> Result<Vec<DetectionRecord>> {
    let mut records = Vec::new();
    for (index, video) in videos.iter().enumerate() {
        records.extend(detect_video(
            video,
            index,
            params,
            detect_config,
            proposal_config,
            proposal_seed,
        )?);
    }
    Ok(records)
}

/// Which hyper-parameter an ablation sweep varies.
#[derive(Debug, Clone)]
pub enum SweepAxis {
    UnitCount(Vec<usize>),
    Gamma(Vec<f64>),
}

/// Everything a sweep point needs: training, detection, evaluation, and
/// the detect-time proposal source.
#[derive(Debug, Clone)]
pub struct AblationConfig {
    pub train: TrainConfig,
    pub detect: DetectConfig,
    pub eval: EvalConfig,
    pub test_proposals: ProposalConfig,
    pub detect_seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub setting: f64,
    pub report: EvalReport,
}

/// Trains, detects, and evaluates once per sweep value, overriding the
/// swept hyper-parameter in both the trainer and the detector.
pub fn ablation_sweep(
    train_videos: &[SyntheticVideo],
    test_videos: &[SyntheticVideo],
    base: &AblationConfig,
    axis: &SweepAxis,
) -> Result<Vec<SweepPoint>> {
    let settings: Vec<f64> = match axis {
        SweepAxis::UnitCount(values) => values.iter().map(|&m| m as f64).collect(),
        SweepAxis::Gamma(values) => values.clone(),
    };

    let mut points = Vec::with_capacity(settings.len());
    for &setting in &settings {
        let mut train_config = base.train.clone();
        let mut detect_config = base.detect.clone();
        match axis {
            SweepAxis::UnitCount(_) => {
                train_config.num_units = setting as usize;
                detect_config.num_units = setting as usize;
            }
            SweepAxis::Gamma(_) => {
                train_config.gamma = setting;
                detect_config.gamma = setting;
            }
        }
        let run = || -> Result<EvalReport> {
            let trained = predictor::train(train_videos, &train_config)?;
            let records = run_detection(
                test_videos,
                &trained.params,
                &detect_config,
                &base.test_proposals,
                base.detect_seed,
            )?;
            evaluate(&records, &GroundTruth::from_videos(test_videos), &base.eval)
        };
        let report = run().map_err(|e| Error::Generation(format!("sweep point {setting}: {e}")))?;
        points.push(SweepPoint { setting, report });
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Report files.
// ---------------------------------------------------------------------------

pub fn write_report_json(path: &Path, report: &EvalReport) -> Result<()> {
    let json =
        serde_json::to_string_pretty(report).map_err(|e| Error::malformed(path, e.to_string()))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// One row per class and threshold: `class,tiou,ap`.
pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(out, "class,tiou,ap").map_err(|e| Error::io(path, e))?;
    for (class, aps) in &report.per_class_ap {
        for (t, ap) in report.tiou_grid.iter().zip(aps) {
            writeln!(out, "{class},{t},{ap}").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// One row per setting and threshold: `setting,tiou,map,ar`.
pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(out, "setting,tiou,map,ar").map_err(|e| Error::io(path, e))?;
    for point in points {
        for (t, map) in point.report.tiou_grid.iter().zip(&point.report.map_at) {
            writeln!(
                out,
                "{},{t},{map},{}",
                point.setting, point.report.average_recall
            )
            .map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}
