//! Detection pipeline: classify each proposal, build its search grid,
//! predict probability tracks for the winning class, pinpoint (or decode
//! the regression baseline), score, and suppress duplicates.
//!
//! The detection score is the classification probability of the winning
//! class alone; the refinement log-likelihood travels along as a
//! diagnostic but is never fused into the score. Suppression is
//! class-wise: detections of different classes never suppress each other.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pinpoint::{self, ProbabilityTracks};
use crate::predictor::{self, ModelKind, PredictorParams};
use crate::synth::SyntheticVideo;
use crate::types::{search_grid, ClassLabel, TemporalSegment};

/// A refined segment with its class, confidence, and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub segment: TemporalSegment,
    pub class_label: ClassLabel,
    pub score: f64,
    pub source_proposal: TemporalSegment,
    /// Pinpointing log-likelihood; absent for the regression baseline.
    pub refinement_log_likelihood: Option<f64>,
}

/// Suppression variants: hard removal above a tIoU threshold, or Gaussian
/// score decay with a floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NmsMode {
    Hard,
    SoftGaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NmsConfig {
    pub mode: NmsMode,
    pub tiou_threshold: f64,
    pub sigma: f64,
    pub score_floor: f64,
}

impl Default for NmsConfig {
    fn default() -> Self {
        NmsConfig {
            mode: NmsMode::SoftGaussian,
            tiou_threshold: 0.5,
            sigma: 0.5,
            score_floor: 0.001,
        }
    }
}

impl NmsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tiou_threshold) {
            return Err(Error::parameter("tiou_threshold", "must lie in [0, 1]"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::parameter("sigma", "must be positive"));
        }
        if !(self.score_floor.is_finite() && self.score_floor >= 0.0) {
            return Err(Error::parameter("score_floor", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectConfig {
    pub model_kind: ModelKind,
    pub gamma: f64,
    pub num_units: usize,
    /// `None` disables suppression (pre-NMS output).
    pub nms: Option<NmsConfig>,
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 1.0) {
            return Err(Error::parameter("gamma", "extension factor must be >= 1.0"));
        }
        if self.num_units < 2 {
            return Err(Error::parameter("num_units", "need at least 2 units"));
        }
        if let Some(nms) = &self.nms {
            nms.validate()?;
        }
        Ok(())
    }
}

/// Refines one proposal with externally supplied probability tracks:
/// extend, clamp, grid, pinpoint. Detection uses this with predicted
/// tracks; tests can drive it with ideal targets.
pub fn refine_with_tracks(
    proposal: &TemporalSegment,
    tracks: &ProbabilityTracks,
    gamma: f64,
    num_units: usize,
    signal_len: f64,
) -> Result<pinpoint::PinpointResult> {
    let grid = search_grid(proposal, gamma, num_units, signal_len)?;
    pinpoint::pinpoint(tracks, &grid)
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (idx, v) in scores.iter().enumerate() {
        if *v > scores[best] {
            best = idx;
        }
    }
    best
}

/// Runs the full per-proposal pipeline over one video and returns the
/// suppressed detections sorted by descending score.
pub fn detect(
    video: &SyntheticVideo,
    proposals: &[TemporalSegment],
    params: &PredictorParams,
    config: &DetectConfig,
) -> Result<Vec<Detection>> {
    config.validate()?;
    params.validate()?;
    let signal_len = video.length() as f64;

    let mut detections = Vec::new();
    for proposal in proposals {
        let grid = search_grid(proposal, config.gamma, config.num_units, signal_len)?;
        if grid.unit_width() < 1.0 {
            continue;
        }
        let features = predictor::extract_features(&video.signal, &grid)?;
        let scores = predictor::predict_class(&features, params)?;
        let winner = argmax(&scores);
        if winner == 0 {
            continue;
        }
        let class_label = ClassLabel::new(winner);

        let (segment, log_likelihood) = match config.model_kind {
            ModelKind::Regression => {
                let offsets = predictor::predict_regression(&features, params)?;
                let decoded = predictor::decode_regression(proposal, offsets)?;
                match decoded.clamp_to(0.0, signal_len) {
                    Ok(seg) => (seg, None),
                    Err(_) => continue,
                }
            }
            kind => {
                let tracks =
                    predictor::predict_tracks_for_class(&features, params, kind, class_label)?;
                let result = pinpoint::pinpoint(&tracks, &grid)?;
                (result.segment, Some(result.log_likelihood))
            }
        };

        detections.push(Detection {
            segment,
            class_label,
            score: scores[winner],
            source_proposal: *proposal,
            refinement_log_likelihood: log_likelihood,
        });
    }

    sort_detections(&mut detections);
    let final_dets = match &config.nms {
        Some(nms_config) => nms(detections, nms_config),
        None => detections,
    };
    Ok(final_dets)
}

/// Descending score, ties broken by earlier start, then end, then class.
/// The full key makes the result independent of the input order.
fn sort_detections(dets: &mut [Detection]) {
    dets.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.segment.start().total_cmp(&b.segment.start()))
            .then(a.segment.end().total_cmp(&b.segment.end()))
            .then(a.class_label.cmp(&b.class_label))
    });
}

/// Class-wise greedy suppression. Hard mode drops detections overlapping a
/// kept one above the tIoU threshold; soft mode multiplies their score by
/// `exp(-tIoU^2 / sigma)` and drops those falling below the floor. Output
/// is sorted by descending (possibly decayed) score.
pub fn nms(detections: Vec<Detection>, config: &NmsConfig) -> Vec<Detection> {
    let mut remaining = detections;
    sort_detections(&mut remaining);
    let mut kept = Vec::with_capacity(remaining.len());

    while !remaining.is_empty() {
        let seed = remaining.remove(0);
        let mut next = Vec::with_capacity(remaining.len());
        for mut det in remaining {
            if det.class_label == seed.class_label {
                let overlap = det.segment.tiou(&seed.segment);
                match config.mode {
                    NmsMode::Hard => {
                        if overlap > config.tiou_threshold {
                            continue;
                        }
                    }
                    NmsMode::SoftGaussian => {
                        det.score *= (-overlap * overlap / config.sigma).exp();
                        if det.score < config.score_floor {
                            continue;
                        }
                    }
                }
            }
            next.push(det);
        }
        kept.push(seed);
        remaining = next;
        sort_detections(&mut remaining);
    }

    kept
}

// ---------------------------------------------------------------------------
// Detections file: one JSON object per line.
// ---------------------------------------------------------------------------

/// A detection bound to its video, as stored in detections files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub video_id: String,
    pub start: f64,
    pub end: f64,
    pub class: usize,
    pub score: f64,
}

impl DetectionRecord {
    pub fn from_detection(video_id: &str, det: &Detection) -> Self {
        DetectionRecord {
            video_id: video_id.to_string(),
            start: det.segment.start(),
            end: det.segment.end(),
            class: det.class_label.index(),
            score: det.score,
        }
    }

    pub fn segment(&self) -> Result<TemporalSegment> {
        TemporalSegment::new(self.start, self.end)
    }
}

pub fn write_detections_jsonl(path: &Path, records: &[DetectionRecord]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for record in records {
        let line =
            serde_json::to_string(record).map_err(|e| Error::malformed(path, e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_detections_jsonl(path: &Path) -> Result<Vec<DetectionRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DetectionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(path, format!("line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    Ok(records)
}
