//! Synthetic 1D benchmark: signals with embedded class-distinct events,
//! ground-truth annotations, proposal generation, and the on-disk dataset
//! format.
//!
//! The background is white noise; each event overlays a class-specific
//! sinusoid (frequency proportional to the class index) with a linear
//! amplitude ramp over 10% of its duration at each end. Waveforms are
//! deterministic functions of the class so a classifier has learnable
//! structure. Everything derives from one seed; per-video streams use
//! `seed ^ video_index` so generation parallelizes without changing bytes.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ClassLabel, TemporalSegment};

/// One synthetic recording: a sample vector plus non-overlapping annotated
/// event segments with class labels in `1..=C`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVideo {
    pub id: String,
    pub signal: Vec<f32>,
    pub annotations: Vec<(TemporalSegment, ClassLabel)>,
}

impl SyntheticVideo {
    pub fn length(&self) -> usize {
        self.signal.len()
    }
}

/// Parameters for [`generate_dataset`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub num_videos: usize,
    /// Inclusive range of signal lengths in samples.
    pub length_range: (usize, usize),
    /// Number of event classes; labels run `1..=num_classes`.
    pub num_classes: usize,
    /// Inclusive range of events per video.
    pub events_range: (usize, usize),
    /// Event duration range in samples.
    pub duration_range: (f64, f64),
    /// Standard deviation of the background white noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl GenerateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::parameter("num_classes", "need at least 2 classes"));
        }
        if self.length_range.0 == 0 || self.length_range.0 > self.length_range.1 {
            return Err(Error::parameter("length_range", "empty or inverted range"));
        }
        if self.events_range.0 > self.events_range.1 {
            return Err(Error::parameter("events_range", "inverted range"));
        }
        if !(self.duration_range.0 > 0.0 && self.duration_range.0 <= self.duration_range.1) {
            return Err(Error::parameter(
                "duration_range",
                "durations must be positive and ordered",
            ));
        }
        if self.duration_range.1 > self.length_range.0 as f64 {
            return Err(Error::parameter(
                "duration_range",
                "maximum duration exceeds the minimum signal length",
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::parameter("noise_sigma", "must be >= 0"));
        }
        Ok(())
    }
}

/// Cycles per sample of the class-`k` waveform; spread below Nyquist so
/// every class stays distinguishable.
fn class_frequency(class: usize, num_classes: usize) -> f64 {
    class as f64 / (2.0 * (num_classes + 1) as f64)
}

// A fixed phase keeps waveform zeros off the sample lattice, so with zero
// noise every in-event sample is nonzero.
const WAVE_PHASE: f64 = std::f64::consts::FRAC_PI_4;
const EDGE_MARGIN: f64 = 2.0;
const RAMP_FRACTION: f64 = 0.1;
const PLACEMENT_ATTEMPTS: usize = 1000;

fn event_sample(offset: f64, duration: f64, freq: f64) -> f64 {
    let u = offset / duration;
    let ramp = (u / RAMP_FRACTION).min((1.0 - u) / RAMP_FRACTION).min(1.0);
    ramp.max(0.0) * (2.0 * std::f64::consts::PI * freq * offset + WAVE_PHASE).sin()
}

/// Generates the full dataset deterministically from the config seed.
pub fn generate_dataset(config: &GenerateConfig) -> Result<Vec<SyntheticVideo>> {
    config.validate()?;
    (0..config.num_videos)
        .map(|index| generate_video(config, index))
        .collect()
}

#[allow(clippy::needless_range_loop)]
fn generate_video(config: &GenerateConfig, index: usize) -> Result<SyntheticVideo> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ index as u64);
    let length = rng.random_range(config.length_range.0..=config.length_range.1);
    let num_events = rng.random_range(config.events_range.0..=config.events_range.1);

    let mut annotations: Vec<(TemporalSegment, ClassLabel)> = Vec::with_capacity(num_events);
    for _ in 0..num_events {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let duration = rng.random_range(config.duration_range.0..=config.duration_range.1);
            let max_start = length as f64 - duration - EDGE_MARGIN;
            if max_start <= EDGE_MARGIN {
                continue;
            }
            let start = rng.random_range(EDGE_MARGIN..max_start);
            let candidate = TemporalSegment::new(start, start + duration)?;
            let padded = TemporalSegment::new(start - EDGE_MARGIN, start + duration + EDGE_MARGIN)?;
            if annotations.iter().all(|(seg, _)| !padded.overlaps(seg)) {
                let class = ClassLabel::new(rng.random_range(1..=config.num_classes));
                annotations.push((candidate, class));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not place {num_events} non-overlapping events in video {index} (length {length})"
            )));
        }
    }
    annotations.sort_by(|a, b| a.0.start().total_cmp(&b.0.start()));

    let noise = Normal::new(0.0, config.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Generation(e.to_string()))?;
    let mut signal = vec![0.0f32; length];
    if config.noise_sigma > 0.0 {
        for v in signal.iter_mut() {
            *v = noise.sample(&mut rng) as f32;
        }
    }
    for (segment, class) in &annotations {
        let freq = class_frequency(class.index(), config.num_classes);
        let first = segment.start().ceil() as usize;
        for k in first..length.min(segment.end().ceil() as usize) {
            let offset = k as f64 - segment.start();
            if offset >= segment.length() {
                break;
            }
            signal[k] += event_sample(offset, segment.length(), freq) as f32;
        }
    }

    Ok(SyntheticVideo {
        id: format!("video_{index:05}"),
        signal,
        annotations,
    })
}

/// Parameters for [`generate_proposals`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposalConfig {
    /// Perturbation scale as a fraction of the ground-truth duration;
    /// draws are truncated at two sigma so a proposal never drifts beyond
    /// recoverable overlap.
    pub jitter_sigma: f64,
    pub proposals_per_gt: usize,
    /// Window lengths for the sliding pass at 50% stride overlap.
    pub window_scales: Vec<f64>,
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(Error::parameter("jitter_sigma", "must be >= 0"));
        }
        if self.window_scales.iter().any(|w| *w <= 0.0) {
            return Err(Error::parameter("window_scales", "scales must be positive"));
        }
        Ok(())
    }
}

fn truncated_normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let dist = Normal::new(0.0, sigma).expect("sigma checked positive");
    dist.sample(rng).clamp(-2.0 * sigma, 2.0 * sigma)
}

/// Union of sliding windows over the signal and jittered copies of each
/// ground truth, all clamped to the video extent.
pub fn generate_proposals(
    video: &SyntheticVideo,
    config: &ProposalConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<TemporalSegment> {
    let length = video.length() as f64;
    let mut proposals = Vec::new();

    for &scale in &config.window_scales {
        let stride = scale / 2.0;
        let mut start = 0.0;
        while start + scale <= length + 1e-9 {
            if let Ok(seg) = TemporalSegment::new(start, (start + scale).min(length)) {
                proposals.push(seg);
            }
            start += stride;
        }
    }

    for (gt, _) in &video.annotations {
        for _ in 0..config.proposals_per_gt {
            let center = gt.center() + truncated_normal(rng, config.jitter_sigma * gt.length());
            let len = gt.length() * truncated_normal(rng, config.jitter_sigma).exp();
            let raw_start = (center - 0.5 * len).max(0.0);
            let raw_end = (center + 0.5 * len).min(length);
            if let Ok(seg) = TemporalSegment::new(raw_start, raw_end) {
                proposals.push(seg);
            }
        }
    }

    proposals
}

/// Derives the per-video proposal stream used by training and detection.
pub fn proposal_rng(seed: u64, video_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ video_index as u64)
}

// ---------------------------------------------------------------------------
// On-disk format: `videos.jsonl` plus one raw little-endian f32 file per
// signal.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct VideoRecord {
    id: String,
    length: usize,
    signal_file: String,
    annotations: Vec<AnnotationRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRecord {
    start: f64,
    end: f64,
    class: usize,
}

/// Writes `videos.jsonl` and the signal files into `dir`, creating it if
/// needed.
pub fn save_dataset(dir: &Path, videos: &[SyntheticVideo]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let index_path = dir.join("videos.jsonl");
    let mut index =
        BufWriter::new(fs::File::create(&index_path).map_err(|e| Error::io(&index_path, e))?);
    for video in videos {
        let signal_file = format!("{}.f32", video.id);
        let signal_path = dir.join(&signal_file);
        let mut bytes = Vec::with_capacity(video.signal.len() * 4);
        for v in &video.signal {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&signal_path, bytes).map_err(|e| Error::io(&signal_path, e))?;

        let record = VideoRecord {
            id: video.id.clone(),
            length: video.length(),
            signal_file,
            annotations: video
                .annotations
                .iter()
                .map(|(seg, class)| AnnotationRecord {
                    start: seg.start(),
                    end: seg.end(),
                    class: class.index(),
                })
                .collect(),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| Error::malformed(&index_path, e.to_string()))?;
        writeln!(index, "{line}").map_err(|e| Error::io(&index_path, e))?;
    }
    index.flush().map_err(|e| Error::io(&index_path, e))?;
    Ok(())
}

/// Loads a dataset written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Vec<SyntheticVideo>> {
    let index_path = dir.join("videos.jsonl");
    let file = fs::File::open(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let mut videos = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&index_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: VideoRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(&index_path, format!("line {}: {e}", lineno + 1)))?;
        let signal_path = dir.join(&record.signal_file);
        let bytes = fs::read(&signal_path).map_err(|e| Error::io(&signal_path, e))?;
        if bytes.len() != record.length * 4 {
            return Err(Error::malformed(
                &signal_path,
                format!(
                    "expected {} samples ({} bytes), file has {} bytes",
                    record.length,
                    record.length * 4,
                    bytes.len()
                ),
            ));
        }
        let signal = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let mut annotations = Vec::with_capacity(record.annotations.len());
        for a in &record.annotations {
            let seg = TemporalSegment::new(a.start, a.end)?;
            annotations.push((seg, ClassLabel::new(a.class)));
        }
        videos.push(SyntheticVideo {
            id: record.id,
            signal,
            annotations,
        });
    }
    Ok(videos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> GenerateConfig {
        GenerateConfig {
            num_videos: 4,
            length_range: (120, 160),
            num_classes: 3,
            events_range: (1, 2),
            duration_range: (20.0, 40.0),
            noise_sigma: 0.1,
            seed: 11,
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate_dataset(&base_config()).unwrap();
        let b = generate_dataset(&base_config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_events_yield_pure_noise() {
        let mut config = base_config();
        config.events_range = (0, 0);
        let videos = generate_dataset(&config).unwrap();
        assert!(videos.iter().all(|v| v.annotations.is_empty()));
    }

    #[test]
    fn annotations_are_disjoint_and_in_bounds() {
        let mut config = base_config();
        config.num_videos = 20;
        config.events_range = (2, 3);
        for video in generate_dataset(&config).unwrap() {
            for (i, (a, class)) in video.annotations.iter().enumerate() {
                assert!(a.start() >= 0.0 && a.end() <= video.length() as f64);
                assert!((1..=config.num_classes).contains(&class.index()));
                for (b, _) in &video.annotations[i + 1..] {
                    assert!(!a.overlaps(b));
                }
            }
        }
    }

    // With zero noise the background is exactly zero, so annotation spans
    // are recoverable by thresholding: maximal nonzero runs (allowing a
    // single zero sample from a waveform zero crossing) must match the
    // annotations within one sample per boundary.
    #[test]
    fn noiseless_events_are_recoverable_by_thresholding() {
        let mut config = base_config();
        config.noise_sigma = 0.0;
        config.num_videos = 10;
        config.events_range = (1, 3);
        for video in generate_dataset(&config).unwrap() {
            let nonzero: Vec<usize> = video
                .signal
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > 0.0)
                .map(|(k, _)| k)
                .collect();
            let mut runs: Vec<(usize, usize)> = Vec::new();
            for &k in &nonzero {
                match runs.last_mut() {
                    Some((_, end)) if k <= *end + 2 => *end = k,
                    _ => runs.push((k, k)),
                }
            }
            assert_eq!(runs.len(), video.annotations.len());
            for ((run_start, run_end), (gt, _)) in runs.iter().zip(&video.annotations) {
                assert!((*run_start as f64 - gt.start()).abs() <= 1.0 + 1e-9);
                assert!((*run_end as f64 + 1.0 - gt.end()).abs() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn sliding_windows_follow_half_stride() {
        let video = SyntheticVideo {
            id: "w".into(),
            signal: vec![0.0; 64],
            annotations: vec![],
        };
        let config = ProposalConfig {
            jitter_sigma: 0.0,
            proposals_per_gt: 0,
            window_scales: vec![16.0],
        };
        let mut rng = proposal_rng(0, 0);
        let proposals = generate_proposals(&video, &config, &mut rng);
        assert_eq!(proposals.len(), 7);
        assert_eq!(proposals[0], TemporalSegment::new(0.0, 16.0).unwrap());
        assert_eq!(proposals[6], TemporalSegment::new(48.0, 64.0).unwrap());
    }

    #[test]
    fn zero_jitter_reproduces_ground_truth() {
        let gt = TemporalSegment::new(30.0, 60.0).unwrap();
        let video = SyntheticVideo {
            id: "g".into(),
            signal: vec![0.0; 100],
            annotations: vec![(gt, ClassLabel::new(1))],
        };
        let config = ProposalConfig {
            jitter_sigma: 0.0,
            proposals_per_gt: 1,
            window_scales: vec![],
        };
        let mut rng = proposal_rng(3, 0);
        let proposals = generate_proposals(&video, &config, &mut rng);
        assert_eq!(proposals, vec![gt]);
    }

    #[test]
    fn proposals_stay_inside_the_video() {
        let mut config = base_config();
        config.num_videos = 10;
        let pcfg = ProposalConfig {
            jitter_sigma: 0.1,
            proposals_per_gt: 5,
            window_scales: vec![32.0, 64.0],
        };
        for (idx, video) in generate_dataset(&config).unwrap().iter().enumerate() {
            let mut rng = proposal_rng(99, idx);
            for p in generate_proposals(video, &pcfg, &mut rng) {
                assert!(p.start() >= 0.0 && p.end() <= video.length() as f64 && p.length() > 0.0);
            }
        }
    }

    // Truncated jitter at sigma <= 10% of the duration keeps at least one
    // proposal per ground truth above 0.5 tIoU.
    #[test]
    fn jittered_proposals_cover_every_ground_truth() {
        let config = base_config();
        let pcfg = ProposalConfig {
            jitter_sigma: 0.1,
            proposals_per_gt: 3,
            window_scales: vec![],
        };
        for seed in 0..100u64 {
            let mut cfg = config.clone();
            cfg.seed = seed;
            cfg.num_videos = 1;
            for (idx, video) in generate_dataset(&cfg).unwrap().iter().enumerate() {
                let mut rng = proposal_rng(seed, idx);
                let proposals = generate_proposals(video, &pcfg, &mut rng);
                for (gt, _) in &video.annotations {
                    assert!(
                        proposals.iter().any(|p| p.tiou(gt) >= 0.5),
                        "no usable proposal for {gt:?} at seed {seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn dataset_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let videos = generate_dataset(&base_config()).unwrap();
        save_dataset(dir.path(), &videos).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(videos, loaded);
    }

    #[test]
    fn empty_dataset_writes_an_empty_index() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(dir.path(), &[]).unwrap();
        assert_eq!(fs::read(dir.path().join("videos.jsonl")).unwrap(), b"");
        assert!(load_dataset(dir.path()).unwrap().is_empty());
    }
}
