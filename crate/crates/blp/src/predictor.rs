//! Desk-scale predictor: hand-crafted per-unit signal features, linear
//! heads for per-unit probabilities, classification, and the
//! direct-regression baseline, plus the full-batch gradient-descent
//! trainer.
//!
//! Every head is a single affine map. The probability head maps the
//! flattened `M x F` feature matrix through a sigmoid to an
//! `N x M x C` track tensor (`N = 1` for the in/out model, `2` for the
//! boundary model); the classifier maps mean-pooled features through a
//! softmax to `C + 1` scores; the baseline regresses a relative center
//! offset and a log length ratio. Training is single-threaded with a fixed
//! reduction order, so a seed pins every byte of the result.

use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::{self, Assignment, TargetEncoding};
use crate::error::{Error, Result};
use crate::loss::{self, LossWeights};
use crate::pinpoint::ProbabilityTracks;
use crate::synth::{self, ProposalConfig, SyntheticVideo};
use crate::types::{search_grid, ClassLabel, TemporalSegment, UnitGrid};

/// Stats per unit block: mean, standard deviation, min, max, mean absolute
/// first difference, zero-crossing rate.
const STATS_PER_BLOCK: usize = 6;

/// Each unit row carries its own stats plus the two neighbor blocks.
pub const FEATURES_PER_UNIT: usize = 3 * STATS_PER_BLOCK;

/// Which localization head a model trains and refines with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    InOut,
    Boundary,
    Regression,
}

impl ModelKind {
    /// Probability tracks per unit and class held by the localization head.
    pub fn track_count(&self) -> usize {
        match self {
            ModelKind::Boundary => 2,
            ModelKind::InOut | ModelKind::Regression => 1,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::InOut => "in-out",
            ModelKind::Boundary => "boundary",
            ModelKind::Regression => "regression",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-out" => Ok(ModelKind::InOut),
            "boundary" => Ok(ModelKind::Boundary),
            "regression" => Ok(ModelKind::Regression),
            other => Err(Error::parameter(
                "model_kind",
                format!("expected in-out, boundary, or regression, got `{other}`"),
            )),
        }
    }
}

/// `M x F` feature matrix for one search grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitFeatures {
    num_units: usize,
    data: Vec<f64>,
}

impl UnitFeatures {
    pub fn num_units(&self) -> usize {
        self.num_units
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, unit: usize) -> &[f64] {
        &self.data[unit * FEATURES_PER_UNIT..(unit + 1) * FEATURES_PER_UNIT]
    }

    /// Mean over units of each feature column.
    pub fn pooled(&self) -> Vec<f64> {
        let mut out = vec![0.0; FEATURES_PER_UNIT];
        for unit in 0..self.num_units {
            for (o, v) in out.iter_mut().zip(self.row(unit)) {
                *o += v;
            }
        }
        for o in &mut out {
            *o /= self.num_units as f64;
        }
        out
    }
}

fn block_stats(samples: &[f32]) -> [f64; STATS_PER_BLOCK] {
    let n = samples.len() as f64;
    let mut mean = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in samples {
        let v = v as f64;
        mean += v;
        min = min.min(v);
        max = max.max(v);
    }
    mean /= n;

    let mut var = 0.0;
    for &v in samples {
        let d = v as f64 - mean;
        var += d * d;
    }
    let std = (var / n).sqrt();

    let mut abs_diff = 0.0;
    let mut crossings = 0usize;
    for pair in samples.windows(2) {
        abs_diff += (pair[1] as f64 - pair[0] as f64).abs();
        if (pair[0] as f64) * (pair[1] as f64) < 0.0 {
            crossings += 1;
        }
    }
    let gaps = samples.len().saturating_sub(1);
    let (mad, zcr) = if gaps > 0 {
        (abs_diff / gaps as f64, crossings as f64 / gaps as f64)
    } else {
        (0.0, 0.0)
    };

    [mean, std, min, max, mad, zcr]
}

/// Per-unit descriptive statistics of the contained samples plus the two
/// neighbor units (zero-padded at the grid edges). The grid must lie
/// within the signal and every unit must cover at least one sample.
pub fn extract_features(signal: &[f32], grid: &UnitGrid) -> Result<UnitFeatures> {
    let len = signal.len() as f64;
    if grid.interval().start() < -1e-9 || grid.interval().end() > len + 1e-9 {
        return Err(Error::ShapeMismatch(format!(
            "grid {:?} exceeds the signal extent [0, {len})",
            grid.interval()
        )));
    }

    let m = grid.num_units();
    let mut blocks = Vec::with_capacity(m);
    for unit in 0..m {
        let lo = grid.left_edge(unit).max(0.0).ceil() as usize;
        let hi = (grid.right_edge(unit).min(len).ceil() as usize).min(signal.len());
        if lo >= hi {
            return Err(Error::EmptyUnit { unit });
        }
        blocks.push(block_stats(&signal[lo..hi]));
    }

    let zero = [0.0; STATS_PER_BLOCK];
    let mut data = Vec::with_capacity(m * FEATURES_PER_UNIT);
    for unit in 0..m {
        data.extend_from_slice(&blocks[unit]);
        data.extend_from_slice(if unit > 0 { &blocks[unit - 1] } else { &zero });
        data.extend_from_slice(if unit + 1 < m {
            &blocks[unit + 1]
        } else {
            &zero
        });
    }
    Ok(UnitFeatures { num_units: m, data })
}

/// Mixes a stream tag into a base seed (FNV-1a over the tag) so each
/// consumer of the run seed draws from an independent stream.
pub fn derive_stream_seed(seed: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    seed ^ h
}

/// All trainable coefficients, serialized as flat row-major arrays.
///
/// Shapes: `loc_weights` is `(n*m*c) x (m*f + 1)`, `cls_weights` is
/// `(c+1) x (f+1)`, `reg_weights` is `2 x (m*f + 1)`; the final column of
/// each row is the bias. Localization outputs are laid out class-major:
/// output `((class - 1) * n + track) * m + unit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    pub m: usize,
    pub f: usize,
    pub c: usize,
    pub n: usize,
    pub loc_weights: Vec<f64>,
    pub cls_weights: Vec<f64>,
    pub reg_weights: Vec<f64>,
    pub seed: u64,
}

impl PredictorParams {
    /// Fresh parameters: weights i.i.d. uniform in `[-0.01, 0.01]` from
    /// seeded per-head streams, biases zero. The classifier stream does
    /// not depend on the model kind, so models sharing a seed share their
    /// classifier initialization exactly.
    pub fn init(m: usize, c: usize, kind: ModelKind, seed: u64) -> Result<Self> {
        if m < 2 || c < 1 {
            return Err(Error::parameter(
                "shape",
                format!("need m >= 2 and c >= 1, got m={m} c={c}"),
            ));
        }
        let f = FEATURES_PER_UNIT;
        let n = kind.track_count();
        let init_head = |tag: &str, rows: usize, cols: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(seed, tag));
            let mut w = vec![0.0f64; rows * cols];
            for (i, v) in w.iter_mut().enumerate() {
                let is_bias = (i + 1) % cols == 0;
                let draw = rng.random_range(-0.01..0.01);
                if !is_bias {
                    *v = draw;
                }
            }
            w
        };
        Ok(PredictorParams {
            m,
            f,
            c,
            n,
            cls_weights: init_head("cls", c + 1, f + 1),
            loc_weights: init_head("loc", n * m * c, m * f + 1),
            reg_weights: init_head("reg", 2, m * f + 1),
            seed,
        })
    }

    fn loc_cols(&self) -> usize {
        self.m * self.f + 1
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (
                "loc_weights",
                self.loc_weights.len(),
                self.n * self.m * self.c * self.loc_cols(),
            ),
            (
                "cls_weights",
                self.cls_weights.len(),
                (self.c + 1) * (self.f + 1),
            ),
            ("reg_weights", self.reg_weights.len(), 2 * self.loc_cols()),
        ];
        for (name, got, expected) in checks {
            if got != expected {
                return Err(Error::ShapeMismatch(format!(
                    "{name}: expected {expected} coefficients, got {got}"
                )));
            }
        }
        if self.f != FEATURES_PER_UNIT {
            return Err(Error::ShapeMismatch(format!(
                "feature count {} does not match the extractor's {FEATURES_PER_UNIT}",
                self.f
            )));
        }
        for w in [&self.loc_weights, &self.cls_weights, &self.reg_weights] {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::ShapeMismatch("non-finite weight".to_string()));
            }
        }
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string(self).map_err(|e| Error::malformed(path, e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: PredictorParams =
            serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

fn affine_row(weights: &[f64], cols: usize, row: usize, x: &[f64]) -> f64 {
    let w = &weights[row * cols..(row + 1) * cols];
    let mut acc = w[cols - 1];
    for (wi, xi) in w[..cols - 1].iter().zip(x) {
        acc += wi * xi;
    }
    acc
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check_feature_shape(feats: &UnitFeatures, params: &PredictorParams) -> Result<()> {
    if feats.num_units() != params.m {
        return Err(Error::ShapeMismatch(format!(
            "features cover {} units, parameters expect {}",
            feats.num_units(),
            params.m
        )));
    }
    Ok(())
}

fn sigmoid_block(params: &PredictorParams, x: &[f64], class: usize, track: usize) -> Vec<f64> {
    let cols = params.loc_cols();
    let base = ((class - 1) * params.n + track) * params.m;
    (0..params.m)
        .map(|unit| sigmoid(affine_row(&params.loc_weights, cols, base + unit, x)))
        .collect()
}

/// Probability tracks of one class; the pipeline calls this for the
/// classifier's argmax class only.
pub fn predict_tracks_for_class(
    feats: &UnitFeatures,
    params: &PredictorParams,
    kind: ModelKind,
    class_label: ClassLabel,
) -> Result<ProbabilityTracks> {
    check_feature_shape(feats, params)?;
    if kind.track_count() != params.n || kind == ModelKind::Regression {
        return Err(Error::ShapeMismatch(format!(
            "{} tracks requested from a head with n={}",
            kind.as_str(),
            params.n
        )));
    }
    let class = class_label.index();
    if class == 0 || class > params.c {
        return Err(Error::parameter(
            "class",
            format!("track class must lie in 1..={}, got {class}", params.c),
        ));
    }
    let x = feats.flat();
    match kind {
        ModelKind::InOut => {
            ProbabilityTracks::in_out(class_label, sigmoid_block(params, x, class, 0))
        }
        ModelKind::Boundary => ProbabilityTracks::boundary(
            class_label,
            sigmoid_block(params, x, class, 0),
            sigmoid_block(params, x, class, 1),
        ),
        ModelKind::Regression => unreachable!("rejected above"),
    }
}

/// Full `N x M x C` prediction: one [`ProbabilityTracks`] per class
/// `1..=C`.
pub fn predict_tracks(
    feats: &UnitFeatures,
    params: &PredictorParams,
    kind: ModelKind,
) -> Result<Vec<ProbabilityTracks>> {
    (1..=params.c)
        .map(|class| predict_tracks_for_class(feats, params, kind, ClassLabel::new(class)))
        .collect()
}

/// `(C+1)`-way class scores from mean-pooled features; a numerically
/// stable softmax, so the output always sums to one.
pub fn predict_class(feats: &UnitFeatures, params: &PredictorParams) -> Result<Vec<f64>> {
    check_feature_shape(feats, params)?;
    let pooled = feats.pooled();
    let cols = params.f + 1;
    let logits: Vec<f64> = (0..=params.c)
        .map(|row| affine_row(&params.cls_weights, cols, row, &pooled))
        .collect();
    Ok(softmax(&logits))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Baseline head output: `(center offset / proposal length, log length
/// ratio)`.
pub fn predict_regression(feats: &UnitFeatures, params: &PredictorParams) -> Result<(f64, f64)> {
    check_feature_shape(feats, params)?;
    let x = feats.flat();
    let cols = params.loc_cols();
    Ok((
        affine_row(&params.reg_weights, cols, 0, x),
        affine_row(&params.reg_weights, cols, 1, x),
    ))
}

/// Regression target of a ground truth relative to its proposal.
pub fn encode_regression(proposal: &TemporalSegment, gt: &TemporalSegment) -> (f64, f64) {
    (
        (gt.center() - proposal.center()) / proposal.length(),
        (gt.length() / proposal.length()).ln(),
    )
}

/// Applies a regression output to a proposal.
pub fn decode_regression(
    proposal: &TemporalSegment,
    offsets: (f64, f64),
) -> Result<TemporalSegment> {
    let center = proposal.center() + offsets.0 * proposal.length();
    let half = 0.5 * proposal.length() * offsets.1.exp();
    TemporalSegment::new(center - half, center + half)
}

/// One proposal prepared for training: features on its search grid, the
/// classification target, and (for localization positives) the encoded
/// targets of the best-overlap ground truth.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub features: UnitFeatures,
    pub pooled: Vec<f64>,
    pub cls_target: ClassLabel,
    pub localization: Option<LocalizationTarget>,
}

#[derive(Debug, Clone)]
pub struct LocalizationTarget {
    pub targets: TargetEncoding,
    pub regression: (f64, f64),
}

/// Trainer configuration; the learning rate is `lr_initial` before
/// `lr_decay_epoch` and `lr_final` from it onward.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model_kind: ModelKind,
    pub num_units: usize,
    pub num_classes: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub lr_decay_epoch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub positive_tiou: f64,
    pub proposals: ProposalConfig,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_units < 2 {
            return Err(Error::parameter("num_units", "need at least 2 units"));
        }
        if self.num_classes < 1 {
            return Err(Error::parameter("num_classes", "need at least 1 class"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 1.0) {
            return Err(Error::parameter("gamma", "extension factor must be >= 1.0"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::parameter("lambda", "must be >= 0"));
        }
        for (name, lr) in [("lr_initial", self.lr_initial), ("lr_final", self.lr_final)] {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::parameter(name, "learning rate must be >= 0"));
            }
        }
        if self.epochs == 0 {
            return Err(Error::parameter("epochs", "need at least 1 epoch"));
        }
        if !(0.0..=1.0).contains(&self.positive_tiou) {
            return Err(Error::parameter("positive_tiou", "must lie in [0, 1]"));
        }
        self.proposals.validate()
    }
}

/// Builds the proposal-level training set. Proposals whose search grid
/// falls below one sample per unit cannot be featurized and are skipped.
pub fn build_training_set(
    videos: &[SyntheticVideo],
    config: &TrainConfig,
) -> Result<Vec<TrainingSample>> {
    let proposal_seed = derive_stream_seed(config.seed, "proposals");
    let mut samples = Vec::new();
    for (index, video) in videos.iter().enumerate() {
        let mut rng = synth::proposal_rng(proposal_seed, index);
        let proposals = synth::generate_proposals(video, &config.proposals, &mut rng);
        let signal_len = video.length() as f64;
        for proposal in proposals {
            let grid = search_grid(&proposal, config.gamma, config.num_units, signal_len)?;
            if grid.unit_width() < 1.0 {
                continue;
            }
            let features = extract_features(&video.signal, &grid)?;
            let pooled = features.pooled();
            let (cls_target, localization) = match encode::assign_proposal(
                &proposal,
                &video.annotations,
                config.positive_tiou,
            ) {
                Assignment::Positive {
                    gt_index,
                    class_label,
                    ..
                } => {
                    let gt = &video.annotations[gt_index].0;
                    let targets = TargetEncoding::new(&grid, gt, class_label);
                    (
                        class_label,
                        Some(LocalizationTarget {
                            targets,
                            regression: encode_regression(&proposal, gt),
                        }),
                    )
                }
                Assignment::Background => (ClassLabel::BACKGROUND, None),
            };
            samples.push(TrainingSample {
                features,
                pooled,
                cls_target,
                localization,
            });
        }
    }
    Ok(samples)
}

/// Gradient accumulators with the same shapes as the parameter arrays.
#[derive(Debug, Clone)]
pub struct HeadGradients {
    pub loc: Vec<f64>,
    pub cls: Vec<f64>,
    pub reg: Vec<f64>,
}

/// Joint objective over a prepared batch.
pub fn batch_loss(
    params: &PredictorParams,
    samples: &[TrainingSample],
    kind: ModelKind,
    weights: &LossWeights,
) -> Result<f64> {
    let (loss, _) = batch_pass(params, samples, kind, weights, false)?;
    Ok(loss)
}

/// Joint objective and its gradient w.r.t. every parameter.
pub fn batch_gradients(
    params: &PredictorParams,
    samples: &[TrainingSample],
    kind: ModelKind,
    weights: &LossWeights,
) -> Result<(f64, HeadGradients)> {
    let (loss, grads) = batch_pass(params, samples, kind, weights, true)?;
    Ok((loss, grads.expect("gradients requested")))
}

fn batch_pass(
    params: &PredictorParams,
    samples: &[TrainingSample],
    kind: ModelKind,
    weights: &LossWeights,
    with_gradients: bool,
) -> Result<(f64, Option<HeadGradients>)> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    params.validate()?;
    if kind.track_count() != params.n {
        return Err(Error::ShapeMismatch(format!(
            "model kind {} needs n={}, parameters have n={}",
            kind.as_str(),
            kind.track_count(),
            params.n
        )));
    }

    let mut grads = with_gradients.then(|| HeadGradients {
        loc: vec![0.0; params.loc_weights.len()],
        cls: vec![0.0; params.cls_weights.len()],
        reg: vec![0.0; params.reg_weights.len()],
    });

    let n_cls = samples.len() as f64;
    let n_loc = samples.iter().filter(|s| s.localization.is_some()).count() as f64;
    let loc_scale = if n_loc > 0.0 {
        weights.lambda_tradeoff / n_loc
    } else {
        0.0
    };

    let mut cls_terms = Vec::with_capacity(samples.len());
    let mut loc_terms = Vec::new();
    let cls_cols = params.f + 1;
    let loc_cols = params.loc_cols();

    for sample in samples {
        // Classification head over pooled features.
        let logits: Vec<f64> = (0..=params.c)
            .map(|row| affine_row(&params.cls_weights, cls_cols, row, &sample.pooled))
            .collect();
        let scores = softmax(&logits);
        cls_terms.push(loss::cross_entropy(&scores, sample.cls_target));
        if let Some(g) = grads.as_mut() {
            for (row, &score) in scores.iter().enumerate() {
                let indicator = (row == sample.cls_target.index()) as usize as f64;
                let gz = (score - indicator) / n_cls;
                accumulate_row(&mut g.cls, cls_cols, row, &sample.pooled, gz);
            }
        }

        let Some(localization) = &sample.localization else {
            continue;
        };
        let x = sample.features.flat();
        let class = localization.targets.class_label.index();

        match kind {
            ModelKind::InOut => {
                let p = sigmoid_block(params, x, class, 0);
                loc_terms.push(loss::in_out_loss(&p, &localization.targets.t_io)?);
                if let Some(g) = grads.as_mut() {
                    let dp = loss::in_out_loss_gradient(&p, &localization.targets.t_io)?;
                    let base = (class - 1) * params.n * params.m;
                    for unit in 0..params.m {
                        let gz = loc_scale * dp[unit] * p[unit] * (1.0 - p[unit]);
                        accumulate_row(&mut g.loc, loc_cols, base + unit, x, gz);
                    }
                }
            }
            ModelKind::Boundary => {
                let p_s = sigmoid_block(params, x, class, 0);
                let p_e = sigmoid_block(params, x, class, 1);
                let t_s = &localization.targets.t_s;
                let t_e = &localization.targets.t_e;
                loc_terms.push(loss::boundary_loss(&p_s, &p_e, t_s, t_e, weights)?);
                if let Some(g) = grads.as_mut() {
                    let (ds, de) = loss::boundary_loss_gradient(&p_s, &p_e, t_s, t_e, weights)?;
                    let base = (class - 1) * params.n * params.m;
                    for unit in 0..params.m {
                        let gz = loc_scale * ds[unit] * p_s[unit] * (1.0 - p_s[unit]);
                        accumulate_row(&mut g.loc, loc_cols, base + unit, x, gz);
                        let gz = loc_scale * de[unit] * p_e[unit] * (1.0 - p_e[unit]);
                        accumulate_row(&mut g.loc, loc_cols, base + params.m + unit, x, gz);
                    }
                }
            }
            ModelKind::Regression => {
                let y = (
                    affine_row(&params.reg_weights, loc_cols, 0, x),
                    affine_row(&params.reg_weights, loc_cols, 1, x),
                );
                let t = localization.regression;
                let (d0, d1) = (y.0 - t.0, y.1 - t.1);
                loc_terms.push(d0 * d0 + d1 * d1);
                if let Some(g) = grads.as_mut() {
                    accumulate_row(&mut g.reg, loc_cols, 0, x, loc_scale * 2.0 * d0);
                    accumulate_row(&mut g.reg, loc_cols, 1, x, loc_scale * 2.0 * d1);
                }
            }
        }
    }

    let total = loss::joint_loss(&cls_terms, &loc_terms, weights)?;
    Ok((total, grads))
}

fn accumulate_row(grad: &mut [f64], cols: usize, row: usize, x: &[f64], gz: f64) {
    if gz == 0.0 {
        return;
    }
    let g = &mut grad[row * cols..(row + 1) * cols];
    for (gi, xi) in g[..cols - 1].iter_mut().zip(x) {
        *gi += gz * xi;
    }
    g[cols - 1] += gz;
}

/// Trained parameters plus the per-epoch joint-loss trace (recorded before
/// each update).
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: PredictorParams,
    pub loss_trace: Vec<f64>,
}

/// Full-batch gradient descent on the joint objective (or the regression
/// objective for the baseline). Deterministic given the config seed.
pub fn train(videos: &[SyntheticVideo], config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if videos.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let samples = build_training_set(videos, config)?;
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let weights = LossWeights::new(config.lambda, config.num_units)?;
    let mut params = PredictorParams::init(
        config.num_units,
        config.num_classes,
        config.model_kind,
        config.seed,
    )?;

    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, grads) = batch_gradients(&params, &samples, config.model_kind, &weights)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss_trace.push(loss);

        let lr = if epoch < config.lr_decay_epoch {
            config.lr_initial
        } else {
            config.lr_final
        };
        apply_update(&mut params.cls_weights, &grads.cls, lr);
        match config.model_kind {
            ModelKind::Regression => apply_update(&mut params.reg_weights, &grads.reg, lr),
            _ => apply_update(&mut params.loc_weights, &grads.loc, lr),
        }
    }

    Ok(TrainReport { params, loss_trace })
}

fn apply_update(weights: &mut [f64], grads: &[f64], lr: f64) {
    for (w, g) in weights.iter_mut().zip(grads) {
        *w -= lr * g;
    }
}
