//! Training objectives and their analytic gradients.
//!
//! The localization losses are negated binary log-likelihoods so that
//! minimization is the training direction: the in/out loss is an unweighted
//! per-unit cross entropy, the boundary loss reweights the single positive
//! unit against the `M - 1` negatives with the trade-off pair
//! `beta_minus = 0.5 M / (M - 1)` and `beta_plus = (M + 1) * beta_minus`.
//! Classification is standard multi-class cross entropy. The joint
//! objective averages classification terms over the batch and localization
//! terms over the positive proposals, weighted by `lambda`.

use crate::error::{Error, Result};
use crate::pinpoint::EPSILON;
use crate::types::ClassLabel;

fn clip(p: f64) -> f64 {
    p.clamp(EPSILON, 1.0 - EPSILON)
}

/// Reference trade-off value used with THUMOS-style evaluation setups.
pub const LAMBDA_THUMOS: f64 = 20.0;

/// Reference trade-off value used with ActivityNet-style evaluation setups.
pub const LAMBDA_ACTIVITYNET: f64 = 250.0;

/// Trade-off constants for the joint objective and the boundary loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_tradeoff: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

impl LossWeights {
    /// Derives the boundary trade-off pair from the unit count.
    pub fn new(lambda_tradeoff: f64, num_units: usize) -> Result<Self> {
        if !(lambda_tradeoff.is_finite() && lambda_tradeoff >= 0.0) {
            return Err(Error::parameter(
                "lambda",
                format!("trade-off must be finite and non-negative, got {lambda_tradeoff}"),
            ));
        }
        if num_units < 2 {
            return Err(Error::parameter(
                "m",
                format!("beta weights need at least 2 units, got {num_units}"),
            ));
        }
        let m = num_units as f64;
        let beta_minus = 0.5 * m / (m - 1.0);
        Ok(LossWeights {
            lambda_tradeoff,
            beta_plus: (m + 1.0) * beta_minus,
            beta_minus,
        })
    }
}

fn check_lengths(p: &[f64], t: &[bool]) -> Result<()> {
    if p.len() != t.len() {
        return Err(Error::LengthMismatch {
            expected: t.len(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Negative per-unit binary log-likelihood of the in/out targets.
pub fn in_out_loss(p: &[f64], t: &[bool]) -> Result<f64> {
    check_lengths(p, t)?;
    let mut total = 0.0;
    for (&pj, &tj) in p.iter().zip(t) {
        let pj = clip(pj);
        total -= if tj { pj.ln() } else { (1.0 - pj).ln() };
    }
    Ok(total)
}

/// `d loss / d p_j` for the in/out loss: `-t/p + (1-t)/(1-p)`.
pub fn in_out_loss_gradient(p: &[f64], t: &[bool]) -> Result<Vec<f64>> {
    check_lengths(p, t)?;
    Ok(p.iter()
        .zip(t)
        .map(|(&pj, &tj)| {
            let pj = clip(pj);
            if tj {
                -1.0 / pj
            } else {
                1.0 / (1.0 - pj)
            }
        })
        .collect())
}

fn weighted_track_loss(p: &[f64], t: &[bool], w: &LossWeights) -> f64 {
    p.iter()
        .zip(t)
        .map(|(&pj, &tj)| {
            let pj = clip(pj);
            if tj {
                -w.beta_plus * pj.ln()
            } else {
                -w.beta_minus * (1.0 - pj).ln()
            }
        })
        .sum()
}

/// Weighted boundary loss summed over the start and end tracks.
pub fn boundary_loss(
    p_s: &[f64],
    p_e: &[f64],
    t_s: &[bool],
    t_e: &[bool],
    w: &LossWeights,
) -> Result<f64> {
    check_lengths(p_s, t_s)?;
    check_lengths(p_e, t_e)?;
    Ok(weighted_track_loss(p_s, t_s, w) + weighted_track_loss(p_e, t_e, w))
}

fn weighted_track_gradient(p: &[f64], t: &[bool], w: &LossWeights) -> Vec<f64> {
    p.iter()
        .zip(t)
        .map(|(&pj, &tj)| {
            let pj = clip(pj);
            if tj {
                -w.beta_plus / pj
            } else {
                w.beta_minus / (1.0 - pj)
            }
        })
        .collect()
}

/// Gradients of the boundary loss w.r.t. the start and end tracks.
pub fn boundary_loss_gradient(
    p_s: &[f64],
    p_e: &[f64],
    t_s: &[bool],
    t_e: &[bool],
    w: &LossWeights,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lengths(p_s, t_s)?;
    check_lengths(p_e, t_e)?;
    Ok((
        weighted_track_gradient(p_s, t_s, w),
        weighted_track_gradient(p_e, t_e, w),
    ))
}

/// Cross entropy of a score vector against a label, without the simplex
/// precondition. Shared by the validated loss and the finite-difference
/// checks, which must evaluate slightly off the simplex.
pub fn cross_entropy(scores: &[f64], label: ClassLabel) -> f64 {
    -clip(scores[label.index()]).ln()
}

/// Multi-class cross entropy; `scores` must be a `(C+1)`-simplex.
pub fn classification_loss(scores: &[f64], label: ClassLabel) -> Result<f64> {
    if label.index() >= scores.len() {
        return Err(Error::parameter(
            "label",
            format!(
                "class index {} out of range for {} scores",
                label.index(),
                scores.len()
            ),
        ));
    }
    let sum: f64 = scores.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { sum });
    }
    Ok(cross_entropy(scores, label))
}

/// `d loss / d scores_k` for the classification loss: nonzero only at the
/// labelled coordinate.
pub fn classification_loss_gradient(scores: &[f64], label: ClassLabel) -> Result<Vec<f64>> {
    classification_loss(scores, label)?;
    let mut grad = vec![0.0; scores.len()];
    grad[label.index()] = -1.0 / clip(scores[label.index()]);
    Ok(grad)
}

/// Joint objective: mean classification loss over the batch plus `lambda`
/// times the mean localization loss over positive proposals. A batch with
/// no positives carries no localization term.
pub fn joint_loss(cls_terms: &[f64], loc_terms: &[f64], w: &LossWeights) -> Result<f64> {
    if cls_terms.is_empty() {
        return Err(Error::parameter(
            "cls_terms",
            "a batch needs at least one classification term".to_string(),
        ));
    }
    let cls = cls_terms.iter().sum::<f64>() / cls_terms.len() as f64;
    let loc = if loc_terms.is_empty() {
        0.0
    } else {
        loc_terms.iter().sum::<f64>() / loc_terms.len() as f64
    };
    Ok(cls + w.lambda_tradeoff * loc)
}
