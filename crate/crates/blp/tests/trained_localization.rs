//! Capability smoke test: after training to convergence on a synthetic set
//! of at least 200 event intervals, pinpointed boundaries on held-out
//! intervals must land within 2 unit widths of the ground truth on
//! average, for both localization models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use blp::encode::{self, Assignment};
use blp::pinpoint;
use blp::predictor::{self, ModelKind, TrainConfig};
use blp::synth::{self, GenerateConfig, ProposalConfig};
use blp::types::search_grid;

fn generate(num_videos: usize, seed: u64) -> Vec<synth::SyntheticVideo> {
    synth::generate_dataset(&GenerateConfig {
        num_videos,
        length_range: (400, 560),
        num_classes: 3,
        events_range: (2, 3),
        duration_range: (48.0, 96.0),
        noise_sigma: 0.15,
        seed,
    })
    .unwrap()
}

#[test]
fn trained_models_pinpoint_held_out_boundaries_within_two_units() {
    let train_videos = generate(80, 71);
    let held_out = generate(30, 72);
    let train_intervals: usize = train_videos.iter().map(|v| v.annotations.len()).sum();
    assert!(
        train_intervals >= 200,
        "training set has {train_intervals} intervals"
    );

    for kind in [ModelKind::InOut, ModelKind::Boundary] {
        let config = TrainConfig {
            model_kind: kind,
            num_units: 32,
            num_classes: 3,
            gamma: 2.0,
            lambda: 0.01,
            lr_initial: 4.0,
            lr_final: 0.4,
            lr_decay_epoch: 450,
            epochs: 600,
            seed: 5,
            positive_tiou: 0.5,
            proposals: ProposalConfig {
                jitter_sigma: 0.15,
                proposals_per_gt: 4,
                window_scales: vec![64.0, 128.0],
            },
        };
        let trained = predictor::train(&train_videos, &config).unwrap();

        // One jittered proposal per held-out interval; the localization
        // error is measured against the matched ground truth, normalized
        // by that proposal's own unit width.
        let jitter = ProposalConfig {
            jitter_sigma: 0.12,
            proposals_per_gt: 1,
            window_scales: vec![],
        };
        let mut total_error_units = 0.0;
        let mut boundaries = 0usize;
        for (index, video) in held_out.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + index as u64);
            let proposals = synth::generate_proposals(video, &jitter, &mut rng);
            for proposal in proposals {
                let matched = match encode::assign_proposal(&proposal, &video.annotations, 0.5) {
                    Assignment::Positive { gt_index, .. } => &video.annotations[gt_index],
                    Assignment::Background => continue,
                };
                let grid = search_grid(
                    &proposal,
                    config.gamma,
                    config.num_units,
                    video.length() as f64,
                )
                .unwrap();
                if grid.unit_width() < 1.0 {
                    continue;
                }
                let features = predictor::extract_features(&video.signal, &grid).unwrap();
                let tracks = predictor::predict_tracks_for_class(
                    &features,
                    &trained.params,
                    kind,
                    matched.1,
                )
                .unwrap();
                let refined = pinpoint::pinpoint(&tracks, &grid).unwrap().segment;
                let w = grid.unit_width();
                total_error_units += (refined.start() - matched.0.start()).abs() / w;
                total_error_units += (refined.end() - matched.0.end()).abs() / w;
                boundaries += 2;
            }
        }

        assert!(
            boundaries >= 100,
            "only {boundaries} held-out boundaries measured"
        );
        let mean_error = total_error_units / boundaries as f64;
        assert!(
            mean_error <= 2.0,
            "{} model: mean boundary error {mean_error:.2} unit widths over {boundaries} boundaries",
            kind.as_str()
        );
    }
}
