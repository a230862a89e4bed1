//! Binary target construction on a unit grid from a ground-truth segment.
//!
//! Two target families exist: an in/out vector marking units inside the
//! ground-truth span, and a pair of boundary vectors marking the units that
//! contain the start and end coordinates. An in/out unit counts as inside
//! when its center lies within the (closed) ground-truth span, so target
//! support grows proportionally with overlap. A boundary falling outside
//! the grid encodes as all-zero on that side rather than snapping to the
//! edge, which would teach a false location.

use crate::types::{ClassLabel, TemporalSegment, UnitGrid};

/// Per-unit binary targets for one (grid, ground truth, class) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetEncoding {
    pub t_io: Vec<bool>,
    pub t_s: Vec<bool>,
    pub t_e: Vec<bool>,
    pub class_label: ClassLabel,
}

impl TargetEncoding {
    pub fn new(grid: &UnitGrid, gt: &TemporalSegment, class_label: ClassLabel) -> Self {
        let (t_s, t_e) = encode_boundaries(grid, gt);
        TargetEncoding {
            t_io: encode_in_out(grid, gt),
            t_s,
            t_e,
            class_label,
        }
    }
}

/// Marks unit `i` when its center lies within `[gt.start, gt.end]`.
pub fn encode_in_out(grid: &UnitGrid, gt: &TemporalSegment) -> Vec<bool> {
    (0..grid.num_units())
        .map(|i| {
            let c = grid.unit_center(i);
            gt.start() <= c && c <= gt.end()
        })
        .collect()
}

/// Marks the units containing the start and end coordinates. A coordinate
/// outside the grid yields an all-zero vector on that side.
pub fn encode_boundaries(grid: &UnitGrid, gt: &TemporalSegment) -> (Vec<bool>, Vec<bool>) {
    let mut t_s = vec![false; grid.num_units()];
    let mut t_e = vec![false; grid.num_units()];
    if let Some(i) = grid.unit_of_time(gt.start()) {
        t_s[i] = true;
    }
    if let Some(i) = grid.unit_of_time(gt.end()) {
        t_e[i] = true;
    }
    (t_s, t_e)
}

/// Casts binary targets to ideal probabilities (1.0 / 0.0); probability
/// consumers clip away from the saturated endpoints themselves.
pub fn to_probabilities(targets: &[bool]) -> Vec<f64> {
    targets.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect()
}

/// Outcome of matching a proposal against the ground-truth instances of a
/// video: either the best-overlap instance (a localization positive) or
/// background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Assignment {
    Positive {
        gt_index: usize,
        class_label: ClassLabel,
        tiou: f64,
    },
    Background,
}

/// Pairs a proposal with the ground truth of maximum tIoU, requiring at
/// least `min_tiou` overlap to count as a positive; below that the proposal
/// contributes to training only as background. Ties keep the earliest
/// instance.
pub fn assign_proposal(
    proposal: &TemporalSegment,
    annotations: &[(TemporalSegment, ClassLabel)],
    min_tiou: f64,
) -> Assignment {
    let mut best: Option<(usize, f64)> = None;
    for (idx, (gt, _)) in annotations.iter().enumerate() {
        let overlap = proposal.tiou(gt);
        if best.is_none_or(|(_, b)| overlap > b) {
            best = Some((idx, overlap));
        }
    }
    match best {
        Some((idx, overlap)) if overlap >= min_tiou => Assignment::Positive {
            gt_index: idx,
            class_label: annotations[idx].1,
            tiou: overlap,
        },
        _ => Assignment::Background,
    }
}

/// Contiguous support `[first, last]` of a binary vector, or `None` when it
/// is all zero. Errors are impossible; gaps simply extend the span.
pub fn support_span(targets: &[bool]) -> Option<(usize, usize)> {
    let first = targets.iter().position(|&t| t)?;
    let last = targets.iter().rposition(|&t| t)?;
    Some((first, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Result;

    fn seg(start: f64, end: f64) -> TemporalSegment {
        TemporalSegment::new(start, end).unwrap()
    }

    fn grid_0_8() -> UnitGrid {
        UnitGrid::new(seg(0.0, 8.0), 4).unwrap()
    }

    #[test]
    fn in_out_marks_units_whose_centers_are_covered() -> Result<()> {
        // Centers sit at 1, 3, 5, 7; only 3 and 5 fall in [2.5, 6.5].
        assert_eq!(
            encode_in_out(&grid_0_8(), &seg(2.5, 6.5)),
            vec![false, true, true, false]
        );
        assert_eq!(
            encode_in_out(&grid_0_8(), &seg(0.0, 8.0)),
            vec![true, true, true, true]
        );
        assert_eq!(
            encode_in_out(&grid_0_8(), &seg(8.5, 9.5)),
            vec![false, false, false, false]
        );
        Ok(())
    }

    #[test]
    fn boundaries_mark_containing_units() {
        let (t_s, t_e) = encode_boundaries(&grid_0_8(), &seg(2.5, 6.5));
        assert_eq!(t_s, vec![false, true, false, false]);
        assert_eq!(t_e, vec![false, false, false, true]);
    }

    #[test]
    fn out_of_grid_boundary_encodes_all_zero() {
        let (t_s, t_e) = encode_boundaries(&grid_0_8(), &seg(-1.0, 3.0));
        assert_eq!(t_s, vec![false; 4]);
        assert_eq!(t_e, vec![false, true, false, false]);

        // The grid end is exclusive, so an end coordinate exactly there
        // falls outside.
        let (t_s, t_e) = encode_boundaries(&grid_0_8(), &seg(0.0, 8.0));
        assert_eq!(t_s, vec![true, false, false, false]);
        assert_eq!(t_e, vec![false; 4]);
    }

    #[test]
    fn assignment_requires_half_overlap() {
        let annotations = vec![
            (seg(0.0, 10.0), ClassLabel::new(1)),
            (seg(50.0, 60.0), ClassLabel::new(2)),
        ];
        match assign_proposal(&seg(49.0, 61.0), &annotations, 0.5) {
            Assignment::Positive {
                gt_index,
                class_label,
                ..
            } => {
                assert_eq!(gt_index, 1);
                assert_eq!(class_label, ClassLabel::new(2));
            }
            other => panic!("expected positive, got {other:?}"),
        }
        assert_eq!(
            assign_proposal(&seg(20.0, 40.0), &annotations, 0.5),
            Assignment::Background
        );
    }

    #[test]
    fn encoding_invariants_hold() {
        let grid = grid_0_8();
        let enc = TargetEncoding::new(&grid, &seg(2.5, 6.5), ClassLabel::new(1));
        assert!(enc.t_s.iter().filter(|&&t| t).count() <= 1);
        assert!(enc.t_e.iter().filter(|&&t| t).count() <= 1);
        let (first, last) = support_span(&enc.t_io).unwrap();
        assert!(enc.t_io[first..=last].iter().all(|&t| t));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_case() -> impl Strategy<Value = (UnitGrid, TemporalSegment)> {
            (
                2usize..64,
                0.0..100.0f64,
                1.0..200.0f64,
                -0.5..1.5f64,
                0.01..2.0f64,
            )
                .prop_map(|(m, start, len, gt_pos, gt_len_frac)| {
                    let interval = seg(start, start + len);
                    let grid = UnitGrid::new(interval, m).unwrap();
                    let gt_start = start + gt_pos * len;
                    let gt_len = (gt_len_frac * len).max(1e-6);
                    (grid, seg(gt_start, gt_start + gt_len))
                })
        }

        proptest! {
            // When both boundaries land inside the grid, the in/out support
            // lies within the boundary units, up to one unit of slack from
            // center- vs edge-containment.
            #[test]
            fn support_lies_within_boundary_units((grid, gt) in arb_case()) {
                let (t_s, t_e) = encode_boundaries(&grid, &gt);
                let (s_idx, e_idx) = match (support_span(&t_s), support_span(&t_e)) {
                    (Some((s, _)), Some((e, _))) => (s, e),
                    _ => return Ok(()),
                };
                prop_assert!(s_idx <= e_idx);
                if let Some((first, last)) = support_span(&encode_in_out(&grid, &gt)) {
                    prop_assert!(first + 1 >= s_idx && first <= e_idx + 1);
                    prop_assert!(last + 1 >= s_idx && last <= e_idx + 1);
                }
            }

            // Enlarging the ground truth never turns an in/out 1 into a 0.
            #[test]
            fn in_out_is_monotone_in_gt((grid, gt) in arb_case(), grow in 0.0..10.0f64) {
                let small = encode_in_out(&grid, &gt);
                let bigger = seg(gt.start() - grow, gt.end() + grow);
                let large = encode_in_out(&grid, &bigger);
                for (a, b) in small.iter().zip(&large) {
                    prop_assert!(!a || *b);
                }
            }

            // Mapping the in/out support back to time recovers the ground
            // truth within one unit width per boundary. Segments shorter
            // than a unit can miss every center and carry no support, so
            // the generator keeps the ground truth at least that long.
            #[test]
            fn support_round_trips_within_one_unit(
                m in 2usize..64,
                start in 0.0..100.0f64,
                len in 1.0..200.0f64,
                a in 0.0..1.0f64,
                b in 0.0..1.0f64,
            ) {
                let grid = UnitGrid::new(seg(start, start + len), m).unwrap();
                let w = grid.unit_width();
                let room = len - 1.1 * w - 1e-6;
                prop_assume!(room > 0.0);
                let gt_start = start + a * room;
                let gt_len = 1.1 * w + b * (len - 1e-6 - (gt_start - start) - 1.1 * w).max(0.0);
                let gt = seg(gt_start, gt_start + gt_len);
                prop_assume!(gt.end() < grid.interval().end());
                let t_io = encode_in_out(&grid, &gt);
                let (first, last) = support_span(&t_io).expect("span covers a center");
                let recovered = grid.time_of_units(first, last).unwrap();
                prop_assert!((recovered.start() - gt.start()).abs() <= w + 1e-9);
                prop_assert!((recovered.end() - gt.end()).abs() <= w + 1e-9);
            }
        }
    }
}
