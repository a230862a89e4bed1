//! Domain types for temporal segments, class labels, and the unit grid,
//! plus the interval geometry they support: proposal extension, clamping,
//! temporal IoU, and the unit/time mapping.
//!
//! All time coordinates are real-valued signal frames. Units are half-open
//! `[left, right)`: a coordinate exactly on an internal edge belongs to the
//! unit on its right.

use crate::error::{Error, Result};

/// A `(start, end)` interval in continuous signal time.
///
/// Serves as the proposal, the ground-truth span, the search interval, and
/// the refined detection segment. `start < end` always holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalSegment {
    start: f64,
    end: f64,
}

impl TemporalSegment {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() || start >= end {
            return Err(Error::InvalidSegment { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// Extends the segment about its center by `gamma`, producing a search
    /// interval with the same center and `gamma` times the length.
    ///
    /// The result may extend past the signal; clamping is a separate,
    /// explicit step so target encoding and inference see the exact same
    /// geometry.
    pub fn extend_by(&self, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(Error::parameter(
                "gamma",
                format!("extension factor must be >= 1.0, got {gamma}"),
            ));
        }
        let half = 0.5 * gamma * self.length();
        let center = self.center();
        TemporalSegment::new(center - half, center + half)
    }

    /// Intersects the segment with `[min, max]`.
    ///
    /// Errors when the segment lies entirely outside the bounds.
    pub fn clamp_to(&self, min: f64, max: f64) -> Result<Self> {
        TemporalSegment::new(self.start.max(min), self.end.min(max))
    }

    /// Temporal intersection-over-union with another segment, in `[0, 1]`.
    /// Touching segments are disjoint (tIoU 0).
    pub fn tiou(&self, other: &TemporalSegment) -> f64 {
        let inter = (self.end.min(other.end) - self.start.max(other.start)).max(0.0);
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.length() + other.length() - inter;
        inter / union
    }

    pub fn overlaps(&self, other: &TemporalSegment) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Category index: 0 is background, `1..=C` are event classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassLabel(usize);

impl ClassLabel {
    pub const BACKGROUND: ClassLabel = ClassLabel(0);

    pub fn new(index: usize) -> Self {
        ClassLabel(index)
    }

    pub fn index(&self) -> usize {
        self.0
    }

    pub fn is_background(&self) -> bool {
        self.0 == 0
    }
}

/// A search interval equally divided into `m` half-open units.
///
/// The units exactly tile the interval: unit `i` spans
/// `[start + i*w, start + (i+1)*w)` with `w = length / m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitGrid {
    interval: TemporalSegment,
    m: usize,
}

impl UnitGrid {
    pub fn new(interval: TemporalSegment, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::parameter(
                "m",
                format!("a grid needs at least 2 units, got {m}"),
            ));
        }
        Ok(Self { interval, m })
    }

    pub fn interval(&self) -> &TemporalSegment {
        &self.interval
    }

    pub fn num_units(&self) -> usize {
        self.m
    }

    pub fn unit_width(&self) -> f64 {
        self.interval.length() / self.m as f64
    }

    pub fn left_edge(&self, unit: usize) -> f64 {
        self.interval.start() + unit as f64 * self.unit_width()
    }

    pub fn right_edge(&self, unit: usize) -> f64 {
        self.interval.start() + (unit + 1) as f64 * self.unit_width()
    }

    pub fn unit_center(&self, unit: usize) -> f64 {
        self.interval.start() + (unit as f64 + 0.5) * self.unit_width()
    }

    /// Index of the unit whose half-open span contains `t`, or `None` when
    /// `t` falls outside the interval (the end coordinate is exclusive).
    pub fn unit_of_time(&self, t: f64) -> Option<usize> {
        if t < self.interval.start() || t >= self.interval.end() {
            return None;
        }
        let idx = ((t - self.interval.start()) / self.unit_width()) as usize;
        // Floating-point roundoff on the last unit's interior can land on m.
        Some(idx.min(self.m - 1))
    }

    /// Continuous segment spanned by units `start_unit..=end_unit`: the left
    /// edge of the first through the right edge of the last.
    pub fn time_of_units(&self, start_unit: usize, end_unit: usize) -> Result<TemporalSegment> {
        if start_unit > end_unit || end_unit >= self.m {
            return Err(Error::InvalidUnitRange {
                start_unit,
                end_unit,
                num_units: self.m,
            });
        }
        TemporalSegment::new(self.left_edge(start_unit), self.right_edge(end_unit))
    }
}

/// Builds the unit grid a proposal is refined on: extend by `gamma` about
/// the center, clamp to `[0, signal_len]`, divide into `m` units. Training
/// and detection share this exact composition.
pub fn search_grid(
    proposal: &TemporalSegment,
    gamma: f64,
    m: usize,
    signal_len: f64,
) -> Result<UnitGrid> {
    let interval = proposal.extend_by(gamma)?.clamp_to(0.0, signal_len)?;
    UnitGrid::new(interval, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(start: f64, end: f64) -> TemporalSegment {
        TemporalSegment::new(start, end).unwrap()
    }

    #[test]
    fn segment_rejects_degenerate_intervals() {
        assert!(TemporalSegment::new(3.0, 3.0).is_err());
        assert!(TemporalSegment::new(5.0, 2.0).is_err());
        assert!(TemporalSegment::new(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn extend_doubles_length_around_center() {
        let out = seg(10.0, 20.0).extend_by(2.0).unwrap();
        assert_eq!(out, seg(5.0, 25.0));
        assert_eq!(out.center(), 15.0);
    }

    #[test]
    fn extend_with_unit_factor_is_identity() {
        let p = seg(10.0, 20.0);
        assert_eq!(p.extend_by(1.0).unwrap(), p);
    }

    #[test]
    fn extend_may_go_negative_before_clamping() {
        let out = seg(0.0, 8.0).extend_by(1.5).unwrap();
        assert!((out.start() - -2.0).abs() < 1e-12);
        assert!((out.end() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn extend_rejects_shrink_factors() {
        assert!(seg(0.0, 8.0).extend_by(0.9).is_err());
    }

    #[test]
    fn clamp_is_a_separate_operation() {
        let extended = seg(0.0, 8.0).extend_by(1.5).unwrap();
        let clamped = extended.clamp_to(0.0, 100.0).unwrap();
        assert_eq!(clamped, seg(0.0, 10.0));
        assert!(seg(-5.0, -1.0).clamp_to(0.0, 100.0).is_err());
    }

    #[test]
    fn tiou_matches_hand_values() {
        assert!((seg(0.0, 10.0).tiou(&seg(5.0, 15.0)) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(seg(0.0, 10.0).tiou(&seg(0.0, 10.0)), 1.0);
        assert_eq!(seg(0.0, 5.0).tiou(&seg(5.0, 10.0)), 0.0);
    }

    #[test]
    fn unit_of_time_uses_half_open_units() {
        let grid = UnitGrid::new(seg(0.0, 8.0), 4).unwrap();
        assert_eq!(grid.unit_of_time(2.5), Some(1));
        assert_eq!(grid.unit_of_time(2.0), Some(1));
        assert_eq!(grid.unit_of_time(8.0), None);
        assert_eq!(grid.unit_of_time(-0.1), None);
        assert_eq!(grid.unit_of_time(0.0), Some(0));
    }

    #[test]
    fn time_of_units_returns_unit_edges() {
        let grid = UnitGrid::new(seg(0.0, 8.0), 4).unwrap();
        assert_eq!(grid.time_of_units(1, 2).unwrap(), seg(2.0, 6.0));
        assert_eq!(grid.time_of_units(0, 3).unwrap(), seg(0.0, 8.0));

        let fine = UnitGrid::new(seg(5.0, 25.0), 32).unwrap();
        let single = fine.time_of_units(0, 0).unwrap();
        assert!((single.start() - 5.0).abs() < 1e-12);
        assert!((single.end() - 5.625).abs() < 1e-12);
    }

    #[test]
    fn time_of_units_rejects_bad_ranges() {
        let grid = UnitGrid::new(seg(0.0, 8.0), 4).unwrap();
        assert!(grid.time_of_units(2, 1).is_err());
        assert!(grid.time_of_units(0, 4).is_err());
    }

    #[test]
    fn grid_requires_two_units() {
        assert!(UnitGrid::new(seg(0.0, 8.0), 1).is_err());
        assert!(UnitGrid::new(seg(0.0, 8.0), 2).is_ok());
    }

    #[test]
    fn search_grid_extends_then_clamps() {
        let grid = search_grid(&seg(10.0, 20.0), 2.0, 4, 100.0).unwrap();
        assert_eq!(*grid.interval(), seg(5.0, 25.0));

        // Near the signal edge the extension is cut at zero.
        let grid = search_grid(&seg(2.0, 10.0), 2.0, 4, 100.0).unwrap();
        assert_eq!(*grid.interval(), seg(0.0, 14.0));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_segment() -> impl Strategy<Value = TemporalSegment> {
            (0.0..1000.0f64, 1e-3..500.0f64).prop_map(|(s, len)| seg(s, s + len))
        }

        proptest! {
            #[test]
            fn units_partition_the_interval(s in arb_segment(), m in 2usize..128) {
                let grid = UnitGrid::new(s, m).unwrap();
                let total: f64 = (0..m).map(|i| grid.right_edge(i) - grid.left_edge(i)).sum();
                prop_assert!((total - s.length()).abs() <= 1e-9 * s.length());
                for i in 1..m {
                    prop_assert!((grid.right_edge(i - 1) - grid.left_edge(i)).abs() < 1e-9);
                }
            }

            #[test]
            fn unit_of_time_round_trips(s in arb_segment(), m in 2usize..128, frac in 0.0..1.0f64) {
                let grid = UnitGrid::new(s, m).unwrap();
                let t = s.start() + frac * s.length() * 0.999;
                let unit = grid.unit_of_time(t).unwrap();
                prop_assert!(grid.left_edge(unit) <= t + 1e-9);
                prop_assert!(t < grid.left_edge(unit) + grid.unit_width() + 1e-9);
            }

            #[test]
            fn extension_composes_multiplicatively(s in arb_segment(), a in 1.0..3.0f64, b in 1.0..3.0f64) {
                let two_step = s.extend_by(a).unwrap().extend_by(b).unwrap();
                let one_step = s.extend_by(a * b).unwrap();
                prop_assert!((two_step.start() - one_step.start()).abs() < 1e-9);
                prop_assert!((two_step.end() - one_step.end()).abs() < 1e-9);
            }

            #[test]
            fn tiou_is_symmetric_and_bounded(a in arb_segment(), b in arb_segment()) {
                let ab = a.tiou(&b);
                prop_assert!((ab - b.tiou(&a)).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&ab));
                prop_assert_eq!(a.tiou(&a), 1.0);
            }
        }
    }
}
