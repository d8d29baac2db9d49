//! Operating-speed arithmetic: frame loading time set by the inhomogeneous
//! broadening, device-vs-digital throughput, and the overlapped segmentation
//! of a long database into coherence-window sized clips.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Speedups above this count as "more than two orders of magnitude".
pub const TWO_ORDERS: f64 = 100.0;

/// Minimum per-frame loading time for an atomic medium whose inhomogeneous
/// broadening spans `ihb_bandwidth` rad/s: `1 / bandwidth`.
pub fn frame_load_time(ihb_bandwidth: f64) -> Result<f64> {
    if !(ihb_bandwidth > 0.0) || !ihb_bandwidth.is_finite() {
        return Err(Error::Parameter(format!(
            "bandwidth must be positive and finite, got {ihb_bandwidth}"
        )));
    }
    Ok(1.0 / ihb_bandwidth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    /// Per-frame time at the device rate.
    pub frame_load_time: f64,
    pub device_fps: f64,
    pub digital_fps: f64,
    pub speedup: f64,
    pub exceeds_two_orders: bool,
}

pub fn throughput_report(device_fps: f64, digital_fps: f64) -> Result<ThroughputReport> {
    for (name, v) in [("device_fps", device_fps), ("digital_fps", digital_fps)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
        }
    }
    let speedup = device_fps / digital_fps;
    Ok(ThroughputReport {
        frame_load_time: 1.0 / device_fps,
        device_fps,
        digital_fps,
        speedup,
        exceeds_two_orders: speedup > TWO_ORDERS,
    })
}

/// Overlapping segments of length `t2` covering a database of length `t3`
/// so that any query window of length `t1` lies entirely inside a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationPlan {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub segment_starts: Vec<f64>,
    pub count: usize,
}

impl SegmentationPlan {
    /// True when `[q, q + t1]` lies inside some segment (with a relative
    /// slack of 1e-12 of `t3` for rounding).
    pub fn covers_window(&self, q: f64) -> bool {
        let eps = 1e-12 * self.t3.max(1.0);
        self.segment_starts
            .iter()
            .any(|&s| s <= q + eps && q + self.t1 <= s + self.t2 + eps)
    }
}

/// Segments start at `0, (t2 - t1), 2 (t2 - t1), ...` with the last one
/// clamped to `t3 - t2`. Consecutive segments overlap by at least `t1`.
pub fn segmentation_plan(t1: f64, t2: f64, t3: f64) -> Result<SegmentationPlan> {
    for (name, v) in [("t1", t1), ("t2", t2), ("t3", t3)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
        }
    }
    if t1 >= t2 {
        return Err(Error::InfeasibleOverlap { t1, t2 });
    }
    if t2 > t3 {
        return Err(Error::Parameter(format!(
            "segment duration t2 = {t2} exceeds database duration t3 = {t3}"
        )));
    }
    let step = t2 - t1;
    let count = if t2 >= t3 {
        1
    } else {
        // absorb rounding when the ratio is an exact integer
        let ratio = (t3 - t2) / step;
        1 + (ratio - 1e-12 * ratio.max(1.0)).ceil() as usize
    };
    let last = t3 - t2;
    let segment_starts = (0..count)
        .map(|i| if i + 1 == count { last } else { (i as f64 * step).min(last) })
        .collect();
    Ok(SegmentationPlan {
        t1,
        t2,
        t3,
        segment_starts,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_megahertz_gives_about_1_6_ns() {
        let t = frame_load_time(6.28e8).unwrap();
        assert!((t - 1.592e-9).abs() < 1e-12);
        assert_eq!(frame_load_time(1.0).unwrap(), 1.0);
        assert_eq!(frame_load_time(2.0e8).unwrap() * 2.0, frame_load_time(1.0e8).unwrap());
        assert!(frame_load_time(0.0).is_err());
        assert!(frame_load_time(-1.0).is_err());
    }

    #[test]
    fn throughput_examples() {
        let r = throughput_report(125_000.0, 400.0).unwrap();
        assert_eq!(r.speedup, 312.5);
        assert!(r.exceeds_two_orders);
        let r = throughput_report(1666.0, 400.0).unwrap();
        assert!((r.speedup - 4.165).abs() < 1e-12);
        assert!(!r.exceeds_two_orders);
        let r = throughput_report(400.0, 400.0).unwrap();
        assert_eq!(r.speedup, 1.0);
        assert!(!r.exceeds_two_orders);
    }

    #[test]
    fn single_segment() {
        let p = segmentation_plan(1.0, 10.0, 10.0).unwrap();
        assert_eq!(p.count, 1);
        assert_eq!(p.segment_starts, vec![0.0]);
    }

    #[test]
    fn eleven_segments() {
        let p = segmentation_plan(1.0, 10.0, 100.0).unwrap();
        assert_eq!(p.count, 11);
        assert_eq!(*p.segment_starts.last().unwrap(), 90.0);
    }

    #[test]
    fn clamped_final_segment() {
        let p = segmentation_plan(2.0, 5.0, 12.0).unwrap();
        assert_eq!(p.count, 4);
        assert_eq!(p.segment_starts, vec![0.0, 3.0, 6.0, 7.0]);
    }

    #[test]
    fn infeasible_overlap() {
        assert!(matches!(
            segmentation_plan(5.0, 5.0, 12.0),
            Err(Error::InfeasibleOverlap { .. })
        ));
        assert!(segmentation_plan(1.0, 13.0, 12.0).is_err());
    }
}
