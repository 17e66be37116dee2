//! Control values and threshold-crossing events extracted from fingertip
//! motion.

use alloc::vec::Vec;

use crate::force::FingertipState;
use crate::scene::{DofKind, DofParams, DofPrimitive, InstanceId, SceneRegistry};

/// A continuous DOF value. The unit follows the kind: bit, mm or mm/s.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DofSample {
    pub id: InstanceId,
    pub kind: DofKind,
    pub value: f64,
}

/// A threshold pass. `speed` is the magnitude of the velocity at the firing
/// tick; the direction is carried by `kind`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DofEvent {
    pub id: InstanceId,
    pub kind: DofKind,
    pub t: f64,
    pub speed: f64,
}

/// Everything the DOF registry produced in one tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DofValues {
    pub samples: Vec<DofSample>,
    pub events: Vec<DofEvent>,
}

/// Number of tick samples an averaging window of `period_ms` holds at tick
/// interval `dt` seconds. Never less than one.
pub fn window_len(period_ms: f64, dt: f64) -> usize {
    // One rounding step before the division keeps exact halves exact.
    let n = libm::round(period_ms / (1000.0 * dt));
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

/// Arithmetic mean; zero for an empty window. Summed relative to the first
/// sample, so a constant window averages to exactly that constant.
pub fn window_mean(window: impl IntoIterator<Item = f64>) -> f64 {
    let mut iter = window.into_iter();
    let Some(first) = iter.next() else {
        return 0.0;
    };
    let mut n = 1usize;
    let mut sum = 0.0;
    for z in iter {
        sum += z - first;
        n += 1;
    }
    first + sum / n as f64
}

/// Mean absolute deviation from the window mean. Both passes run over the
/// same samples.
pub fn window_abs_dev(window: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let mean = window_mean(window.clone());
    window_mean(window.into_iter().map(move |z| libm::fabs(z - mean)))
}

/// Pass-event rule. The threshold belongs to the arrival side: touching it
/// fires, resting on it does not fire again.
pub fn detect_crossing(kind: DofKind, threshold: f64, prev_z: f64, s: &FingertipState) -> bool {
    match kind {
        DofKind::DownwardPass => prev_z > threshold && s.z <= threshold,
        DofKind::UpwardPass => prev_z < threshold && s.z >= threshold,
        _ => false,
    }
}

/// Advances one DOF instance by a tick at state `s`.
///
/// Returns a continuous sample for value kinds and an optional event for
/// pass kinds.
pub fn evaluate(d: &mut DofPrimitive, s: &FingertipState, dt: f64) -> (Option<DofSample>, Option<DofEvent>) {
    let (id, kind) = (d.id, d.kind());
    let sample = |value| Some(DofSample { id, kind, value });
    match d.params {
        DofParams::Inside { range } => (sample(if range.contains(s.z) { 1.0 } else { 0.0 }), None),
        DofParams::RelPosition { base } => (sample(s.z - base), None),
        DofParams::AvgRelPosition { base, period_ms } => {
            push_window(d, s.z, window_len(period_ms, dt));
            let mean = window_mean(d.window.iter().copied());
            (sample(mean - base), None)
        }
        DofParams::AvgAbsDev { period_ms } => {
            push_window(d, s.z, window_len(period_ms, dt));
            (sample(window_abs_dev(d.window.iter().copied())), None)
        }
        DofParams::Speed => {
            let speed = match d.prev_sample {
                Some((t0, z0)) if s.t > t0 => (s.z - z0) / (s.t - t0),
                _ => 0.0,
            };
            d.prev_sample = Some((s.t, s.z));
            (sample(speed), None)
        }
        DofParams::DownwardPass { threshold } | DofParams::UpwardPass { threshold } => {
            let fired = d
                .prev_z
                .is_some_and(|prev| detect_crossing(kind, threshold, prev, s));
            d.prev_z = Some(s.z);
            let event = fired.then_some(DofEvent {
                id,
                kind,
                t: s.t,
                speed: libm::fabs(s.v),
            });
            (None, event)
        }
    }
}

fn push_window(d: &mut DofPrimitive, z: f64, len: usize) {
    d.window.push_back(z);
    while d.window.len() > len {
        d.window.pop_front();
    }
}

/// Evaluates every live DOF instance in ascending id order.
pub fn evaluate_all(registry: &mut SceneRegistry, s: &FingertipState, dt: f64) -> DofValues {
    let mut out = DofValues::default();
    for d in registry.dofs_mut() {
        let (sample, event) = evaluate(d, s, dt);
        out.samples.extend(sample);
        out.events.extend(event);
    }
    out
}
