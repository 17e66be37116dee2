//! Force laws of the haptic primitives and their superposition.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::SceneError;
use crate::scene::{HapticParams, HapticPrimitive, InstanceId, SceneRegistry};

/// Kinematic state of the fingertip for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FingertipState {
    /// Height above the surface (mm).
    pub z: f64,
    /// Velocity (mm/s), positive upward.
    pub v: f64,
    /// Session time (s).
    pub t: f64,
}

impl FingertipState {
    pub fn new(z: f64, v: f64, t: f64) -> Self {
        FingertipState { z, v, t }
    }
}

/// Per-instance contributions and their sum, in newtons.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForceSample {
    /// Ascending id order, zero entries included.
    pub contributions: Vec<(InstanceId, f64)>,
    pub total: f64,
}

impl ForceSample {
    pub fn contribution(&self, id: InstanceId) -> Option<f64> {
        self.contributions.iter().find(|(i, _)| *i == id).map(|(_, f)| *f)
    }
}

/// Instantaneous force of one instance (N). Zero outside the active range.
///
/// A linear ramp with zero size and non-zero force range has no defined
/// gradient and is reported as [`SceneError::DegenerateRange`] wherever the
/// fingertip is.
pub fn primitive_force(p: &HapticPrimitive, s: &FingertipState) -> Result<f64, SceneError> {
    if let HapticParams::LinearRamp { force_range, .. } = p.params {
        if p.range.size() == 0.0 && force_range != 0.0 {
            return Err(SceneError::DegenerateRange { id: p.id });
        }
    }
    if !p.range.contains(s.z) {
        return Ok(0.0);
    }
    let force = match p.params {
        HapticParams::Monoforce { force } => force,
        HapticParams::LinearRamp {
            force_base,
            force_range,
        } => {
            if p.range.size() == 0.0 {
                force_base
            } else {
                force_base + force_range * (s.z - p.range.base()) / p.range.size()
            }
        }
        HapticParams::Dashpot { damping } => -damping * s.v,
        HapticParams::DirectionalDashpot { damping, direction } => {
            if direction.matches(s.v) {
                -damping * s.v
            } else {
                0.0
            }
        }
        HapticParams::ForceWave { amp, .. } => amp * libm::sin(p.phase),
    };
    Ok(force)
}

/// Sums the given instances in iteration order.
pub fn superpose<'a>(
    instances: impl IntoIterator<Item = &'a HapticPrimitive>,
    s: &FingertipState,
) -> Result<ForceSample, SceneError> {
    let mut sample = ForceSample::default();
    for p in instances {
        let f = primitive_force(p, s)?;
        sample.contributions.push((p.id, f));
        sample.total += f;
    }
    Ok(sample)
}

/// Contributions of every live instance, summed in ascending id order.
pub fn total_force(registry: &SceneRegistry, s: &FingertipState) -> Result<ForceSample, SceneError> {
    superpose(registry.haptics(), s)
}

/// Next phase of a wave running at `freq` Hz after `dt` seconds, in `[0, 2π)`.
pub fn advance_phase(phase: f64, freq: f64, dt: f64) -> f64 {
    let next = phase + TAU * freq * dt;
    let wrapped = next - TAU * libm::floor(next / TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Advances every force wave by one tick. Waves run whether or not the
/// fingertip is inside their range.
pub fn advance_phases(registry: &mut SceneRegistry, dt: f64) {
    for p in registry.haptics_mut() {
        if let HapticParams::ForceWave { freq, .. } = p.params {
            p.phase = advance_phase(p.phase, freq, dt);
        }
    }
}
