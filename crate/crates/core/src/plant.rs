//! Simulated fingertip: follows an intent trajectory either exactly
//! (kinematic) or through a PD-driven point mass that also feels the engine
//! force (dynamic).

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::force::FingertipState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("intent has no waypoints")]
    Empty,
    #[error("waypoint {index}: time must be greater than the previous waypoint's")]
    NonIncreasing { index: usize },
    #[error("intent values must be finite")]
    NotFinite,
    #[error("plant: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Waypoint {
    pub t: f64,
    pub z: f64,
}

/// Target fingertip height over time (mm over s).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IntentTrajectory {
    /// Piecewise linear; holds the end values outside the waypoint span.
    Waypoints(Vec<Waypoint>),
    Constant {
        z: f64,
    },
    /// Linear from `from` at `start` to `to` at `end`, held outside.
    Ramp {
        from: f64,
        to: f64,
        start: f64,
        end: f64,
    },
    /// `center + amplitude·sin(2π·freq·(t − start))`.
    Sine {
        center: f64,
        amplitude: f64,
        freq: f64,
        start: f64,
    },
}

impl IntentTrajectory {
    pub fn waypoints(points: Vec<Waypoint>) -> Result<Self, PlantError> {
        let traj = IntentTrajectory::Waypoints(points);
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            IntentTrajectory::Waypoints(points) => {
                if points.is_empty() {
                    return Err(PlantError::Empty);
                }
                if !points.iter().all(|w| finite(&[w.t, w.z])) {
                    return Err(PlantError::NotFinite);
                }
                if let Some(i) = points.windows(2).position(|w| w[1].t <= w[0].t) {
                    return Err(PlantError::NonIncreasing { index: i + 1 });
                }
            }
            IntentTrajectory::Constant { z } => {
                if !z.is_finite() {
                    return Err(PlantError::NotFinite);
                }
            }
            IntentTrajectory::Ramp { from, to, start, end } => {
                if !finite(&[*from, *to, *start, *end]) {
                    return Err(PlantError::NotFinite);
                }
                if end <= start {
                    return Err(PlantError::NonIncreasing { index: 1 });
                }
            }
            IntentTrajectory::Sine {
                center,
                amplitude,
                freq,
                start,
            } => {
                if !finite(&[*center, *amplitude, *freq, *start]) {
                    return Err(PlantError::NotFinite);
                }
            }
        }
        Ok(())
    }

    /// Target height at time `t`.
    pub fn target(&self, t: f64) -> f64 {
        match self {
            IntentTrajectory::Waypoints(points) => interpolate(points, t),
            IntentTrajectory::Constant { z } => *z,
            IntentTrajectory::Ramp { from, to, start, end } => {
                if t <= *start {
                    *from
                } else if t >= *end {
                    *to
                } else {
                    from + (to - from) * (t - start) / (end - start)
                }
            }
            IntentTrajectory::Sine {
                center,
                amplitude,
                freq,
                start,
            } => center + amplitude * libm::sin(TAU * freq * (t - start)),
        }
    }

    /// Same trajectory, `offset` seconds later.
    pub fn delayed(&self, offset: f64) -> IntentTrajectory {
        match self {
            IntentTrajectory::Waypoints(points) => IntentTrajectory::Waypoints(
                points
                    .iter()
                    .map(|w| Waypoint {
                        t: w.t + offset,
                        z: w.z,
                    })
                    .collect(),
            ),
            IntentTrajectory::Constant { z } => IntentTrajectory::Constant { z: *z },
            IntentTrajectory::Ramp { from, to, start, end } => IntentTrajectory::Ramp {
                from: *from,
                to: *to,
                start: start + offset,
                end: end + offset,
            },
            IntentTrajectory::Sine {
                center,
                amplitude,
                freq,
                start,
            } => IntentTrajectory::Sine {
                center: *center,
                amplitude: *amplitude,
                freq: *freq,
                start: start + offset,
            },
        }
    }
}

fn interpolate(points: &[Waypoint], t: f64) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    if t <= first.t {
        return first.z;
    }
    let last = points[points.len() - 1];
    if t >= last.t {
        return last.z;
    }
    // First waypoint strictly after t; exists because t < last.t.
    let i = points.partition_point(|w| w.t <= t);
    let (a, b) = (points[i - 1], points[i]);
    a.z + (b.z - a.z) * (t - a.t) / (b.t - a.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PlantMode {
    /// The fingertip is exactly at the intent; engine force is ignored.
    #[default]
    Kinematic,
    /// A point mass pulled toward the intent by a PD spring and pushed by
    /// the engine force.
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantConfig {
    pub mode: PlantMode,
    /// N/(mm/s²).
    pub mass: f64,
    /// N/mm.
    pub kp: f64,
    /// N/(mm/s).
    pub kd: f64,
    /// Lower travel stop (mm).
    pub z_min: f64,
    /// Upper travel stop (mm).
    pub z_max: f64,
}

impl Default for PlantConfig {
    /// Critically damped at 1 kHz over a 40 mm workspace.
    fn default() -> Self {
        PlantConfig {
            mode: PlantMode::Kinematic,
            mass: 0.02,
            kp: 0.5,
            kd: 0.2,
            z_min: 0.0,
            z_max: 40.0,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        let all = [self.mass, self.kp, self.kd, self.z_min, self.z_max];
        if !all.iter().all(|x| x.is_finite()) {
            return Err(PlantError::NotFinite);
        }
        if self.z_min >= self.z_max {
            return Err(PlantError::Config("z_min must be below z_max"));
        }
        if self.mode == PlantMode::Dynamic && self.mass <= 0.0 {
            return Err(PlantError::Config("mass must be positive"));
        }
        if self.kp < 0.0 || self.kd < 0.0 {
            return Err(PlantError::Config("gains must be non-negative"));
        }
        Ok(())
    }

    fn clamp(&self, z: f64) -> f64 {
        z.clamp(self.z_min, self.z_max)
    }
}

/// Fingertip exactly on the (clamped) trajectory; velocity is the backward
/// difference over one tick.
pub fn step_kinematic(traj: &IntentTrajectory, t: f64, dt: f64, cfg: &PlantConfig) -> FingertipState {
    let z = cfg.clamp(traj.target(t));
    let z_prev = cfg.clamp(traj.target(t - dt));
    FingertipState::new(z, (z - z_prev) / dt, t)
}

/// One semi-implicit Euler step of the PD-driven mass. `engine_force` is in
/// newtons, positive up.
pub fn step_dynamic(
    state: &FingertipState,
    engine_force: f64,
    traj: &IntentTrajectory,
    t: f64,
    dt: f64,
    cfg: &PlantConfig,
) -> FingertipState {
    let target = traj.target(t);
    let target_v = (target - traj.target(t - dt)) / dt;
    let intent_force = cfg.kp * (target - state.z) + cfg.kd * (target_v - state.v);
    let accel = (engine_force + intent_force) / cfg.mass;
    let mut v = state.v + accel * dt;
    let mut z = state.z + v * dt;
    if z <= cfg.z_min {
        z = cfg.z_min;
        v = v.max(0.0);
    } else if z >= cfg.z_max {
        z = cfg.z_max;
        v = v.min(0.0);
    }
    FingertipState::new(z, v, t)
}

/// The fingertip between ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub cfg: PlantConfig,
    pub state: FingertipState,
}

impl PlantState {
    /// At rest on the trajectory's starting height.
    pub fn new(cfg: PlantConfig, traj: &IntentTrajectory) -> Self {
        let z = cfg.clamp(traj.target(0.0));
        PlantState {
            cfg,
            state: FingertipState::new(z, 0.0, 0.0),
        }
    }

    pub fn step(&mut self, engine_force: f64, traj: &IntentTrajectory, t: f64, dt: f64) -> FingertipState {
        self.state = match self.cfg.mode {
            PlantMode::Kinematic => step_kinematic(traj, t, dt, &self.cfg),
            PlantMode::Dynamic => step_dynamic(&self.state, engine_force, traj, t, dt, &self.cfg),
        };
        self.state
    }
}
