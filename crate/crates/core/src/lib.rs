//! Hardware-free scene engine for computed fingertip touch along a single
//! up/down axis.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. It hosts:
//!
//! - [`scene`]: registries of haptic and DOF primitive instances, their
//!   parameter schemas and lifecycle,
//! - [`force`]: per-instance force laws and their superposition,
//! - [`dof`]: control values and threshold-crossing events extracted from
//!   fingertip motion,
//! - [`visual`]: the renderable scene (cursor, blended block segments, sign grid),
//! - [`plant`]: a simulated fingertip driven by an intent trajectory,
//! - [`script`]: the timed `.gfs` scene-script language.
//!
//! Units are fixed throughout: millimeters, seconds, newtons. `+z` points up,
//! away from the surface; positive force pushes the fingertip up.

#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dof;
pub mod error;
pub mod force;
pub mod plant;
pub mod scene;
pub mod script;
pub mod visual;

pub use dof::{DofEvent, DofSample, DofValues};
pub use error::{ParamIssue, SceneError};
pub use force::{FingertipState, ForceSample};
pub use plant::{IntentTrajectory, PlantConfig, PlantMode, PlantState, Waypoint};
pub use scene::{
    Direction, DofKind, DofParams, DofPrimitive, HapticKind, HapticParams, HapticPrimitive, InstanceId,
    ParamKey, PrimitiveKind, SceneRegistry, ZRange, INSTANCE_CAP,
};
pub use script::{Command, Diagnostic, DiagnosticKind, NamedScene, Script, TimedCommand};
pub use visual::{BlockSegment, Frame, Rgba, SignEntry, VisualConfig};
