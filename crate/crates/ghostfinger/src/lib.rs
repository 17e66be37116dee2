//! Runtime for ghostfinger scenes: the fixed-rate session engine, the raw
//! I/O channel, recording and export, and the live WebSocket endpoint.

pub mod demo;
pub mod error;
pub mod export;
pub mod protocol;
pub mod raw;
pub mod recording;
pub mod server;
pub mod session;

pub use error::RunError;
pub use recording::{run, run_with, Recording, RunOptions};
pub use session::{Session, SessionConfig, TickRecord};

/// Re-export of the core crate.
pub use ghostfinger_core as core;
