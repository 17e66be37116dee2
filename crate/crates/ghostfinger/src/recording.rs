//! Batch execution of a script into an in-memory recording.

use ghostfinger_core::dof::DofEvent;
use ghostfinger_core::script::Script;
use ghostfinger_core::visual::Frame;

use crate::error::RunError;
use crate::raw::RawSubscriber;
use crate::session::{Session, SessionConfig, TickRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub config: SessionConfig,
    pub records: Vec<TickRecord>,
    pub frames: Vec<Frame>,
}

impl Recording {
    /// All DOF events in firing order.
    pub fn events(&self) -> impl Iterator<Item = &DofEvent> + '_ {
        self.records.iter().flat_map(|r| r.events.iter())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the script's tick rate (Hz).
    pub rate: Option<f64>,
    /// Overrides the frame stream rate (Hz).
    pub stream_rate: Option<f64>,
}

impl RunOptions {
    pub fn config_for(&self, script: &Script) -> SessionConfig {
        let mut cfg = SessionConfig::from_script(script);
        if let Some(rate) = self.rate {
            cfg.rate = rate;
        }
        if let Some(stream) = self.stream_rate {
            cfg.stream_rate = stream;
        }
        cfg
    }
}

/// Validates `script`, then runs it for `round(duration * rate)` ticks.
pub fn run(script: &Script, opts: &RunOptions) -> Result<Recording, RunError> {
    run_with(script, opts, None)
}

/// Like [`run`], with a raw-channel subscriber attached before the first tick.
pub fn run_with(
    script: &Script,
    opts: &RunOptions,
    raw: Option<Box<dyn RawSubscriber>>,
) -> Result<Recording, RunError> {
    let cfg = opts.config_for(script);
    if cfg.duration.is_none() {
        return Err(RunError::Config("batch runs need a `duration`".into()));
    }
    let mut session = Session::from_script(script, cfg.clone())?;
    if let Some(sub) = raw {
        session.attach_raw(sub)?;
    }
    let n = cfg.tick_count().unwrap_or(0) as usize;
    let mut records = Vec::with_capacity(n);
    let mut frames = Vec::new();
    for _ in 0..n {
        let out = session.tick()?;
        records.push(out.record);
        frames.extend(out.frame);
    }
    if session.stale_raw_commands() > 0 {
        log::warn!("dropped {} stale raw commands", session.stale_raw_commands());
    }
    Ok(Recording {
        config: cfg,
        records,
        frames,
    })
}
