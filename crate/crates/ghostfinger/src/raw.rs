//! Raw I/O: the low-level path for external controllers.
//!
//! A subscriber sees the fingertip state after every tick and may answer with
//! a force command. The session applies a command on the tick after the
//! sample it answers, through a hidden full-travel monoforce. A command that
//! arrives more than two ticks late is dropped, counted, and replaced by zero
//! force.

use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    pub tick: u64,
    /// s
    pub t: f64,
    /// mm
    pub z: f64,
    /// mm/s
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawCommand {
    /// Tick of the sample this command answers.
    pub tick: u64,
    /// N
    pub force: f64,
}

pub trait RawSubscriber: Send {
    /// Called once per tick, after forces are computed.
    fn on_sample(&mut self, sample: &RawSample) -> Option<RawCommand>;
}

impl<F> RawSubscriber for F
where
    F: FnMut(&RawSample) -> Option<RawCommand> + Send,
{
    fn on_sample(&mut self, sample: &RawSample) -> Option<RawCommand> {
        self(sample)
    }
}

/// Bridges a controller running on another thread. Samples go out on one
/// channel; the newest command waiting on the other is taken each tick.
#[derive(Debug)]
pub struct ChannelSubscriber {
    samples: Sender<RawSample>,
    commands: Receiver<RawCommand>,
}

/// The controller's end of a [`ChannelSubscriber`].
#[derive(Debug)]
pub struct ChannelController {
    pub samples: Receiver<RawSample>,
    pub commands: Sender<RawCommand>,
}

impl ChannelSubscriber {
    pub fn pair() -> (ChannelSubscriber, ChannelController) {
        let (sample_tx, sample_rx) = mpsc::channel();
        let (command_tx, command_rx) = mpsc::channel();
        (
            ChannelSubscriber {
                samples: sample_tx,
                commands: command_rx,
            },
            ChannelController {
                samples: sample_rx,
                commands: command_tx,
            },
        )
    }
}

impl RawSubscriber for ChannelSubscriber {
    fn on_sample(&mut self, sample: &RawSample) -> Option<RawCommand> {
        let _ = self.samples.send(*sample);
        let mut latest = None;
        loop {
            match self.commands.try_recv() {
                Ok(cmd) => latest = Some(cmd),
                Err(TryRecvError::Empty | TryRecvError::Disconnected) => return latest,
            }
        }
    }
}
