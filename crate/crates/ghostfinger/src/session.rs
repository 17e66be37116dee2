//! The fixed-rate session engine.
//!
//! Every tick runs the same pipeline, in this order:
//!
//! 1. apply live commands and script commands that are due,
//! 2. step the plant (dynamic mode feels the previous tick's total force),
//! 3. sample DOFs and detect threshold passes,
//! 4. compute forces, then advance force-wave phases,
//! 5. record,
//! 6. emit a frame every `rate / stream_rate` ticks.

use std::collections::VecDeque;

use ghostfinger_core::dof::{self, DofEvent, DofSample};
use ghostfinger_core::force::{self, FingertipState};
use ghostfinger_core::plant::{IntentTrajectory, PlantConfig, PlantState};
use ghostfinger_core::scene::{HapticParams, InstanceId, ZRange};
use ghostfinger_core::script::{self, ApplyError, Command, Diagnostic, Handle, NamedScene, Script};
use ghostfinger_core::visual::{self, Frame, VisualConfig};
use ghostfinger_core::SceneError;

use crate::error::RunError;
use crate::raw::{RawCommand, RawSample, RawSubscriber};

/// Frame stream rate when none is configured (Hz).
pub const DEFAULT_STREAM_RATE: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// Tick rate (Hz).
    pub rate: f64,
    /// Session length (s); `None` runs until stopped.
    pub duration: Option<f64>,
    pub plant: PlantConfig,
    /// Frame emission rate (Hz), at most `rate`.
    pub stream_rate: f64,
    pub visual: VisualConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            rate: script::DEFAULT_RATE,
            duration: None,
            plant: PlantConfig::default(),
            stream_rate: DEFAULT_STREAM_RATE,
            visual: VisualConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn from_script(script: &Script) -> Self {
        SessionConfig {
            rate: script.tick_rate(),
            duration: script.duration,
            plant: script.plant_config(),
            ..SessionConfig::default()
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate
    }

    /// Ticks between emitted frames.
    pub fn decimation(&self) -> u64 {
        let n = (self.rate / self.stream_rate).round();
        if n < 1.0 {
            1
        } else {
            n as u64
        }
    }

    /// Number of ticks in a bounded session.
    pub fn tick_count(&self) -> Option<u64> {
        self.duration.map(|d| (d * self.rate).round() as u64)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(RunError::Config(format!(
                "tick rate must be positive, got {}",
                self.rate
            )));
        }
        if !(self.stream_rate > 0.0 && self.stream_rate <= self.rate) {
            return Err(RunError::Config(format!(
                "stream rate must be in (0, {}], got {}",
                self.rate, self.stream_rate
            )));
        }
        self.plant.validate().map_err(|e| RunError::Config(e.to_string()))
    }
}

/// State and outputs of one tick, in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    /// s
    pub t: f64,
    /// mm
    pub z: f64,
    /// mm/s
    pub v: f64,
    /// N
    pub force: f64,
    /// Per-instance forces (N), ascending id.
    pub forces: Vec<(InstanceId, f64)>,
    pub dofs: Vec<DofSample>,
    pub events: Vec<DofEvent>,
}

/// A command arriving from outside the tick thread.
#[derive(Debug, Clone, PartialEq)]
pub enum LiveCommand {
    /// Replace the intent with a hold at this height (mm).
    SetIntent(f64),
    Scene(Command),
    /// Schedule a script's commands relative to the current session time.
    LoadScript(String),
}

/// Outcome of a live command, addressed to whoever sent it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub client: Option<u64>,
    pub outcome: Result<Ack, LiveError>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ack {
    Intent(f64),
    Spawned { name: String, id: InstanceId },
    Updated { name: String },
    Killed { name: String },
    ScriptLoaded { commands: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LiveError {
    #[error(transparent)]
    Apply(#[from] ApplyError),
    #[error("intent must be finite")]
    BadIntent,
    #[error("script rejected with {} diagnostic(s)", .0.len())]
    Script(Vec<Diagnostic>),
}

impl LiveError {
    pub fn code(&self) -> &'static str {
        match self {
            LiveError::Apply(e) => e.code(),
            LiveError::BadIntent => "BadIntent",
            LiveError::Script(_) => "ScriptRejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub record: TickRecord,
    pub frame: Option<Frame>,
    pub replies: Vec<Reply>,
}

#[derive(Debug, Clone)]
struct Scheduled {
    tick: u64,
    command: Command,
}

/// First tick at or after `t`, tolerating rounding noise of a millionth of
/// a tick.
fn due_tick(t: f64, rate: f64) -> u64 {
    (t * rate - 1e-6).ceil().max(0.0) as u64
}

struct RawLink {
    subscriber: Box<dyn RawSubscriber>,
    instance: InstanceId,
    pending: Option<RawCommand>,
}

/// Hook receiving every DOF event as it happens, e.g. for outbound control
/// protocols.
pub type EventHook = Box<dyn FnMut(&DofEvent) + Send>;

/// Sensor noise: maps the plant's true state to the sensed state that DOFs,
/// forces and the recorder see. The plant itself keeps the true state.
pub type NoiseHook = Box<dyn FnMut(FingertipState) -> FingertipState + Send>;

/// Owns the whole simulation state. Single-threaded: other threads talk to
/// it only through [`Session::push_live`].
pub struct Session {
    cfg: SessionConfig,
    scene: NamedScene,
    plant: PlantState,
    intent: IntentTrajectory,
    schedule: VecDeque<Scheduled>,
    live: VecDeque<(Option<u64>, LiveCommand)>,
    tick: u64,
    prev_force: f64,
    raw: Option<RawLink>,
    stale_raw: u64,
    hooks: Vec<EventHook>,
    noise: Option<NoiseHook>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("tick", &self.tick)
            .field("haptics", &self.scene.registry.haptic_count())
            .field("dofs", &self.scene.registry.dof_count())
            .finish_non_exhaustive()
    }
}

impl Session {
    pub fn new(cfg: SessionConfig, intent: IntentTrajectory) -> Result<Self, RunError> {
        cfg.validate()?;
        let plant = PlantState::new(cfg.plant, &intent);
        Ok(Session {
            cfg,
            scene: NamedScene::new(),
            plant,
            intent,
            schedule: VecDeque::new(),
            live: VecDeque::new(),
            tick: 0,
            prev_force: 0.0,
            raw: None,
            stale_raw: 0,
            hooks: Vec::new(),
            noise: None,
        })
    }

    /// Validates the script and schedules its commands.
    pub fn from_script(script: &Script, cfg: SessionConfig) -> Result<Self, RunError> {
        let diags = script::validate(script);
        if !diags.is_empty() {
            return Err(RunError::Diagnostics(diags));
        }
        let mut session = Session::new(cfg, script.trajectory())?;
        session.schedule_script(script, 0);
        Ok(session)
    }

    fn schedule_script(&mut self, script: &Script, offset: u64) -> usize {
        let rate = self.cfg.rate;
        let mut all: Vec<Scheduled> = self.schedule.drain(..).collect();
        all.extend(script.commands.iter().map(|c| Scheduled {
            tick: offset + due_tick(c.t, rate),
            command: c.command.clone(),
        }));
        // Stable: equal ticks keep file order.
        all.sort_by_key(|c| c.tick);
        self.schedule = all.into();
        script.commands.len()
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn scene(&self) -> &NamedScene {
        &self.scene
    }

    /// The fingertip state of the last completed tick.
    pub fn state(&self) -> FingertipState {
        self.plant.state
    }

    /// Index of the next tick.
    pub fn tick_index(&self) -> u64 {
        self.tick
    }

    /// Time of the next tick (s).
    pub fn now(&self) -> f64 {
        self.tick as f64 / self.cfg.rate
    }

    pub fn is_finished(&self) -> bool {
        self.cfg.tick_count().is_some_and(|n| self.tick >= n)
    }

    /// Queues a command for step 1 of the next tick.
    pub fn push_live(&mut self, client: Option<u64>, command: LiveCommand) {
        self.live.push_back((client, command));
    }

    pub fn add_event_hook(&mut self, hook: EventHook) {
        self.hooks.push(hook);
    }

    /// Installs a sensor noise model. Off by default.
    pub fn set_noise(&mut self, noise: Option<NoiseHook>) {
        self.noise = noise;
    }

    /// Attaches the raw I/O wrapper: a hidden full-travel monoforce whose
    /// level the subscriber rewrites every tick. Commands answer the sample
    /// of one tick and take effect on the next.
    pub fn attach_raw(&mut self, subscriber: Box<dyn RawSubscriber>) -> Result<InstanceId, SceneError> {
        self.detach_raw();
        let travel = ZRange::new(self.cfg.plant.z_min, self.cfg.plant.z_max - self.cfg.plant.z_min)?;
        let now = self.now();
        let instance =
            self.scene
                .registry
                .spawn_hidden_haptic(travel, HapticParams::Monoforce { force: 0.0 }, now)?;
        self.raw = Some(RawLink {
            subscriber,
            instance,
            pending: None,
        });
        Ok(instance)
    }

    pub fn detach_raw(&mut self) {
        if let Some(link) = self.raw.take() {
            let _ = self.scene.registry.kill_primitive(link.instance);
        }
    }

    /// Raw commands dropped for arriving more than two ticks late.
    pub fn stale_raw_commands(&self) -> u64 {
        self.stale_raw
    }

    fn apply_live(&mut self, client: Option<u64>, command: LiveCommand, t: f64) -> Reply {
        let outcome = match command {
            LiveCommand::SetIntent(z) if z.is_finite() => {
                self.intent = IntentTrajectory::Constant { z };
                Ok(Ack::Intent(z))
            }
            LiveCommand::SetIntent(_) => Err(LiveError::BadIntent),
            LiveCommand::Scene(command) => self.apply_command(&command, t).map_err(LiveError::from),
            LiveCommand::LoadScript(text) => match script::check(&text) {
                Ok(script) => {
                    if let Some(intent) = &script.intent {
                        self.intent = intent.delayed(t);
                    }
                    let n = self.schedule_script(&script, self.tick);
                    Ok(Ack::ScriptLoaded { commands: n })
                }
                Err(diags) => Err(LiveError::Script(diags)),
            },
        };
        Reply { client, outcome }
    }

    fn apply_command(&mut self, command: &Command, t: f64) -> Result<Ack, ApplyError> {
        let handle = self.scene.apply(command, t, self.plant.state.z)?;
        let name = command.name().to_string();
        Ok(match command {
            Command::Spawn { .. } => Ack::Spawned {
                name,
                id: handle.id(),
            },
            Command::Set { .. } => Ack::Updated { name },
            Command::Kill { .. } => Ack::Killed { name },
        })
    }

    /// Runs one tick of the pipeline.
    pub fn tick(&mut self) -> Result<TickOutput, RunError> {
        let k = self.tick;
        let t = k as f64 / self.cfg.rate;
        let dt = self.cfg.dt();

        // 1. commands
        let mut replies = Vec::new();
        while let Some((client, command)) = self.live.pop_front() {
            replies.push(self.apply_live(client, command, t));
        }
        while self.schedule.front().is_some_and(|c| c.tick <= k) {
            let c = self.schedule.pop_front().expect("front checked");
            // Validated scripts never fail here; live-loaded ones were
            // checked in isolation and may collide with the live scene.
            if let Err(err) = self.apply_command(&c.command, t) {
                replies.push(Reply {
                    client: None,
                    outcome: Err(err.into()),
                });
            }
        }

        // 2. plant
        let mut state = self.plant.step(self.prev_force, &self.intent, t, dt);
        if let Some(noise) = &mut self.noise {
            state = noise(state);
        }

        // 3. DOFs
        let dofs = dof::evaluate_all(&mut self.scene.registry, &state, dt);
        for event in &dofs.events {
            for hook in &mut self.hooks {
                hook(event);
            }
        }

        // 4. forces
        if let Some(link) = &mut self.raw {
            if let Some(cmd) = link.pending.take() {
                let level = if k.saturating_sub(cmd.tick) > 2 {
                    self.stale_raw += 1;
                    0.0
                } else {
                    cmd.force
                };
                self.scene.registry.set_monoforce(link.instance, level)?;
            }
        }
        let forces = force::total_force(&self.scene.registry, &state).map_err(|e| match e {
            SceneError::DegenerateRange { id } => RunError::Degenerate { id, t },
            other => RunError::Scene(other),
        })?;
        force::advance_phases(&mut self.scene.registry, dt);
        self.prev_force = forces.total;
        if let Some(link) = &mut self.raw {
            let sample = RawSample {
                tick: k,
                t,
                z: state.z,
                v: state.v,
            };
            if let Some(cmd) = link.subscriber.on_sample(&sample) {
                link.pending = Some(cmd);
            }
        }

        // 6. frame (built before the record takes ownership of the forces)
        let frame = k
            .is_multiple_of(self.cfg.decimation())
            .then(|| visual::make_frame(&self.scene.registry, &state, &forces, &self.cfg.visual));

        // 5. record
        let record = TickRecord {
            t,
            z: state.z,
            v: state.v,
            force: forces.total,
            forces: forces.contributions,
            dofs: dofs.samples,
            events: dofs.events,
        };

        self.tick += 1;
        Ok(TickOutput {
            record,
            frame,
            replies,
        })
    }

    /// Handle of a live named instance.
    pub fn handle(&self, name: &str) -> Option<Handle> {
        self.scene.handle(name)
    }
}
