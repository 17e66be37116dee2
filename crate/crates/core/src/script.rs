//! The `.gfs` scene-script language.
//!
//! Line oriented; `#` starts a comment. Directives:
//!
//! ```text
//! rate 1000
//! duration 2.0
//! plant kinematic|dynamic [mass=.. kp=.. kd=.. z_min=.. z_max=..]
//! intent 0:36 0.4:36 1.9:6
//! intent constant z=10
//! intent ramp from=30 to=5 start=0 end=1
//! intent sine center=20 amplitude=5 freq=1 [start=0]
//! at 0.0 spawn w1 force_wave base=18 size=12 freq=40 amp=0.2
//! at 1.0 set w1 amp=0.1
//! at 1.5 kill w1
//! ```
//!
//! Units: mm, s, N, Hz, ms (`period`), N/(mm/s) (`damping`).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::SceneError;
use crate::plant::{IntentTrajectory, PlantConfig, PlantMode, Waypoint};
use crate::scene::{DofParams, HapticParams, InstanceId, ParamKey, PrimitiveKind, SceneRegistry};

/// Default tick rate (Hz) when the script has no `rate` line.
pub const DEFAULT_RATE: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticKind {
    Syntax,
    UnknownKind,
    UnknownKey,
    DuplicateKey,
    DuplicateHeader,
    MissingDuration,
    InvalidHeader,
    InvalidTime,
    NonMonotoneTime,
    AfterDuration,
    UnknownName,
    DuplicateName,
    InvalidParam,
    CapacityExceeded,
}

impl DiagnosticKind {
    pub fn name(self) -> &'static str {
        match self {
            DiagnosticKind::Syntax => "SyntaxError",
            DiagnosticKind::UnknownKind => "UnknownKind",
            DiagnosticKind::UnknownKey => "UnknownKey",
            DiagnosticKind::DuplicateKey => "DuplicateKey",
            DiagnosticKind::DuplicateHeader => "DuplicateHeader",
            DiagnosticKind::MissingDuration => "MissingDuration",
            DiagnosticKind::InvalidHeader => "InvalidHeader",
            DiagnosticKind::InvalidTime => "InvalidTime",
            DiagnosticKind::NonMonotoneTime => "NonMonotoneTime",
            DiagnosticKind::AfterDuration => "AfterDuration",
            DiagnosticKind::UnknownName => "UnknownName",
            DiagnosticKind::DuplicateName => "DuplicateName",
            DiagnosticKind::InvalidParam => "InvalidParam",
            DiagnosticKind::CapacityExceeded => "CapacityExceeded",
        }
    }

    pub fn from_name(name: &str) -> Option<DiagnosticKind> {
        use DiagnosticKind::*;
        [
            Syntax,
            UnknownKind,
            UnknownKey,
            DuplicateKey,
            DuplicateHeader,
            MissingDuration,
            InvalidHeader,
            InvalidTime,
            NonMonotoneTime,
            AfterDuration,
            UnknownName,
            DuplicateName,
            InvalidParam,
            CapacityExceeded,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

/// A located problem. Lines and columns are 1-based; columns count chars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line,
            self.col,
            self.kind.name(),
            self.message
        )
    }
}

/// Source positions. Compares equal to any other span so that a printed and
/// re-parsed script equals the original.
#[derive(Debug, Clone, Default, Eq)]
pub struct Span {
    pub line: usize,
    pub time_col: usize,
    pub name_col: usize,
    pub param_cols: Vec<usize>,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Spawn {
        name: String,
        kind: PrimitiveKind,
        params: Vec<(ParamKey, f64)>,
    },
    Set {
        name: String,
        params: Vec<(ParamKey, f64)>,
    },
    Kill {
        name: String,
    },
}

impl Command {
    pub fn name(&self) -> &str {
        match self {
            Command::Spawn { name, .. } | Command::Set { name, .. } | Command::Kill { name } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedCommand {
    pub t: f64,
    pub command: Command,
    pub span: Span,
}

/// Line numbers of the header directives.
#[derive(Debug, Clone, Default, Eq)]
pub struct HeaderLines {
    pub rate: Option<usize>,
    pub duration: Option<usize>,
    pub plant: Option<usize>,
    pub intent: Option<usize>,
}

impl PartialEq for HeaderLines {
    fn eq(&self, _: &HeaderLines) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub rate: Option<f64>,
    pub duration: Option<f64>,
    pub plant: Option<PlantConfig>,
    pub intent: Option<IntentTrajectory>,
    /// File order.
    pub commands: Vec<TimedCommand>,
    pub header_lines: HeaderLines,
}

impl Script {
    pub fn tick_rate(&self) -> f64 {
        self.rate.unwrap_or(DEFAULT_RATE)
    }

    pub fn plant_config(&self) -> PlantConfig {
        self.plant.unwrap_or_default()
    }

    /// The intent, or a hold at the top of travel when none is given.
    pub fn trajectory(&self) -> IntentTrajectory {
        self.intent.clone().unwrap_or(IntentTrajectory::Constant {
            z: self.plant_config().z_max,
        })
    }

    /// Commands with `t0 < t <= t1`, in file order.
    pub fn commands_between(&self, t0: f64, t1: f64) -> impl Iterator<Item = &TimedCommand> + '_ {
        self.commands.iter().filter(move |c| t0 < c.t && c.t <= t1)
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut col = 0;
    for (byte, ch) in code.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                tokens.push(Token {
                    text: &code[b..byte],
                    col: c,
                });
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        tokens.push(Token {
            text: &code[b..],
            col: c,
        });
    }
    tokens
}

struct Parser {
    diags: Vec<Diagnostic>,
    line: usize,
}

impl Parser {
    fn error(&mut self, col: usize, kind: DiagnosticKind, message: String) {
        self.diags.push(Diagnostic {
            line: self.line,
            col,
            kind,
            message,
        });
    }

    fn number(&mut self, tok: Token<'_>, what: &str) -> Option<f64> {
        match tok.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.error(
                    tok.col,
                    DiagnosticKind::Syntax,
                    format!("expected a finite number for {what}, found `{}`", tok.text),
                );
                None
            }
        }
    }

    /// Splits `key=value`, reporting malformed tokens.
    fn key_value<'a>(&mut self, tok: Token<'a>) -> Option<(&'a str, Option<f64>)> {
        match tok.text.split_once('=') {
            Some((key, value)) if !key.is_empty() => {
                let value_tok = Token {
                    text: value,
                    col: tok.col + key.chars().count() + 1,
                };
                let v = self.number(value_tok, key);
                Some((key, v))
            }
            _ => {
                self.error(
                    tok.col,
                    DiagnosticKind::Syntax,
                    format!("expected key=value, found `{}`", tok.text),
                );
                None
            }
        }
    }

    /// Scene parameters and their columns; unknown and repeated keys are
    /// reported here.
    fn params(&mut self, toks: &[Token<'_>]) -> Option<(Params, Vec<usize>)> {
        let mut out = Vec::new();
        let mut cols = Vec::new();
        let mut ok = true;
        for &tok in toks {
            let Some((key, value)) = self.key_value(tok) else {
                ok = false;
                continue;
            };
            let Some(key) = ParamKey::from_name(key) else {
                self.error(
                    tok.col,
                    DiagnosticKind::UnknownKey,
                    format!("unknown parameter `{key}`"),
                );
                ok = false;
                continue;
            };
            if out.iter().any(|(k, _)| *k == key) {
                self.error(
                    tok.col,
                    DiagnosticKind::DuplicateKey,
                    format!("parameter `{key}` given twice"),
                );
                ok = false;
                continue;
            }
            match value {
                Some(v) => {
                    out.push((key, v));
                    cols.push(tok.col);
                }
                None => ok = false,
            }
        }
        ok.then_some((out, cols))
    }

    /// Free-form `key=value` pairs checked against `allowed`.
    fn named_values(&mut self, toks: &[Token<'_>], allowed: &[&str]) -> Option<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        let mut ok = true;
        for &tok in toks {
            let Some((key, value)) = self.key_value(tok) else {
                ok = false;
                continue;
            };
            if !allowed.contains(&key) {
                self.error(
                    tok.col,
                    DiagnosticKind::UnknownKey,
                    format!("unknown key `{key}`, expected one of {}", allowed.join(", ")),
                );
                ok = false;
            } else if out.contains_key(key) {
                self.error(
                    tok.col,
                    DiagnosticKind::DuplicateKey,
                    format!("key `{key}` given twice"),
                );
                ok = false;
            } else if let Some(v) = value {
                out.insert(key.to_string(), v);
            } else {
                ok = false;
            }
        }
        ok.then_some(out)
    }

    fn arity(&mut self, toks: &[Token<'_>], n: usize, usage: &str) -> bool {
        if toks.len() == n {
            return true;
        }
        let col = toks.get(n).or(toks.last()).map_or(1, |t| t.col);
        self.error(col, DiagnosticKind::Syntax, format!("usage: {usage}"));
        false
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses script text. Returns every syntax-level diagnostic on failure;
/// semantic checks are left to [`validate`].
pub fn parse(text: &str) -> Result<Script, Vec<Diagnostic>> {
    let mut script = Script::default();
    let mut p = Parser {
        diags: Vec::new(),
        line: 0,
    };

    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let toks = tokenize(raw);
        let Some(&head) = toks.first() else {
            continue;
        };
        match head.text {
            "rate" | "duration" => {
                if !p.arity(&toks, 2, &format!("{} <value>", head.text)) {
                    continue;
                }
                let Some(v) = p.number(toks[1], head.text) else {
                    continue;
                };
                let (slot, line) = if head.text == "rate" {
                    (&mut script.rate, &mut script.header_lines.rate)
                } else {
                    (&mut script.duration, &mut script.header_lines.duration)
                };
                if line.is_some() {
                    p.error(
                        head.col,
                        DiagnosticKind::DuplicateHeader,
                        format!("`{}` already set", head.text),
                    );
                    continue;
                }
                *slot = Some(v);
                *line = Some(p.line);
            }
            "plant" => parse_plant(&mut p, &mut script, &toks),
            "intent" => parse_intent(&mut p, &mut script, &toks),
            "at" => {
                if let Some(cmd) = parse_command(&mut p, &toks) {
                    script.commands.push(cmd);
                }
            }
            other => p.error(
                head.col,
                DiagnosticKind::Syntax,
                format!("unknown directive `{other}`"),
            ),
        }
    }

    if p.diags.is_empty() {
        Ok(script)
    } else {
        Err(p.diags)
    }
}

const PLANT_KEYS: [&str; 5] = ["mass", "kp", "kd", "z_min", "z_max"];

fn parse_plant(p: &mut Parser, script: &mut Script, toks: &[Token<'_>]) {
    let head = toks[0];
    let Some(mode_tok) = toks.get(1) else {
        p.error(
            head.col,
            DiagnosticKind::Syntax,
            "usage: plant kinematic|dynamic [key=value...]".to_string(),
        );
        return;
    };
    let mode = match mode_tok.text {
        "kinematic" => PlantMode::Kinematic,
        "dynamic" => PlantMode::Dynamic,
        other => {
            p.error(
                mode_tok.col,
                DiagnosticKind::Syntax,
                format!("unknown plant mode `{other}`, expected kinematic or dynamic"),
            );
            return;
        }
    };
    let Some(values) = p.named_values(&toks[2..], &PLANT_KEYS) else {
        return;
    };
    if script.header_lines.plant.is_some() {
        p.error(
            head.col,
            DiagnosticKind::DuplicateHeader,
            "`plant` already set".to_string(),
        );
        return;
    }
    let mut cfg = PlantConfig {
        mode,
        ..PlantConfig::default()
    };
    for (key, v) in values {
        match key.as_str() {
            "mass" => cfg.mass = v,
            "kp" => cfg.kp = v,
            "kd" => cfg.kd = v,
            "z_min" => cfg.z_min = v,
            _ => cfg.z_max = v,
        }
    }
    script.plant = Some(cfg);
    script.header_lines.plant = Some(p.line);
}

fn parse_intent(p: &mut Parser, script: &mut Script, toks: &[Token<'_>]) {
    let head = toks[0];
    let Some(first) = toks.get(1) else {
        p.error(
            head.col,
            DiagnosticKind::Syntax,
            "usage: intent <t>:<z>... | constant | ramp | sine".to_string(),
        );
        return;
    };
    let get = |m: &BTreeMap<String, f64>, k: &str| m.get(k).copied();
    let traj = match first.text {
        "constant" => p
            .named_values(&toks[2..], &["z"])
            .and_then(|m| match get(&m, "z") {
                Some(z) => Some(IntentTrajectory::Constant { z }),
                None => {
                    p.error(
                        first.col,
                        DiagnosticKind::Syntax,
                        "constant intent needs z=".to_string(),
                    );
                    None
                }
            }),
        "ramp" => p
            .named_values(&toks[2..], &["from", "to", "start", "end"])
            .and_then(
                |m| match (get(&m, "from"), get(&m, "to"), get(&m, "start"), get(&m, "end")) {
                    (Some(from), Some(to), Some(start), Some(end)) => {
                        Some(IntentTrajectory::Ramp { from, to, start, end })
                    }
                    _ => {
                        p.error(
                            first.col,
                            DiagnosticKind::Syntax,
                            "ramp intent needs from=, to=, start= and end=".to_string(),
                        );
                        None
                    }
                },
            ),
        "sine" => p
            .named_values(&toks[2..], &["center", "amplitude", "freq", "start"])
            .and_then(
                |m| match (get(&m, "center"), get(&m, "amplitude"), get(&m, "freq")) {
                    (Some(center), Some(amplitude), Some(freq)) => Some(IntentTrajectory::Sine {
                        center,
                        amplitude,
                        freq,
                        start: get(&m, "start").unwrap_or(0.0),
                    }),
                    _ => {
                        p.error(
                            first.col,
                            DiagnosticKind::Syntax,
                            "sine intent needs center=, amplitude= and freq=".to_string(),
                        );
                        None
                    }
                },
            ),
        _ => {
            let mut points = Vec::new();
            let mut ok = true;
            for &tok in &toks[1..] {
                let Some((t, z)) = tok.text.split_once(':') else {
                    p.error(
                        tok.col,
                        DiagnosticKind::Syntax,
                        format!("expected <t>:<z> waypoint, found `{}`", tok.text),
                    );
                    ok = false;
                    continue;
                };
                let t = p.number(
                    Token {
                        text: t,
                        col: tok.col,
                    },
                    "waypoint time",
                );
                let z_col = tok.col + tok.text[..tok.text.len() - z.len()].chars().count();
                let z = p.number(Token { text: z, col: z_col }, "waypoint height");
                match (t, z) {
                    (Some(t), Some(z)) => points.push(Waypoint { t, z }),
                    _ => ok = false,
                }
            }
            ok.then_some(IntentTrajectory::Waypoints(points))
        }
    };
    let Some(traj) = traj else {
        return;
    };
    if script.header_lines.intent.is_some() {
        p.error(
            head.col,
            DiagnosticKind::DuplicateHeader,
            "`intent` already set".to_string(),
        );
        return;
    }
    script.intent = Some(traj);
    script.header_lines.intent = Some(p.line);
}

fn parse_command(p: &mut Parser, toks: &[Token<'_>]) -> Option<TimedCommand> {
    let usage =
        "at <t> spawn <name> <kind> [key=value...] | at <t> set <name> key=value... | at <t> kill <name>";
    if toks.len() < 4 {
        let col = toks.last().map_or(1, |t| t.col);
        p.error(col, DiagnosticKind::Syntax, format!("usage: {usage}"));
        return None;
    }
    let t = p.number(toks[1], "time")?;
    let verb = toks[2];
    let name_tok = toks[3];
    if !is_name(name_tok.text) {
        p.error(
            name_tok.col,
            DiagnosticKind::Syntax,
            format!("invalid instance name `{}`", name_tok.text),
        );
        return None;
    }
    let name = name_tok.text.to_string();
    let mut span = Span {
        line: p.line,
        time_col: toks[1].col,
        name_col: name_tok.col,
        param_cols: Vec::new(),
    };
    let command = match verb.text {
        "spawn" => {
            let Some(kind_tok) = toks.get(4) else {
                p.error(
                    name_tok.col,
                    DiagnosticKind::Syntax,
                    format!("spawn of `{name}` needs a kind"),
                );
                return None;
            };
            let Some(kind) = PrimitiveKind::from_name(kind_tok.text) else {
                p.error(
                    kind_tok.col,
                    DiagnosticKind::UnknownKind,
                    format!("unknown primitive kind `{}`", kind_tok.text),
                );
                return None;
            };
            let (params, cols) = p.params(&toks[5..])?;
            span.param_cols = cols;
            Command::Spawn { name, kind, params }
        }
        "set" => {
            if toks.len() < 5 {
                p.error(
                    name_tok.col,
                    DiagnosticKind::Syntax,
                    format!("set of `{name}` names no parameters"),
                );
                return None;
            }
            let (params, cols) = p.params(&toks[4..])?;
            span.param_cols = cols;
            Command::Set { name, params }
        }
        "kill" => {
            if !p.arity(toks, 4, "at <t> kill <name>") {
                return None;
            }
            Command::Kill { name }
        }
        other => {
            p.error(
                verb.col,
                DiagnosticKind::Syntax,
                format!("unknown command `{other}`, expected spawn, set or kill"),
            );
            return None;
        }
    };
    Some(TimedCommand { t, command, span })
}

// ---------------------------------------------------------------------------
// Printing

type Params = Vec<(ParamKey, f64)>;

fn write_fields(f: &mut fmt::Formatter<'_>, params: &[(ParamKey, f64)]) -> fmt::Result {
    for (k, v) in params {
        write!(f, " {k}={v}")?;
    }
    Ok(())
}

impl fmt::Display for Script {
    /// Canonical text; parsing it yields an equal [`Script`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(rate) = self.rate {
            writeln!(f, "rate {rate}")?;
        }
        if let Some(duration) = self.duration {
            writeln!(f, "duration {duration}")?;
        }
        if let Some(cfg) = &self.plant {
            let mode = match cfg.mode {
                PlantMode::Kinematic => "kinematic",
                PlantMode::Dynamic => "dynamic",
            };
            writeln!(
                f,
                "plant {mode} mass={} kp={} kd={} z_min={} z_max={}",
                cfg.mass, cfg.kp, cfg.kd, cfg.z_min, cfg.z_max
            )?;
        }
        match &self.intent {
            None => {}
            Some(IntentTrajectory::Waypoints(points)) => {
                f.write_str("intent")?;
                for w in points {
                    write!(f, " {}:{}", w.t, w.z)?;
                }
                writeln!(f)?;
            }
            Some(IntentTrajectory::Constant { z }) => writeln!(f, "intent constant z={z}")?,
            Some(IntentTrajectory::Ramp { from, to, start, end }) => {
                writeln!(f, "intent ramp from={from} to={to} start={start} end={end}")?
            }
            Some(IntentTrajectory::Sine {
                center,
                amplitude,
                freq,
                start,
            }) => writeln!(
                f,
                "intent sine center={center} amplitude={amplitude} freq={freq} start={start}"
            )?,
        }
        for c in &self.commands {
            match &c.command {
                Command::Spawn { name, kind, params } => {
                    write!(f, "at {} spawn {name} {}", c.t, kind.name())?;
                    write_fields(f, params)?;
                }
                Command::Set { name, params } => {
                    write!(f, "at {} set {name}", c.t)?;
                    write_fields(f, params)?;
                }
                Command::Kill { name } => write!(f, "at {} kill {name}", c.t)?,
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Named scene: applies commands by instance name

/// Which registry a name points into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handle {
    Haptic(InstanceId),
    Dof(InstanceId),
}

impl Handle {
    pub fn id(self) -> InstanceId {
        match self {
            Handle::Haptic(id) | Handle::Dof(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApplyError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("UnknownName: no live instance named `{0}`")]
    UnknownName(String),
    #[error("DuplicateName: `{0}` is already live")]
    DuplicateName(String),
}

impl ApplyError {
    pub fn code(&self) -> &'static str {
        match self {
            ApplyError::Scene(e) => e.code(),
            ApplyError::UnknownName(_) => "UnknownName",
            ApplyError::DuplicateName(_) => "DuplicateName",
        }
    }
}

/// A registry addressed by script names. Used both by the validator's
/// symbolic replay and by the runtime, so both enforce identical rules.
#[derive(Debug, Clone, Default)]
pub struct NamedScene {
    pub registry: SceneRegistry,
    names: BTreeMap<String, Handle>,
}

impl NamedScene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn handle(&self, name: &str) -> Option<Handle> {
        self.names.get(name).copied()
    }

    /// Names of live instances, sorted.
    pub fn names(&self) -> impl Iterator<Item = (&str, Handle)> + '_ {
        self.names.iter().map(|(n, h)| (n.as_str(), *h))
    }

    /// Applies one command at session time `now`. `current_z` seeds pass DOFs.
    /// On error the scene is unchanged.
    pub fn apply(&mut self, command: &Command, now: f64, current_z: f64) -> Result<Handle, ApplyError> {
        match command {
            Command::Spawn { name, kind, params } => {
                if self.names.contains_key(name) {
                    return Err(ApplyError::DuplicateName(name.clone()));
                }
                let handle = match *kind {
                    PrimitiveKind::Haptic(kind) => {
                        let (range, params) = HapticParams::from_fields(kind, params)?;
                        Handle::Haptic(self.registry.spawn_haptic(range, params, now)?)
                    }
                    PrimitiveKind::Dof(kind) => {
                        let params = DofParams::from_fields(kind, params)?;
                        Handle::Dof(self.registry.spawn_dof(params, now, current_z)?)
                    }
                };
                self.names.insert(name.clone(), handle);
                Ok(handle)
            }
            Command::Set { name, params } => {
                let handle = self.lookup(name)?;
                match handle {
                    Handle::Haptic(id) => self.registry.set_params(id, params).map(|_| ())?,
                    Handle::Dof(id) => self.registry.set_dof_params(id, params).map(|_| ())?,
                }
                Ok(handle)
            }
            Command::Kill { name } => {
                let handle = self.lookup(name)?;
                match handle {
                    Handle::Haptic(id) => self.registry.kill_primitive(id).map(|_| ())?,
                    Handle::Dof(id) => self.registry.kill_dof(id).map(|_| ())?,
                }
                self.names.remove(name);
                Ok(handle)
            }
        }
    }

    fn lookup(&self, name: &str) -> Result<Handle, ApplyError> {
        self.handle(name)
            .ok_or_else(|| ApplyError::UnknownName(name.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Validation

/// Semantic checks: header values, command ordering, name resolution,
/// parameter schemas and the instance cap, by replaying every command in
/// file order against a real registry. An empty list means valid.
pub fn validate(script: &Script) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut push = |line: usize, col: usize, kind, message: String| {
        diags.push(Diagnostic {
            line,
            col,
            kind,
            message,
        })
    };
    let lines = &script.header_lines;

    if let Some(rate) = script.rate {
        if rate <= 0.0 {
            push(
                lines.rate.unwrap_or(1),
                6,
                DiagnosticKind::InvalidHeader,
                format!("rate must be positive, got {rate}"),
            );
        }
    }
    match script.duration {
        None => push(
            1,
            1,
            DiagnosticKind::MissingDuration,
            "script has no `duration` line".to_string(),
        ),
        Some(d) if d <= 0.0 => push(
            lines.duration.unwrap_or(1),
            10,
            DiagnosticKind::InvalidHeader,
            format!("duration must be positive, got {d}"),
        ),
        _ => {}
    }
    if let Some(cfg) = &script.plant {
        if let Err(e) = cfg.validate() {
            push(
                lines.plant.unwrap_or(1),
                1,
                DiagnosticKind::InvalidHeader,
                e.to_string(),
            );
        }
    }
    if let Some(intent) = &script.intent {
        if let Err(e) = intent.validate() {
            push(
                lines.intent.unwrap_or(1),
                1,
                DiagnosticKind::InvalidHeader,
                e.to_string(),
            );
        }
    }

    let mut scene = NamedScene::new();
    // Names whose spawn already produced a diagnostic; later references to
    // them are not reported again.
    let mut poisoned: BTreeSet<String> = BTreeSet::new();
    let mut last_t = f64::NEG_INFINITY;
    for c in &script.commands {
        let line = c.span.line;
        if c.t < 0.0 {
            push(
                line,
                c.span.time_col,
                DiagnosticKind::InvalidTime,
                format!("time {} is negative", c.t),
            );
        }
        if c.t < last_t {
            push(
                line,
                c.span.time_col,
                DiagnosticKind::NonMonotoneTime,
                format!("time {} is earlier than the preceding command at {last_t}", c.t),
            );
        }
        last_t = last_t.max(c.t);
        if let Some(d) = script.duration {
            if c.t > d {
                push(
                    line,
                    c.span.time_col,
                    DiagnosticKind::AfterDuration,
                    format!("time {} is after the session duration {d}", c.t),
                );
            }
        }

        let name = c.command.name();
        if poisoned.contains(name) {
            if let Command::Kill { .. } = c.command {
                poisoned.remove(name);
            } else if let Command::Spawn { .. } = c.command {
                push(
                    line,
                    c.span.name_col,
                    DiagnosticKind::DuplicateName,
                    format!("`{name}` is already live"),
                );
            }
            continue;
        }
        match scene.apply(&c.command, c.t, 0.0) {
            Ok(_) => {}
            Err(err) => {
                if let Command::Spawn { .. } = c.command {
                    if !matches!(err, ApplyError::DuplicateName(_)) {
                        poisoned.insert(name.to_string());
                    }
                }
                let (kind, col, message) = match &err {
                    ApplyError::UnknownName(n) => (
                        DiagnosticKind::UnknownName,
                        c.span.name_col,
                        format!("no live instance named `{n}`"),
                    ),
                    ApplyError::DuplicateName(n) => (
                        DiagnosticKind::DuplicateName,
                        c.span.name_col,
                        format!("`{n}` is already live"),
                    ),
                    ApplyError::Scene(SceneError::CapacityExceeded { limit }) => (
                        DiagnosticKind::CapacityExceeded,
                        c.span.name_col,
                        format!(
                            "spawning `{name}` at t={} exceeds {limit} concurrent instances",
                            c.t
                        ),
                    ),
                    ApplyError::Scene(SceneError::InvalidParam { key, issue }) => {
                        let col = match &c.command {
                            Command::Spawn { params, .. } | Command::Set { params, .. } => params
                                .iter()
                                .position(|(k, _)| k == key)
                                .and_then(|i| c.span.param_cols.get(i).copied())
                                .unwrap_or(c.span.name_col),
                            Command::Kill { .. } => c.span.name_col,
                        };
                        (
                            DiagnosticKind::InvalidParam,
                            col,
                            format!("`{name}`: parameter `{key}` {issue}"),
                        )
                    }
                    ApplyError::Scene(other) => {
                        (DiagnosticKind::InvalidParam, c.span.name_col, other.to_string())
                    }
                };
                push(line, col, kind, message);
            }
        }
    }
    diags
}

/// Parses and validates in one step.
pub fn check(text: &str) -> Result<Script, Vec<Diagnostic>> {
    let script = parse(text)?;
    let diags = validate(&script);
    if diags.is_empty() {
        Ok(script)
    } else {
        Err(diags)
    }
}
