//! Primitive instances, their parameter schemas, and the scene registry.

use alloc::collections::{BTreeMap, VecDeque};
use core::fmt;

use crate::error::{ParamIssue, SceneError};

/// Maximum number of concurrently live instances per registry.
pub const INSTANCE_CAP: usize = 160;

/// Session-unique instance identifier. Issued in strictly increasing order,
/// never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct InstanceId(pub u64);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Closed interval `[base, base + size]` along z, in millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZRange {
    base: f64,
    size: f64,
}

impl ZRange {
    pub fn new(base: f64, size: f64) -> Result<Self, SceneError> {
        check_value(ParamKey::Base, base)?;
        check_value(ParamKey::Size, size)?;
        Ok(ZRange { base, size })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn top(&self) -> f64 {
        self.base + self.size
    }

    /// Both boundaries count as inside.
    pub fn contains(&self, z: f64) -> bool {
        self.base <= z && z <= self.top()
    }
}

/// Every parameter name accepted anywhere in the scene language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ParamKey {
    Base,
    Size,
    Force,
    ForceBase,
    ForceRange,
    Damping,
    Direction,
    Freq,
    Amp,
    Period,
    Threshold,
}

impl ParamKey {
    pub const ALL: [ParamKey; 11] = [
        ParamKey::Base,
        ParamKey::Size,
        ParamKey::Force,
        ParamKey::ForceBase,
        ParamKey::ForceRange,
        ParamKey::Damping,
        ParamKey::Direction,
        ParamKey::Freq,
        ParamKey::Amp,
        ParamKey::Period,
        ParamKey::Threshold,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamKey::Base => "base",
            ParamKey::Size => "size",
            ParamKey::Force => "force",
            ParamKey::ForceBase => "force_base",
            ParamKey::ForceRange => "force_range",
            ParamKey::Damping => "damping",
            ParamKey::Direction => "direction",
            ParamKey::Freq => "freq",
            ParamKey::Amp => "amp",
            ParamKey::Period => "period",
            ParamKey::Threshold => "threshold",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamKey> {
        ParamKey::ALL.into_iter().find(|k| k.as_str() == name)
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Range checks shared by every kind that carries the key.
fn check_value(key: ParamKey, value: f64) -> Result<(), SceneError> {
    if !value.is_finite() {
        return Err(SceneError::param(key, ParamIssue::NotFinite));
    }
    let ok = match key {
        ParamKey::Size | ParamKey::Damping | ParamKey::Freq => value >= 0.0,
        ParamKey::Period => value > 0.0,
        ParamKey::Direction => value == 0.0 || value == 1.0,
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(SceneError::param(key, ParamIssue::OutOfRange))
    }
}

/// Rejects duplicate keys and keys outside `allowed`, and range-checks values.
fn check_fields(fields: &[(ParamKey, f64)], allowed: &[ParamKey]) -> Result<(), SceneError> {
    for (i, &(key, value)) in fields.iter().enumerate() {
        if !allowed.contains(&key) {
            return Err(SceneError::param(key, ParamIssue::WrongKind));
        }
        if fields[..i].iter().any(|(k, _)| *k == key) {
            return Err(SceneError::param(key, ParamIssue::Duplicate));
        }
        check_value(key, value)?;
    }
    Ok(())
}

fn field(fields: &[(ParamKey, f64)], key: ParamKey) -> Option<f64> {
    fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn required(fields: &[(ParamKey, f64)], key: ParamKey) -> Result<f64, SceneError> {
    field(fields, key).ok_or(SceneError::param(key, ParamIssue::Missing))
}

/// Which movement direction a directional dashpot damps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    /// Bit 0: damps `v < 0`.
    Downward,
    /// Bit 1: damps `v > 0`.
    Upward,
}

impl Direction {
    pub fn from_bit(bit: f64) -> Option<Direction> {
        if bit == 0.0 {
            Some(Direction::Downward)
        } else if bit == 1.0 {
            Some(Direction::Upward)
        } else {
            None
        }
    }

    pub fn bit(self) -> f64 {
        match self {
            Direction::Downward => 0.0,
            Direction::Upward => 1.0,
        }
    }

    /// Whether motion at velocity `v` (mm/s) runs in this direction.
    pub fn matches(self, v: f64) -> bool {
        match self {
            Direction::Downward => v < 0.0,
            Direction::Upward => v > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HapticKind {
    Monoforce,
    LinearRamp,
    Dashpot,
    DirectionalDashpot,
    ForceWave,
}

impl HapticKind {
    pub const ALL: [HapticKind; 5] = [
        HapticKind::Monoforce,
        HapticKind::LinearRamp,
        HapticKind::Dashpot,
        HapticKind::DirectionalDashpot,
        HapticKind::ForceWave,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HapticKind::Monoforce => "monoforce",
            HapticKind::LinearRamp => "linear_ramp",
            HapticKind::Dashpot => "dashpot",
            HapticKind::DirectionalDashpot => "directional_dashpot",
            HapticKind::ForceWave => "force_wave",
        }
    }

    /// Sign-grid symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            HapticKind::Monoforce => "—",
            HapticKind::LinearRamp => "↗",
            HapticKind::Dashpot => "⊞",
            HapticKind::DirectionalDashpot => "↗⊞",
            HapticKind::ForceWave => "✦",
        }
    }

    /// Every key the kind accepts, shared range keys first.
    pub fn keys(self) -> &'static [ParamKey] {
        use ParamKey::*;
        match self {
            HapticKind::Monoforce => &[Base, Size, Force],
            HapticKind::LinearRamp => &[Base, Size, ForceBase, ForceRange],
            HapticKind::Dashpot => &[Base, Size, Damping],
            HapticKind::DirectionalDashpot => &[Base, Size, Damping, Direction],
            HapticKind::ForceWave => &[Base, Size, Freq, Amp],
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// Kind-specific parameters of a haptic primitive. Forces in N, damping in
/// N/(mm/s), frequency in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum HapticParams {
    Monoforce { force: f64 },
    LinearRamp { force_base: f64, force_range: f64 },
    Dashpot { damping: f64 },
    DirectionalDashpot { damping: f64, direction: Direction },
    ForceWave { freq: f64, amp: f64 },
}

impl HapticParams {
    pub fn kind(&self) -> HapticKind {
        match self {
            HapticParams::Monoforce { .. } => HapticKind::Monoforce,
            HapticParams::LinearRamp { .. } => HapticKind::LinearRamp,
            HapticParams::Dashpot { .. } => HapticKind::Dashpot,
            HapticParams::DirectionalDashpot { .. } => HapticKind::DirectionalDashpot,
            HapticParams::ForceWave { .. } => HapticKind::ForceWave,
        }
    }

    /// Builds a range and parameter record from `key=value` fields.
    /// Missing values default to 0, and a missing direction to upward.
    pub fn from_fields(
        kind: HapticKind,
        fields: &[(ParamKey, f64)],
    ) -> Result<(ZRange, HapticParams), SceneError> {
        check_fields(fields, kind.keys())?;
        let get = |key| field(fields, key).unwrap_or(0.0);
        let range = ZRange::new(get(ParamKey::Base), get(ParamKey::Size))?;
        let params = match kind {
            HapticKind::Monoforce => HapticParams::Monoforce {
                force: get(ParamKey::Force),
            },
            HapticKind::LinearRamp => HapticParams::LinearRamp {
                force_base: get(ParamKey::ForceBase),
                force_range: get(ParamKey::ForceRange),
            },
            HapticKind::Dashpot => HapticParams::Dashpot {
                damping: get(ParamKey::Damping),
            },
            HapticKind::DirectionalDashpot => HapticParams::DirectionalDashpot {
                damping: get(ParamKey::Damping),
                direction: field(fields, ParamKey::Direction)
                    .map(|bit| Direction::from_bit(bit).unwrap_or(Direction::Upward))
                    .unwrap_or(Direction::Upward),
            },
            HapticKind::ForceWave => HapticParams::ForceWave {
                freq: get(ParamKey::Freq),
                amp: get(ParamKey::Amp),
            },
        };
        Ok((range, params))
    }

    /// The record as `key=value` pairs, in schema order, excluding range keys.
    pub fn fields(&self) -> alloc::vec::Vec<(ParamKey, f64)> {
        use ParamKey::*;
        match *self {
            HapticParams::Monoforce { force } => alloc::vec![(Force, force)],
            HapticParams::LinearRamp {
                force_base,
                force_range,
            } => alloc::vec![(ForceBase, force_base), (ForceRange, force_range)],
            HapticParams::Dashpot { damping } => alloc::vec![(Damping, damping)],
            HapticParams::DirectionalDashpot { damping, direction } => {
                alloc::vec![(Damping, damping), (Direction, direction.bit())]
            }
            HapticParams::ForceWave { freq, amp } => alloc::vec![(Freq, freq), (Amp, amp)],
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.fields()
            .into_iter()
            .try_for_each(|(key, value)| check_value(key, value))
    }

    fn assign(&mut self, key: ParamKey, value: f64) -> Result<(), SceneError> {
        match (self, key) {
            (HapticParams::Monoforce { force }, ParamKey::Force) => *force = value,
            (HapticParams::LinearRamp { force_base, .. }, ParamKey::ForceBase) => *force_base = value,
            (HapticParams::LinearRamp { force_range, .. }, ParamKey::ForceRange) => *force_range = value,
            (HapticParams::Dashpot { damping }, ParamKey::Damping)
            | (HapticParams::DirectionalDashpot { damping, .. }, ParamKey::Damping) => *damping = value,
            (HapticParams::DirectionalDashpot { direction, .. }, ParamKey::Direction) => {
                *direction =
                    Direction::from_bit(value).ok_or(SceneError::param(key, ParamIssue::OutOfRange))?
            }
            (HapticParams::ForceWave { freq, .. }, ParamKey::Freq) => *freq = value,
            (HapticParams::ForceWave { amp, .. }, ParamKey::Amp) => *amp = value,
            _ => return Err(SceneError::param(key, ParamIssue::WrongKind)),
        }
        Ok(())
    }
}

/// One live haptic primitive instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HapticPrimitive {
    pub id: InstanceId,
    pub range: ZRange,
    pub params: HapticParams,
    /// Session time of the spawn tick (s).
    pub created_at: f64,
    /// Force-wave phase in radians, kept in `[0, 2π)`. Zero for other kinds.
    pub phase: f64,
    /// Hidden instances contribute force but are not drawn.
    pub hidden: bool,
}

impl HapticPrimitive {
    pub fn kind(&self) -> HapticKind {
        self.params.kind()
    }

    /// Applies every field or none of them.
    fn apply(&mut self, fields: &[(ParamKey, f64)]) -> Result<(), SceneError> {
        check_fields(fields, self.kind().keys())?;
        let mut range = self.range;
        let mut params = self.params;
        for &(key, value) in fields {
            match key {
                ParamKey::Base => range.base = value,
                ParamKey::Size => range.size = value,
                _ => params.assign(key, value)?,
            }
        }
        self.range = range;
        self.params = params;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DofKind {
    Inside,
    RelPosition,
    AvgRelPosition,
    AvgAbsDev,
    Speed,
    DownwardPass,
    UpwardPass,
}

impl DofKind {
    pub const ALL: [DofKind; 7] = [
        DofKind::Inside,
        DofKind::RelPosition,
        DofKind::AvgRelPosition,
        DofKind::AvgAbsDev,
        DofKind::Speed,
        DofKind::DownwardPass,
        DofKind::UpwardPass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DofKind::Inside => "inside",
            DofKind::RelPosition => "rel_position",
            DofKind::AvgRelPosition => "avg_rel_position",
            DofKind::AvgAbsDev => "avg_abs_dev",
            DofKind::Speed => "speed",
            DofKind::DownwardPass => "downward_pass",
            DofKind::UpwardPass => "upward_pass",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            DofKind::Inside => "bit",
            DofKind::RelPosition | DofKind::AvgRelPosition | DofKind::AvgAbsDev => "mm",
            DofKind::Speed | DofKind::DownwardPass | DofKind::UpwardPass => "mm/s",
        }
    }

    pub fn keys(self) -> &'static [ParamKey] {
        use ParamKey::*;
        match self {
            DofKind::Inside => &[Base, Size],
            DofKind::RelPosition => &[Base],
            DofKind::AvgRelPosition => &[Base, Period],
            DofKind::AvgAbsDev => &[Period],
            DofKind::Speed => &[],
            DofKind::DownwardPass | DofKind::UpwardPass => &[Threshold],
        }
    }

    /// Pass kinds emit events instead of continuous samples.
    pub fn is_pass(self) -> bool {
        matches!(self, DofKind::DownwardPass | DofKind::UpwardPass)
    }
}

/// Table of DOF parameters. Positions in mm, periods in ms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DofParams {
    Inside { range: ZRange },
    RelPosition { base: f64 },
    AvgRelPosition { base: f64, period_ms: f64 },
    AvgAbsDev { period_ms: f64 },
    Speed,
    DownwardPass { threshold: f64 },
    UpwardPass { threshold: f64 },
}

impl DofParams {
    pub fn kind(&self) -> DofKind {
        match self {
            DofParams::Inside { .. } => DofKind::Inside,
            DofParams::RelPosition { .. } => DofKind::RelPosition,
            DofParams::AvgRelPosition { .. } => DofKind::AvgRelPosition,
            DofParams::AvgAbsDev { .. } => DofKind::AvgAbsDev,
            DofParams::Speed => DofKind::Speed,
            DofParams::DownwardPass { .. } => DofKind::DownwardPass,
            DofParams::UpwardPass { .. } => DofKind::UpwardPass,
        }
    }

    /// `base`/`size` default to 0; `period` and `threshold` are required.
    pub fn from_fields(kind: DofKind, fields: &[(ParamKey, f64)]) -> Result<DofParams, SceneError> {
        check_fields(fields, kind.keys())?;
        let get = |key| field(fields, key).unwrap_or(0.0);
        Ok(match kind {
            DofKind::Inside => DofParams::Inside {
                range: ZRange::new(get(ParamKey::Base), get(ParamKey::Size))?,
            },
            DofKind::RelPosition => DofParams::RelPosition {
                base: get(ParamKey::Base),
            },
            DofKind::AvgRelPosition => DofParams::AvgRelPosition {
                base: get(ParamKey::Base),
                period_ms: required(fields, ParamKey::Period)?,
            },
            DofKind::AvgAbsDev => DofParams::AvgAbsDev {
                period_ms: required(fields, ParamKey::Period)?,
            },
            DofKind::Speed => DofParams::Speed,
            DofKind::DownwardPass => DofParams::DownwardPass {
                threshold: required(fields, ParamKey::Threshold)?,
            },
            DofKind::UpwardPass => DofParams::UpwardPass {
                threshold: required(fields, ParamKey::Threshold)?,
            },
        })
    }

    pub fn fields(&self) -> alloc::vec::Vec<(ParamKey, f64)> {
        use ParamKey::*;
        match *self {
            DofParams::Inside { range } => alloc::vec![(Base, range.base), (Size, range.size)],
            DofParams::RelPosition { base } => alloc::vec![(Base, base)],
            DofParams::AvgRelPosition { base, period_ms } => {
                alloc::vec![(Base, base), (Period, period_ms)]
            }
            DofParams::AvgAbsDev { period_ms } => alloc::vec![(Period, period_ms)],
            DofParams::Speed => alloc::vec![],
            DofParams::DownwardPass { threshold } | DofParams::UpwardPass { threshold } => {
                alloc::vec![(Threshold, threshold)]
            }
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.fields()
            .into_iter()
            .try_for_each(|(key, value)| check_value(key, value))
    }

    fn assign(&mut self, key: ParamKey, value: f64) -> Result<(), SceneError> {
        match (self, key) {
            (DofParams::Inside { range }, ParamKey::Base) => range.base = value,
            (DofParams::Inside { range }, ParamKey::Size) => range.size = value,
            (DofParams::RelPosition { base }, ParamKey::Base)
            | (DofParams::AvgRelPosition { base, .. }, ParamKey::Base) => *base = value,
            (DofParams::AvgRelPosition { period_ms, .. }, ParamKey::Period)
            | (DofParams::AvgAbsDev { period_ms }, ParamKey::Period) => *period_ms = value,
            (DofParams::DownwardPass { threshold }, ParamKey::Threshold)
            | (DofParams::UpwardPass { threshold }, ParamKey::Threshold) => *threshold = value,
            _ => return Err(SceneError::param(key, ParamIssue::WrongKind)),
        }
        Ok(())
    }
}

/// One live DOF primitive instance together with its evaluation state.
#[derive(Debug, Clone, PartialEq)]
pub struct DofPrimitive {
    pub id: InstanceId,
    pub params: DofParams,
    pub created_at: f64,
    /// Trailing z samples, oldest first (windowed kinds).
    pub(crate) window: VecDeque<f64>,
    /// Previous `(t, z)` sample (speed).
    pub(crate) prev_sample: Option<(f64, f64)>,
    /// z at the previous tick (pass kinds).
    pub(crate) prev_z: Option<f64>,
}

impl DofPrimitive {
    pub fn kind(&self) -> DofKind {
        self.params.kind()
    }

    /// Samples currently held by the averaging window.
    pub fn window(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    pub fn prev_z(&self) -> Option<f64> {
        self.prev_z
    }

    fn apply(&mut self, fields: &[(ParamKey, f64)]) -> Result<(), SceneError> {
        check_fields(fields, self.kind().keys())?;
        let mut params = self.params;
        for &(key, value) in fields {
            params.assign(key, value)?;
        }
        self.params = params;
        Ok(())
    }
}

/// Either family of primitive kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum PrimitiveKind {
    Haptic(HapticKind),
    Dof(DofKind),
}

impl PrimitiveKind {
    pub fn from_name(name: &str) -> Option<PrimitiveKind> {
        HapticKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .map(PrimitiveKind::Haptic)
            .or_else(|| {
                DofKind::ALL
                    .into_iter()
                    .find(|k| k.name() == name)
                    .map(PrimitiveKind::Dof)
            })
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Haptic(k) => k.name(),
            PrimitiveKind::Dof(k) => k.name(),
        }
    }

    pub fn keys(self) -> &'static [ParamKey] {
        match self {
            PrimitiveKind::Haptic(k) => k.keys(),
            PrimitiveKind::Dof(k) => k.keys(),
        }
    }
}

/// Registries of live haptic and DOF instances.
///
/// Both registries share one id counter and each holds at most
/// [`INSTANCE_CAP`] instances. Iteration is in ascending id order.
#[derive(Debug, Clone)]
pub struct SceneRegistry {
    haptics: BTreeMap<InstanceId, HapticPrimitive>,
    dofs: BTreeMap<InstanceId, DofPrimitive>,
    next_id: u64,
}

impl Default for SceneRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl SceneRegistry {
    pub fn new() -> Self {
        SceneRegistry {
            haptics: BTreeMap::new(),
            dofs: BTreeMap::new(),
            next_id: 1,
        }
    }

    fn issue_id(&mut self) -> InstanceId {
        let id = InstanceId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn spawn_haptic(
        &mut self,
        range: ZRange,
        params: HapticParams,
        now: f64,
    ) -> Result<InstanceId, SceneError> {
        self.insert_haptic(range, params, now, false)
    }

    /// Spawns an instance that contributes force but is left out of frames.
    pub fn spawn_hidden_haptic(
        &mut self,
        range: ZRange,
        params: HapticParams,
        now: f64,
    ) -> Result<InstanceId, SceneError> {
        self.insert_haptic(range, params, now, true)
    }

    fn insert_haptic(
        &mut self,
        range: ZRange,
        params: HapticParams,
        now: f64,
        hidden: bool,
    ) -> Result<InstanceId, SceneError> {
        if self.haptics.len() >= INSTANCE_CAP {
            return Err(SceneError::CapacityExceeded { limit: INSTANCE_CAP });
        }
        params.validate()?;
        let id = self.issue_id();
        self.haptics.insert(
            id,
            HapticPrimitive {
                id,
                range,
                params,
                created_at: now,
                phase: 0.0,
                hidden,
            },
        );
        Ok(id)
    }

    /// Updates only the named fields. Force-wave phase is kept.
    pub fn set_params(
        &mut self,
        id: InstanceId,
        fields: &[(ParamKey, f64)],
    ) -> Result<&HapticPrimitive, SceneError> {
        let p = self.haptics.get_mut(&id).ok_or(SceneError::UnknownId(id))?;
        p.apply(fields)?;
        Ok(p)
    }

    pub fn kill_primitive(&mut self, id: InstanceId) -> Result<HapticPrimitive, SceneError> {
        self.haptics.remove(&id).ok_or(SceneError::UnknownId(id))
    }

    /// `current_z` seeds the previous position of pass kinds so that spawning
    /// never fires an event by itself.
    pub fn spawn_dof(
        &mut self,
        params: DofParams,
        now: f64,
        current_z: f64,
    ) -> Result<InstanceId, SceneError> {
        if self.dofs.len() >= INSTANCE_CAP {
            return Err(SceneError::CapacityExceeded { limit: INSTANCE_CAP });
        }
        params.validate()?;
        let id = self.issue_id();
        let prev_z = params.kind().is_pass().then_some(current_z);
        self.dofs.insert(
            id,
            DofPrimitive {
                id,
                params,
                created_at: now,
                window: VecDeque::new(),
                prev_sample: None,
                prev_z,
            },
        );
        Ok(id)
    }

    pub fn set_dof_params(
        &mut self,
        id: InstanceId,
        fields: &[(ParamKey, f64)],
    ) -> Result<&DofPrimitive, SceneError> {
        let d = self.dofs.get_mut(&id).ok_or(SceneError::UnknownId(id))?;
        d.apply(fields)?;
        Ok(d)
    }

    pub fn kill_dof(&mut self, id: InstanceId) -> Result<DofPrimitive, SceneError> {
        self.dofs.remove(&id).ok_or(SceneError::UnknownId(id))
    }

    pub fn haptic(&self, id: InstanceId) -> Option<&HapticPrimitive> {
        self.haptics.get(&id)
    }

    pub fn dof(&self, id: InstanceId) -> Option<&DofPrimitive> {
        self.dofs.get(&id)
    }

    pub fn haptics(&self) -> impl Iterator<Item = &HapticPrimitive> + '_ {
        self.haptics.values()
    }

    pub fn dofs(&self) -> impl Iterator<Item = &DofPrimitive> + '_ {
        self.dofs.values()
    }

    pub(crate) fn haptics_mut(&mut self) -> impl Iterator<Item = &mut HapticPrimitive> + '_ {
        self.haptics.values_mut()
    }

    pub(crate) fn dofs_mut(&mut self) -> impl Iterator<Item = &mut DofPrimitive> + '_ {
        self.dofs.values_mut()
    }

    /// Rewrites the force of a monoforce in place; used by the raw I/O wrapper.
    pub fn set_monoforce(&mut self, id: InstanceId, force: f64) -> Result<(), SceneError> {
        self.set_params(id, &[(ParamKey::Force, force)]).map(|_| ())
    }

    pub fn haptic_count(&self) -> usize {
        self.haptics.len()
    }

    pub fn dof_count(&self) -> usize {
        self.dofs.len()
    }

    /// The id the next spawn will receive.
    pub fn next_id(&self) -> InstanceId {
        InstanceId(self.next_id)
    }
}
