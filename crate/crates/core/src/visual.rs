//! Geometry-level scene description: cursor, blended block segments and the
//! sign grid.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::force::{FingertipState, ForceSample};
use crate::scene::{HapticKind, HapticParams, HapticPrimitive, InstanceId, SceneRegistry, ZRange};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rgba {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub a: f64,
}

impl Rgba {
    pub const TRANSPARENT: Rgba = Rgba::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Rgba { r, g, b, a }
    }

    pub const fn with_alpha(self, a: f64) -> Self {
        Rgba { a, ..self }
    }
}

/// Display constants: per-kind colors and opacity normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualConfig {
    /// Type colors indexed like [`HapticKind::ALL`]. Alpha is ignored.
    pub palette: [Rgba; 5],
    /// Strength (N) that renders fully opaque, per kind.
    pub strength_ref: [f64; 5],
    /// Reference speed (mm/s) turning damping into a force-valued strength.
    pub speed_ref: f64,
}

impl Default for VisualConfig {
    fn default() -> Self {
        VisualConfig {
            palette: [
                Rgba::new(0.6, 0.6, 0.6, 1.0),
                Rgba::new(0.2, 0.8, 0.2, 1.0),
                Rgba::new(0.2, 0.4, 0.9, 1.0),
                Rgba::new(0.2, 0.8, 0.9, 1.0),
                Rgba::new(0.9, 0.2, 0.8, 1.0),
            ],
            strength_ref: [1.0; 5],
            speed_ref: 100.0,
        }
    }
}

impl VisualConfig {
    pub fn color(&self, kind: HapticKind) -> Rgba {
        self.palette[kind.index()]
    }

    /// Largest force magnitude (N) the instance can put out, as displayed.
    pub fn strength(&self, p: &HapticPrimitive) -> f64 {
        match p.params {
            HapticParams::Monoforce { force } => libm::fabs(force),
            HapticParams::LinearRamp {
                force_base,
                force_range,
            } => libm::fmax(libm::fabs(force_base), libm::fabs(force_base + force_range)),
            HapticParams::Dashpot { damping } | HapticParams::DirectionalDashpot { damping, .. } => {
                damping * self.speed_ref
            }
            // A stopped wave holds whatever level its phase left it at.
            HapticParams::ForceWave { freq: 0.0, amp } => libm::fabs(amp * libm::sin(p.phase)),
            HapticParams::ForceWave { amp, .. } => libm::fabs(amp),
        }
    }

    /// Opacity in `[0, 1]`; exactly 0 when the instance can only output 0 N.
    pub fn opacity_of(&self, p: &HapticPrimitive) -> f64 {
        let reference = self.strength_ref[p.kind().index()];
        (self.strength(p) / reference).clamp(0.0, 1.0)
    }
}

/// Combines overlapping instances: rgb is the opacity-weighted mean of the
/// contributor colors, alpha is the largest contributor opacity.
///
/// When every opacity is zero the unweighted mean color is returned, fully
/// transparent. An empty list gives [`Rgba::TRANSPARENT`].
pub fn blend(contributors: &[Rgba]) -> Rgba {
    if contributors.is_empty() {
        return Rgba::TRANSPARENT;
    }
    let weight_sum: f64 = contributors.iter().map(|c| c.a).sum();
    let alpha = contributors.iter().map(|c| c.a).fold(0.0, f64::max);
    let (mut r, mut g, mut b) = (0.0, 0.0, 0.0);
    if weight_sum > 0.0 {
        for c in contributors {
            let w = c.a / weight_sum;
            r += w * c.r;
            g += w * c.g;
            b += w * c.b;
        }
    } else {
        let w = 1.0 / contributors.len() as f64;
        for c in contributors {
            r += w * c.r;
            g += w * c.g;
            b += w * c.b;
        }
    }
    Rgba::new(r.clamp(0.0, 1.0), g.clamp(0.0, 1.0), b.clamp(0.0, 1.0), alpha)
}

/// Maximal z interval with a constant set of covering instances.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockSegment {
    pub z0: f64,
    pub z1: f64,
    pub contributors: Vec<InstanceId>,
    pub color: Rgba,
}

/// Input to [`partition_segments`]: one visible instance with its type color
/// and current opacity folded into `color.a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub id: InstanceId,
    pub range: ZRange,
    pub color: Rgba,
}

/// Splits the union of block ranges at every distinct endpoint and blends
/// each covered piece. Zero-size ranges have no extent and produce nothing.
pub fn partition_segments(blocks: &[Block]) -> Vec<BlockSegment> {
    let mut edges: Vec<f64> = blocks
        .iter()
        .filter(|b| b.range.size() > 0.0)
        .flat_map(|b| [b.range.base(), b.range.top()])
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut segments = Vec::new();
    for pair in edges.windows(2) {
        let (z0, z1) = (pair[0], pair[1]);
        let covering: Vec<&Block> = blocks
            .iter()
            .filter(|b| b.range.size() > 0.0 && b.range.base() <= z0 && z1 <= b.range.top())
            .collect();
        if covering.is_empty() {
            continue;
        }
        let colors: Vec<Rgba> = covering.iter().map(|b| b.color).collect();
        segments.push(BlockSegment {
            z0,
            z1,
            contributors: covering.iter().map(|b| b.id).collect(),
            color: blend(&colors),
        });
    }
    segments
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignEntry {
    pub id: InstanceId,
    pub symbol: String,
    pub lit: bool,
}

/// One entry per instance in iteration order, lit while `z` is in range.
pub fn sign_grid<'a>(instances: impl IntoIterator<Item = &'a HapticPrimitive>, z: f64) -> Vec<SignEntry> {
    instances
        .into_iter()
        .map(|p| SignEntry {
            id: p.id,
            symbol: p.kind().symbol().to_string(),
            lit: p.range.contains(z),
        })
        .collect()
}

/// Renderable snapshot of one tick.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Frame {
    pub t: f64,
    pub cursor_z: f64,
    pub segments: Vec<BlockSegment>,
    pub signs: Vec<SignEntry>,
    pub total_force: f64,
}

/// Composes the frame for the visible instances of `registry`.
pub fn make_frame(
    registry: &SceneRegistry,
    s: &FingertipState,
    force: &ForceSample,
    cfg: &VisualConfig,
) -> Frame {
    let visible = || registry.haptics().filter(|p| !p.hidden);
    let blocks: Vec<Block> = visible()
        .map(|p| Block {
            id: p.id,
            range: p.range,
            color: cfg.color(p.kind()).with_alpha(cfg.opacity_of(p)),
        })
        .collect();
    Frame {
        t: s.t,
        cursor_z: s.z,
        segments: partition_segments(&blocks),
        signs: sign_grid(visible(), s.z),
        total_force: force.total,
    }
}
