//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

// Checks are written as `ensure!(x <= tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::{Duration, Instant};

use ghostfinger::core::force::{self, FingertipState};
use ghostfinger::core::script::{self, Command, DiagnosticKind};
use ghostfinger::core::visual::{blend, Rgba};
use ghostfinger::core::{
    Direction, DofKind, HapticKind, HapticParams, HapticPrimitive, InstanceId, IntentTrajectory,
    PrimitiveKind, SceneRegistry, ZRange, INSTANCE_CAP,
};
use ghostfinger::protocol::ServerMsg;
use ghostfinger::raw::{RawCommand, RawSample};
use ghostfinger::server::{self, ServeConfig};
use ghostfinger::session::{LiveCommand, Session, SessionConfig};
use ghostfinger::{demo, export, run, run_with, RunOptions};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(budget: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took > budget {
        return Err(format!("took {took:?}, budget {budget:?}"));
    }
    Ok(took)
}

// ---------------------------------------------------------------------------
// Blending

fn blend_oracle(cs: &[Rgba]) -> (f64, f64, f64, f64) {
    let n = cs.len() as f64;
    let sum_a: f64 = cs.iter().map(|c| c.a).sum();
    let a = cs.iter().map(|c| c.a).fold(0.0, f64::max);
    if sum_a == 0.0 {
        let r = cs.iter().map(|c| c.r).sum::<f64>() / n;
        let g = cs.iter().map(|c| c.g).sum::<f64>() / n;
        let b = cs.iter().map(|c| c.b).sum::<f64>() / n;
        return (r, g, b, a);
    }
    let r = cs.iter().map(|c| c.a * c.r).sum::<f64>() / sum_a;
    let g = cs.iter().map(|c| c.a * c.g).sum::<f64>() / sum_a;
    let b = cs.iter().map(|c| c.a * c.b).sum::<f64>() / sum_a;
    (r, g, b, a)
}

fn blending() -> Outcome {
    let start = Instant::now();
    let red = Rgba::new(1.0, 0.0, 0.0, 1.0);
    let blue = Rgba::new(0.0, 0.0, 1.0, 1.0);
    ensure!(
        blend(&[red]) == red,
        "single contributor changed: {:?}",
        blend(&[red])
    );
    let mix = blend(&[red, blue]);
    ensure!(mix == Rgba::new(0.5, 0.0, 0.5, 1.0), "equal weights gave {mix:?}");
    ensure!(blend(&[blue, red]) == mix, "blend is order dependent");
    let green = Rgba::new(0.2, 0.8, 0.2, 0.7);
    let clear = Rgba::new(0.9, 0.2, 0.8, 0.0);
    let with_clear = blend(&[green, clear]);
    ensure!(
        with_clear == green,
        "transparent overlap changed colour: {with_clear:?}"
    );

    let mut rng = StdRng::seed_from_u64(0xb1e4d);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.gen_range(1..=8);
        let cs: Vec<Rgba> = (0..n)
            .map(|_| {
                let a = if rng.gen_bool(0.15) { 0.0 } else { rng.gen() };
                Rgba::new(rng.gen(), rng.gen(), rng.gen(), a)
            })
            .collect();
        let got = blend(&cs);
        let (r, g, b, a) = blend_oracle(&cs);
        ensure!(got.a == a, "case {case}: alpha {} is not the max {a}", got.a);
        let err = (got.r - r).abs().max((got.g - g).abs()).max((got.b - b).abs());
        worst = worst.max(err);
        ensure!(err <= 1e-12, "case {case}: error {err:e} for {cs:?}");
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("1000 random overlaps, max error {worst:.1e}, {took:.0?}"))
}

// ---------------------------------------------------------------------------
// Superposition and dissipation

fn random_params(rng: &mut StdRng) -> HapticParams {
    match rng.gen_range(0..5) {
        0 => HapticParams::Monoforce {
            force: rng.gen_range(-2.0..2.0),
        },
        1 => HapticParams::LinearRamp {
            force_base: rng.gen_range(-1.0..1.0),
            force_range: rng.gen_range(-1.0..1.0),
        },
        2 => HapticParams::Dashpot {
            damping: rng.gen_range(0.0..0.01),
        },
        3 => HapticParams::DirectionalDashpot {
            damping: rng.gen_range(0.0..0.01),
            direction: if rng.gen() {
                Direction::Upward
            } else {
                Direction::Downward
            },
        },
        _ => HapticParams::ForceWave {
            freq: rng.gen_range(0.0..200.0),
            amp: rng.gen_range(0.0..0.5),
        },
    }
}

/// Force law written out directly from the primitive definitions.
fn force_oracle(p: &HapticPrimitive, z: f64, v: f64) -> f64 {
    let (base, size) = (p.range.base(), p.range.size());
    if z < base || z > base + size {
        return 0.0;
    }
    match p.params {
        HapticParams::Monoforce { force } => force,
        HapticParams::LinearRamp {
            force_base,
            force_range,
        } => force_base + force_range * (z - base) / size,
        HapticParams::Dashpot { damping } => -damping * v,
        HapticParams::DirectionalDashpot { damping, direction } => {
            let along = match direction {
                Direction::Upward => v > 0.0,
                Direction::Downward => v < 0.0,
            };
            if along {
                -damping * v
            } else {
                0.0
            }
        }
        HapticParams::ForceWave { amp, .. } => amp * p.phase.sin(),
    }
}

fn superposition() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut checked = 0usize;
    for scene in 0..500 {
        let mut reg = SceneRegistry::new();
        let n = rng.gen_range(0..=INSTANCE_CAP);
        for _ in 0..n {
            let range = ZRange::new(rng.gen_range(0.0..40.0), rng.gen_range(0.5..20.0)).unwrap();
            reg.spawn_haptic(range, random_params(&mut rng), 0.0)
                .map_err(|e| e.to_string())?;
        }
        for _ in 0..rng.gen_range(0..40) {
            force::advance_phases(&mut reg, 0.001);
        }
        let s = FingertipState::new(rng.gen_range(-5.0..65.0), rng.gen_range(-300.0..300.0), 0.0);
        let sample = force::total_force(&reg, &s).map_err(|e| e.to_string())?;

        let ids: Vec<InstanceId> = reg.haptics().map(|p| p.id).collect();
        let order: Vec<InstanceId> = sample.contributions.iter().map(|(id, _)| *id).collect();
        ensure!(
            order == ids,
            "scene {scene}: contributions not in ascending id order"
        );
        let mut sum = 0.0;
        for (p, (_, f)) in reg.haptics().zip(&sample.contributions) {
            let want = force_oracle(p, s.z, s.v);
            ensure!(
                (f - want).abs() <= 1e-12,
                "scene {scene}: instance {} gave {f}, oracle {want}",
                p.id
            );
            sum += f;
        }
        ensure!(
            sample.total.to_bits() == sum.to_bits(),
            "scene {scene}: total {} differs from the ordered sum {sum}",
            sample.total
        );

        let top = reg.haptics().map(|p| p.range.top()).fold(0.0, f64::max);
        for z in [top + 0.001, -0.001] {
            let outside =
                force::total_force(&reg, &FingertipState::new(z, s.v, 0.0)).map_err(|e| e.to_string())?;
            ensure!(
                outside.total == 0.0 && outside.contributions.iter().all(|(_, f)| *f == 0.0),
                "scene {scene}: {} N outside every range",
                outside.total
            );
        }
        checked += n;
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "500 scenes, {checked} instances, exact ordered sums, {took:.0?}"
    ))
}

fn dissipation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xd155);
    let mut samples = 0usize;
    for config in 0..1000 {
        let range = ZRange::new(rng.gen_range(0.0..30.0), rng.gen_range(0.0..10.0)).unwrap();
        let damping = if config % 10 == 0 {
            0.0
        } else {
            rng.gen_range(0.0..0.05)
        };
        let direction = if rng.gen() {
            Direction::Upward
        } else {
            Direction::Downward
        };
        let mut reg = SceneRegistry::new();
        let plain = reg
            .spawn_haptic(range, HapticParams::Dashpot { damping }, 0.0)
            .unwrap();
        let directional = reg
            .spawn_haptic(
                range,
                HapticParams::DirectionalDashpot { damping, direction },
                0.0,
            )
            .unwrap();
        let z = range.base() + rng.gen::<f64>() * range.size();
        let offset: f64 = rng.gen_range(-1.0..1.0);
        for i in 0..=200 {
            let v = -1000.0 + 10.0 * i as f64 + offset;
            let sample = force::total_force(&reg, &FingertipState::new(z, v, 0.0)).unwrap();
            for id in [plain, directional] {
                let f = sample.contribution(id).unwrap();
                ensure!(
                    f * v <= 0.0,
                    "config {config}: instance {id} injects power {} at v={v}",
                    f * v
                );
            }
            let f = sample.contribution(directional).unwrap();
            if !direction.matches(v) {
                ensure!(
                    f == 0.0,
                    "config {config}: directional dashpot pushes {f} N against v={v}"
                );
            }
            samples += 1;
        }
    }
    Ok(format!(
        "1000 configurations, {samples} velocity samples, F*v <= 0 throughout"
    ))
}

// ---------------------------------------------------------------------------
// DOF oracle

struct Probe {
    name: String,
    kind: DofKind,
    period_ms: f64,
    base: f64,
    threshold: f64,
}

fn dof_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xd0f);
    let rate = 1000.0;
    let mut compared = 0usize;
    let mut events = 0usize;
    let mut touches = 0usize;
    for traj in 0..100 {
        // Waypoints on a 0.5 mm grid, with holds, so thresholds on the same
        // grid get touched exactly.
        let mut t = 0.0;
        let mut z = rng.gen_range(0..=80) as f64 * 0.5;
        let mut points = vec![(0.0, z)];
        for _ in 0..rng.gen_range(2..8) {
            t += rng.gen_range(20..200) as f64 / 1000.0;
            if !rng.gen_bool(0.3) {
                z = rng.gen_range(0..=80) as f64 * 0.5;
            }
            points.push((t, z));
        }
        let duration = t + 0.05;
        let mut probes = Vec::new();
        for i in 0..3 {
            probes.push(Probe {
                name: format!("avg{i}"),
                kind: DofKind::AvgRelPosition,
                period_ms: rng.gen_range(1..120) as f64 + if rng.gen() { 0.5 } else { 0.0 },
                base: rng.gen_range(0.0..20.0),
                threshold: 0.0,
            });
            probes.push(Probe {
                name: format!("dev{i}"),
                kind: DofKind::AvgAbsDev,
                period_ms: rng.gen_range(1..120) as f64,
                base: 0.0,
                threshold: 0.0,
            });
        }
        for i in 0..4 {
            let threshold = if i < 2 {
                points[rng.gen_range(0..points.len())].1
            } else {
                rng.gen_range(0..=80) as f64 * 0.5
            };
            let kind = if i % 2 == 0 {
                DofKind::DownwardPass
            } else {
                DofKind::UpwardPass
            };
            probes.push(Probe {
                name: format!("pass{i}"),
                kind,
                period_ms: 0.0,
                base: 0.0,
                threshold,
            });
        }

        let mut text = format!("rate {rate}\nduration {duration}\nintent");
        for (t, z) in &points {
            text.push_str(&format!(" {t}:{z}"));
        }
        text.push('\n');
        for p in &probes {
            let params = match p.kind {
                DofKind::AvgRelPosition => format!("base={} period={}", p.base, p.period_ms),
                DofKind::AvgAbsDev => format!("period={}", p.period_ms),
                _ => format!("threshold={}", p.threshold),
            };
            text.push_str(&format!("at 0 spawn {} {} {params}\n", p.name, p.kind.name()));
        }
        let parsed = script::check(&text).map_err(|d| format!("trajectory {traj}: {d:?}"))?;
        let rec = run(&parsed, &RunOptions::default()).map_err(|e| e.to_string())?;
        let zs: Vec<f64> = rec.records.iter().map(|r| r.z).collect();

        for (pi, p) in probes.iter().enumerate() {
            let id = InstanceId(pi as u64 + 1);
            match p.kind {
                DofKind::AvgRelPosition | DofKind::AvgAbsDev => {
                    let n = ((p.period_ms / 1000.0 * rate).round() as usize).max(1);
                    for (k, r) in rec.records.iter().enumerate() {
                        let window = &zs[(k + 1).saturating_sub(n)..=k];
                        let mean = window.iter().sum::<f64>() / window.len() as f64;
                        let want = if p.kind == DofKind::AvgRelPosition {
                            mean - p.base
                        } else {
                            window.iter().map(|z| (z - mean).abs()).sum::<f64>() / window.len() as f64
                        };
                        let got = r
                            .dofs
                            .iter()
                            .find(|s| s.id == id)
                            .ok_or_else(|| format!("trajectory {traj}: no sample for {}", p.name))?
                            .value;
                        ensure!(
                            (got - want).abs() <= 1e-9,
                            "trajectory {traj}, {} at tick {k}: {got} vs brute force {want}",
                            p.name
                        );
                        compared += 1;
                    }
                }
                _ => {
                    let th = p.threshold;
                    let mut want = Vec::new();
                    for k in 1..zs.len() {
                        let (prev, z) = (zs[k - 1], zs[k]);
                        let fired = match p.kind {
                            DofKind::DownwardPass => prev > th && z <= th,
                            _ => prev < th && z >= th,
                        };
                        if fired {
                            want.push(k);
                            if z == th {
                                touches += 1;
                            }
                        }
                    }
                    let got: Vec<usize> = rec
                        .events()
                        .filter(|e| e.id == id)
                        .map(|e| (e.t * rate).round() as usize)
                        .collect();
                    ensure!(
                        got == want,
                        "trajectory {traj}, {} (threshold {th}): events at ticks {got:?}, brute force {want:?}",
                        p.name
                    );
                    events += want.len();
                }
            }
        }
    }
    ensure!(touches > 0, "no exact threshold touches were exercised");
    Ok(format!(
        "100 trajectories, {compared} window values within 1e-9, {events} pass events ({touches} exact touches)"
    ))
}

// ---------------------------------------------------------------------------
// Capacity

fn capacity() -> Outcome {
    let mut text = String::from("duration 1\n");
    for i in 0..=INSTANCE_CAP {
        text.push_str(&format!("at 0.25 spawn m{i} monoforce size=10 force=0.1\n"));
    }
    let parsed = script::parse(&text).map_err(|d| format!("{d:?}"))?;
    let diags = script::validate(&parsed);
    ensure!(
        diags.len() == 1 && diags[0].kind == DiagnosticKind::CapacityExceeded,
        "validation gave {diags:?}"
    );
    ensure!(
        diags[0].line == INSTANCE_CAP + 2,
        "diagnostic on line {}",
        diags[0].line
    );
    ensure!(
        diags[0].message.contains("t=0.25"),
        "message lacks the time: {}",
        diags[0].message
    );

    // Live, in-process.
    let mut session = Session::new(SessionConfig::default(), IntentTrajectory::Constant { z: 5.0 })
        .map_err(|e| e.to_string())?;
    for i in 0..=INSTANCE_CAP {
        session.push_live(
            None,
            LiveCommand::Scene(Command::Spawn {
                name: format!("m{i}"),
                kind: PrimitiveKind::Haptic(HapticKind::Monoforce),
                params: vec![],
            }),
        );
    }
    let out = session.tick().map_err(|e| e.to_string())?;
    let rejected: Vec<_> = out.replies.iter().filter(|r| r.outcome.is_err()).collect();
    ensure!(rejected.len() == 1, "{} live spawns rejected", rejected.len());
    let code = rejected[0].outcome.as_ref().unwrap_err().code();
    ensure!(code == "CapacityExceeded", "live rejection code {code}");
    ensure!(
        session.scene().registry.haptic_count() == INSTANCE_CAP,
        "scene changed"
    );
    ensure!(
        session.handle(&format!("m{INSTANCE_CAP}")).is_none(),
        "rejected name is live"
    );

    // Live, over the wire.
    let session = Session::new(SessionConfig::default(), IntentTrajectory::Constant { z: 5.0 })
        .map_err(|e| e.to_string())?;
    let handle = server::start(
        session,
        &ServeConfig {
            port: 0,
            realtime: true,
        },
    )
    .map_err(|e| e.to_string())?;
    let mut ws = common::connect(handle.addr());
    for i in 0..=INSTANCE_CAP {
        common::send(
            &mut ws,
            &format!(
                r#"{{"spawn": {{"name": "w{i}", "kind": "dashpot", "params": {{"size": 40, "damping": 0.001}}}}}}"#
            ),
        );
    }
    let replies = common::replies(&mut ws, INSTANCE_CAP + 1, Duration::from_secs(10));
    drop(ws);
    handle.shutdown();
    ensure!(
        replies.len() == INSTANCE_CAP + 1,
        "got {} replies over the wire",
        replies.len()
    );
    let errors: Vec<_> = replies
        .iter()
        .filter_map(|m| match m {
            ServerMsg::Error { error, .. } => Some(error.as_str()),
            _ => None,
        })
        .collect();
    ensure!(errors == ["CapacityExceeded"], "wire errors {errors:?}");
    ensure!(
        matches!(replies.last(), Some(ServerMsg::Error { .. })),
        "the 161st reply is not the rejection"
    );
    Ok("161st spawn rejected by validation, by the session, and over WebSocket".into())
}

// ---------------------------------------------------------------------------
// Determinism

fn cli_run(script: &Path, out: &Path) -> Result<(), String> {
    let status = Process::new(env!("CARGO_BIN_EXE_ghostfinger"))
        .arg("run")
        .arg(script)
        .arg("--out")
        .arg(out)
        .arg("--frames")
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        status.status.success(),
        "run failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let script = dir.path().join("figure4.gfs");
    fs::write(&script, demo::FIGURE4).map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cli_run(&script, &a)?;
    cli_run(&script, &b)?;
    let mut bytes = 0;
    for name in [
        export::RECORDING_FILE,
        export::EVENTS_FILE,
        export::DOFS_FILE,
        export::FRAMES_FILE,
    ] {
        let x = fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(x == y, "{name} differs between runs");
        bytes += x.len();
    }
    Ok(format!(
        "two CLI runs byte-identical across 4 files ({bytes} bytes)"
    ))
}

// ---------------------------------------------------------------------------
// Descent through a wave into a spring

fn figure4() -> Outcome {
    let start = Instant::now();
    let parsed = script::check(demo::FIGURE4).map_err(|d| format!("{d:?}"))?;
    let rec = run(&parsed, &RunOptions::default()).map_err(|e| e.to_string())?;
    ensure!(rec.config.rate == 1000.0, "rate {}", rec.config.rate);

    let param = |name: &str, key: &str| -> f64 {
        parsed
            .commands
            .iter()
            .find_map(|c| match &c.command {
                Command::Spawn { name: n, params, .. } if n == name => {
                    params.iter().find(|(k, _)| k.as_str() == key).map(|(_, v)| *v)
                }
                _ => None,
            })
            .unwrap_or(0.0)
    };
    let (w_base, w_size, freq, amp) = (
        param("wave", "base"),
        param("wave", "size"),
        param("wave", "freq"),
        param("wave", "amp"),
    );
    let (r_base, r_size, r_range) = (
        param("spring", "base"),
        param("spring", "size"),
        param("spring", "force_range"),
    );
    let wave_top = w_base + w_size;
    let ramp_top = r_base + r_size;
    let wave_oracle = |k: usize| amp * (std::f64::consts::TAU * freq * k as f64 / rec.config.rate).sin();

    // (a) nothing before the first range.
    let above: Vec<_> = rec.records.iter().filter(|r| r.z > wave_top).collect();
    ensure!(!above.is_empty(), "trajectory never starts above the scene");
    ensure!(
        above.iter().all(|r| r.force == 0.0),
        "(a) force before entering any range"
    );

    // (b) wave-only region: bounded, zero mean over whole periods.
    let wave_only: Vec<usize> = (0..rec.records.len())
        .filter(|&k| rec.records[k].z > ramp_top && rec.records[k].z <= wave_top)
        .collect();
    let per_period = (rec.config.rate / freq).round() as usize;
    let whole = wave_only.len() / per_period * per_period;
    ensure!(
        whole >= per_period,
        "(b) wave-only region shorter than one period"
    );
    let forces: Vec<f64> = wave_only[..whole].iter().map(|&k| rec.records[k].force).collect();
    let peak = forces.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    ensure!(peak <= amp * (1.0 + 1e-12), "(b) |force| {peak} exceeds A={amp}");
    ensure!(peak >= 0.9 * amp, "(b) no oscillation, peak {peak}");
    let mean = forces.iter().sum::<f64>() / forces.len() as f64;
    ensure!(
        mean.abs() <= 1e-3 * amp,
        "(b) mean {mean} over {} periods",
        whole / per_period
    );

    // (c) overlap: force minus the wave oracle is the spring, linear in depth.
    let overlap: Vec<usize> = (0..rec.records.len())
        .filter(|&k| rec.records[k].z >= w_base && rec.records[k].z <= ramp_top)
        .collect();
    ensure!(overlap.len() > 10, "(c) overlap region too short");
    let want_slope = r_range / r_size;
    let mut worst: f64 = 0.0;
    let residual = |k: usize| rec.records[k].force - wave_oracle(k);
    for pair in overlap.windows(2) {
        let (k0, k1) = (pair[0], pair[1]);
        let dz = rec.records[k1].z - rec.records[k0].z;
        if dz.abs() < 1e-9 {
            continue;
        }
        let slope = (residual(k1) - residual(k0)) / dz;
        worst = worst.max((slope - want_slope).abs());
        ensure!(
            (residual(k1) - residual(k0)) * dz.signum() * want_slope.signum() >= 0.0,
            "(c) spring term not monotone between ticks {k0} and {k1}"
        );
    }
    ensure!(worst <= 1e-6, "(c) slope error {worst:e} N/mm");

    // (d) sign grid per region, at the frames nearest t1..t4.
    let wave = InstanceId(1);
    let spring = InstanceId(2);
    let lit_at = |t: f64| -> Vec<InstanceId> {
        let frame = rec
            .frames
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("frames");
        frame.signs.iter().filter(|s| s.lit).map(|s| s.id).collect()
    };
    for (label, t, want) in [
        ("t1", 0.2, vec![]),
        ("t2", 0.6, vec![]),
        ("t3", 0.75, vec![wave]),
        ("t4", 1.15, vec![wave, spring]),
    ] {
        let got = lit_at(t);
        ensure!(got == want, "(d) lit at {label}: {got:?}, expected {want:?}");
    }
    let middle = rec.frames[0]
        .segments
        .iter()
        .filter(|s| s.contributors.len() == 2)
        .count();
    ensure!(
        rec.frames[0].segments.len() == 3 && middle == 1,
        "overlap does not yield three bands"
    );
    let took = within(Duration::from_secs(2), start)?;
    Ok(format!(
        "(a) silent above, (b) {} periods mean {mean:.1e} N, (c) slope error {worst:.1e} N/mm, (d) lit sets match, {took:.0?}",
        whole / per_period
    ))
}

// ---------------------------------------------------------------------------
// Raw channel

fn wrapper() -> Outcome {
    let damping = 0.004;
    let base = "duration 2\nintent sine center=20 amplitude=12 freq=1.5\n";
    let native = script::check(&format!(
        "{base}at 0 spawn d dashpot base=0 size=40 damping={damping}\n"
    ))
    .map_err(|d| format!("{d:?}"))?;
    let bare = script::check(base).map_err(|d| format!("{d:?}"))?;
    let native = run(&native, &RunOptions::default()).map_err(|e| e.to_string())?;
    let echo = move |s: &RawSample| {
        Some(RawCommand {
            tick: s.tick,
            force: -damping * s.v,
        })
    };
    let wrapped = run_with(&bare, &RunOptions::default(), Some(Box::new(echo))).map_err(|e| e.to_string())?;

    let n = native.records.len();
    ensure!(wrapped.records.len() == n, "record counts differ");
    let err_at = |lag: usize| {
        (0..n - lag)
            .map(|k| (wrapped.records[k + lag].force - native.records[k].force).abs())
            .fold(0.0f64, f64::max)
    };
    let (unshifted, shifted) = (err_at(0), err_at(1));
    ensure!(
        wrapped.records[0].force == 0.0,
        "wrapper produced force before any command"
    );
    ensure!(shifted <= 1e-9, "after a one-tick shift max |dF| = {shifted:e} N");
    ensure!(unshifted > shifted, "lag is not one tick");
    Ok(format!(
        "max |dF| {shifted:.1e} N after one-tick shift ({unshifted:.1e} N unshifted)"
    ))
}

// ---------------------------------------------------------------------------
// Parser corpus

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

/// `# expect: ok` or one `# expect: <Kind> <line>:<col>` per diagnostic.
fn expectations(text: &str) -> Vec<(String, usize, usize)> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# expect: "))
        .filter(|e| e.trim() != "ok")
        .map(|e| {
            let (kind, pos) = e.trim().split_once(' ').expect("kind and position");
            let (line, col) = pos.split_once(':').expect("line:col");
            (kind.to_string(), line.parse().unwrap(), col.parse().unwrap())
        })
        .collect()
}

fn diagnose(text: &str) -> Vec<(String, usize, usize)> {
    let diags = match script::parse(text) {
        Ok(s) => script::validate(&s),
        Err(d) => d,
    };
    diags
        .iter()
        .map(|d| (d.kind.name().to_string(), d.line, d.col))
        .collect()
}

fn parser() -> Outcome {
    let mut files: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "gfs"))
        .collect();
    files.sort();
    ensure!(files.len() >= 20, "corpus has {} scripts", files.len());

    let mut classes = std::collections::BTreeSet::new();
    let (mut valid, mut round_trips, mut located) = (0, 0, 0);
    for path in &files {
        let name = path.file_name().unwrap().to_string_lossy();
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        let want = expectations(&text);
        let got = diagnose(&text);
        ensure!(got == want, "{name}: diagnostics {got:?}, expected {want:?}");
        if want.is_empty() {
            valid += 1;
        }

        if let Ok(parsed) = script::parse(&text) {
            let printed = parsed.to_string();
            let reparsed =
                script::parse(&printed).map_err(|d| format!("{name}: printed form fails: {d:?}"))?;
            ensure!(reparsed == parsed, "{name}: round trip changed the script");
            ensure!(
                reparsed.to_string() == printed,
                "{name}: printing is not a fixpoint"
            );
            round_trips += 1;
        }

        for (kind, line, _) in &want {
            classes.insert(kind.clone());
            if kind == DiagnosticKind::MissingDuration.name() {
                continue;
            }
            let without: Vec<&str> = text
                .lines()
                .enumerate()
                .filter(|(i, _)| i + 1 != *line)
                .map(|(_, l)| l)
                .collect();
            let count = |d: &[(String, usize, usize)]| d.iter().filter(|(k, _, _)| k == kind).count();
            let after = diagnose(&(without.join("\n") + "\n"));
            ensure!(
                count(&after) < count(&got),
                "{name}: removing line {line} does not remove its {kind}"
            );
            located += 1;
        }
    }
    let all = [
        "SyntaxError",
        "UnknownKind",
        "UnknownKey",
        "DuplicateKey",
        "DuplicateHeader",
        "MissingDuration",
        "InvalidHeader",
        "InvalidTime",
        "NonMonotoneTime",
        "AfterDuration",
        "UnknownName",
        "DuplicateName",
        "InvalidParam",
        "CapacityExceeded",
    ];
    let missing: Vec<_> = all.iter().filter(|k| !classes.contains(**k)).collect();
    ensure!(missing.is_empty(), "corpus lacks diagnostic classes {missing:?}");
    Ok(format!(
        "{} scripts ({valid} valid, {} diagnostic classes), {round_trips} round trips, {located} self-locating checks",
        files.len(),
        classes.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("blending equation", blending),
        ("superposition", superposition),
        ("dissipation", dissipation),
        ("DOF oracle equivalence", dof_oracle),
        ("cap enforcement", capacity),
        ("determinism", determinism),
        ("wave-into-spring descent", figure4),
        ("wrapper equivalence", wrapper),
        ("parser corpus", parser),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", 9 - failed, 9);
    if failed > 0 {
        std::process::exit(1);
    }
}
