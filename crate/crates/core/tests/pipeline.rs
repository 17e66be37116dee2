use ghostfinger_core::dof::{self, DofEvent};
use ghostfinger_core::force::{self, FingertipState};
use ghostfinger_core::plant::{self, IntentTrajectory, PlantConfig, Waypoint};
use ghostfinger_core::visual::{self, VisualConfig};
use ghostfinger_core::{DofParams, HapticParams, InstanceId, SceneRegistry, ZRange};

fn figure4_scene() -> (SceneRegistry, InstanceId, InstanceId, InstanceId) {
    let mut reg = SceneRegistry::new();
    let wave = reg
        .spawn_haptic(
            ZRange::new(18.0, 12.0).unwrap(),
            HapticParams::ForceWave { freq: 40.0, amp: 0.2 },
            0.0,
        )
        .unwrap();
    let spring = reg
        .spawn_haptic(
            ZRange::new(6.0, 18.0).unwrap(),
            HapticParams::LinearRamp {
                force_base: 0.9,
                force_range: -0.9,
            },
            0.0,
        )
        .unwrap();
    let tap = reg
        .spawn_dof(DofParams::DownwardPass { threshold: 24.0 }, 0.0, 36.0)
        .unwrap();
    (reg, wave, spring, tap)
}

/// Drives the core pieces by hand in tick order and checks that the total
/// is always the sum of single-instance evaluations.
#[test]
fn descent_through_overlap() {
    let (mut reg, wave, spring, tap) = figure4_scene();
    let traj =
        IntentTrajectory::waypoints(vec![Waypoint { t: 0.0, z: 36.0 }, Waypoint { t: 1.5, z: 6.0 }]).unwrap();
    let cfg = PlantConfig::default();
    let dt = 0.001;
    let mut events: Vec<DofEvent> = Vec::new();
    for k in 0..1500 {
        let t = k as f64 * dt;
        let s = plant::step_kinematic(&traj, t, dt, &cfg);
        events.extend(dof::evaluate_all(&mut reg, &s, dt).events);
        let total = force::total_force(&reg, &s).unwrap();
        let w = force::primitive_force(reg.haptic(wave).unwrap(), &s).unwrap();
        let r = force::primitive_force(reg.haptic(spring).unwrap(), &s).unwrap();
        assert_eq!(total.total, w + r, "tick {k}");
        if s.z > 30.0 {
            assert_eq!(total.total, 0.0);
        }
        let frame = visual::make_frame(&reg, &s, &total, &VisualConfig::default());
        let lit: Vec<bool> = frame.signs.iter().map(|x| x.lit).collect();
        assert_eq!(
            lit,
            vec![(18.0..=30.0).contains(&s.z), (6.0..=24.0).contains(&s.z)]
        );
        force::advance_phases(&mut reg, dt);
    }
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].id, tap);
    assert!((events[0].speed - 20.0).abs() < 1e-6);
}

#[test]
fn three_bands_with_blended_middle() {
    let (reg, ..) = figure4_scene();
    let s = FingertipState::new(21.0, 0.0, 0.0);
    let total = force::total_force(&reg, &s).unwrap();
    let frame = visual::make_frame(&reg, &s, &total, &VisualConfig::default());
    let bands: Vec<(f64, f64, usize)> = frame
        .segments
        .iter()
        .map(|b| (b.z0, b.z1, b.contributors.len()))
        .collect();
    assert_eq!(bands, vec![(6.0, 18.0, 1), (18.0, 24.0, 2), (24.0, 30.0, 1)]);
    let middle = frame.segments[1].color;
    let (low, high) = (frame.segments[0].color, frame.segments[2].color);
    assert_eq!(middle.a, low.a.max(high.a));
    for (m, a, b) in [
        (middle.r, low.r, high.r),
        (middle.g, low.g, high.g),
        (middle.b, low.b, high.b),
    ] {
        assert!(m >= a.min(b) - 1e-12 && m <= a.max(b) + 1e-12);
    }
}
