//! Built-in demo scenes.

/// A fingertip descends at 20 mm/s from z = 36 mm to 6 mm, first into a
/// 40 Hz force wave occupying [18, 30] and then into a linear-ramp spring
/// occupying [6, 24]. The two ranges overlap on [18, 24].
pub const FIGURE4: &str = "\
# Descent through a force wave into an overlapping spring.
rate 1000
duration 2
plant kinematic
intent 0:36 0.4:36 1.9:6 2:6

at 0 spawn wave force_wave base=18 size=12 freq=40 amp=0.2
at 0 spawn spring linear_ramp base=6 size=18 force_base=0.9 force_range=-0.9

at 0 spawn height rel_position base=0
at 0 spawn speed speed
at 0 spawn jitter avg_abs_dev period=50
at 0 spawn tap downward_pass threshold=24
";

/// Names accepted by `demo`.
pub const DEMOS: &[(&str, &str)] = &[("figure4", FIGURE4)];

pub fn lookup(name: &str) -> Option<&'static str> {
    DEMOS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Reference speed for [`speed_to_db`] (mm/s).
pub const SPEED_REF: f64 = 100.0;
/// Floor of [`speed_to_db`] (dB).
pub const DB_FLOOR: f64 = -60.0;

/// Maps a pass speed to a loudness: 0 dB at [`SPEED_REF`], 20 dB per decade,
/// never below [`DB_FLOOR`].
pub fn speed_to_db(speed: f64) -> f64 {
    if speed <= 0.0 {
        return DB_FLOOR;
    }
    (20.0 * (speed / SPEED_REF).log10()).max(DB_FLOOR)
}
