//! CSV and JSON export of recordings.
//!
//! Numbers are written with 9 significant digits in plain decimal notation,
//! independent of locale. Files are written to a temporary name first and
//! renamed into place.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ghostfinger_core::InstanceId;

use crate::error::RunError;
use crate::recording::Recording;

pub const RECORDING_FILE: &str = "recording.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const DOFS_FILE: &str = "dofs.csv";
pub const FRAMES_FILE: &str = "frames.json";

/// Formats `x` with 9 significant digits, without exponent and without
/// trailing zeros. Negative zero prints as `0`.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = exp + 1;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(trimmed);
    }
    out
}

/// `x` rounded to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().expect("round trip")
}

/// Every haptic instance that produced a force, ascending id.
pub fn instance_columns(rec: &Recording) -> Vec<InstanceId> {
    let mut ids: Vec<InstanceId> = rec
        .records
        .iter()
        .flat_map(|r| r.forces.iter().map(|(id, _)| *id))
        .collect();
    ids.sort();
    ids.dedup();
    ids
}

/// The main telemetry table. Per-instance cells are empty while the instance
/// is not live.
pub fn recording_csv(rec: &Recording) -> String {
    let ids = instance_columns(rec);
    let mut out = String::from("t_s,z_mm,v_mm_s,force_N");
    for id in &ids {
        let _ = write!(out, ",f_{id}_N");
    }
    out.push('\n');
    for r in &rec.records {
        let live: BTreeMap<InstanceId, f64> = r.forces.iter().copied().collect();
        let _ = write!(
            out,
            "{},{},{},{}",
            fmt_sig9(r.t),
            fmt_sig9(r.z),
            fmt_sig9(r.v),
            fmt_sig9(r.force)
        );
        for id in &ids {
            out.push(',');
            if let Some(f) = live.get(id) {
                out.push_str(&fmt_sig9(*f));
            }
        }
        out.push('\n');
    }
    out
}

pub fn events_csv(rec: &Recording) -> String {
    let mut out = String::from("t_s,dof_id,kind,speed_mm_s\n");
    for e in rec.events() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_sig9(e.t),
            e.id,
            e.kind.name(),
            fmt_sig9(e.speed)
        );
    }
    out
}

/// Continuous DOF values in long form, one row per sample.
pub fn dofs_csv(rec: &Recording) -> String {
    let mut out = String::from("t_s,dof_id,kind,value\n");
    for r in &rec.records {
        for s in &r.dofs {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_sig9(r.t),
                s.id,
                s.kind.name(),
                fmt_sig9(s.value)
            );
        }
    }
    out
}

fn round_numbers(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = serde_json::Number::from_f64(round_sig9(x)) {
                    *n = r;
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_numbers),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// The frame stream as a JSON array, numbers rounded to 9 significant digits.
pub fn frames_json(rec: &Recording) -> String {
    let mut value = serde_json::to_value(&rec.frames).expect("frames serialize");
    round_numbers(&mut value);
    let mut text = serde_json::to_string(&value).expect("json value serializes");
    text.push('\n');
    text
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| RunError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| RunError::io(path, e))
}

/// Writes the CSV files, and `frames.json` when `frames` is set, into `dir`.
/// Returns the paths written.
pub fn export(rec: &Recording, dir: &Path, frames: bool) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let mut files = vec![
        (RECORDING_FILE, recording_csv(rec)),
        (EVENTS_FILE, events_csv(rec)),
        (DOFS_FILE, dofs_csv(rec)),
    ];
    if frames {
        files.push((FRAMES_FILE, frames_json(rec)));
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        write_atomic(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}
