use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghostfinger::core::script::{self, Diagnostic, Script};
use ghostfinger::server::{self, ServeConfig};
use ghostfinger::session::{Session, SessionConfig};
use ghostfinger::{demo, export, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "ghostfinger", version, about = "Hardware-free haptic scene runtime")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a script and export the recording.
    Run {
        script: PathBuf,
        /// Tick rate override (Hz).
        #[arg(long)]
        rate: Option<f64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write frames.json.
        #[arg(long)]
        frames: bool,
    },
    /// Parse and validate a script without running it.
    Check { script: PathBuf },
    /// Serve a live session over WebSocket.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        /// Pace ticks against the wall clock.
        #[arg(long)]
        realtime: bool,
        /// Script to preload.
        script: Option<PathBuf>,
    },
    /// Run a built-in demo scene.
    Demo {
        /// Demo name (figure4).
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the demo script instead of running it.
        #[arg(long)]
        print: bool,
    },
}

fn report(path: &str, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{path}:{d}");
    }
}

fn load(path: &Path) -> Result<(String, Script), RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let script = script::check(&text).map_err(RunError::Diagnostics)?;
    Ok((text, script))
}

fn run_script(script: &Script, rate: Option<f64>, out: &Path, frames: bool) -> Result<(), RunError> {
    let opts = RunOptions {
        rate,
        ..RunOptions::default()
    };
    let rec = ghostfinger::run(script, &opts)?;
    for path in export::export(&rec, out, frames)? {
        println!("wrote {}", path.display());
    }
    let events: Vec<_> = rec.events().collect();
    println!(
        "{} ticks, {} frames, {} events",
        rec.records.len(),
        rec.frames.len(),
        events.len()
    );
    Ok(())
}

fn execute(cmd: Cmd) -> Result<(), (String, RunError)> {
    match cmd {
        Cmd::Run {
            script,
            rate,
            out,
            frames,
        } => {
            let label = script.display().to_string();
            let (_, parsed) = load(&script).map_err(|e| (label.clone(), e))?;
            run_script(&parsed, rate, &out, frames).map_err(|e| (label, e))
        }
        Cmd::Check { script } => {
            let label = script.display().to_string();
            let (_, parsed) = load(&script).map_err(|e| (label.clone(), e))?;
            println!("{label}: ok, {} commands", parsed.commands.len());
            Ok(())
        }
        Cmd::Serve {
            port,
            realtime,
            script,
        } => {
            let label = script
                .as_ref()
                .map_or("serve".into(), |p| p.display().to_string());
            let session = match &script {
                Some(path) => {
                    let (_, parsed) = load(path).map_err(|e| (label.clone(), e))?;
                    let cfg = SessionConfig {
                        duration: None,
                        ..SessionConfig::from_script(&parsed)
                    };
                    Session::from_script(&parsed, cfg)
                }
                None => {
                    let cfg = SessionConfig::default();
                    let hold = ghostfinger::core::IntentTrajectory::Constant { z: cfg.plant.z_max };
                    Session::new(cfg, hold)
                }
            }
            .map_err(|e| (label.clone(), e))?;
            let handle = server::start(session, &ServeConfig { port, realtime })
                .map_err(|e| (label, RunError::Config(e.to_string())))?;
            println!("listening on ws://{}", handle.addr());
            handle.wait();
            Ok(())
        }
        Cmd::Demo { name, out, print } => {
            let Some(text) = demo::lookup(&name) else {
                let names: Vec<_> = demo::DEMOS.iter().map(|(n, _)| *n).collect();
                return Err((
                    name,
                    RunError::Config(format!("unknown demo; available: {}", names.join(", "))),
                ));
            };
            if print {
                print!("{text}");
                return Ok(());
            }
            let parsed = script::check(text).map_err(|d| (name.clone(), RunError::Diagnostics(d)))?;
            let rec = ghostfinger::run(&parsed, &RunOptions::default()).map_err(|e| (name.clone(), e))?;
            for path in export::export(&rec, &out, true).map_err(|e| (name.clone(), e))? {
                println!("wrote {}", path.display());
            }
            for e in rec.events() {
                println!(
                    "t={} {} #{} speed={} mm/s -> {} dB",
                    export::fmt_sig9(e.t),
                    e.kind.name(),
                    e.id,
                    export::fmt_sig9(e.speed),
                    export::fmt_sig9(demo::speed_to_db(e.speed))
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((label, err)) => {
            match &err {
                RunError::Diagnostics(diags) => report(&label, diags),
                other => eprintln!("{label}: {other}"),
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
