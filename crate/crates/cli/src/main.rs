//! `rigidity-lab`: scenario-driven front end for the rigidity laboratory.

mod commands;
mod error;
mod output;
mod scenario;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rigidity_core::Resolution;

use crate::error::CliError;
use crate::scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "rigidity-lab", version, about = "Geodesics, hodographs and rigidity checks for n²·ds² metrics")]
pub struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid as N_x,N_phi,N_s.
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<Resolution>,
    /// Worker threads.
    #[arg(long, global = true, env = "RIGIDITY_LAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace a backward ray to an interior point, a boundary chord, or a fan
    /// of chords.
    Trace {
        /// Scenario file supplying the medium (defaults to `--config`).
        #[arg(long)]
        medium: Option<PathBuf>,
        /// Interior end point `x,y` for a backward trace.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x: Option<[f64; 2]>,
        /// Direction angle (radians, or degrees with a `deg` suffix).
        #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
        phi: Option<f64>,
        /// Trace the chord entering at `--s` instead.
        #[arg(long)]
        chord: bool,
        /// Entry arc length on the boundary.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        /// Rays fanned across the incoming cone at `--s`.
        #[arg(long)]
        fan: Option<usize>,
    },
    /// Boundary travel-time table τ(s, φ).
    Hodograph,
    /// Both sides of the rigidity inequality for a pair of media.
    Verify {
        /// Two scenario files whose `medium` entries form the pair.
        #[arg(long, num_args = 2, value_names = ["CFG_A", "CFG_B"])]
        pair: Option<Vec<PathBuf>>,
    },
    /// X-ray transform, linearized inequality and linearization agreement.
    Xray,
    /// Fan-beam chain rule and parallel-beam form of the right side.
    FanbeamCheck,
    /// Disc weight ∫ dφ/cos²ω: closed form against quadrature.
    DiscExample,
    /// Exit angle from two-point boundary travel times.
    ExitAngle {
        #[arg(long, allow_hyphen_values = true)]
        s_y: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s_x: Option<f64>,
    },
    /// Gauss–Newton recovery of basis coefficients from a synthetic hodograph.
    Reconstruct {
        /// Scenario whose `medium` is the true field.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Scenario giving the base `medium` and `[reconstruct] basis`.
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// φ-derivative identity and bracket bound on random tuples.
    IdentityCheck,
}

/// `N_x,N_phi,N_s`.
fn parse_grid(s: &str) -> Result<Resolution, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [a, b, c] => Ok(Resolution::new(*a, *b, *c)),
        _ => Err(format!("expected N_x,N_phi,N_s, got {s:?}")),
    }
}

/// `x,y`.
fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(format!("expected x,y, got {s:?}")),
    }
}

/// Radians, or degrees with a `deg` or `°` suffix.
fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (body, deg) = if let Some(b) = t.strip_suffix("deg") {
        (b, true)
    } else if let Some(b) = t.strip_suffix('°') {
        (b, true)
    } else {
        (t.strip_suffix("rad").unwrap_or(t), false)
    };
    let v: f64 = body.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok(if deg { v.to_radians() } else { v })
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let scenario = match &cli.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    commands::dispatch(cli, &scenario)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("assertion failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_and_grids() {
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!((parse_angle("90deg").unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((parse_angle("-45°").unwrap() + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(parse_angle("abc").is_err());
        assert_eq!(parse_grid("32,64,256").unwrap(), Resolution::new(32, 64, 256));
        assert!(parse_grid("32,64").is_err());
        assert_eq!(parse_point("-0.2, 0.5").unwrap(), [-0.2, 0.5]);
    }
}
