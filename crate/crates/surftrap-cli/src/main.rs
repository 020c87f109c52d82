//! Command-line front end for the surftrap library.
//!
//! Exit codes: 0 success, 1 domain, parse or usage error, 2 convergence
//! failure, 3 oracle-suite failure.

// Negated comparisons also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod csv;
mod geometry;
mod oracle;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "surftrap", version, about = "Surface-electrode ion trap electrostatics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Potential and gradient of a built-in or file geometry on a grid.
    #[command(allow_negative_numbers = true)]
    Field(FieldArgs),
    /// Ring radii maximizing the trap curvature over a sweep of gap widths.
    #[command(allow_negative_numbers = true)]
    RingOptimize(RingOptimizeArgs),
    /// Ring radii maximizing the trap curvature on a finite grounded disc.
    #[command(allow_negative_numbers = true)]
    RingFiniteOptimize(RingFiniteArgs),
    /// Solve the gap polarization amplitudes of a geometry file.
    #[command(allow_negative_numbers = true)]
    GapSolve(GapSolveArgs),
    /// Compare closed forms with independent quadrature.
    #[command(allow_negative_numbers = true)]
    Oracle(OracleArgs),
    /// Green's function of a pixel on a finite grounded disc on a grid.
    #[command(allow_negative_numbers = true)]
    GreensFinite(GreensArgs),
}

/// Options shared by every command.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Relative tolerance of series truncation.
    #[arg(long, default_value_t = 1e-14)]
    pub series_rel_tol: f64,
    /// Term cap of every series index.
    #[arg(long, default_value_t = 4000)]
    pub series_max_terms: usize,
    /// Absolute and relative quadrature tolerance.
    #[arg(long)]
    pub quad_tol: Option<f64>,
}

/// Grid axis `start:stop:count` (inclusive ends) or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let f = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("invalid number '{p}'"));
        match parts.as_slice() {
            [v] => Ok(Axis(vec![f(v)?])),
            [a, b, n] => {
                let (a, b) = (f(a)?, f(b)?);
                let n: usize = n.trim().parse().map_err(|_| format!("invalid count '{n}'"))?;
                if !(a.is_finite() && b.is_finite()) {
                    return Err("non-finite axis bounds".into());
                }
                Ok(Axis(match n {
                    0 => Vec::new(),
                    1 => vec![a],
                    _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
                }))
            }
            _ => Err(format!("expected start:stop:count or a value, found '{s}'")),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v: Vec<String> = self.0.iter().map(|x| csv::num(*x)).collect();
        write!(f, "[{}]", v.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// Straight gap: interpolation potential across x.
    Gap,
    /// Straight gap: polarization potential across x.
    Pol,
    /// Strip electrode of width w along y.
    Strip,
    /// Ring electrode between R1 and R2 with gaps of width g.
    Ring,
    /// Gapless ring on a grounded disc of radius S.
    RingDisc,
}

#[derive(Args, Debug)]
pub struct FieldArgs {
    #[command(flatten)]
    pub common: Common,
    /// Built-in geometry.
    #[arg(long, value_enum, conflicts_with = "geometry", required_unless_present = "geometry")]
    pub builtin: Option<Builtin>,
    /// Geometry file.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Solve the amplitudes of a geometry file instead of using its amplitude column.
    #[arg(long, requires = "geometry")]
    pub solve: bool,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub x: Axis,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub y: Axis,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub z: Axis,
    /// Gap width.
    #[arg(long, default_value_t = 0.1)]
    pub g: f64,
    /// Strip width between gap centers.
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
    #[arg(long, default_value_t = 0.678)]
    pub r1: f64,
    #[arg(long, default_value_t = 3.68)]
    pub r2: f64,
    /// Grounded disc radius.
    #[arg(long, default_value_t = 10.0)]
    pub s: f64,
    /// Polarization amplitude of the strip (solved when omitted).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Multiplier on solved polarization amplitudes.
    #[arg(long, default_value_t = 1.0)]
    pub susceptibility: f64,
}

#[derive(Args, Debug, Clone, Default)]
pub struct IonArgs {
    /// Ion mass in atomic mass units.
    #[arg(long)]
    pub mass_amu: Option<f64>,
    /// Ion charge in elementary charges.
    #[arg(long, default_value_t = 1.0)]
    pub charge_e: f64,
    /// Rf voltage amplitude in volts.
    #[arg(long)]
    pub urf_volt: Option<f64>,
    /// Rf drive frequency Omega / 2 pi in hertz.
    #[arg(long)]
    pub omega_rf_hz: Option<f64>,
    /// Physical length of one unit of the geometry in metres.
    #[arg(long)]
    pub length_unit_m: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RingOptimizeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trap height.
    #[arg(long, default_value_t = 1.0)]
    pub z: f64,
    /// Gap widths in units of z; default 0, 0.05, ..., 0.5.
    #[arg(long, value_delimiter = ',')]
    pub g_over_z: Option<Vec<f64>>,
    /// Multiplier on solved polarization amplitudes.
    #[arg(long, default_value_t = 1.0)]
    pub susceptibility: f64,
    #[command(flatten)]
    pub ion: IonArgs,
}

#[derive(Args, Debug)]
pub struct RingFiniteArgs {
    #[command(flatten)]
    pub common: Common,
    /// Values of z/S; default 0.02, 0.04, ..., 0.3.
    #[arg(long, value_delimiter = ',')]
    pub z_over_s: Option<Vec<f64>>,
    /// Gap width in units of z for the combined gap and finite-plane estimate.
    #[arg(long, default_value_t = 0.0)]
    pub g_over_z: f64,
    /// Multiplier on solved polarization amplitudes for the gap estimate.
    #[arg(long, default_value_t = 1.0)]
    pub susceptibility: f64,
}

#[derive(Args, Debug)]
pub struct GapSolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Geometry file.
    #[arg(long)]
    pub geometry: PathBuf,
    /// Write the geometry with solved amplitudes here.
    #[arg(long)]
    pub annotated: Option<PathBuf>,
    /// Local-square half-width as a fraction of the gap width.
    #[arg(long, default_value_t = 0.25)]
    pub d_factor: f64,
    /// Samples this many gap widths from another curve are interpolated.
    #[arg(long, default_value_t = 2.0)]
    pub junction_factor: f64,
    /// Multiplier applied to the solved amplitudes.
    #[arg(long, default_value_t = 1.0)]
    pub susceptibility: f64,
    /// Skip the gap-center charge check.
    #[arg(long)]
    pub no_residuals: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Suites to run.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gap-field")]
    pub suite: Vec<oracle::Suite>,
    /// Random points per suite; suite default when omitted.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct GreensArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pixel radius.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Disc radius.
    #[arg(long, default_value_t = 10.0)]
    pub s: f64,
    /// Convergence margin as a fraction of S.
    #[arg(long, default_value_t = surftrap::finiteplane::DEFAULT_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub x: Axis,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub y: Axis,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub z: Axis,
}

/// A failed oracle suite.
#[derive(Debug)]
pub struct OracleFailure(pub String);

impl std::fmt::Display for OracleFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "oracle suites failed: {}", self.0)
    }
}

impl std::error::Error for OracleFailure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<OracleFailure>().is_some() {
        return 3;
    }
    if let Some(lib) = e.downcast_ref::<surftrap::Error>() {
        return if lib.is_convergence() { 2 } else { 1 };
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Field(a) => commands::field(&a),
        Command::RingOptimize(a) => commands::ring_optimize(&a),
        Command::RingFiniteOptimize(a) => commands::ring_finite_optimize(&a),
        Command::GapSolve(a) => commands::gap_solve(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::GreensFinite(a) => commands::greens_finite(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
