use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "lcasimir",
    version,
    about = "Lateral Casimir force between corrugated plates and spheres, with PFA comparison"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plane-plane observables over a sweep.
    Pp(RunArgs),
    /// Plane-sphere observables over a sweep.
    Ps(RunArgs),
    /// Data behind one of the standard figures.
    Figure(FigureArgs),
    /// Run the built-in reproducibility checks.
    Validate(ValidateArgs),
}

/// Flags shared by `pp` and `ps`; each one overrides the config file.
#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    /// Configuration file (TOML) with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mean separation / closest approach in nm.
    #[arg(long = "L", value_name = "NM")]
    pub l: Option<f64>,
    /// Corrugation wavelength in nm.
    #[arg(long, value_name = "NM")]
    pub lambda_c: Option<f64>,
    /// Plasma wavelength in nm.
    #[arg(long, value_name = "NM")]
    pub lambda_p: Option<f64>,
    /// Use perfect mirrors instead of the plasma model.
    #[arg(long)]
    pub perfect: bool,
    /// Sphere radius in μm.
    #[arg(long, value_name = "UM")]
    pub radius: Option<f64>,
    /// Corrugation amplitude of the first surface in nm.
    #[arg(long, value_name = "NM")]
    pub a1: Option<f64>,
    /// Corrugation amplitude of the second surface in nm.
    #[arg(long, value_name = "NM")]
    pub a2: Option<f64>,
    /// Lateral mismatch between the crests in nm.
    #[arg(long, value_name = "NM")]
    pub b: Option<f64>,
    /// Sweep as `axis:min:max:points` with axis one of kc, L, lambda_c.
    #[arg(long, value_name = "SPEC")]
    pub sweep: Option<String>,
    /// Distance offset in nm for an extra shifted plane-sphere column.
    #[arg(long, value_name = "NM")]
    pub offset: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    pub name: FigureName,
    /// Points per curve.
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Run only these criteria (repeatable).
    #[arg(long = "criterion", value_name = "N")]
    pub criteria: Vec<u8>,
    /// Corrupt the reference constant of criterion N (negative control).
    #[arg(long, value_name = "N")]
    pub corrupt: Option<u8>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
}
