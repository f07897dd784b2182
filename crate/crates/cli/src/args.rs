use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "randers", version, about = "Mean curvature of submanifolds in Randers spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Randomized checks of the mean-curvature formulas against a finite-difference oracle
    Verify(VerifyArgs),
    /// Rotational BH-minimal surfaces in hyperbolic 3-space
    Surface {
        #[command(subcommand)]
        command: SurfaceCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum SurfaceCommand {
    /// Sample a surface, write the mesh and a residual report
    Generate(SurfaceArgs),
    /// Sample one of the special families
    Special(SpecialArgs),
    /// Recompute residual statistics for a surface specification or report
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureChoice {
    Bh,
    Ht,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Obj,
    Csv,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeChoice {
    Spherical,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialKind {
    GeodesicSpherical,
    GeodesicHyperbolic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    pub cases: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Tolerance on the relative deviation between the formula and the oracle
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = MeasureChoice::Both)]
    pub measure: MeasureChoice,
    /// Restrict to codimension p (1 or 2)
    #[arg(long)]
    pub codim: Option<usize>,
    /// Restrict to submanifold dimension n (1 or 2)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SurfaceArgs {
    #[arg(long = "type", value_enum)]
    pub surface_type: Option<TypeChoice>,
    #[arg(long, value_enum)]
    pub special: Option<SpecialKind>,
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub eps1: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub eps2: f64,
    /// Sign of x1 on the closed-form branch
    #[arg(long, value_enum, default_value_t = Branch::Plus)]
    pub branch: Branch,
    /// Sign of the angle integral
    #[arg(long, value_enum, default_value_t = Branch::Plus)]
    pub phi_sign: Branch,
    /// Lower end of the profile parameter (s for closed-form surfaces, t otherwise)
    #[arg(long, allow_negative_numbers = true)]
    pub s_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s_max: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub n_s: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_max: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub n_theta: usize,
    /// Distance kept from the singular values of s
    #[arg(long, default_value_t = 0.01)]
    pub margin: f64,
    /// Constant c of the linear profile
    #[arg(long, allow_negative_numbers = true)]
    pub offset: Option<f64>,
    /// Scale applied to x1 (values other than 1 give a non-minimal surface)
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Measure used for residuals (default bh); only bh residuals are judged
    #[arg(long, value_enum)]
    pub measure: Option<MeasureChoice>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Obj)]
    pub format: Format,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SpecialArgs {
    #[arg(value_enum)]
    pub kind: SpecialKind,
    #[command(flatten)]
    pub surface: SurfaceArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Report written by `surface generate`; its surface section is re-evaluated
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub surface: SurfaceArgs,
}
