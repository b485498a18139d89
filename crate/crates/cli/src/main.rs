//! `symcount`: enumerate points on symmetric varieties and run the counting,
//! equidistribution and volume experiments from the command line.

mod args;
mod commands;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use args::{McArgs, OutputArgs, ReportArgs, VarietyArgs};

/// Invalid flag combinations and values caught after clap; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "symcount", version, about = "Integral and S-integral points on symmetric varieties")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List integral points with f(x) = m and |x|_inf <= bound.
    Enumerate {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long, default_value = "1", value_parser = args::parse_level, allow_negative_numbers = true)]
        level: symcount_core::Level,
        #[arg(long)]
        bound: u64,
        /// Scan the full box instead of pruning.
        #[arg(long)]
        oracle: bool,
        /// Keep only primitive points.
        #[arg(long)]
        primitive: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Real (Gelfand-Leray) volumes of |x| <= T on V_m(R).
    VolumeArch {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long, default_value = "1", value_parser = args::parse_level, allow_negative_numbers = true)]
        level: symcount_core::Level,
        /// Radii, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Integrate |x|^{-k0} over |x| >= T instead of the ball volume.
        #[arg(long)]
        k0: Option<f64>,
        /// Also fit c T^a (log T)^b to the grid.
        #[arg(long)]
        fit: bool,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Local densities and p-adic sphere and ball volumes.
    VolumePadic {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long, default_value = "1", value_parser = args::parse_level, allow_negative_numbers = true)]
        level: symcount_core::Level,
        #[arg(long, value_enum, default_value_t = commands::PadicMode::Density)]
        mode: commands::PadicMode,
        /// Prime for the single-prime modes.
        #[arg(long)]
        prime: Option<u64>,
        /// Primes for `multi-ball`.
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u64>,
        /// Sphere/ball index, or the last index of a series.
        #[arg(long, allow_negative_numbers = true)]
        j: Option<i64>,
        /// Height thresholds for `multi-ball`.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<u64>,
        #[arg(long)]
        k_max: Option<u32>,
        /// Largest period tried by `structure`.
        #[arg(long, default_value_t = 4)]
        max_period: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Count S-integral points of height below T and compare with the volume.
    Count {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long, default_value = "1", value_parser = args::parse_level, allow_negative_numbers = true)]
        level: symcount_core::Level,
        /// Finite primes of S (empty for S = {inf}).
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<u64>,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Region frequencies of projected points of V_m for growing m.
    Equidist {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<i64>,
        /// `octants`, `halfspace:<coord>:<offset>` or `@regions.json`.
        #[arg(long, default_value = "octants")]
        regions: String,
        #[arg(long)]
        patch_radius: Option<f64>,
        #[arg(long, default_value_t = symcount_core::experiments::equidist::DEFAULT_MIN_COUNT)]
        min_count: u64,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Region frequencies of V_1 points with denominator dividing p^n inside a box.
    Denom {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long)]
        prime: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        /// Half-width of the cube patch.
        #[arg(long = "box", default_value_t = 1.0)]
        half_width: f64,
        #[arg(long, default_value = "halfspace:0:0")]
        regions: String,
        #[arg(long, default_value_t = symcount_core::experiments::equidist::DEFAULT_MIN_COUNT)]
        min_count: u64,
        #[arg(long)]
        k_max: Option<u32>,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Boundary-thickening exponent of norm or height balls.
    Wellround {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long, default_value = "1", value_parser = args::parse_level, allow_negative_numbers = true)]
        level: symcount_core::Level,
        #[arg(long, value_enum, default_value_t = commands::FamilyArg::Norm)]
        family: commands::FamilyArg,
        /// Finite primes of S for `--family height`.
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Fit c T^a (log T)^b, or a periodic p-adic structure, to a two-column CSV.
    Fit {
        /// CSV with a header row; the first two columns are read.
        #[arg(long)]
        input: std::path::PathBuf,
        /// Fit q^{a j} j^b per residue class of j instead.
        #[arg(long)]
        structure: Option<u64>,
        #[arg(long, default_value_t = 4)]
        max_period: u32,
    },
}

fn init_threads() -> Result<(), UsageError> {
    let Ok(v) = std::env::var("SYMCOUNT_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("SYMCOUNT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError(e.to_string()))
}

fn is_usage(err: &anyhow::Error) -> bool {
    use symcount_core::Error as E;
    if err.is::<UsageError>() {
        return true;
    }
    err.chain().any(|c| {
        matches!(
            c.downcast_ref::<E>(),
            Some(
                E::InvalidArgument(_)
                    | E::InvalidPlaces(_)
                    | E::InvalidVariety(_)
                    | E::ZeroLevel
                    | E::DimensionMismatch { .. }
            )
        )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = init_threads().map_err(anyhow::Error::from).and_then(|()| commands::run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
