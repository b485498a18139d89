use std::path::PathBuf;

use clap::{ArgGroup, Args, ValueEnum};
use symcount_core::enumerate::BoxRegion;
use symcount_core::experiments::regions::{halfspace_pair, orthant_caps};
use symcount_core::experiments::Region;
use symcount_core::volumes_arch::McParams;
use symcount_core::{Level, PlaceSet, VarietySpec};

use crate::UsageError;

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("variety").required(true).args(["form", "matrix", "spec", "detsym", "pfaffian"])))]
pub struct VarietyArgs {
    /// Diagonal quadric, e.g. `1,1,1,-1`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub form: Option<Vec<i64>>,
    /// Quadric Gram matrix as JSON, e.g. `[[2,1,0],[1,2,0],[0,0,3]]`.
    #[arg(long)]
    pub matrix: Option<String>,
    /// Variety spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// `±det` on symmetric `N x N` matrices.
    #[arg(long, value_name = "N")]
    pub detsym: Option<usize>,
    /// `±pf` on skew `2N x 2N` matrices.
    #[arg(long, value_name = "N")]
    pub pfaffian: Option<usize>,
    /// Sign for --detsym / --pfaffian.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub sign: i8,
    /// Assert that an indefinite ternary form does not represent 0.
    #[arg(long)]
    pub anisotropic: bool,
}

impl VarietyArgs {
    pub fn build(&self) -> Result<VarietySpec, UsageError> {
        let spec = if let Some(coeffs) = &self.form {
            if self.anisotropic {
                let n = coeffs.len();
                let q = (0..n).map(|i| (0..n).map(|j| if i == j { coeffs[i] } else { 0 }).collect()).collect();
                VarietySpec::quadric_anisotropic(q)
            } else {
                VarietySpec::diagonal(coeffs)
            }
        } else if let Some(json) = &self.matrix {
            let q: Vec<Vec<i64>> = serde_json::from_str(json).map_err(|e| UsageError(format!("--matrix: {e}")))?;
            if self.anisotropic {
                VarietySpec::quadric_anisotropic(q)
            } else {
                VarietySpec::quadric(q)
            }
        } else if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("--spec {}: {e}", path.display())))?;
            return serde_json::from_str(&text).map_err(|e| UsageError(format!("--spec {}: {e}", path.display())));
        } else if let Some(n) = self.detsym {
            VarietySpec::det_sym(n, self.sign)
        } else if let Some(n) = self.pfaffian {
            VarietySpec::pfaffian(n, self.sign)
        } else {
            unreachable!("clap enforces the variety group")
        };
        spec.map_err(|e| UsageError(e.to_string()))
    }
}

pub fn parse_level(s: &str) -> Result<Level, String> {
    let m: i64 = s.parse().map_err(|e| format!("{e}"))?;
    Level::new(m).map_err(|e| e.to_string())
}

pub fn parse_places(primes: &[u64]) -> Result<PlaceSet, UsageError> {
    PlaceSet::new(primes.to_vec()).map_err(|e| UsageError(e.to_string()))
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Monte Carlo samples per volume.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shell half-width (default 0.01 |m|).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

impl McArgs {
    pub fn params(&self) -> McParams {
        McParams { epsilon: self.epsilon, samples: self.samples, seed: self.seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    /// Also write the JSON summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Also write the long-format CSV here.
    #[arg(long)]
    pub long: Option<PathBuf>,
}

/// `octants`, `halfspace:<coord>:<offset>`, or `@file.json` with a list of regions.
pub fn parse_regions(s: &str, dim: usize) -> Result<Vec<Region>, UsageError> {
    if s == "octants" || s == "orthants" {
        return Ok(orthant_caps(dim));
    }
    if let Some(rest) = s.strip_prefix("halfspace:") {
        let (coord, offset) = rest
            .split_once(':')
            .ok_or_else(|| UsageError(format!("expected halfspace:<coord>:<offset>, got {s:?}")))?;
        let coord: usize = coord.parse().map_err(|_| UsageError(format!("bad coordinate in {s:?}")))?;
        let offset: f64 = offset.parse().map_err(|_| UsageError(format!("bad offset in {s:?}")))?;
        if coord >= dim {
            return Err(UsageError(format!("coordinate {coord} out of range for dimension {dim}")));
        }
        let mut normal = vec![0.0; dim];
        normal[coord] = 1.0;
        return Ok(halfspace_pair(normal, offset));
    }
    if let Some(path) = s.strip_prefix('@') {
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("{path}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| UsageError(format!("{path}: {e}")));
    }
    Err(UsageError(format!("unknown region set {s:?}")))
}

pub fn patch_box(dim: usize, half_width: f64) -> Result<BoxRegion, UsageError> {
    if half_width.is_nan() || half_width <= 0.0 {
        return Err(UsageError("--box must be positive".into()));
    }
    Ok(BoxRegion::cube(dim, half_width))
}
