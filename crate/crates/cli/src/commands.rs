use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::json;
use symcount_core::arith::{format_rational, rational_to_f64};
use symcount_core::enumerate::{integral_points_with, primitive_filter, EnumOptions};
use symcount_core::experiments::{
    counting_experiment, denominator_experiment, equidist_experiment, fmt_f64, well_rounded_check, BallFamily,
    EquidistParams, Summary,
};
use symcount_core::fit::fit_power_log;
use symcount_core::volumes_arch::{fit_volume_growth, tail_integral, volume_grid};
use symcount_core::volumes_padic::{
    default_k_max, doubling_check, local_density, multi_prime_ball_volumes, padic_ball_volume, padic_sphere_volume,
    series_csv, sphere_series, structure_fit, to_f64_series,
};
use symcount_core::PlaceSet;

use crate::args::{parse_places, parse_regions, patch_box, Format, OutputArgs, ReportArgs};
use crate::{Command, UsageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PadicMode {
    /// Local density at level m.
    Density,
    /// Volume of the sphere |z|_p = p^j.
    Sphere,
    /// Volume of the ball |z|_p <= p^j.
    Ball,
    /// Sphere volumes from the smallest nonempty index up to j.
    Series,
    /// Periodic fit of the sphere series.
    Structure,
    /// Volumes of prod |z|_p <= T over several primes.
    MultiBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Norm,
    Height,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn json_text<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Table output: CSV, pretty JSON, or the JSON value split into lines when it is an array.
fn emit<T: serde::Serialize>(out: &OutputArgs, csv: impl FnOnce() -> String, value: &T) -> Result<()> {
    let text = match out.format {
        Format::Csv => csv(),
        Format::Json => json_text(value)?,
        Format::Jsonl => match serde_json::to_value(value)? {
            serde_json::Value::Array(items) => {
                let mut s = String::new();
                for item in items {
                    s.push_str(&serde_json::to_string(&item)?);
                    s.push('\n');
                }
                s
            }
            other => serde_json::to_string(&other)? + "\n",
        },
    };
    write_out(out.output.as_deref(), &text)
}

fn emit_report<T: serde::Serialize>(report: &ReportArgs, value: &T, csv: String, long: String, summary: Summary) -> Result<()> {
    if let Some(p) = &report.summary {
        write_out(Some(p), &json_text(&summary)?)?;
    }
    if let Some(p) = &report.long {
        write_out(Some(p), &long)?;
    }
    emit(&report.out, || csv, value)
}

fn places_from(primes: &[u64]) -> Result<PlaceSet> {
    Ok(parse_places(primes)?)
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Enumerate { variety, level, bound, oracle, primitive, out } => {
            let spec = variety.build()?;
            let mut pts = integral_points_with(&spec, level, bound, EnumOptions { oracle })?;
            if primitive {
                pts = primitive_filter(&pts);
            }
            let n = spec.ambient_dim();
            let csv = || {
                let mut s = (0..n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
                s.push('\n');
                for x in &pts {
                    s.push_str(&x.iter().map(i64::to_string).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
                s
            };
            let rows: Vec<_> = pts.iter().map(|x| json!({ "x": x })).collect();
            emit(&out, csv, &rows)
        }
        Command::VolumeArch { variety, level, grid, k0, fit, mc, out } => {
            let spec = variety.build()?;
            let mc = mc.params();
            let rows = match k0 {
                Some(k0) => grid
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| Ok((t, tail_integral(&spec, level, t, k0, &mc.reseeded(i as u64 + 1))?)))
                    .collect::<symcount_core::Result<Vec<_>>>()?,
                None => volume_grid(&spec, level, &grid, &mc)?,
            };
            if fit {
                let f = if k0.is_some() {
                    fit_power_log(&rows.iter().map(|(t, v)| (*t, v.value)).collect::<Vec<_>>())?
                } else {
                    fit_volume_growth(&rows)?
                };
                return write_out(out.output.as_deref(), &json_text(&f)?);
            }
            let csv = || {
                let mut s = String::from("T,value,stderr\n");
                for (t, v) in &rows {
                    let _ = writeln!(s, "{},{},{}", fmt_f64(*t), fmt_f64(v.value), fmt_f64(v.stderr));
                }
                s
            };
            let value: Vec<_> = rows.iter().map(|(t, v)| json!({ "T": t, "volume": v })).collect();
            emit(&out, csv, &value)
        }
        Command::VolumePadic { variety, level, mode, prime, primes, j, grid, k_max, max_period, out } => {
            let spec = variety.build()?;
            if mode == PadicMode::MultiBall {
                let places = places_from(&primes)?;
                if grid.is_empty() {
                    return Err(UsageError("multi-ball needs --grid".into()).into());
                }
                let vols = multi_prime_ball_volumes(&spec, level, &places, &grid, k_max)?;
                let f64s: Vec<(f64, f64)> = vols.iter().map(|(t, v)| (*t as f64, rational_to_f64(v))).collect();
                let doubling = doubling_check(&f64s).ok();
                let csv = || {
                    let mut s = String::from("T,numerator,denominator\n");
                    for (t, v) in &vols {
                        let _ = writeln!(s, "{t},{},{}", v.numer(), v.denom());
                    }
                    s
                };
                let value = json!({
                    "volumes": vols.iter().map(|(t, v)| json!({ "T": t, "value": format_rational(v) })).collect::<Vec<_>>(),
                    "doubling": doubling,
                });
                return emit(&out, csv, &value);
            }
            let p = prime.ok_or_else(|| UsageError("--prime is required for this mode".into()))?;
            let places = places_from(&[p])?;
            let k_max = k_max.unwrap_or_else(|| default_k_max(places.finite_primes()[0]));
            let need_j = || j.ok_or_else(|| UsageError("--j is required for this mode".into()));
            match mode {
                PadicMode::Density => {
                    let rec = local_density(&spec, level, p, k_max)?;
                    let csv = || {
                        let limit = rec.limit.as_ref().map(format_rational).unwrap_or_default();
                        format!(
                            "p,k,count,density,stabilized,limit\n{},{},{},{},{},{}\n",
                            rec.p,
                            rec.k,
                            rec.count,
                            format_rational(&rec.density),
                            rec.stabilized,
                            limit
                        )
                    };
                    emit(&out, csv, &rec)
                }
                PadicMode::Sphere | PadicMode::Ball => {
                    let j = need_j()?;
                    let v = if mode == PadicMode::Sphere {
                        padic_sphere_volume(&spec, level, p, j, k_max)?
                    } else {
                        padic_ball_volume(&spec, level, p, j, k_max)?
                    };
                    let series = [(j, v)];
                    emit(&out, || series_csv(&series), &json!([{ "j": j, "value": format_rational(&series[0].1) }]))
                }
                PadicMode::Series => {
                    let series = sphere_series(&spec, level, p, need_j()?, k_max)?;
                    let value: Vec<_> = series.iter().map(|(j, v)| json!({ "j": j, "value": format_rational(v) })).collect();
                    emit(&out, || series_csv(&series), &value)
                }
                PadicMode::Structure => {
                    let series = sphere_series(&spec, level, p, need_j()?, k_max)?;
                    let fit = structure_fit(&to_f64_series(&series), p, max_period)?;
                    write_out(out.output.as_deref(), &json_text(&fit)?)
                }
                PadicMode::MultiBall => unreachable!(),
            }
        }
        Command::Count { variety, level, primes, grid, mc, report } => {
            let spec = variety.build()?;
            let places = places_from(&primes)?;
            let rep = counting_experiment(&spec, &places, level, &grid, &mc.params())?;
            emit_report(&report, &rep, rep.to_csv(), rep.long_csv(), rep.summary())
        }
        Command::Equidist { variety, primes, levels, regions, patch_radius, min_count, mc, report } => {
            let spec = variety.build()?;
            let places = places_from(&primes)?;
            let regions = parse_regions(&regions, spec.ambient_dim())?;
            let params = EquidistParams { levels, regions, patch_radius, min_count };
            let rep = equidist_experiment(&spec, &places, &params, &mc.params())?;
            emit_report(&report, &rep, rep.to_csv(), rep.long_csv(), rep.summary())
        }
        Command::Denom { variety, prime, n, half_width, regions, min_count, k_max, mc, report } => {
            let spec = variety.build()?;
            let regions = parse_regions(&regions, spec.ambient_dim())?;
            let patch = patch_box(spec.ambient_dim(), half_width)?;
            let rep = denominator_experiment(&spec, prime, &n, &regions, &patch, min_count, k_max, &mc.params())?;
            emit_report(&report, &rep, rep.to_csv(), rep.long_csv(), rep.summary())
        }
        Command::Wellround { variety, level, family, primes, eps, grid, mc, report } => {
            let spec = variety.build()?;
            let family = match family {
                FamilyArg::Norm => {
                    if !primes.is_empty() {
                        return Err(UsageError("--primes only applies to --family height".into()).into());
                    }
                    BallFamily::Norm
                }
                FamilyArg::Height => BallFamily::Height { places: places_from(&primes)? },
            };
            let rep = well_rounded_check(&spec, level, &family, &eps, &grid, &mc.params())?;
            emit_report(&report, &rep, rep.to_csv(), rep.long_csv(), rep.summary(&spec))
        }
        Command::Fit { input, structure, max_period } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let pts = read_pairs(&text)?;
            let out = match structure {
                Some(q) => {
                    let series: Vec<(i64, f64)> = pts.iter().map(|&(x, y)| (x.round() as i64, y)).collect();
                    json_text(&structure_fit(&series, q, max_period)?)?
                }
                None => json_text(&fit_power_log(&pts)?)?,
            };
            write_out(None, &out)
        }
    }
}

/// First two columns of a headed CSV. A `numerator,denominator` pair in columns 2-3 is
/// read as a fraction.
fn read_pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| UsageError(format!("CSV header: {e}")))?.clone();
    let fraction = header.get(1) == Some("numerator") && header.get(2) == Some("denominator");
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| UsageError(format!("CSV: {e}")))?;
        let num = |k: usize| -> Result<f64> {
            record
                .get(k)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| UsageError(format!("line {}: bad column {}", i + 2, k + 1)).into())
        };
        let y = if fraction { num(1)? / num(2)? } else { num(1)? };
        out.push((num(0)?, y));
    }
    Ok(out)
}
