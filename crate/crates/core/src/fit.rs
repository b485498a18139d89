//! Leading-term fits of growth laws `v ~ c T^a (log T)^b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest log-power tried by the fits.
pub const MAX_LOG_POWER: u32 = 4;

/// Fitted leading term `c * T^a * (log T)^b` (or `c * q^{a j} * j^b` for p-adic series).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub a: f64,
    pub b: u32,
    pub c: f64,
    /// Root-mean-square residual of the fitted logarithms.
    pub residual_rms: f64,
    #[serde(skip)]
    pub grid: Vec<(f64, f64)>,
}

/// Ordinary least squares `y ≈ intercept + slope * x`; returns `(intercept, slope, rms)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InsufficientData(format!("linear fit needs >= 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("linear fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Ok((intercept, slope, rms))
}

/// Fits `log v = log c + a log T + b log log T` with `b` an integer in
/// `0..=MAX_LOG_POWER`, keeping the `b` with the smallest residual.
///
/// Requires at least six points, strictly increasing `T > 0` and `v > 0`.
pub fn fit_power_log(grid: &[(f64, f64)]) -> Result<AsymptoticFit> {
    if grid.len() < 6 {
        return Err(Error::InsufficientData(format!("need >= 6 grid points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::InvalidArgument("grid abscissae must be strictly increasing".into()));
    }
    if grid.iter().any(|&(t, v)| !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite())) {
        return Err(Error::InvalidArgument("grid values must be positive and finite".into()));
    }
    let log_t: Vec<f64> = grid.iter().map(|&(t, _)| t.ln()).collect();
    let log_v: Vec<f64> = grid.iter().map(|&(_, v)| v.ln()).collect();
    let allow_log = grid[0].0 > 1.0;
    let mut best: Option<AsymptoticFit> = None;
    for b in 0..=MAX_LOG_POWER {
        if b > 0 && !allow_log {
            break;
        }
        let ys: Vec<f64> = log_v
            .iter()
            .zip(&log_t)
            .map(|(lv, lt)| lv - b as f64 * lt.ln())
            .collect();
        let (intercept, a, rms) = linear_fit(&log_t, &ys)?;
        if best.as_ref().is_none_or(|f| rms < f.residual_rms) {
            best = Some(AsymptoticFit { a, b, c: intercept.exp(), residual_rms: rms, grid: grid.to_vec() });
        }
    }
    Ok(best.expect("b = 0 is always tried"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    #[test]
    fn exact_power_law() {
        let grid: Vec<(f64, f64)> = log_grid(10.0, 1e4, 12).into_iter().map(|t| (t, 5.0 * t * t)).collect();
        let fit = fit_power_log(&grid).unwrap();
        assert_eq!(fit.b, 0);
        assert!((fit.a - 2.0).abs() < 1e-6 && (fit.c - 5.0).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn power_times_log() {
        let grid: Vec<(f64, f64)> = log_grid(10.0, 1e4, 12).into_iter().map(|t| (t, t * t.ln())).collect();
        let fit = fit_power_log(&grid).unwrap();
        assert_eq!(fit.b, 1);
        assert!((fit.a - 1.0).abs() < 1e-6 && (fit.c - 1.0).abs() < 1e-6, "{fit:?}");
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn rejects_bad_grids() {
        let short: Vec<(f64, f64)> = (1..6).map(|t| (t as f64, 1.0)).collect();
        assert!(fit_power_log(&short).is_err());
        let mut grid: Vec<(f64, f64)> = (2..9).map(|t| (t as f64, t as f64)).collect();
        grid[3].0 = 1.0;
        assert!(fit_power_log(&grid).is_err());
        let mut grid: Vec<(f64, f64)> = (2..9).map(|t| (t as f64, t as f64)).collect();
        grid[2].1 = 0.0;
        assert!(fit_power_log(&grid).is_err());
    }

    #[test]
    fn fit_record_serializes_without_grid() {
        let fit = AsymptoticFit { a: 2.0, b: 0, c: 3.0, residual_rms: 0.0, grid: vec![(1.0, 1.0)] };
        let v = serde_json::to_value(&fit).unwrap();
        assert_eq!(v, serde_json::json!({"a": 2.0, "b": 0, "c": 3.0, "residual_rms": 0.0}));
    }
}
