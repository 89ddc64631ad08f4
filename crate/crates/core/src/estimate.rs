//! Estimating the number of communities from the eigenvalue ratios
//! `|l_i / l_bar|`, where `l_bar` is the mean absolute eigenvalue of `A`.
//!
//! `K_hat` is the largest index whose ratio exceeds a threshold `C_n`; the
//! default threshold is `delta * n^{3/4}` with `delta = 0.03`.

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct KEstimate {
    pub k_hat: usize,
    pub threshold: f64,
    pub mean_abs_eigenvalue: f64,
    /// `|l_i / l_bar|` in spectral order.
    pub ratios: Vec<f64>,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta = {delta} outside (0, 1)")))
    }
}

/// `C_n = delta * n^{3/4}`.
pub fn default_threshold(n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("node count must be positive".into()));
    }
    check_delta(delta)?;
    Ok(delta * (n as f64).powf(0.75))
}

/// Applies the ratio rule to eigenvalues already in spectral order
/// (`|l_1| >= |l_2| >= ...`).
///
/// `k_hat = 0` is a legitimate answer and means no index cleared the threshold.
pub fn estimate_k(eigenvalues: &[f64], threshold: f64) -> KEstimate {
    let n = eigenvalues.len();
    let mean_abs = if n == 0 {
        0.0
    } else {
        eigenvalues.iter().map(|l| l.abs()).sum::<f64>() / n as f64
    };
    let ratios: Vec<f64> = if mean_abs > 0.0 {
        eigenvalues.iter().map(|l| (l / mean_abs).abs()).collect()
    } else {
        vec![0.0; n]
    };
    let k_hat = ratios
        .iter()
        .rposition(|&r| r > threshold)
        .map_or(0, |i| i + 1);
    KEstimate {
        k_hat,
        threshold,
        mean_abs_eigenvalue: mean_abs,
        ratios,
    }
}

/// One estimate per `delta`, each with threshold `delta * n^{3/4}`.
pub fn delta_sweep(eigenvalues: &[f64], n: usize, deltas: &[f64]) -> Result<Vec<(f64, KEstimate)>> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("delta list is empty".into()));
    }
    deltas
        .iter()
        .map(|&d| Ok((d, estimate_k(eigenvalues, default_threshold(n, d)?))))
        .collect()
}

/// Evenly spaced grid `min, min + step, ...` up to and including `max`
/// (within half a step of rounding).
pub fn delta_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || min.is_nan() || max.is_nan() || max < min {
        return Err(Error::InvalidArgument(format!(
            "invalid delta grid min={min} max={max} step={step}"
        )));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| min + step * i as f64).collect();
    for &d in &grid {
        check_delta(d)?;
    }
    Ok(grid)
}
