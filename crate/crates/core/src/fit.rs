//! Power-law fits of optimum-versus-size data.

use crate::{Error, Result};

/// Result of a least-squares fit of `log y = c + slope·log x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits `log y` against `log x` with ordinary least squares. Requires at least five
/// strictly positive points with at least two distinct abscissae.
pub fn fit_scaling(x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    fit_scaling_min(x, y, 5)
}

/// As [`fit_scaling`] but with a caller-chosen minimum number of points (≥ 3).
pub fn fit_scaling_min(x: &[f64], y: &[f64], min_points: usize) -> Result<ScalingFit> {
    if x.len() != y.len() {
        return Err(Error::DegenerateFit(format!(
            "length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < min_points.max(3) {
        return Err(Error::DegenerateFit(format!(
            "{n} points, need at least {}",
            min_points.max(3)
        )));
    }
    if let Some(bad) = x.iter().chain(y).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateFit(format!("non-positive or non-finite value {bad}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateFit("all abscissae identical".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(ScalingFit {
        exponent: slope,
        stderr,
        intercept,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovered() {
        let x = [10.0, 20.0, 40.0, 80.0, 160.0];
        let y: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
        let f = fit_scaling(&x, &y).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(fit_scaling(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn non_positive_rejected() {
        assert!(fit_scaling(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 0.0, 4.0, 5.0]).is_err());
    }
}
