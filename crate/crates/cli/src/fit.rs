use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// `max_i |y_i − ŷ_i| / y_i` against the fitted power law.
    pub residual: f64,
}

pub fn fit_slope(points: &[(f64, f64)]) -> LabResult<SlopeFit> {
    if points.len() < 3 {
        return Err(LabError::Fit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some((x, y)) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(LabError::Fit(format!(
            "log-log fit needs positive values, got ({x}, {y})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Fit("abscissae are all equal".into()));
    }
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let residual = points
        .iter()
        .map(|(x, y)| {
            let fitted = (intercept + slope * x.ln()).exp();
            (y - fitted).abs() / y
        })
        .fold(0.0, f64::max);
    Ok(SlopeFit { slope, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let quad: Vec<_> = [0.5, 1.0, 2.0, 4.0].iter().map(|&x| (x, x * x)).collect();
        let f = fit_slope(&quad).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && f.residual < 1e-12);
        let scaled: Vec<_> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&x: &f64| (x, 5.0 * x.powf(1.5)))
            .collect();
        let f = fit_slope(&scaled).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12 && f.residual < 1e-12);
    }

    #[test]
    fn residual_sees_a_kink() {
        let f = fit_slope(&[(1.0, 1.0), (2.0, 4.0), (4.0, 8.0)]).unwrap();
        assert!(f.residual > 0.05);
    }

    #[test]
    fn bad_input_is_refused() {
        assert!(fit_slope(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_slope(&[(-1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
        assert!(fit_slope(&[(2.0, 1.0), (2.0, 3.0), (2.0, 1.0)]).is_err());
    }
}
