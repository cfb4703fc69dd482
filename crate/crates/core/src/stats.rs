//! Small statistics helpers shared by the estimators.

/// Sample mean and standard error of the mean (sample standard deviation over
/// `sqrt(len)`). A single sample has standard error 0.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ordinary least squares `y ≈ intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Standard error of the slope from the residual variance; `NaN` for
    /// two points.
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// Coefficient of determination; 0 when `y` has no variance.
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).max(0.0)
    } else {
        0.0
    };
    let dof = n - 2.0;
    let (slope_stderr, intercept_stderr) = if dof > 0.0 && sxx > 0.0 {
        let s2 = ss_res / dof;
        (
            (s2 / sxx).sqrt(),
            (s2 * (1.0 / n + mx * mx / sxx)).sqrt(),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    LinearFit {
        intercept,
        slope,
        slope_stderr,
        intercept_stderr,
        r_squared,
    }
}

/// Linearly spaced points including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 0.5 * t).collect();
        let fit = linear_fit(&x, &y);
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 2.0).abs() < 1e-14);
        assert!(fit.slope_stderr < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stderr_of_constant_samples_is_zero() {
        let (m, s) = mean_stderr(&[1.5; 10]);
        assert_eq!(m, 1.5);
        assert_eq!(s, 0.0);
    }
}
