use crate::error::{Error, Result};

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let (_, _, sxx, syy, sxy) = moments(x, y)?;
    if negligible(sxx, x) || negligible(syy, y) {
        return Err(Error::Undefined(
            "correlation with a zero-variance series".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub pearson: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let (mx, my, sxx, syy, sxy) = moments(x, y)?;
    if negligible(sxx, x) {
        return Err(Error::Undefined("regression on a constant regressor".into()));
    }
    let slope = sxy / sxx;
    let pearson = if !negligible(syy, y) {
        (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        pearson,
    })
}

/// Centered sum of squares indistinguishable from rounding of the mean.
fn negligible(ss: f64, v: &[f64]) -> bool {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    ss <= v.len() as f64 * (4.0 * f64::EPSILON * scale).powi(2)
}

/// Means and centered second moments (two-pass).
fn moments(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::param(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::State("need at least two observations".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Ok((mx, my, sxx, syy, sxy))
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Linear-interpolated quantile of a sorted slice, `p ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlations() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &z).unwrap() + 1.0).abs() < 1e-15);
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14);
        assert!((fit.intercept - 1.0).abs() < 1e-13);
    }

    #[test]
    fn ten_point_table() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        let y = [2.3, 1.9, 4.4, 3.8, 6.1, 5.2, 7.9, 8.4, 7.7, 10.6];
        // Independent evaluation of the raw-sums formula.
        let n = 10.0;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let oracle = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        assert!((pearson(&x, &y).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_undefined() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Undefined(_))
        ));
        let c = [7f64.ln(); 20];
        let r: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(matches!(pearson(&c, &r), Err(Error::Undefined(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&s, 0.0), 0.0);
        assert_eq!(quantile_sorted(&s, 1.0), 3.0);
        assert!((quantile_sorted(&s, 0.5) - 1.5).abs() < 1e-15);
    }
}
