//! Estimators and least-squares fits used to summarise replications.

use serde::Serialize;

use crate::error::{CsmdError, Result};

/// Sample mean and its standard error (`sd / sqrt(n)`; zero for `n < 2`).
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let s = sorted(v);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Median of the means of `k` contiguous blocks (sizes differ by at most 1).
pub fn median_of_means(v: &[f64], k: usize) -> f64 {
    let k = k.clamp(1, v.len().max(1));
    if v.is_empty() {
        return f64::NAN;
    }
    let n = v.len();
    let means: Vec<f64> = (0..k)
        .map(|b| {
            let (lo, hi) = (b * n / k, (b + 1) * n / k);
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    median(&means)
}

/// Mean after dropping `floor(frac * n)` observations from each tail.
pub fn trimmed_mean(v: &[f64], frac: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let s = sorted(v);
    let cut = ((frac * s.len() as f64).floor() as usize).min((s.len() - 1) / 2);
    let kept = &s[cut..s.len() - cut];
    kept.iter().sum::<f64>() / kept.len() as f64
}

/// Empirical `level`-quantile by inverse CDF: the smallest sample `x` with
/// `F_n(x) >= level`.
pub fn quantile(v: &[f64], level: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let s = sorted(v);
    let idx = ((level * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1;
    s[idx]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope x`; `r^2 = 1` when `y` is
/// constant.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(CsmdError::InvalidParameter("need >= 2 paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(CsmdError::InvalidParameter("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Least-squares `y = c0 + c1 u + c2 u^2` with `u = x - mean(x)`; returns
/// `[c0, c1, c2]`. The curvature `c2` is invariant to the centring.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<[f64; 3]> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(CsmdError::InvalidParameter("need >= 3 paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (xi, yi) in x.iter().zip(y) {
        let u = xi - mx;
        let basis = [1.0, u, u * u];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] += basis[r] * basis[c];
            }
            b[r] += basis[r] * yi;
        }
    }
    solve3(a, b).ok_or_else(|| CsmdError::InvalidParameter("degenerate quadratic fit".into()))
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// The `(T, gap)` points that were fitted.
    pub points: Vec<(usize, f64)>,
}

/// Least-squares slope of `ln gap` against `ln T`.
pub fn fit_rate(points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(CsmdError::InvalidParameter(format!(
            "rate fits need >= 4 points, got {}",
            points.len()
        )));
    }
    if let Some((index, &(_, value))) = points.iter().enumerate().find(|(_, p)| !(p.1 > 0.0)) {
        return Err(CsmdError::NonPositiveGap { index, value });
    }
    let x: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let f = linear_fit(&x, &y)?;
    Ok(RateFit {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        points: points.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn powers(c: f64, alpha: f64) -> Vec<(usize, f64)> {
        (6..=14)
            .map(|k| {
                let t = 1usize << k;
                (t, c * (t as f64).powf(alpha))
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let f = fit_rate(&powers(3.0, -0.5)).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let f = fit_rate(&powers(0.1, -1.0)).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_factor_flattens_the_slope() {
        let pts: Vec<(usize, f64)> = (6..=14)
            .map(|k| {
                let t = (1usize << k) as f64;
                (1usize << k, 2.0 * t.ln() / t.sqrt())
            })
            .collect();
        let f = fit_rate(&pts).unwrap();
        // slope of ln T / sqrt(T) is -1/2 plus the slope of ln ln T against ln T
        let x: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
        let y: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let expected = -0.5 + linear_fit(&x, &y).unwrap().slope;
        assert!((f.slope - expected).abs() < 1e-12, "{} vs {expected}", f.slope);
        assert!(f.slope > -0.5);
    }

    #[test]
    fn rejects_non_positive_gaps() {
        let mut p = powers(1.0, -0.5);
        p[2].1 = 0.0;
        assert!(matches!(fit_rate(&p), Err(CsmdError::NonPositiveGap { index: 2, .. })));
        assert!(fit_rate(&p[..3]).is_err());
    }

    #[test]
    fn quadratic_fit_recovers_curvature() {
        let x: Vec<f64> = (0..9).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|u| 1.0 - 0.5 * u + 0.03 * u * u).collect();
        let c = quadratic_fit(&x, &y).unwrap();
        assert!((c[2] - 0.03).abs() < 1e-12);
    }

    #[test]
    fn robust_estimators() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(median(&v), 50.5);
        assert_eq!(quantile(&v, 0.9), 90.0);
        assert_eq!(quantile(&v, 0.99), 99.0);
        assert_eq!(trimmed_mean(&v, 0.01), 50.5);
        let mut w = v.clone();
        w[99] = 1e12;
        assert!(median_of_means(&w, 10) < 100.0);
        assert_eq!(median_of_means(&[1.0, 2.0, 3.0, 4.0], 2), 2.5);
    }
}
