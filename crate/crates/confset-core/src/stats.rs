//! Small statistical utilities shared by the simulation harness.

use crate::error::{Error, Result};

/// Empirical (1-alpha)-quantile: order statistic at index ceil((1-alpha)*reps),
/// 1-based. The higher interpolation keeps simulated coverage conservative.
pub fn quantile_upper(samples: &[f64], alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("quantile of empty sample"));
    }
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha {alpha} outside (0,1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let reps = sorted.len();
    let idx = ((1.0 - alpha) * reps as f64).ceil() as usize;
    let idx = idx.clamp(1, reps);
    Ok(sorted[idx - 1])
}

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F1(x) - F2(x)|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        // advance past ties on both sides before comparing the CDFs
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] == v {
            i += 1;
        }
        while j < m && ys[j] == v {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = ((2.0 / alpha).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Least-squares slope of y on x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_order_statistic_convention() {
        let samples: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        // ceil(0.9 * 10) = 9 -> ninth order statistic
        assert_eq!(quantile_upper(&samples, 0.1).unwrap(), 9.0);
        // ceil(0.95 * 10) = 10
        assert_eq!(quantile_upper(&samples, 0.05).unwrap(), 10.0);
    }

    #[test]
    fn quantile_rejects_bad_alpha() {
        assert!(quantile_upper(&[1.0], 0.0).is_err());
        assert!(quantile_upper(&[1.0], 1.0).is_err());
        assert!(quantile_upper(&[], 0.1).is_err());
    }

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        let a = [1.0, 2.0];
        let b = [10.0, 11.0];
        assert_eq!(ks_two_sample(&a, &b), 1.0);
    }

    #[test]
    fn ks_critical_one_percent() {
        // c(0.01) = 1.6276...
        let crit = ks_critical(0.01, 100, 100);
        assert!((crit - 1.6276 * (2.0f64 / 100.0).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn ols_slope_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((ols_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
