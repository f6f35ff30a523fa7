//! Small statistical helpers shared by the estimators and the tests.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Unbiased sample variance (zero for fewer than two values).
pub fn variance<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_usize_lossy(xs.len() - 1)
}

/// Mean and standard error by non-overlapping batch means.
///
/// Uses `max(5, ⌊√n⌋)` batches (the trailing remainder is dropped from the
/// batches but kept in the mean).
pub fn batch_means<T: Real>(xs: &[T]) -> Result<(T, T)> {
    if xs.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "batch means need at least 10 values, got {}",
            xs.len()
        )));
    }
    let n_batches = ((xs.len() as f64).sqrt().floor() as usize).max(5);
    let size = xs.len() / n_batches;
    let batches: Vec<T> = xs
        .chunks_exact(size)
        .take(n_batches)
        .map(|c| mean(c))
        .collect();
    let se = (variance(&batches) / T::from_usize_lossy(batches.len())).sqrt();
    Ok((mean(xs), se))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha` (0.01 or 0.05).
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Least-squares line `y = slope·x + intercept` with its coefficient of
/// determination. Returns `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData("linear fit needs two or more points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // a constant series is fitted exactly
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, intercept, r2))
}

/// Two-sided standard normal quantile for a 99% interval.
pub const Z_99: f64 = 2.575_829_303_548_901;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&a, &[10.0, 11.0]), 1.0);
        assert!((ks_critical_value(100, 100, 0.01) - 1.6276 * 0.02f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn batch_means_of_constant() {
        let xs = vec![2.5; 40];
        assert_eq!(batch_means(&xs).unwrap(), (2.5, 0.0));
        assert!(batch_means(&xs[..9]).is_err());
    }

    #[test]
    fn linear_fit_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 1.0).collect();
        let (s, i, r2) = linear_fit(&xs, &ys).unwrap();
        assert!((s + 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
