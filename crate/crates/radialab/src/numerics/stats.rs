//! Kolmogorov-Smirnov statistics and the fixed critical values used by the
//! experiment harness.

use crate::error::{Error, Result};

/// Coefficient for the asymptotic two-sided KS critical value at level 0.05:
/// reject when D > 1.358 * sqrt((n + m) / (n m)).
pub const KS_COEF_05: f64 = 1.358;

/// Coefficient at level 0.01: c(0.01) = 1.628.
pub const KS_COEF_01: f64 = 1.628;

/// One-sample KS statistic sup_x |F_n(x) - F(x)| for `sorted` ascending
/// samples against a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain(
            "ks_statistic requires samples sorted in ascending order".into(),
        ));
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let fx = cdf(x);
        if !(0.0..=1.0).contains(&fx) {
            return Err(Error::Domain(format!(
                "reference CDF returned {fx} at {x}, outside [0, 1]"
            )));
        }
        let hi = (i as f64 + 1.0) / n - fx;
        let lo = fx - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    Ok(d)
}

/// Two-sample KS statistic sup_x |F_a(x) - F_b(x)|. Input order does not
/// matter; both samples are sorted internally.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let xi = xs[i];
        let yj = ys[j];
        let t = xi.min(yj);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    Ok(d)
}

/// Two-sample rejection threshold at level 0.05.
pub fn ks_two_sample_threshold(n: usize, m: usize) -> f64 {
    KS_COEF_05 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
