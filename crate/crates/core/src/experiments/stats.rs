//! Aggregation helpers: compensated sums, confidence intervals, and
//! through-origin least squares.

const Z95: f64 = 1.959963984540054;

/// Neumaier compensated sum; the accumulation half of the order-independent
/// aggregation contract.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean with a 95% normal-approximation interval.
pub fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = neumaier_sum(xs) / n as f64;
    if n == 1 {
        return (mean, mean, mean);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = neumaier_sum(&sq) / (n as f64 - 1.0);
    let half = Z95 * (var / n as f64).sqrt();
    (mean, mean - half, mean + half)
}

/// Sample variance (unbiased).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = neumaier_sum(xs) / n as f64;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    neumaier_sum(&sq) / (n as f64 - 1.0)
}

/// Wilson 95% interval for a binomial proportion. Always contains the point
/// estimate.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = (Z95 / denom) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (p, (center - half).max(0.0), (center + half).min(1.0))
}

/// Ordinary least squares through the origin, `y ~ slope * x`.
///
/// `r_squared` is the uncentered coefficient `1 - SS_res / sum y^2`, the
/// standard choice for a no-intercept model.
#[derive(Debug, Clone)]
pub struct OriginFit {
    pub slope: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> OriginFit {
    assert_eq!(xs.len(), ys.len());
    let sxy: f64 = neumaier_sum(&xs.iter().zip(ys).map(|(x, y)| x * y).collect::<Vec<_>>());
    let sxx: f64 = neumaier_sum(&xs.iter().map(|x| x * x).collect::<Vec<_>>());
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - slope * x).collect();
    let ss_res = neumaier_sum(&residuals.iter().map(|r| r * r).collect::<Vec<_>>());
    let ss_tot = neumaier_sum(&ys.iter().map(|y| y * y).collect::<Vec<_>>());
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    OriginFit {
        slope,
        r_squared,
        residuals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn compensated_sum_beats_naive_on_cancellation() {
        let xs = vec![1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(&xs), 2.0);
    }

    #[test]
    fn wilson_contains_point_estimate() {
        for (s, n) in [(0usize, 50usize), (50, 50), (7, 50), (1, 1000)] {
            let (p, lo, hi) = wilson_interval(s, n);
            assert!(lo <= p && p <= hi, "({s}, {n}) -> ({lo}, {p}, {hi})");
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
    }

    #[test]
    fn origin_fit_recovers_exact_line() {
        let xs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 * x).collect();
        let fit = fit_through_origin(&xs, &ys);
        assert_abs_diff_eq!(fit.slope, 3.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_ci_brackets_mean() {
        let xs: Vec<f64> = (0..100).map(|k| (k % 7) as f64).collect();
        let (m, lo, hi) = mean_ci(&xs);
        assert!(lo <= m && m <= hi);
    }
}
