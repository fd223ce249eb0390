//! Single-coupling distributions and their concentration functions.

use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream};

/// Distribution of one disorder coupling.
///
/// Three families cover the intended experiments: uniform on an interval,
/// an absolutely continuous law given by a piecewise-linear density (the
/// "supplied density" mechanism, exact to evaluate and to sample), and a
/// finite atomic law used for hypothesis-violation contrast runs.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingDistribution {
    Uniform {
        a: f64,
        b: f64,
    },
    /// Density is linear between knots `xs`, zero outside; `ys` are the
    /// (normalized) density values at the knots and `cdf` the exact CDF there.
    PiecewiseLinear {
        xs: Vec<f64>,
        ys: Vec<f64>,
        cdf: Vec<f64>,
    },
    /// Atoms sorted by position with probabilities summing to one.
    Atomic {
        atoms: Vec<(f64, f64)>,
    },
}

impl CouplingDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "uniform bounds need b > a, got [{a}, {b}]"
            )));
        }
        Ok(CouplingDistribution::Uniform { a, b })
    }

    /// Piecewise-linear density through `(xs[i], ys[i])`; `ys` may be
    /// unnormalized and are rescaled to unit mass.
    pub fn piecewise_linear(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidParameter(
                "piecewise-linear density needs matching xs/ys with at least two knots".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "density knots must be strictly increasing".into(),
            ));
        }
        if ys.iter().any(|y| !y.is_finite() || *y < 0.0) {
            return Err(Error::InvalidParameter(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let mut mass = 0.0;
        for k in 0..xs.len() - 1 {
            mass += 0.5 * (ys[k] + ys[k + 1]) * (xs[k + 1] - xs[k]);
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter("density has zero total mass".into()));
        }
        let ys: Vec<f64> = ys.into_iter().map(|y| y / mass).collect();
        let mut cdf = vec![0.0; xs.len()];
        for k in 0..xs.len() - 1 {
            cdf[k + 1] = cdf[k] + 0.5 * (ys[k] + ys[k + 1]) * (xs[k + 1] - xs[k]);
        }
        let last = *cdf.last().unwrap();
        // Pin the final accumulated value to exactly one.
        for c in cdf.iter_mut() {
            *c /= last;
        }
        Ok(CouplingDistribution::PiecewiseLinear { xs, ys, cdf })
    }

    /// Symmetric triangular density on `[a, b]`.
    pub fn triangular(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidParameter(format!(
                "triangular bounds need b > a, got [{a}, {b}]"
            )));
        }
        Self::piecewise_linear(vec![a, 0.5 * (a + b), b], vec![0.0, 1.0, 0.0])
    }

    pub fn atomic(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("atomic law needs atoms".into()));
        }
        if atoms.iter().any(|(x, p)| !x.is_finite() || !(*p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "atoms need finite positions and nonnegative masses".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "atomic masses must sum to 1, got {total}"
            )));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(CouplingDistribution::Atomic { atoms })
    }

    /// Point mass at `c` (the deterministic-coupling case).
    pub fn degenerate(c: f64) -> Result<Self> {
        Self::atomic(vec![(c, 1.0)])
    }

    /// Support interval `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            CouplingDistribution::Uniform { a, b } => (*a, *b),
            CouplingDistribution::PiecewiseLinear { xs, .. } => {
                (xs[0], *xs.last().unwrap())
            }
            CouplingDistribution::Atomic { atoms } => (atoms[0].0, atoms.last().unwrap().0),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            CouplingDistribution::Uniform { a, b } => 0.5 * (a + b),
            CouplingDistribution::PiecewiseLinear { xs, ys, .. } => {
                // Exact first moment of a piecewise-linear density.
                let mut m = 0.0;
                for k in 0..xs.len() - 1 {
                    let (x0, x1, y0, y1) = (xs[k], xs[k + 1], ys[k], ys[k + 1]);
                    let dx = x1 - x0;
                    m += dx * (x0 * (2.0 * y0 + y1) + x1 * (y0 + 2.0 * y1)) / 6.0;
                }
                m
            }
            CouplingDistribution::Atomic { atoms } => {
                atoms.iter().map(|(x, p)| x * p).sum()
            }
        }
    }

    /// Sup norm of the density when the law is absolutely continuous.
    pub fn sup_density(&self) -> Option<f64> {
        match self {
            CouplingDistribution::Uniform { a, b } => Some(1.0 / (b - a)),
            CouplingDistribution::PiecewiseLinear { ys, .. } => {
                Some(ys.iter().copied().fold(0.0, f64::max))
            }
            CouplingDistribution::Atomic { .. } => None,
        }
    }

    pub fn has_bounded_density(&self) -> bool {
        self.sup_density().is_some()
    }

    /// CDF value, exact for each family.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            CouplingDistribution::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            CouplingDistribution::PiecewiseLinear { xs, ys, cdf } => {
                if x <= xs[0] {
                    return 0.0;
                }
                if x >= *xs.last().unwrap() {
                    return 1.0;
                }
                let k = xs.partition_point(|&knot| knot <= x) - 1;
                let t = x - xs[k];
                let slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
                (cdf[k] + ys[k] * t + 0.5 * slope * t * t).clamp(0.0, 1.0)
            }
            CouplingDistribution::Atomic { atoms } => {
                atoms.iter().filter(|(p, _)| *p <= x).map(|(_, m)| m).sum()
            }
        }
    }

    /// One draw from the law. Consumes exactly one uniform word per call.
    pub fn sample(&self, stream: &mut Stream) -> f64 {
        let u = stream.next_f64();
        match self {
            CouplingDistribution::Uniform { a, b } => a + (b - a) * u,
            CouplingDistribution::PiecewiseLinear { xs, ys, cdf } => {
                let k = match cdf.partition_point(|&c| c <= u) {
                    0 => 0,
                    idx => (idx - 1).min(xs.len() - 2),
                };
                let v = u - cdf[k];
                let dx = xs[k + 1] - xs[k];
                let y0 = ys[k];
                let slope = (ys[k + 1] - y0) / dx;
                let t = if slope.abs() * dx < 1e-14 * (y0 + 1e-300) {
                    if y0 > 0.0 {
                        v / y0
                    } else {
                        0.0
                    }
                } else {
                    // Solve y0 t + slope t^2 / 2 = v for t in [0, dx].
                    let disc = (y0 * y0 + 2.0 * slope * v).max(0.0);
                    if slope > 0.0 {
                        (disc.sqrt() - y0) / slope
                    } else {
                        // Stable form for the decreasing branch.
                        2.0 * v / (y0 + disc.sqrt())
                    }
                };
                xs[k] + t.clamp(0.0, dx)
            }
            CouplingDistribution::Atomic { atoms } => {
                let mut acc = 0.0;
                for (x, p) in atoms {
                    acc += p;
                    if u < acc {
                        return *x;
                    }
                }
                atoms.last().unwrap().0
            }
        }
    }

    /// Exact concentration function: the largest mass any closed interval of
    /// width `h` can carry.
    pub fn levy_concentration(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interval width must be nonnegative, got {h}"
            )));
        }
        Ok(match self {
            CouplingDistribution::Uniform { a, b } => (h / (b - a)).min(1.0),
            CouplingDistribution::PiecewiseLinear { xs, .. } => {
                let (lo, hi) = (xs[0], *xs.last().unwrap());
                if h >= hi - lo {
                    return Ok(1.0);
                }
                // g(E) = F(E+h) - F(E) is piecewise quadratic in E with
                // breakpoints where E or E+h crosses a knot; between
                // breakpoints g' is linear, so the sup is attained at a
                // breakpoint or at the root of g'.
                let mut breaks: Vec<f64> = Vec::new();
                for &x in xs {
                    breaks.push(x);
                    breaks.push(x - h);
                }
                breaks.retain(|&e| e >= lo - h && e <= hi);
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let mut best = 0.0f64;
                let g = |e: f64| self.cdf(e + h) - self.cdf(e);
                for w in breaks.windows(2) {
                    let (e0, e1) = (w[0], w[1]);
                    best = best.max(g(e0)).max(g(e1));
                    // g'(E) = rho(E+h) - rho(E), linear on (e0, e1).
                    let d0 = self.density_at(e0 + h)? - self.density_at(e0)?;
                    let d1 = self.density_at(e1 + h)? - self.density_at(e1)?;
                    if (d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0) {
                        let t = d0 / (d0 - d1);
                        best = best.max(g(e0 + t * (e1 - e0)));
                    }
                }
                best.min(1.0)
            }
            CouplingDistribution::Atomic { atoms } => {
                let mut best = 0.0f64;
                let mut j = 0;
                for i in 0..atoms.len() {
                    if j < i {
                        j = i;
                    }
                    while j + 1 < atoms.len() && atoms[j + 1].0 <= atoms[i].0 + h {
                        j += 1;
                    }
                    let mass: f64 = atoms[i..=j].iter().map(|(_, p)| p).sum();
                    best = best.max(mass);
                }
                best
            }
        })
    }

    /// Density evaluated one-sidedly from the right (value irrelevant on a
    /// null set; only used to locate maxima of the window mass).
    fn density_at(&self, x: f64) -> Result<f64> {
        match self {
            CouplingDistribution::Uniform { a, b } => {
                Ok(if x >= *a && x < *b { 1.0 / (b - a) } else { 0.0 })
            }
            CouplingDistribution::PiecewiseLinear { xs, ys, .. } => {
                if x < xs[0] || x >= *xs.last().unwrap() {
                    return Ok(0.0);
                }
                let k = xs.partition_point(|&knot| knot <= x) - 1;
                let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
                Ok(ys[k] + t * (ys[k + 1] - ys[k]))
            }
            CouplingDistribution::Atomic { .. } => Err(Error::InvalidParameter(
                "atomic laws have no density".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CouplingDistribution::Uniform { a, b } => {
                if !(b > a) {
                    return Err(Error::InvalidParameter(format!(
                        "uniform bounds need b > a, got [{a}, {b}]"
                    )));
                }
            }
            CouplingDistribution::PiecewiseLinear { xs, ys, cdf } => {
                if xs.len() < 2 || xs.len() != ys.len() || cdf.len() != xs.len() {
                    return Err(Error::InvalidParameter(
                        "inconsistent piecewise-linear tables".into(),
                    ));
                }
            }
            CouplingDistribution::Atomic { atoms } => {
                let total: f64 = atoms.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter("atomic masses must sum to 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Empirical concentration estimate with a bootstrap interval.
#[derive(Debug, Clone)]
pub struct EmpiricalConcentration {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_samples: usize,
}

/// Largest fraction of `n` iid draws falling in any closed window of width
/// `h`, with a percentile bootstrap interval (resample count `n_boot`).
pub fn levy_concentration_empirical(
    dist: &CouplingDistribution,
    h: f64,
    n_samples: usize,
    n_boot: usize,
    seed: u64,
) -> Result<EmpiricalConcentration> {
    if !(h >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "interval width must be nonnegative, got {h}"
        )));
    }
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "empirical concentration needs at least 100 samples, got {n_samples}"
        )));
    }
    let mut stream = Stream::new(seed, Purpose::Empirical, 0, 0);
    let mut xs: Vec<f64> = (0..n_samples).map(|_| dist.sample(&mut stream)).collect();
    xs.sort_by(f64::total_cmp);
    let estimate = window_max_fraction(&xs, h);

    let mut boot = Stream::new(seed, Purpose::Bootstrap, 0, 0);
    let mut resample = vec![0.0; n_samples];
    let mut stats: Vec<f64> = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        for slot in resample.iter_mut() {
            *slot = xs[boot.next_index(n_samples)];
        }
        resample.sort_by(f64::total_cmp);
        stats.push(window_max_fraction(&resample, h));
    }
    stats.sort_by(f64::total_cmp);
    let lo_idx = ((n_boot as f64) * 0.025).floor() as usize;
    let hi_idx = (((n_boot as f64) * 0.975).ceil() as usize).min(n_boot - 1);
    Ok(EmpiricalConcentration {
        estimate,
        ci_lo: stats[lo_idx].min(estimate),
        ci_hi: stats[hi_idx].max(estimate),
        n_samples,
    })
}

/// Max count of sorted values inside any closed window `[x, x+h]`, over n.
fn window_max_fraction(sorted: &[f64], h: f64) -> f64 {
    let n = sorted.len();
    let mut best = 0usize;
    let mut j = 0usize;
    for i in 0..n {
        if j < i {
            j = i;
        }
        while j + 1 < n && sorted[j + 1] <= sorted[i] + h {
            j += 1;
        }
        best = best.max(j - i + 1);
    }
    best as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_concentration_matches_formula() {
        let u = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(u.levy_concentration(0.1).unwrap(), 0.1);
        assert_abs_diff_eq!(u.levy_concentration(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(u.levy_concentration(2.0).unwrap(), 1.0);
        let v = CouplingDistribution::uniform(-1.0, 3.0).unwrap();
        assert_abs_diff_eq!(v.levy_concentration(1.0).unwrap(), 0.25);
    }

    #[test]
    fn triangular_concentration_matches_closed_form() {
        // For the symmetric triangle of width w, the best window of width h
        // is centered at the mode and carries mass 1 - (1 - h/w)^2.
        let t = CouplingDistribution::triangular(0.0, 2.0).unwrap();
        for h in [0.0f64, 0.1, 0.5, 1.0, 1.7, 2.0] {
            let expect = 1.0 - (1.0 - h / 2.0).powi(2);
            assert_abs_diff_eq!(t.levy_concentration(h).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn density_bound_controls_concentration() {
        let dists = [
            CouplingDistribution::uniform(0.3, 1.9).unwrap(),
            CouplingDistribution::triangular(-1.0, 1.0).unwrap(),
            CouplingDistribution::piecewise_linear(
                vec![0.0, 0.2, 0.7, 1.0],
                vec![0.1, 2.0, 0.4, 1.2],
            )
            .unwrap(),
        ];
        for d in &dists {
            let sup = d.sup_density().unwrap();
            for k in 0..40 {
                let h = 0.05 * k as f64;
                let s = d.levy_concentration(h).unwrap();
                assert!(
                    s <= sup * h + 1e-12,
                    "s({h}) = {s} exceeds sup_density * h = {}",
                    sup * h
                );
            }
        }
    }

    #[test]
    fn concentration_is_monotone_and_subadditive() {
        let dists = [
            CouplingDistribution::uniform(0.0, 1.0).unwrap(),
            CouplingDistribution::triangular(0.0, 1.0).unwrap(),
            CouplingDistribution::atomic(vec![(0.0, 0.25), (0.4, 0.5), (1.0, 0.25)]).unwrap(),
        ];
        for d in &dists {
            let grid: Vec<f64> = (0..=20).map(|k| 0.06 * k as f64).collect();
            for w in grid.windows(2) {
                assert!(
                    d.levy_concentration(w[0]).unwrap() <= d.levy_concentration(w[1]).unwrap() + 1e-12
                );
            }
            for &h1 in &grid {
                for &h2 in &grid {
                    let lhs = d.levy_concentration(h1 + h2).unwrap();
                    let rhs = d.levy_concentration(h1).unwrap() + d.levy_concentration(h2).unwrap();
                    assert!(lhs <= rhs + 1e-12);
                }
            }
        }
    }

    #[test]
    fn atomic_concentration_counts_window_mass() {
        let d = CouplingDistribution::atomic(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(d.levy_concentration(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(d.levy_concentration(1.0).unwrap(), 1.0);
        // Dyadic positions keep the closed-window boundary exact in binary.
        let e = CouplingDistribution::atomic(vec![(0.0, 0.2), (0.25, 0.3), (0.875, 0.5)]).unwrap();
        assert_abs_diff_eq!(e.levy_concentration(0.5).unwrap(), 0.5);
        assert_abs_diff_eq!(e.levy_concentration(0.625).unwrap(), 0.8);
    }

    #[test]
    fn sampling_matches_cdf() {
        let dists = [
            CouplingDistribution::uniform(-2.0, 5.0).unwrap(),
            CouplingDistribution::triangular(0.0, 1.0).unwrap(),
            CouplingDistribution::piecewise_linear(
                vec![0.0, 0.5, 0.75, 2.0],
                vec![1.0, 0.2, 3.0, 0.0],
            )
            .unwrap(),
        ];
        let n = 40_000;
        for (t, d) in dists.iter().enumerate() {
            let mut s = Stream::new(99, Purpose::Fuzz, t as u64, 0);
            let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut s)).collect();
            let (lo, hi) = d.support();
            assert!(xs.iter().all(|x| *x >= lo - 1e-12 && *x <= hi + 1e-12));
            // Kolmogorov-Smirnov style check at a loose 4/sqrt(n) level.
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            let mut worst = 0.0f64;
            for (i, x) in sorted.iter().enumerate() {
                let emp = (i + 1) as f64 / n as f64;
                worst = worst.max((emp - d.cdf(*x)).abs());
            }
            assert!(worst < 4.0 / (n as f64).sqrt(), "KS distance {worst} too large");
        }
    }

    #[test]
    fn sample_mean_within_clt_band() {
        let d = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let n = 10_000;
        let mut s = Stream::new(7, Purpose::Fuzz, 0, 0);
        let mean: f64 = (0..n).map(|_| d.sample(&mut s)).sum::<f64>() / n as f64;
        let sigma = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean} outside 3 sigma");
    }

    #[test]
    fn empirical_concentration_tracks_exact_value() {
        let d = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let est = levy_concentration_empirical(&d, 0.2, 100_000, 60, 11).unwrap();
        assert!((est.estimate - 0.2).abs() < 0.01, "estimate {}", est.estimate);
        assert!(est.ci_lo <= est.estimate && est.estimate <= est.ci_hi);

        let atoms = CouplingDistribution::atomic(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let est0 = levy_concentration_empirical(&atoms, 0.0, 20_000, 60, 12).unwrap();
        assert!((est0.estimate - 0.5).abs() < 0.02);

        let wide = levy_concentration_empirical(&d, 1.5, 1_000, 60, 13).unwrap();
        assert_abs_diff_eq!(wide.estimate, 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CouplingDistribution::uniform(1.0, 1.0).is_err());
        assert!(CouplingDistribution::atomic(vec![(0.0, 0.7)]).is_err());
        assert!(
            CouplingDistribution::piecewise_linear(vec![0.0, 1.0], vec![0.0, 0.0]).is_err()
        );
        let d = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        assert!(d.levy_concentration(-0.1).is_err());
        assert!(levy_concentration_empirical(&d, 0.1, 10, 10, 0).is_err());
    }
}
