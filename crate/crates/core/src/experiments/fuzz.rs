//! Randomized configuration fuzzing of the pointwise potential lower bound.

use crate::error::Result;
use crate::geometry::Box1;
use crate::potential::{check_lower_bound, PotentialSpec, ProfileKind, SingleSite, SiteLayout};
use crate::rng::{Purpose, Stream};

#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub d: usize,
    pub particles: usize,
    pub kind: ProfileKind,
    pub ell: f64,
    pub delta: f64,
    pub jitter: f64,
    pub side: f64,
    pub min_margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub cases: Vec<FuzzCase>,
    pub failures: usize,
    pub worst_margin: f64,
    pub points_checked: usize,
}

/// Draws `n_configs` random valid configurations (dimension, particle count,
/// profile family, scales, crooked jitter) and checks the unit-coupling
/// potential against `N` times the comparison potential at every grid point.
/// Any negative margin is a bug in the potential layer, not noise.
pub fn fuzz_lower_bound(n_configs: usize, seed: u64) -> Result<FuzzReport> {
    let mut cases = Vec::with_capacity(n_configs);
    let mut failures = 0usize;
    let mut worst = f64::INFINITY;
    let mut points = 0usize;
    for cfg_idx in 0..n_configs {
        let mut stream = Stream::new(seed, Purpose::Fuzz, cfg_idx as u64, 0);
        let d = 1 + stream.next_index(2); // 1 or 2
        let n = 1 + stream.next_index(3); // 1..=3
        let kind = match stream.next_index(3) {
            0 => ProfileKind::Cube,
            1 => ProfileKind::Ball,
            _ => ProfileKind::Tent,
        };
        // Scales drawn so that the delta-ball sits inside the plateau; for
        // ball profiles the plateau is the delta-ball itself, so delta spans
        // its full range min(ell, 1/2).
        let (profile, ell, delta) = match kind {
            ProfileKind::Ball => {
                let delta = stream.next_in(0.08, 0.5);
                let ell = (2.0 * delta / (d as f64).sqrt()).min(1.0) * stream.next_in(0.5, 0.999);
                let p = SingleSite::new(ProfileKind::Ball, ell, delta, d)?;
                (p, ell, delta)
            }
            k => {
                let ell = stream.next_in(0.2, 1.0);
                let delta = (0.5 * ell).min(0.5) * stream.next_in(0.3, 1.0);
                let p = SingleSite::new(k, ell, delta, d)?;
                (p, ell, delta)
            }
        };
        // Crooked layouts: keep the delta-ball inside the unit cell.
        let max_jitter = (0.5 - delta).max(0.0) * 0.9;
        let jitter = stream.next_in(0.0, max_jitter);
        let layout = SiteLayout::CrookedJitter {
            amplitude: jitter,
            seed: seed ^ (cfg_idx as u64).wrapping_mul(0x9E3779B97F4A7C15),
        };
        // Grid resolution and box side capped so the tensor grid stays
        // affordable up to Nd = 6.
        let nd = n * d;
        let side = if nd >= 5 {
            3.0
        } else {
            (3 + 2 * stream.next_index(2)) as f64
        };
        let p_grid = match nd {
            1 | 2 => 7,
            3 | 4 => 3,
            _ => 2,
        };
        let factors = vec![Box1::centered(d, side)?; n];
        let spec = PotentialSpec::anderson(profile, layout);
        let report = check_lower_bound(&spec, &factors, p_grid)?;
        points += report.points_checked;
        worst = worst.min(report.min_margin);
        if !report.pass {
            failures += 1;
        }
        cases.push(FuzzCase {
            d,
            particles: n,
            kind,
            ell,
            delta,
            jitter,
            side,
            min_margin: report.min_margin,
            pass: report.pass,
        });
    }
    Ok(FuzzReport {
        cases,
        failures,
        worst_margin: worst,
        points_checked: points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fuzz_run_has_no_failures() {
        let report = fuzz_lower_bound(25, 7).unwrap();
        assert_eq!(report.failures, 0, "cases: {:?}", report.cases);
        assert!(report.worst_margin >= 0.0);
        assert!(report.points_checked > 0);
    }
}
