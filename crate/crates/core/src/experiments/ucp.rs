//! Subspace positivity across growing volumes: the minimum of the
//! projected comparison-potential ratio over a disorder ensemble, tracked
//! per volume. The claim under test is scale-freeness: minima must stay
//! bounded away from zero as boxes grow.

use super::{run_trials_range, SystemSpec, Warning};
use crate::error::{Error, Result};
use crate::potential::ComparisonPotential;
use crate::spectral::{gamma_formula, k_constant, Spectrum, SpectrumWindow};

#[derive(Debug, Clone)]
pub struct UcpConfig {
    pub volumes: Vec<f64>,
    pub window_width: f64,
    /// Energy cap; all windows stay below it.
    pub e0: f64,
    /// Number of windows spread between the spectrum bottom and `e0`.
    pub n_windows: usize,
    pub trials: usize,
    pub seed: u64,
    /// Constant used only for the reporting-convention width cap
    /// `2 gamma(m_d, K, delta)`; never asserted.
    pub m_d_for_cap: f64,
}

#[derive(Debug, Clone)]
pub struct UcpVolumeStats {
    pub side: f64,
    /// Minimum ratio over all (trial, window) pairs with a nonempty slice.
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub nonempty_slices: usize,
    pub total_slices: usize,
}

#[derive(Debug, Clone)]
pub struct UcpResult {
    pub per_volume: Vec<UcpVolumeStats>,
    /// Per-observation rows; `ratio = None` marks an empty slice.
    pub raw: Vec<UcpTrialRow>,
    pub windows: Vec<SpectrumWindow>,
    /// Reporting-convention cap on window width.
    pub width_cap: f64,
    /// min ratio at the largest volume over min ratio at the smallest.
    pub trend_ratio: f64,
    pub warnings: Vec<Warning>,
}

/// Window placement from the trial-0 baseline at the largest volume:
/// evenly spaced centers between the spectrum bottom and the cap.
/// Deterministic and independent of the trial range being run.
pub fn ucp_windows(base: &SystemSpec, cfg: &UcpConfig) -> Result<Vec<SpectrumWindow>> {
    if !(cfg.window_width > 0.0) || !(cfg.e0 > 0.0) {
        return Err(Error::InvalidParameter(
            "window width and energy cap must be positive".into(),
        ));
    }
    let largest = cfg.volumes.iter().copied().fold(0.0, f64::max);
    let baseline = base.with_side(largest)?;
    let h0 = baseline.build(cfg.seed, 0)?;
    let bottom = Spectrum::new(&h0).lowest_eigenvalue()?;
    if bottom + cfg.window_width >= cfg.e0 {
        return Err(Error::InvalidParameter(format!(
            "energy cap {} leaves no room for windows of width {} above the spectrum bottom {bottom}",
            cfg.e0, cfg.window_width
        )));
    }
    let lo_center = bottom + 0.5 * cfg.window_width;
    let hi_center = cfg.e0 - 0.5 * cfg.window_width;
    (0..cfg.n_windows)
        .map(|k| {
            let t = if cfg.n_windows == 1 {
                0.5
            } else {
                k as f64 / (cfg.n_windows - 1) as f64
            };
            SpectrumWindow::centered(lo_center + t * (hi_center - lo_center), cfg.window_width)
        })
        .collect()
}

/// One positivity observation.
#[derive(Debug, Clone, PartialEq)]
pub struct UcpTrialRow {
    pub side: f64,
    pub trial: u64,
    pub window_lo: f64,
    /// `None` marks an empty spectral slice.
    pub ratio: Option<f64>,
}

/// Runs positivity trials `base..base+count` for every volume.
pub fn ucp_trials(
    base: &SystemSpec,
    cfg: &UcpConfig,
    windows: &[SpectrumWindow],
    trial_base: u64,
    count: usize,
) -> Result<Vec<UcpTrialRow>> {
    let mut raw = Vec::new();
    for &side in &cfg.volumes {
        let sys = base.with_side(side)?;
        let mesh = sys.mesh()?;
        // The comparison potential is deterministic per volume: sample its
        // diagonal once.
        let w = ComparisonPotential::new(
            &sys.potential.layout,
            sys.potential.profile.delta,
            sys.rect()?.factors(),
        )?;
        let size = mesh.size();
        let w_diag: Vec<f64> = (0..size)
            .map(|row| w.eval(&mesh.position(&mesh.unflatten(row))))
            .collect();
        let trial_rows: Vec<Vec<Option<f64>>> = run_trials_range(trial_base, count, |trial| {
            let h = sys.build(cfg.seed, trial)?;
            let sp = Spectrum::new(&h);
            windows
                .iter()
                .map(|win| sp.ucp_ratio(*win, &w_diag))
                .collect()
        })?;
        for (offset, row) in trial_rows.iter().enumerate() {
            for (win, ratio) in windows.iter().zip(row) {
                raw.push(UcpTrialRow {
                    side,
                    trial: trial_base + offset as u64,
                    window_lo: win.lo,
                    ratio: *ratio,
                });
            }
        }
    }
    Ok(raw)
}

/// Aggregates positivity rows into per-volume minima and the trend ratio.
pub fn ucp_aggregate(
    base: &SystemSpec,
    cfg: &UcpConfig,
    windows: Vec<SpectrumWindow>,
    mut raw: Vec<UcpTrialRow>,
) -> Result<UcpResult> {
    raw.sort_by(|a, b| {
        (a.side, a.trial, a.window_lo)
            .partial_cmp(&(b.side, b.trial, b.window_lo))
            .expect("finite keys")
    });
    let mut warnings = Vec::new();

    let v_sup = base.potential.interaction.sup_bound(base.particles())
        + match base.potential.background {
            crate::potential::Background::None => 0.0,
            crate::potential::Background::Cosine { amplitude } => {
                amplitude.abs() * (base.particles() * base.d) as f64
            }
        };
    let gamma = gamma_formula(
        cfg.m_d_for_cap,
        k_constant(v_sup, cfg.e0),
        base.potential.profile.delta,
    )?;
    let width_cap = 2.0 * gamma;
    if cfg.window_width > width_cap {
        warnings.push(Warning::new(
            "window-above-cap",
            format!(
                "window width {} exceeds the reporting cap 2*gamma = {width_cap:.3e} \
                 (computed with the placeholder constant m_d = {}); positivity is still \
                 measured, the cap is a bookkeeping convention",
                cfg.window_width, cfg.m_d_for_cap
            ),
        ));
    }

    let mut per_volume = Vec::new();
    for &side in &cfg.volumes {
        let sys = base.with_side(side)?;
        warnings.extend(sys.warnings());
        let mut min_ratio = f64::INFINITY;
        let mut sum = 0.0;
        let mut nonempty = 0usize;
        let mut total = 0usize;
        for row in raw.iter().filter(|r| r.side == side) {
            total += 1;
            if let Some(r) = row.ratio {
                nonempty += 1;
                sum += r;
                min_ratio = min_ratio.min(r);
            }
        }
        per_volume.push(UcpVolumeStats {
            side,
            min_ratio,
            mean_ratio: if nonempty > 0 {
                sum / nonempty as f64
            } else {
                f64::NAN
            },
            nonempty_slices: nonempty,
            total_slices: total,
        });
    }
    warnings.dedup();

    let smallest = per_volume
        .iter()
        .min_by(|a, b| a.side.total_cmp(&b.side))
        .expect("nonempty");
    let largest_stats = per_volume
        .iter()
        .max_by(|a, b| a.side.total_cmp(&b.side))
        .expect("nonempty");
    let trend_ratio = largest_stats.min_ratio / smallest.min_ratio;

    Ok(UcpResult {
        per_volume,
        raw,
        windows,
        width_cap,
        trend_ratio,
        warnings,
    })
}

pub fn ucp_positivity(base: &SystemSpec, cfg: &UcpConfig) -> Result<UcpResult> {
    if cfg.volumes.is_empty() || cfg.n_windows == 0 || cfg.trials == 0 {
        return Err(Error::InvalidParameter(
            "positivity scan needs volumes, windows, and trials".into(),
        ));
    }
    let windows = ucp_windows(base, cfg)?;
    let raw = ucp_trials(base, cfg, &windows, 0, cfg.trials)?;
    ucp_aggregate(base, cfg, windows, raw)
}
