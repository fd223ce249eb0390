//! One-volume eigenvalue-window statistics and two-volume
//! eigenvalue-distance statistics.

use super::stats::{fit_through_origin, mean_ci, wilson_interval, OriginFit};
use super::{run_trials_range, SystemSpec, Warning};
use crate::error::{Error, Result};
use crate::geometry::{r_separated, SeparationWitness};
use crate::spectral::{Spectrum, SpectrumWindow};

/// How the common window center is chosen.
///
/// The meaningful scaling regime at desk-scale volumes is the low-energy
/// region where disorder dominates the level structure; mid-spectrum levels
/// of a weakly disordered box are rigid and do not self-average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowCenter {
    /// Eigenvalue at the given quantile of the trial-0 realization at the
    /// largest volume (0.05 lands in the low-energy bulk).
    Quantile(f64),
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct WegnerOneConfig {
    /// Cube side lengths to scan.
    pub volumes: Vec<f64>,
    /// Window widths, all centered at the common center.
    pub widths: Vec<f64>,
    pub center: WindowCenter,
    pub trials: usize,
    pub seed: u64,
}

/// One per-trial observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WegnerTrialRecord {
    pub side: f64,
    pub width: f64,
    pub trial: u64,
    /// Exact eigenvalue count in the window.
    pub trace: usize,
}

/// Aggregate for one `(side, width)` cell.
#[derive(Debug, Clone)]
pub struct WegnerCell {
    pub side: f64,
    pub width: f64,
    pub window: SpectrumWindow,
    pub volume: f64,
    /// Concentration value `s(width)` of the coupling distribution.
    pub s_width: f64,
    pub p_nonempty: f64,
    pub p_ci: (f64, f64),
    pub mean_trace: f64,
    pub trace_ci: (f64, f64),
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct WegnerOneResult {
    pub center: f64,
    pub cells: Vec<WegnerCell>,
    pub raw: Vec<WegnerTrialRecord>,
    /// Per volume: mean trace against `s(width)`, through the origin.
    pub fit_vs_width: Vec<(f64, OriginFit)>,
    /// Per width: mean trace against volume, through the origin.
    pub fit_vs_volume: Vec<(f64, OriginFit)>,
    pub warnings: Vec<Warning>,
}

/// Recomputes one cell's aggregates from trial records; the stored
/// aggregates must reproduce this exactly (the tests enforce it).
pub fn aggregate_cell(
    side: f64,
    width: f64,
    window: SpectrumWindow,
    volume: f64,
    s_width: f64,
    traces: &[usize],
) -> WegnerCell {
    let hits = traces.iter().filter(|t| **t > 0).count();
    let (p, plo, phi) = wilson_interval(hits, traces.len());
    let vals: Vec<f64> = traces.iter().map(|t| *t as f64).collect();
    let (m, mlo, mhi) = mean_ci(&vals);
    WegnerCell {
        side,
        width,
        window,
        volume,
        s_width,
        p_nonempty: p,
        p_ci: (plo, phi),
        mean_trace: m,
        trace_ci: (mlo, mhi),
        trials: traces.len(),
    }
}

/// Resolves the common window center (always from trial 0, independent of
/// which trial range is being run, so chunked ensembles agree).
pub fn wegner_one_center(base: &SystemSpec, cfg: &WegnerOneConfig) -> Result<f64> {
    match cfg.center {
        WindowCenter::Fixed(e) => Ok(e),
        WindowCenter::Quantile(q) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!(
                    "window-center quantile must lie in [0, 1], got {q}"
                )));
            }
            let largest = cfg.volumes.iter().copied().fold(0.0, f64::max);
            let sys = base.with_side(largest)?;
            let h = sys.build(cfg.seed, 0)?;
            let sp = Spectrum::new(&h);
            let evals = sp.eigenvalues_at_most(f64::MAX / 4.0)?;
            let idx = ((evals.len() as f64 - 1.0) * q).round() as usize;
            Ok(evals[idx])
        }
    }
}

/// Runs trials `base..base+count` of the window scan; one Hamiltonian per
/// (volume, trial) serves every window, so trials are paired across widths.
pub fn wegner_one_trials(
    base: &SystemSpec,
    cfg: &WegnerOneConfig,
    center: f64,
    trial_base: u64,
    count: usize,
) -> Result<Vec<WegnerTrialRecord>> {
    let windows: Vec<SpectrumWindow> = cfg
        .widths
        .iter()
        .map(|w| SpectrumWindow::centered(center, *w))
        .collect::<Result<_>>()?;
    let mut raw = Vec::new();
    for &side in &cfg.volumes {
        let sys = base.with_side(side)?;
        let per_trial: Vec<Vec<usize>> = run_trials_range(trial_base, count, |trial| {
            let h = sys.build(cfg.seed, trial)?;
            let sp = Spectrum::new(&h);
            Ok(windows.iter().map(|w| sp.trace_projector(*w)).collect())
        })?;
        for (offset, traces) in per_trial.iter().enumerate() {
            for (&width, &trace) in cfg.widths.iter().zip(traces) {
                raw.push(WegnerTrialRecord {
                    side,
                    width,
                    trial: trial_base + offset as u64,
                    trace,
                });
            }
        }
    }
    Ok(raw)
}

/// Aggregates window-scan records (any order) into cells and fits.
pub fn wegner_one_aggregate(
    base: &SystemSpec,
    cfg: &WegnerOneConfig,
    center: f64,
    mut raw: Vec<WegnerTrialRecord>,
) -> Result<WegnerOneResult> {
    raw.sort_by(|a, b| {
        (a.side, a.width, a.trial)
            .partial_cmp(&(b.side, b.width, b.trial))
            .expect("finite keys")
    });
    let mut warnings = Vec::new();
    let mut cells = Vec::new();
    for &side in &cfg.volumes {
        let sys = base.with_side(side)?;
        warnings.extend(sys.warnings());
        for &width in &cfg.widths {
            let traces: Vec<usize> = raw
                .iter()
                .filter(|r| r.side == side && r.width == width)
                .map(|r| r.trace)
                .collect();
            if traces.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "no records for cell (side {side}, width {width})"
                )));
            }
            cells.push(aggregate_cell(
                side,
                width,
                SpectrumWindow::centered(center, width)?,
                sys.volume(),
                base.disorder.levy_concentration(width)?,
                &traces,
            ));
        }
    }

    let mut fit_vs_width = Vec::new();
    for &side in &cfg.volumes {
        let xs: Vec<f64> = cells
            .iter()
            .filter(|c| c.side == side)
            .map(|c| c.s_width)
            .collect();
        let ys: Vec<f64> = cells
            .iter()
            .filter(|c| c.side == side)
            .map(|c| c.mean_trace)
            .collect();
        fit_vs_width.push((side, fit_through_origin(&xs, &ys)));
    }
    let mut fit_vs_volume = Vec::new();
    for &width in &cfg.widths {
        let xs: Vec<f64> = cells
            .iter()
            .filter(|c| c.width == width)
            .map(|c| c.volume)
            .collect();
        let ys: Vec<f64> = cells
            .iter()
            .filter(|c| c.width == width)
            .map(|c| c.mean_trace)
            .collect();
        fit_vs_volume.push((width, fit_through_origin(&xs, &ys)));
    }

    warnings.dedup();
    Ok(WegnerOneResult {
        center,
        cells,
        raw,
        fit_vs_width,
        fit_vs_volume,
        warnings,
    })
}

pub fn wegner_one_volume(base: &SystemSpec, cfg: &WegnerOneConfig) -> Result<WegnerOneResult> {
    if cfg.volumes.is_empty() || cfg.widths.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidParameter(
            "window scan needs volumes, widths, and at least one trial".into(),
        ));
    }
    let center = wegner_one_center(base, cfg)?;
    let raw = wegner_one_trials(base, cfg, center, 0, cfg.trials)?;
    wegner_one_aggregate(base, cfg, center, raw)
}

#[derive(Debug, Clone)]
pub struct TwoVolumeConfig {
    /// Distance thresholds for the empirical CDF.
    pub epsilons: Vec<f64>,
    /// Spectra are intersected with `(-inf, e0]`.
    pub e0: f64,
    /// Separation length; the single-site support must fit in `B(0, R)`.
    pub separation_r: f64,
    pub trials: usize,
    pub seed: u64,
    /// Optional narrow window for the joint/product comparison.
    pub product_window: Option<SpectrumWindow>,
}

#[derive(Debug, Clone, Copy)]
pub struct TwoVolumeTrial {
    pub trial: u64,
    /// Minimum distance between the two spectra inside `(-inf, e0]`;
    /// infinite when either is empty there.
    pub min_distance: f64,
    pub a_count: usize,
    pub b_count: usize,
    pub a_hit_window: bool,
    pub b_hit_window: bool,
}

#[derive(Debug, Clone)]
pub struct ProductLawCheck {
    pub p_joint: f64,
    pub joint_ci: (f64, f64),
    pub p_a: f64,
    pub p_b: f64,
    /// Whether `p_a * p_b` lies inside the joint Wilson interval.
    pub consistent: bool,
}

#[derive(Debug, Clone)]
pub struct TwoVolumeResult {
    pub witness: SeparationWitness,
    pub raw: Vec<TwoVolumeTrial>,
    /// `(epsilon, P{dist < epsilon}, ci)` per threshold.
    pub cdf: Vec<(f64, f64, (f64, f64))>,
    pub fit: OriginFit,
    pub product_check: Option<ProductLawCheck>,
    pub warnings: Vec<Warning>,
}

/// Validates the pair and returns the separation witness (hard error for
/// non-separated geometries).
pub fn two_volume_witness(
    sys_a: &SystemSpec,
    sys_b: &SystemSpec,
    separation_r: f64,
) -> Result<SeparationWitness> {
    sys_a.shares_disorder_process(sys_b)?;
    let support =
        sys_a.potential.profile.support_radius(sys_a.d) + sys_a.potential.layout.max_offset();
    if support > separation_r {
        return Err(Error::InvalidParameter(format!(
            "single-site support radius {support} exceeds the declared separation length {separation_r}"
        )));
    }
    let decision = r_separated(&sys_a.rect()?, &sys_b.rect()?, separation_r)?;
    match decision.witness {
        Some(w) if decision.separated => Ok(w),
        _ => Err(Error::NotSeparated { r: separation_r }),
    }
}

/// Runs trials `base..base+count` of the two-box distance ensemble. Both
/// Hamiltonians in one trial are built from the same keyed disorder process,
/// so sites shared between the boxes carry identical couplings while
/// disjoint sites stay independent.
pub fn wegner_two_trials(
    sys_a: &SystemSpec,
    sys_b: &SystemSpec,
    cfg: &TwoVolumeConfig,
    trial_base: u64,
    count: usize,
) -> Result<Vec<TwoVolumeTrial>> {
    run_trials_range(trial_base, count, |trial| {
        let ha = sys_a.build(cfg.seed, trial)?;
        let hb = sys_b.build(cfg.seed, trial)?;
        let sa = Spectrum::new(&ha);
        let sb = Spectrum::new(&hb);
        let ea = sa.eigenvalues_at_most(cfg.e0)?;
        let eb = sb.eigenvalues_at_most(cfg.e0)?;
        let mut min_distance = f64::INFINITY;
        for a in &ea {
            for b in &eb {
                min_distance = min_distance.min((a - b).abs());
            }
        }
        let (a_hit, b_hit) = match cfg.product_window {
            Some(w) => (sa.trace_projector(w) > 0, sb.trace_projector(w) > 0),
            None => (false, false),
        };
        Ok(TwoVolumeTrial {
            trial,
            min_distance,
            a_count: ea.len(),
            b_count: eb.len(),
            a_hit_window: a_hit,
            b_hit_window: b_hit,
        })
    })
}

/// Aggregates distance records (any order) into the CDF, fit, and the
/// optional joint/product comparison.
pub fn wegner_two_aggregate(
    sys_a: &SystemSpec,
    sys_b: &SystemSpec,
    cfg: &TwoVolumeConfig,
    witness: SeparationWitness,
    mut raw: Vec<TwoVolumeTrial>,
) -> Result<TwoVolumeResult> {
    raw.sort_by_key(|t| t.trial);
    let mut warnings: Vec<Warning> = Vec::new();
    warnings.extend(sys_a.warnings());
    warnings.extend(sys_b.warnings());
    warnings.dedup();

    let mut cdf = Vec::with_capacity(cfg.epsilons.len());
    for &eps in &cfg.epsilons {
        let hits = raw.iter().filter(|t| t.min_distance < eps).count();
        let (p, lo, hi) = wilson_interval(hits, raw.len());
        cdf.push((eps, p, (lo, hi)));
    }
    let xs: Vec<f64> = cdf.iter().map(|(e, _, _)| *e).collect();
    let ys: Vec<f64> = cdf.iter().map(|(_, p, _)| *p).collect();
    let fit = fit_through_origin(&xs, &ys);

    let product_check = cfg.product_window.map(|_| {
        let n = raw.len();
        let a_hits = raw.iter().filter(|t| t.a_hit_window).count();
        let b_hits = raw.iter().filter(|t| t.b_hit_window).count();
        let joint = raw
            .iter()
            .filter(|t| t.a_hit_window && t.b_hit_window)
            .count();
        let (pj, jlo, jhi) = wilson_interval(joint, n);
        let pa = a_hits as f64 / n as f64;
        let pb = b_hits as f64 / n as f64;
        let product = pa * pb;
        ProductLawCheck {
            p_joint: pj,
            joint_ci: (jlo, jhi),
            p_a: pa,
            p_b: pb,
            consistent: product >= jlo - 1e-12 && product <= jhi + 1e-12,
        }
    });

    Ok(TwoVolumeResult {
        witness,
        raw,
        cdf,
        fit,
        product_check,
        warnings,
    })
}

pub fn wegner_two_volume(
    sys_a: &SystemSpec,
    sys_b: &SystemSpec,
    cfg: &TwoVolumeConfig,
) -> Result<TwoVolumeResult> {
    if cfg.epsilons.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidParameter(
            "distance scan needs thresholds and at least one trial".into(),
        ));
    }
    let witness = two_volume_witness(sys_a, sys_b, cfg.separation_r)?;
    let raw = wegner_two_trials(sys_a, sys_b, cfg, 0, cfg.trials)?;
    wegner_two_aggregate(sys_a, sys_b, cfg, witness, raw)
}
