//! Eigenvalue-counting measure per unit volume: finite-volume estimates of
//! the counting function, its increment histogram, the product-system
//! convolution identity, and slope (Lipschitz) tables.

use super::stats::{mean_ci, neumaier_sum, variance};
use super::{run_trials_range, SystemSpec, Warning};
use crate::error::{Error, Result};
use crate::spectral::Spectrum;

/// Uniform energy grid `start + k * step`, `k = 0..=bins`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrid {
    pub start: f64,
    pub step: f64,
    pub bins: usize,
}

impl EnergyGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop > start) {
            return Err(Error::InvalidParameter(format!(
                "energy grid needs stop > start and step > 0, got [{start}, {stop}] step {step}"
            )));
        }
        let bins = ((stop - start) / step).round() as usize;
        if bins == 0 {
            return Err(Error::InvalidParameter(
                "energy grid needs at least one bin".into(),
            ));
        }
        Ok(EnergyGrid { start, step, bins })
    }

    pub fn len(&self) -> usize {
        self.bins + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.energy(k)).collect()
    }

    /// Right-continuous step lookup: value index for the largest grid point
    /// `<= e`, `None` below the grid, saturating above.
    pub fn step_index(&self, e: f64) -> Option<usize> {
        if e < self.start {
            return None;
        }
        let k = ((e - self.start) / self.step).floor() as usize;
        Some(k.min(self.bins))
    }
}

#[derive(Debug, Clone)]
pub struct IdsConfig {
    pub grid: EnergyGrid,
    pub trials: usize,
    pub seed: u64,
}

/// One trial's counting-function samples over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IdsTrialRow {
    pub trial: u64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct IdsResult {
    pub grid: EnergyGrid,
    /// Mean of `count_below(E) / volume` over trials, per grid point.
    pub mean_ids: Vec<f64>,
    pub ci: Vec<(f64, f64)>,
    /// Per-grid-point variance of the per-trial normalized counts.
    pub variance: Vec<f64>,
    /// Increment masses of the mean counting function (one per bin).
    pub dos_mass: Vec<f64>,
    /// Raw per-trial counts, trial-ordered.
    pub raw: Vec<IdsTrialRow>,
    pub volume: f64,
    pub warnings: Vec<Warning>,
}

/// Runs the counting trials `base..base+count` for one system.
pub fn ids_trials(
    sys: &SystemSpec,
    grid: &EnergyGrid,
    seed: u64,
    trial_base: u64,
    count: usize,
) -> Result<Vec<IdsTrialRow>> {
    let energies = grid.energies();
    run_trials_range(trial_base, count, |trial| {
        let h = sys.build(seed, trial)?;
        let sp = Spectrum::new(&h);
        Ok(IdsTrialRow {
            trial,
            counts: energies.iter().map(|e| sp.count_below(*e)).collect(),
        })
    })
}

/// Aggregates counting rows (any order) into the normalized estimate.
pub fn ids_aggregate(sys: &SystemSpec, grid: &EnergyGrid, mut raw: Vec<IdsTrialRow>) -> Result<IdsResult> {
    if raw.is_empty() {
        return Err(Error::InvalidParameter("need at least one trial row".into()));
    }
    raw.sort_by_key(|r| r.trial);
    let volume = sys.volume();
    let len = grid.len();
    if raw.iter().any(|r| r.counts.len() != len) {
        return Err(Error::DimensionMismatch(
            "trial row length does not match the energy grid".into(),
        ));
    }
    let mut mean_ids = Vec::with_capacity(len);
    let mut ci = Vec::with_capacity(len);
    let mut var = Vec::with_capacity(len);
    for k in 0..len {
        let vals: Vec<f64> = raw.iter().map(|row| row.counts[k] as f64 / volume).collect();
        let (m, lo, hi) = mean_ci(&vals);
        mean_ids.push(m);
        ci.push((lo, hi));
        var.push(variance(&vals));
    }
    let dos_mass: Vec<f64> = (0..grid.bins).map(|k| mean_ids[k + 1] - mean_ids[k]).collect();
    Ok(IdsResult {
        grid: *grid,
        mean_ids,
        ci,
        variance: var,
        dos_mass,
        raw,
        volume,
        warnings: sys.warnings(),
    })
}

/// Estimates the normalized counting function on a grid. The normalization
/// is the continuum volume `prod L_i^d`, so values are comparable across
/// mesh resolutions.
pub fn ids_estimate(sys: &SystemSpec, cfg: &IdsConfig) -> Result<IdsResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let raw = ids_trials(sys, &cfg.grid, cfg.seed, 0, cfg.trials)?;
    ids_aggregate(sys, &cfg.grid, raw)
}

#[derive(Debug, Clone)]
pub struct ConvolutionConfig {
    /// Shared grid for the one-body and product-system counting functions;
    /// it must cover the product spectrum over the comparison range.
    pub grid: EnergyGrid,
    pub trials: usize,
    pub seed: u64,
}

/// One trial of the convolution experiment: one-body counts plus both
/// product-system variants.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionTrialRow {
    pub trial: u64,
    pub one_body: Vec<usize>,
    pub shared: Vec<usize>,
    pub independent: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ConvolutionResult {
    pub grid: EnergyGrid,
    pub one_body: IdsResult,
    /// Product system with the same field in every block.
    pub nbody_shared: Vec<f64>,
    /// Product system with independent per-factor fields.
    pub nbody_independent: Vec<f64>,
    /// One-body counting function convolved `N-1` times with the one-body
    /// increment measure.
    pub convolved: Vec<f64>,
    pub sup_shared: f64,
    pub sup_independent: f64,
    pub l1_shared: f64,
    pub l1_independent: f64,
    pub warnings: Vec<Warning>,
}

fn product_system(one_body: &SystemSpec, n_particles: usize) -> Result<SystemSpec> {
    if one_body.particles() != 1 {
        return Err(Error::InvalidParameter("the base system must be one-body".into()));
    }
    if !one_body.potential.interaction.is_none() {
        return Err(Error::InvalidParameter(
            "the convolution identity applies to non-interacting systems only; \
             set interaction = none"
                .into(),
        ));
    }
    if n_particles < 1 {
        return Err(Error::InvalidParameter("need at least one particle".into()));
    }
    let mut product = one_body.clone();
    product.factors = vec![one_body.factors[0].clone(); n_particles];
    Ok(product)
}

/// Runs convolution-experiment trials `base..base+count`.
pub fn convolution_trials(
    one_body: &SystemSpec,
    n_particles: usize,
    cfg: &ConvolutionConfig,
    trial_base: u64,
    count: usize,
) -> Result<Vec<ConvolutionTrialRow>> {
    let product = product_system(one_body, n_particles)?;
    let energies = cfg.grid.energies();
    run_trials_range(trial_base, count, |trial| {
        let h_one = one_body.build(cfg.seed, trial)?;
        let sp_one = Spectrum::new(&h_one);
        let one: Vec<usize> = energies.iter().map(|e| sp_one.count_below(*e)).collect();
        let h_shared = product.build(cfg.seed, trial)?;
        let sp_shared = Spectrum::new(&h_shared);
        let shared: Vec<usize> = energies.iter().map(|e| sp_shared.count_below(*e)).collect();
        let h_indep = product.build_independent_factors(cfg.seed, trial)?;
        let sp_indep = Spectrum::new(&h_indep);
        let independent: Vec<usize> = energies.iter().map(|e| sp_indep.count_below(*e)).collect();
        Ok(ConvolutionTrialRow {
            trial,
            one_body: one,
            shared,
            independent,
        })
    })
}

/// Aggregates convolution rows into both discrepancy reports.
pub fn convolution_aggregate(
    one_body: &SystemSpec,
    n_particles: usize,
    cfg: &ConvolutionConfig,
    mut raw: Vec<ConvolutionTrialRow>,
) -> Result<ConvolutionResult> {
    if raw.is_empty() {
        return Err(Error::InvalidParameter("need at least one trial row".into()));
    }
    raw.sort_by_key(|r| r.trial);
    let product = product_system(one_body, n_particles)?;
    let one_rows: Vec<IdsTrialRow> = raw
        .iter()
        .map(|r| IdsTrialRow {
            trial: r.trial,
            counts: r.one_body.clone(),
        })
        .collect();
    let one = ids_aggregate(one_body, &cfg.grid, one_rows)?;

    let volume = product.volume();
    let len = cfg.grid.len();
    let column_mean = |pick: &dyn Fn(&ConvolutionTrialRow) -> &Vec<usize>| -> Vec<f64> {
        (0..len)
            .map(|k| {
                let vals: Vec<f64> = raw.iter().map(|r| pick(r)[k] as f64 / volume).collect();
                neumaier_sum(&vals) / vals.len() as f64
            })
            .collect()
    };
    let nbody_shared = column_mean(&|r| &r.shared);
    let nbody_independent = column_mean(&|r| &r.independent);
    let convolved = convolve_times(&one.mean_ids, &one.dos_mass, &cfg.grid, n_particles - 1);

    let sup = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let l1 = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * cfg.grid.step
    };

    let mut warnings = one.warnings.clone();
    warnings.extend(product.warnings());
    warnings.dedup();

    Ok(ConvolutionResult {
        grid: cfg.grid,
        sup_shared: sup(&nbody_shared, &convolved),
        sup_independent: sup(&nbody_independent, &convolved),
        l1_shared: l1(&nbody_shared, &convolved),
        l1_independent: l1(&nbody_independent, &convolved),
        one_body: one,
        nbody_shared,
        nbody_independent,
        convolved,
        warnings,
    })
}

/// Convolution identity check for non-interacting product systems.
///
/// Both product variants are measured: the shared-field system (the same
/// realization enters every coordinate block) and the independent-field
/// variant (blocks draw independent couplings). The convolution of the
/// one-body ingredients is the infinite-volume limit of the latter; both
/// discrepancies are reported.
pub fn ids_convolution_check(
    one_body: &SystemSpec,
    n_particles: usize,
    cfg: &ConvolutionConfig,
) -> Result<ConvolutionResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let raw = convolution_trials(one_body, n_particles, cfg, 0, cfg.trials)?;
    convolution_aggregate(one_body, n_particles, cfg, raw)
}

/// Convolves a right-continuous step function with the increment measure
/// `times` times. Bin masses act at bin midpoints; values below the grid
/// are zero and above it saturate.
fn convolve_times(base: &[f64], mass: &[f64], grid: &EnergyGrid, times: usize) -> Vec<f64> {
    let mut current = base.to_vec();
    for _ in 0..times {
        let mut next = vec![0.0; current.len()];
        for (k, out) in next.iter_mut().enumerate() {
            let e = grid.energy(k);
            let mut acc = Vec::with_capacity(mass.len());
            for (j, mj) in mass.iter().enumerate() {
                if *mj == 0.0 {
                    continue;
                }
                let center = grid.energy(j) + 0.5 * grid.step;
                let val = match grid.step_index(e - center) {
                    None => 0.0,
                    Some(idx) => current[idx],
                };
                acc.push(mj * val);
            }
            *out = neumaier_sum(&acc);
        }
        current = next;
    }
    current
}

#[derive(Debug, Clone)]
pub struct LipschitzConfig {
    pub volumes: Vec<f64>,
    pub grid: EnergyGrid,
    pub trials: usize,
    pub seed: u64,
}

/// One counting row of a volume scan.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTrialRow {
    pub side: f64,
    pub trial: u64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MaxSlope {
    pub side: f64,
    pub slope: f64,
    pub at_energy: f64,
    /// Standard error of the slope at the attaining bin.
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct LipschitzResult {
    pub tables: Vec<IdsResult>,
    pub max_slopes: Vec<MaxSlope>,
    pub warnings: Vec<Warning>,
}

/// Runs slope-scan trials `base..base+count` for every volume.
pub fn lipschitz_trials(
    base: &SystemSpec,
    cfg: &LipschitzConfig,
    trial_base: u64,
    count: usize,
) -> Result<Vec<VolumeTrialRow>> {
    let mut out = Vec::new();
    for &side in &cfg.volumes {
        let sys = base.with_side(side)?;
        let rows = ids_trials(&sys, &cfg.grid, cfg.seed, trial_base, count)?;
        out.extend(rows.into_iter().map(|r| VolumeTrialRow {
            side,
            trial: r.trial,
            counts: r.counts,
        }));
    }
    Ok(out)
}

/// Aggregates slope-scan rows into per-volume tables and max slopes.
pub fn lipschitz_aggregate(
    base: &SystemSpec,
    cfg: &LipschitzConfig,
    raw: Vec<VolumeTrialRow>,
) -> Result<LipschitzResult> {
    let mut warnings = Vec::new();
    if !base.disorder.has_bounded_density() {
        warnings.push(Warning::new(
            "unbounded-density",
            "coupling distribution has no bounded density; slope bounds do not apply \
             and this run is a hypothesis-violation contrast case"
                .to_string(),
        ));
    }
    let mut tables = Vec::new();
    let mut max_slopes = Vec::new();
    for &side in &cfg.volumes {
        let sys = base.with_side(side)?;
        let rows: Vec<IdsTrialRow> = raw
            .iter()
            .filter(|r| r.side == side)
            .map(|r| IdsTrialRow {
                trial: r.trial,
                counts: r.counts.clone(),
            })
            .collect();
        let ids = ids_aggregate(&sys, &cfg.grid, rows)?;
        let mut best = MaxSlope {
            side,
            slope: 0.0,
            at_energy: cfg.grid.start,
            se: 0.0,
        };
        for k in 0..cfg.grid.bins {
            let slope = (ids.mean_ids[k + 1] - ids.mean_ids[k]) / cfg.grid.step;
            if slope > best.slope {
                // Per-trial increments give the slope's sampling error.
                let incs: Vec<f64> = ids
                    .raw
                    .iter()
                    .map(|row| {
                        (row.counts[k + 1] - row.counts[k]) as f64 / ids.volume / cfg.grid.step
                    })
                    .collect();
                let var = variance(&incs);
                best = MaxSlope {
                    side,
                    slope,
                    at_energy: cfg.grid.energy(k),
                    se: (var / incs.len() as f64).sqrt(),
                };
            }
        }
        warnings.extend(ids.warnings.clone());
        tables.push(ids);
        max_slopes.push(best);
    }
    warnings.dedup();
    Ok(LipschitzResult {
        tables,
        max_slopes,
        warnings,
    })
}

/// Finite-difference slope table of the normalized counting function across
/// volumes. With a bounded coupling density the maximum slope must not grow
/// with volume; atomic disorder violates that hypothesis and is flagged.
pub fn ids_lipschitz_check(base: &SystemSpec, cfg: &LipschitzConfig) -> Result<LipschitzResult> {
    if cfg.volumes.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidParameter(
            "slope scan needs volumes and at least one trial".into(),
        ));
    }
    let raw = lipschitz_trials(base, cfg, 0, cfg.trials)?;
    lipschitz_aggregate(base, cfg, raw)
}
