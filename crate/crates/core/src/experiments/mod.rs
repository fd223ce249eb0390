//! Monte Carlo drivers for the measured spectral statistics: one- and
//! two-volume eigenvalue-window counts, the integrated density of states
//! with its convolution identity, Lipschitz slope tables, subspace
//! positivity ratios, and the geometric-weight sum utility.
//!
//! Trials are independent work units scheduled over the ambient rayon pool;
//! per-trial results are collected in trial order and aggregated
//! sequentially with compensated summation, so results are bit-identical
//! for any worker count.

mod fuzz;
mod ids;
mod ssum;
mod stats;
mod ucp;
mod wegner;

pub use fuzz::{fuzz_lower_bound, FuzzCase, FuzzReport};
pub use ids::{
    convolution_aggregate, convolution_trials, ids_aggregate, ids_convolution_check,
    ids_estimate, ids_lipschitz_check, ids_trials, lipschitz_aggregate, lipschitz_trials,
    ConvolutionConfig, ConvolutionResult, ConvolutionTrialRow, EnergyGrid, IdsConfig,
    IdsResult, IdsTrialRow, LipschitzConfig, LipschitzResult, MaxSlope, VolumeTrialRow,
};
pub use ssum::{geometric_sigma, min_terms_for_dimension, s_sum, s_sum_closed, s_sum_geometric};
pub use stats::{fit_through_origin, mean_ci, neumaier_sum, wilson_interval, OriginFit};
pub use ucp::{
    ucp_aggregate, ucp_positivity, ucp_trials, ucp_windows, UcpConfig, UcpResult,
    UcpTrialRow, UcpVolumeStats,
};
pub use wegner::{
    aggregate_cell, two_volume_witness, wegner_one_aggregate, wegner_one_center,
    wegner_one_trials, wegner_one_volume, wegner_two_aggregate, wegner_two_trials,
    wegner_two_volume, ProductLawCheck, TwoVolumeConfig, TwoVolumeResult, TwoVolumeTrial,
    WegnerCell, WegnerOneConfig, WegnerOneResult, WegnerTrialRecord, WindowCenter,
};

use crate::disorder::{sample_field, sample_field_purpose, CouplingDistribution, DisorderField};
use crate::error::{Error, Result};
use crate::geometry::{Box1, NRectangle};
use crate::operator::{
    assemble, assemble_per_factor, AssembleOptions, Boundary, HamiltonianMatrix, Mesh,
};
use crate::potential::PotentialSpec;
use crate::rng::Purpose;

/// Machine-readable warning attached to experiment output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub code: String,
    pub message: String,
}

impl Warning {
    pub fn new(code: &str, message: String) -> Self {
        Warning {
            code: code.to_string(),
            message,
        }
    }
}

/// Full description of one finite-volume random system.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub d: usize,
    pub factors: Vec<Box1>,
    pub boundary: Boundary,
    pub points_per_unit: usize,
    pub potential: PotentialSpec,
    pub disorder: CouplingDistribution,
    pub max_dimension: usize,
}

impl SystemSpec {
    pub fn cube(
        d: usize,
        n_particles: usize,
        side: f64,
        boundary: Boundary,
        points_per_unit: usize,
        potential: PotentialSpec,
        disorder: CouplingDistribution,
    ) -> Result<Self> {
        let rect = NRectangle::cube(n_particles, d, side)?;
        Ok(SystemSpec {
            d,
            factors: rect.factors().to_vec(),
            boundary,
            points_per_unit,
            potential,
            disorder,
            max_dimension: crate::operator::DEFAULT_DIMENSION_CAP,
        })
    }

    pub fn particles(&self) -> usize {
        self.factors.len()
    }

    pub fn rect(&self) -> Result<NRectangle> {
        NRectangle::new(self.factors.clone())
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::new(self.rect()?, self.points_per_unit, self.boundary)
    }

    /// Configuration-space volume `prod_i L_i^d` (continuum, not node count).
    pub fn volume(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.side().powi(self.d as i32))
            .product()
    }

    /// Same system on an `N`-cube of side `side` (centers reset to origin).
    pub fn with_side(&self, side: f64) -> Result<SystemSpec> {
        let mut out = self.clone();
        out.factors = vec![Box1::centered(self.d, side)?; self.particles()];
        Ok(out)
    }

    /// Deduplicated union of the sites every factor needs covered.
    pub fn required_sites(&self) -> Result<Vec<Vec<i64>>> {
        let mut sites: Vec<Vec<i64>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for f in &self.factors {
            for s in self.potential.required_sites(f)? {
                if seen.insert(s.clone()) {
                    sites.push(s);
                }
            }
        }
        Ok(sites)
    }

    pub fn sample_disorder(&self, seed: u64, trial: u64) -> Result<DisorderField> {
        sample_field(&self.disorder, &self.required_sites()?, seed, trial)
    }

    /// Standard Hamiltonian: one shared field across all coordinate blocks.
    pub fn build(&self, seed: u64, trial: u64) -> Result<HamiltonianMatrix> {
        let mesh = self.mesh()?;
        let field = self.sample_disorder(seed, trial)?;
        assemble(
            &mesh,
            &self.potential,
            &field,
            &AssembleOptions {
                max_dimension: self.max_dimension,
            },
        )
    }

    /// Independent-field variant: factor `i` draws its couplings from the
    /// dedicated per-factor stream, so blocks are statistically independent.
    pub fn build_independent_factors(&self, seed: u64, trial: u64) -> Result<HamiltonianMatrix> {
        let mesh = self.mesh()?;
        let sites = self.required_sites()?;
        let fields: Vec<DisorderField> = (0..self.particles())
            .map(|i| {
                sample_field_purpose(
                    &self.disorder,
                    &sites,
                    seed,
                    trial,
                    Purpose::FactorField(i as u32),
                )
            })
            .collect::<Result<_>>()?;
        assemble_per_factor(
            &mesh,
            &self.potential,
            &fields,
            &AssembleOptions {
                max_dimension: self.max_dimension,
            },
        )
    }

    /// Scaling-regime threshold `72 sqrt(N d)` on the minimum factor side.
    pub fn volume_threshold(&self) -> f64 {
        72.0 * ((self.particles() * self.d) as f64).sqrt()
    }

    pub fn min_side(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.side())
            .fold(f64::INFINITY, f64::min)
    }

    /// Structural warnings: sub-threshold volumes and odd-side deviations.
    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        let threshold = self.volume_threshold();
        if self.min_side() <= threshold {
            out.push(Warning::new(
                "sub-threshold-volume",
                format!(
                    "minimum factor side {} is below the asymptotic-regime threshold \
                     72*sqrt(N*d) = {threshold:.1}; scaling trends remain measurable but \
                     constants are pre-asymptotic",
                    self.min_side()
                ),
            ));
        }
        for f in &self.factors {
            if f.has_integer_side() && (f.side() as i64) % 2 == 0 {
                out.push(Warning::new(
                    "even-side",
                    format!(
                        "factor side {} is even; centered skeleton counts are (L+1)^d rather than L^d",
                        f.side()
                    ),
                ));
                break;
            }
        }
        out
    }

    /// Compatibility check for experiments that share one disorder process
    /// between two systems.
    pub fn shares_disorder_process(&self, other: &SystemSpec) -> Result<()> {
        if self.d != other.d || self.particles() != other.particles() {
            return Err(Error::DimensionMismatch(
                "two-volume systems must share d and particle count".into(),
            ));
        }
        if self.disorder != other.disorder {
            return Err(Error::InvalidParameter(
                "two-volume systems must share the coupling distribution".into(),
            ));
        }
        if self.potential.profile != other.potential.profile {
            return Err(Error::InvalidParameter(
                "two-volume systems must share the single-site profile".into(),
            ));
        }
        Ok(())
    }
}

/// Runs trials `base..base+count` on the rayon pool, preserving trial order.
pub(crate) fn run_trials_range<T, F>(base: u64, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    (base..base + count as u64)
        .into_par_iter()
        .map(&f)
        .collect::<std::result::Result<Vec<T>, Error>>()
}

