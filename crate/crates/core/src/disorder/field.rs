//! Disorder realizations over lattice site sets.

use std::collections::HashMap;

use super::distribution::CouplingDistribution;
use crate::error::{Error, Result};
use crate::rng::{pack_site, Purpose, Stream};

/// One realization of the couplings `{omega_j}` over a finite site set.
///
/// Values are a pure function of `(master seed, purpose, trial, site)`, so
/// enlarging the site list never disturbs values on sites already present,
/// and two fields sampled for overlapping site sets agree on the shared
/// sites. That last property is what realizes the dependence structure of
/// two-volume experiments.
#[derive(Debug, Clone)]
pub struct DisorderField {
    sites: Vec<Vec<i64>>,
    values: Vec<f64>,
    index: HashMap<Vec<i64>, usize>,
    master_seed: u64,
    trial: u64,
}

impl DisorderField {
    pub fn sites(&self) -> &[Vec<i64>] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lineage(&self) -> (u64, u64) {
        (self.master_seed, self.trial)
    }

    pub fn get(&self, site: &[i64]) -> Option<f64> {
        self.index.get(site).map(|&i| self.values[i])
    }

    /// Coupling at `site`; uncovered sites are an error, never a default.
    pub fn value(&self, site: &[i64]) -> Result<f64> {
        self.get(site)
            .ok_or_else(|| Error::UncoveredSite(site.to_vec()))
    }

    /// Relabels every site by `+k`, keeping values. Together with shifting
    /// the evaluation point this realizes the diagonal-shift covariance of
    /// lattice-periodic systems.
    pub fn translated(&self, k: &[i64]) -> Result<DisorderField> {
        let mut sites = Vec::with_capacity(self.sites.len());
        for s in &self.sites {
            if s.len() != k.len() {
                return Err(Error::DimensionMismatch(
                    "translation vector dimension must match site dimension".into(),
                ));
            }
            sites.push(s.iter().zip(k).map(|(a, b)| a + b).collect());
        }
        let index = sites
            .iter()
            .cloned()
            .zip(0..)
            .collect::<HashMap<Vec<i64>, usize>>();
        Ok(DisorderField {
            sites,
            values: self.values.clone(),
            index,
            master_seed: self.master_seed,
            trial: self.trial,
        })
    }
}

/// Samples iid couplings over `sites` from one distribution.
pub fn sample_field(
    dist: &CouplingDistribution,
    sites: &[Vec<i64>],
    master_seed: u64,
    trial: u64,
) -> Result<DisorderField> {
    sample_field_inner(|_| dist, sites, master_seed, trial, Purpose::Field)
}

/// Independent (not necessarily identically distributed) couplings: each site
/// may carry its own distribution via `per_site`; `base` covers the rest.
pub fn sample_field_with(
    base: &CouplingDistribution,
    per_site: &HashMap<Vec<i64>, CouplingDistribution>,
    sites: &[Vec<i64>],
    master_seed: u64,
    trial: u64,
) -> Result<DisorderField> {
    sample_field_inner(
        |site| per_site.get(site).unwrap_or(base),
        sites,
        master_seed,
        trial,
        Purpose::Field,
    )
}

/// Same as [`sample_field`] under a caller-chosen stream purpose, used by the
/// independent-per-factor field variant of convolution experiments.
pub fn sample_field_purpose(
    dist: &CouplingDistribution,
    sites: &[Vec<i64>],
    master_seed: u64,
    trial: u64,
    purpose: Purpose,
) -> Result<DisorderField> {
    sample_field_inner(|_| dist, sites, master_seed, trial, purpose)
}

fn sample_field_inner<'a, F>(
    dist_for: F,
    sites: &[Vec<i64>],
    master_seed: u64,
    trial: u64,
    purpose: Purpose,
) -> Result<DisorderField>
where
    F: Fn(&[i64]) -> &'a CouplingDistribution,
{
    if sites.is_empty() {
        return Err(Error::InvalidParameter("site list must be nonempty".into()));
    }
    let mut values = Vec::with_capacity(sites.len());
    let mut index = HashMap::with_capacity(sites.len());
    for (i, site) in sites.iter().enumerate() {
        let dist = dist_for(site);
        dist.validate()?;
        let mut stream = Stream::new(master_seed, purpose, trial, pack_site(site)?);
        values.push(dist.sample(&mut stream));
        if index.insert(site.clone(), i).is_some() {
            return Err(Error::InvalidParameter(format!(
                "duplicate site {site:?} in field site list"
            )));
        }
    }
    Ok(DisorderField {
        sites: sites.to_vec(),
        values,
        index,
        master_seed,
        trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{lattice_sites, Box1};

    fn sites_1d(lo: i64, hi: i64) -> Vec<Vec<i64>> {
        (lo..=hi).map(|j| vec![j]).collect()
    }

    #[test]
    fn degenerate_distribution_gives_unit_field() {
        let dist = CouplingDistribution::degenerate(1.0).unwrap();
        let field = sample_field(&dist, &sites_1d(-3, 3), 5, 0).unwrap();
        assert!(field.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn same_seed_and_trial_reproduce_the_field() {
        let dist = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let sites = lattice_sites(&Box1::centered(2, 5.0).unwrap()).unwrap();
        let f1 = sample_field(&dist, &sites, 42, 3).unwrap();
        let f2 = sample_field(&dist, &sites, 42, 3).unwrap();
        assert_eq!(f1.values(), f2.values());
        let f3 = sample_field(&dist, &sites, 42, 4).unwrap();
        assert_ne!(f1.values(), f3.values());
    }

    #[test]
    fn extending_the_site_list_preserves_old_values() {
        let dist = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let small = sites_1d(-2, 2);
        let large = sites_1d(-5, 5);
        let f_small = sample_field(&dist, &small, 9, 1).unwrap();
        let f_large = sample_field(&dist, &large, 9, 1).unwrap();
        for site in &small {
            assert_eq!(f_small.value(site).unwrap(), f_large.value(site).unwrap());
        }
    }

    #[test]
    fn empirical_mean_within_clt_band() {
        let dist = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let sites = sites_1d(0, 9_999);
        let f = sample_field(&dist, &sites, 1234, 0).unwrap();
        let mean: f64 = f.values().iter().sum::<f64>() / f.values().len() as f64;
        let sigma = (1.0f64 / 12.0).sqrt() / (f.values().len() as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn uncovered_site_is_an_error() {
        let dist = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let f = sample_field(&dist, &sites_1d(0, 3), 7, 0).unwrap();
        assert!(f.value(&[10]).is_err());
    }

    #[test]
    fn per_site_overrides_apply() {
        let base = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let pinned = CouplingDistribution::degenerate(7.0).unwrap();
        let mut overrides = HashMap::new();
        overrides.insert(vec![0i64], pinned);
        let f = sample_field_with(&base, &overrides, &sites_1d(-2, 2), 3, 0).unwrap();
        assert_eq!(f.value(&[0]).unwrap(), 7.0);
        assert!(f.value(&[1]).unwrap() < 1.0);
    }

    #[test]
    fn translation_relabels_sites() {
        let dist = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let f = sample_field(&dist, &sites_1d(0, 4), 3, 0).unwrap();
        let g = f.translated(&[10]).unwrap();
        for j in 0..=4i64 {
            assert_eq!(f.value(&[j]).unwrap(), g.value(&[j + 10]).unwrap());
        }
    }
}
