//! Coupling distributions, disorder realizations, and Delone point sets.

mod delone;
mod distribution;
mod field;

pub use delone::{generate_delone, split_delone, verify_delone, DeloneReport, DeloneSet, DeloneViolation, SplitDelone};
pub use distribution::{levy_concentration_empirical, CouplingDistribution, EmpiricalConcentration};
pub use field::{sample_field, sample_field_purpose, sample_field_with, DisorderField};
