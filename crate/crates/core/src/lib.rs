pub mod disorder;
pub mod operator;
pub mod potential;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod rng;
pub mod spectral;
