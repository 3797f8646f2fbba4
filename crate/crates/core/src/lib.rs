//! Differential annihilators of small tanh/sigmoid MLPs, structural-variability
//! classifiers for polynomial ODEs, and an extrapolation benchmark comparing a
//! standard MLP with a varied-depth combination of MLPs.

pub mod annihilator;
pub mod bench;
pub mod fd;
pub mod linalg;
pub mod net;
pub mod poly;
pub mod seed;
pub mod variability;
