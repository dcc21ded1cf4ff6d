//! Application objectives: hard clustering and Chebyshev approximation.

pub mod cheby;
pub mod cluster;
