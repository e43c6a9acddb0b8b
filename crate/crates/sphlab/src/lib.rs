//! sphlab: a numerical laboratory for meromorphic function families of
//! bounded spherical area.
//!
//! The crate measures normalized spherical area via adaptive quadrature,
//! counts preimages on the Riemann sphere, locates concentration points
//! of function families and estimates the area mass they carry, checks
//! sharp pointwise bounds on the spherical derivative, and solves the
//! Gauss-curvature equation tied to the conformal pullback metric.
//!
//! Everything is deterministic: identical inputs produce byte-identical
//! outputs regardless of thread count.

pub mod bounds;
pub mod cli;
pub mod concentration;
pub mod config;
pub mod covering;
pub mod funcmodel;
pub mod liouville;
pub mod numeric;
pub mod quadrature;
pub mod report;
pub mod sphere;
