//! Hylleraas variational solver for two-electron systems with
//! position-space Shannon entropy diagnostics.

/// Library version recorded in run manifests and archives.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod basis;
pub mod density;
pub mod integrals;
pub mod matrix;
pub mod operators;
pub mod precision;
pub mod quadrature;
pub mod scan;
pub mod special;
pub mod spectral;
