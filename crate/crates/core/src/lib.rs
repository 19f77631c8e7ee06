//! Liouvillian superoperators for qubit networks with graph-correlated
//! dissipation, and the spectral machinery for locating and characterising
//! exceptional points in them.

pub mod dimer;
pub mod dynamics;
pub mod lindblad;
pub mod noisegraph;
pub mod opspace;
pub mod scan;
pub mod spectral;

pub use faer::c64;
