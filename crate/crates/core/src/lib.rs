//! Christoffel functions, Christoffel-Darboux kernels, Martin measures of
//! finite-gap sets and Weyl spectral data for half-line Schrödinger operators
//! `-y'' + V y` with a Neumann condition at the origin.

pub mod canonical;
pub mod cli;
pub mod kernel;
pub mod lab;
pub mod martin;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod rk;
pub mod weyl;

pub use num_complex::Complex64;
pub use ode::{Solver, SolutionFrame, TransferMatrix};
pub use potential::Potential;
