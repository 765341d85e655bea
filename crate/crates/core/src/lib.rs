//! Numerical toolkit for nested fractals: level graphs of homogeneous
//! self-similar sets, discrete p-energies and their renormalization fixed
//! point, p-harmonic extension, and estimators for the Korevaar-Schoen
//! functional `Phi_u^sigma(r)` together with the experiment harnesses built
//! on top of them.

pub mod cache;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod ks;
pub mod output;

pub use error::{Error, Result};
