//! Pseudospectral toolkit for 2D vorticity perturbations of shear flows near
//! Couette: a shearing-frame solver with exact viscous integrating factors,
//! time-dependent weight multipliers and coordinate-system diagnostics, and a
//! harness that measures decay rates and sweeps stability thresholds in nu.

pub mod background;
pub mod diagnostics;
pub mod error;
pub mod frames;
pub mod harness;
pub mod records;
pub mod solver;
pub mod spectral;
pub mod weights;

pub use background::BackgroundShear;
pub use error::{Error, Result};
pub use harness::{SweepConfig, SweepOutcome, ThresholdResult};
pub use records::{Classification, RunRecord};
pub use solver::{SolverConfig, SolverState};
pub use spectral::{Fft1, Fft2, Grid, PhysicalField, SpectralField, Spectrum1d};
pub use weights::{WeightParams, WeightTable};
