//! Fourier grids, transforms, and frequency-space utilities shared by the
//! solver and the diagnostics.

mod fft;
mod field;
mod grid;
mod lp;

pub use fft::{Fft1, Fft2};
pub use field::{signed_to_pos, PhysicalField, SpectralField, Spectrum1d};
pub use grid::Grid;
pub use lp::{chi_cutoff, dyadic_indices, lp_blocks, paraproduct, psi_cutoff, DyadicBlock};
