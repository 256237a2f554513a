use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{PhysicalField, SpectralField};
use super::grid::Grid;
use crate::error::Result;

/// Planned 2D transforms for one grid, with reusable scratch.
///
/// Forward transforms scale by 1/(nx*ny) so the (0,0) coefficient is the mean
/// of the field and a pure mode exp(i(kx + eta y)) has unit coefficient.
pub struct Fft2 {
    grid: Grid,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    tbuf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.nx);
        let inv_x = planner.plan_fft_inverse(grid.nx);
        let fwd_y = planner.plan_fft_forward(grid.ny);
        let inv_y = planner.plan_fft_inverse(grid.ny);
        let scratch_len = fwd_x
            .get_inplace_scratch_len()
            .max(inv_x.get_inplace_scratch_len())
            .max(fwd_y.get_inplace_scratch_len())
            .max(inv_y.get_inplace_scratch_len());
        Fft2 {
            grid,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            buf: vec![Complex64::default(); grid.len()],
            tbuf: vec![Complex64::default(); grid.len()],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn transpose_to(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for ix in 0..nx {
            for iy in 0..ny {
                self.tbuf[iy * nx + ix] = self.buf[ix * ny + iy];
            }
        }
    }

    fn transpose_back(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for ix in 0..nx {
            for iy in 0..ny {
                self.buf[ix * ny + iy] = self.tbuf[iy * nx + ix];
            }
        }
    }

    /// Physical -> spectral.
    pub fn forward(&mut self, p: &PhysicalField) -> Result<SpectralField> {
        self.grid.same(&p.grid)?;
        for (b, v) in self.buf.iter_mut().zip(p.v.iter()) {
            *b = Complex64::new(*v, 0.0);
        }
        self.fwd_y
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        self.transpose_to();
        self.fwd_x
            .process_with_scratch(&mut self.tbuf, &mut self.scratch);
        self.transpose_back();
        let scale = 1.0 / self.grid.len() as f64;
        let mut out = SpectralField::zeros(self.grid);
        for (o, b) in out.c.iter_mut().zip(self.buf.iter()) {
            *o = b * scale;
        }
        Ok(out)
    }

    /// Spectral -> physical. Imaginary residue is discarded; callers keep
    /// fields Hermitian so it is at round-off level.
    pub fn inverse(&mut self, s: &SpectralField) -> Result<PhysicalField> {
        self.grid.same(&s.grid)?;
        self.buf.copy_from_slice(&s.c);
        self.inv_y
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        self.transpose_to();
        self.inv_x
            .process_with_scratch(&mut self.tbuf, &mut self.scratch);
        self.transpose_back();
        let mut out = PhysicalField::zeros(self.grid);
        for (o, b) in out.v.iter_mut().zip(self.buf.iter()) {
            *o = b.re;
        }
        Ok(out)
    }
}

/// Planned 1D transforms for periodic profiles on [0, Ly).
pub struct Fft1 {
    pub ny: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft1 {
    pub fn new(ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(ny);
        let inv = planner.plan_fft_inverse(ny);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Fft1 {
            ny,
            fwd,
            inv,
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn forward(&mut self, v: &[f64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.ny);
        let mut buf: Vec<Complex64> = v.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        self.fwd.process_with_scratch(&mut buf, &mut self.scratch);
        let scale = 1.0 / self.ny as f64;
        for b in &mut buf {
            *b *= scale;
        }
        buf
    }

    pub fn inverse(&mut self, c: &[Complex64]) -> Vec<f64> {
        assert_eq!(c.len(), self.ny);
        let mut buf = c.to_vec();
        self.inv.process_with_scratch(&mut buf, &mut self.scratch);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Complex line transform, same 1/ny scaling as `forward`.
    pub fn forward_c(&mut self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.ny);
        let mut buf = v.to_vec();
        self.fwd.process_with_scratch(&mut buf, &mut self.scratch);
        let scale = 1.0 / self.ny as f64;
        for b in &mut buf {
            *b *= scale;
        }
        buf
    }

    /// Complex line inverse; keeps the imaginary part.
    pub fn inverse_c(&mut self, c: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(c.len(), self.ny);
        let mut buf = c.to_vec();
        self.inv.process_with_scratch(&mut buf, &mut self.scratch);
        buf
    }
}
