use num_complex::Complex64;

use super::fft::Fft1;
use super::grid::Grid;

/// 2D field stored as Fourier coefficients, layout `c[ix*ny + iy]`.
///
/// The coefficient at (k, eta) multiplies exp(i(k x + eta y)). Real fields
/// satisfy the Hermitian symmetry c(-k,-eta) = conj(c(k,eta)).
#[derive(Clone, Debug)]
pub struct SpectralField {
    pub grid: Grid,
    pub c: Vec<Complex64>,
}

/// 2D field sampled on the physical grid, same layout as `SpectralField`.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    pub grid: Grid,
    pub v: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: Grid) -> Self {
        PhysicalField {
            grid,
            v: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            for iy in 0..grid.ny {
                out.v[grid.idx(ix, iy)] = f(x, grid.y(iy));
            }
        }
        out
    }

    /// Box-averaged L2 norm, sqrt(mean(v^2)); equals the s = 0 spectral norm.
    pub fn l2(&self) -> f64 {
        let s: f64 = self.v.iter().map(|x| x * x).sum();
        (s / self.v.len() as f64).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Pointwise product into a new field.
    pub fn mul(&self, other: &PhysicalField) -> PhysicalField {
        debug_assert_eq!(self.grid, other.grid);
        let mut out = self.clone();
        for (a, b) in out.v.iter_mut().zip(other.v.iter()) {
            *a *= b;
        }
        out
    }

    /// Average over x at each y, returning a profile of length ny.
    pub fn mean_over_x(&self) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut out = vec![0.0; ny];
        for ix in 0..nx {
            for iy in 0..ny {
                out[iy] += self.v[ix * ny + iy];
            }
        }
        for o in &mut out {
            *o /= nx as f64;
        }
        out
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            c: vec![Complex64::default(); grid.len()],
        }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.c[self.grid.idx(ix, iy)]
    }

    #[inline]
    pub fn at_mut(&mut self, ix: usize, iy: usize) -> &mut Complex64 {
        &mut self.c[self.grid.idx(ix, iy)]
    }

    /// Coefficient at signed mode indices, if representable on the grid.
    pub fn at_signed(&self, sk: i64, se: i64) -> Option<Complex64> {
        let ix = signed_to_pos(sk, self.grid.nx)?;
        let iy = signed_to_pos(se, self.grid.ny)?;
        Some(self.at(ix, iy))
    }

    /// Replace each coefficient via `f(k, eta, c)`.
    pub fn map_modes(&mut self, f: impl Fn(f64, f64, Complex64) -> Complex64) {
        let g = self.grid;
        for ix in 0..g.nx {
            let k = g.k(ix);
            for iy in 0..g.ny {
                let idx = g.idx(ix, iy);
                self.c[idx] = f(k, g.eta(iy), self.c[idx]);
            }
        }
    }

    /// New field with each coefficient multiplied by the symbol `m(k, eta)`.
    pub fn apply_symbol(&self, m: impl Fn(f64, f64) -> Complex64) -> SpectralField {
        let mut out = self.clone();
        out.map_modes(|k, e, c| c * m(k, e));
        out
    }

    /// d/dx, spectral symbol i k.
    pub fn deriv_x(&self) -> SpectralField {
        self.apply_symbol(|k, _| Complex64::new(0.0, k))
    }

    /// d/dy, spectral symbol i eta.
    pub fn deriv_y(&self) -> SpectralField {
        self.apply_symbol(|_, e| Complex64::new(0.0, e))
    }

    /// 2/3-rule truncation: zero every mode with |index| > n/3 on either axis.
    pub fn dealias(&mut self) {
        let g = self.grid;
        for ix in 0..g.nx {
            let kx_in = Grid::in_band(Grid::signed(ix, g.nx), g.nx);
            for iy in 0..g.ny {
                if !kx_in || !Grid::in_band(Grid::signed(iy, g.ny), g.ny) {
                    self.c[g.idx(ix, iy)] = Complex64::default();
                }
            }
        }
    }

    /// Force Hermitian symmetry by averaging conjugate pairs; self-conjugate
    /// modes are made real and the unpaired Nyquist lines are zeroed.
    pub fn enforce_hermitian(&mut self) {
        let g = self.grid;
        for ix in 0..g.nx {
            let jx = (g.nx - ix) % g.nx;
            for iy in 0..g.ny {
                let jy = (g.ny - iy) % g.ny;
                if ix == g.nx / 2 || iy == g.ny / 2 {
                    self.c[g.idx(ix, iy)] = Complex64::default();
                    continue;
                }
                let a = g.idx(ix, iy);
                let b = g.idx(jx, jy);
                if a < b {
                    let avg = 0.5 * (self.c[a] + self.c[b].conj());
                    self.c[a] = avg;
                    self.c[b] = avg.conj();
                } else if a == b {
                    self.c[a] = Complex64::new(self.c[a].re, 0.0);
                }
            }
        }
    }

    /// Zero the (0,0) mode (mean).
    pub fn zero_mean(&mut self) {
        self.c[0] = Complex64::default();
    }

    /// Sobolev norm (sum over modes of <k,eta>^{2s} |c|^2)^{1/2} with
    /// <k,eta>^2 = 1 + k^2 + eta^2. s = 0 gives the box-averaged L2 norm.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let g = self.grid;
        let mut acc = 0.0;
        for ix in 0..g.nx {
            let k = g.k(ix);
            for iy in 0..g.ny {
                let e = g.eta(iy);
                let c = self.c[g.idx(ix, iy)];
                let n2 = c.norm_sqr();
                if n2 != 0.0 {
                    acc += (1.0 + k * k + e * e).powf(s) * n2;
                }
            }
        }
        acc.sqrt()
    }

    pub fn l2(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.c {
            *c *= a;
        }
    }

    pub fn add_assign(&mut self, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (x, y) in self.c.iter_mut().zip(other.c.iter()) {
            *x += a * y;
        }
    }

    /// Zero-mode profile c(0, .) as a 1D spectrum in y.
    pub fn zero_mode(&self) -> Spectrum1d {
        Spectrum1d {
            ny: self.grid.ny,
            ly: self.grid.ly,
            c: self.c[..self.grid.ny].to_vec(),
        }
    }

    /// Field with the zero x-mode removed (the fluctuating part).
    pub fn nonzero_modes(&self) -> SpectralField {
        let mut out = self.clone();
        for iy in 0..self.grid.ny {
            out.c[iy] = Complex64::default();
        }
        out
    }
}

pub fn signed_to_pos(s: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if s > half || s < -half + 1 {
        None
    } else if s >= 0 {
        Some(s as usize)
    } else {
        Some((s + n as i64) as usize)
    }
}

/// 1D periodic profile stored as Fourier coefficients over eta = j * 2pi/Ly.
#[derive(Clone, Debug)]
pub struct Spectrum1d {
    pub ny: usize,
    pub ly: f64,
    pub c: Vec<Complex64>,
}

impl Spectrum1d {
    pub fn zeros(ny: usize, ly: f64) -> Self {
        Spectrum1d {
            ny,
            ly,
            c: vec![Complex64::default(); ny],
        }
    }

    #[inline]
    pub fn eta(&self, iy: usize) -> f64 {
        Grid::signed(iy, self.ny) as f64 * (2.0 * std::f64::consts::PI / self.ly)
    }

    pub fn from_phys(v: &[f64], ly: f64, fft: &mut Fft1) -> Self {
        Spectrum1d {
            ny: v.len(),
            ly,
            c: fft.forward(v),
        }
    }

    pub fn to_phys(&self, fft: &mut Fft1) -> Vec<f64> {
        fft.inverse(&self.c)
    }

    pub fn map_modes(&mut self, f: impl Fn(f64, Complex64) -> Complex64) {
        for iy in 0..self.ny {
            self.c[iy] = f(self.eta(iy), self.c[iy]);
        }
    }

    pub fn deriv(&self) -> Spectrum1d {
        let mut out = self.clone();
        out.map_modes(|e, c| c * Complex64::new(0.0, e));
        out
    }

    /// Multiply each mode by exp(-nu eta^2 dt), the periodic heat semigroup.
    pub fn heat_evolve(&mut self, nu: f64, dt: f64) {
        self.map_modes(|e, c| c * (-nu * e * e * dt).exp());
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for iy in 0..self.ny {
            let e = self.eta(iy);
            let n2 = self.c[iy].norm_sqr();
            if n2 != 0.0 {
                acc += (1.0 + e * e).powf(s) * n2;
            }
        }
        acc.sqrt()
    }

    pub fn l2(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Unnormalized L1 norm of the physical profile, trapezoid on the grid.
    pub fn l1_phys(&self, fft: &mut Fft1) -> f64 {
        let v = self.to_phys(fft);
        let dy = self.ly / self.ny as f64;
        v.iter().map(|x| x.abs()).sum::<f64>() * dy
    }

    pub fn max_abs_phys(&self, fft: &mut Fft1) -> f64 {
        self.to_phys(fft).iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Evaluate the Fourier series at an arbitrary point y.
    pub fn eval_at(&self, y: f64) -> f64 {
        let mut acc = Complex64::default();
        for iy in 0..self.ny {
            let e = self.eta(iy);
            acc += self.c[iy] * Complex64::new(0.0, e * y).exp();
        }
        acc.re
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.c {
            *c *= a;
        }
    }

    pub fn add_scaled(&mut self, a: f64, other: &Spectrum1d) {
        debug_assert_eq!(self.ny, other.ny);
        for (x, y) in self.c.iter_mut().zip(other.c.iter()) {
            *x += a * y;
        }
    }

    pub fn sub(&self, other: &Spectrum1d) -> Spectrum1d {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}
