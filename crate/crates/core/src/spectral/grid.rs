use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Doubly periodic grid on [0, Lx) x [0, Ly).
///
/// Wavenumbers run over {-N/2+1, ..., N/2} in each direction, scaled by
/// 2*pi/L. Storage is row-major with x as the slow index: `idx = ix*ny + iy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "grid sizes must be even and >= 4, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "domain lengths must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Grid { nx, ny, lx, ly })
    }

    /// Torus with Lx = 2*pi and Ly = 2*pi*l, the usual shear-flow box.
    pub fn torus(nx: usize, ny: usize, l: f64) -> Result<Self> {
        Grid::new(nx, ny, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI * l)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    /// Signed integer mode index for position `i` along an axis of size `n`.
    #[inline]
    pub fn signed(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// x-wavenumber of column `ix`.
    #[inline]
    pub fn k(&self, ix: usize) -> f64 {
        Self::signed(ix, self.nx) as f64 * (2.0 * std::f64::consts::PI / self.lx)
    }

    /// y-wavenumber of row `iy`.
    #[inline]
    pub fn eta(&self, iy: usize) -> f64 {
        Self::signed(iy, self.ny) as f64 * (2.0 * std::f64::consts::PI / self.ly)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }

    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 * self.dy()
    }

    /// True when the signed index is inside the 2/3 dealiasing band.
    #[inline]
    pub fn in_band(s: i64, n: usize) -> bool {
        3 * s.unsigned_abs() as usize <= n
    }

    /// True when mode (ix, iy) survives the 2/3 rule in both directions.
    #[inline]
    pub fn mode_in_band(&self, ix: usize, iy: usize) -> bool {
        Self::in_band(Self::signed(ix, self.nx), self.nx)
            && Self::in_band(Self::signed(iy, self.ny), self.ny)
    }

    /// Largest |xi| = sqrt(k^2 + eta^2) representable on the grid.
    pub fn xi_max(&self) -> f64 {
        let km = (self.nx / 2) as f64 * (2.0 * std::f64::consts::PI / self.lx);
        let em = (self.ny / 2) as f64 * (2.0 * std::f64::consts::PI / self.ly);
        (km * km + em * em).sqrt()
    }

    pub fn same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}
