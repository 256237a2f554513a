use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{signed_to_pos, Fft2, Grid, PhysicalField, SpectralField};

/// Lab-frame y-wavenumber of a stored mode in the frame z = x - shear*y.
#[inline]
pub fn shear_frame_symbol(k: f64, eta: f64, shear: f64) -> f64 {
    eta - k * shear
}

/// Streamfunction from vorticity: phi_hat = -omega_hat / (k^2 + eta_L^2),
/// with the (0,0) mode set to zero.
pub fn biot_savart(omega: &SpectralField, shear: f64) -> SpectralField {
    let mut phi = omega.apply_symbol(|k, e| {
        let el = shear_frame_symbol(k, e, shear);
        let d = k * k + el * el;
        if d == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(-1.0 / d, 0.0)
        }
    });
    phi.c[0] = Complex64::default();
    phi
}

/// Velocity v = (-d/dy phi, d/dx phi) in lab components on the frame grid.
pub fn velocity(phi: &SpectralField, shear: f64) -> (SpectralField, SpectralField) {
    let vx = phi.apply_symbol(|k, e| Complex64::new(0.0, -shear_frame_symbol(k, e, shear)));
    let vy = phi.apply_symbol(|k, _| Complex64::new(0.0, k));
    (vx, vy)
}

/// Explicit right-hand side in the shearing frame:
///   N(omega) = -Utilde d_z omega - v . grad omega + U'' d_z phi
/// with every product formed in physical space and the result dealiased.
/// `utilde`/`usecond` are physical y-profiles of U - y and U'' at the current
/// time (None for Couette). `nonlinear` switches the advection product.
pub struct RhsInputs<'a> {
    pub utilde: Option<&'a [f64]>,
    pub usecond: Option<&'a [f64]>,
    pub nonlinear: bool,
}

pub fn rhs_nonlinear(
    omega: &SpectralField,
    shear: f64,
    inputs: &RhsInputs,
    fft: &mut Fft2,
) -> Result<Option<SpectralField>> {
    let g = omega.grid;
    let has_bg = inputs.utilde.is_some();
    if !inputs.nonlinear && !has_bg {
        return Ok(None); // pure Couette linearization: stiff part only
    }

    let omega_z = omega.deriv_x();
    let wz = fft.inverse(&omega_z)?;
    let mut accum = PhysicalField::zeros(g);

    if inputs.nonlinear {
        let phi = biot_savart(omega, shear);
        let (vx_h, vy_h) = velocity(&phi, shear);
        let omega_yl =
            omega.apply_symbol(|k, e| Complex64::new(0.0, shear_frame_symbol(k, e, shear)));
        let vx = fft.inverse(&vx_h)?;
        let vy = fft.inverse(&vy_h)?;
        let wyl = fft.inverse(&omega_yl)?;
        for i in 0..g.len() {
            accum.v[i] -= vx.v[i] * wz.v[i] + vy.v[i] * wyl.v[i];
        }
    }

    if has_bg {
        let ut = inputs.utilde.unwrap();
        let us = inputs.usecond.unwrap();
        if ut.len() != g.ny || us.len() != g.ny {
            return Err(Error::GridMismatch("background profile length".into()));
        }
        let phi = biot_savart(omega, shear);
        let phi_z = phi.deriv_x();
        let pz = fft.inverse(&phi_z)?;
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                let i = g.idx(ix, iy);
                accum.v[i] += -ut[iy] * wz.v[i] + us[iy] * pz.v[i];
            }
        }
    }

    let mut out = fft.forward(&accum)?;
    out.dealias();
    Ok(Some(out))
}

/// Exact viscous decay over one interval: per-mode factor
///   exp(-nu * int_s^{s+dt} (k^2 + (eta - k tau)^2) dtau)
/// with the integral in closed form, so the stiff part carries no
/// discretization error.
pub fn viscous_phase(grid: Grid, shear: f64, dt: f64, nu: f64) -> Vec<f64> {
    let mut out = vec![1.0; grid.len()];
    if nu == 0.0 || dt == 0.0 {
        return out;
    }
    for ix in 0..grid.nx {
        let k = grid.k(ix);
        for iy in 0..grid.ny {
            let e = grid.eta(iy);
            let integral = if k == 0.0 {
                e * e * dt
            } else {
                let a = e - k * shear;
                let b = e - k * (shear + dt);
                k * k * dt + (a * a * a - b * b * b) / (3.0 * k)
            };
            out[grid.idx(ix, iy)] = (-nu * integral).exp();
        }
    }
    out
}

/// Reciprocal factors for the same interval (used by the SSP-RK3 stages).
pub fn viscous_phase_inv(grid: Grid, shear: f64, dt: f64, nu: f64) -> Vec<f64> {
    let mut v = viscous_phase(grid, shear, dt, nu);
    for x in &mut v {
        *x = 1.0 / *x;
    }
    v
}

pub fn apply_phase(field: &mut SpectralField, phase: &[f64]) {
    for (c, p) in field.c.iter_mut().zip(phase.iter()) {
        *c *= *p;
    }
}

/// Re-center the stored spectrum when the frame shear crosses an integer
/// number of grid shifts: coefficients move from source index j + k*n to j,
/// the frame shear drops by n*lx/ly, and the frame lag grows by the same
/// amount. Content pushed past the band edge is dropped; slots entering from
/// the other edge are zero-filled.
pub fn remap_state(
    omega: &mut SpectralField,
    shear: &mut f64,
    frame_lag: &mut f64,
) -> u64 {
    let g = omega.grid;
    let unit = g.lx / g.ly;
    let n = (*shear / unit).floor() as i64;
    if n < 1 {
        return 0;
    }
    let mut out = SpectralField::zeros(g);
    for ix in 0..g.nx {
        let kappa = Grid::signed(ix, g.nx);
        let shift = kappa * n;
        for iy_t in 0..g.ny {
            let j_src = Grid::signed(iy_t, g.ny) + shift;
            if let Some(iy_s) = signed_to_pos(j_src, g.ny) {
                out.c[g.idx(ix, iy_t)] = omega.c[g.idx(ix, iy_s)];
            }
        }
    }
    *omega = out;
    *shear -= n as f64 * unit;
    *frame_lag += n as f64 * unit;
    n as u64
}

/// Advective CFL bound: dt <= cfl * min(dx/max|u_z|, dy/max|v_y|) with the
/// frame-effective z-velocity u_z = Utilde + v^x - shear*v^y.
pub fn cfl_dt(
    cfl: f64,
    grid: Grid,
    vx: &PhysicalField,
    vy: &PhysicalField,
    utilde: Option<&[f64]>,
    shear: f64,
) -> f64 {
    let mut max_uz = 0.0_f64;
    let mut max_vy = 0.0_f64;
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            let i = grid.idx(ix, iy);
            let ut = utilde.map_or(0.0, |u| u[iy]);
            let uz = ut + vx.v[i] - shear * vy.v[i];
            max_uz = max_uz.max(uz.abs());
            max_vy = max_vy.max(vy.v[i].abs());
        }
    }
    let mut dt = f64::INFINITY;
    if max_uz > 0.0 {
        dt = dt.min(cfl * grid.dx() / max_uz);
    }
    if max_vy > 0.0 {
        dt = dt.min(cfl * grid.dy() / max_vy);
    }
    dt
}

/// Build the initial perturbation with unit amplitude; the caller rescales.
pub fn build_shape(
    grid: Grid,
    shape: &super::config::PerturbationShape,
    seed: u64,
) -> Result<SpectralField> {
    use super::config::PerturbationShape as P;
    let mut w = SpectralField::zeros(grid);
    match shape {
        P::SingleMode { k, j } => {
            set_pair(&mut w, *k, *j, Complex64::new(0.5, 0.0))?;
        }
        P::Dipole { k, j } => {
            set_pair(&mut w, *k, *j, Complex64::new(0.25, 0.0))?;
            set_pair(&mut w, *k, -*j, Complex64::new(0.25, 0.0))?;
        }
        P::EvenBand { k, eta_width } => {
            if !(*eta_width > 0.0) {
                return Err(Error::InvalidConfig("eta_width must be positive".into()));
            }
            let ix = signed_to_pos(*k, grid.nx)
                .ok_or_else(|| Error::InvalidConfig(format!("mode k={k} off grid")))?;
            if *k == 0 {
                return Err(Error::InvalidConfig("even band needs k != 0".into()));
            }
            for iy in 0..grid.ny {
                let e = grid.eta(iy);
                let a = (-0.5 * (e / eta_width) * (e / eta_width)).exp();
                *w.at_mut(ix, iy) = Complex64::new(a, 0.0);
            }
        }
        P::RandomBand { k_max, eta_max } => {
            if *k_max < 1 || !(*eta_max > 0.0) {
                return Err(Error::InvalidConfig(
                    "random band needs k_max >= 1 and eta_max > 0".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for sk in 1..=*k_max {
                if let Some(ix) = signed_to_pos(sk, grid.nx) {
                    for iy in 0..grid.ny {
                        if grid.eta(iy).abs() <= *eta_max {
                            let re: f64 = rng.gen_range(-1.0..1.0);
                            let im: f64 = rng.gen_range(-1.0..1.0);
                            *w.at_mut(ix, iy) = Complex64::new(re, im);
                        }
                    }
                }
            }
        }
    }
    w.enforce_hermitian();
    w.dealias();
    w.zero_mean();
    if w.max_abs() == 0.0 {
        return Err(Error::InvalidConfig(
            "perturbation shape produced an empty field".into(),
        ));
    }
    Ok(w)
}

fn set_pair(w: &mut SpectralField, k: i64, j: i64, c: Complex64) -> Result<()> {
    let g = w.grid;
    let ix = signed_to_pos(k, g.nx)
        .ok_or_else(|| Error::InvalidConfig(format!("mode k={k} off grid")))?;
    let iy = signed_to_pos(j, g.ny)
        .ok_or_else(|| Error::InvalidConfig(format!("mode j={j} off grid")))?;
    if k == 0 && j == 0 {
        return Err(Error::InvalidConfig("mean mode not allowed".into()));
    }
    *w.at_mut(ix, iy) += c;
    let jx = signed_to_pos(-k, g.nx).unwrap();
    let jy = signed_to_pos(-j, g.ny).unwrap();
    *w.at_mut(jx, jy) += c.conj();
    Ok(())
}
