//! Moving-frame reconstruction: the mean-flow corrector psi, the displacement
//! field Phi, the derived profiles g, h, hbar, and evaluation of the vorticity
//! in the straightened coordinates (X, Y) = (x - t*theta(y), theta(y)).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::solver::config::{F0Choice, InterpKind};
use crate::spectral::Fft1;
use crate::spectral::{SpectralField, Spectrum1d};
use crate::spectral::Grid;

/// Advances q = t*psi through (d/dt - nu d_yy) q = <v^x> alongside the solver.
///
/// Mode-wise exact heat factor, trapezoidal in the forcing, so the accumulated
/// q equals the trapezoid Duhamel sum on the step grid. Starts from q = 0,
/// which is the correct t -> 0 limit of t*psi.
pub struct PsiIntegrator {
    nu: f64,
    t: f64,
    q: Spectrum1d,
    f_prev: Spectrum1d,
}

impl PsiIntegrator {
    pub fn new(nu: f64, t0: f64, forcing: Spectrum1d) -> Self {
        PsiIntegrator {
            nu,
            t: t0,
            q: Spectrum1d::zeros(forcing.ny, forcing.ly),
            f_prev: forcing,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn q(&self) -> &Spectrum1d {
        &self.q
    }

    /// One step: q(t+dt) = S(dt) q(t) + dt/2 (S(dt) f(t) + f(t+dt)).
    pub fn advance(&mut self, dt: f64, forcing: &Spectrum1d) {
        self.q.heat_evolve(self.nu, dt);
        let mut decayed = self.f_prev.clone();
        decayed.heat_evolve(self.nu, dt);
        self.q.add_scaled(0.5 * dt, &decayed);
        self.q.add_scaled(0.5 * dt, forcing);
        self.f_prev = forcing.clone();
        self.t += dt;
    }

    /// Realign the clock with the solver's, which snaps to diagnostic
    /// targets; the accumulated drift is a few ulps and q is left alone.
    pub fn sync_time(&mut self, t: f64) {
        self.t = t;
    }

    /// psi = q/t. Refused below t_min: every 1/t quantity is reported only
    /// from t_min on.
    pub fn psi(&self, t_min: f64) -> Result<Spectrum1d> {
        if self.t < t_min {
            return Err(Error::InvalidArgument(format!(
                "psi requested at t = {} below t_min = {}",
                self.t, t_min
            )));
        }
        let mut out = self.q.clone();
        out.scale(1.0 / self.t);
        Ok(out)
    }
}

/// Duhamel quadrature for Phi(t) = int_0^t S(t - tau) <v^x>(tau) dtau over a
/// recorded forcing history. Independent of the per-step integrator; the two
/// agree to quadrature order because they solve the same forced heat equation.
pub fn duhamel_phi(history: &[(f64, Spectrum1d)], nu: f64, t: f64) -> Result<Spectrum1d> {
    if history.len() < 2 {
        return Err(Error::InvalidArgument(
            "duhamel_phi needs at least two forcing samples".into(),
        ));
    }
    let t_last = history[history.len() - 1].0;
    if (t_last - t).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "forcing history ends at {t_last}, not at the requested time {t}"
        )));
    }
    let mut acc = Spectrum1d::zeros(history[0].1.ny, history[0].1.ly);
    for pair in history.windows(2) {
        let (tau0, ref f0) = pair[0];
        let (tau1, ref f1) = pair[1];
        if tau1 <= tau0 {
            return Err(Error::InvalidArgument(
                "forcing history times must increase".into(),
            ));
        }
        let half = 0.5 * (tau1 - tau0);
        let mut d0 = f0.clone();
        d0.heat_evolve(nu, t - tau0);
        acc.add_scaled(half, &d0);
        let mut d1 = f1.clone();
        d1.heat_evolve(nu, t - tau1);
        acc.add_scaled(half, &d1);
    }
    Ok(acc)
}

/// Profiles attached to the straightening map at one diagnostic time.
///
/// psi, phi, h, hbar, w and theta are sampled in the original y variable;
/// g is the transported profile on the uniform Y grid, so g(Y) = w(y(Y)).
pub struct FrameFields {
    pub t: f64,
    pub psi: Spectrum1d,
    pub phi: Spectrum1d,
    pub g: Spectrum1d,
    pub h: Spectrum1d,
    pub hbar: Spectrum1d,
    pub w: Spectrum1d,
    pub theta: Spectrum1d,
    pub f0: Spectrum1d,
    /// sup |theta'| over the grid; the map y -> y + theta(y) is guaranteed
    /// monotone while this stays below 1.
    pub monotone_margin: f64,
    /// || Phi - t psi ||_2, the cross-check between the two Duhamel routes.
    pub phi_psi_gap: f64,
    /// Preimages of the uniform Y targets under the map (unwrapped).
    pub ystars: Vec<f64>,
}

pub struct FrameInput<'a> {
    pub t: f64,
    pub nu: f64,
    /// Accumulated q = t*psi.
    pub q: &'a Spectrum1d,
    pub mean_vx: &'a Spectrum1d,
    pub mean_vorticity: &'a Spectrum1d,
    /// Background shear deviation from plain Couette at this time.
    pub u_tilde: &'a Spectrum1d,
    /// Forcing history for the independent Phi quadrature.
    pub history: &'a [(f64, Spectrum1d)],
    pub f0: F0Choice,
    pub interp: InterpKind,
    pub t_min: f64,
}

impl FrameFields {
    pub fn build(input: &FrameInput, fft: &mut Fft1) -> Result<FrameFields> {
        if input.t < input.t_min {
            return Err(Error::InvalidArgument(format!(
                "frame fields requested at t = {} below t_min = {}",
                input.t, input.t_min
            )));
        }
        let t = input.t;
        let mut psi = input.q.clone();
        psi.scale(1.0 / t);
        let h = psi.deriv();

        let mut w = input.mean_vx.sub(&psi);
        w.scale(1.0 / t);

        let f0 = match input.f0 {
            F0Choice::MeanVorticity => input.mean_vorticity.clone(),
            F0Choice::ShearPlusH => {
                let mut s = input.u_tilde.deriv();
                s.add_scaled(1.0, &h);
                s
            }
        };
        let mut hbar = f0.clone();
        hbar.add_scaled(1.0, &h);
        hbar.scale(-1.0 / t);

        let mut theta = input.u_tilde.clone();
        theta.add_scaled(1.0, &psi);
        let monotone_margin = theta.deriv().max_abs_phys(fft);

        let ystars = invert_map(&theta, theta.ny, fft)?;

        let ny = theta.ny;
        let ly = theta.ly;
        let mut g_samples = vec![0.0; ny];
        match input.interp {
            InterpKind::Spectral => {
                for (j, ys) in ystars.iter().enumerate() {
                    g_samples[j] = w.eval_at(*ys);
                }
            }
            InterpKind::Lagrange6 => {
                let wp = w.to_phys(fft);
                for (j, ys) in ystars.iter().enumerate() {
                    g_samples[j] = lagrange6_real(&wp, ly, *ys);
                }
            }
        }
        let g = Spectrum1d::from_phys(&g_samples, ly, fft);

        let phi = duhamel_phi(input.history, input.nu, t)?;
        let phi_psi_gap = phi.sub(input.q).l2();

        Ok(FrameFields {
            t,
            psi,
            phi,
            g,
            h,
            hbar,
            w,
            theta,
            f0,
            monotone_margin,
            phi_psi_gap,
            ystars,
        })
    }
}

/// Solves y + theta(y) = Y_j for each uniform target Y_j = j ly/n by Newton
/// iteration with spectral evaluation of theta. Returns the unwrapped roots,
/// each within half a period of its target.
pub fn invert_map(theta: &Spectrum1d, n_targets: usize, fft: &mut Fft1) -> Result<Vec<f64>> {
    let margin = theta.deriv().max_abs_phys(fft);
    if !margin.is_finite() || margin >= 1.0 {
        return Err(Error::Numerical(format!(
            "coordinate map not monotone: sup |theta'| = {margin:.3e} >= 1"
        )));
    }
    let dtheta = theta.deriv();
    let ly = theta.ly;
    let dy = ly / n_targets as f64;
    let tol = 1e-12 * ly.max(1.0);
    let mut out = Vec::with_capacity(n_targets);
    for j in 0..n_targets {
        let target = j as f64 * dy;
        let mut y = target;
        let mut converged = false;
        for _ in 0..40 {
            let r = y + theta.eval_at(y) - target;
            let slope = 1.0 + dtheta.eval_at(y);
            let step = r / slope;
            y -= step;
            if step.abs() <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "map inversion stalled at target {target:.6}"
            )));
        }
        out.push(y);
    }
    Ok(out)
}

fn wrap_periodic(y: f64, ly: f64) -> f64 {
    let mut r = y % ly;
    if r < 0.0 {
        r += ly;
    }
    r
}

/// 6-point Lagrange interpolation of periodic uniform samples.
pub fn lagrange6_periodic(col: &[Complex64], ly: f64, y: f64) -> Complex64 {
    let n = col.len();
    let h = ly / n as f64;
    let u = wrap_periodic(y, ly) / h;
    let i0 = u.floor();
    let x = u - i0;
    let base = i0 as i64;
    let mut acc = Complex64::default();
    for (m, off) in (-2i64..=3).enumerate() {
        let mut wgt = 1.0;
        for (j, other) in (-2i64..=3).enumerate() {
            if j != m {
                wgt *= (x - other as f64) / (off - other) as f64;
            }
        }
        let idx = (base + off).rem_euclid(n as i64) as usize;
        acc += wgt * col[idx];
    }
    acc
}

fn lagrange6_real(col: &[f64], ly: f64, y: f64) -> f64 {
    let n = col.len();
    let h = ly / n as f64;
    let u = wrap_periodic(y, ly) / h;
    let i0 = u.floor();
    let x = u - i0;
    let base = i0 as i64;
    let mut acc = 0.0;
    for (m, off) in (-2i64..=3).enumerate() {
        let mut wgt = 1.0;
        for (j, other) in (-2i64..=3).enumerate() {
            if j != m {
                wgt *= (x - other as f64) / (off - other) as f64;
            }
        }
        let idx = (base + off).rem_euclid(n as i64) as usize;
        acc += wgt * col[idx];
    }
    acc
}

/// Direct evaluation of one spectral column at an arbitrary point, by phase
/// recurrence over the mode ladder.
fn eval_column(col: &[Complex64], ly: f64, y: f64) -> Complex64 {
    let n = col.len();
    let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * y / ly);
    let mut acc = col[0];
    let mut pw = Complex64::new(1.0, 0.0);
    for j in 1..=n / 2 {
        pw *= w;
        acc += col[j] * pw;
        if j < n - j {
            acc += col[n - j] * pw.conj();
        }
    }
    acc
}

/// Re-expresses stored shearing-frame coefficients in the straightened frame.
///
/// For each x mode k the stored column is brought to physical y, evaluated at
/// the preimages y*_j of the uniform targets Y_j, multiplied by the phase
/// exp(i k (lag y*_j + t (Y_j - y*_j))), and transformed back. `lag` is the
/// accumulated frame offset t - s; remapping keeps lag*ly an exact multiple of
/// lx, which is what makes the wrapped interpolation single-valued.
pub fn map_to_frame(
    omega: &SpectralField,
    theta: &Spectrum1d,
    ystars: &[f64],
    t: f64,
    lag: f64,
    interp: InterpKind,
    fft: &mut Fft1,
) -> Result<SpectralField> {
    let grid = omega.grid;
    if ystars.len() != grid.ny || theta.ny != grid.ny || fft.ny != grid.ny {
        return Err(Error::GridMismatch(format!(
            "map_to_frame: ny = {}, got {} targets and fft size {}",
            grid.ny,
            ystars.len(),
            fft.ny
        )));
    }
    let ny = grid.ny;
    let dy = grid.dy();
    let mut out = SpectralField::zeros(grid);
    let mut col = vec![Complex64::default(); ny];
    let mut mapped = vec![Complex64::default(); ny];
    for ix in 0..grid.nx {
        let k = grid.k(ix);
        for iy in 0..ny {
            col[iy] = omega.at(ix, iy);
        }
        let phys = fft.inverse_c(&col);
        for j in 0..ny {
            let target = j as f64 * dy;
            let ys = ystars[j];
            let value = match interp {
                InterpKind::Lagrange6 => lagrange6_periodic(&phys, grid.ly, ys),
                InterpKind::Spectral => eval_column(&col, grid.ly, ys),
            };
            let delta = lag * wrap_periodic(ys, grid.ly) + t * (target - ys);
            mapped[j] = value * Complex64::from_polar(1.0, k * delta);
        }
        let coeffs = fft.forward_c(&mapped);
        for iy in 0..ny {
            *out.at_mut(ix, iy) = coeffs[iy];
        }
    }
    out.enforce_hermitian();
    Ok(out)
}

/// Targets for `invert_map` matching a grid's y nodes.
pub fn uniform_targets(grid: Grid) -> Vec<f64> {
    (0..grid.ny).map(|j| j as f64 * grid.dy()).collect()
}

/// Three consecutive profile samples for centered time differencing.
pub struct TimeTriple<'a> {
    pub t0: f64,
    pub p0: &'a Spectrum1d,
    pub t1: f64,
    pub p1: &'a Spectrum1d,
    pub t2: f64,
    pub p2: &'a Spectrum1d,
}

impl TimeTriple<'_> {
    fn ddt(&self) -> Spectrum1d {
        let mut d = self.p2.sub(self.p0);
        d.scale(1.0 / (self.t2 - self.t0));
        d
    }
}

/// Residual of (d/dt - nu d_yy) q = f with a centered time difference;
/// second order in the sample spacing.
pub fn heat_residual(q: &TimeTriple, forcing: &Spectrum1d, nu: f64) -> f64 {
    let mut r = q.ddt();
    r.add_scaled(-nu, &q.p1.deriv().deriv());
    r.add_scaled(-1.0, forcing);
    r.l2()
}

/// Residual of the transported-profile equation
///   b_t + 2 b / t = nu b_yy - (1/t) d_y flux
/// shared by the mean-velocity corrector w (flux = <v^x v^y>) and by hbar
/// (flux = <v^y omega>). Centered time difference, second order.
pub fn transport_residual(b: &TimeTriple, flux: &Spectrum1d, nu: f64) -> f64 {
    let mut r = b.ddt();
    r.add_scaled(2.0 / b.t1, b.p1);
    r.add_scaled(-nu, &b.p1.deriv().deriv());
    r.add_scaled(1.0 / b.t1, &flux.deriv());
    r.l2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn mode(ny: usize, ly: f64, j: usize, amp: Complex64) -> Spectrum1d {
        let mut s = Spectrum1d::zeros(ny, ly);
        s.c[j] = amp;
        if j != 0 {
            s.c[ny - j] = amp.conj();
        }
        s
    }

    #[test]
    fn psi_zero_forcing_stays_zero() {
        let ly = 8.0 * std::f64::consts::PI;
        let f = Spectrum1d::zeros(64, ly);
        let mut p = PsiIntegrator::new(1e-3, 0.0, f.clone());
        for _ in 0..50 {
            p.advance(0.05, &f);
        }
        assert_eq!(p.q().l2(), 0.0);
    }

    #[test]
    fn psi_constant_forcing_gives_linear_q() {
        let ly = 8.0 * std::f64::consts::PI;
        let mut f = Spectrum1d::zeros(64, ly);
        f.c[0] = Complex64::new(0.3, 0.0);
        let mut p = PsiIntegrator::new(2e-3, 0.0, f.clone());
        for _ in 0..40 {
            p.advance(0.05, &f);
        }
        assert!((p.t() - 2.0).abs() < 1e-12);
        assert!((p.q().c[0].re - 0.6).abs() < 1e-12);
        let psi = p.psi(1.0).unwrap();
        assert!((psi.c[0].re - 0.3).abs() < 1e-12);
        assert!(p.psi(3.0).is_err());
    }

    #[test]
    fn psi_single_mode_matches_duhamel_quadrature() {
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 64;
        let nu = 5e-2;
        let jmode = 8;
        let eta = 2.0 * std::f64::consts::PI * jmode as f64 / ly;
        let amp = |t: f64| (0.3 * t).sin() + 0.25 * t;
        let dt = 2.5e-4;
        let steps = 8000;
        let t_end = dt * steps as f64;
        let mut p = PsiIntegrator::new(nu, 0.0, mode(ny, ly, jmode, Complex64::new(amp(0.0), 0.0)));
        for i in 0..steps {
            let t1 = dt * (i + 1) as f64;
            p.advance(dt, &mode(ny, ly, jmode, Complex64::new(amp(t1), 0.0)));
        }
        // Simpson quadrature of the closed-form Duhamel integral.
        let integrand = |tau: f64| (-nu * eta * eta * (t_end - tau)).exp() * amp(tau);
        let n = 20000;
        let h = t_end / n as f64;
        let mut oracle = integrand(0.0) + integrand(t_end);
        for i in 1..n {
            let wgt = if i % 2 == 1 { 4.0 } else { 2.0 };
            oracle += wgt * integrand(i as f64 * h);
        }
        oracle *= h / 3.0;
        assert!(
            (p.q().c[jmode].re - oracle).abs() <= 1e-8,
            "q = {}, oracle = {}",
            p.q().c[jmode].re,
            oracle
        );
    }

    #[test]
    fn phi_constant_forcing_closed_form() {
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 64;
        let nu = 5e-2;
        let jmode = 6;
        let f = mode(ny, ly, jmode, Complex64::new(1.0, 0.0));
        let t = 3.0;
        let n = 600;
        let history: Vec<(f64, Spectrum1d)> =
            (0..=n).map(|i| (t * i as f64 / n as f64, f.clone())).collect();
        let phi = duhamel_phi(&history, nu, t).unwrap();
        let eta = f.eta(jmode);
        let expect = (1.0 - (-nu * eta * eta * t).exp()) / (nu * eta * eta);
        assert!((phi.c[jmode].re - expect).abs() < 1e-6);
        // eta = 0 mode integrates exactly.
        let f0 = mode(ny, ly, 0, Complex64::new(0.7, 0.0));
        let history0: Vec<(f64, Spectrum1d)> =
            (0..=4).map(|i| (t * i as f64 / 4.0, f0.clone())).collect();
        let phi0 = duhamel_phi(&history0, nu, t).unwrap();
        assert!((phi0.c[0].re - 0.7 * t).abs() < 1e-13);
    }

    #[test]
    fn phi_rejects_bad_history() {
        let ly = 8.0 * std::f64::consts::PI;
        let f = Spectrum1d::zeros(16, ly);
        assert!(duhamel_phi(&[(0.0, f.clone())], 1e-3, 1.0).is_err());
        let h = vec![(0.0, f.clone()), (0.4, f.clone())];
        assert!(duhamel_phi(&h, 1e-3, 1.0).is_err());
    }

    #[test]
    fn phi_matches_q_on_the_step_grid() {
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 64;
        let nu = 2e-2;
        let jmode = 5;
        let amp = |t: f64| (0.9 * t).cos();
        let dt = 0.01;
        let mut p = PsiIntegrator::new(nu, 0.0, mode(ny, ly, jmode, Complex64::new(amp(0.0), 0.0)));
        let mut history = vec![(0.0, mode(ny, ly, jmode, Complex64::new(amp(0.0), 0.0)))];
        for i in 0..300 {
            let t1 = dt * (i + 1) as f64;
            let f = mode(ny, ly, jmode, Complex64::new(amp(t1), 0.0));
            p.advance(dt, &f);
            history.push((t1, f));
        }
        let phi = duhamel_phi(&history, nu, p.t()).unwrap();
        assert!(phi.sub(p.q()).l2() < 1e-12);
    }

    #[test]
    fn heat_residual_vanishes_at_second_order() {
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 64;
        let nu = 4e-2;
        let jmode = 7;
        let amp = |t: f64| 0.1 * (0.8 * t).sin();
        let run = |dt: f64| {
            let steps = (2.0 / dt).round() as usize;
            let mut p =
                PsiIntegrator::new(nu, 0.0, mode(ny, ly, jmode, Complex64::new(amp(0.0), 0.0)));
            let mut snaps = Vec::new();
            for i in 0..steps {
                let t1 = dt * (i + 1) as f64;
                let f = mode(ny, ly, jmode, Complex64::new(amp(t1), 0.0));
                p.advance(dt, &f);
                if i >= steps - 3 {
                    snaps.push((p.t(), p.q().clone()));
                }
            }
            let triple = TimeTriple {
                t0: snaps[0].0,
                p0: &snaps[0].1,
                t1: snaps[1].0,
                p1: &snaps[1].1,
                t2: snaps[2].0,
                p2: &snaps[2].1,
            };
            let f_mid = mode(ny, ly, jmode, Complex64::new(amp(snaps[1].0), 0.0));
            heat_residual(&triple, &f_mid, nu)
        };
        let coarse = run(8e-4);
        let fine = run(2e-4);
        assert!(fine < 1e-8, "fine residual {fine}");
        let ratio = coarse / fine.max(1e-300);
        assert!(ratio > 8.0, "expected ~16x drop, got {ratio}");
    }

    #[test]
    fn lagrange6_reproduces_band_limited_data() {
        let ly = 8.0 * std::f64::consts::PI;
        let n = 128;
        let h = ly / n as f64;
        let f = |y: f64| {
            (2.0 * std::f64::consts::PI * y / ly).cos() + 0.3 * (6.0 * std::f64::consts::PI * y / ly).sin()
        };
        let col: Vec<Complex64> = (0..n).map(|i| Complex64::new(f(i as f64 * h), 0.0)).collect();
        // Exact at the nodes.
        let at_node = lagrange6_periodic(&col, ly, 17.0 * h);
        assert!((at_node.re - f(17.0 * h)).abs() < 1e-13);
        // Tiny error off the nodes, including across the wrap.
        for &y in &[0.31 * h, 12.63 * h, ly - 0.4 * h, ly + 2.3 * h, -1.7 * h] {
            let got = lagrange6_periodic(&col, ly, y);
            assert!((got.re - f(y)).abs() < 1e-7, "y = {y}");
            assert!(got.im.abs() < 1e-13);
        }
    }

    #[test]
    fn invert_map_identity_and_sinusoid() {
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 64;
        let mut fft = Fft1::new(ny);
        let zero = Spectrum1d::zeros(ny, ly);
        let ys = invert_map(&zero, ny, &mut fft).unwrap();
        for (j, y) in ys.iter().enumerate() {
            assert!((y - j as f64 * ly / ny as f64).abs() < 1e-12);
        }
        let theta = mode(ny, ly, 2, Complex64::new(0.15, -0.08));
        let ys = invert_map(&theta, ny, &mut fft).unwrap();
        for (j, y) in ys.iter().enumerate() {
            let target = j as f64 * ly / ny as f64;
            assert!((y + theta.eval_at(*y) - target).abs() < 1e-11);
        }
    }

    #[test]
    fn invert_map_refuses_steep_theta() {
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 64;
        let mut fft = Fft1::new(ny);
        // d/dy of amplitude*sin is amplitude*eta; make it exceed 1.
        let eta = 2.0 * std::f64::consts::PI * 4.0 / ly;
        let theta = mode(ny, ly, 4, Complex64::new(0.0, -0.75 / eta * 1.6));
        assert!(invert_map(&theta, ny, &mut fft).is_err());
    }

    #[test]
    fn map_with_zero_theta_is_identity() {
        let grid = Grid::torus(16, 64, 4.0).unwrap();
        let mut fft = Fft1::new(grid.ny);
        let mut omega = SpectralField::zeros(grid);
        *omega.at_mut(2, 5) = Complex64::new(0.4, -0.2);
        *omega.at_mut(grid.nx - 2, grid.ny - 5) = Complex64::new(0.4, 0.2);
        *omega.at_mut(1, 60) = Complex64::new(-0.1, 0.05);
        *omega.at_mut(grid.nx - 1, 4) = Complex64::new(-0.1, -0.05);
        let theta = Spectrum1d::zeros(grid.ny, grid.ly);
        let ys = uniform_targets(grid);
        for interp in [InterpKind::Lagrange6, InterpKind::Spectral] {
            let mapped = map_to_frame(&omega, &theta, &ys, 3.7, 0.0, interp, &mut fft).unwrap();
            let mut diff = mapped.clone();
            diff.add_scaled(-1.0, &omega);
            assert!(diff.max_abs() < 1e-10, "{interp:?}");
        }
    }

    #[test]
    fn map_with_constant_theta_is_a_phase_shift() {
        let grid = Grid::torus(16, 64, 4.0).unwrap();
        let mut fft = Fft1::new(grid.ny);
        let mut omega = SpectralField::zeros(grid);
        *omega.at_mut(3, 7) = Complex64::new(0.2, 0.6);
        *omega.at_mut(grid.nx - 3, grid.ny - 7) = Complex64::new(0.2, -0.6);
        let c = 0.23;
        let mut theta = Spectrum1d::zeros(grid.ny, grid.ly);
        theta.c[0] = Complex64::new(c, 0.0);
        let t = 2.9;
        let mut fftb = Fft1::new(grid.ny);
        let ys = invert_map(&theta, grid.ny, &mut fftb).unwrap();
        let mapped =
            map_to_frame(&omega, &theta, &ys, t, 0.0, InterpKind::Spectral, &mut fft).unwrap();
        // With theta = c the preimage of Y is Y - c, so each stored mode picks
        // up exp(-i (eta - k t) c).
        let k = grid.k(3);
        let eta = grid.eta(7);
        let expect = Complex64::new(0.2, 0.6) * Complex64::from_polar(1.0, -(eta - k * t) * c);
        let got = mapped.at(3, 7);
        assert!((got - expect).norm() < 1e-10, "got {got}, expect {expect}");
    }

    #[test]
    fn transport_residual_tracks_manufactured_solution() {
        // b(t, y) = a(t) cos(eta y) with a(t) = exp(-nu eta^2 t)/t^2 solves
        // b_t + 2b/t - nu b_yy = 0, so the matching flux is zero.
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 64;
        let nu = 3e-2;
        let jmode = 4;
        let eta = 2.0 * std::f64::consts::PI * jmode as f64 / ly;
        let profile = |t: f64| {
            let a = (-nu * eta * eta * t).exp() / (t * t);
            let v: Vec<f64> = (0..ny)
                .map(|i| a * (eta * (i as f64 * ly / ny as f64)).cos())
                .collect();
            Spectrum1d::from_phys(&v, ly, &mut Fft1::new(ny))
        };
        let flux = Spectrum1d::zeros(ny, ly);
        let res = |dt: f64| {
            let (t0, t1, t2) = (2.0 - dt, 2.0, 2.0 + dt);
            let (p0, p1, p2) = (profile(t0), profile(t1), profile(t2));
            let triple = TimeTriple { t0, p0: &p0, t1, p1: &p1, t2, p2: &p2 };
            transport_residual(&triple, &flux, nu)
        };
        let coarse = res(0.04);
        let fine = res(0.01);
        assert!(fine < 5e-5);
        assert!(coarse / fine.max(1e-300) > 8.0);
    }

    #[test]
    fn frame_fields_match_hand_computed_quotients() {
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 128;
        let nu = 1e-3;
        let mut fft = Fft1::new(ny);
        let t = 2.0;
        // Prescribe psi and <v^x> analytically.
        let psi = mode(ny, ly, 3, Complex64::new(0.02, 0.01));
        let mut q = psi.clone();
        q.scale(t);
        let mean_vx = mode(ny, ly, 2, Complex64::new(0.05, 0.0));
        let mean_vort = mode(ny, ly, 1, Complex64::new(0.01, -0.02));
        let u_tilde = Spectrum1d::zeros(ny, ly);
        let history = vec![(0.0, mean_vx.clone()), (t, mean_vx.clone())];
        let input = FrameInput {
            t,
            nu,
            q: &q,
            mean_vx: &mean_vx,
            mean_vorticity: &mean_vort,
            u_tilde: &u_tilde,
            history: &history,
            f0: F0Choice::MeanVorticity,
            interp: InterpKind::Spectral,
            t_min: 1.0,
        };
        let ff = FrameFields::build(&input, &mut fft).unwrap();
        // h is the spectral derivative of psi.
        assert!(ff.h.sub(&psi.deriv()).l2() < 1e-14);
        // w = (<v^x> - psi)/t pointwise in spectrum.
        let mut wexp = mean_vx.sub(&psi);
        wexp.scale(1.0 / t);
        assert!(ff.w.sub(&wexp).l2() < 1e-14);
        // hbar = -(f0 + h)/t.
        let mut bexp = mean_vort.clone();
        bexp.add_scaled(1.0, &psi.deriv());
        bexp.scale(-1.0 / t);
        assert!(ff.hbar.sub(&bexp).l2() < 1e-14);
        // g is w composed with the inverse map; check against a bisection
        // solve of y + theta(y) = Y at a few targets.
        let theta = &ff.theta;
        for j in [0usize, 17, 55, 100] {
            let target = j as f64 * ly / ny as f64;
            let (mut lo, mut hi) = (target - 1.0, target + 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid + theta.eval_at(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let ystar = 0.5 * (lo + hi);
            let gval = ff.g.eval_at(target);
            assert!(
                (gval - ff.w.eval_at(ystar)).abs() < 1e-9,
                "at target {target}: {gval} vs {}",
                ff.w.eval_at(ystar)
            );
        }
        assert!(ff.monotone_margin < 1.0);
    }

    #[test]
    fn frame_fields_respect_t_min() {
        let ly = 8.0 * std::f64::consts::PI;
        let ny = 32;
        let mut fft = Fft1::new(ny);
        let z = Spectrum1d::zeros(ny, ly);
        let history = vec![(0.0, z.clone()), (0.5, z.clone())];
        let input = FrameInput {
            t: 0.5,
            nu: 1e-3,
            q: &z,
            mean_vx: &z,
            mean_vorticity: &z,
            u_tilde: &z,
            history: &history,
            f0: F0Choice::MeanVorticity,
            interp: InterpKind::Lagrange6,
            t_min: 1.0,
        };
        assert!(FrameFields::build(&input, &mut fft).is_err());
    }
}
