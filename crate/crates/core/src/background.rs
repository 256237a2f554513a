//! Background shear profiles U(y) near Couette and their heat evolution.
//!
//! The background is stored as the periodic difference U(y) - y. Under the
//! flow it relaxes by the 1D heat semigroup, mode-wise exp(-nu eta^2 t), so
//! every time slice is exact rather than time-stepped.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Fft1, Spectrum1d};

/// Built-in profile shapes for U(y) - y, plus tabulated input.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackgroundProfile {
    Couette,
    /// Periodicized Gaussian bump centered at `center` with width `width`.
    GaussianBump { amplitude: f64, center: f64, width: f64 },
    /// amplitude * sin(2 pi n y / Ly).
    SingleMode { amplitude: f64, n: i64 },
    /// Random band-limited profile with modes |j| <= j_max.
    RandomLowBand { amplitude: f64, j_max: i64, seed: u64 },
}

/// Background shear: U(y) - y at time zero, with exact heat-flow queries.
#[derive(Clone, Debug)]
pub struct BackgroundShear {
    u0: Spectrum1d,
    couette: bool,
}

impl BackgroundShear {
    pub fn ny(&self) -> usize {
        self.u0.ny
    }

    pub fn ly(&self) -> f64 {
        self.u0.ly
    }

    pub fn is_couette(&self) -> bool {
        self.couette
    }

    pub fn couette(ny: usize, ly: f64) -> Self {
        BackgroundShear {
            u0: Spectrum1d::zeros(ny, ly),
            couette: true,
        }
    }

    /// Build from physical samples of U(y) - y on the uniform grid.
    pub fn from_samples(v: &[f64], ly: f64, fft: &mut Fft1) -> Result<Self> {
        if v.len() != fft.ny {
            return Err(Error::GridMismatch(format!(
                "profile has {} samples, fft expects {}",
                v.len(),
                fft.ny
            )));
        }
        let u0 = Spectrum1d::from_phys(v, ly, fft);
        let couette = u0.c.iter().all(|z| z.norm() == 0.0);
        Ok(BackgroundShear { u0, couette })
    }

    pub fn from_profile(
        profile: &BackgroundProfile,
        ny: usize,
        ly: f64,
        fft: &mut Fft1,
    ) -> Result<Self> {
        match profile {
            BackgroundProfile::Couette => Ok(Self::couette(ny, ly)),
            BackgroundProfile::GaussianBump {
                amplitude,
                center,
                width,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidConfig("bump width must be positive".into()));
                }
                let mut v = vec![0.0; ny];
                for (iy, val) in v.iter_mut().enumerate() {
                    let y = iy as f64 * ly / ny as f64;
                    // wrap over a few periodic images; the bump is narrow
                    let mut s = 0.0;
                    for im in -2..=2 {
                        let d = y - center + im as f64 * ly;
                        s += (-0.5 * (d / width) * (d / width)).exp();
                    }
                    *val = amplitude * s;
                }
                Self::from_samples(&v, ly, fft)
            }
            BackgroundProfile::SingleMode { amplitude, n } => {
                let mut v = vec![0.0; ny];
                for (iy, val) in v.iter_mut().enumerate() {
                    let y = iy as f64 * ly / ny as f64;
                    *val = amplitude * (2.0 * std::f64::consts::PI * *n as f64 * y / ly).sin();
                }
                Self::from_samples(&v, ly, fft)
            }
            BackgroundProfile::RandomLowBand {
                amplitude,
                j_max,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut u0 = Spectrum1d::zeros(ny, ly);
                for j in 1..=*j_max {
                    let re: f64 = rng.gen_range(-1.0..1.0);
                    let im: f64 = rng.gen_range(-1.0..1.0);
                    let c = Complex64::new(re, im);
                    if let Some(iy) = crate::spectral::signed_to_pos(j, ny) {
                        u0.c[iy] = c;
                    }
                    if let Some(iy) = crate::spectral::signed_to_pos(-j, ny) {
                        u0.c[iy] = c.conj();
                    }
                }
                let peak = u0.max_abs_phys(fft);
                if peak > 0.0 {
                    u0.scale(amplitude / peak);
                }
                Ok(BackgroundShear {
                    couette: u0.c.iter().all(|z| z.norm() == 0.0),
                    u0,
                })
            }
        }
    }

    /// Load (y, U(y)-y) rows from whitespace-separated text, resampling onto
    /// the uniform grid by linear interpolation in y.
    pub fn from_table(text: &str, ny: usize, ly: f64, fft: &mut Fft1) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let y: f64 = it
                .next()
                .ok_or_else(|| Error::InvalidArgument(format!("line {}: missing y", lineno + 1)))?
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
            let u: f64 = it
                .next()
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("line {}: missing value", lineno + 1))
                })?
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
            pts.push((y.rem_euclid(ly), u));
        }
        if pts.len() < 2 {
            return Err(Error::InvalidArgument(
                "profile table needs at least two rows".into(),
            ));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let interp = |y: f64| -> f64 {
            let n = pts.len();
            // periodic bracketing
            let (mut lo, mut hi) = (n - 1, 0);
            for i in 0..n - 1 {
                if pts[i].0 <= y && y <= pts[i + 1].0 {
                    lo = i;
                    hi = i + 1;
                    break;
                }
            }
            let (y0, u0) = pts[lo];
            let (mut y1, u1) = pts[hi];
            let mut yy = y;
            if hi == 0 {
                // wrap segment
                y1 += ly;
                if yy < y0 {
                    yy += ly;
                }
            }
            let span = y1 - y0;
            if span == 0.0 {
                u0
            } else {
                u0 + (u1 - u0) * (yy - y0) / span
            }
        };
        let v: Vec<f64> = (0..ny).map(|iy| interp(iy as f64 * ly / ny as f64)).collect();
        Self::from_samples(&v, ly, fft)
    }

    /// U(t, y) - y as a spectrum, heat-evolved to time t.
    pub fn u_tilde(&self, nu: f64, t: f64) -> Spectrum1d {
        let mut u = self.u0.clone();
        u.heat_evolve(nu, t);
        u
    }

    /// dU/dy - 1 at time t.
    pub fn u_prime_minus_one(&self, nu: f64, t: f64) -> Spectrum1d {
        self.u_tilde(nu, t).deriv()
    }

    /// d2U/dy2 at time t.
    pub fn u_second(&self, nu: f64, t: f64) -> Spectrum1d {
        self.u_tilde(nu, t).deriv().deriv()
    }

    /// Integral over [t0, t1] of the box-averaged L2 norm of U'' along the
    /// heat flow, by composite Simpson quadrature with `n` panels.
    pub fn integrated_u_second(&self, nu: f64, t0: f64, t1: f64, n: usize) -> Result<f64> {
        if !(t1 > t0) || n == 0 {
            return Err(Error::InvalidArgument(
                "need t1 > t0 and at least one panel".into(),
            ));
        }
        let n = n + n % 2; // Simpson needs an even panel count
        let h = (t1 - t0) / n as f64;
        let f = |t: f64| self.u_second(nu, t).l2();
        let mut acc = f(t0) + f(t1);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(t0 + i as f64 * h);
        }
        Ok(acc * h / 3.0)
    }

    /// Scale the profile so that both hypotheses
    ///   ||U - y||_{H^sigma} <= eps nu^{1/3}  and  ||U - y||_{L1} <= eps nu^{5/4}
    /// hold, saturating whichever is binding. Returns the achieved norms.
    pub fn scale_to_theorem(
        &mut self,
        eps: f64,
        nu: f64,
        sigma: f64,
        fft: &mut Fft1,
    ) -> Result<(f64, f64)> {
        if self.couette {
            return Ok((0.0, 0.0));
        }
        let hs = self.u0.sobolev_norm(sigma);
        let l1 = self.u0.l1_phys(fft);
        if hs == 0.0 || l1 == 0.0 {
            return Err(Error::InvalidArgument(
                "cannot scale an identically zero profile".into(),
            ));
        }
        let a = (eps * nu.cbrt() / hs).min(eps * nu.powf(1.25) / l1);
        self.u0.scale(a);
        Ok((self.u0.sobolev_norm(sigma), self.u0.l1_phys(fft)))
    }

    pub fn initial(&self) -> &Spectrum1d {
        &self.u0
    }
}

/// Least-squares line fit of y against x. Returns (slope, intercept,
/// slope standard error, r^2).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidArgument(
            "line fit needs at least three matched samples".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("degenerate abscissae in fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let dof = (xs.len() - 2).max(1) as f64;
    let se = (ss_res / dof / sxx).sqrt();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((slope, intercept, se, r2))
}

/// Fit log(value) against log(nu * t): the exponent of an algebraic decay
/// law value ~ (nu t)^p over the window [t_lo, t_hi].
pub fn decay_fit(series: &[(f64, f64)], nu: f64, t_lo: f64, t_hi: f64) -> Result<(f64, f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series {
        if t >= t_lo && t <= t_hi && v > 0.0 {
            xs.push((nu * t).ln());
            ys.push(v.ln());
        }
    }
    let (slope, _b, se, r2) = fit_line(&xs, &ys)?;
    Ok((slope, se, r2))
}
