//! Time-dependent weights and norm multipliers.
//!
//! For each frequency eta the interval [0, 2|eta|] splits into resonant
//! windows I_m = [t_m, t_{m-1}] around the critical times eta/m, with
//! t_m = 2|eta|/(2m+1). Inside each window the weight grows by an arctan
//! profile g_m; outside [t(eta), 2|eta|] it is constant. The assembled w
//! feeds the multipliers A^sigma = <k,eta>^sigma / w and the enhanced
//! dissipation multiplier A_E^s = <k,eta>^s * D(t,eta).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Parameters shared by every weight evaluation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeightParams {
    pub nu: f64,
    /// Growth exponent in (0,1) for the per-window rate; 1/2 by default.
    pub beta: f64,
    /// Main regularity index.
    pub sigma: f64,
    /// Enhanced-dissipation regularity index, strictly below sigma.
    pub s: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams {
            nu: 1e-3,
            beta: 0.5,
            sigma: 6.0,
            s: 4.0,
        }
    }
}

impl WeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weight params need nu > 0, got {}",
                self.nu
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in (0,1), got {}",
                self.beta
            )));
        }
        if !(self.sigma > self.s) || !(self.s >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need sigma > s >= 0, got sigma={} s={}",
                self.sigma, self.s
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn nu_third(&self) -> f64 {
        self.nu.cbrt()
    }
}

/// Number of resonant windows for frequency eta: the largest m >= 1 with
/// (2m+1)m <= |eta|, and 0 when |eta| < 3.
pub fn resonance_count(eta: f64) -> u64 {
    let a = eta.abs();
    if a < 3.0 {
        return 0;
    }
    // solve 2m^2 + m - a = 0 and fix up float slack
    let mut m = ((-1.0 + (1.0 + 8.0 * a).sqrt()) / 4.0).floor() as u64;
    while (2 * (m + 1) + 1) * (m + 1) <= a as u64 {
        m += 1;
    }
    while m > 0 && ((2 * m + 1) * m) as f64 > a {
        m -= 1;
    }
    m
}

/// Left endpoint of window m: t_m = 2|eta|/(2m+1). m = 0 gives 2|eta|.
#[inline]
pub fn resonant_time(m: u64, eta: f64) -> f64 {
    2.0 * eta.abs() / (2 * m + 1) as f64
}

/// Start of weight growth, t(eta) = 2|eta|/(2E+1) with E = resonance_count.
pub fn growth_start(eta: f64) -> f64 {
    let m = resonance_count(eta);
    if m == 0 {
        f64::INFINITY
    } else {
        resonant_time(m, eta)
    }
}

/// Distance from the critical time eta/m to the left end of window m.
#[inline]
fn d_minus(m: u64, eta: f64) -> f64 {
    eta.abs() / ((2 * m + 1) * m) as f64
}

/// Distance from the critical time eta/m to the right end of window m.
#[inline]
fn d_plus(m: u64, eta: f64) -> f64 {
    eta.abs() / ((2 * m - 1) * m) as f64
}

/// Growth rate coefficient of window m.
fn growth_coef(m: u64, eta: f64, p: &WeightParams) -> f64 {
    let a = eta.abs();
    let tm = resonant_time(m, a);
    let nu3 = p.nu_third();
    (nu3 * tm).powf(-(1.0 + p.beta)) * nu3 * a / (m * m) as f64
}

/// Window profile g_m at offset tau from the critical time eta/m:
/// the solution of dg/dtau = c_m g / (1 + tau^2) with g(-D^-_m) = 1, i.e.
/// g_m(tau) = exp(c_m (atan(tau) + atan(D^-_m))).
///
/// Frequencies are treated through |m|, |eta| (the construction is even);
/// m and eta must carry the same sign.
pub fn g_factor(m: i64, eta: f64, tau: f64, p: &WeightParams) -> Result<f64> {
    if m == 0 || (m as f64) * eta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "window index and frequency must share a sign, got m={m} eta={eta}"
        )));
    }
    let mu = m.unsigned_abs();
    let a = eta.abs();
    if ((2 * mu + 1) * mu) as f64 > a {
        return Err(Error::InvalidArgument(format!(
            "window m={m} does not exist for eta={eta}"
        )));
    }
    let c = growth_coef(mu, a, p);
    Ok((c * (tau.atan() + d_minus(mu, a).atan())).exp())
}

/// The weight w(t, eta) for t >= 0. Even in eta; w = 1 for |eta| < 3, below
/// the growth start, and identically when there are no windows; constant for
/// t >= 2|eta|.
pub fn weight(t: f64, eta: f64, p: &WeightParams) -> f64 {
    let a = eta.abs();
    let mmax = resonance_count(a);
    if mmax == 0 || t <= resonant_time(mmax, a) {
        return 1.0;
    }
    let mut acc = 1.0;
    for m in (1..=mmax).rev() {
        let right = resonant_time(m - 1, a);
        let center = a / m as f64;
        if t < right {
            let c = growth_coef(m, a, p);
            return acc * (c * ((t - center).atan() + d_minus(m, a).atan())).exp();
        }
        // multiply in the full window and move right
        let c = growth_coef(m, a, p);
        acc *= (c * (d_plus(m, a).atan() + d_minus(m, a).atan())).exp();
    }
    acc
}

/// Logarithmic time derivative (d/dt w)/w: c_m / (1 + (t - eta/m)^2) inside
/// window m, zero outside [t(eta), 2|eta|]. At the window joins the
/// right-hand limit is returned.
pub fn weight_log_deriv(t: f64, eta: f64, p: &WeightParams) -> f64 {
    let a = eta.abs();
    let mmax = resonance_count(a);
    if mmax == 0 || t < resonant_time(mmax, a) || t >= 2.0 * a {
        return 0.0;
    }
    for m in (1..=mmax).rev() {
        if t < resonant_time(m - 1, a) {
            let tau = t - a / m as f64;
            return growth_coef(m, a, p) / (1.0 + tau * tau);
        }
    }
    0.0
}

/// Smooth ramp used by the frequency map: 0 for x <= 1/20, 1 for x >= 1/10,
/// quintic smoothstep in between.
pub fn rho_ramp(x: f64) -> f64 {
    if x <= 0.05 {
        0.0
    } else if x >= 0.1 {
        1.0
    } else {
        let u = (x - 0.05) * 20.0;
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// Integral of the ramp from 0 to v, in closed form.
fn rho_ramp_integral(v: f64) -> f64 {
    const W: f64 = 0.05; // ramp width
    if v <= 0.05 {
        0.0
    } else if v >= 0.1 {
        // integral of the quintic smoothstep over [0,1] is 1/2
        0.5 * W + (v - 0.1)
    } else {
        let u = (v - 0.05) * 20.0;
        // antiderivative of 6u^5 - 15u^4 + 10u^3
        W * (u.powi(4) * (u * u - 3.0 * u + 2.5))
    }
}

/// Frequency map feeding the weight: varrho(0, eta) = eta and for k != 0
/// varrho(k, eta) = k (1/20 + int_0^{eta/k} rho). Odd under joint sign flip,
/// so |varrho| is well defined on Hermitian pairs.
pub fn varrho(k: f64, eta: f64) -> f64 {
    if k == 0.0 {
        eta
    } else {
        k * (0.05 + rho_ramp_integral(eta / k))
    }
}

/// Weight evaluated at the mapped frequency, w_k(t, eta) = w(t, varrho(k,eta)).
pub fn weight_at_mode(t: f64, k: f64, eta: f64, p: &WeightParams) -> f64 {
    weight(t, varrho(k, eta), p)
}

/// log A^sigma_k(t, eta) = sigma log<k,eta> - log w_k(t,eta). The log form is
/// the primitive so large sigma stays representable.
pub fn log_a_sigma(t: f64, k: f64, eta: f64, p: &WeightParams) -> f64 {
    0.5 * p.sigma * (1.0 + k * k + eta * eta).ln() - weight_at_mode(t, k, eta, p).ln()
}

pub fn a_sigma(t: f64, k: f64, eta: f64, p: &WeightParams) -> f64 {
    log_a_sigma(t, k, eta, p).exp()
}

/// Enhanced-dissipation damping factor
/// D(t, eta) = nu |eta|^3 / 3 + nu (t^3 - 8|eta|^3)_+ / 24.
/// For t >= 2|eta| this equals nu t^3 / 24 exactly.
pub fn d_dissipation(t: f64, eta: f64, nu: f64) -> f64 {
    let a3 = eta.abs().powi(3);
    let t3 = t * t * t;
    if t3 >= 8.0 * a3 {
        // same value as the generic branch, written to keep it exact
        nu * t3 / 24.0
    } else {
        nu * a3 / 3.0
    }
}

/// A_E^s(t, k, eta) = <k,eta>^s D(t, eta), defined for k != 0 only.
pub fn a_e(t: f64, k: f64, eta: f64, p: &WeightParams) -> Result<f64> {
    if k == 0.0 {
        return Err(Error::InvalidArgument(
            "A_E is defined on nonzero x-modes only".into(),
        ));
    }
    Ok((1.0 + k * k + eta * eta).powf(0.5 * p.s) * d_dissipation(t, eta, p.nu))
}

/// Per-mode weight data precomputed for one diagnostic instant.
///
/// `frame_lag` shifts the stored y-frequency to the moving-frame frequency
/// eta + k*lag, which is where the remapped solver state actually lives.
pub struct WeightTable {
    pub grid: Grid,
    pub t: f64,
    /// Frame offset used to shift stored wavenumbers: the table is evaluated
    /// at eta + k * frame_lag. Zero for fields already in the straightened
    /// frame; t - s for shearing-frame storage.
    pub frame_lag: f64,
    pub log_a_sigma: Vec<f64>,
    pub w: Vec<f64>,
    pub dtw_over_w: Vec<f64>,
    /// A_E^s, zero on the k = 0 column.
    pub a_e: Vec<f64>,
}

impl WeightTable {
    pub fn build(grid: Grid, t: f64, frame_lag: f64, p: &WeightParams) -> Result<Self> {
        p.validate()?;
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("need t >= 0, got {t}")));
        }
        let mut log_a = vec![0.0; grid.len()];
        let mut w = vec![1.0; grid.len()];
        let mut dtw = vec![0.0; grid.len()];
        let mut ae = vec![0.0; grid.len()];
        for ix in 0..grid.nx {
            let k = grid.k(ix);
            for iy in 0..grid.ny {
                let eta = grid.eta(iy) + k * frame_lag;
                let idx = grid.idx(ix, iy);
                let r = varrho(k, eta);
                let wv = weight(t, r, p);
                w[idx] = wv;
                dtw[idx] = weight_log_deriv(t, r, p);
                log_a[idx] = 0.5 * p.sigma * (1.0 + k * k + eta * eta).ln() - wv.ln();
                if k != 0.0 {
                    ae[idx] =
                        (1.0 + k * k + eta * eta).powf(0.5 * p.s) * d_dissipation(t, eta, p.nu);
                }
            }
        }
        Ok(WeightTable {
            grid,
            t,
            frame_lag,
            log_a_sigma: log_a,
            w,
            dtw_over_w: dtw,
            a_e: ae,
        })
    }

    /// Frequency seen by the flat Laplacian: the straightened-frame eta of a
    /// stored mode minus k t.
    pub fn lab_eta(&self, k: f64, eta: f64) -> f64 {
        eta + k * (self.frame_lag - self.t)
    }
}
