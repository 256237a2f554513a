//! Energy functionals, decay observables, bootstrap monitors, and the
//! frequency-inequality scans used to sanity-check the norm machinery.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frames::FrameFields;
use crate::solver::ops;
use crate::spectral::{SpectralField, Spectrum1d};
use crate::weights::{self, WeightParams, WeightTable};

/// L2 decay observables plus the comparison envelopes they are measured
/// against: eps nu^{1/3} over <t><nu t^3>, <t>^2<nu t^3> and <nu t^3>.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ModeNorms {
    pub vx_nonzero: f64,
    pub vy: f64,
    pub omega_nonzero: f64,
    pub omega_zero_hs: f64,
    pub env_vx: f64,
    pub env_vy: f64,
    pub env_omega: f64,
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

pub fn decay_observables(
    omega: &SpectralField,
    shear: f64,
    s: f64,
    eps: f64,
    nu: f64,
    t: f64,
) -> Result<ModeNorms> {
    let phi = ops::biot_savart(omega, shear);
    let (vx, vy) = ops::velocity(&phi, shear);
    let nz = omega.nonzero_modes();
    let scale = eps * nu.powf(1.0 / 3.0);
    let tb = bracket(t);
    let db = bracket(nu * t * t * t);
    Ok(ModeNorms {
        vx_nonzero: vx.nonzero_modes().l2(),
        vy: vy.l2(),
        omega_nonzero: nz.l2(),
        omega_zero_hs: omega.zero_mode().sobolev_norm(s),
        env_vx: scale / (tb * db),
        env_vy: scale / (tb * tb * db),
        env_omega: scale / db,
    })
}

/// The five pieces of the profile energy; `total` is their sum.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct EvComponents {
    pub g_hsigma_sq: f64,
    /// nu^{1/3} ||h||^2_{H^sigma}
    pub h_hsigma_sq_scaled: f64,
    /// nu^{1/3} ||hbar||^2_{H^sigma}
    pub hbar_hsigma_sq_scaled: f64,
    pub h_hsigma_m1_sq: f64,
    pub hbar_hsigma_m1_sq: f64,
}

impl EvComponents {
    pub fn from_frames(ff: &FrameFields, sigma: f64, nu: f64) -> EvComponents {
        let third = nu.powf(1.0 / 3.0);
        let h_sig = ff.h.sobolev_norm(sigma);
        let hb_sig = ff.hbar.sobolev_norm(sigma);
        let h_m1 = ff.h.sobolev_norm(sigma - 1.0);
        let hb_m1 = ff.hbar.sobolev_norm(sigma - 1.0);
        let g_sig = ff.g.sobolev_norm(sigma);
        EvComponents {
            g_hsigma_sq: g_sig * g_sig,
            h_hsigma_sq_scaled: third * h_sig * h_sig,
            hbar_hsigma_sq_scaled: third * hb_sig * hb_sig,
            h_hsigma_m1_sq: h_m1 * h_m1,
            hbar_hsigma_m1_sq: hb_m1 * hb_m1,
        }
    }

    pub fn total(&self) -> f64 {
        self.g_hsigma_sq
            + self.h_hsigma_sq_scaled
            + self.hbar_hsigma_sq_scaled
            + self.h_hsigma_m1_sq
            + self.hbar_hsigma_m1_sq
    }
}

/// || A^sigma f ||_2^2 over the table's grid.
pub fn a_sigma_norm_sq(f: &SpectralField, tbl: &WeightTable) -> Result<f64> {
    tbl.grid.same(&f.grid)?;
    let mut acc = 0.0;
    for (c, la) in f.c.iter().zip(tbl.log_a_sigma.iter()) {
        let n2 = c.norm_sqr();
        if n2 != 0.0 {
            acc += (2.0 * la).exp() * n2;
        }
    }
    Ok(acc)
}

/// || sqrt(-Delta_L) A^sigma f ||_2^2: the weighted norm with the extra
/// k^2 + eta_lab^2 factor.
pub fn grad_l_a_sigma_norm_sq(f: &SpectralField, tbl: &WeightTable) -> Result<f64> {
    tbl.grid.same(&f.grid)?;
    let grid = tbl.grid;
    let mut acc = 0.0;
    for ix in 0..grid.nx {
        let k = grid.k(ix);
        for iy in 0..grid.ny {
            let i = grid.idx(ix, iy);
            let n2 = f.c[i].norm_sqr();
            if n2 != 0.0 {
                let el = tbl.lab_eta(k, grid.eta(iy));
                acc += (k * k + el * el) * (2.0 * tbl.log_a_sigma[i]).exp() * n2;
            }
        }
    }
    Ok(acc)
}

/// CK_w: the weighted norm against d_t w / w. Nonnegative because the weights
/// are nondecreasing in time.
pub fn ck_term(f: &SpectralField, tbl: &WeightTable) -> Result<f64> {
    tbl.grid.same(&f.grid)?;
    let mut acc = 0.0;
    for i in 0..f.c.len() {
        let n2 = f.c[i].norm_sqr();
        if n2 != 0.0 {
            acc += tbl.dtw_over_w[i] * (2.0 * tbl.log_a_sigma[i]).exp() * n2;
        }
    }
    Ok(acc)
}

/// || A_E^s f ||_2^2 (k = 0 column excluded by construction of the table).
pub fn a_e_norm_sq(f: &SpectralField, tbl: &WeightTable) -> Result<f64> {
    tbl.grid.same(&f.grid)?;
    let mut acc = 0.0;
    for (c, ae) in f.c.iter().zip(tbl.a_e.iter()) {
        let n2 = c.norm_sqr();
        if n2 != 0.0 {
            acc += ae * ae * n2;
        }
    }
    Ok(acc)
}

/// || sqrt(-Delta_L) A_E^s f ||_2^2.
pub fn grad_l_a_e_norm_sq(f: &SpectralField, tbl: &WeightTable) -> Result<f64> {
    tbl.grid.same(&f.grid)?;
    let grid = tbl.grid;
    let mut acc = 0.0;
    for ix in 0..grid.nx {
        let k = grid.k(ix);
        for iy in 0..grid.ny {
            let i = grid.idx(ix, iy);
            let n2 = f.c[i].norm_sqr();
            if n2 != 0.0 {
                let el = tbl.lab_eta(k, grid.eta(iy));
                let ae = tbl.a_e[i];
                acc += (k * k + el * el) * ae * ae * n2;
            }
        }
    }
    Ok(acc)
}

/// The total monitored energy: half the weighted vorticity norm plus the
/// profile energy.
pub fn energy_sigma(omega: &SpectralField, tbl: &WeightTable, ev: &EvComponents) -> Result<f64> {
    Ok(0.5 * a_sigma_norm_sq(omega, tbl)? + ev.total())
}

/// Weighted norms of a zero-mode profile: A^sigma at k = 0 is
/// <eta>^sigma / w(t, eta). Returns
/// (||A^sigma p||^2, ||sqrt(dtw/w) A^sigma p||^2, ||d_Y A^sigma p||^2).
pub fn weighted_profile_norms(p: &Spectrum1d, t: f64, wp: &WeightParams) -> (f64, f64, f64) {
    let mut plain = 0.0;
    let mut ck = 0.0;
    let mut dy = 0.0;
    for iy in 0..p.ny {
        let n2 = p.c[iy].norm_sqr();
        if n2 == 0.0 {
            continue;
        }
        let eta = p.eta(iy);
        let a = weights::a_sigma(t, 0.0, eta, wp);
        let a2 = a * a * n2;
        plain += a2;
        ck += weights::weight_log_deriv(t, eta, wp) * a2;
        dy += eta * eta * a2;
    }
    (plain, ck, dy)
}

/// Sobolev norm restricted to the k != 0 modes.
pub fn sobolev_norm_nonzero(f: &SpectralField, s: f64) -> f64 {
    let grid = f.grid;
    let mut acc = 0.0;
    for ix in 0..grid.nx {
        let k = grid.k(ix);
        if k == 0.0 {
            continue;
        }
        for iy in 0..grid.ny {
            let n2 = f.c[grid.idx(ix, iy)].norm_sqr();
            if n2 != 0.0 {
                let eta = grid.eta(iy);
                acc += (1.0 + k * k + eta * eta).powf(s) * n2;
            }
        }
    }
    acc.sqrt()
}

pub const BOOTSTRAP_NAMES: [&str; 10] = [
    "main",
    "coord-g",
    "coord-hbar",
    "coord-h",
    "enhanced",
    "zero-g",
    "zero-hbar",
    "zero-omega0",
    "assist-hbar",
    "assist-h",
];

/// Instantaneous scalars feeding the bootstrap quadratures.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct BootstrapSample {
    pub t: f64,
    pub a_sigma_omega_sq: f64,
    pub lap_a_sigma_omega_sq: f64,
    pub ck_w: f64,
    pub a_e_omega_sq: f64,
    pub lap_a_e_omega_sq: f64,
    pub g_hsigma: f64,
    pub asig_hbar_sq: f64,
    pub ck_hbar_sq: f64,
    pub dy_asig_hbar_sq: f64,
    pub h_hsigma_sq: f64,
    pub dy_h_hsigma_sq: f64,
    pub g_hsm6_sq: f64,
    pub dy_g_hsm6_sq: f64,
    pub hbar_hsm6_sq: f64,
    pub dy_hbar_hsm6_sq: f64,
    pub omega0_hs_sq: f64,
    pub dy_omega0_hs_sq: f64,
    pub h_hsm1_sq: f64,
    pub dy_h_hsm1_sq: f64,
    pub hbar_hsm1: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BootstrapLineReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub eps: f64,
    pub nu: f64,
    /// False when the run skipped coordinate-frame tracking or nu = 0; the
    /// profile lines then stay at zero rather than being measurements.
    pub profiles_monitored: bool,
    pub lines: Vec<BootstrapLineReport>,
    pub max_ratio: f64,
    pub any_flagged: bool,
}

const N_INT: usize = 13;

/// Accumulates the ten bootstrap inequalities over a run. Samples before
/// t = 1 are ignored; time integrals are trapezoidal at the sample cadence.
pub struct BootstrapAccumulator {
    eps: f64,
    nu: f64,
    profiles: bool,
    prev: Option<BootstrapSample>,
    ints: [f64; N_INT],
    max_ratio: [f64; 10],
    lhs_at_max: [f64; 10],
}

impl BootstrapAccumulator {
    pub fn new(eps: f64, nu: f64, profiles: bool) -> Self {
        BootstrapAccumulator {
            eps,
            nu,
            profiles,
            prev: None,
            ints: [0.0; N_INT],
            max_ratio: [0.0; 10],
            lhs_at_max: [0.0; 10],
        }
    }

    fn integrands(nu: f64, s: &BootstrapSample) -> [f64; N_INT] {
        let t = s.t;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t2 * t2;
        [
            s.lap_a_sigma_omega_sq,
            s.ck_w,
            s.g_hsigma,
            t3 * s.ck_hbar_sq,
            t2 * s.asig_hbar_sq,
            t3 * s.dy_asig_hbar_sq,
            s.dy_h_hsigma_sq,
            s.lap_a_e_omega_sq,
            t4 * s.dy_g_hsm6_sq,
            t4 * s.dy_hbar_hsm6_sq,
            (1.0 + 0.5 * t * nu) * s.dy_omega0_hs_sq,
            s.hbar_hsm1,
            s.dy_h_hsm1_sq,
        ]
    }

    fn rhs(&self) -> [f64; 10] {
        let third = self.nu.powf(1.0 / 3.0);
        let sixth = self.nu.powf(1.0 / 6.0);
        let e = self.eps;
        let r1 = 8.0 * e * third;
        let r2 = r1 * r1;
        [
            r2,
            r1,
            8.0 * e * (e * sixth) * (e * sixth),
            8.0 * (10.0 * e * sixth) * (10.0 * e * sixth),
            r2,
            r2,
            r2,
            r2,
            r1,
            8.0 * (10.0 * e * third) * (10.0 * e * third),
        ]
    }

    fn lhs(&self, s: &BootstrapSample) -> [f64; 10] {
        let t = s.t;
        let tb = bracket(t);
        let nu = self.nu;
        let i = &self.ints;
        [
            s.a_sigma_omega_sq + nu * i[0] + i[1],
            tb * s.g_hsigma + i[2],
            t * t * t * s.asig_hbar_sq + i[3] + 0.25 * i[4] + 0.25 * nu * i[5],
            s.h_hsigma_sq + nu * i[6],
            s.a_e_omega_sq + 0.4 * nu * i[7],
            tb.powi(4) * s.g_hsm6_sq + nu * i[8],
            tb.powi(4) * s.hbar_hsm6_sq + nu * i[9],
            s.omega0_hs_sq + 0.5 * t * nu * s.dy_omega0_hs_sq + nu * i[10],
            tb * s.hbar_hsm1 + i[11],
            s.h_hsm1_sq + nu * i[12],
        ]
    }

    /// Feed one sample; returns the current per-line ratios.
    pub fn push(&mut self, s: &BootstrapSample) -> [f64; 10] {
        if self.nu <= 0.0 || s.t < 1.0 {
            return [0.0; 10];
        }
        if let Some(p) = &self.prev {
            let half = 0.5 * (s.t - p.t);
            if half > 0.0 {
                let a = Self::integrands(self.nu, p);
                let b = Self::integrands(self.nu, s);
                for j in 0..N_INT {
                    self.ints[j] += half * (a[j] + b[j]);
                }
            }
        }
        self.prev = Some(*s);
        let lhs = self.lhs(s);
        let rhs = self.rhs();
        let mut ratios = [0.0; 10];
        for j in 0..10 {
            ratios[j] = if rhs[j] > 0.0 { lhs[j] / rhs[j] } else { 0.0 };
            if ratios[j] > self.max_ratio[j] {
                self.max_ratio[j] = ratios[j];
                self.lhs_at_max[j] = lhs[j];
            }
        }
        ratios
    }

    pub fn report(&self) -> BootstrapReport {
        let rhs = self.rhs();
        let monitored = self.profiles && self.nu > 0.0;
        let mut lines = Vec::with_capacity(10);
        let mut max_ratio = 0.0_f64;
        let mut any = false;
        for j in 0..10 {
            let ratio = self.max_ratio[j];
            let flagged = ratio > 1.0;
            any |= flagged;
            max_ratio = max_ratio.max(ratio);
            lines.push(BootstrapLineReport {
                name: BOOTSTRAP_NAMES[j].to_string(),
                lhs: self.lhs_at_max[j],
                rhs: if self.nu > 0.0 { rhs[j] } else { 0.0 },
                ratio,
                flagged,
            });
        }
        BootstrapReport {
            eps: self.eps,
            nu: self.nu,
            profiles_monitored: monitored,
            lines,
            max_ratio,
            any_flagged: any,
        }
    }
}

/// Builds the bootstrap sample for one diagnostic time from the weighted
/// vorticity norms and (when available) the frame profiles.
pub fn bootstrap_sample(
    t: f64,
    omega: &SpectralField,
    tbl: &WeightTable,
    frames: Option<&FrameFields>,
    sigma: f64,
    s: f64,
    wp: &WeightParams,
) -> Result<BootstrapSample> {
    let mut out = BootstrapSample {
        t,
        a_sigma_omega_sq: a_sigma_norm_sq(omega, tbl)?,
        lap_a_sigma_omega_sq: grad_l_a_sigma_norm_sq(omega, tbl)?,
        ck_w: ck_term(omega, tbl)?,
        a_e_omega_sq: a_e_norm_sq(omega, tbl)?,
        lap_a_e_omega_sq: grad_l_a_e_norm_sq(omega, tbl)?,
        ..Default::default()
    };
    let om0 = omega.zero_mode();
    out.omega0_hs_sq = om0.sobolev_norm(s).powi(2);
    out.dy_omega0_hs_sq = om0.deriv().sobolev_norm(s).powi(2);
    if let Some(ff) = frames {
        out.g_hsigma = ff.g.sobolev_norm(sigma);
        let (hb_a, hb_ck, hb_dy) = weighted_profile_norms(&ff.hbar, t, wp);
        out.asig_hbar_sq = hb_a;
        out.ck_hbar_sq = hb_ck;
        out.dy_asig_hbar_sq = hb_dy;
        out.h_hsigma_sq = ff.h.sobolev_norm(sigma).powi(2);
        out.dy_h_hsigma_sq = ff.h.deriv().sobolev_norm(sigma).powi(2);
        out.g_hsm6_sq = ff.g.sobolev_norm(sigma - 6.0).powi(2);
        out.dy_g_hsm6_sq = ff.g.deriv().sobolev_norm(sigma - 6.0).powi(2);
        out.hbar_hsm6_sq = ff.hbar.sobolev_norm(sigma - 6.0).powi(2);
        out.dy_hbar_hsm6_sq = ff.hbar.deriv().sobolev_norm(sigma - 6.0).powi(2);
        out.h_hsm1_sq = ff.h.sobolev_norm(sigma - 1.0).powi(2);
        out.dy_h_hsm1_sq = ff.h.deriv().sobolev_norm(sigma - 1.0).powi(2);
        out.hbar_hsm1 = ff.hbar.sobolev_norm(sigma - 1.0);
    }
    Ok(out)
}

/// One diagnostic row. Frame-dependent entries are zero with
/// `frames_active = false` when coordinate tracking is off or t < t_min.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticFrame {
    pub t: f64,
    pub e_sigma: f64,
    pub a_sigma_omega_sq: f64,
    pub ev: EvComponents,
    pub ck_w: f64,
    pub a_e_norm_sq: f64,
    pub mode_norms: ModeNorms,
    pub enstrophy: f64,
    pub enstrophy_nonzero: f64,
    pub omega_hsigma: f64,
    /// Relative disagreement between the straightened-frame and
    /// shearing-frame evaluations of ||A^sigma Omega||^2.
    pub frame_skew: f64,
    pub phi_psi_gap: f64,
    pub monotone_margin: f64,
    pub frames_active: bool,
    pub ratios: [f64; 10],
    pub flagged: bool,
}

/// Frequency-inequality scan: measured constants for the elliptic decay
/// estimates and the two-sided dissipation-multiplier bound.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub t: f64,
    /// sup over k != 0 grid modes of <t>^4 / (<eta/k>^4 (k^2 + (eta-kt)^2)^2).
    pub phi_decay_pointwise: f64,
    /// ||phi||_{H^{gamma-2}} <t>^2 / ||<d_X>^{-2} Omega||_{H^gamma}, gamma = sigma-1.
    pub phi_decay_norm: f64,
    /// (||grad_L phi||_{H^{sigma-2}} + ||vx||_{H^{sigma-2}}) <t> / ||Omega||_{H^{sigma-1}},
    /// all restricted to k != 0.
    pub velocity_decay: f64,
    /// ||grad_L vx||_{H^{sigma-1}} / ||Omega||_{H^{sigma-1}}, k != 0.
    pub velocity_gradient: f64,
    /// min over the grid of D(t,eta) / (nu max(t^3, |eta|^3)); 1/24 exactly.
    pub d_ratio_min: f64,
    /// max of the same ratio; 1/3 exactly.
    pub d_ratio_max: f64,
}

pub fn multiplier_inequality_checks(
    omega: &SpectralField,
    t: f64,
    p: &WeightParams,
) -> Result<MultiplierReport> {
    let grid = omega.grid;
    let sigma = p.sigma;
    let gamma = sigma - 1.0;
    let tb2 = 1.0 + t * t;

    let mut phi_decay_pw = 0.0_f64;
    let mut d_min = f64::INFINITY;
    let mut d_max = 0.0_f64;
    for ix in 0..grid.nx {
        let k = grid.k(ix);
        for iy in 0..grid.ny {
            let eta = grid.eta(iy);
            if k != 0.0 {
                let over_k = eta / k;
                let lap = k * k + (eta - k * t) * (eta - k * t);
                let val = tb2 * tb2 / ((1.0 + over_k * over_k).powi(2) * lap * lap);
                phi_decay_pw = phi_decay_pw.max(val);
            }
            if p.nu > 0.0 {
                let m = t.powi(3).max(eta.abs().powi(3));
                if m > 0.0 {
                    let r = weights::d_dissipation(t, eta, p.nu) / (p.nu * m);
                    d_min = d_min.min(r);
                    d_max = d_max.max(r);
                }
            }
        }
    }
    if !d_min.is_finite() {
        d_min = 0.0;
    }

    // Elliptic norm constants, measured on the supplied field with the
    // straightened-frame Laplacian (shear argument t).
    let phi = ops::biot_savart(omega, t);
    let (vx, _) = ops::velocity(&phi, t);
    let mut phi_low_sq = 0.0;
    let mut omega_weighted_sq = 0.0;
    let mut grad_phi_sq = 0.0;
    let mut vx_sq = 0.0;
    let mut grad_vx_sq = 0.0;
    let mut omega_gm1_sq = 0.0;
    for ix in 0..grid.nx {
        let k = grid.k(ix);
        if k == 0.0 {
            continue;
        }
        for iy in 0..grid.ny {
            let i = grid.idx(ix, iy);
            let eta = grid.eta(iy);
            let j2 = 1.0 + k * k + eta * eta;
            let lap = k * k + (eta - k * t) * (eta - k * t);
            let p2 = phi.c[i].norm_sqr();
            let o2 = omega.c[i].norm_sqr();
            let v2 = vx.c[i].norm_sqr();
            phi_low_sq += j2.powf(gamma - 2.0) * p2;
            omega_weighted_sq += j2.powf(gamma) / (1.0 + k * k).powi(2) * o2;
            grad_phi_sq += lap * j2.powf(sigma - 2.0) * p2;
            vx_sq += j2.powf(sigma - 2.0) * v2;
            grad_vx_sq += lap * j2.powf(sigma - 1.0) * v2;
            omega_gm1_sq += j2.powf(sigma - 1.0) * o2;
        }
    }
    let om_gm1 = omega_gm1_sq.sqrt();
    let phi_decay_norm = if omega_weighted_sq > 0.0 {
        phi_low_sq.sqrt() * tb2 / omega_weighted_sq.sqrt()
    } else {
        0.0
    };
    let (velocity_decay, velocity_gradient) = if om_gm1 > 0.0 {
        (
            (grad_phi_sq.sqrt() + vx_sq.sqrt()) * tb2.sqrt() / om_gm1,
            grad_vx_sq.sqrt() / om_gm1,
        )
    } else {
        (0.0, 0.0)
    };

    Ok(MultiplierReport {
        t,
        phi_decay_pointwise: phi_decay_pw,
        phi_decay_norm,
        velocity_decay,
        velocity_gradient,
        d_ratio_min: d_min,
        d_ratio_max: d_max,
    })
}
